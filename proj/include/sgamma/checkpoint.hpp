#pragma once

#include <optional>
#include <string>

#include "sgamma/config.hpp"
#include "sgamma/learning.hpp"
#include "sgamma/network.hpp"

namespace sgamma {

/// Checkpoint payload. Parameter tensors round-trip bit-exactly (doubles are
/// stored as little-endian IEEE-754 bit patterns); a version mismatch on
/// load is a hard error.
struct Checkpoint {
	RunConfig config;
	int n_inputs = 0;
	int n_outputs = 0;
	int epoch = 0;
	std::string rng_state;
	Network net;
	bool has_optimizer = false;
	int64_t optimizer_steps = 0;
	GradientBuffers moment1, moment2;
};

constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint &ck, const std::string &path);
Checkpoint load_checkpoint(const std::string &path);

}  // namespace sgamma
