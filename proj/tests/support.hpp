// shared helpers for the test binaries
#pragma once

#include <vector>

#include "sgamma/config.hpp"
#include "sgamma/learning.hpp"
#include "sgamma/network.hpp"

namespace sgtest {

using namespace sgamma;

struct RandomNetOptions {
	int max_width = 32;
	int max_buckets = 10;
	bool allow_dropout = false;
};

/// Random small dense network (2-3 layers) cycling through bucket-weight
/// layouts and normalization kinds, with initialized parameters.
inline Network random_net(Rng &rng, int index, int inputs, int outputs,
                          const RandomNetOptions &opts = {})
{
	ModelConfig model;
	const int hidden_layers = 1 + rng.below(2);
	for (int l = 0; l < hidden_layers; ++l) {
		model.hidden.push_back(2 + rng.below(opts.max_width - 1));
	}
	model.buckets = 1 + rng.below(opts.max_buckets);
	model.bucket_weights = (index % 2 == 0) ? "neuron" : "synapse";
	switch (index % 4) {
	case 0: model.norm = "none"; break;
	case 1: model.norm = "layer"; break;
	case 2: model.norm = "rms"; break;
	default:
		model.norm = "layer";
		model.norm_output = true;
		break;
	}
	model.dropout = (opts.allow_dropout && index % 5 == 4) ? 0.2 : 0.0;
	Network net = build_network(model, inputs, outputs);
	init_parameters(net, rng);
	return net;
}

inline Mat random_frames(Rng &rng, int steps, int channels, double density = 0.3)
{
	Mat frames(steps, channels);
	for (double &v : frames.a) {
		v = rng.bernoulli(density) ? static_cast<double>(1 + rng.below(2)) : 0.0;
	}
	return frames;
}

}  // namespace sgtest
