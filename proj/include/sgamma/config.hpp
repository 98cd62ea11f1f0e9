#pragma once

#include <string>
#include <vector>

#include "sgamma/learning.hpp"
#include "sgamma/network.hpp"

namespace sgamma {

struct ModelConfig {
	std::vector<int> hidden;  // hidden layer widths, input to output
	int buckets = 10;
	double rate_exponent = 0.15;
	double rate_base_start = 0.1;
	double rate_base_end = 0.9;
	double min_threshold = 0.2;
	double adapt_scale = 0.2;  // negative means "use min_threshold"
	std::string norm = "layer";
	bool norm_output = false;
	double norm_eps = 1e-5;
	double dropout = 0.0;
	std::string bucket_weights = "neuron";  // or "synapse"
	double input_scale = 1.0;
	bool train_weights = true;
	bool train_bias = true;
	bool train_bucket_weights = true;
	/// start from unit synaptic weights and zero bias instead of random init
	/// (the timing tasks train bucket weights against fixed wiring)
	bool unit_weights = false;
	/// "normal" or "half-normal"; the timing demos start from non-negative
	/// bucket weights so the spike path is active from the first epoch
	std::string bucket_init = "normal";
};

struct TaskConfigSection {
	std::string kind;  // "delay" | "coincidence" | "events"
	// delay
	int horizon = 300;
	int delay = 150;
	// coincidence
	int target_time = 200;
	double jitter = 2.0;
	int coincidence_horizon = 280;
	int resolution = 1;
	int train_per_class = 128;
	int test_per_class = 100;
	// events
	std::string manifest;
	std::string test_manifest;
	int frames = 250;
	int channel_downsample = 1;
	double dt_ms = 1.0;  // step size metadata for the synthetic tasks
};

struct TrainingConfig {
	std::string loss = "ce";  // "ce" | "mse" | "ce-warmup"
	double warmup_scale = 1.0;
	double warmup_decay = 0.99;
	double gain_loss = 0.0;
	std::string optimizer = "adam";  // or "sgd"
	double lr = 1e-3;
	double layer_factor = 0.0;  // 0 -> bucket count
	int schedule_step = 0;
	double schedule_gamma = 0.1;
	int epochs = 25;
	int batch_size = 32;
	uint64_t seed = 1;
	std::string method = "analytic";  // or "bptt-sg" (delay task only)
	double surrogate_slope = 10.0;
};

struct RunConfig {
	ModelConfig model;
	TaskConfigSection task;
	TrainingConfig training;

	std::string to_json_text() const;
	static RunConfig from_json_text(const std::string &text);
	static RunConfig load(const std::string &path);
	void save(const std::string &path) const;
	void validate() const;
	uint64_t hash() const;
};

LossConfig loss_config(const TrainingConfig &cfg);
OptimizerConfig optimizer_config(const TrainingConfig &cfg);

/// Builds the dense network described by the model section for the given
/// input/output widths. The output layer never gets dropout; normalization
/// on it is opt-in via norm_output.
Network build_network(const ModelConfig &cfg, int inputs, int outputs);

/// Kernel parameters after applying task-level semantics: running the
/// coincidence task at resolution r divides the rate exponent by r so decay
/// per wall-clock unit is preserved.
KernelConfig effective_kernel(const RunConfig &cfg);

/// build_network plus the task-level kernel adjustment; use this whenever a
/// network is constructed for a whole run (training, checkpoint load).
Network build_run_network(const RunConfig &cfg, int inputs, int outputs);

}  // namespace sgamma
