#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgamma/checkpoint.hpp"
#include "sgamma/config.hpp"
#include "sgamma/learning.hpp"
#include "sgamma/tasks.hpp"

namespace sgamma {

/// Materialized train/test samples plus the decode convention of the task.
struct TaskData {
	std::vector<LabeledSample> train;
	std::vector<LabeledSample> test;
	int n_inputs = 0;
	int n_outputs = 0;
	bool timing_task = false;  // TTFS decode and spike-timing error reporting
	int target_time = -1;      // step of the desired output spike, if any
};

TaskData build_task_data(const RunConfig &cfg);

struct EpochMetrics {
	int epoch = 0;
	double train_loss = 0.0;
	double train_acc = 0.0;
	double test_acc = 0.0;
	double spike_density = 0.0;
	double lr = 0.0;
};

struct TrainOptions {
	std::string out_dir;
	int workers = 1;
	std::optional<uint64_t> seed_override;
};

struct TrainResult {
	std::vector<EpochMetrics> epochs;
	std::string checkpoint_path;
	std::string metrics_path;
	double final_test_acc = 0.0;
};

/// Runs the configured training end to end: per-epoch metrics CSV (each row
/// flushed as written), a checkpoint per epoch, and a JSON run summary. The
/// same (config, seed, worker partition) always reproduces the same bytes.
TrainResult run_training(const RunConfig &cfg, const TrainOptions &opts);

struct EvalResult {
	int n_samples = 0;
	double accuracy = 0.0;
	double spike_density = 0.0;
	std::string density_scope;  // "hidden" or "output"
	// timing tasks only
	double mean_timing_error = -1.0;
	int n_timed = 0;
	int n_silent = 0;

	std::string to_json_text(uint64_t config_hash, uint64_t seed) const;
};

EvalResult evaluate(const Network &net, const TaskData &data,
                    const std::vector<LabeledSample> &samples,
                    Transport transport, int workers);

EvalResult run_eval(const std::string &checkpoint_path,
                    const std::string &test_manifest_override, int workers);

/// Per-neuron signal dump (t, y, yhat, z, theta, spike) plus a kernel table
/// CSV, for external plotting.
void run_trace(const std::string &checkpoint_path, int sample_index, int layer,
               const std::vector<int> &neurons, const std::string &out_dir);

struct GradcheckOptions {
	int nets = 20;
	uint64_t seed = 2024;
	double eps = 1e-5;
	double corrupt = 0.0;
	std::optional<RunConfig> config;  // check this exact model instead
	std::function<void(const std::string &)> log;
};

struct GradcheckResult {
	double max_rel_err = 0.0;
	double max_abs_err_zero = 0.0;
	int checked = 0;
	int kink_skipped = 0;
	bool pass = false;
};

/// Random small networks (both bucket-weight layouts, with and without
/// normalization, all loss kinds) against the frozen-trace finite-difference
/// oracle at 1e-6 relative tolerance.
GradcheckResult run_gradcheck(const GradcheckOptions &opts);

/// Deterministic parallel map over [0, n): worker w handles indices
/// congruent to w so results never depend on scheduling.
void parallel_for(int n, int workers, const std::function<void(int)> &fn);

}  // namespace sgamma
