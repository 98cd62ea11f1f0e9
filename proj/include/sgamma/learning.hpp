#pragma once

#include <vector>

#include "sgamma/network.hpp"
#include "sgamma/tasks.hpp"

namespace sgamma {

enum class LossKind { ce_per_step, mse_on_yhat, ce_warmup };

struct LossConfig {
	LossKind kind = LossKind::ce_per_step;
	double warmup_scale = 1.0;   // initial MSE-to-zero weight of ce_warmup
	double warmup_decay = 0.99;  // its per-step decay
	double gain_loss = 0.0;      // constant applied to every norm gain
};

struct StepLoss {
	double value = 0.0;
	std::vector<double> d_y_out;
};

/// Per-timestep loss and its derivative with respect to the output signal.
/// ce_per_step: cross-entropy of softmax(y_out) against the label.
/// mse_on_yhat: mean squared error between the output estimate and the
///   target trace row; the derivative is routed through the estimate with
///   d(estimate)/d(signal) = 1.
/// ce_warmup: w(t)*MSE(estimate, 0) + (1-w(t))*CE with w(t) decaying
///   geometrically from warmup_scale.
StepLoss loss_step(const LossConfig &cfg, const std::vector<double> &y_out,
                   const std::vector<double> &yhat_out, int label,
                   const double *target_row, int t);

struct LayerGrads {
	Mat d_weights;
	std::vector<double> d_bias;
	Mat d_v_neuron;
	Ten3 d_v_synapse;
	std::vector<double> d_gain;
	std::vector<double> d_shift;

	void zero();
	void add(const LayerGrads &other);
	void scale(double s);
};

struct GradientBuffers {
	std::vector<LayerGrads> layers;

	static GradientBuffers like(const Network &net);
	void zero();
	void add(const GradientBuffers &other);
	void scale(double s);
};

/// Accumulates this timestep's parameter gradients from the cached forward
/// intermediates, walking output to input. Only the current step's caches
/// are read (no state from other timesteps); the error reaches the upstream
/// layer through the synaptic weights with d(estimate)/d(signal) = 1, so no
/// gradient ever crosses the spike nonlinearity. Caches are consumed.
void backward_step(const Network &net, NetworkState &state,
                   const std::vector<double> &d_y_out, double gain_loss,
                   GradientBuffers &grads);

struct FdOptions {
	double eps = 1e-5;
	int params_per_tensor = 6;
	double corrupt = 0.0;  // negative-control hook: shifts analytic grads
	uint64_t seed = 0x5eed;
	bool train_mode = false;
};

struct FdReport {
	double max_rel_err = 0.0;
	double max_abs_err_zero = 0.0;  // where both sides vanish
	int checked = 0;
	int kink_skipped = 0;

	bool pass(double tol = 1e-6) const
	{
		return checked > 0 && max_rel_err <= tol && max_abs_err_zero <= 1e-9;
	}
};

/// Central-difference check of the analytic per-timestep gradient against
/// the frozen-trace surrogate loss: upstream bucket traces, spike decisions
/// and dropout masks are recorded once and held constant; each layer's
/// recomputed signal shifts its (frozen) estimate one-for-one. Parameters
/// whose perturbation flips a ReLU sign are reported separately and excluded
/// from the tolerance.
FdReport frozen_trace_fd_check(Network net, const LabeledSample &sample,
                               const LossConfig &loss, const FdOptions &opts);

enum class OptKind { sgd, adam };

struct OptimizerConfig {
	OptKind kind = OptKind::adam;
	double base_lr = 1e-3;
	/// per-layer learning-rate factor, applied once per layer moving from the
	/// output toward the input; 0 means "use the bucket count"
	double layer_factor = 0.0;
	int schedule_step = 0;  // epochs between decays; 0 disables the schedule
	double schedule_gamma = 0.1;
	double adam_beta1 = 0.9;
	double adam_beta2 = 0.999;
	double adam_eps = 1e-8;
};

class Optimizer {
public:
	Optimizer(const Network &net, OptimizerConfig cfg);

	void apply(Network &net, const GradientBuffers &grads, int epoch);

	double layer_lr(int layer_index, int n_layers, int epoch) const;
	double schedule_multiplier(int epoch) const;
	const OptimizerConfig &config() const { return cfg_; }

	// checkpoint plumbing
	int64_t steps() const { return steps_; }
	const GradientBuffers &moment1() const { return m_; }
	const GradientBuffers &moment2() const { return v_; }
	void restore(int64_t steps, GradientBuffers m, GradientBuffers v);

private:
	OptimizerConfig cfg_;
	double resolved_factor_;
	int64_t steps_ = 0;
	GradientBuffers m_, v_;
};

/// Synaptic weights and biases from U(-sqrt(1/fan_in), sqrt(1/fan_in)),
/// bucket weights from N(0, 0.1) (std 0.1), norm gain 1 and shift 0.
void init_parameters(Network &net, Rng &rng);

}  // namespace sgamma
