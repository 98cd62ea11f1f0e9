#pragma once

#include <vector>

#include "sgamma/learning.hpp"

namespace sgamma {

/// Fast-sigmoid stand-in for the spike derivative used by the BPTT
/// reference: d(spike)/d(mismatch) ~ 1/(1 + slope*|mismatch - threshold|)^2.
/// A non-positive slope disables the spike-gradient path entirely (useful as
/// a negative control).
struct SurrogateConfig {
	double slope = 10.0;
};

double surrogate_derivative(double u, const SurrogateConfig &cfg);

struct DelayBpttOptions {
	int epochs = 1500;
	OptimizerConfig optimizer;
	bool record_history = true;
};

struct DelayBpttResult {
	std::vector<double> v_hidden;  // trained bucket weights, hidden neuron
	std::vector<double> v_output;
	std::vector<double> loss_history;                // per epoch
	std::vector<std::vector<double>> v_history;      // [v_hidden | v_output]
	std::vector<double> final_yhat_out;              // estimate trace after training
};

/// Trains the two-layer single-neuron delay network with full
/// backpropagation through time: gradients cross the spike nonlinearity via
/// the surrogate and flow back through the bucket recursion and the adaptive
/// threshold across all timesteps. Only bucket weights are updated. Serves
/// as the unrolled-gradient reference next to the per-timestep rule; rejects
/// any topology other than 1-1-1 per-neuron layers without norm or dropout.
DelayBpttResult train_delay_bptt(Network net, const LabeledSample &sample,
                                 const SurrogateConfig &surrogate,
                                 const DelayBpttOptions &opts);

}  // namespace sgamma
