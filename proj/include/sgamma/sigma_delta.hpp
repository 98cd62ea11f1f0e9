#pragma once

#include <vector>

#include "sgamma/kernel.hpp"

namespace sgamma {

/// Spike-threshold parameters. The effective threshold grows with the
/// running signal estimate, theta(t) = min_threshold + yhat(t-1)*adapt_scale,
/// so large signals stay trackable.
struct ThresholdConfig {
	double min_threshold = 0.2;  // theta_0
	double adapt_scale = 0.2;    // m_f, conventionally set equal to theta_0

	void validate() const;
};

double adaptive_threshold(double yhat_prev, const ThresholdConfig &cfg);

/// Per-neuron sigma-delta encoder state: the neuron's own bucket cascade plus
/// the cached estimate sum from the previous step.
struct SigmaDeltaState {
	BucketBank buckets;
	double yhat_prev = 0.0;
	bool last_spike = false;
	double last_magnitude = 0.0;  // 2*theta at the most recent emission

	explicit SigmaDeltaState(std::vector<double> alphas)
	    : buckets(std::move(alphas))
	{
	}

	void reset()
	{
		buckets.reset();
		yhat_prev = 0.0;
		last_spike = false;
		last_magnitude = 0.0;
	}
};

/// One encoder step: threshold from the previous estimate, spike iff the
/// mismatch z = y - yhat exceeds it strictly, inject 2*theta on spike, then
/// advance the buckets. Returns whether a spike was emitted; the carried
/// magnitude is in state.last_magnitude.
bool encode_step(double y, SigmaDeltaState &state, const ThresholdConfig &cfg);

/// Receiver-side reconstruction from (time, magnitude) spike pairs via the
/// bucket recursion; identical to the sender's trajectory by construction.
/// For the tabulated path use superpose() with the same pairs.
std::vector<double> reconstruct_at_receiver(const std::vector<TimedSpike> &spikes,
                                            const std::vector<double> &alphas,
                                            int t);

}  // namespace sgamma
