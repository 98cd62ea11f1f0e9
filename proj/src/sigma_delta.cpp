#include "sgamma/sigma_delta.hpp"

#include <cmath>
#include <stdexcept>

namespace sgamma {

void ThresholdConfig::validate() const
{
	if (!(min_threshold > 0.0)) {
		throw std::invalid_argument(
		    "ThresholdConfig: min_threshold must be positive");
	}
	if (!(adapt_scale >= 0.0)) {
		throw std::invalid_argument(
		    "ThresholdConfig: adapt_scale must be non-negative");
	}
}

double adaptive_threshold(double yhat_prev, const ThresholdConfig &cfg)
{
	return cfg.min_threshold + yhat_prev * cfg.adapt_scale;
}

bool encode_step(double y, SigmaDeltaState &state, const ThresholdConfig &cfg)
{
	const double theta = adaptive_threshold(state.yhat_prev, cfg);
	const double z = y - state.yhat_prev;
	const bool spike = z > theta;  // strict: ties do not spike
	double injected = 0.0;
	if (spike) {
		injected = 2.0 * theta;
		state.last_magnitude = injected;
	}
	state.last_spike = spike;
	state.buckets.step(injected);
	state.yhat_prev = state.buckets.sum();
	return spike;
}

std::vector<double> reconstruct_at_receiver(const std::vector<TimedSpike> &spikes,
                                            const std::vector<double> &alphas,
                                            int t)
{
	BucketBank bank(alphas);
	for (int step = 0; step <= t; ++step) {
		double injected = 0.0;
		for (const TimedSpike &s : spikes) {
			if (s.time == step) injected += s.magnitude;
		}
		bank.step(injected);
	}
	return bank.values;
}

}  // namespace sgamma
