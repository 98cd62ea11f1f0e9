#pragma once

#include <iosfwd>
#include <vector>

#include "sgamma/common.hpp"

namespace sgamma {

/// Parameters of the leaky-bucket cascade. Bucket k leaks at transfer rate
/// alpha_k = l_k^rate_exponent with l_k linearly spaced over
/// [rate_base_start, rate_base_end], which makes the summed impulse response
/// decay along a power-law-like curve.
struct KernelConfig {
	int buckets = 10;
	double rate_exponent = 0.15;
	double rate_base_start = 0.1;
	double rate_base_end = 0.9;
	double dt_ms = 1.0;  // wall-clock milliseconds per simulation step

	void validate() const;
};

/// alpha_k per bucket; throws std::invalid_argument on a bad config.
std::vector<double> transfer_rates(const KernelConfig &cfg);

/// Rescales transfer rates for a timestep change, ratio = dt_new / dt_old.
/// Exponent scaling (alpha^ratio) keeps the decay per wall-clock millisecond
/// unchanged; composing two rescales equals rescaling by the product.
std::vector<double> rescaled_rates(std::vector<double> alphas, double ratio);

/// Same rescaling expressed on the config: rate_exponent and dt_ms both
/// scale by ratio, so transfer_rates(rescaled(cfg, r)) ==
/// rescaled_rates(transfer_rates(cfg), r).
KernelConfig rescaled(KernelConfig cfg, double ratio);

/// One unit's cascade state. step() implements the recursion: bucket 0 keeps
/// alpha_0 of itself plus the injected magnitude, bucket k>0 keeps alpha_k of
/// itself plus (1-alpha_k) of bucket k-1's previous value. All buckets read
/// previous-step values (simultaneous update).
struct BucketBank {
	std::vector<double> values;
	std::vector<double> alphas;

	explicit BucketBank(std::vector<double> rates)
	    : values(rates.size(), 0.0), alphas(std::move(rates))
	{
	}

	void step(double injected)
	{
		// descending k: values[k-1] still holds the previous step
		for (int k = static_cast<int>(values.size()) - 1; k > 0; --k) {
			values[k] = values[k] * alphas[k] + values[k - 1] * (1.0 - alphas[k]);
		}
		values[0] = values[0] * alphas[0] + injected;
	}

	double sum() const
	{
		double s = 0.0;
		for (double v : values) s += v;
		return s;
	}

	void reset() { std::fill(values.begin(), values.end(), 0.0); }
};

struct TimedSpike {
	int time = 0;
	double magnitude = 0.0;
};

/// Tabulated impulse responses kappa^k(tau) for tau in [0, horizon).
class KernelTable {
public:
	KernelTable(int buckets, int horizon)
	    : buckets_(buckets), horizon_(horizon),
	      k_(static_cast<size_t>(buckets) * horizon, 0.0)
	{
	}

	double at(int bucket, int tau) const
	{
		return k_[static_cast<size_t>(bucket) * horizon_ + tau];
	}
	double &at(int bucket, int tau)
	{
		return k_[static_cast<size_t>(bucket) * horizon_ + tau];
	}
	int buckets() const { return buckets_; }
	int horizon() const { return horizon_; }

private:
	int buckets_;
	int horizon_;
	std::vector<double> k_;
};

/// Unit impulse at tau = 0 through a zero bank, recorded for horizon steps.
KernelTable impulse_response(const std::vector<double> &alphas, int horizon);

/// Closed-form view of the recursion: per-bucket response at time t is the
/// sum over spikes of magnitude * kappa^k(t - spike time). Spikes at time t
/// itself count with lag 0. Throws std::out_of_range when any lag reaches the
/// table horizon; callers must extend the horizon rather than truncate.
std::vector<double> superpose(const KernelTable &table,
                              const std::vector<TimedSpike> &spikes, int t);

/// CSV dump with columns (k, tau, kappa) for external plotting.
void write_kernel_csv(const KernelTable &table, std::ostream &os);

}  // namespace sgamma
