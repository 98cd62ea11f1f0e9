#include "sgamma/kernel.hpp"

#include <cmath>
#include <ostream>

namespace sgamma {

void KernelConfig::validate() const
{
	if (buckets < 1) {
		throw std::invalid_argument("KernelConfig: buckets must be >= 1");
	}
	if (!(rate_base_start > 0.0 && rate_base_start < 1.0) ||
	    !(rate_base_end > 0.0 && rate_base_end < 1.0)) {
		throw std::invalid_argument(
		    "KernelConfig: rate base endpoints must lie in (0,1)");
	}
	if (rate_base_start > rate_base_end) {
		throw std::invalid_argument(
		    "KernelConfig: rate_base_start must not exceed rate_base_end");
	}
	if (!(rate_exponent >= 0.0 && rate_exponent <= 1.0)) {
		throw std::invalid_argument(
		    "KernelConfig: rate_exponent must lie in [0,1]");
	}
	if (!(dt_ms > 0.0)) {
		throw std::invalid_argument("KernelConfig: dt_ms must be positive");
	}
}

std::vector<double> transfer_rates(const KernelConfig &cfg)
{
	cfg.validate();
	std::vector<double> alphas(cfg.buckets);
	for (int k = 0; k < cfg.buckets; ++k) {
		// linspace inclusive of both endpoints; a single bucket sits at the start
		const double l =
		    cfg.buckets == 1
		        ? cfg.rate_base_start
		        : cfg.rate_base_start + (cfg.rate_base_end - cfg.rate_base_start) *
		                                    static_cast<double>(k) /
		                                    (cfg.buckets - 1);
		alphas[k] = std::pow(l, cfg.rate_exponent);
	}
	return alphas;
}

std::vector<double> rescaled_rates(std::vector<double> alphas, double ratio)
{
	if (!(ratio > 0.0)) {
		throw std::invalid_argument("rescaled_rates: ratio must be positive");
	}
	for (double &a : alphas) a = std::pow(a, ratio);
	return alphas;
}

KernelConfig rescaled(KernelConfig cfg, double ratio)
{
	if (!(ratio > 0.0)) {
		throw std::invalid_argument("rescaled: ratio must be positive");
	}
	cfg.rate_exponent *= ratio;
	cfg.dt_ms *= ratio;
	return cfg;
}

KernelTable impulse_response(const std::vector<double> &alphas, int horizon)
{
	if (horizon < 1) {
		throw std::invalid_argument("impulse_response: horizon must be >= 1");
	}
	const int buckets = static_cast<int>(alphas.size());
	KernelTable table(buckets, horizon);
	BucketBank bank(alphas);
	for (int tau = 0; tau < horizon; ++tau) {
		bank.step(tau == 0 ? 1.0 : 0.0);
		for (int k = 0; k < buckets; ++k) {
			table.at(k, tau) = bank.values[k];
		}
	}
	return table;
}

std::vector<double> superpose(const KernelTable &table,
                              const std::vector<TimedSpike> &spikes, int t)
{
	std::vector<double> out(table.buckets(), 0.0);
	for (const TimedSpike &s : spikes) {
		if (s.time > t) {
			throw std::invalid_argument("superpose: spike lies after query time");
		}
		const int lag = t - s.time;
		if (lag >= table.horizon()) {
			throw std::out_of_range(
			    "superpose: lag exceeds kernel table horizon; extend the horizon");
		}
		for (int k = 0; k < table.buckets(); ++k) {
			out[k] += s.magnitude * table.at(k, lag);
		}
	}
	return out;
}

void write_kernel_csv(const KernelTable &table, std::ostream &os)
{
	os << "k,tau,kappa\n";
	for (int k = 0; k < table.buckets(); ++k) {
		for (int tau = 0; tau < table.horizon(); ++tau) {
			os << k << ',' << tau << ',' << format_double(table.at(k, tau))
			   << '\n';
		}
	}
}

}  // namespace sgamma
