#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgamma {

/// Dense row-major matrix of doubles. Rows index units, columns index
/// whatever the second dimension means locally (buckets, inputs, ...).
struct Mat {
	int rows = 0;
	int cols = 0;
	std::vector<double> a;

	Mat() = default;
	Mat(int r, int c, double fill = 0.0)
	    : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill)
	{
	}

	double &operator()(int r, int c)
	{
		return a[static_cast<size_t>(r) * cols + c];
	}
	double operator()(int r, int c) const
	{
		return a[static_cast<size_t>(r) * cols + c];
	}
	double *row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
	const double *row(int r) const
	{
		return a.data() + static_cast<size_t>(r) * cols;
	}
	bool empty() const { return a.empty(); }
	void fill(double v) { std::fill(a.begin(), a.end(), v); }
};

/// Dense rank-3 tensor, row-major over (d0, d1, d2).
struct Ten3 {
	int d0 = 0, d1 = 0, d2 = 0;
	std::vector<double> a;

	Ten3() = default;
	Ten3(int n0, int n1, int n2, double fill = 0.0)
	    : d0(n0), d1(n1), d2(n2),
	      a(static_cast<size_t>(n0) * n1 * n2, fill)
	{
	}

	double &operator()(int i, int j, int k)
	{
		return a[(static_cast<size_t>(i) * d1 + j) * d2 + k];
	}
	double operator()(int i, int j, int k) const
	{
		return a[(static_cast<size_t>(i) * d1 + j) * d2 + k];
	}
	bool empty() const { return a.empty(); }
	void fill(double v) { std::fill(a.begin(), a.end(), v); }
};

uint64_t splitmix64(uint64_t &state);

/// Mixes a base seed with up to three stream tags into an independent seed.
/// Used to derive per-purpose RNG streams (init, shuffle, per-sample dropout,
/// train/test data) that stay disjoint by construction.
uint64_t mix_seed(uint64_t seed, uint64_t tag, uint64_t a = 0, uint64_t b = 0);

/// Deterministic RNG. The engine (mt19937_64) has a standard-specified output
/// sequence and the distributions below are hand-rolled, so draws are
/// reproducible across platforms and compilers.
class Rng {
public:
	explicit Rng(uint64_t seed) : eng_(seed) {}

	uint64_t next() { return eng_(); }

	/// Uniform in [0, 1).
	double uniform()
	{
		return static_cast<double>(next() >> 11) * 0x1.0p-53;
	}

	double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

	/// Box-Muller without spare caching, so the state is just the engine.
	double normal(double mean, double stddev);

	bool bernoulli(double p) { return uniform() < p; }

	/// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
	int below(int n);

	std::string serialize() const;
	void deserialize(const std::string &s);

private:
	std::mt19937_64 eng_;
};

/// Fisher-Yates shuffle driven by Rng::below (std::shuffle's draws are
/// implementation-defined, this one is portable).
template <typename T>
void shuffle(std::vector<T> &v, Rng &rng)
{
	for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
		std::swap(v[i], v[rng.below(i + 1)]);
	}
}

/// FNV-1a over a byte string; used for config hashes in run summaries.
uint64_t fnv1a(const std::string &bytes);

/// Formats a double with enough digits to round-trip exactly.
std::string format_double(double v);

}  // namespace sgamma
