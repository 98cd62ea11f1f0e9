#include "sgamma/common.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace sgamma {

uint64_t splitmix64(uint64_t &state)
{
	uint64_t z = (state += 0x9e3779b97f4a7c15ull);
	z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
	z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
	return z ^ (z >> 31);
}

uint64_t mix_seed(uint64_t seed, uint64_t tag, uint64_t a, uint64_t b)
{
	uint64_t s = seed;
	uint64_t h = splitmix64(s);
	s ^= tag * 0x9e3779b97f4a7c15ull;
	h ^= splitmix64(s);
	s ^= a + 0x165667b19e3779f9ull;
	h ^= splitmix64(s);
	s ^= b + 0x27d4eb2f165667c5ull;
	h ^= splitmix64(s);
	return h;
}

double Rng::normal(double mean, double stddev)
{
	// u1 in (0,1] so the log is finite
	double u1 = 1.0 - uniform();
	double u2 = uniform();
	double r = std::sqrt(-2.0 * std::log(u1));
	return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

int Rng::below(int n)
{
	if (n <= 0) {
		throw std::invalid_argument("Rng::below: n must be positive");
	}
	const uint64_t un = static_cast<uint64_t>(n);
	const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
	uint64_t x;
	do {
		x = next();
	} while (x >= limit);
	return static_cast<int>(x % un);
}

std::string Rng::serialize() const
{
	std::ostringstream os;
	os << eng_;
	return os.str();
}

void Rng::deserialize(const std::string &s)
{
	std::istringstream is(s);
	is >> eng_;
	if (is.fail()) {
		throw std::runtime_error("Rng::deserialize: malformed state string");
	}
}

uint64_t fnv1a(const std::string &bytes)
{
	uint64_t h = 0xcbf29ce484222325ull;
	for (unsigned char c : bytes) {
		h ^= c;
		h *= 0x100000001b3ull;
	}
	return h;
}

std::string format_double(double v)
{
	char buf[40];
	std::snprintf(buf, sizeof(buf), "%.17g", v);
	return buf;
}

}  // namespace sgamma
