#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sgamma/kernel.hpp"

using namespace sgamma;

TEST_CASE("transfer rates follow the power-law spacing")
{
	SUBCASE("exponent 1 reproduces the linspace endpoints")
	{
		const auto a = transfer_rates({2, 1.0, 0.1, 0.9, 1.0});
		REQUIRE(a.size() == 2);
		CHECK(a[0] == doctest::Approx(0.1).epsilon(1e-12));
		CHECK(a[1] == doctest::Approx(0.9).epsilon(1e-12));
	}
	SUBCASE("exponent 0 yields unit rates")
	{
		const auto a = transfer_rates({7, 0.0, 0.1, 0.9, 1.0});
		for (double v : a) CHECK(v == 1.0);
	}
	SUBCASE("reference configuration")
	{
		// high-precision scalar evaluation of 0.1^0.15 and 0.9^0.15
		const auto a = transfer_rates({10, 0.15, 0.1, 0.9, 1.0});
		CHECK(a[0] == doctest::Approx(0.7079457843841379).epsilon(1e-14));
		CHECK(a[9] == doctest::Approx(0.9843201517785072).epsilon(1e-14));
		for (size_t k = 1; k < a.size(); ++k) CHECK(a[k] >= a[k - 1]);
		for (double v : a) {
			CHECK(v > 0.0);
			CHECK(v <= 1.0);
		}
	}
	SUBCASE("single bucket sits at the start value")
	{
		const auto a = transfer_rates({1, 0.5, 0.25, 0.9, 1.0});
		REQUIRE(a.size() == 1);
		CHECK(a[0] == doctest::Approx(std::pow(0.25, 0.5)).epsilon(1e-14));
	}
	SUBCASE("invalid configs are rejected")
	{
		CHECK_THROWS_AS(transfer_rates({0, 0.15, 0.1, 0.9, 1.0}),
		                std::invalid_argument);
		CHECK_THROWS_AS(transfer_rates({4, 0.15, 0.0, 0.9, 1.0}),
		                std::invalid_argument);
		CHECK_THROWS_AS(transfer_rates({4, 0.15, 0.1, 1.0, 1.0}),
		                std::invalid_argument);
		CHECK_THROWS_AS(transfer_rates({4, 0.15, 0.9, 0.1, 1.0}),
		                std::invalid_argument);
	}
}

TEST_CASE("bucket bank recursion")
{
	const auto a = transfer_rates({10, 0.15, 0.1, 0.9, 1.0});

	SUBCASE("zero stays zero")
	{
		BucketBank bank(a);
		for (int t = 0; t < 50; ++t) bank.step(0.0);
		for (double v : bank.values) CHECK(v == 0.0);
	}
	SUBCASE("an injection lands in bucket 0 only")
	{
		BucketBank bank(a);
		bank.step(0.4);  // one spike at threshold 0.2
		CHECK(bank.values[0] == 0.4);
		for (size_t k = 1; k < bank.values.size(); ++k) CHECK(bank.values[k] == 0.0);
	}
	SUBCASE("one more step spills into bucket 1")
	{
		BucketBank bank(a);
		bank.step(0.4);
		bank.step(0.0);
		CHECK(bank.values[0] == doctest::Approx(0.4 * a[0]).epsilon(1e-15));
		CHECK(bank.values[1] == doctest::Approx(0.4 * (1.0 - a[1])).epsilon(1e-15));
		CHECK(bank.values[2] == 0.0);
	}
}

TEST_CASE("impulse response table")
{
	const auto a = transfer_rates({10, 0.15, 0.1, 0.9, 1.0});
	const KernelTable table = impulse_response(a, 64);

	CHECK(table.at(0, 0) == 1.0);
	CHECK(table.at(1, 0) == 0.0);
	CHECK(table.at(1, 1) == doctest::Approx(1.0 - a[1]).epsilon(1e-15));
	// geometric decay of bucket 0: alpha_0^2 with alpha_0 = 0.1^0.15
	CHECK(table.at(0, 2) == doctest::Approx(0.5011872336272723).epsilon(1e-14));
	for (int tau = 0; tau < 64; ++tau) {
		CHECK(table.at(0, tau) == doctest::Approx(std::pow(a[0], tau)).epsilon(1e-12));
		double sum = 0.0;
		for (int k = 0; k < table.buckets(); ++k) {
			CHECK(table.at(k, tau) >= 0.0);
			sum += table.at(k, tau);
		}
		CHECK(std::isfinite(sum));
	}
	// downstream buckets fill with a one-step lag
	for (int k = 1; k < table.buckets(); ++k) CHECK(table.at(k, 0) == 0.0);
}

TEST_CASE("superposition matches the recursion")
{
	Rng rng(42);
	for (int trial = 0; trial < 25; ++trial) {
		const int buckets = 1 + rng.below(16);
		KernelConfig cfg;
		cfg.buckets = buckets;
		cfg.rate_exponent = rng.uniform(0.0, 1.0);
		cfg.rate_base_start = rng.uniform(0.05, 0.4);
		cfg.rate_base_end = rng.uniform(0.5, 0.95);
		const auto a = transfer_rates(cfg);
		const int steps = 200;
		const KernelTable table = impulse_response(a, steps);

		std::vector<TimedSpike> spikes;
		BucketBank bank(a);
		for (int t = 0; t < steps; ++t) {
			double injected = 0.0;
			if (rng.bernoulli(0.07)) {
				injected = rng.uniform(0.1, 2.0);
				spikes.push_back({t, injected});
			}
			bank.step(injected);
			const auto via_kernel = superpose(table, spikes, t);
			for (int k = 0; k < buckets; ++k) {
				CHECK(std::abs(bank.values[k] - via_kernel[k]) <= 1e-9);
			}
		}
	}
}

TEST_CASE("superpose input validation")
{
	const auto a = transfer_rates({4, 0.15, 0.1, 0.9, 1.0});
	const KernelTable table = impulse_response(a, 10);

	CHECK(superpose(table, {}, 5) == std::vector<double>(4, 0.0));
	// single spike: magnitude times the tabulated response
	const auto v = superpose(table, {{0, 0.4}}, 2);
	for (int k = 0; k < 4; ++k) {
		CHECK(v[k] == doctest::Approx(0.4 * table.at(k, 2)).epsilon(1e-15));
	}
	CHECK_THROWS_AS(superpose(table, {{0, 1.0}}, 10), std::out_of_range);
	CHECK_THROWS_AS(superpose(table, {{7, 1.0}}, 5), std::invalid_argument);
}

TEST_CASE("linearity and time invariance")
{
	const auto a = transfer_rates({8, 0.2, 0.1, 0.9, 1.0});
	const int steps = 120;

	std::vector<TimedSpike> train1{{3, 0.5}, {20, 1.0}, {21, 0.25}};
	std::vector<TimedSpike> train2{{0, 0.7}, {20, 0.4}, {77, 2.0}};

	const auto respond = [&](const std::vector<TimedSpike> &spikes, int shift) {
		BucketBank bank(a);
		Mat out(steps, 8);
		for (int t = 0; t < steps; ++t) {
			double injected = 0.0;
			for (const TimedSpike &s : spikes) {
				if (s.time + shift == t) injected += s.magnitude;
			}
			bank.step(injected);
			for (int k = 0; k < 8; ++k) out(t, k) = bank.values[k];
		}
		return out;
	};

	SUBCASE("linearity")
	{
		std::vector<TimedSpike> both = train1;
		both.insert(both.end(), train2.begin(), train2.end());
		const Mat r1 = respond(train1, 0), r2 = respond(train2, 0),
		          rb = respond(both, 0);
		for (size_t i = 0; i < rb.a.size(); ++i) {
			CHECK(rb.a[i] == doctest::Approx(r1.a[i] + r2.a[i]).epsilon(1e-12));
		}
	}
	SUBCASE("time invariance")
	{
		const int shift = 9;
		const Mat r = respond(train1, 0), rs = respond(train1, shift);
		for (int t = 0; t + shift < steps; ++t) {
			for (int k = 0; k < 8; ++k) {
				CHECK(rs(t + shift, k) == r(t, k));
			}
		}
	}
}

TEST_CASE("timestep rescaling")
{
	const auto a = transfer_rates({10, 0.15, 0.1, 0.9, 1.0});

	SUBCASE("ratio 1 is the identity")
	{
		CHECK(rescaled_rates(a, 1.0) == a);
	}
	SUBCASE("known values")
	{
		const auto quarter = rescaled_rates({0.7079457843841379}, 0.25);
		CHECK(quarter[0] == doctest::Approx(0.9172759353897796).epsilon(1e-14));
		const auto twice = rescaled_rates({0.7079457843841379}, 2.0);
		CHECK(twice[0] == doctest::Approx(0.5011872336272723).epsilon(1e-14));
	}
	SUBCASE("composition")
	{
		const auto once = rescaled_rates(rescaled_rates(a, 0.5), 3.0);
		const auto direct = rescaled_rates(a, 1.5);
		for (size_t k = 0; k < a.size(); ++k) {
			CHECK(once[k] == doctest::Approx(direct[k]).epsilon(1e-13));
		}
	}
	SUBCASE("config-level rescale matches rate-level rescale")
	{
		KernelConfig cfg{10, 0.15, 0.1, 0.9, 1.0};
		const auto via_cfg = transfer_rates(rescaled(cfg, 0.5));
		const auto via_rates = rescaled_rates(transfer_rates(cfg), 0.5);
		for (size_t k = 0; k < via_cfg.size(); ++k) {
			CHECK(via_cfg[k] == doctest::Approx(via_rates[k]).epsilon(1e-13));
		}
		CHECK(rescaled(cfg, 0.5).dt_ms == 0.5);
	}
}

TEST_CASE("kernel csv dump")
{
	const auto a = transfer_rates({2, 0.15, 0.1, 0.9, 1.0});
	const KernelTable table = impulse_response(a, 3);
	std::ostringstream os;
	write_kernel_csv(table, os);
	const std::string text = os.str();
	CHECK(text.rfind("k,tau,kappa\n", 0) == 0);
	CHECK(text.find("0,0,1\n") != std::string::npos);
}
