#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sgamma/tasks.hpp"

using namespace sgamma;

namespace {

std::vector<double> rates(int buckets = 10)
{
	return transfer_rates({buckets, 0.15, 0.1, 0.9, 1.0});
}

}  // namespace

TEST_CASE("delay task generation")
{
	const auto a = rates();

	SUBCASE("target is silent before the delay and kernel-shaped after")
	{
		const LabeledSample s = gen_delay_task({300, 150}, a, 0.2);
		CHECK(s.frames.frames(0, 0) == 1.0);
		double input_total = 0.0;
		for (double v : s.frames.frames.a) input_total += v;
		CHECK(input_total == 1.0);
		for (int t = 0; t < 150; ++t) CHECK(s.target_trace(t, 0) == 0.0);
		CHECK(s.target_trace(150, 0) == doctest::Approx(0.4).epsilon(1e-12));
		CHECK(s.target_trace(151, 0) > 0.0);
	}
	SUBCASE("zero delay is the immediate impulse response")
	{
		const LabeledSample s = gen_delay_task({50, 0}, a, 0.2);
		const KernelTable table = impulse_response(a, 50);
		for (int t = 0; t < 50; ++t) {
			double expect = 0.0;
			for (int k = 0; k < table.buckets(); ++k) expect += table.at(k, t);
			CHECK(s.target_trace(t, 0) ==
			      doctest::Approx(0.4 * expect).epsilon(1e-12));
		}
	}
	SUBCASE("target mass equals the analytic kernel mass of one spike")
	{
		// each bucket integrates to 1/(1-alpha_0), so the full target sums to
		// 2*theta0 * K / (1-alpha_0) up to horizon truncation
		const int horizon = 4000;
		const LabeledSample s = gen_delay_task({horizon, 0}, a, 0.2);
		double mass = 0.0;
		for (int t = 0; t < horizon; ++t) mass += s.target_trace(t, 0);
		const double expect = 0.4 * 10.0 / (1.0 - a[0]);
		CHECK(mass == doctest::Approx(expect).epsilon(1e-6));
	}
	SUBCASE("delay must precede the horizon")
	{
		CHECK_THROWS_AS(gen_delay_task({100, 100}, a, 0.2), std::invalid_argument);
	}
}

TEST_CASE("coincidence task generation")
{
	const auto a = rates(25);
	CoincidenceTaskConfig cfg;
	Rng rng(2024);

	SUBCASE("class pairs with jitter in range")
	{
		const auto samples = gen_coincidence_task(cfg, a, 0.2, 8, rng);
		REQUIRE(samples.size() == 32);
		for (const LabeledSample &s : samples) {
			int tl = -1, tr = -1;
			for (int t = 0; t < s.frames.steps(); ++t) {
				if (s.frames.frames(t, 0) > 0) tl = t;
				if (s.frames.frames(t, 1) > 0) tr = t;
			}
			REQUIRE(tl >= 0);
			REQUIRE(tr >= 0);
			const auto [bl, br] = cfg.pairs[s.label];
			CHECK(tl >= bl);
			CHECK(tl <= bl + 2);
			CHECK(tr >= br);
			CHECK(tr <= br + 2);
		}
	}
	SUBCASE("classes 1 and 2 are mirror images")
	{
		CHECK(cfg.pairs[1].first == cfg.pairs[2].second);
		CHECK(cfg.pairs[1].second == cfg.pairs[2].first);
	}
	SUBCASE("targets are identical across classes up to relabeling")
	{
		const auto samples = gen_coincidence_task(cfg, a, 0.2, 1, rng);
		REQUIRE(samples.size() == 4);
		for (int c = 1; c < 4; ++c) {
			for (int t = 0; t < samples[0].target_trace.rows; ++t) {
				CHECK(samples[0].target_trace(t, 0) ==
				      samples[c].target_trace(t, c));
				// other neurons stay silent
				CHECK(samples[c].target_trace(t, (c + 1) % 4) == 0.0);
			}
		}
	}
	SUBCASE("resolution scales all times")
	{
		CoincidenceTaskConfig scaled = cfg;
		scaled.resolution = 4;
		scaled.jitter = 0.0;
		Rng r2(1);
		const auto samples = gen_coincidence_task(scaled, a, 0.2, 1, r2);
		CHECK(samples[0].frames.steps() == cfg.horizon * 4);
		int tl = -1;
		for (int t = 0; t < samples[0].frames.steps(); ++t) {
			if (samples[0].frames.frames(t, 0) > 0) tl = t;
		}
		CHECK(tl == cfg.pairs[0].first * 4);
		// first target support at the scaled spike time
		CHECK(samples[0].target_trace(scaled.target_time * 4, 0) > 0.0);
		CHECK(samples[0].target_trace(scaled.target_time * 4 - 1, 0) == 0.0);
	}
}

TEST_CASE("time-to-first-spike decoding")
{
	Mat yhat(5, 3);

	SUBCASE("only one class spikes")
	{
		CHECK(ttfs_decode({-1, -1, 2}, yhat) == 2);
	}
	SUBCASE("earliest spike wins")
	{
		CHECK(ttfs_decode({3, 1, 2}, yhat) == 1);
	}
	SUBCASE("ties break toward the larger estimate")
	{
		yhat(2, 0) = 0.3;
		yhat(2, 2) = 0.5;
		CHECK(ttfs_decode({2, -1, 2}, yhat) == 2);
	}
	SUBCASE("silent output falls back to the summed estimate")
	{
		Mat sums(4, 2);
		sums(0, 0) = 0.1;
		sums(1, 1) = 0.4;
		CHECK(ttfs_decode({-1, -1}, sums) == 1);
	}
	SUBCASE("appending silent steps after the first spike changes nothing")
	{
		Mat longer(50, 3);
		CHECK(ttfs_decode({3, 1, 2}, longer) == 1);
	}
}

TEST_CASE("spike density")
{
	CHECK(spike_density({10, 20}, 5) == doctest::Approx(3.0).epsilon(1e-15));
	CHECK(spike_density({0, 0, 0}, 7) == 0.0);
	CHECK(spike_density({6}, 6) == 1.0);
	// linear in counts, invariant under reordering
	CHECK(spike_density({20, 10}, 5) == doctest::Approx(3.0).epsilon(1e-15));
	CHECK(spike_density({40, 20}, 5) == doctest::Approx(6.0).epsilon(1e-15));
	CHECK_THROWS_AS(spike_density({}, 5), std::invalid_argument);
	CHECK_THROWS_AS(spike_density({1}, 0), std::invalid_argument);
}

TEST_CASE("sequence classification")
{
	SUBCASE("dominant class wins")
	{
		Mat trace(10, 3);
		for (int t = 0; t < 10; ++t) trace(t, 1) = 1.0;
		trace(0, 2) = 5.0;
		CHECK(sequence_classify(trace) == 1);
	}
	SUBCASE("permutation equivariance")
	{
		Rng rng(3);
		Mat trace(20, 4);
		for (double &v : trace.a) v = rng.uniform(0.0, 1.0);
		const int base = sequence_classify(trace);
		// swap classes 0 and base
		Mat swapped = trace;
		for (int t = 0; t < 20; ++t) std::swap(swapped(t, 0), swapped(t, base));
		const int after = sequence_classify(swapped);
		CHECK((base == 0 ? after == 0 : after == 0));
	}
	SUBCASE("agrees with per-step majority on a constructed trace")
	{
		// class 2 wins every step, so both rules agree
		Mat trace(12, 3);
		for (int t = 0; t < 12; ++t) {
			trace(t, 0) = 0.1;
			trace(t, 1) = 0.2;
			trace(t, 2) = 0.3;
		}
		int majority[3] = {0, 0, 0};
		for (int t = 0; t < 12; ++t) {
			int arg = 0;
			for (int c = 1; c < 3; ++c) {
				if (trace(t, c) > trace(t, arg)) arg = c;
			}
			majority[arg]++;
		}
		int vote = 0;
		for (int c = 1; c < 3; ++c) {
			if (majority[c] > majority[vote]) vote = c;
		}
		CHECK(sequence_classify(trace) == vote);
	}
}

TEST_CASE("synthetic event streams are class-consistent")
{
	SyntheticEventsConfig cfg;
	cfg.classes = 5;
	cfg.channels = 16;
	Rng rng(4);
	const EventStream a = gen_synthetic_event_stream(cfg, 2, rng);
	const EventStream b = gen_synthetic_event_stream(cfg, 2, rng);
	a.validate();
	b.validate();
	CHECK(a.channels == 16);
	CHECK(!a.events.empty());
	// same class, different jitter: different event times but same scale
	CHECK(a.events.size() == b.events.size());
	CHECK_THROWS_AS(gen_synthetic_event_stream(cfg, 9, rng),
	                std::invalid_argument);
}
