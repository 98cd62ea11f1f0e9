#include "sgamma/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgamma {

std::vector<double> single_spike_target(const std::vector<double> &alphas,
                                        double min_threshold, int horizon,
                                        int spike_time)
{
	if (spike_time < 0 || spike_time >= horizon) {
		throw std::invalid_argument("single_spike_target: spike time outside horizon");
	}
	std::vector<double> trace(horizon, 0.0);
	BucketBank bank(alphas);
	for (int t = spike_time; t < horizon; ++t) {
		bank.step(t == spike_time ? 2.0 * min_threshold : 0.0);
		trace[t] = bank.sum();
	}
	return trace;
}

LabeledSample gen_delay_task(const DelayTaskConfig &cfg,
                             const std::vector<double> &alphas,
                             double min_threshold)
{
	if (cfg.delay >= cfg.horizon) {
		throw std::invalid_argument("gen_delay_task: delay must precede horizon");
	}
	LabeledSample sample;
	sample.frames.frames = Mat(cfg.horizon, 1);
	sample.frames.frames(0, 0) = 1.0;
	sample.label = 0;
	sample.target_trace = Mat(cfg.horizon, 1);
	const std::vector<double> target =
	    single_spike_target(alphas, min_threshold, cfg.horizon, cfg.delay);
	for (int t = 0; t < cfg.horizon; ++t) sample.target_trace(t, 0) = target[t];
	return sample;
}

std::vector<LabeledSample> gen_coincidence_task(const CoincidenceTaskConfig &cfg,
                                                const std::vector<double> &alphas,
                                                double min_threshold,
                                                int n_per_class, Rng &rng)
{
	if (cfg.resolution < 1) {
		throw std::invalid_argument("gen_coincidence_task: resolution must be >= 1");
	}
	const int classes = static_cast<int>(cfg.pairs.size());
	const int horizon = cfg.horizon * cfg.resolution;
	const int target_time = cfg.target_time * cfg.resolution;

	// shared target traces, one per class: the class neuron fires once at
	// target_time, every other neuron stays silent (all-zero rows)
	const std::vector<double> target =
	    single_spike_target(alphas, min_threshold, horizon, target_time);

	std::vector<LabeledSample> samples;
	samples.reserve(static_cast<size_t>(classes) * n_per_class);
	for (int c = 0; c < classes; ++c) {
		for (int i = 0; i < n_per_class; ++i) {
			LabeledSample s;
			s.label = c;
			s.frames.frames = Mat(horizon, 2);
			const double jitter_l = rng.uniform(0.0, cfg.jitter);
			const double jitter_r = rng.uniform(0.0, cfg.jitter);
			const int tl = static_cast<int>(std::lround(
			    (cfg.pairs[c].first + jitter_l) * cfg.resolution));
			const int tr = static_cast<int>(std::lround(
			    (cfg.pairs[c].second + jitter_r) * cfg.resolution));
			if (tl >= horizon || tr >= horizon) {
				throw std::invalid_argument(
				    "gen_coincidence_task: spike time outside horizon");
			}
			s.frames.frames(tl, 0) += 1.0;
			s.frames.frames(tr, 1) += 1.0;
			s.target_trace = Mat(horizon, classes);
			for (int t = 0; t < horizon; ++t) s.target_trace(t, c) = target[t];
			samples.push_back(std::move(s));
		}
	}
	return samples;
}

int ttfs_decode(const std::vector<int> &first_spike, const Mat &yhat_trace)
{
	const int classes = static_cast<int>(first_spike.size());
	if (classes < 1) {
		throw std::invalid_argument("ttfs_decode: no output neurons");
	}
	int best = -1;
	for (int c = 0; c < classes; ++c) {
		if (first_spike[c] < 0) continue;
		if (best < 0 || first_spike[c] < first_spike[best]) {
			best = c;
		} else if (first_spike[c] == first_spike[best] &&
		           yhat_trace(first_spike[c], c) >
		               yhat_trace(first_spike[best], best)) {
			best = c;
		}
	}
	if (best >= 0) return best;

	// silent output: fall back to the largest time-summed estimate
	int arg = 0;
	double top = -1.0;
	for (int c = 0; c < classes; ++c) {
		double s = 0.0;
		for (int t = 0; t < yhat_trace.rows; ++t) s += yhat_trace(t, c);
		if (s > top) {
			top = s;
			arg = c;
		}
	}
	return arg;
}

double spike_density(const std::vector<long> &per_sample_counts, long n_neurons)
{
	if (per_sample_counts.empty() || n_neurons <= 0) {
		throw std::invalid_argument("spike_density: needs samples and neurons");
	}
	double total = 0.0;
	for (long c : per_sample_counts) total += static_cast<double>(c);
	return total /
	       (static_cast<double>(per_sample_counts.size()) * n_neurons);
}

int sequence_classify(const Mat &y_trace)
{
	if (y_trace.cols < 1) {
		throw std::invalid_argument("sequence_classify: no classes");
	}
	int arg = 0;
	double top = -1.0;
	for (int c = 0; c < y_trace.cols; ++c) {
		double s = 0.0;
		for (int t = 0; t < y_trace.rows; ++t) s += y_trace(t, c);
		if (c == 0 || s > top) {
			top = s;
			arg = c;
		}
	}
	return arg;
}

EventStream gen_synthetic_event_stream(const SyntheticEventsConfig &cfg,
                                       int label, Rng &rng)
{
	if (label < 0 || label >= cfg.classes) {
		throw std::invalid_argument("gen_synthetic_event_stream: bad label");
	}
	EventStream stream;
	stream.channels = cfg.channels;
	stream.duration_us = cfg.duration_us;

	// class signature: bursts_per_class fixed (channel, time) anchors drawn
	// from a per-class RNG; channels come from a per-class block so the
	// signatures stay separable
	Rng class_rng(mix_seed(cfg.seed, 0xc1a55, static_cast<uint64_t>(label)));
	const int block = std::max(1, cfg.channels / cfg.classes);
	std::vector<std::pair<int, uint32_t>> anchors;
	for (int b = 0; b < cfg.bursts_per_class; ++b) {
		const int ch = (label * block + class_rng.below(block)) % cfg.channels;
		const uint32_t t = static_cast<uint32_t>(
		    class_rng.uniform(0.1, 0.8) * static_cast<double>(cfg.duration_us));
		anchors.emplace_back(ch, t);
	}

	std::vector<Event> &ev = stream.events;
	for (const auto &[ch, t0] : anchors) {
		for (int i = 0; i < cfg.events_per_burst; ++i) {
			double t = static_cast<double>(t0) +
			           rng.normal(0.0, cfg.burst_jitter_us);
			t = std::clamp(t, 0.0, static_cast<double>(cfg.duration_us));
			int c = ch + rng.below(3) - 1;
			c = std::clamp(c, 0, cfg.channels - 1);
			ev.push_back({static_cast<uint32_t>(t), static_cast<uint16_t>(c), 1});
		}
	}
	for (int i = 0; i < cfg.noise_events; ++i) {
		const uint32_t t = static_cast<uint32_t>(
		    rng.uniform() * static_cast<double>(cfg.duration_us));
		const uint16_t c = static_cast<uint16_t>(rng.below(cfg.channels));
		ev.push_back({t, c, 1});
	}
	std::sort(ev.begin(), ev.end(), [](const Event &a, const Event &b) {
		if (a.time_us != b.time_us) return a.time_us < b.time_us;
		return a.channel < b.channel;
	});
	stream.validate();
	return stream;
}

}  // namespace sgamma
