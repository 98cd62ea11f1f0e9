#pragma once

#include <vector>

#include "sgamma/common.hpp"
#include "sgamma/events.hpp"
#include "sgamma/kernel.hpp"

namespace sgamma {

struct LabeledSample {
	FrameSequence frames;
	int label = 0;
	Mat target_trace;  // T x classes of target estimate values; empty if unused

	bool has_target_trace() const { return !target_trace.empty(); }
};

/// The estimate trace a single spike of magnitude 2*theta0 at `spike_time`
/// leaves on a unit with the given transfer rates: the summed impulse
/// response, shifted and scaled. Used as the MSE target for timing tasks.
std::vector<double> single_spike_target(const std::vector<double> &alphas,
                                        double min_threshold, int horizon,
                                        int spike_time);

struct DelayTaskConfig {
	int horizon = 300;
	int delay = 150;
};

/// One input channel spiking once at t=0; the target is the trace of one
/// output spike at t=delay.
LabeledSample gen_delay_task(const DelayTaskConfig &cfg,
                             const std::vector<double> &alphas,
                             double min_threshold);

struct CoincidenceTaskConfig {
	// class -> (left, right) base spike times, in base-resolution steps
	std::vector<std::pair<int, int>> pairs = {{4, 60}, {4, 20}, {20, 4}, {60, 4}};
	int target_time = 200;
	double jitter = 2.0;  // Uniform(0, jitter), added before rounding
	int horizon = 280;
	int resolution = 1;  // temporal resolution multiplier (2 = twice the steps)
};

/// Two input channels spiking once each at the class pair times plus
/// independent jitter; the target is one spike from the class neuron at
/// target_time, all other neurons silent. At resolution r all times and the
/// horizon scale by r (transfer rates must be rescaled by the caller).
std::vector<LabeledSample> gen_coincidence_task(const CoincidenceTaskConfig &cfg,
                                                const std::vector<double> &alphas,
                                                double min_threshold,
                                                int n_per_class, Rng &rng);

/// Earliest first spike wins; simultaneous firsts break toward the larger
/// estimate at that step; a fully silent output falls back to the argmax of
/// the time-summed estimate. first_spike entries are -1 for silent neurons.
int ttfs_decode(const std::vector<int> &first_spike, const Mat &yhat_trace);

/// Mean spike count per neuron per sample.
double spike_density(const std::vector<long> &per_sample_counts, long n_neurons);

/// Sequence-level decision for rate-style outputs: argmax over classes of the
/// time-summed signal.
int sequence_classify(const Mat &y_trace);

/// Synthetic labeled event streams for exercising the event ingestion and
/// training pipeline end to end. Each class is a set of (channel, time)
/// bursts; samples add timing jitter, channel spread and background noise.
struct SyntheticEventsConfig {
	int classes = 12;
	int channels = 64;
	uint64_t duration_us = 1000000;
	int bursts_per_class = 3;
	int events_per_burst = 8;
	double burst_jitter_us = 10000.0;
	int noise_events = 40;
	uint64_t seed = 7;
};

EventStream gen_synthetic_event_stream(const SyntheticEventsConfig &cfg,
                                       int label, Rng &rng);

}  // namespace sgamma
