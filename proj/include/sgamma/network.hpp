#pragma once

#include <cstdint>
#include <vector>

#include "sgamma/common.hpp"
#include "sgamma/kernel.hpp"
#include "sgamma/sigma_delta.hpp"

namespace sgamma {

enum class NormKind { none, layer, rms };
enum class BucketLayout { per_neuron, per_synapse };

/// How layer outputs travel to the next layer's synapses.
///   state_passthrough: downstream reads the sender's bucket matrix directly
///     (training mode; valid because sender estimate and receiver
///     reconstruction are the same signal).
///   graded_spikes: (time, magnitude) events; receiver banks integrate them.
///   binary_spikes: bare events; the receiver recomputes the magnitude from
///     its own reconstruction.
enum class Transport { state_passthrough, graded_spikes, binary_spikes };

struct LayerSpec {
	int inputs = 0;
	int outputs = 0;
	BucketLayout bucket_layout = BucketLayout::per_neuron;
	NormKind norm = NormKind::none;
	double norm_eps = 1e-5;
	double dropout = 0.0;
	bool train_weights = true;
	bool train_bias = true;
	bool train_bucket_weights = true;
};

struct DenseGammaLayer {
	LayerSpec spec;
	Mat weights;                // out x in, synaptic
	std::vector<double> bias;   // out
	Mat v_neuron;               // out x K, bucket weights (per_neuron layout)
	Ten3 v_synapse;             // out x in x K (per_synapse layout)
	std::vector<double> gain;   // gamma, norm layers only
	std::vector<double> shift;  // beta, norm layers only

	bool has_norm() const { return spec.norm != NormKind::none; }
};

DenseGammaLayer make_dense_layer(const LayerSpec &spec, int buckets);

struct Network {
	KernelConfig kernel;
	ThresholdConfig threshold;
	double input_injection_scale = 1.0;
	std::vector<double> alphas;  // derived from kernel
	std::vector<DenseGammaLayer> layers;

	int inputs() const { return layers.front().spec.inputs; }
	int outputs() const { return layers.back().spec.outputs; }
	int buckets() const { return kernel.buckets; }
	void refresh_rates() { alphas = transfer_rates(kernel); }
};

/// Feeds raw event counts into per-channel bucket banks. Counts are injected
/// as injection_scale * count without the 2*theta spike factor; the first
/// layer's weights and normalization absorb the scale.
struct InputAdapter {
	std::vector<BucketBank> banks;
	double injection_scale = 1.0;
	Mat out;  // channels x K, refreshed each step

	InputAdapter(int channels, const std::vector<double> &alphas, double scale);

	const Mat &inject_step(const double *frame);
	void reset();
};

/// Forward intermediates for one timestep, retained until backward_step
/// consumes them.
struct StepCache {
	Mat upstream;                // in x K as consumed this step
	Mat mix;                     // out x K, mix(j,k) = sum_i W(j,i)*upstream(i,k)
	std::vector<double> pre;     // x before normalization
	std::vector<double> normed;  // (x-E)/sigma before gain/shift (norm layers)
	std::vector<double> act;     // input of the ReLU
	std::vector<uint8_t> keep;   // dropout keep mask
	double drop_scale = 1.0;     // 1/(1-p) while masks are being sampled
	double inv_sigma = 0.0;
	bool valid = false;
};

struct LayerState {
	std::vector<SigmaDeltaState> neurons;
	std::vector<BucketBank> receivers;  // per upstream unit, spike transport only
	std::vector<double> y;              // post-ReLU, post-dropout signal
	std::vector<double> last_z;
	std::vector<double> last_theta;
	std::vector<uint8_t> spikes;
	Mat in_buf;  // staging for the consumed input matrix
	StepCache cache;

	void reset();
};

struct NetworkState {
	InputAdapter adapter;
	std::vector<LayerState> layers;
	std::vector<long> spike_counts;  // per layer, accumulated since reset

	NetworkState(const Network &net, Transport transport);
	void reset();
};

/// Applies layer statistics normalization: (x - E[x]) / sqrt(Var[x]+eps)
/// with biased variance, then gain and shift.
std::vector<double> layer_norm(const std::vector<double> &x,
                               const std::vector<double> &gain,
                               const std::vector<double> &shift, double eps);

/// RMS variant: x / sqrt(E[x^2]+eps) * gain + shift.
std::vector<double> rms_norm(const std::vector<double> &x,
                             const std::vector<double> &gain,
                             const std::vector<double> &shift, double eps);

/// One layer, one timestep: weighted bucket mix, normalization, ReLU,
/// dropout (train mode, inverted scaling), then per-neuron sigma-delta
/// encoding. Results land in `state` (y, spikes, neuron banks, cache).
void layer_forward_step(const DenseGammaLayer &layer,
                        const ThresholdConfig &threshold, LayerState &state,
                        const Mat &upstream, bool train_mode, Rng *rng,
                        bool keep_cache);

/// Writes the layer's post-step bucket matrix (out x K) into `dst`.
void bucket_matrix(const LayerState &state, Mat &dst);

struct StepResult {
	std::vector<double> y_out;     // output layer signal
	std::vector<double> yhat_out;  // per-neuron bucket sums after the step
	const std::vector<uint8_t> *out_spikes = nullptr;
};

/// Full network step: inject the frame, then run layers input to output.
/// Within a step every layer sees the upstream state already advanced to
/// this step, so the whole computation is feedforward.
StepResult network_forward_step(const Network &net, NetworkState &state,
                                const double *frame, bool train_mode, Rng *rng,
                                Transport transport, bool keep_cache);

}  // namespace sgamma
