#include "sgamma/network.hpp"

#include <cmath>
#include <stdexcept>

namespace sgamma {

DenseGammaLayer make_dense_layer(const LayerSpec &spec, int buckets)
{
	if (spec.inputs < 1 || spec.outputs < 1) {
		throw std::invalid_argument("make_dense_layer: empty shape");
	}
	if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) {
		throw std::invalid_argument("make_dense_layer: dropout must be in [0,1)");
	}
	if (spec.norm != NormKind::none && !(spec.norm_eps > 0.0)) {
		throw std::invalid_argument("make_dense_layer: norm_eps must be positive");
	}
	DenseGammaLayer layer;
	layer.spec = spec;
	layer.weights = Mat(spec.outputs, spec.inputs);
	layer.bias.assign(spec.outputs, 0.0);
	if (spec.bucket_layout == BucketLayout::per_neuron) {
		layer.v_neuron = Mat(spec.outputs, buckets);
	} else {
		layer.v_synapse = Ten3(spec.outputs, spec.inputs, buckets);
	}
	if (layer.has_norm()) {
		layer.gain.assign(spec.outputs, 1.0);
		layer.shift.assign(spec.outputs, 0.0);
	}
	return layer;
}

InputAdapter::InputAdapter(int channels, const std::vector<double> &alphas,
                           double scale)
    : injection_scale(scale), out(channels, static_cast<int>(alphas.size()))
{
	if (!(scale > 0.0)) {
		throw std::invalid_argument("InputAdapter: injection scale must be positive");
	}
	banks.reserve(channels);
	for (int c = 0; c < channels; ++c) banks.emplace_back(alphas);
}

const Mat &InputAdapter::inject_step(const double *frame)
{
	const int channels = static_cast<int>(banks.size());
	for (int c = 0; c < channels; ++c) {
		banks[c].step(injection_scale * frame[c]);
		double *row = out.row(c);
		for (int k = 0; k < out.cols; ++k) row[k] = banks[c].values[k];
	}
	return out;
}

void InputAdapter::reset()
{
	for (BucketBank &b : banks) b.reset();
	out.fill(0.0);
}

void LayerState::reset()
{
	for (SigmaDeltaState &n : neurons) n.reset();
	for (BucketBank &b : receivers) b.reset();
	std::fill(y.begin(), y.end(), 0.0);
	std::fill(last_z.begin(), last_z.end(), 0.0);
	std::fill(last_theta.begin(), last_theta.end(), 0.0);
	std::fill(spikes.begin(), spikes.end(), 0);
	cache.valid = false;
}

NetworkState::NetworkState(const Network &net, Transport transport)
    : adapter(net.inputs(), net.alphas, net.input_injection_scale)
{
	layers.resize(net.layers.size());
	spike_counts.assign(net.layers.size(), 0);
	for (size_t l = 0; l < net.layers.size(); ++l) {
		const LayerSpec &spec = net.layers[l].spec;
		LayerState &st = layers[l];
		st.neurons.reserve(spec.outputs);
		for (int j = 0; j < spec.outputs; ++j) st.neurons.emplace_back(net.alphas);
		if (transport != Transport::state_passthrough && l > 0) {
			st.receivers.reserve(spec.inputs);
			for (int i = 0; i < spec.inputs; ++i) st.receivers.emplace_back(net.alphas);
		}
		st.y.assign(spec.outputs, 0.0);
		st.last_z.assign(spec.outputs, 0.0);
		st.last_theta.assign(spec.outputs, 0.0);
		st.spikes.assign(spec.outputs, 0);
		st.in_buf = Mat(spec.inputs, net.buckets());
	}
}

void NetworkState::reset()
{
	adapter.reset();
	for (LayerState &l : layers) l.reset();
	std::fill(spike_counts.begin(), spike_counts.end(), 0);
}

namespace {

struct NormResult {
	double inv_sigma = 1.0;
	double mean = 0.0;
};

// normalized-before-affine values go to `normed`; affine output to `out`
NormResult apply_norm(NormKind kind, const std::vector<double> &x,
                      const std::vector<double> &gain,
                      const std::vector<double> &shift, double eps,
                      std::vector<double> &normed, std::vector<double> &out)
{
	const int n = static_cast<int>(x.size());
	NormResult res;
	if (kind == NormKind::layer) {
		double mean = 0.0;
		for (double v : x) mean += v;
		mean /= n;
		double var = 0.0;
		for (double v : x) var += (v - mean) * (v - mean);
		var /= n;  // biased
		res.mean = mean;
		res.inv_sigma = 1.0 / std::sqrt(var + eps);
		for (int j = 0; j < n; ++j) {
			normed[j] = (x[j] - mean) * res.inv_sigma;
			out[j] = normed[j] * gain[j] + shift[j];
		}
	} else {
		double ms = 0.0;
		for (double v : x) ms += v * v;
		ms /= n;
		res.inv_sigma = 1.0 / std::sqrt(ms + eps);
		for (int j = 0; j < n; ++j) {
			normed[j] = x[j] * res.inv_sigma;
			out[j] = normed[j] * gain[j] + shift[j];
		}
	}
	return res;
}

}  // namespace

std::vector<double> layer_norm(const std::vector<double> &x,
                               const std::vector<double> &gain,
                               const std::vector<double> &shift, double eps)
{
	if (x.empty()) {
		throw std::invalid_argument("layer_norm: empty input");
	}
	std::vector<double> normed(x.size()), out(x.size());
	apply_norm(NormKind::layer, x, gain, shift, eps, normed, out);
	return out;
}

std::vector<double> rms_norm(const std::vector<double> &x,
                             const std::vector<double> &gain,
                             const std::vector<double> &shift, double eps)
{
	if (x.empty()) {
		throw std::invalid_argument("rms_norm: empty input");
	}
	std::vector<double> normed(x.size()), out(x.size());
	apply_norm(NormKind::rms, x, gain, shift, eps, normed, out);
	return out;
}

void layer_forward_step(const DenseGammaLayer &layer,
                        const ThresholdConfig &threshold, LayerState &state,
                        const Mat &upstream, bool train_mode, Rng *rng,
                        bool keep_cache)
{
	const LayerSpec &spec = layer.spec;
	const int in = spec.inputs;
	const int out = spec.outputs;
	const int buckets = upstream.cols;
	if (upstream.rows != in) {
		throw std::invalid_argument("layer_forward_step: upstream shape mismatch");
	}

	StepCache &cache = state.cache;
	if (cache.pre.size() != static_cast<size_t>(out)) {
		cache.pre.assign(out, 0.0);
		cache.normed.assign(out, 0.0);
		cache.act.assign(out, 0.0);
		cache.keep.assign(out, 1);
	}

	std::vector<double> &x = cache.pre;
	if (spec.bucket_layout == BucketLayout::per_neuron) {
		// mix(j,k) = sum_i W(j,i) * upstream(i,k), then fold with bucket weights
		if (cache.mix.rows != out || cache.mix.cols != buckets) {
			cache.mix = Mat(out, buckets);
		}
		cache.mix.fill(0.0);
		for (int j = 0; j < out; ++j) {
			double *mrow = cache.mix.row(j);
			const double *wrow = layer.weights.row(j);
			for (int i = 0; i < in; ++i) {
				const double w = wrow[i];
				if (w == 0.0) continue;
				const double *urow = upstream.row(i);
				for (int k = 0; k < buckets; ++k) mrow[k] += w * urow[k];
			}
			const double *vrow = layer.v_neuron.row(j);
			double acc = layer.bias[j];
			for (int k = 0; k < buckets; ++k) acc += vrow[k] * mrow[k];
			x[j] = acc;
		}
	} else {
		for (int j = 0; j < out; ++j) {
			const double *wrow = layer.weights.row(j);
			double acc = layer.bias[j];
			for (int i = 0; i < in; ++i) {
				const double *urow = upstream.row(i);
				double dot = 0.0;
				for (int k = 0; k < buckets; ++k) {
					dot += layer.v_synapse(j, i, k) * urow[k];
				}
				acc += wrow[i] * dot;
			}
			x[j] = acc;
		}
	}

	// normalization before rectification
	std::vector<double> &act = cache.act;
	if (layer.has_norm()) {
		NormResult res = apply_norm(spec.norm, x, layer.gain, layer.shift,
		                            spec.norm_eps, cache.normed, act);
		cache.inv_sigma = res.inv_sigma;
	} else {
		act = x;
	}

	const double p = spec.dropout;
	const bool dropping = train_mode && p > 0.0;
	const double keep_scale = dropping ? 1.0 / (1.0 - p) : 1.0;
	cache.drop_scale = keep_scale;
	for (int j = 0; j < out; ++j) {
		double yj = act[j] > 0.0 ? act[j] : 0.0;
		uint8_t keep = 1;
		if (dropping) {
			keep = rng->bernoulli(p) ? 0 : 1;
			yj = keep ? yj * keep_scale : 0.0;
		}
		cache.keep[j] = keep;
		state.y[j] = yj;

		SigmaDeltaState &neuron = state.neurons[j];
		state.last_theta[j] = adaptive_threshold(neuron.yhat_prev, threshold);
		state.last_z[j] = yj - neuron.yhat_prev;
		state.spikes[j] = encode_step(yj, neuron, threshold) ? 1 : 0;
	}

	if (keep_cache) {
		if (cache.upstream.rows != in || cache.upstream.cols != buckets) {
			cache.upstream = Mat(in, buckets);
		}
		cache.upstream.a = upstream.a;
		cache.valid = true;
	} else {
		cache.valid = false;
	}
}

void bucket_matrix(const LayerState &state, Mat &dst)
{
	const int out = static_cast<int>(state.neurons.size());
	const int buckets =
	    out > 0 ? static_cast<int>(state.neurons[0].buckets.values.size()) : 0;
	if (dst.rows != out || dst.cols != buckets) dst = Mat(out, buckets);
	for (int j = 0; j < out; ++j) {
		const std::vector<double> &vals = state.neurons[j].buckets.values;
		double *row = dst.row(j);
		for (int k = 0; k < buckets; ++k) row[k] = vals[k];
	}
}

StepResult network_forward_step(const Network &net, NetworkState &state,
                                const double *frame, bool train_mode, Rng *rng,
                                Transport transport, bool keep_cache)
{
	const Mat *upstream = &state.adapter.inject_step(frame);
	const size_t n_layers = net.layers.size();

	for (size_t l = 0; l < n_layers; ++l) {
		LayerState &st = state.layers[l];
		if (l > 0) {
			if (transport == Transport::state_passthrough) {
				bucket_matrix(state.layers[l - 1], st.in_buf);
			} else {
				// receiver-side reconstruction from the upstream spikes of this step
				LayerState &prev = state.layers[l - 1];
				const int in = static_cast<int>(st.receivers.size());
				for (int i = 0; i < in; ++i) {
					BucketBank &bank = st.receivers[i];
					double magnitude = 0.0;
					if (prev.spikes[i]) {
						if (transport == Transport::graded_spikes) {
							magnitude = prev.neurons[i].last_magnitude;
						} else {
							magnitude =
							    2.0 * adaptive_threshold(bank.sum(), net.threshold);
						}
					}
					bank.step(magnitude);
					double *row = st.in_buf.row(i);
					for (int k = 0; k < st.in_buf.cols; ++k) row[k] = bank.values[k];
				}
			}
			upstream = &st.in_buf;
		}
		layer_forward_step(net.layers[l], net.threshold, st, *upstream,
		                   train_mode, rng, keep_cache);
		long spikes = 0;
		for (uint8_t s : st.spikes) spikes += s;
		state.spike_counts[l] += spikes;
	}

	LayerState &last = state.layers.back();
	StepResult res;
	res.y_out = last.y;
	res.yhat_out.resize(last.neurons.size());
	for (size_t j = 0; j < last.neurons.size(); ++j) {
		res.yhat_out[j] = last.neurons[j].yhat_prev;
	}
	res.out_spikes = &last.spikes;
	return res;
}

}  // namespace sgamma
