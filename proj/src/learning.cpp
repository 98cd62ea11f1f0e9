#include "sgamma/learning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgamma {

namespace {

void softmax(const std::vector<double> &y, std::vector<double> &p)
{
	p.resize(y.size());
	double mx = y[0];
	for (double v : y) mx = std::max(mx, v);
	double sum = 0.0;
	for (size_t i = 0; i < y.size(); ++i) {
		p[i] = std::exp(y[i] - mx);
		sum += p[i];
	}
	for (double &v : p) v /= sum;
}

}  // namespace

StepLoss loss_step(const LossConfig &cfg, const std::vector<double> &y_out,
                   const std::vector<double> &yhat_out, int label,
                   const double *target_row, int t)
{
	const int classes = static_cast<int>(y_out.size());
	StepLoss out;
	out.d_y_out.assign(classes, 0.0);

	const auto check_label = [&]() {
		if (label < 0 || label >= classes) {
			throw std::out_of_range("loss_step: label out of range");
		}
	};

	switch (cfg.kind) {
	case LossKind::ce_per_step: {
		check_label();
		std::vector<double> p;
		softmax(y_out, p);
		out.value = -std::log(std::max(p[label], 1e-300));
		for (int c = 0; c < classes; ++c) {
			out.d_y_out[c] = p[c] - (c == label ? 1.0 : 0.0);
		}
		break;
	}
	case LossKind::mse_on_yhat: {
		if (target_row == nullptr) {
			throw std::invalid_argument("loss_step: mse_on_yhat needs a target trace");
		}
		for (int c = 0; c < classes; ++c) {
			const double d = yhat_out[c] - target_row[c];
			out.value += d * d / classes;
			// through the estimate with d(estimate)/d(signal) = 1
			out.d_y_out[c] = 2.0 * d / classes;
		}
		break;
	}
	case LossKind::ce_warmup: {
		check_label();
		const double w = cfg.warmup_scale * std::pow(cfg.warmup_decay, t);
		std::vector<double> p;
		softmax(y_out, p);
		const double ce = -std::log(std::max(p[label], 1e-300));
		double mse0 = 0.0;
		for (int c = 0; c < classes; ++c) mse0 += yhat_out[c] * yhat_out[c] / classes;
		out.value = w * mse0 + (1.0 - w) * ce;
		for (int c = 0; c < classes; ++c) {
			out.d_y_out[c] = w * 2.0 * yhat_out[c] / classes +
			                 (1.0 - w) * (p[c] - (c == label ? 1.0 : 0.0));
		}
		break;
	}
	}
	return out;
}

void LayerGrads::zero()
{
	d_weights.fill(0.0);
	std::fill(d_bias.begin(), d_bias.end(), 0.0);
	d_v_neuron.fill(0.0);
	d_v_synapse.fill(0.0);
	std::fill(d_gain.begin(), d_gain.end(), 0.0);
	std::fill(d_shift.begin(), d_shift.end(), 0.0);
}

namespace {

void axpy(std::vector<double> &dst, const std::vector<double> &src, double s)
{
	for (size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
}

}  // namespace

void LayerGrads::add(const LayerGrads &other)
{
	axpy(d_weights.a, other.d_weights.a, 1.0);
	axpy(d_bias, other.d_bias, 1.0);
	axpy(d_v_neuron.a, other.d_v_neuron.a, 1.0);
	axpy(d_v_synapse.a, other.d_v_synapse.a, 1.0);
	axpy(d_gain, other.d_gain, 1.0);
	axpy(d_shift, other.d_shift, 1.0);
}

void LayerGrads::scale(double s)
{
	for (double &v : d_weights.a) v *= s;
	for (double &v : d_bias) v *= s;
	for (double &v : d_v_neuron.a) v *= s;
	for (double &v : d_v_synapse.a) v *= s;
	for (double &v : d_gain) v *= s;
	for (double &v : d_shift) v *= s;
}

GradientBuffers GradientBuffers::like(const Network &net)
{
	GradientBuffers g;
	g.layers.resize(net.layers.size());
	for (size_t l = 0; l < net.layers.size(); ++l) {
		const DenseGammaLayer &layer = net.layers[l];
		LayerGrads &lg = g.layers[l];
		lg.d_weights = Mat(layer.weights.rows, layer.weights.cols);
		lg.d_bias.assign(layer.bias.size(), 0.0);
		if (!layer.v_neuron.empty()) {
			lg.d_v_neuron = Mat(layer.v_neuron.rows, layer.v_neuron.cols);
		}
		if (!layer.v_synapse.empty()) {
			lg.d_v_synapse =
			    Ten3(layer.v_synapse.d0, layer.v_synapse.d1, layer.v_synapse.d2);
		}
		lg.d_gain.assign(layer.gain.size(), 0.0);
		lg.d_shift.assign(layer.shift.size(), 0.0);
	}
	return g;
}

void GradientBuffers::zero()
{
	for (LayerGrads &l : layers) l.zero();
}

void GradientBuffers::add(const GradientBuffers &other)
{
	for (size_t l = 0; l < layers.size(); ++l) layers[l].add(other.layers[l]);
}

void GradientBuffers::scale(double s)
{
	for (LayerGrads &l : layers) l.scale(s);
}

void backward_step(const Network &net, NetworkState &state,
                   const std::vector<double> &d_y_out, double gain_loss,
                   GradientBuffers &grads)
{
	const int n_layers = static_cast<int>(net.layers.size());
	std::vector<double> g_y = d_y_out;

	for (int l = n_layers - 1; l >= 0; --l) {
		const DenseGammaLayer &layer = net.layers[l];
		const LayerSpec &spec = layer.spec;
		StepCache &cache = state.layers[l].cache;
		if (!cache.valid) {
			throw std::logic_error("backward_step: missing or stale step cache");
		}
		LayerGrads &lg = grads.layers[l];
		const int in = spec.inputs;
		const int out = spec.outputs;
		const int buckets = cache.upstream.cols;

		// dropout mask and inverted scaling, then the ReLU gate
		std::vector<double> g_act(out);
		for (int j = 0; j < out; ++j) {
			const double g = cache.keep[j] ? g_y[j] * cache.drop_scale : 0.0;
			g_act[j] = cache.act[j] > 0.0 ? g : 0.0;
		}

		// normalization Jacobian (statistics couple neurons within the step)
		std::vector<double> g_x(out);
		if (spec.norm == NormKind::layer) {
			double mh = 0.0, mhx = 0.0;
			std::vector<double> h(out);
			for (int j = 0; j < out; ++j) {
				h[j] = g_act[j] * layer.gain[j];
				lg.d_gain[j] += g_act[j] * cache.normed[j] + gain_loss;
				lg.d_shift[j] += g_act[j];
				mh += h[j];
				mhx += h[j] * cache.normed[j];
			}
			mh /= out;
			mhx /= out;
			for (int j = 0; j < out; ++j) {
				g_x[j] = cache.inv_sigma * (h[j] - mh - cache.normed[j] * mhx);
			}
		} else if (spec.norm == NormKind::rms) {
			double mhx = 0.0;
			std::vector<double> h(out);
			for (int j = 0; j < out; ++j) {
				h[j] = g_act[j] * layer.gain[j];
				lg.d_gain[j] += g_act[j] * cache.normed[j] + gain_loss;
				lg.d_shift[j] += g_act[j];
				mhx += h[j] * cache.normed[j];
			}
			mhx /= out;
			for (int j = 0; j < out; ++j) {
				g_x[j] = cache.inv_sigma * (h[j] - cache.normed[j] * mhx);
			}
		} else {
			g_x = g_act;
		}

		for (int j = 0; j < out; ++j) lg.d_bias[j] += g_x[j];

		std::vector<double> g_up;
		if (l > 0) g_up.assign(in, 0.0);

		if (spec.bucket_layout == BucketLayout::per_neuron) {
			for (int j = 0; j < out; ++j) {
				const double gx = g_x[j];
				const double *vrow = layer.v_neuron.row(j);
				const double *mrow = cache.mix.row(j);
				double *dvrow = lg.d_v_neuron.row(j);
				for (int k = 0; k < buckets; ++k) dvrow[k] += gx * mrow[k];
				if (gx != 0.0) {
					double *dwrow = lg.d_weights.row(j);
					for (int i = 0; i < in; ++i) {
						const double *urow = cache.upstream.row(i);
						double s = 0.0;
						for (int k = 0; k < buckets; ++k) s += vrow[k] * urow[k];
						dwrow[i] += gx * s;
					}
				}
				if (l > 0) {
					double vsum = 0.0;
					for (int k = 0; k < buckets; ++k) vsum += vrow[k];
					const double c = gx * vsum;
					if (c != 0.0) {
						const double *wrow = layer.weights.row(j);
						for (int i = 0; i < in; ++i) g_up[i] += c * wrow[i];
					}
				}
			}
		} else {
			for (int j = 0; j < out; ++j) {
				const double gx = g_x[j];
				const double *wrow = layer.weights.row(j);
				double *dwrow = lg.d_weights.row(j);
				for (int i = 0; i < in; ++i) {
					const double *urow = cache.upstream.row(i);
					const double w = wrow[i];
					double dot = 0.0, vsum = 0.0;
					for (int k = 0; k < buckets; ++k) {
						const double vk = layer.v_synapse(j, i, k);
						lg.d_v_synapse(j, i, k) += gx * w * urow[k];
						dot += vk * urow[k];
						vsum += vk;
					}
					dwrow[i] += gx * dot;
					if (l > 0) g_up[i] += gx * w * vsum;
				}
			}
		}

		cache.valid = false;
		if (l > 0) g_y = std::move(g_up);  // d(estimate)/d(signal) = 1 upstream
	}
}

// ---------------------------------------------------------------------------
// frozen-trace finite differences

namespace {

struct FrozenLayerStep {
	Mat upstream;
	std::vector<uint8_t> keep;
	double drop_scale = 1.0;
	std::vector<double> y;
};

struct FrozenStep {
	std::vector<FrozenLayerStep> layers;
	std::vector<double> yhat_out;
};

/// Mean per-step surrogate loss over the frozen trace. Frozen upstream
/// buckets shift one-for-one with the recomputed upstream signal; dropout
/// masks and spike decisions stay fixed. Appends one ReLU-sign bit per
/// neuron-step to `signature`.
double surrogate_loss(const Network &net, const std::vector<FrozenStep> &trace,
                      const LabeledSample &sample, const LossConfig &loss,
                      std::vector<uint8_t> &signature)
{
	const int n_layers = static_cast<int>(net.layers.size());
	const int steps = static_cast<int>(trace.size());

	double gain_sum = 0.0;
	for (const DenseGammaLayer &layer : net.layers) {
		for (double g : layer.gain) gain_sum += g;
	}

	double total = 0.0;
	std::vector<double> delta, next_delta, x, normed, act, y;
	for (int t = 0; t < steps; ++t) {
		delta.assign(net.inputs(), 0.0);
		for (int l = 0; l < n_layers; ++l) {
			const DenseGammaLayer &layer = net.layers[l];
			const FrozenLayerStep &fs = trace[t].layers[l];
			const int in = layer.spec.inputs;
			const int out = layer.spec.outputs;
			const int buckets = fs.upstream.cols;

			x.assign(out, 0.0);
			for (int j = 0; j < out; ++j) {
				double acc = layer.bias[j];
				const double *wrow = layer.weights.row(j);
				if (layer.spec.bucket_layout == BucketLayout::per_neuron) {
					const double *vrow = layer.v_neuron.row(j);
					for (int i = 0; i < in; ++i) {
						const double *urow = fs.upstream.row(i);
						double dot = 0.0;
						for (int k = 0; k < buckets; ++k) {
							dot += vrow[k] * (urow[k] + delta[i]);
						}
						acc += wrow[i] * dot;
					}
				} else {
					for (int i = 0; i < in; ++i) {
						const double *urow = fs.upstream.row(i);
						double dot = 0.0;
						for (int k = 0; k < buckets; ++k) {
							dot += layer.v_synapse(j, i, k) * (urow[k] + delta[i]);
						}
						acc += wrow[i] * dot;
					}
				}
				x[j] = acc;
			}

			act.assign(out, 0.0);
			if (layer.spec.norm == NormKind::layer) {
				normed = layer_norm(x, layer.gain, layer.shift, layer.spec.norm_eps);
				act = normed;
			} else if (layer.spec.norm == NormKind::rms) {
				normed = rms_norm(x, layer.gain, layer.shift, layer.spec.norm_eps);
				act = normed;
			} else {
				act = x;
			}

			y.assign(out, 0.0);
			next_delta.assign(out, 0.0);
			for (int j = 0; j < out; ++j) {
				signature.push_back(act[j] > 0.0 ? 1 : 0);
				double yj = act[j] > 0.0 ? act[j] : 0.0;
				yj = fs.keep[j] ? yj * fs.drop_scale : 0.0;
				y[j] = yj;
				next_delta[j] = yj - fs.y[j];
			}
			delta = next_delta;
		}

		std::vector<double> yhat_sur(trace[t].yhat_out);
		for (size_t j = 0; j < yhat_sur.size(); ++j) yhat_sur[j] += delta[j];
		const double *target_row =
		    sample.has_target_trace() ? sample.target_trace.row(t) : nullptr;
		const StepLoss sl =
		    loss_step(loss, y, yhat_sur, sample.label, target_row, t);
		total += sl.value + loss.gain_loss * gain_sum;
	}
	return total / steps;
}

}  // namespace

FdReport frozen_trace_fd_check(Network net, const LabeledSample &sample,
                               const LossConfig &loss, const FdOptions &opts)
{
	const int steps = sample.frames.steps();
	if (steps < 1) {
		throw std::invalid_argument("frozen_trace_fd_check: empty sample");
	}

	// recording pass: freeze traces and accumulate the analytic gradient
	NetworkState state(net, Transport::state_passthrough);
	Rng drop_rng(mix_seed(opts.seed, 0xd201));
	GradientBuffers analytic = GradientBuffers::like(net);
	std::vector<FrozenStep> trace(steps);
	for (int t = 0; t < steps; ++t) {
		const StepResult res = network_forward_step(
		    net, state, sample.frames.frames.row(t), opts.train_mode, &drop_rng,
		    Transport::state_passthrough, true);
		trace[t].layers.resize(net.layers.size());
		for (size_t l = 0; l < net.layers.size(); ++l) {
			FrozenLayerStep &fs = trace[t].layers[l];
			const StepCache &cache = state.layers[l].cache;
			fs.upstream = cache.upstream;
			fs.keep = cache.keep;
			fs.drop_scale = cache.drop_scale;
			fs.y = state.layers[l].y;
		}
		trace[t].yhat_out = res.yhat_out;
		const double *target_row =
		    sample.has_target_trace() ? sample.target_trace.row(t) : nullptr;
		const StepLoss sl =
		    loss_step(loss, res.y_out, res.yhat_out, sample.label, target_row, t);
		backward_step(net, state, sl.d_y_out, loss.gain_loss, analytic);
	}
	analytic.scale(1.0 / steps);

	FdReport rep;
	Rng pick(mix_seed(opts.seed, 0x91c4));
	const auto check_param = [&](double *param, double analytic_grad) {
		const double orig = *param;
		std::vector<uint8_t> sig_plus, sig_minus;
		*param = orig + opts.eps;
		const double lp = surrogate_loss(net, trace, sample, loss, sig_plus);
		*param = orig - opts.eps;
		const double lm = surrogate_loss(net, trace, sample, loss, sig_minus);
		*param = orig;
		if (sig_plus != sig_minus) {
			++rep.kink_skipped;
			return;
		}
		const double fd = (lp - lm) / (2.0 * opts.eps);
		const double an = analytic_grad + opts.corrupt;
		const double mag = std::max(std::abs(fd), std::abs(an));
		++rep.checked;
		// below the floor the difference quotient is roundoff-dominated, so the
		// comparison switches to an absolute bound (covers dead-ReLU zeros too)
		if (mag < 1e-4) {
			rep.max_abs_err_zero = std::max(rep.max_abs_err_zero, std::abs(fd - an));
		} else {
			rep.max_rel_err = std::max(rep.max_rel_err, std::abs(fd - an) / mag);
		}
	};
	const auto sample_tensor = [&](std::vector<double> &params,
	                               const std::vector<double> &grads) {
		if (params.empty()) return;
		const int n = static_cast<int>(params.size());
		const int picks = std::min(opts.params_per_tensor, n);
		for (int s = 0; s < picks; ++s) {
			const int idx = pick.below(n);
			check_param(&params[idx], grads[idx]);
		}
	};

	for (size_t l = 0; l < net.layers.size(); ++l) {
		DenseGammaLayer &layer = net.layers[l];
		const LayerGrads &lg = analytic.layers[l];
		sample_tensor(layer.weights.a, lg.d_weights.a);
		sample_tensor(layer.bias, lg.d_bias);
		sample_tensor(layer.v_neuron.a, lg.d_v_neuron.a);
		sample_tensor(layer.v_synapse.a, lg.d_v_synapse.a);
		sample_tensor(layer.gain, lg.d_gain);
		sample_tensor(layer.shift, lg.d_shift);
	}
	return rep;
}

// ---------------------------------------------------------------------------
// optimizer and initialization

Optimizer::Optimizer(const Network &net, OptimizerConfig cfg)
    : cfg_(cfg),
      resolved_factor_(cfg.layer_factor > 0.0 ? cfg.layer_factor
                                              : static_cast<double>(net.buckets())),
      m_(GradientBuffers::like(net)),
      v_(GradientBuffers::like(net))
{
	if (!(cfg_.base_lr > 0.0)) {
		throw std::invalid_argument("Optimizer: base_lr must be positive");
	}
}

double Optimizer::schedule_multiplier(int epoch) const
{
	if (cfg_.schedule_step <= 0) return 1.0;
	return std::pow(cfg_.schedule_gamma, epoch / cfg_.schedule_step);
}

double Optimizer::layer_lr(int layer_index, int n_layers, int epoch) const
{
	const int depth_from_output = n_layers - 1 - layer_index;
	return cfg_.base_lr * std::pow(resolved_factor_, depth_from_output) *
	       schedule_multiplier(epoch);
}

namespace {

void sgd_update(std::vector<double> &p, const std::vector<double> &g, double lr)
{
	for (size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
}

void adam_update(std::vector<double> &p, const std::vector<double> &g,
                 std::vector<double> &m, std::vector<double> &v, double lr,
                 double b1, double b2, double eps, double bc1, double bc2)
{
	for (size_t i = 0; i < p.size(); ++i) {
		m[i] = b1 * m[i] + (1.0 - b1) * g[i];
		v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
		p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
	}
}

}  // namespace

void Optimizer::apply(Network &net, const GradientBuffers &grads, int epoch)
{
	++steps_;
	const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(steps_));
	const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(steps_));
	const int n_layers = static_cast<int>(net.layers.size());

	for (int l = 0; l < n_layers; ++l) {
		DenseGammaLayer &layer = net.layers[l];
		const LayerGrads &lg = grads.layers[l];
		LayerGrads &m = m_.layers[l];
		LayerGrads &v = v_.layers[l];
		const double lr = layer_lr(l, n_layers, epoch);

		const auto update = [&](std::vector<double> &p,
		                        const std::vector<double> &g,
		                        std::vector<double> &mm, std::vector<double> &vv) {
			if (p.empty()) return;
			if (cfg_.kind == OptKind::sgd) {
				sgd_update(p, g, lr);
			} else {
				adam_update(p, g, mm, vv, lr, cfg_.adam_beta1, cfg_.adam_beta2,
				            cfg_.adam_eps, bc1, bc2);
			}
		};

		if (layer.spec.train_weights) {
			update(layer.weights.a, lg.d_weights.a, m.d_weights.a, v.d_weights.a);
		}
		if (layer.spec.train_bias) {
			update(layer.bias, lg.d_bias, m.d_bias, v.d_bias);
		}
		if (layer.spec.train_bucket_weights) {
			update(layer.v_neuron.a, lg.d_v_neuron.a, m.d_v_neuron.a,
			       v.d_v_neuron.a);
			update(layer.v_synapse.a, lg.d_v_synapse.a, m.d_v_synapse.a,
			       v.d_v_synapse.a);
		}
		update(layer.gain, lg.d_gain, m.d_gain, v.d_gain);
		update(layer.shift, lg.d_shift, m.d_shift, v.d_shift);
	}
}

void Optimizer::restore(int64_t steps, GradientBuffers m, GradientBuffers v)
{
	steps_ = steps;
	m_ = std::move(m);
	v_ = std::move(v);
}

void init_parameters(Network &net, Rng &rng)
{
	for (DenseGammaLayer &layer : net.layers) {
		const double bound = std::sqrt(1.0 / layer.spec.inputs);
		for (double &w : layer.weights.a) w = rng.uniform(-bound, bound);
		for (double &b : layer.bias) b = rng.uniform(-bound, bound);
		for (double &v : layer.v_neuron.a) v = rng.normal(0.0, 0.1);
		for (double &v : layer.v_synapse.a) v = rng.normal(0.0, 0.1);
		std::fill(layer.gain.begin(), layer.gain.end(), 1.0);
		std::fill(layer.shift.begin(), layer.shift.end(), 0.0);
	}
}

}  // namespace sgamma
