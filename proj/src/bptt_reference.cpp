#include "sgamma/bptt_reference.hpp"

#include <cmath>
#include <stdexcept>

namespace sgamma {

double surrogate_derivative(double u, const SurrogateConfig &cfg)
{
	if (cfg.slope <= 0.0) return 0.0;
	const double d = 1.0 + cfg.slope * std::abs(u);
	return 1.0 / (d * d);
}

namespace {

// per-neuron trajectory needed by the reverse sweep
struct NeuronTrace {
	Mat buckets;                 // T x K, post-update values
	std::vector<double> x;       // pre-activation
	std::vector<double> z;       // mismatch
	std::vector<double> theta;   // threshold
	std::vector<uint8_t> spike;

	explicit NeuronTrace(int steps, int buckets_n)
	    : buckets(steps, buckets_n), x(steps, 0.0), z(steps, 0.0),
	      theta(steps, 0.0), spike(steps, 0)
	{
	}
};

void require_delay_topology(const Network &net)
{
	const bool ok =
	    net.layers.size() == 2 && net.inputs() == 1 &&
	    net.layers[0].spec.outputs == 1 && net.layers[1].spec.inputs == 1 &&
	    net.layers[1].spec.outputs == 1 &&
	    net.layers[0].spec.bucket_layout == BucketLayout::per_neuron &&
	    net.layers[1].spec.bucket_layout == BucketLayout::per_neuron &&
	    net.layers[0].spec.norm == NormKind::none &&
	    net.layers[1].spec.norm == NormKind::none &&
	    net.layers[0].spec.dropout == 0.0 && net.layers[1].spec.dropout == 0.0;
	if (!ok) {
		throw std::invalid_argument(
		    "train_delay_bptt: requires the 1-1-1 delay topology "
		    "(per-neuron bucket weights, no norm, no dropout)");
	}
}

}  // namespace

DelayBpttResult train_delay_bptt(Network net, const LabeledSample &sample,
                                 const SurrogateConfig &surrogate,
                                 const DelayBpttOptions &opts)
{
	require_delay_topology(net);
	if (!sample.has_target_trace() || sample.target_trace.cols != 1) {
		throw std::invalid_argument("train_delay_bptt: needs a 1-class target trace");
	}

	const int steps = sample.frames.steps();
	const int buckets = net.buckets();
	const std::vector<double> &alphas = net.alphas;
	const double mf = net.threshold.adapt_scale;

	Optimizer optimizer(net, opts.optimizer);
	GradientBuffers grads = GradientBuffers::like(net);
	DelayBpttResult result;

	NetworkState state(net, Transport::state_passthrough);
	Mat input_trace(steps, buckets);  // adapter buckets consumed by the hidden neuron
	NeuronTrace hidden(steps, buckets), output(steps, buckets);
	std::vector<double> yhat_out(steps, 0.0);

	const auto forward = [&]() {
		state.reset();
		for (int t = 0; t < steps; ++t) {
			const StepResult res = network_forward_step(
			    net, state, sample.frames.frames.row(t), false, nullptr,
			    Transport::state_passthrough, true);
			for (int k = 0; k < buckets; ++k) {
				input_trace(t, k) = state.layers[0].cache.upstream(0, k);
				hidden.buckets(t, k) = state.layers[0].neurons[0].buckets.values[k];
				output.buckets(t, k) = state.layers[1].neurons[0].buckets.values[k];
			}
			hidden.x[t] = state.layers[0].cache.pre[0];
			hidden.z[t] = state.layers[0].last_z[0];
			hidden.theta[t] = state.layers[0].last_theta[0];
			hidden.spike[t] = state.layers[0].spikes[0];
			output.x[t] = state.layers[1].cache.pre[0];
			output.z[t] = state.layers[1].last_z[0];
			output.theta[t] = state.layers[1].last_theta[0];
			output.spike[t] = state.layers[1].spikes[0];
			yhat_out[t] = res.yhat_out[0];
			state.layers[0].cache.valid = false;
			state.layers[1].cache.valid = false;
		}
	};

	const double w1 = net.layers[0].weights(0, 0);
	const double w2 = net.layers[1].weights(0, 0);

	for (int epoch = 0; epoch < opts.epochs; ++epoch) {
		forward();

		double loss = 0.0;
		for (int t = 0; t < steps; ++t) {
			const double d = yhat_out[t] - sample.target_trace(t, 0);
			loss += d * d;
		}
		loss /= steps;

		grads.zero();
		double *dv_hidden = grads.layers[0].d_v_neuron.row(0);
		double *dv_output = grads.layers[1].d_v_neuron.row(0);
		const double *v_out = net.layers[1].v_neuron.row(0);

		// reverse sweep; *_next carry adjoints of step t+1
		std::vector<double> gb_o_next(buckets, 0.0), gb_h_next(buckets, 0.0);
		std::vector<double> gb_o(buckets, 0.0), gb_h(buckets, 0.0);
		double gz_o_next = 0.0, gth_o_next = 0.0;
		double gz_h_next = 0.0, gth_h_next = 0.0;

		for (int t = steps - 1; t >= 0; --t) {
			// ---- output neuron ----
			// loss reads yhat(t); step t+1 reads it via z and theta
			double gyh_o = 2.0 * (yhat_out[t] - sample.target_trace(t, 0)) / steps;
			gyh_o += -gz_o_next + mf * gth_o_next;
			for (int k = 0; k < buckets; ++k) {
				double g = gyh_o + gb_o_next[k] * alphas[k];
				if (k + 1 < buckets) g += gb_o_next[k + 1] * (1.0 - alphas[k + 1]);
				gb_o[k] = g;
			}
			const double ginj_o = gb_o[0];
			const double gs_o = ginj_o * 2.0 * output.theta[t];
			double gth_o = ginj_o * 2.0 * (output.spike[t] ? 1.0 : 0.0);
			const double sg_o =
			    surrogate_derivative(output.z[t] - output.theta[t], surrogate);
			const double gz_o = gs_o * sg_o;
			gth_o -= gs_o * sg_o;
			const double gy_o = gz_o;
			const double gx_o = output.x[t] > 0.0 ? gy_o : 0.0;
			for (int k = 0; k < buckets; ++k) {
				dv_output[k] += gx_o * w2 * hidden.buckets(t, k);
			}

			// ---- hidden neuron ----
			double gyh_h = -gz_h_next + mf * gth_h_next;
			for (int k = 0; k < buckets; ++k) {
				double g = gyh_h + gb_h_next[k] * alphas[k];
				if (k + 1 < buckets) g += gb_h_next[k + 1] * (1.0 - alphas[k + 1]);
				g += gx_o * w2 * v_out[k];  // x_out reads this step's buckets
				gb_h[k] = g;
			}
			const double ginj_h = gb_h[0];
			const double gs_h = ginj_h * 2.0 * hidden.theta[t];
			double gth_h = ginj_h * 2.0 * (hidden.spike[t] ? 1.0 : 0.0);
			const double sg_h =
			    surrogate_derivative(hidden.z[t] - hidden.theta[t], surrogate);
			const double gz_h = gs_h * sg_h;
			gth_h -= gs_h * sg_h;
			const double gy_h = gz_h;
			const double gx_h = hidden.x[t] > 0.0 ? gy_h : 0.0;
			for (int k = 0; k < buckets; ++k) {
				dv_hidden[k] += gx_h * w1 * input_trace(t, k);
			}

			gb_o_next = gb_o;
			gb_h_next = gb_h;
			gz_o_next = gz_o;
			gth_o_next = gth_o;
			gz_h_next = gz_h;
			gth_h_next = gth_h;
		}

		optimizer.apply(net, grads, epoch);
		result.loss_history.push_back(loss);
		if (opts.record_history) {
			std::vector<double> row;
			row.reserve(2 * buckets);
			for (int k = 0; k < buckets; ++k) {
				row.push_back(net.layers[0].v_neuron(0, k));
			}
			for (int k = 0; k < buckets; ++k) {
				row.push_back(net.layers[1].v_neuron(0, k));
			}
			result.v_history.push_back(std::move(row));
		}
	}

	forward();
	result.final_yhat_out = yhat_out;
	result.v_hidden.assign(net.layers[0].v_neuron.row(0),
	                       net.layers[0].v_neuron.row(0) + buckets);
	result.v_output.assign(net.layers[1].v_neuron.row(0),
	                       net.layers[1].v_neuron.row(0) + buckets);
	return result;
}

}  // namespace sgamma
