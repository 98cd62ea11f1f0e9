#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sgamma/network.hpp"
#include "support.hpp"

using namespace sgamma;

namespace {

Network tiny_net(int inputs, int outputs, int buckets, NormKind norm,
                 BucketLayout layout = BucketLayout::per_neuron)
{
	Network net;
	net.kernel = KernelConfig{buckets, 0.15, 0.1, 0.9, 1.0};
	net.threshold = ThresholdConfig{0.2, 0.2};
	net.refresh_rates();
	LayerSpec spec;
	spec.inputs = inputs;
	spec.outputs = outputs;
	spec.norm = norm;
	spec.bucket_layout = layout;
	net.layers.push_back(make_dense_layer(spec, buckets));
	return net;
}

}  // namespace

TEST_CASE("layer normalization")
{
	const std::vector<double> ones{1.0, 1.0, 1.0};
	const std::vector<double> zeros{0.0, 0.0, 0.0};

	SUBCASE("constant input maps to the shift")
	{
		const auto out = layer_norm({3.0, 3.0, 3.0}, ones, zeros, 1e-5);
		for (double v : out) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
	}
	SUBCASE("unit-variance pair passes through")
	{
		const auto out = layer_norm({1.0, -1.0}, {1.0, 1.0}, {0.0, 0.0}, 1e-12);
		CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-6));
		CHECK(out[1] == doctest::Approx(-1.0).epsilon(1e-6));
	}
	SUBCASE("zero gain yields the shift everywhere")
	{
		const auto out = layer_norm({0.4, 7.0, -2.0}, {0.0, 0.0, 0.0},
		                            {0.25, 0.25, 0.25}, 1e-5);
		for (double v : out) CHECK(v == 0.25);
	}
	SUBCASE("rms variant")
	{
		// E[x^2] = 1 for (1,-1): output ~ x
		const auto out = rms_norm({1.0, -1.0}, {1.0, 1.0}, {0.0, 0.0}, 1e-12);
		CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-6));
		CHECK(out[1] == doctest::Approx(-1.0).epsilon(1e-6));
	}
}

TEST_CASE("single layer forward")
{
	SUBCASE("zero upstream, zero bias, no norm: silent")
	{
		Network net = tiny_net(1, 1, 1, NormKind::none);
		net.layers[0].weights(0, 0) = 1.0;
		net.layers[0].v_neuron(0, 0) = 1.0;
		NetworkState state(net, Transport::state_passthrough);
		Mat upstream(1, 1);
		layer_forward_step(net.layers[0], net.threshold, state.layers[0], upstream,
		                   false, nullptr, false);
		CHECK(state.layers[0].y[0] == 0.0);
		CHECK(state.layers[0].spikes[0] == 0);
	}
	SUBCASE("identity wiring passes the upstream estimate")
	{
		Network net = tiny_net(1, 1, 1, NormKind::none);
		net.layers[0].weights(0, 0) = 1.0;
		net.layers[0].v_neuron(0, 0) = 1.0;
		NetworkState state(net, Transport::state_passthrough);
		Mat upstream(1, 1);
		upstream(0, 0) = 0.5;
		layer_forward_step(net.layers[0], net.threshold, state.layers[0], upstream,
		                   false, nullptr, true);
		CHECK(state.layers[0].cache.pre[0] == doctest::Approx(0.5).epsilon(1e-15));
		CHECK(state.layers[0].y[0] == doctest::Approx(0.5).epsilon(1e-15));
	}
	SUBCASE("negative drive is rectified away")
	{
		Network net = tiny_net(1, 1, 1, NormKind::none);
		net.layers[0].weights(0, 0) = -1.0;
		net.layers[0].v_neuron(0, 0) = 1.0;
		NetworkState state(net, Transport::state_passthrough);
		Mat upstream(1, 1);
		upstream(0, 0) = 0.5;
		layer_forward_step(net.layers[0], net.threshold, state.layers[0], upstream,
		                   false, nullptr, true);
		CHECK(state.layers[0].cache.pre[0] == doctest::Approx(-0.5).epsilon(1e-15));
		CHECK(state.layers[0].y[0] == 0.0);
	}
}

TEST_CASE("input adapter")
{
	const auto rates = transfer_rates({4, 0.15, 0.1, 0.9, 1.0});

	SUBCASE("zero frames keep the banks at zero")
	{
		InputAdapter adapter(3, rates, 1.0);
		const std::vector<double> frame{0.0, 0.0, 0.0};
		const Mat &out = adapter.inject_step(frame.data());
		for (double v : out.a) CHECK(v == 0.0);
	}
	SUBCASE("counts land in bucket 0 scaled")
	{
		InputAdapter adapter(1, rates, 1.0);
		const std::vector<double> frame{3.0};
		const Mat &out = adapter.inject_step(frame.data());
		CHECK(out(0, 0) == 3.0);
		CHECK(out(0, 1) == 0.0);
	}
	SUBCASE("a single event reproduces the scaled impulse response")
	{
		InputAdapter adapter(1, rates, 2.5);
		const KernelTable table = impulse_response(rates, 50);
		std::vector<double> frame{1.0};
		for (int t = 0; t < 50; ++t) {
			const Mat &out = adapter.inject_step(frame.data());
			frame[0] = 0.0;
			for (int k = 0; k < 4; ++k) {
				CHECK(out(0, k) ==
				      doctest::Approx(2.5 * table.at(k, t)).epsilon(1e-12));
			}
		}
	}
}

TEST_CASE("network forward basics")
{
	SUBCASE("zero input, zero bias: no spontaneous activity")
	{
		Rng rng(3);
		for (int i = 0; i < 6; ++i) {
			Network net = sgtest::random_net(rng, i, 4, 3);
			for (DenseGammaLayer &layer : net.layers) {
				std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
				std::fill(layer.shift.begin(), layer.shift.end(), 0.0);
			}
			NetworkState state(net, Transport::state_passthrough);
			const std::vector<double> frame(4, 0.0);
			long spikes = 0;
			for (int t = 0; t < 40; ++t) {
				const StepResult res = network_forward_step(
				    net, state, frame.data(), false, nullptr,
				    Transport::state_passthrough, false);
				for (double y : res.y_out) CHECK(y >= 0.0);
				for (unsigned char s : *res.out_spikes) spikes += s;
			}
			for (long c : state.spike_counts) spikes += 0 * c;
			CHECK(spikes == 0);
			for (long c : state.spike_counts) CHECK(c == 0);
		}
	}
	SUBCASE("forward is reproducible without dropout")
	{
		Rng rng(5);
		Network net = sgtest::random_net(rng, 1, 5, 4);
		const Mat frames = sgtest::random_frames(rng, 30, 5);
		const auto run = [&]() {
			NetworkState state(net, Transport::state_passthrough);
			std::vector<double> all;
			for (int t = 0; t < frames.rows; ++t) {
				const StepResult res =
				    network_forward_step(net, state, frames.row(t), false, nullptr,
				                         Transport::state_passthrough, false);
				all.insert(all.end(), res.y_out.begin(), res.y_out.end());
			}
			return all;
		};
		CHECK(run() == run());
	}
}

TEST_CASE("per-synapse weights with equal rows reproduce per-neuron weights")
{
	Rng rng(17);
	Network neuron_net = tiny_net(3, 2, 4, NormKind::layer);
	init_parameters(neuron_net, rng);

	Network synapse_net = tiny_net(3, 2, 4, NormKind::layer,
	                               BucketLayout::per_synapse);
	synapse_net.layers[0].weights = neuron_net.layers[0].weights;
	synapse_net.layers[0].bias = neuron_net.layers[0].bias;
	synapse_net.layers[0].gain = neuron_net.layers[0].gain;
	synapse_net.layers[0].shift = neuron_net.layers[0].shift;
	for (int j = 0; j < 2; ++j) {
		for (int i = 0; i < 3; ++i) {
			for (int k = 0; k < 4; ++k) {
				synapse_net.layers[0].v_synapse(j, i, k) =
				    neuron_net.layers[0].v_neuron(j, k);
			}
		}
	}

	const Mat frames = sgtest::random_frames(rng, 60, 3);
	NetworkState sa(neuron_net, Transport::state_passthrough);
	NetworkState sb(synapse_net, Transport::state_passthrough);
	for (int t = 0; t < frames.rows; ++t) {
		const StepResult ra =
		    network_forward_step(neuron_net, sa, frames.row(t), false, nullptr,
		                         Transport::state_passthrough, false);
		const StepResult rb =
		    network_forward_step(synapse_net, sb, frames.row(t), false, nullptr,
		                         Transport::state_passthrough, false);
		for (int c = 0; c < 2; ++c) {
			CHECK(ra.y_out[c] == doctest::Approx(rb.y_out[c]).epsilon(1e-12));
			CHECK(ra.yhat_out[c] == doctest::Approx(rb.yhat_out[c]).epsilon(1e-12));
		}
	}
}

TEST_CASE("spike transport matches state pass-through")
{
	Rng rng(23);
	for (int i = 0; i < 8; ++i) {
		Network net = sgtest::random_net(rng, i, 4, 3);
		const int steps = 50;
		const Mat frames = sgtest::random_frames(rng, steps, 4);

		NetworkState ref(net, Transport::state_passthrough);
		NetworkState graded(net, Transport::graded_spikes);
		NetworkState binary(net, Transport::binary_spikes);
		for (int t = 0; t < steps; ++t) {
			const StepResult a =
			    network_forward_step(net, ref, frames.row(t), false, nullptr,
			                         Transport::state_passthrough, false);
			const StepResult b = network_forward_step(
			    net, graded, frames.row(t), false, nullptr,
			    Transport::graded_spikes, false);
			const StepResult c = network_forward_step(
			    net, binary, frames.row(t), false, nullptr,
			    Transport::binary_spikes, false);
			for (size_t j = 0; j < a.y_out.size(); ++j) {
				CHECK(std::abs(a.y_out[j] - b.y_out[j]) <= 1e-10);
				CHECK(std::abs(a.y_out[j] - c.y_out[j]) <= 1e-10);
			}
		}
	}
}

TEST_CASE("dropout zeroes and rescales in train mode only")
{
	Network net = tiny_net(1, 64, 1, NormKind::none);
	net.layers[0].spec.dropout = 0.5;
	for (int j = 0; j < 64; ++j) {
		net.layers[0].weights(j, 0) = 1.0;
		net.layers[0].v_neuron(j, 0) = 1.0;
	}
	Mat upstream(1, 1);
	upstream(0, 0) = 1.0;

	NetworkState state(net, Transport::state_passthrough);
	Rng rng(99);
	layer_forward_step(net.layers[0], net.threshold, state.layers[0], upstream,
	                   true, &rng, true);
	int kept = 0, dropped = 0;
	for (int j = 0; j < 64; ++j) {
		if (state.layers[0].y[j] == 0.0) {
			++dropped;
		} else {
			CHECK(state.layers[0].y[j] == doctest::Approx(2.0).epsilon(1e-12));
			++kept;
		}
	}
	CHECK(kept > 0);
	CHECK(dropped > 0);

	// eval mode: no mask, no rescale
	NetworkState eval_state(net, Transport::state_passthrough);
	layer_forward_step(net.layers[0], net.threshold, eval_state.layers[0],
	                   upstream, false, nullptr, false);
	for (int j = 0; j < 64; ++j) {
		CHECK(eval_state.layers[0].y[j] == doctest::Approx(1.0).epsilon(1e-12));
	}
}
