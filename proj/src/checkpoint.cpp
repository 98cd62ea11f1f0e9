#include "sgamma/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace sgamma {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'C', 'K'};

void put_u32(std::ostream &os, uint32_t v)
{
	unsigned char b[4];
	for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
	os.write(reinterpret_cast<const char *>(b), 4);
}

void put_u64(std::ostream &os, uint64_t v)
{
	unsigned char b[8];
	for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
	os.write(reinterpret_cast<const char *>(b), 8);
}

uint32_t get_u32(std::istream &is)
{
	unsigned char b[4];
	is.read(reinterpret_cast<char *>(b), 4);
	uint32_t v = 0;
	for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
	return v;
}

uint64_t get_u64(std::istream &is)
{
	unsigned char b[8];
	is.read(reinterpret_cast<char *>(b), 8);
	uint64_t v = 0;
	for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
	return v;
}

void put_string(std::ostream &os, const std::string &s)
{
	put_u64(os, s.size());
	os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream &is)
{
	const uint64_t n = get_u64(is);
	std::string s(n, '\0');
	is.read(s.data(), static_cast<std::streamsize>(n));
	return s;
}

void put_doubles(std::ostream &os, const std::vector<double> &v)
{
	put_u64(os, v.size());
	for (double d : v) put_u64(os, std::bit_cast<uint64_t>(d));
}

void get_doubles(std::istream &is, std::vector<double> &v)
{
	const uint64_t n = get_u64(is);
	if (n != v.size()) {
		throw std::runtime_error("checkpoint: tensor size mismatch");
	}
	for (uint64_t i = 0; i < n; ++i) {
		v[i] = std::bit_cast<double>(get_u64(is));
	}
}

template <typename PutOrGet>
void walk_network_tensors(Network &net, PutOrGet &&fn)
{
	for (DenseGammaLayer &layer : net.layers) {
		fn(layer.weights.a);
		fn(layer.bias);
		fn(layer.v_neuron.a);
		fn(layer.v_synapse.a);
		fn(layer.gain);
		fn(layer.shift);
	}
}

template <typename PutOrGet>
void walk_grad_tensors(GradientBuffers &g, PutOrGet &&fn)
{
	for (LayerGrads &lg : g.layers) {
		fn(lg.d_weights.a);
		fn(lg.d_bias);
		fn(lg.d_v_neuron.a);
		fn(lg.d_v_synapse.a);
		fn(lg.d_gain);
		fn(lg.d_shift);
	}
}

}  // namespace

void save_checkpoint(const Checkpoint &ck, const std::string &path)
{
	std::ofstream os(path, std::ios::binary);
	if (!os) {
		throw std::runtime_error("save_checkpoint: cannot open " + path);
	}
	os.write(kMagic, 4);
	put_u32(os, kCheckpointVersion);
	put_string(os, ck.config.to_json_text());
	put_u32(os, static_cast<uint32_t>(ck.n_inputs));
	put_u32(os, static_cast<uint32_t>(ck.n_outputs));
	put_u32(os, static_cast<uint32_t>(ck.epoch));
	put_string(os, ck.rng_state);

	Network &net = const_cast<Network &>(ck.net);
	walk_network_tensors(net, [&](std::vector<double> &t) { put_doubles(os, t); });

	os.put(ck.has_optimizer ? 1 : 0);
	if (ck.has_optimizer) {
		put_u64(os, static_cast<uint64_t>(ck.optimizer_steps));
		GradientBuffers &m = const_cast<GradientBuffers &>(ck.moment1);
		GradientBuffers &v = const_cast<GradientBuffers &>(ck.moment2);
		walk_grad_tensors(m, [&](std::vector<double> &t) { put_doubles(os, t); });
		walk_grad_tensors(v, [&](std::vector<double> &t) { put_doubles(os, t); });
	}
	if (!os) {
		throw std::runtime_error("save_checkpoint: write failed: " + path);
	}
}

Checkpoint load_checkpoint(const std::string &path)
{
	std::ifstream is(path, std::ios::binary);
	if (!is) {
		throw std::runtime_error("load_checkpoint: cannot open " + path);
	}
	char magic[4];
	is.read(magic, 4);
	if (!is || std::memcmp(magic, kMagic, 4) != 0) {
		throw std::runtime_error("load_checkpoint: bad magic in " + path);
	}
	const uint32_t version = get_u32(is);
	if (version != kCheckpointVersion) {
		throw std::runtime_error("load_checkpoint: unsupported version " +
		                         std::to_string(version) + " in " + path);
	}
	Checkpoint ck;
	ck.config = RunConfig::from_json_text(get_string(is));
	ck.n_inputs = static_cast<int>(get_u32(is));
	ck.n_outputs = static_cast<int>(get_u32(is));
	ck.epoch = static_cast<int>(get_u32(is));
	ck.rng_state = get_string(is);

	ck.net = build_run_network(ck.config, ck.n_inputs, ck.n_outputs);
	walk_network_tensors(ck.net,
	                     [&](std::vector<double> &t) { get_doubles(is, t); });

	ck.has_optimizer = is.get() == 1;
	if (ck.has_optimizer) {
		ck.optimizer_steps = static_cast<int64_t>(get_u64(is));
		ck.moment1 = GradientBuffers::like(ck.net);
		ck.moment2 = GradientBuffers::like(ck.net);
		walk_grad_tensors(ck.moment1,
		                  [&](std::vector<double> &t) { get_doubles(is, t); });
		walk_grad_tensors(ck.moment2,
		                  [&](std::vector<double> &t) { get_doubles(is, t); });
	}
	if (!is) {
		throw std::runtime_error("load_checkpoint: truncated file: " + path);
	}
	return ck;
}

}  // namespace sgamma
