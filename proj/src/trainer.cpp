#include "sgamma/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sgamma/bptt_reference.hpp"

namespace sgamma {

namespace {

// stream tags keeping all derived RNG streams disjoint
constexpr uint64_t kTagInit = 0x11a17;
constexpr uint64_t kTagShuffle = 0x5bff1e;
constexpr uint64_t kTagDropout = 0xd2090;
constexpr uint64_t kTagTrainData = 0x7da1a;
constexpr uint64_t kTagTestData = 0x7e57;
constexpr uint64_t kTagSplit = 0x591c7;
constexpr uint64_t kTagEpoch = 0xe90c4;

LabeledSample load_event_sample(const ManifestEntry &entry, int frames,
                                int channel_downsample)
{
	const EventStream stream = read_event_file(entry.path);
	LabeledSample sample;
	sample.frames = bin_events(stream, frames);
	if (channel_downsample > 1) {
		sample.frames = downsample_channels(sample.frames, channel_downsample);
	}
	sample.label = entry.label;
	return sample;
}

}  // namespace

TaskData build_task_data(const RunConfig &cfg)
{
	TaskData data;
	const std::vector<double> alphas = transfer_rates(effective_kernel(cfg));
	const double theta0 = cfg.model.min_threshold;

	if (cfg.task.kind == "delay") {
		DelayTaskConfig dc{cfg.task.horizon, cfg.task.delay};
		data.train.push_back(gen_delay_task(dc, alphas, theta0));
		data.test = data.train;
		data.n_inputs = 1;
		data.n_outputs = 1;
		data.timing_task = true;
		data.target_time = cfg.task.delay;
	} else if (cfg.task.kind == "coincidence") {
		CoincidenceTaskConfig cc;
		cc.target_time = cfg.task.target_time;
		cc.jitter = cfg.task.jitter;
		cc.horizon = cfg.task.coincidence_horizon;
		cc.resolution = cfg.task.resolution;
		Rng train_rng(mix_seed(cfg.training.seed, kTagTrainData));
		Rng test_rng(mix_seed(cfg.training.seed, kTagTestData));
		data.train = gen_coincidence_task(cc, alphas, theta0,
		                                  cfg.task.train_per_class, train_rng);
		data.test = gen_coincidence_task(cc, alphas, theta0,
		                                 cfg.task.test_per_class, test_rng);
		data.n_inputs = 2;
		data.n_outputs = static_cast<int>(cc.pairs.size());
		data.timing_task = true;
		data.target_time = cfg.task.target_time * cfg.task.resolution;
	} else if (cfg.task.kind == "events") {
		if (cfg.task.manifest.empty()) {
			throw std::invalid_argument("events task: task.manifest is required");
		}
		const auto entries = read_manifest(cfg.task.manifest);
		for (const ManifestEntry &e : entries) {
			data.train.push_back(
			    load_event_sample(e, cfg.task.frames, cfg.task.channel_downsample));
		}
		if (!cfg.task.test_manifest.empty()) {
			for (const ManifestEntry &e : read_manifest(cfg.task.test_manifest)) {
				data.test.push_back(load_event_sample(e, cfg.task.frames,
				                                      cfg.task.channel_downsample));
			}
		} else {
			// deterministic 1-in-5 holdout
			std::vector<int> order(data.train.size());
			for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
			Rng split_rng(mix_seed(cfg.training.seed, kTagSplit));
			shuffle(order, split_rng);
			std::vector<LabeledSample> train, test;
			for (size_t i = 0; i < order.size(); ++i) {
				if (i % 5 == 0) {
					test.push_back(std::move(data.train[order[i]]));
				} else {
					train.push_back(std::move(data.train[order[i]]));
				}
			}
			data.train = std::move(train);
			data.test = std::move(test);
		}
		if (data.train.empty() || data.test.empty()) {
			throw std::runtime_error("events task: empty train or test set");
		}
		data.n_inputs = data.train.front().frames.channels();
		int max_label = 0;
		for (const auto &s : data.train) max_label = std::max(max_label, s.label);
		for (const auto &s : data.test) max_label = std::max(max_label, s.label);
		data.n_outputs = max_label + 1;
		data.timing_task = false;
	} else {
		throw std::invalid_argument("build_task_data: unknown task kind");
	}
	return data;
}

void parallel_for(int n, int workers, const std::function<void(int)> &fn)
{
	const int w = std::max(1, std::min(workers, n));
	if (w == 1) {
		for (int i = 0; i < n; ++i) fn(i);
		return;
	}
	std::vector<std::thread> pool;
	std::exception_ptr error;
	std::mutex error_mutex;
	pool.reserve(w);
	for (int t = 0; t < w; ++t) {
		pool.emplace_back([&, t]() {
			try {
				for (int i = t; i < n; i += w) fn(i);
			} catch (...) {
				std::lock_guard<std::mutex> lock(error_mutex);
				if (!error) error = std::current_exception();
			}
		});
	}
	for (std::thread &th : pool) th.join();
	if (error) std::rethrow_exception(error);
}

namespace {

struct SampleRun {
	Mat y_trace;      // T x classes
	Mat yhat_trace;   // T x classes
	std::vector<int> first_spike;
	long hidden_spikes = 0;
	long output_spikes = 0;
	double loss = 0.0;
	int prediction = -1;
};

/// Runs one sample through the network; optionally trains (backward per
/// step into `grads`). Decoding traces are always collected.
void run_sample(const Network &net, NetworkState &state,
                const LabeledSample &sample, const LossConfig &loss,
                bool train_mode, Rng *dropout_rng, GradientBuffers *grads,
                Transport transport, SampleRun &out)
{
	const int steps = sample.frames.steps();
	const int classes = net.outputs();
	if (out.y_trace.rows != steps || out.y_trace.cols != classes) {
		out.y_trace = Mat(steps, classes);
		out.yhat_trace = Mat(steps, classes);
	}
	out.first_spike.assign(classes, -1);
	out.loss = 0.0;

	state.reset();
	const bool backprop = grads != nullptr;
	for (int t = 0; t < steps; ++t) {
		const StepResult res =
		    network_forward_step(net, state, sample.frames.frames.row(t),
		                         train_mode, dropout_rng, transport, backprop);
		for (int c = 0; c < classes; ++c) {
			out.y_trace(t, c) = res.y_out[c];
			out.yhat_trace(t, c) = res.yhat_out[c];
			if ((*res.out_spikes)[c] && out.first_spike[c] < 0) {
				out.first_spike[c] = t;
			}
		}
		const double *target_row =
		    sample.has_target_trace() ? sample.target_trace.row(t) : nullptr;
		const StepLoss sl =
		    loss_step(loss, res.y_out, res.yhat_out, sample.label, target_row, t);
		out.loss += sl.value;
		if (backprop) {
			backward_step(net, state, sl.d_y_out, loss.gain_loss, *grads);
		}
	}
	out.loss /= steps;

	const size_t n_layers = net.layers.size();
	out.hidden_spikes = 0;
	for (size_t l = 0; l + 1 < n_layers; ++l) {
		out.hidden_spikes += state.spike_counts[l];
	}
	out.output_spikes = state.spike_counts[n_layers - 1];
}

int decode_prediction(const TaskData &data, const SampleRun &run)
{
	if (data.timing_task) {
		return ttfs_decode(run.first_spike, run.yhat_trace);
	}
	return sequence_classify(run.y_trace);
}

long hidden_neuron_count(const Network &net)
{
	long n = 0;
	for (size_t l = 0; l + 1 < net.layers.size(); ++l) {
		n += net.layers[l].spec.outputs;
	}
	return n;
}

}  // namespace

EvalResult evaluate(const Network &net, const TaskData &data,
                    const std::vector<LabeledSample> &samples,
                    Transport transport, int workers)
{
	const int n = static_cast<int>(samples.size());
	const int w = std::max(1, std::min(workers, n));
	EvalResult res;
	res.n_samples = n;

	std::vector<NetworkState> states;
	states.reserve(w);
	std::vector<SampleRun> runs(w);
	for (int i = 0; i < w; ++i) states.emplace_back(net, transport);

	std::vector<int> predictions(n);
	std::vector<long> spikes(n);
	std::vector<int> correct_first(n, -1);
	LossConfig dummy;  // evaluation never backprops; CE value unused
	dummy.kind = data.train.front().has_target_trace() ? LossKind::mse_on_yhat
	                                                   : LossKind::ce_per_step;

	const long n_hidden = hidden_neuron_count(net);
	parallel_for(n, w, [&](int i) {
		const int slot = i % w;
		SampleRun &run = runs[slot];
		run_sample(net, states[slot], samples[i], dummy, false, nullptr, nullptr,
		           transport, run);
		predictions[i] = decode_prediction(data, run);
		spikes[i] = n_hidden > 0 ? run.hidden_spikes : run.output_spikes;
		correct_first[i] = run.first_spike.empty()
		                       ? -1
		                       : run.first_spike[samples[i].label];
	});

	long correct = 0;
	for (int i = 0; i < n; ++i) {
		if (predictions[i] == samples[i].label) ++correct;
	}
	res.accuracy = static_cast<double>(correct) / n;
	res.density_scope = n_hidden > 0 ? "hidden" : "output";
	res.spike_density =
	    spike_density(spikes, n_hidden > 0 ? n_hidden
	                                       : static_cast<long>(net.outputs()));

	if (data.timing_task && data.target_time >= 0) {
		double err_sum = 0.0;
		for (int i = 0; i < n; ++i) {
			if (correct_first[i] >= 0) {
				err_sum += std::abs(correct_first[i] - data.target_time);
				++res.n_timed;
			} else {
				++res.n_silent;
			}
		}
		res.mean_timing_error = res.n_timed > 0 ? err_sum / res.n_timed : -1.0;
	}
	return res;
}

std::string EvalResult::to_json_text(uint64_t config_hash, uint64_t seed) const
{
	nlohmann::json j{{"metrics_version", 1},
	                 {"n_samples", n_samples},
	                 {"accuracy", accuracy},
	                 {"spike_density", spike_density},
	                 {"density_scope", density_scope},
	                 {"seed", seed}};
	char hash_hex[32];
	std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
	              static_cast<unsigned long long>(config_hash));
	j["config_hash"] = hash_hex;
	if (mean_timing_error >= 0.0) {
		j["mean_timing_error"] = mean_timing_error;
		j["n_timed"] = n_timed;
		j["n_silent"] = n_silent;
	}
	return j.dump(2) + "\n";
}

namespace {

void write_metrics_row(std::ofstream &os, const EpochMetrics &m)
{
	os << m.epoch << ',' << format_double(m.train_loss) << ','
	   << format_double(m.train_acc) << ',' << format_double(m.test_acc) << ','
	   << format_double(m.spike_density) << ',' << format_double(m.lr) << '\n';
	os.flush();  // every row is visible before the next epoch starts
}

void save_run_checkpoint(const RunConfig &cfg, const Network &net,
                         const Optimizer &optimizer, const TaskData &data,
                         int epoch, const std::string &path)
{
	Checkpoint ck;
	ck.config = cfg;
	ck.n_inputs = data.n_inputs;
	ck.n_outputs = data.n_outputs;
	ck.epoch = epoch;
	Rng next_epoch_rng(mix_seed(cfg.training.seed, kTagEpoch,
	                            static_cast<uint64_t>(epoch) + 1));
	ck.rng_state = next_epoch_rng.serialize();
	ck.net = net;
	ck.has_optimizer = true;
	ck.optimizer_steps = optimizer.steps();
	ck.moment1 = optimizer.moment1();
	ck.moment2 = optimizer.moment2();
	const std::string tmp = path + ".tmp";
	save_checkpoint(ck, tmp);
	std::filesystem::rename(tmp, path);
}

void write_bucket_weight_history(const std::vector<std::vector<double>> &history,
                                 int buckets, const std::string &path)
{
	std::ofstream os(path);
	os << "epoch,layer,k,value\n";
	for (size_t e = 0; e < history.size(); ++e) {
		const std::vector<double> &row = history[e];
		for (size_t i = 0; i < row.size(); ++i) {
			const int layer = static_cast<int>(i) / buckets;
			const int k = static_cast<int>(i) % buckets;
			os << e << ',' << layer << ',' << k << ',' << format_double(row[i])
			   << '\n';
		}
	}
}

TrainResult run_training_bptt(const RunConfig &cfg, TaskData &data,
                              Network &net, std::ofstream &metrics,
                              const std::string &out_dir);

}  // namespace

TrainResult run_training(const RunConfig &cfg_in, const TrainOptions &opts)
{
	RunConfig cfg = cfg_in;
	if (opts.seed_override) cfg.training.seed = *opts.seed_override;
	cfg.validate();

	const std::string out_dir = opts.out_dir.empty() ? "." : opts.out_dir;
	std::filesystem::create_directories(out_dir);

	TaskData data = build_task_data(cfg);
	Network net = build_run_network(cfg, data.n_inputs, data.n_outputs);
	Rng init_rng(mix_seed(cfg.training.seed, kTagInit));
	init_parameters(net, init_rng);
	if (cfg.model.unit_weights) {
		for (DenseGammaLayer &layer : net.layers) {
			layer.weights.fill(1.0);
			std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
		}
	}
	if (cfg.model.bucket_init == "half-normal") {
		for (DenseGammaLayer &layer : net.layers) {
			for (double &v : layer.v_neuron.a) v = std::abs(v);
			for (double &v : layer.v_synapse.a) v = std::abs(v);
		}
	}

	TrainResult result;
	result.metrics_path = out_dir + "/metrics.csv";
	result.checkpoint_path = out_dir + "/checkpoint.sgck";
	std::ofstream metrics(result.metrics_path);
	if (!metrics) {
		throw std::runtime_error("run_training: cannot write " +
		                         result.metrics_path);
	}
	metrics << "epoch,train_loss,train_acc,test_acc,spike_density,lr\n";
	metrics.flush();

	if (cfg.training.method == "bptt-sg") {
		return run_training_bptt(cfg, data, net, metrics, out_dir);
	}

	const LossConfig loss = loss_config(cfg.training);
	Optimizer optimizer(net, optimizer_config(cfg.training));

	const int n_train = static_cast<int>(data.train.size());
	const int batch_size = std::min(cfg.training.batch_size, n_train);
	const int workers = std::max(1, opts.workers);
	const int slots = std::min(batch_size, n_train);

	std::vector<NetworkState> states;
	std::vector<GradientBuffers> slot_grads;
	std::vector<SampleRun> runs(slots);
	states.reserve(slots);
	for (int i = 0; i < slots; ++i) {
		states.emplace_back(net, Transport::state_passthrough);
		slot_grads.push_back(GradientBuffers::like(net));
	}
	GradientBuffers batch_grads = GradientBuffers::like(net);

	const bool track_buckets =
	    cfg.task.kind == "delay" &&
	    net.layers[0].spec.bucket_layout == BucketLayout::per_neuron;
	std::vector<std::vector<double>> bucket_history;

	std::vector<int> order(n_train);
	for (int i = 0; i < n_train; ++i) order[i] = i;

	for (int epoch = 0; epoch < cfg.training.epochs; ++epoch) {
		Rng shuffle_rng(mix_seed(cfg.training.seed, kTagShuffle,
		                         static_cast<uint64_t>(epoch)));
		shuffle(order, shuffle_rng);

		double loss_sum = 0.0;
		long correct = 0;
		for (int start = 0; start < n_train; start += batch_size) {
			const int n = std::min(batch_size, n_train - start);
			parallel_for(n, workers, [&](int bi) {
				const int index = order[start + bi];
				const LabeledSample &sample = data.train[index];
				Rng dropout_rng(mix_seed(cfg.training.seed, kTagDropout,
				                         static_cast<uint64_t>(epoch),
				                         static_cast<uint64_t>(index)));
				slot_grads[bi].zero();
				run_sample(net, states[bi], sample, loss, true, &dropout_rng,
				           &slot_grads[bi], Transport::state_passthrough, runs[bi]);
				runs[bi].prediction = decode_prediction(data, runs[bi]);
			});
			// ordered merge keeps results independent of the worker count
			batch_grads.zero();
			double batch_loss = 0.0;
			for (int bi = 0; bi < n; ++bi) {
				batch_grads.add(slot_grads[bi]);
				batch_loss += runs[bi].loss;
				if (runs[bi].prediction == data.train[order[start + bi]].label) {
					++correct;
				}
			}
			batch_grads.scale(1.0 / n);
			batch_loss /= n;
			if (!std::isfinite(batch_loss)) {
				throw std::runtime_error(
				    "run_training: non-finite loss at epoch " +
				    std::to_string(epoch) + ", batch starting at sample " +
				    std::to_string(start) + "; aborting");
			}
			loss_sum += batch_loss * n;
			optimizer.apply(net, batch_grads, epoch);
		}

		const EvalResult ev =
		    evaluate(net, data, data.test, Transport::state_passthrough, workers);

		EpochMetrics m;
		m.epoch = epoch;
		m.train_loss = loss_sum / n_train;
		m.train_acc = static_cast<double>(correct) / n_train;
		m.test_acc = ev.accuracy;
		m.spike_density = ev.spike_density;
		m.lr = optimizer.layer_lr(static_cast<int>(net.layers.size()) - 1,
		                          static_cast<int>(net.layers.size()), epoch);
		write_metrics_row(metrics, m);
		result.epochs.push_back(m);

		save_run_checkpoint(cfg, net, optimizer, data, epoch + 1,
		                    result.checkpoint_path);

		if (track_buckets) {
			std::vector<double> row;
			for (const DenseGammaLayer &layer : net.layers) {
				for (int k = 0; k < net.buckets(); ++k) {
					row.push_back(layer.v_neuron(0, k));
				}
			}
			bucket_history.push_back(std::move(row));
		}
	}

	if (cfg.training.epochs == 0) {
		Optimizer fresh(net, optimizer_config(cfg.training));
		save_run_checkpoint(cfg, net, fresh, data, 0, result.checkpoint_path);
	}
	if (track_buckets && !bucket_history.empty()) {
		write_bucket_weight_history(bucket_history, net.buckets(),
		                            out_dir + "/bucket_weights.csv");
	}

	result.final_test_acc =
	    result.epochs.empty() ? 0.0 : result.epochs.back().test_acc;

	// run summary
	{
		nlohmann::json j;
		j["metrics_version"] = 1;
		char hash_hex[32];
		std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
		              static_cast<unsigned long long>(cfg.hash()));
		j["config_hash"] = hash_hex;
		j["seed"] = cfg.training.seed;
		j["epochs"] = cfg.training.epochs;
		j["final_test_acc"] = result.final_test_acc;
		j["final_train_loss"] =
		    result.epochs.empty() ? 0.0 : result.epochs.back().train_loss;
		double best = 0.0;
		for (const EpochMetrics &m : result.epochs) best = std::max(best, m.test_acc);
		j["peak_test_acc"] = best;
		j["checkpoint"] = result.checkpoint_path;
		std::ofstream os(out_dir + "/summary.json");
		os << j.dump(2) << "\n";
	}
	return result;
}

namespace {

TrainResult run_training_bptt(const RunConfig &cfg, TaskData &data,
                              Network &net, std::ofstream &metrics,
                              const std::string &out_dir)
{
	TrainResult result;
	result.metrics_path = out_dir + "/metrics.csv";
	result.checkpoint_path = out_dir + "/checkpoint.sgck";

	SurrogateConfig surrogate{cfg.training.surrogate_slope};
	DelayBpttOptions bopts;
	bopts.epochs = cfg.training.epochs;
	bopts.optimizer = optimizer_config(cfg.training);
	const DelayBpttResult bp =
	    train_delay_bptt(net, data.train.front(), surrogate, bopts);

	// fold the trained bucket weights back into the network
	for (int k = 0; k < net.buckets(); ++k) {
		net.layers[0].v_neuron(0, k) = bp.v_hidden[k];
		net.layers[1].v_neuron(0, k) = bp.v_output[k];
	}

	Optimizer shadow(net, optimizer_config(cfg.training));
	const EvalResult ev =
	    evaluate(net, data, data.test, Transport::state_passthrough, 1);
	for (int epoch = 0; epoch < cfg.training.epochs; ++epoch) {
		EpochMetrics m;
		m.epoch = epoch;
		m.train_loss = bp.loss_history[epoch];
		m.train_acc = epoch + 1 == cfg.training.epochs ? ev.accuracy : 0.0;
		m.test_acc = m.train_acc;
		m.spike_density = epoch + 1 == cfg.training.epochs ? ev.spike_density : 0.0;
		m.lr = shadow.layer_lr(1, 2, epoch);
		write_metrics_row(metrics, m);
		result.epochs.push_back(m);
	}
	save_run_checkpoint(cfg, net, shadow, data, cfg.training.epochs,
	                    result.checkpoint_path);
	if (!bp.v_history.empty()) {
		write_bucket_weight_history(bp.v_history, net.buckets(),
		                            out_dir + "/bucket_weights.csv");
	}
	result.final_test_acc = ev.accuracy;
	return result;
}

}  // namespace

EvalResult run_eval(const std::string &checkpoint_path,
                    const std::string &test_manifest_override, int workers)
{
	Checkpoint ck = load_checkpoint(checkpoint_path);
	if (!test_manifest_override.empty()) {
		ck.config.task.test_manifest = test_manifest_override;
	}
	const TaskData data = build_task_data(ck.config);
	if (data.n_inputs != ck.n_inputs || data.n_outputs != ck.n_outputs) {
		throw std::runtime_error("run_eval: task shape does not match checkpoint");
	}
	return evaluate(ck.net, data, data.test, Transport::state_passthrough,
	                workers);
}

void run_trace(const std::string &checkpoint_path, int sample_index, int layer,
               const std::vector<int> &neurons, const std::string &out_dir)
{
	const Checkpoint ck = load_checkpoint(checkpoint_path);
	const TaskData data = build_task_data(ck.config);
	if (sample_index < 0 ||
	    sample_index >= static_cast<int>(data.test.size())) {
		throw std::out_of_range("run_trace: sample index out of range");
	}
	const Network &net = ck.net;
	if (layer < 0 || layer >= static_cast<int>(net.layers.size())) {
		throw std::out_of_range("run_trace: layer out of range");
	}
	for (int nidx : neurons) {
		if (nidx < 0 || nidx >= net.layers[layer].spec.outputs) {
			throw std::out_of_range("run_trace: neuron selector out of range");
		}
	}
	std::filesystem::create_directories(out_dir);

	const LabeledSample &sample = data.test[sample_index];
	const int steps = sample.frames.steps();
	NetworkState state(net, Transport::state_passthrough);
	state.reset();

	std::vector<std::ofstream> files;
	for (int nidx : neurons) {
		files.emplace_back(out_dir + "/trace_l" + std::to_string(layer) + "_n" +
		                   std::to_string(nidx) + ".csv");
		files.back() << "t,y,yhat,z,theta,spike\n";
	}
	for (int t = 0; t < steps; ++t) {
		network_forward_step(net, state, sample.frames.frames.row(t), false,
		                     nullptr, Transport::state_passthrough, false);
		const LayerState &ls = state.layers[layer];
		for (size_t f = 0; f < neurons.size(); ++f) {
			const int nidx = neurons[f];
			files[f] << t << ',' << format_double(ls.y[nidx]) << ','
			         << format_double(ls.neurons[nidx].yhat_prev) << ','
			         << format_double(ls.last_z[nidx]) << ','
			         << format_double(ls.last_theta[nidx]) << ','
			         << static_cast<int>(ls.spikes[nidx]) << '\n';
		}
	}

	const KernelTable table = impulse_response(net.alphas, steps);
	std::ofstream kf(out_dir + "/kernels.csv");
	write_kernel_csv(table, kf);
}

GradcheckResult run_gradcheck(const GradcheckOptions &opts)
{
	GradcheckResult result;
	const auto log = [&](const std::string &line) {
		if (opts.log) opts.log(line);
	};

	const auto check_net = [&](Network &net, const LabeledSample &sample,
	                           const LossConfig &loss, bool train_mode,
	                           uint64_t seed, const std::string &label) {
		FdOptions fd;
		fd.eps = opts.eps;
		fd.corrupt = opts.corrupt;
		fd.seed = seed;
		fd.train_mode = train_mode;
		const FdReport rep = frozen_trace_fd_check(net, sample, loss, fd);
		result.max_rel_err = std::max(result.max_rel_err, rep.max_rel_err);
		result.max_abs_err_zero =
		    std::max(result.max_abs_err_zero, rep.max_abs_err_zero);
		result.checked += rep.checked;
		result.kink_skipped += rep.kink_skipped;
		std::ostringstream line;
		line << label << ": checked " << rep.checked << ", kink-adjacent "
		     << rep.kink_skipped << ", max rel err " << rep.max_rel_err;
		log(line.str());
	};

	if (opts.config) {
		RunConfig cfg = *opts.config;
		Rng rng(mix_seed(opts.seed, 0xc0f1));
		const int inputs = 4, outputs = 3;
		Network net = build_network(cfg.model, inputs, outputs);
		init_parameters(net, rng);
		LabeledSample sample;
		const int steps = 16;
		sample.frames.frames = Mat(steps, inputs);
		for (double &v : sample.frames.frames.a) {
			v = rng.bernoulli(0.3) ? static_cast<double>(rng.below(3)) : 0.0;
		}
		sample.label = rng.below(outputs);
		LossConfig loss = loss_config(cfg.training);
		if (loss.kind == LossKind::mse_on_yhat) {
			sample.target_trace = Mat(steps, outputs);
			for (double &v : sample.target_trace.a) v = rng.uniform(0.0, 0.5);
		}
		check_net(net, sample, loss, cfg.model.dropout > 0.0, opts.seed,
		          "configured model");
	} else {
		Rng rng(mix_seed(opts.seed, 0xc0f1));
		for (int i = 0; i < opts.nets; ++i) {
			ModelConfig model;
			const int n_hidden_layers = 1 + rng.below(2);  // 2-3 layers total
			model.hidden.clear();
			for (int l = 0; l < n_hidden_layers; ++l) {
				model.hidden.push_back(2 + rng.below(31));  // <= 32 neurons
			}
			model.buckets = 1 + rng.below(10);  // K <= 10
			model.bucket_weights = (i % 2 == 0) ? "neuron" : "synapse";
			const int norm_pick = i % 4;
			model.norm = norm_pick == 0 ? "none"
			             : norm_pick == 1 ? "layer"
			             : norm_pick == 2 ? "rms"
			                              : "layer";
			model.norm_output = norm_pick == 3;
			model.dropout = (i % 5 == 4) ? 0.2 : 0.0;

			const int inputs = 2 + rng.below(7);
			const int outputs = 2 + rng.below(5);
			Network net = build_network(model, inputs, outputs);
			init_parameters(net, rng);

			LabeledSample sample;
			const int steps = 12 + rng.below(12);
			sample.frames.frames = Mat(steps, inputs);
			for (double &v : sample.frames.frames.a) {
				v = rng.bernoulli(0.3) ? static_cast<double>(1 + rng.below(2)) : 0.0;
			}
			sample.label = rng.below(outputs);

			LossConfig loss;
			const int loss_pick = i % 3;
			loss.kind = loss_pick == 0   ? LossKind::ce_per_step
			            : loss_pick == 1 ? LossKind::mse_on_yhat
			                             : LossKind::ce_warmup;
			if (loss.kind == LossKind::mse_on_yhat) {
				sample.target_trace = Mat(steps, outputs);
				for (double &v : sample.target_trace.a) v = rng.uniform(0.0, 0.5);
			}
			if (model.norm != "none" && i % 3 == 0) loss.gain_loss = 0.01;

			std::ostringstream label;
			label << "net " << i << " (layers " << (n_hidden_layers + 1) << ", K "
			      << model.buckets << ", " << model.bucket_weights << ", norm "
			      << model.norm << ")";
			check_net(net, sample, loss, model.dropout > 0.0,
			          mix_seed(opts.seed, 0xbead, i), label.str());
		}
	}

	result.pass = result.checked > 0 && result.max_rel_err <= 1e-6 &&
	              result.max_abs_err_zero <= 1e-9;
	return result;
}

}  // namespace sgamma
