#include "sgamma/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sgamma {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json &obj, const std::string &section,
                         const std::set<std::string> &allowed)
{
	for (const auto &item : obj.items()) {
		if (!allowed.count(item.key())) {
			throw std::invalid_argument("config: unknown key \"" + item.key() +
			                            "\" in section \"" + section + "\"");
		}
	}
}

template <typename T>
void maybe(const json &obj, const char *key, T &out)
{
	if (obj.contains(key)) out = obj.at(key).get<T>();
}

json model_to_json(const ModelConfig &m)
{
	return json{{"hidden", m.hidden},
	            {"buckets", m.buckets},
	            {"rate_exponent", m.rate_exponent},
	            {"rate_base_start", m.rate_base_start},
	            {"rate_base_end", m.rate_base_end},
	            {"min_threshold", m.min_threshold},
	            {"adapt_scale", m.adapt_scale},
	            {"norm", m.norm},
	            {"norm_output", m.norm_output},
	            {"norm_eps", m.norm_eps},
	            {"dropout", m.dropout},
	            {"bucket_weights", m.bucket_weights},
	            {"input_scale", m.input_scale},
	            {"train_weights", m.train_weights},
	            {"train_bias", m.train_bias},
	            {"train_bucket_weights", m.train_bucket_weights},
	            {"unit_weights", m.unit_weights},
	            {"bucket_init", m.bucket_init}};
}

ModelConfig model_from_json(const json &obj)
{
	reject_unknown_keys(obj, "model",
	                    {"hidden", "buckets", "rate_exponent", "rate_base_start",
	                     "rate_base_end", "min_threshold", "adapt_scale", "norm",
	                     "norm_output", "norm_eps", "dropout", "bucket_weights",
	                     "input_scale", "train_weights", "train_bias",
	                     "train_bucket_weights", "unit_weights", "bucket_init"});
	ModelConfig m;
	maybe(obj, "hidden", m.hidden);
	maybe(obj, "buckets", m.buckets);
	maybe(obj, "rate_exponent", m.rate_exponent);
	maybe(obj, "rate_base_start", m.rate_base_start);
	maybe(obj, "rate_base_end", m.rate_base_end);
	maybe(obj, "min_threshold", m.min_threshold);
	maybe(obj, "adapt_scale", m.adapt_scale);
	maybe(obj, "norm", m.norm);
	maybe(obj, "norm_output", m.norm_output);
	maybe(obj, "norm_eps", m.norm_eps);
	maybe(obj, "dropout", m.dropout);
	maybe(obj, "bucket_weights", m.bucket_weights);
	maybe(obj, "input_scale", m.input_scale);
	maybe(obj, "train_weights", m.train_weights);
	maybe(obj, "train_bias", m.train_bias);
	maybe(obj, "train_bucket_weights", m.train_bucket_weights);
	maybe(obj, "unit_weights", m.unit_weights);
	maybe(obj, "bucket_init", m.bucket_init);
	return m;
}

json task_to_json(const TaskConfigSection &t)
{
	return json{{"kind", t.kind},
	            {"horizon", t.horizon},
	            {"delay", t.delay},
	            {"target_time", t.target_time},
	            {"jitter", t.jitter},
	            {"coincidence_horizon", t.coincidence_horizon},
	            {"resolution", t.resolution},
	            {"train_per_class", t.train_per_class},
	            {"test_per_class", t.test_per_class},
	            {"manifest", t.manifest},
	            {"test_manifest", t.test_manifest},
	            {"frames", t.frames},
	            {"channel_downsample", t.channel_downsample},
	            {"dt_ms", t.dt_ms}};
}

TaskConfigSection task_from_json(const json &obj)
{
	reject_unknown_keys(obj, "task",
	                    {"kind", "horizon", "delay", "target_time", "jitter",
	                     "coincidence_horizon", "resolution", "train_per_class",
	                     "test_per_class", "manifest", "test_manifest", "frames",
	                     "channel_downsample", "dt_ms"});
	TaskConfigSection t;
	maybe(obj, "kind", t.kind);
	maybe(obj, "horizon", t.horizon);
	maybe(obj, "delay", t.delay);
	maybe(obj, "target_time", t.target_time);
	maybe(obj, "jitter", t.jitter);
	maybe(obj, "coincidence_horizon", t.coincidence_horizon);
	maybe(obj, "resolution", t.resolution);
	maybe(obj, "train_per_class", t.train_per_class);
	maybe(obj, "test_per_class", t.test_per_class);
	maybe(obj, "manifest", t.manifest);
	maybe(obj, "test_manifest", t.test_manifest);
	maybe(obj, "frames", t.frames);
	maybe(obj, "channel_downsample", t.channel_downsample);
	maybe(obj, "dt_ms", t.dt_ms);
	return t;
}

json training_to_json(const TrainingConfig &t)
{
	return json{{"loss", t.loss},
	            {"warmup_scale", t.warmup_scale},
	            {"warmup_decay", t.warmup_decay},
	            {"gain_loss", t.gain_loss},
	            {"optimizer", t.optimizer},
	            {"lr", t.lr},
	            {"layer_factor", t.layer_factor},
	            {"schedule_step", t.schedule_step},
	            {"schedule_gamma", t.schedule_gamma},
	            {"epochs", t.epochs},
	            {"batch_size", t.batch_size},
	            {"seed", t.seed},
	            {"method", t.method},
	            {"surrogate_slope", t.surrogate_slope}};
}

TrainingConfig training_from_json(const json &obj)
{
	reject_unknown_keys(obj, "training",
	                    {"loss", "warmup_scale", "warmup_decay", "gain_loss",
	                     "optimizer", "lr", "layer_factor", "schedule_step",
	                     "schedule_gamma", "epochs", "batch_size", "seed",
	                     "method", "surrogate_slope"});
	TrainingConfig t;
	maybe(obj, "loss", t.loss);
	maybe(obj, "warmup_scale", t.warmup_scale);
	maybe(obj, "warmup_decay", t.warmup_decay);
	maybe(obj, "gain_loss", t.gain_loss);
	maybe(obj, "optimizer", t.optimizer);
	maybe(obj, "lr", t.lr);
	maybe(obj, "layer_factor", t.layer_factor);
	maybe(obj, "schedule_step", t.schedule_step);
	maybe(obj, "schedule_gamma", t.schedule_gamma);
	maybe(obj, "epochs", t.epochs);
	maybe(obj, "batch_size", t.batch_size);
	maybe(obj, "seed", t.seed);
	maybe(obj, "method", t.method);
	maybe(obj, "surrogate_slope", t.surrogate_slope);
	return t;
}

}  // namespace

std::string RunConfig::to_json_text() const
{
	const json j{{"model", model_to_json(model)},
	             {"task", task_to_json(task)},
	             {"training", training_to_json(training)}};
	return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json_text(const std::string &text)
{
	json j;
	try {
		j = json::parse(text);
	} catch (const json::parse_error &e) {
		throw std::invalid_argument(std::string("config: not valid JSON: ") +
		                            e.what());
	}
	reject_unknown_keys(j, "(root)", {"model", "task", "training"});
	RunConfig cfg;
	if (j.contains("model")) cfg.model = model_from_json(j.at("model"));
	if (j.contains("task")) cfg.task = task_from_json(j.at("task"));
	if (j.contains("training")) cfg.training = training_from_json(j.at("training"));
	cfg.validate();
	return cfg;
}

RunConfig RunConfig::load(const std::string &path)
{
	std::ifstream is(path);
	if (!is) {
		throw std::runtime_error("config: cannot open " + path);
	}
	std::ostringstream ss;
	ss << is.rdbuf();
	return from_json_text(ss.str());
}

void RunConfig::save(const std::string &path) const
{
	std::ofstream os(path);
	if (!os) {
		throw std::runtime_error("config: cannot write " + path);
	}
	os << to_json_text();
}

void RunConfig::validate() const
{
	if (task.kind != "delay" && task.kind != "coincidence" &&
	    task.kind != "events") {
		throw std::invalid_argument("config: task.kind must be delay, coincidence "
		                            "or events (got \"" + task.kind + "\")");
	}
	if (model.norm != "none" && model.norm != "layer" && model.norm != "rms") {
		throw std::invalid_argument("config: model.norm must be none, layer or rms");
	}
	if (model.bucket_weights != "neuron" && model.bucket_weights != "synapse") {
		throw std::invalid_argument(
		    "config: model.bucket_weights must be neuron or synapse");
	}
	if (model.bucket_init != "normal" && model.bucket_init != "half-normal") {
		throw std::invalid_argument(
		    "config: model.bucket_init must be normal or half-normal");
	}
	if (training.loss != "ce" && training.loss != "mse" &&
	    training.loss != "ce-warmup") {
		throw std::invalid_argument("config: training.loss must be ce, mse or "
		                            "ce-warmup");
	}
	if (training.optimizer != "adam" && training.optimizer != "sgd") {
		throw std::invalid_argument("config: training.optimizer must be adam or sgd");
	}
	if (training.method != "analytic" && training.method != "bptt-sg") {
		throw std::invalid_argument(
		    "config: training.method must be analytic or bptt-sg");
	}
	if (training.method == "bptt-sg" && task.kind != "delay") {
		throw std::invalid_argument(
		    "config: training.method bptt-sg is only available for the delay task");
	}
	if (training.epochs < 0 || training.batch_size < 1) {
		throw std::invalid_argument("config: bad epochs/batch_size");
	}
	KernelConfig k{model.buckets, model.rate_exponent, model.rate_base_start,
	               model.rate_base_end, task.dt_ms};
	k.validate();
	ThresholdConfig th{model.min_threshold,
	                   model.adapt_scale < 0 ? model.min_threshold
	                                         : model.adapt_scale};
	th.validate();
}

uint64_t RunConfig::hash() const { return fnv1a(to_json_text()); }

LossConfig loss_config(const TrainingConfig &cfg)
{
	LossConfig out;
	if (cfg.loss == "ce") {
		out.kind = LossKind::ce_per_step;
	} else if (cfg.loss == "mse") {
		out.kind = LossKind::mse_on_yhat;
	} else {
		out.kind = LossKind::ce_warmup;
	}
	out.warmup_scale = cfg.warmup_scale;
	out.warmup_decay = cfg.warmup_decay;
	out.gain_loss = cfg.gain_loss;
	return out;
}

OptimizerConfig optimizer_config(const TrainingConfig &cfg)
{
	OptimizerConfig out;
	out.kind = cfg.optimizer == "sgd" ? OptKind::sgd : OptKind::adam;
	out.base_lr = cfg.lr;
	out.layer_factor = cfg.layer_factor;
	out.schedule_step = cfg.schedule_step;
	out.schedule_gamma = cfg.schedule_gamma;
	return out;
}

KernelConfig effective_kernel(const RunConfig &cfg)
{
	KernelConfig kernel{cfg.model.buckets, cfg.model.rate_exponent,
	                    cfg.model.rate_base_start, cfg.model.rate_base_end,
	                    cfg.task.dt_ms};
	if (cfg.task.kind == "coincidence" && cfg.task.resolution > 1) {
		kernel = rescaled(kernel, 1.0 / cfg.task.resolution);
	}
	return kernel;
}

Network build_run_network(const RunConfig &cfg, int inputs, int outputs)
{
	Network net = build_network(cfg.model, inputs, outputs);
	net.kernel = effective_kernel(cfg);
	net.refresh_rates();
	return net;
}

Network build_network(const ModelConfig &cfg, int inputs, int outputs)
{
	Network net;
	net.kernel = KernelConfig{cfg.buckets, cfg.rate_exponent, cfg.rate_base_start,
	                          cfg.rate_base_end, 1.0};
	net.threshold =
	    ThresholdConfig{cfg.min_threshold, cfg.adapt_scale < 0
	                                           ? cfg.min_threshold
	                                           : cfg.adapt_scale};
	net.threshold.validate();
	net.input_injection_scale = cfg.input_scale;
	net.refresh_rates();

	const NormKind norm = cfg.norm == "layer"  ? NormKind::layer
	                      : cfg.norm == "rms" ? NormKind::rms
	                                          : NormKind::none;
	const BucketLayout layout = cfg.bucket_weights == "synapse"
	                                ? BucketLayout::per_synapse
	                                : BucketLayout::per_neuron;

	std::vector<int> widths;
	widths.push_back(inputs);
	for (int h : cfg.hidden) widths.push_back(h);
	widths.push_back(outputs);

	for (size_t l = 0; l + 1 < widths.size(); ++l) {
		const bool is_output = l + 2 == widths.size();
		LayerSpec spec;
		spec.inputs = widths[l];
		spec.outputs = widths[l + 1];
		spec.bucket_layout = layout;
		spec.norm = is_output ? (cfg.norm_output ? norm : NormKind::none) : norm;
		spec.norm_eps = cfg.norm_eps;
		spec.dropout = is_output ? 0.0 : cfg.dropout;
		spec.train_weights = cfg.train_weights;
		spec.train_bias = cfg.train_bias;
		spec.train_bucket_weights = cfg.train_bucket_weights;
		net.layers.push_back(make_dense_layer(spec, cfg.buckets));
	}
	return net;
}

}  // namespace sgamma
