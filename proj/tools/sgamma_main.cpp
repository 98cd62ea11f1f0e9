#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgamma/trainer.hpp"

namespace {

int env_workers()
{
	const char *v = std::getenv("SGAMMA_WORKERS");
	if (v == nullptr) return 1;
	const int n = std::atoi(v);
	return n > 0 ? n : 1;
}

std::vector<int> parse_neuron_list(const std::string &spec)
{
	std::vector<int> out;
	std::stringstream ss(spec);
	std::string item;
	while (std::getline(ss, item, ',')) {
		if (!item.empty()) out.push_back(std::stoi(item));
	}
	return out;
}

}  // namespace

int main(int argc, char **argv)
{
	CLI::App app{"SpikingGamma networks: gamma-kernel temporal memory with "
	             "sigma-delta spike coding and per-timestep training"};
	app.require_subcommand(1);

	std::string config_path, checkpoint_path, out_dir = ".", out_file;
	std::string test_manifest, neuron_spec = "0";
	uint64_t seed = 0;
	bool seed_set = false;
	int workers = env_workers();

	auto *train = app.add_subcommand("train", "train a model from a config file");
	train->add_option("--config", config_path, "run config (JSON)")->required();
	train->add_option("--out-dir", out_dir, "output directory");
	train->add_option("--seed", seed, "override the config seed")
	    ->each([&](const std::string &) { seed_set = true; });
	train->add_option("--workers", workers, "parallel sample workers");

	auto *eval = app.add_subcommand("eval", "evaluate a checkpoint on its task");
	eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")
	    ->required();
	eval->add_option("--test-manifest", test_manifest,
	                 "override the test manifest (events task)");
	eval->add_option("--out", out_file, "write the metrics JSON here too");
	eval->add_option("--workers", workers, "parallel sample workers");

	auto *density =
	    app.add_subcommand("density", "report spike density for a checkpoint");
	density->add_option("--checkpoint", checkpoint_path, "checkpoint file")
	    ->required();
	density->add_option("--workers", workers, "parallel sample workers");

	int gc_nets = 20;
	double gc_eps = 1e-5, gc_corrupt = 0.0;
	auto *gradcheck = app.add_subcommand(
	    "gradcheck", "verify analytic gradients against finite differences");
	gradcheck->add_option("--config", config_path,
	                      "check this model config instead of the battery");
	gradcheck->add_option("--nets", gc_nets, "number of random networks");
	gradcheck->add_option("--seed", seed, "battery seed")
	    ->each([&](const std::string &) { seed_set = true; });
	gradcheck->add_option("--eps", gc_eps, "finite-difference step");
	gradcheck->add_option("--corrupt", gc_corrupt,
	                      "shift analytic gradients (negative control)");

	int trace_sample = 0, trace_layer = -1;
	auto *trace =
	    app.add_subcommand("trace", "dump per-neuron signal traces to CSV");
	trace->add_option("--checkpoint", checkpoint_path, "checkpoint file")
	    ->required();
	trace->add_option("--sample", trace_sample, "test-sample index");
	trace->add_option("--layer", trace_layer, "layer index (-1 = output layer)");
	trace->add_option("--neurons", neuron_spec, "comma-separated neuron indices");
	trace->add_option("--out-dir", out_dir, "output directory");

	int kd_buckets = 10, kd_horizon = 300;
	double kd_exponent = 0.15, kd_start = 0.1, kd_end = 0.9;
	auto *kernel_dump =
	    app.add_subcommand("kernel-dump", "write impulse responses as CSV");
	kernel_dump->add_option("--buckets", kd_buckets, "number of buckets");
	kernel_dump->add_option("--rate-exponent", kd_exponent, "transfer-rate exponent");
	kernel_dump->add_option("--rate-base-start", kd_start, "linspace start");
	kernel_dump->add_option("--rate-base-end", kd_end, "linspace end");
	kernel_dump->add_option("--horizon", kd_horizon, "steps to tabulate");
	kernel_dump->add_option("--out", out_file, "output CSV (default stdout)");

	CLI11_PARSE(app, argc, argv);

	try {
		if (train->parsed()) {
			sgamma::RunConfig cfg = sgamma::RunConfig::load(config_path);
			sgamma::TrainOptions opts;
			opts.out_dir = out_dir;
			opts.workers = workers;
			if (seed_set) opts.seed_override = seed;
			const sgamma::TrainResult res = sgamma::run_training(cfg, opts);
			std::cout << "metrics: " << res.metrics_path << "\n"
			          << "checkpoint: " << res.checkpoint_path << "\n"
			          << "final test accuracy: " << res.final_test_acc << "\n";
		} else if (eval->parsed() || density->parsed()) {
			const sgamma::Checkpoint ck =
			    sgamma::load_checkpoint(checkpoint_path);
			const sgamma::EvalResult res =
			    sgamma::run_eval(checkpoint_path, test_manifest, workers);
			if (density->parsed()) {
				std::cout << "spike_density " << res.spike_density << " ("
				          << res.density_scope << ")\n";
			} else {
				const std::string text = res.to_json_text(
				    ck.config.hash(), ck.config.training.seed);
				std::cout << text;
				if (!out_file.empty()) {
					std::ofstream os(out_file);
					os << text;
				}
			}
		} else if (gradcheck->parsed()) {
			sgamma::GradcheckOptions opts;
			opts.nets = gc_nets;
			opts.eps = gc_eps;
			opts.corrupt = gc_corrupt;
			if (seed_set) opts.seed = seed;
			if (!config_path.empty()) {
				opts.config = sgamma::RunConfig::load(config_path);
			}
			opts.log = [](const std::string &line) { std::cout << line << "\n"; };
			const sgamma::GradcheckResult res = sgamma::run_gradcheck(opts);
			std::cout << "max relative error: " << res.max_rel_err << " over "
			          << res.checked << " parameters (" << res.kink_skipped
			          << " kink-adjacent excluded)\n"
			          << (res.pass ? "PASS" : "FAIL") << " (tolerance 1e-6)\n";
			return res.pass ? 0 : 1;
		} else if (trace->parsed()) {
			const sgamma::Checkpoint ck =
			    sgamma::load_checkpoint(checkpoint_path);
			const int layer = trace_layer < 0
			                      ? static_cast<int>(ck.net.layers.size()) - 1
			                      : trace_layer;
			sgamma::run_trace(checkpoint_path, trace_sample, layer,
			                  parse_neuron_list(neuron_spec), out_dir);
			std::cout << "traces written to " << out_dir << "\n";
		} else if (kernel_dump->parsed()) {
			sgamma::KernelConfig cfg{kd_buckets, kd_exponent, kd_start, kd_end,
			                         1.0};
			const sgamma::KernelTable table =
			    sgamma::impulse_response(sgamma::transfer_rates(cfg), kd_horizon);
			if (out_file.empty()) {
				sgamma::write_kernel_csv(table, std::cout);
			} else {
				std::ofstream os(out_file);
				sgamma::write_kernel_csv(table, os);
			}
		}
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 2;
	}
	return 0;
}
