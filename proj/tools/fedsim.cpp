#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/runner.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::vector<std::uint64_t> split_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& tok : split_csv(s)) out.push_back(std::stoull(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated-learning poisoning attack/defense simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::uint64_t seed = 1;
  bool dump_params = false;
  auto* run = app.add_subcommand("run", "Run one experiment and write a per-round CSV");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--seed", seed, "RNG seed (overrides the config)");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--dump-params", dump_params, "also dump the final parameter vector");

  std::string attacks = "none", defenses = "dos", seeds = "1";
  std::size_t jobs = 1;
  auto* sweep =
      app.add_subcommand("sweep", "Run an attack x defense x seed matrix with a summary");
  sweep->add_option("--config", config_path, "base experiment config file")->required();
  sweep->add_option("--attacks", attacks, "comma list of attack kinds");
  sweep->add_option("--defenses", defenses, "comma list of defense kinds");
  sweep->add_option("--seeds", seeds, "comma list of seeds");
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--jobs", jobs, "parallel worker slots");

  CLI11_PARSE(app, argc, argv);

  try {
    const fedsim::ExperimentConfig cfg = fedsim::parse_config_file(config_path);
    if (run->parsed()) {
      const std::uint64_t use_seed = run->count("--seed") ? seed : cfg.seed;
      return fedsim::cmd_run(cfg, use_seed, out_dir, dump_params);
    }
    fedsim::SweepOptions opts;
    opts.attacks = split_csv(attacks);
    opts.defenses = split_csv(defenses);
    opts.seeds = split_seeds(seeds);
    opts.out_dir = out_dir;
    opts.jobs = jobs;
    return fedsim::cmd_sweep(cfg, opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
