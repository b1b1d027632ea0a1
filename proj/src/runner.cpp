#include "fedsim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fedsim {

const char* const kRunCsvHeader =
    "round,test_auc,defense,attack,selected_or_weights,threshold,"
    "achieved_sq_dist,sf,fallback_used,wallclock_s";
const char* const kSummaryCsvHeader = "attack,defense,median_auc,min_auc,max_auc,seeds";

namespace {

std::string fmt(const char* spec, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, x);
  return std::string(buf);
}

AttackKind parse_attack_name(const std::string& name) {
  for (AttackKind k : {AttackKind::kNone, AttackKind::kDisbelieve, AttackKind::kLie,
                       AttackKind::kMinMax, AttackKind::kNoise, AttackKind::kScale,
                       AttackKind::kLabelFlip})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown attack '" + name + "'");
}

DefenseKind parse_defense_name(const std::string& name) {
  for (DefenseKind k : {DefenseKind::kFedAvg, DefenseKind::kKrum,
                        DefenseKind::kTrimmedMean, DefenseKind::kDos})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown defense '" + name + "'");
}

}  // namespace

std::string format_round_csv(const RoundRecord& rec) {
  std::string row = std::to_string(rec.round);
  row += "," + fmt("%.6f", rec.test_auc);
  row += ",";
  row += to_string(rec.defense);
  row += ",";
  row += to_string(rec.attack);
  row += ",";
  if (rec.selected) {
    row += std::to_string(*rec.selected);
  } else {
    for (std::size_t i = 0; i < rec.weights.size(); ++i)
      row += (i ? ";" : "") + fmt("%.6g", rec.weights[i]);
  }
  row += ",";
  if (rec.attack_diag) row += fmt("%.9g", rec.attack_diag->threshold);
  row += ",";
  if (rec.attack_diag) row += fmt("%.9g", rec.attack_diag->achieved_sq_dist);
  row += ",";
  if (rec.attack_diag && rec.attack_diag->sf) row += fmt("%.9g", *rec.attack_diag->sf);
  row += ",";
  if (rec.attack_diag && rec.attack_diag->fallback_used)
    row += *rec.attack_diag->fallback_used ? "1" : "0";
  row += ",";
  row += fmt("%.3f", rec.wallclock_s);
  return row;
}

namespace {

struct RunOutput {
  std::string csv_path;
  double final_auc = 0.0;
  bool failed = false;
  std::string error;
};

RunOutput run_to_csv(const ExperimentConfig& cfg, const std::string& out_dir,
                     bool dump_params) {
  RunOutput out;
  const std::string stem = "run_" + config_hash(cfg) + "_" + std::to_string(cfg.seed);
  out.csv_path = out_dir + "/" + stem + ".csv";
  try {
    std::filesystem::create_directories(out_dir);
    std::ofstream os(out.csv_path);
    if (!os) throw std::runtime_error("cannot open " + out.csv_path);
    os << kRunCsvHeader << "\n";
    const ExperimentResult result = run_experiment_full(
        cfg, [&](const RoundRecord& rec) { os << format_round_csv(rec) << "\n"; });
    out.final_auc = result.records.back().test_auc;
    if (dump_params)
      dump_paramvec_file(out_dir + "/" + stem + "_params.txt", result.final_params);
  } catch (const std::exception& e) {
    out.failed = true;
    out.error = e.what();
  }
  return out;
}

}  // namespace

int cmd_run(const ExperimentConfig& cfg, std::uint64_t seed,
            const std::string& out_dir, bool dump_params) {
  ExperimentConfig run_cfg = cfg;
  run_cfg.seed = seed;
  try {
    run_cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  const RunOutput out = run_to_csv(run_cfg, out_dir, dump_params);
  if (out.failed) {
    std::fprintf(stderr, "error: %s\n", out.error.c_str());
    return 1;
  }
  std::printf("final_auc %.6f\n", out.final_auc);
  std::printf("csv %s\n", out.csv_path.c_str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& base_cfg, const SweepOptions& opts) {
  if (opts.attacks.empty() || opts.defenses.empty() || opts.seeds.empty()) {
    std::fprintf(stderr, "error: sweep needs non-empty attacks, defenses and seeds\n");
    return 1;
  }

  std::vector<ExperimentConfig> jobs;
  try {
    for (const auto& attack : opts.attacks) {
      for (const auto& defense : opts.defenses) {
        for (std::uint64_t seed : opts.seeds) {
          ExperimentConfig cfg = base_cfg;
          cfg.attack.kind = parse_attack_name(attack);
          cfg.defense.kind = parse_defense_name(defense);
          cfg.seed = seed;
          cfg.validate();
          jobs.push_back(std::move(cfg));
        }
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  std::filesystem::create_directories(opts.out_dir);
  std::vector<RunOutput> outputs(jobs.size());
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.jobs, jobs.size()));
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      outputs[i] = run_to_csv(jobs[i], opts.out_dir, false);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  const std::string summary_path = opts.out_dir + "/summary.csv";
  std::ofstream os(summary_path);
  if (!os) {
    std::fprintf(stderr, "error: cannot open %s\n", summary_path.c_str());
    return 1;
  }
  os << kSummaryCsvHeader << "\n";
  std::string seed_list;
  for (std::size_t i = 0; i < opts.seeds.size(); ++i)
    seed_list += (i ? ";" : "") + std::to_string(opts.seeds[i]);

  std::size_t job_idx = 0;
  for (const auto& attack : opts.attacks) {
    for (const auto& defense : opts.defenses) {
      std::vector<double> aucs;
      bool failed = false;
      for (std::size_t s = 0; s < opts.seeds.size(); ++s, ++job_idx) {
        const RunOutput& out = outputs[job_idx];
        if (out.failed) {
          failed = true;
          std::fprintf(stderr, "sweep: %s/%s seed %llu failed: %s\n", attack.c_str(),
                       defense.c_str(),
                       static_cast<unsigned long long>(opts.seeds[s]), out.error.c_str());
        } else {
          aucs.push_back(out.final_auc);
        }
      }
      os << attack << "," << defense << ",";
      if (failed || aucs.empty()) {
        os << "error,error,error," << seed_list << "\n";
        continue;
      }
      std::sort(aucs.begin(), aucs.end());
      const std::size_t m = aucs.size();
      const double median =
          m % 2 ? aucs[m / 2] : 0.5 * (aucs[m / 2 - 1] + aucs[m / 2]);
      os << fmt("%.6f", median) << "," << fmt("%.6f", aucs.front()) << ","
         << fmt("%.6f", aucs.back()) << "," << seed_list << "\n";
    }
  }
  std::printf("summary %s\n", summary_path.c_str());
  return 0;
}

}  // namespace fedsim
