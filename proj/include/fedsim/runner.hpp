#pragma once

#include <string>
#include <vector>

#include "fedsim/config.hpp"
#include "fedsim/federation.hpp"

namespace fedsim {

// Exact per-run CSV header, in column order.
extern const char* const kRunCsvHeader;
// Summary CSV header for sweeps.
extern const char* const kSummaryCsvHeader;

// One CSV row for a round record; non-applicable fields stay empty.
std::string format_round_csv(const RoundRecord& rec);

// Planned outputs of a run or sweep.
struct RunManifest {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::vector<std::string> run_csv_paths;
  std::string summary_path;  // sweeps only
};

// Executes one experiment, writes <out_dir>/run_<hash>_<seed>.csv, prints
// the final AUC to stdout. With dump_params also writes
// run_<hash>_<seed>_params.txt. Returns 0 on success, 1 on error (message
// on stderr).
int cmd_run(const ExperimentConfig& cfg, std::uint64_t seed,
            const std::string& out_dir, bool dump_params = false);

struct SweepOptions {
  std::vector<std::string> attacks;
  std::vector<std::string> defenses;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::size_t jobs = 1;
};

// Runs the attack x defense x seed matrix from a base config; each run
// writes its own CSV, then summary.csv gets one row per (attack, defense)
// with the median/min/max final AUC over seeds. A failed run marks its
// row 'error' and the sweep continues. Returns 0 if the sweep itself ran.
int cmd_sweep(const ExperimentConfig& base_cfg, const SweepOptions& opts);

}  // namespace fedsim
