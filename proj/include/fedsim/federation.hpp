#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/attacks.hpp"
#include "fedsim/data.hpp"
#include "fedsim/nn.hpp"

namespace fedsim {

enum class DefenseKind { kFedAvg, kKrum, kTrimmedMean, kDos };
enum class AttackKind { kNone, kDisbelieve, kLie, kMinMax, kNoise, kScale, kLabelFlip };

const char* to_string(DefenseKind k);
const char* to_string(AttackKind k);
const char* to_string(UpdateKind k);

struct DefenseConfig {
  DefenseKind kind = DefenseKind::kDos;
  std::optional<std::size_t> krum_f;   // defaults to the experiment's f
  std::optional<std::size_t> trim_k;   // defaults to the experiment's f
};

struct AttackConfig {
  AttackKind kind = AttackKind::kNone;
  double z = 1.5;                      // lie
  MinMaxDirection direction = MinMaxDirection::kInverseUnit;
  double sigma = 1.0;                  // noise
  double lambda = -10.0;               // scale
  std::size_t max_epochs = 5;          // disbelieve on parameters
  std::size_t epochs = 1;              // disbelieve on gradients
  std::optional<double> lr;            // proxy-model lr; defaults to lr_local
};

struct DataConfig {
  enum class Kind { kBlobs, kCsv } kind = Kind::kBlobs;
  BlobsConfig blobs;
  std::string csv_path;
  enum class PartitionKind { kIid, kDirichlet } partition = PartitionKind::kIid;
  double alpha = 0.5;  // dirichlet
};

struct ExperimentConfig {
  std::size_t n = 10;
  std::size_t f = 4;
  std::size_t rounds = 1;
  UpdateKind mode = UpdateKind::kParameters;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 16;
  double lr_local = 0.01;
  double lr_server = 1.0;  // gradient mode only
  OptimizerKind optimizer = OptimizerKind::kSgd;
  DefenseConfig defense;
  AttackConfig attack;
  std::vector<std::size_t> hidden_sizes = {16};
  DataConfig data;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument naming the field
  ModelSpec model_spec() const;
};

struct RoundRecord {
  int round = 0;  // 1-based
  double test_auc = 0.0;
  DefenseKind defense = DefenseKind::kFedAvg;
  AttackKind attack = AttackKind::kNone;
  std::optional<int> selected;
  std::vector<double> weights;
  std::optional<AttackDiagnostics> attack_diag;
  double wallclock_s = 0.0;
};

// Honest local training. Parameters mode submits the final local weights;
// gradients mode submits (global - final) / lr_local, the accumulated
// update direction on gradient scale.
ClientUpdate local_train_params(const Dataset& shard, const ParamVector& global_params,
                                const ExperimentConfig& cfg, int client_id, int round);
ClientUpdate local_train_grads(const Dataset& shard, const ParamVector& global_params,
                               const ExperimentConfig& cfg, int client_id, int round);

// Mutable per-run state: the dataset, shards and the global model.
struct FederationState {
  SplitDataset data;
  Partition partition;
  std::vector<Dataset> shards;  // materialised client datasets
  ModelState global_model;
};

FederationState init_federation(const ExperimentConfig& cfg);

// One communication round: honest training by everyone, attack
// substitution on the first f clients, aggregation, global update and
// test evaluation.
RoundRecord run_round(FederationState& state, const ExperimentConfig& cfg, int round_idx);

using RecordSink = std::function<void(const RoundRecord&)>;

// Full experiment; records are streamed to the sink as produced (sink may
// be null). Returns all round records.
std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg,
                                        const RecordSink& sink = nullptr);

// Experiment plus final model parameters (for --dump-params).
struct ExperimentResult {
  std::vector<RoundRecord> records;
  ParamVector final_params;
};
ExperimentResult run_experiment_full(const ExperimentConfig& cfg,
                                     const RecordSink& sink = nullptr);

}  // namespace fedsim
