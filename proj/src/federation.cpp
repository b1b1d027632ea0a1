#include "fedsim/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedsim/metrics.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

const char* to_string(DefenseKind k) {
  switch (k) {
    case DefenseKind::kFedAvg: return "fedavg";
    case DefenseKind::kKrum: return "krum";
    case DefenseKind::kTrimmedMean: return "trimmed_mean";
    case DefenseKind::kDos: return "dos";
  }
  return "?";
}

const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::kNone: return "none";
    case AttackKind::kDisbelieve: return "disbelieve";
    case AttackKind::kLie: return "lie";
    case AttackKind::kMinMax: return "min_max";
    case AttackKind::kNoise: return "noise";
    case AttackKind::kScale: return "scale";
    case AttackKind::kLabelFlip: return "label_flip";
  }
  return "?";
}

const char* to_string(UpdateKind k) {
  return k == UpdateKind::kParameters ? "parameters" : "gradients";
}

void ExperimentConfig::validate() const {
  if (n < 1) throw std::invalid_argument("n must satisfy n >= 1");
  if (2 * f >= n) throw std::invalid_argument("f must satisfy f < n/2");
  if (attack.kind != AttackKind::kNone && f < 2)
    throw std::invalid_argument("f must satisfy 2 <= f < n/2 when an attack is enabled");
  if (rounds < 1) throw std::invalid_argument("rounds must satisfy rounds >= 1");
  if (local_epochs < 1) throw std::invalid_argument("local_epochs must satisfy local_epochs >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must satisfy batch_size >= 1");
  if (!(lr_local > 0.0)) throw std::invalid_argument("lr_local must satisfy lr_local > 0");
  if (!(lr_server > 0.0)) throw std::invalid_argument("lr_server must satisfy lr_server > 0");
  if (defense.kind == DefenseKind::kKrum) {
    const std::size_t kf = defense.krum_f.value_or(f);
    if (n < kf + 3) throw std::invalid_argument("defense.krum_f must satisfy n >= krum_f + 3");
  }
  if (defense.kind == DefenseKind::kTrimmedMean) {
    const std::size_t tk = defense.trim_k.value_or(f);
    if (2 * tk >= n) throw std::invalid_argument("defense.trim_k must satisfy 2*trim_k < n");
  }
  if (defense.kind == DefenseKind::kDos && n < 3)
    throw std::invalid_argument("defense dos requires n >= 3");
  if (attack.kind == AttackKind::kDisbelieve) {
    if (mode == UpdateKind::kParameters && attack.max_epochs < 1)
      throw std::invalid_argument("attack.max_epochs must satisfy max_epochs >= 1");
    if (mode == UpdateKind::kGradients && attack.epochs < 1)
      throw std::invalid_argument("attack.epochs must satisfy epochs >= 1");
  }
  if (attack.kind == AttackKind::kNoise && attack.sigma < 0.0)
    throw std::invalid_argument("attack.sigma must satisfy sigma >= 0");
  if (hidden_sizes.empty())
    throw std::invalid_argument("model.hidden must name at least one hidden layer");
  if (data.kind == DataConfig::Kind::kBlobs) {
    if (data.blobs.classes < 2) throw std::invalid_argument("data.classes must satisfy classes >= 2");
    if (data.blobs.per_class < 1) throw std::invalid_argument("data.per_class must satisfy per_class >= 1");
    if (data.blobs.input_dim < 1) throw std::invalid_argument("data.input_dim must satisfy input_dim >= 1");
    if (!(data.blobs.spread > 0.0)) throw std::invalid_argument("data.spread must satisfy spread > 0");
  } else if (data.csv_path.empty()) {
    throw std::invalid_argument("data.csv_path is required when data.kind = csv");
  }
  if (data.partition == DataConfig::PartitionKind::kDirichlet && !(data.alpha > 0.0))
    throw std::invalid_argument("data.alpha must satisfy alpha > 0");
}

ModelSpec ExperimentConfig::model_spec() const {
  ModelSpec spec;
  const std::size_t in = data.kind == DataConfig::Kind::kBlobs
                             ? static_cast<std::size_t>(data.blobs.input_dim)
                             : 0;  // CSV input dim filled at init time
  spec.layer_sizes.push_back(in);
  for (std::size_t h : hidden_sizes) spec.layer_sizes.push_back(h);
  spec.layer_sizes.push_back(data.kind == DataConfig::Kind::kBlobs
                                 ? static_cast<std::size_t>(data.blobs.classes)
                                 : 0);
  return spec;
}

namespace {

ClientUpdate local_train(const Dataset& shard, const ParamVector& global_params,
                         const ExperimentConfig& cfg, int client_id, int round,
                         UpdateKind kind) {
  if (shard.size() == 0)
    throw std::invalid_argument("local_train: empty client shard");
  ModelState model = unflatten(
      ModelSpec{[&] {
        ModelSpec s = cfg.model_spec();
        s.layer_sizes.front() = shard.inputs.cols;
        s.layer_sizes.back() = static_cast<std::size_t>(shard.class_count);
        return s.layer_sizes;
      }()},
      global_params);

  OptimizerConfig oc;
  oc.kind = cfg.optimizer;
  oc.lr = cfg.lr_local;
  Optimizer opt(oc);

  auto eng = make_engine(mix_seed(cfg.seed, seed_tag::kClientShuffle,
                                  static_cast<std::uint64_t>(round),
                                  static_cast<std::uint64_t>(client_id)));
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t e = 0; e < cfg.local_epochs; ++e) {
    std::shuffle(order.begin(), order.end(), eng);
    for (std::size_t s = 0; s < order.size(); s += cfg.batch_size) {
      std::vector<std::size_t> idx(
          order.begin() + s, order.begin() + std::min(order.size(), s + cfg.batch_size));
      const Batch batch = shard.gather(idx);
      const LossGrad lg = loss_and_grad(model, batch, +1);
      opt.step(model.params, lg.grad);
    }
  }

  ClientUpdate u;
  u.client_id = client_id;
  u.kind = kind;
  u.num_samples = shard.size();
  if (kind == UpdateKind::kParameters) {
    u.vector = std::move(model.params);
  } else {
    u.vector.resize(global_params.size());
    for (std::size_t i = 0; i < u.vector.size(); ++i)
      u.vector[i] = (global_params[i] - model.params[i]) / cfg.lr_local;
  }
  return u;
}

Dataset concat_datasets(const std::vector<Dataset>& parts, std::size_t count) {
  Dataset out;
  std::size_t total = 0;
  for (std::size_t i = 0; i < count; ++i) total += parts[i].size();
  out.class_count = parts.front().class_count;
  out.inputs = Matrix(total, parts.front().inputs.cols);
  out.labels.reserve(total);
  std::size_t r = 0;
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t s = 0; s < parts[i].size(); ++s, ++r) {
      const double* src = parts[i].inputs.row(s);
      std::copy(src, src + parts[i].inputs.cols, out.inputs.row(r));
      out.labels.push_back(parts[i].labels[s]);
    }
  }
  return out;
}

double evaluate_auc(const ModelState& model, const Dataset& test) {
  const Matrix logits = forward_logits(model, test.as_batch());
  Matrix probs(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double* lr = logits.row(r);
    double m = lr[0];
    for (std::size_t c = 1; c < logits.cols; ++c) m = std::max(m, lr[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) sum += std::exp(lr[c] - m);
    for (std::size_t c = 0; c < logits.cols; ++c)
      probs.at(r, c) = std::exp(lr[c] - m) / sum;
  }
  return macro_ovr_auc(probs, test.labels);
}

}  // namespace

ClientUpdate local_train_params(const Dataset& shard, const ParamVector& global_params,
                                const ExperimentConfig& cfg, int client_id, int round) {
  return local_train(shard, global_params, cfg, client_id, round, UpdateKind::kParameters);
}

ClientUpdate local_train_grads(const Dataset& shard, const ParamVector& global_params,
                               const ExperimentConfig& cfg, int client_id, int round) {
  return local_train(shard, global_params, cfg, client_id, round, UpdateKind::kGradients);
}

FederationState init_federation(const ExperimentConfig& cfg) {
  cfg.validate();
  FederationState st;
  if (cfg.data.kind == DataConfig::Kind::kBlobs) {
    st.data = gen_blobs(cfg.data.blobs, cfg.seed);
  } else {
    st.data = stratified_split(load_csv(cfg.data.csv_path), cfg.seed);
  }
  st.partition = cfg.data.partition == DataConfig::PartitionKind::kIid
                     ? partition_iid(st.data.train, cfg.n, cfg.seed)
                     : partition_dirichlet(st.data.train, cfg.n, cfg.data.alpha, cfg.seed);
  st.shards.reserve(cfg.n);
  for (const auto& idx : st.partition.client_indices) {
    Dataset shard;
    shard.class_count = st.data.train.class_count;
    Batch b = st.data.train.gather(idx);
    shard.inputs = std::move(b.inputs);
    shard.labels = std::move(b.labels);
    st.shards.push_back(std::move(shard));
  }

  // Malicious clients poison their own data before any training happens.
  if (cfg.attack.kind == AttackKind::kLabelFlip) {
    for (std::size_t i = 0; i < cfg.f; ++i) {
      Batch flipped = label_flip(Batch{st.shards[i].inputs, st.shards[i].labels},
                                 st.shards[i].class_count);
      st.shards[i].labels = std::move(flipped.labels);
    }
  }

  ModelSpec spec = cfg.model_spec();
  spec.layer_sizes.front() = st.data.train.inputs.cols;
  spec.layer_sizes.back() = static_cast<std::size_t>(st.data.train.class_count);
  st.global_model = init_model(spec, cfg.seed);
  return st;
}

RoundRecord run_round(FederationState& state, const ExperimentConfig& cfg, int round_idx) {
  const auto t0 = std::chrono::steady_clock::now();
  const ParamVector& global = state.global_model.params;

  // 1. Everyone trains honestly. Empty shards are skipped with a warning.
  std::vector<ClientUpdate> updates;
  std::vector<ParamVector> final_params;  // parallel to updates
  updates.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    if (state.shards[i].size() == 0) {
      std::fprintf(stderr, "round %d: client %zu has no data, skipped\n", round_idx, i);
      continue;
    }
    ClientUpdate u = cfg.mode == UpdateKind::kParameters
                         ? local_train_params(state.shards[i], global, cfg,
                                              static_cast<int>(i), round_idx)
                         : local_train_grads(state.shards[i], global, cfg,
                                             static_cast<int>(i), round_idx);
    if (cfg.mode == UpdateKind::kGradients) {
      ParamVector fin(global.size());
      for (std::size_t k = 0; k < fin.size(); ++k)
        fin[k] = global[k] - cfg.lr_local * u.vector[k];
      final_params.push_back(std::move(fin));
    } else {
      final_params.push_back(u.vector);
    }
    updates.push_back(std::move(u));
  }
  if (updates.empty()) throw std::runtime_error("run_round: no client produced an update");

  // 2. Attack substitution on the controlled clients (ids 0..f-1).
  RoundRecord rec;
  rec.round = round_idx + 1;
  rec.defense = cfg.defense.kind;
  rec.attack = cfg.attack.kind;

  const auto is_malicious = [&](const ClientUpdate& u) {
    return static_cast<std::size_t>(u.client_id) < cfg.f;
  };
  std::vector<std::size_t> mal_pos;
  for (std::size_t i = 0; i < updates.size(); ++i)
    if (is_malicious(updates[i])) mal_pos.push_back(i);

  switch (cfg.attack.kind) {
    case AttackKind::kNone:
    case AttackKind::kLabelFlip:
      break;  // label flip already poisoned the shards
    case AttackKind::kNoise:
      for (std::size_t p : mal_pos)
        updates[p].vector = gaussian_noise_attack(
            updates[p].vector, cfg.attack.sigma,
            mix_seed(cfg.seed, seed_tag::kNoise, static_cast<std::uint64_t>(round_idx),
                     static_cast<std::uint64_t>(updates[p].client_id)));
      break;
    case AttackKind::kScale:
      for (std::size_t p : mal_pos)
        updates[p].vector = scale_attack(updates[p].vector, cfg.attack.lambda);
      break;
    case AttackKind::kDisbelieve:
    case AttackKind::kLie:
    case AttackKind::kMinMax: {
      if (mal_pos.size() < 2)
        throw std::runtime_error("run_round: attack needs at least 2 malicious updates");
      AttackContext ctx;
      ctx.mode = cfg.mode;
      ctx.model_spec = state.global_model.spec;
      for (std::size_t p : mal_pos) {
        ctx.malicious_updates.push_back(updates[p]);
        ctx.malicious_params.push_back(final_params[p]);
      }
      std::vector<Dataset> mal_shards;
      for (std::size_t i = 0; i < cfg.f; ++i)
        if (state.shards[i].size() > 0) mal_shards.push_back(state.shards[i]);
      ctx.combined_data = concat_datasets(mal_shards, mal_shards.size());

      ParamVector poison;
      if (cfg.attack.kind == AttackKind::kLie) {
        poison = lie_attack(ctx, cfg.attack.z);
      } else if (cfg.attack.kind == AttackKind::kMinMax) {
        poison = min_max_attack(ctx, cfg.attack.direction);
      } else {
        AttackTrainConfig tc;
        tc.optimizer.kind = cfg.optimizer;
        tc.optimizer.lr = cfg.attack.lr.value_or(cfg.lr_local);
        tc.batch_size = cfg.batch_size;
        tc.max_epochs = cfg.attack.max_epochs;
        tc.epochs = cfg.attack.epochs;
        tc.seed = mix_seed(cfg.seed, seed_tag::kAttackTrain,
                           static_cast<std::uint64_t>(round_idx));
        if (cfg.mode == UpdateKind::kParameters) {
          auto [vec, diag] = disbelieve_params(ctx, tc);
          poison = std::move(vec);
          rec.attack_diag = diag;
        } else {
          try {
            auto [vec, diag] = disbelieve_grads(ctx, tc);
            poison = std::move(vec);
            rec.attack_diag = diag;
          } catch (const DegenerateAttackError&) {
            // Documented fallback: submit the mean malicious gradient.
            poison = *malicious_means(ctx).mu_grad;
            AttackDiagnostics diag;
            diag.threshold =
                pairwise_extreme_sqdist(ctx.malicious_params, PairExtreme::kMin);
            rec.attack_diag = diag;
          }
        }
      }
      for (std::size_t p : mal_pos) updates[p].vector = poison;
      break;
    }
  }

  // 3. Aggregate.
  AggregationOutcome agg;
  switch (cfg.defense.kind) {
    case DefenseKind::kFedAvg: agg = fedavg(updates); break;
    case DefenseKind::kKrum: agg = krum(updates, cfg.defense.krum_f.value_or(cfg.f)); break;
    case DefenseKind::kTrimmedMean:
      agg = trimmed_mean(updates, cfg.defense.trim_k.value_or(cfg.f));
      break;
    case DefenseKind::kDos: agg = dos_aggregate(updates); break;
  }

  // 4. Global update.
  if (cfg.mode == UpdateKind::kParameters) {
    state.global_model.params = agg.aggregate;
  } else {
    for (std::size_t i = 0; i < state.global_model.params.size(); ++i)
      state.global_model.params[i] -= cfg.lr_server * agg.aggregate[i];
  }
  if (!all_finite(state.global_model.params))
    throw std::runtime_error("run_round: global model became non-finite");

  // 5. Evaluate and record.
  rec.test_auc = evaluate_auc(state.global_model, state.data.test);
  rec.selected = agg.selected;
  rec.weights = std::move(agg.weights);
  rec.wallclock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<RoundRecord> run_experiment(const ExperimentConfig& cfg, const RecordSink& sink) {
  return run_experiment_full(cfg, sink).records;
}

ExperimentResult run_experiment_full(const ExperimentConfig& cfg, const RecordSink& sink) {
  FederationState state = init_federation(cfg);
  ExperimentResult result;
  result.records.reserve(cfg.rounds);
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    RoundRecord rec = run_round(state, cfg, static_cast<int>(r));
    if (sink) sink(rec);
    result.records.push_back(std::move(rec));
  }
  result.final_params = state.global_model.params;
  return result;
}

}  // namespace fedsim
