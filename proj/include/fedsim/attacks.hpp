#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/data.hpp"
#include "fedsim/nn.hpp"

namespace fedsim {

// What the attacker holds after the controlled clients trained honestly:
// their submissions, their post-training model parameters, and all of
// their training data. Requires f >= 2 (the thresholds are pairwise).
struct AttackContext {
  std::vector<ClientUpdate> malicious_updates;
  std::vector<ParamVector> malicious_params;
  Dataset combined_data;
  UpdateKind mode = UpdateKind::kParameters;
  ModelSpec model_spec;

  std::size_t attacker_count() const { return malicious_updates.size(); }
};

struct AttackDiagnostics {
  double mu_param_norm = 0.0;
  double mu_grad_norm = 0.0;
  double threshold = 0.0;        // P_dist or G_dist
  double achieved_sq_dist = 0.0;
  std::optional<double> sf;      // gradient attack only
  std::optional<bool> fallback_used;
  int training_steps = 0;
};

// Training budget for the malicious proxy model.
struct AttackTrainConfig {
  OptimizerConfig optimizer;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 5;  // parameter attack: cap on the bounded walk
  std::size_t epochs = 1;      // gradient attack: unbounded training length
  std::uint64_t seed = 0;
};

// Gradient attack cannot normalise a zero gradient; the caller falls back
// to submitting the malicious mean gradient.
struct DegenerateAttackError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MaliciousMeans {
  ParamVector mu_param;
  std::optional<ParamVector> mu_grad;  // gradient mode only
};

// Elementwise means of the controlled clients' parameters and (in
// gradient mode) of their submitted gradients.
MaliciousMeans malicious_means(const AttackContext& ctx);

enum class PairExtreme { kMax, kMin };

// Exact extreme of squared Euclidean distances over all unordered pairs.
double pairwise_extreme_sqdist(const std::vector<ParamVector>& vectors,
                               PairExtreme which);

// Bounded loss-maximisation on parameters: start the proxy model at the
// malicious mean, train on the combined data with the negated loss, and
// revert the first optimizer step that leaves the ball
// ||W - mu_param||^2 <= P_dist (P_dist = max pairwise squared distance
// between the controlled clients' parameters). The returned vector always
// satisfies the ball bound and is what every controlled client submits.
std::pair<ParamVector, AttackDiagnostics> disbelieve_params(
    const AttackContext& ctx, const AttackTrainConfig& train_cfg);

// Loss-maximisation on gradients: train the proxy unboundedly, take the
// gradient of the negated loss at the final model over the combined data,
// normalise it and scale by the factor found by binary_search_scale so it
// lands within G_dist (min pairwise squared distance between controlled
// clients' gradients) of the mean gradient whenever that is feasible.
// Throws DegenerateAttackError when the proxy gradient is exactly zero.
std::pair<ParamVector, AttackDiagnostics> disbelieve_grads(
    const AttackContext& ctx, const AttackTrainConfig& train_cfg);

struct ScaleSearchResult {
  double sf = 0.0;
  double diff = 0.0;
  bool fallback_used = false;
  int iterations = 0;
};

// Bisection for the scaling factor on [0.001, 1000] with tolerance 0.01,
// exactly as the pseudo-code runs it: midpoints with diff > G_dist raise
// the lower end, others lower the upper end. Returns the last midpoint
// kept as the upper end (the last feasible one). If no midpoint was
// feasible the loop cannot satisfy the bound (diff(sf) is a parabola, so
// it may be infeasible on the whole interval); then sf falls back to the
// clamped analytic minimiser <g_hat, mu_grad> and the result is flagged.
// Never needs more than 17 iterations.
ScaleSearchResult binary_search_scale(const ParamVector& g_hat,
                                      const ParamVector& mu_grad, double g_dist);

// mu - z*sigma per coordinate over the controlled clients' updates
// (population standard deviation).
ParamVector lie_attack(const AttackContext& ctx, double z);

enum class MinMaxDirection { kInverseUnit, kNegativeStd };

// Perturbs the mean update along -mu/||mu|| or -sigma and scales the
// perturbation by the largest gamma in [0, 1000] (bisection, tolerance
// 0.01) keeping the result within the maximum pairwise distance of the
// known updates (plain Euclidean distances throughout). A zero mean with
// the inverse-unit direction falls back to the negative-std direction.
ParamVector min_max_attack(const AttackContext& ctx, MinMaxDirection direction);

// update + N(0, sigma^2 I), deterministic in seed.
ParamVector gaussian_noise_attack(const ParamVector& update, double sigma,
                                  std::uint64_t seed);

ParamVector scale_attack(const ParamVector& update, double lambda);

// y <- (C-1) - y; inputs untouched.
Batch label_flip(const Batch& batch, int class_count);

}  // namespace fedsim
