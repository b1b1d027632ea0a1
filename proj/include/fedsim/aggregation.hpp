#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "fedsim/vecops.hpp"

namespace fedsim {

enum class UpdateKind { kParameters, kGradients };

// One client's per-round submission.
struct ClientUpdate {
  int client_id = 0;
  UpdateKind kind = UpdateKind::kParameters;
  ParamVector vector;
  std::size_t num_samples = 1;
};

// Result of one aggregation rule. weights always sum to 1 (one-hot for
// KRUM); scores carry the rule's per-client diagnostics (KRUM scores,
// COPOD outlier scores, retained-coordinate fractions).
struct AggregationOutcome {
  ParamVector aggregate;
  std::vector<double> weights;
  std::optional<int> selected;  // KRUM only
  std::vector<double> scores;
};

// Unweighted mean of all updates.
AggregationOutcome fedavg(const std::vector<ClientUpdate>& updates);

// Selects the single update with minimal summed squared distance to its
// m = n - f_assumed - 2 nearest neighbours; ties break to the lowest
// client index. Requires n >= f_assumed + 3.
AggregationOutcome krum(const std::vector<ClientUpdate>& updates, std::size_t f_assumed);

// Coordinate-wise mean after dropping the trim_k smallest and trim_k
// largest values per coordinate. Requires 2*trim_k < n. Reported weights
// are each client's share of retained coordinate slots (diagnostic only;
// the aggregate is not their weighted combination).
AggregationOutcome trimmed_mean(const std::vector<ClientUpdate>& updates,
                                std::size_t trim_k);

// COPOD outlier scores for the rows of an n x m feature matrix: per
// dimension, negative-log left/right-tail ECDF probabilities plus a
// skewness-corrected tail (right tail when the sample skewness is
// positive, left otherwise); score = max of the three sums over
// dimensions. ECDF values are >= 1/n so scores are finite.
std::vector<double> copod_scores(const std::vector<std::vector<double>>& features);

// Distance-based outlier suppression: COPOD on the rows of the pairwise
// Euclidean distance matrix and of the pairwise cosine distance matrix;
// per-client score = mean of the two, weights = softmax(-score),
// aggregate = weighted sum. Requires n >= 3. A zero vector has cosine
// distance 1 to any non-zero vector and 0 to another zero vector.
AggregationOutcome dos_aggregate(const std::vector<ClientUpdate>& updates);

}  // namespace fedsim
