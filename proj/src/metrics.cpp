#include "fedsim/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace fedsim {

double roc_auc_binary(const std::vector<double>& scores,
                      const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw std::invalid_argument("roc_auc_binary: size mismatch or empty input");
  const std::size_t n = scores.size();
  std::size_t npos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw std::invalid_argument("roc_auc_binary: labels must be 0/1");
    npos += static_cast<std::size_t>(y);
  }
  const std::size_t nneg = n - npos;
  if (npos == 0 || nneg == 0)
    throw std::invalid_argument("roc_auc_binary: AUC undefined with a single class");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tie groups, then the rank-sum statistic.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
    i = j + 1;
  }
  const double np = static_cast<double>(npos);
  const double nn = static_cast<double>(nneg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double macro_ovr_auc(const Matrix& probabilities, const std::vector<int>& labels) {
  if (probabilities.rows != labels.size() || probabilities.rows == 0)
    throw std::invalid_argument("macro_ovr_auc: shape mismatch or empty input");
  const std::size_t C = probabilities.cols;
  double sum = 0.0;
  std::size_t used = 0;
  std::vector<double> col(probabilities.rows);
  std::vector<int> bin(probabilities.rows);
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t present = 0;
    for (std::size_t r = 0; r < probabilities.rows; ++r) {
      col[r] = probabilities.at(r, c);
      bin[r] = labels[r] == static_cast<int>(c) ? 1 : 0;
      present += static_cast<std::size_t>(bin[r]);
    }
    if (present == 0) {
      std::fprintf(stderr, "macro_ovr_auc: class %zu absent, skipped\n", c);
      continue;
    }
    if (present == probabilities.rows) {
      std::fprintf(stderr, "macro_ovr_auc: class %zu is the only class, skipped\n", c);
      continue;
    }
    sum += roc_auc_binary(col, bin);
    ++used;
  }
  if (used == 0)
    throw std::invalid_argument("macro_ovr_auc: no class with a defined AUC");
  return sum / static_cast<double>(used);
}

}  // namespace fedsim
