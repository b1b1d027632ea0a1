// Independent reference implementations the tests check against. These
// stay deliberately naive (all-pairs loops, literal pseudo-code) and must
// not share code with the library paths they verify.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/nn.hpp"

namespace oracles {

// AUC by counting all positive/negative pairs, 0.5 credit for ties.
inline double auc_allpairs(const std::vector<double>& scores,
                           const std::vector<int>& labels) {
  double num = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j])
        num += 1.0;
      else if (scores[i] == scores[j])
        num += 0.5;
    }
  }
  return num / static_cast<double>(pairs);
}

inline double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// KRUM scores and selection, straight from the definition.
inline std::pair<std::vector<double>, std::size_t> krum_bruteforce(
    const std::vector<std::vector<double>>& vs, std::size_t f) {
  const std::size_t n = vs.size();
  const std::size_t m = n - f - 2;
  std::vector<double> scores(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> ds;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) ds.push_back(sqdist(vs[i], vs[j]));
    std::sort(ds.begin(), ds.end());
    for (std::size_t k = 0; k < m; ++k) scores[i] += ds[k];
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (scores[i] < scores[best]) best = i;
  return {scores, best};
}

// Coordinate-wise trimmed mean from the definition.
inline std::vector<double> trimmed_mean_bruteforce(
    const std::vector<std::vector<double>>& vs, std::size_t k) {
  const std::size_t n = vs.size();
  const std::size_t d = vs.front().size();
  std::vector<double> out(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    for (const auto& v : vs) col.push_back(v[j]);
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (std::size_t i = k; i < n - k; ++i) s += col[i];
    out[j] = s / static_cast<double>(n - 2 * k);
  }
  return out;
}

// Extremes of pairwise squared distances by enumeration.
inline double pairwise_sqdist_bruteforce(const std::vector<std::vector<double>>& vs,
                                         bool want_max) {
  double best = want_max ? -1.0 : 1e300;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const double d = sqdist(vs[i], vs[j]);
      best = want_max ? std::max(best, d) : std::min(best, d);
    }
  return best;
}

// The gradient-scaling pseudo-code, simulated literally: start 0.001,
// end 1000, midpoint split on diff > G_dist, loop while |start-end| >
// 0.01. Records the full midpoint trace.
struct ScaleLoopTrace {
  std::vector<double> midpoints;
  std::vector<double> diffs;
  double last_mid = 0.0;
  double last_mid_diff = 0.0;
  double final_end = 0.0;
  bool any_feasible = false;
  double last_feasible_sf = 0.0;
  double last_feasible_diff = 0.0;
  int iterations = 0;
};

inline ScaleLoopTrace scale_loop_sim(const std::vector<double>& g_hat,
                                     const std::vector<double>& mu, double g_dist) {
  ScaleLoopTrace tr;
  double start = 0.001, end = 1000.0;
  while (std::abs(start - end) > 0.01) {
    const double sf = (start + end) / 2.0;
    std::vector<double> scaled(g_hat.size());
    for (std::size_t i = 0; i < g_hat.size(); ++i) scaled[i] = sf * g_hat[i];
    const double diff = sqdist(scaled, mu);
    tr.midpoints.push_back(sf);
    tr.diffs.push_back(diff);
    if (diff > g_dist) {
      start = sf;
    } else {
      end = sf;
      tr.any_feasible = true;
      tr.last_feasible_sf = sf;
      tr.last_feasible_diff = diff;
    }
    tr.last_mid = sf;
    tr.last_mid_diff = diff;
    ++tr.iterations;
  }
  tr.final_end = end;
  return tr;
}

// Central finite differences of the mean cross-entropy at the model's
// parameters (sign applied by the caller).
inline std::vector<double> finite_diff_grad(const fedsim::ModelState& state,
                                            const fedsim::Batch& batch, double h) {
  std::vector<double> g(state.params.size());
  fedsim::ModelState probe = state;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double orig = probe.params[i];
    probe.params[i] = orig + h;
    const double up = fedsim::loss_and_grad(probe, batch, +1).loss;
    probe.params[i] = orig - h;
    const double down = fedsim::loss_and_grad(probe, batch, +1).loss;
    probe.params[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace oracles
