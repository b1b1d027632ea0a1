#include "fedsim/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedsim {

namespace {

std::size_t check_updates(const std::vector<ClientUpdate>& updates,
                          std::size_t min_count, const char* who) {
  if (updates.size() < min_count)
    throw std::invalid_argument(std::string(who) + ": needs at least " +
                                std::to_string(min_count) + " updates");
  const std::size_t d = updates.front().vector.size();
  for (const auto& u : updates) {
    if (u.vector.size() != d)
      throw std::invalid_argument(std::string(who) + ": ragged update lengths");
    if (u.kind != updates.front().kind)
      throw std::invalid_argument(std::string(who) + ": mixed update kinds");
  }
  return d;
}

}  // namespace

AggregationOutcome fedavg(const std::vector<ClientUpdate>& updates) {
  const std::size_t d = check_updates(updates, 1, "fedavg");
  const std::size_t n = updates.size();
  AggregationOutcome out;
  out.aggregate.assign(d, 0.0);
  for (const auto& u : updates)
    for (std::size_t i = 0; i < d; ++i) out.aggregate[i] += u.vector[i];
  const double inv = 1.0 / static_cast<double>(n);
  for (double& x : out.aggregate) x *= inv;
  out.weights.assign(n, inv);
  return out;
}

AggregationOutcome krum(const std::vector<ClientUpdate>& updates, std::size_t f_assumed) {
  check_updates(updates, 1, "krum");
  const std::size_t n = updates.size();
  if (n < f_assumed + 3)
    throw std::invalid_argument("krum: needs n >= f + 3 (n=" + std::to_string(n) +
                                ", f=" + std::to_string(f_assumed) + ")");
  const std::size_t m = n - f_assumed - 2;

  AggregationOutcome out;
  out.scores.resize(n);
  std::vector<double> dists;
  dists.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    dists.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dists.push_back(sq_dist(updates[i].vector, updates[j].vector));
    std::nth_element(dists.begin(), dists.begin() + (m - 1), dists.end());
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += dists[k];
    out.scores[i] = s;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (out.scores[i] < out.scores[best]) best = i;  // ties keep lowest index
  out.selected = static_cast<int>(best);
  out.aggregate = updates[best].vector;
  out.weights.assign(n, 0.0);
  out.weights[best] = 1.0;
  return out;
}

AggregationOutcome trimmed_mean(const std::vector<ClientUpdate>& updates,
                                std::size_t trim_k) {
  const std::size_t d = check_updates(updates, 1, "trimmed_mean");
  const std::size_t n = updates.size();
  if (2 * trim_k >= n)
    throw std::invalid_argument("trimmed_mean: needs 2*trim_k < n (n=" +
                                std::to_string(n) + ", trim_k=" + std::to_string(trim_k) + ")");
  const std::size_t keep = n - 2 * trim_k;

  AggregationOutcome out;
  out.aggregate.assign(d, 0.0);
  std::vector<double> retained(n, 0.0);  // coordinate slots kept per client
  std::vector<std::pair<double, std::size_t>> col(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = {updates[i].vector[j], i};
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (std::size_t k = trim_k; k < n - trim_k; ++k) {
      s += col[k].first;
      retained[col[k].second] += 1.0;
    }
    out.aggregate[j] = s / static_cast<double>(keep);
  }
  // Diagnostic weights: fraction of retained slots owned by each client.
  out.weights.resize(n);
  const double total = static_cast<double>(d * keep);
  for (std::size_t i = 0; i < n; ++i) out.weights[i] = retained[i] / total;
  out.scores = retained;
  return out;
}

std::vector<double> copod_scores(const std::vector<std::vector<double>>& features) {
  const std::size_t n = features.size();
  if (n < 2) throw std::invalid_argument("copod_scores: needs n >= 2 rows");
  const std::size_t m = features.front().size();
  for (const auto& row : features)
    if (row.size() != m) throw std::invalid_argument("copod_scores: ragged rows");

  std::vector<double> left(n, 0.0), right(n, 0.0), skew_corr(n, 0.0);
  std::vector<double> col(n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = features[i][j];
    double mean = 0.0;
    for (double x : col) mean += x;
    mean /= static_cast<double>(n);
    double cubed = 0.0;
    for (double x : col) {
      const double dl = x - mean;
      cubed += dl * dl * dl;
    }
    const bool use_right = cubed > 0.0;  // sign of sample skewness
    auto sorted = col;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < n; ++i) {
      // F_left(x) = |{v <= x}|/n via upper_bound; F_right(x) = |{v >= x}|/n.
      const double cl = static_cast<double>(
          std::upper_bound(sorted.begin(), sorted.end(), col[i]) - sorted.begin());
      const double cr = static_cast<double>(
          sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), col[i]));
      const double nl = -std::log(cl / static_cast<double>(n));
      const double nr = -std::log(cr / static_cast<double>(n));
      left[i] += nl;
      right[i] += nr;
      skew_corr[i] += use_right ? nr : nl;
    }
  }
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i)
    scores[i] = std::max({left[i], right[i], skew_corr[i]});
  return scores;
}

AggregationOutcome dos_aggregate(const std::vector<ClientUpdate>& updates) {
  const std::size_t d = check_updates(updates, 3, "dos_aggregate");
  const std::size_t n = updates.size();

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) norms[i] = l2_norm(updates[i].vector);

  std::vector<std::vector<double>> euclid(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> cosine(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double de = l2_dist(updates[i].vector, updates[j].vector);
      euclid[i][j] = euclid[j][i] = de;
      double dc;
      if (norms[i] == 0.0 && norms[j] == 0.0)
        dc = 0.0;
      else if (norms[i] == 0.0 || norms[j] == 0.0)
        dc = 1.0;
      else
        dc = 1.0 - dot(updates[i].vector, updates[j].vector) / (norms[i] * norms[j]);
      cosine[i][j] = cosine[j][i] = dc;
    }
  }

  const std::vector<double> s_e = copod_scores(euclid);
  const std::vector<double> s_c = copod_scores(cosine);

  AggregationOutcome out;
  out.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.scores[i] = 0.5 * (s_e[i] + s_c[i]);

  // softmax(-score), shifted by the minimum score for stability.
  double smin = out.scores[0];
  for (double s : out.scores) smin = std::min(smin, s);
  out.weights.resize(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.weights[i] = std::exp(-(out.scores[i] - smin));
    z += out.weights[i];
  }
  for (double& w : out.weights) w /= z;

  out.aggregate.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.aggregate[j] += out.weights[i] * updates[i].vector[j];
  return out;
}

}  // namespace fedsim
