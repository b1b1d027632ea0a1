#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fedsim {

// Flat parameter/gradient/update vector. The universal currency between
// clients, attacks and aggregation rules.
using ParamVector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sq_norm(std::span<const double> a) { return dot(a, a); }

inline double l2_norm(std::span<const double> a) { return std::sqrt(sq_norm(a)); }

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double l2_dist(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(sq_dist(a, b));
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

// Elementwise mean of equally sized vectors.
inline ParamVector mean_vector(const std::vector<ParamVector>& vs) {
  if (vs.empty()) throw std::invalid_argument("mean_vector: empty input");
  ParamVector out(vs.front().size(), 0.0);
  for (const auto& v : vs) {
    if (v.size() != out.size())
      throw std::invalid_argument("mean_vector: ragged vector lengths");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(vs.size());
  for (double& x : out) x *= inv;
  return out;
}

}  // namespace fedsim
