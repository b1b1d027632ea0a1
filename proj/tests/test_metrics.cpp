#include <cmath>
#include <random>

#include <doctest.h>

#include "fedsim/metrics.hpp"
#include "oracles.hpp"

using namespace fedsim;

TEST_CASE("perfect separation and full ties") {
  CHECK(roc_auc_binary({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(roc_auc_binary({0.5, 0.5}, {1, 0}) == doctest::Approx(0.5));
  CHECK(roc_auc_binary({0.1, 0.9}, {1, 0}) == doctest::Approx(0.0));
}

TEST_CASE("single class input is an error") {
  CHECK_THROWS_AS(roc_auc_binary({0.1, 0.2}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(roc_auc_binary({0.1, 0.2}, {0, 0}), std::invalid_argument);
}

TEST_CASE("matches the all-pairs oracle with ties") {
  std::mt19937_64 eng(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> quant(0, 9);
  std::uniform_int_distribution<int> lab(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 50 + static_cast<std::size_t>(trial) * 15;
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Quantised scores so tie groups actually occur.
      scores[i] = trial % 2 ? uni(eng) : quant(eng) / 10.0;
      labels[i] = lab(eng);
      pos |= labels[i] == 1;
      neg |= labels[i] == 0;
    }
    if (!pos || !neg) continue;
    const double fast = roc_auc_binary(scores, labels);
    const double slow = oracles::auc_allpairs(scores, labels);
    CHECK(std::abs(fast - slow) <= 1e-12);
  }
}

TEST_CASE("invariance and symmetry properties") {
  std::mt19937_64 eng(99);
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  std::vector<double> scores(80);
  std::vector<int> labels(80);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = uni(eng);
    labels[i] = i % 3 == 0 ? 1 : 0;
  }
  const double base = roc_auc_binary(scores, labels);

  // Strictly increasing transform leaves AUC unchanged.
  std::vector<double> warped(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) warped[i] = std::exp(3.0 * scores[i]) + 1.0;
  CHECK(roc_auc_binary(warped, labels) == doctest::Approx(base).epsilon(1e-12));

  // Complementing labels reflects the statistic.
  std::vector<int> flipped(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) flipped[i] = 1 - labels[i];
  CHECK(roc_auc_binary(scores, flipped) == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("macro OVR reduces to binary for two classes") {
  Matrix probs(4, 2);
  const std::vector<double> p1{0.9, 0.2, 0.7, 0.4};
  std::vector<int> labels{1, 0, 1, 0};
  for (std::size_t r = 0; r < 4; ++r) {
    probs.at(r, 0) = 1.0 - p1[r];
    probs.at(r, 1) = p1[r];
  }
  CHECK(macro_ovr_auc(probs, labels) ==
        doctest::Approx(roc_auc_binary(p1, labels)).epsilon(1e-12));
}

TEST_CASE("one-hot predictions score 1, uniform scores 0.5") {
  const std::vector<int> labels{0, 1, 2, 0, 1, 2};
  Matrix onehot(6, 3);
  for (std::size_t r = 0; r < 6; ++r) onehot.at(r, static_cast<std::size_t>(labels[r])) = 1.0;
  CHECK(macro_ovr_auc(onehot, labels) == doctest::Approx(1.0));

  Matrix uniform(6, 3);
  for (double& x : uniform.data) x = 1.0 / 3.0;
  CHECK(macro_ovr_auc(uniform, labels) == doctest::Approx(0.5));
}

TEST_CASE("absent classes are skipped, all-degenerate is an error") {
  Matrix probs(3, 3);
  for (double& x : probs.data) x = 1.0 / 3.0;
  probs.at(0, 0) = 0.5;
  const std::vector<int> two_of_three{0, 1, 0};  // class 2 absent
  CHECK_NOTHROW(macro_ovr_auc(probs, two_of_three));
  const std::vector<int> single{1, 1, 1};
  CHECK_THROWS_AS(macro_ovr_auc(probs, single), std::invalid_argument);
}
