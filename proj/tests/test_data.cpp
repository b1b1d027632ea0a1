#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <doctest.h>

#include "fedsim/data.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/nn.hpp"

using namespace fedsim;

namespace {

std::vector<std::size_t> class_counts(const Dataset& ds) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(ds.class_count), 0);
  for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

void check_partition_valid(const Partition& part, std::size_t n_rows) {
  std::set<std::size_t> seen;
  for (const auto& shard : part.client_indices) {
    CHECK(!shard.empty());
    for (std::size_t idx : shard) {
      CHECK(idx < n_rows);
      CHECK(seen.insert(idx).second);  // disjointness
    }
  }
}

}  // namespace

TEST_CASE("blobs are deterministic and stratified") {
  const BlobsConfig cfg{2, 100, 5, 1.0};
  const SplitDataset a = gen_blobs(cfg, 7);
  const SplitDataset b = gen_blobs(cfg, 7);
  CHECK(a.train.inputs.data == b.train.inputs.data);
  CHECK(a.test.labels == b.test.labels);

  CHECK(a.train.size() + a.test.size() == 200);
  const auto train_counts = class_counts(a.train);
  const auto test_counts = class_counts(a.test);
  for (std::size_t c = 0; c < 2; ++c) {
    CHECK(train_counts[c] == 80);  // per class: 100 -> 20 test, 80 train
    CHECK(test_counts[c] == 20);
  }
}

TEST_CASE("tiny spread is solved by nearest centroid") {
  const BlobsConfig cfg{3, 60, 4, 1e-6};
  const SplitDataset split = gen_blobs(cfg, 3);

  // Centroids from train, scored by negative distance on test.
  std::vector<ParamVector> centroids(3, ParamVector(4, 0.0));
  std::vector<double> counts(3, 0.0);
  for (std::size_t r = 0; r < split.train.size(); ++r) {
    const auto c = static_cast<std::size_t>(split.train.labels[r]);
    for (std::size_t j = 0; j < 4; ++j) centroids[c][j] += split.train.inputs.at(r, j);
    counts[c] += 1.0;
  }
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < 4; ++j) centroids[c][j] /= counts[c];

  Matrix scores(split.test.size(), 3);
  for (std::size_t r = 0; r < split.test.size(); ++r)
    for (std::size_t c = 0; c < 3; ++c) {
      double d = 0.0;
      for (std::size_t j = 0; j < 4; ++j) {
        const double diff = split.test.inputs.at(r, j) - centroids[c][j];
        d += diff * diff;
      }
      scores.at(r, c) = -d;
    }
  CHECK(macro_ovr_auc(scores, split.test.labels) == doctest::Approx(1.0));
}

TEST_CASE("iid partition shares and class balance") {
  const BlobsConfig cfg{2, 500, 3, 1.0};
  const SplitDataset split = gen_blobs(cfg, 11);
  const Dataset& train = split.train;  // 800 rows
  const Partition part = partition_iid(train, 10, 11);
  CHECK(part.client_indices.size() == 10);
  for (const auto& shard : part.client_indices) CHECK(shard.size() == 80);
  check_partition_valid(part, train.size());

  std::size_t covered = 0;
  for (const auto& shard : part.client_indices) covered += shard.size();
  CHECK(covered == train.size());

  // Per-client class frequencies stay within 20% of the global rate.
  const auto global = class_counts(train);
  const double global_rate =
      static_cast<double>(global[0]) / static_cast<double>(train.size());
  for (const auto& shard : part.client_indices) {
    double zeros = 0.0;
    for (std::size_t idx : shard) zeros += train.labels[idx] == 0 ? 1.0 : 0.0;
    const double rate = zeros / static_cast<double>(shard.size());
    CHECK(rate == doctest::Approx(global_rate).epsilon(0.2));
  }

  CHECK_THROWS_AS(partition_iid(train, train.size() + 1, 1), std::invalid_argument);
}

TEST_CASE("dirichlet partition skews and stays total") {
  const BlobsConfig cfg{2, 500, 3, 1.0};
  const Dataset train = gen_blobs(cfg, 13).train;

  // Huge alpha approximates IID shares.
  const Partition even = partition_dirichlet(train, 10, 1e6, 13);
  check_partition_valid(even, train.size());
  for (const auto& shard : even.client_indices) {
    CHECK(shard.size() >= 70);
    CHECK(shard.size() <= 90);
  }

  // Small alpha concentrates: some client is nearly single-class.
  const Partition skewed = partition_dirichlet(train, 10, 0.1, 13);
  check_partition_valid(skewed, train.size());
  double max_purity = 0.0;
  for (const auto& shard : skewed.client_indices) {
    double zeros = 0.0;
    for (std::size_t idx : shard) zeros += train.labels[idx] == 0 ? 1.0 : 0.0;
    const double p = zeros / static_cast<double>(shard.size());
    max_purity = std::max({max_purity, p, 1.0 - p});
  }
  CHECK(max_purity > 0.8);

  // Determinism in seed.
  const Partition again = partition_dirichlet(train, 10, 0.1, 13);
  CHECK(again.client_indices == skewed.client_indices);

  CHECK_THROWS_AS(partition_dirichlet(train, 10, 0.0, 1), std::invalid_argument);
}

TEST_CASE("csv import accepts the documented header only") {
  const std::string good = "/tmp/fedsim_test_ok.csv";
  {
    std::ofstream os(good);
    os << "x0,x1,label\n";
    os << "0.5,1.5,0\n1.0,-1.0,1\n0.25,0.75,0\n-2,3,1\n";
  }
  const Dataset ds = load_csv(good);
  CHECK(ds.size() == 4);
  CHECK(ds.class_count == 2);
  CHECK(ds.inputs.at(3, 1) == doctest::Approx(3.0));
  std::remove(good.c_str());

  const std::string bad = "/tmp/fedsim_test_bad.csv";
  {
    std::ofstream os(bad);
    os << "a,b,label\n0,0,0\n1,1,1\n";
  }
  CHECK_THROWS(load_csv(bad));
  std::remove(bad.c_str());
}
