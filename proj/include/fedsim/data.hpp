#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/nn.hpp"

namespace fedsim {

// Labelled samples; inputs N x input_dim, labels in [0, class_count).
struct Dataset {
  Matrix inputs;
  std::vector<int> labels;
  int class_count = 0;

  std::size_t size() const { return labels.size(); }
  Batch as_batch() const { return Batch{inputs, labels}; }
  Batch gather(const std::vector<std::size_t>& idx) const;
};

struct SplitDataset {
  Dataset train;
  Dataset test;
};

struct BlobsConfig {
  int classes = 2;
  int per_class = 500;
  int input_dim = 20;
  double spread = 1.0;
};

// Gaussian clusters with class means at pairwise distance >= 4*spread,
// split 80/20 stratified by class. Deterministic in seed.
SplitDataset gen_blobs(const BlobsConfig& cfg, std::uint64_t seed);

// Stratified 80/20 split of an imported dataset (per class: floor(n/5)
// test samples). Class ratios preserved within one sample per class.
SplitDataset stratified_split(const Dataset& ds, std::uint64_t seed);

// CSV with header "x0,...,x{k-1},label"; class_count = max label + 1.
Dataset load_csv(const std::string& path);

// Disjoint per-client index lists into a dataset's rows.
struct Partition {
  std::vector<std::vector<std::size_t>> client_indices;
};

// Random near-equal shares (sizes differ by at most one).
Partition partition_iid(const Dataset& ds, std::size_t n_clients, std::uint64_t seed);

// Label-skewed shares: per class, client proportions ~ Dirichlet(alpha).
// Redraws until every client is non-empty (deterministic in seed).
Partition partition_dirichlet(const Dataset& ds, std::size_t n_clients,
                              double alpha, std::uint64_t seed);

}  // namespace fedsim
