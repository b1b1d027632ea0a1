#include "fedsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

Batch Dataset::gather(const std::vector<std::size_t>& idx) const {
  Batch b;
  b.inputs = Matrix(idx.size(), inputs.cols);
  b.labels.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const double* src = inputs.row(idx[r]);
    std::copy(src, src + inputs.cols, b.inputs.row(r));
    b.labels[r] = labels[idx[r]];
  }
  return b;
}

namespace {

void validate_dataset(const Dataset& ds) {
  if (ds.class_count < 2) throw std::invalid_argument("Dataset: need >= 2 classes");
  if (ds.size() < static_cast<std::size_t>(ds.class_count))
    throw std::invalid_argument("Dataset: fewer samples than classes");
  std::vector<bool> seen(static_cast<std::size_t>(ds.class_count), false);
  for (int y : ds.labels) {
    if (y < 0 || y >= ds.class_count)
      throw std::invalid_argument("Dataset: label out of range");
    seen[static_cast<std::size_t>(y)] = true;
  }
  for (bool s : seen)
    if (!s) throw std::invalid_argument("Dataset: some class has no samples");
  if (!all_finite(ds.inputs.data))
    throw std::invalid_argument("Dataset: non-finite inputs");
}

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.class_count = ds.class_count;
  Batch b = ds.gather(idx);
  out.inputs = std::move(b.inputs);
  out.labels = std::move(b.labels);
  return out;
}

SplitDataset split_80_20(const Dataset& ds, std::mt19937_64& eng) {
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.size(); ++i)
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), eng);
    const std::size_t n_test = idx.size() / 5;
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + n_test);
    train_idx.insert(train_idx.end(), idx.begin() + n_test, idx.end());
  }
  return SplitDataset{take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

}  // namespace

SplitDataset gen_blobs(const BlobsConfig& cfg, std::uint64_t seed) {
  if (cfg.classes < 2) throw std::invalid_argument("gen_blobs: classes must be >= 2");
  if (cfg.per_class < 1) throw std::invalid_argument("gen_blobs: per_class must be >= 1");
  if (cfg.input_dim < 1) throw std::invalid_argument("gen_blobs: input_dim must be >= 1");
  if (!(cfg.spread > 0.0)) throw std::invalid_argument("gen_blobs: spread must be > 0");

  const std::size_t C = static_cast<std::size_t>(cfg.classes);
  const std::size_t per = static_cast<std::size_t>(cfg.per_class);
  const std::size_t dim = static_cast<std::size_t>(cfg.input_dim);
  const std::size_t N = C * per;

  Dataset ds;
  ds.class_count = cfg.classes;
  ds.inputs = Matrix(N, dim);
  ds.labels.resize(N);

  auto eng = make_engine(mix_seed(seed, seed_tag::kDataset));
  std::normal_distribution<double> normal(0.0, cfg.spread);
  // Class c centered at 4*spread*(c+1) along axis c mod dim; any two
  // centers are >= 4*spread apart (same axis: multiples of 4*spread,
  // different axes: at least 4*spread*sqrt(2)).
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t axis = c % dim;
    const double offset = 4.0 * cfg.spread * static_cast<double>(c + 1);
    for (std::size_t s = 0; s < per; ++s) {
      const std::size_t r = c * per + s;
      double* row = ds.inputs.row(r);
      for (std::size_t j = 0; j < dim; ++j) row[j] = normal(eng);
      row[axis] += offset;
      ds.labels[r] = static_cast<int>(c);
    }
  }
  SplitDataset split = split_80_20(ds, eng);
  validate_dataset(split.train);
  return split;
}

SplitDataset stratified_split(const Dataset& ds, std::uint64_t seed) {
  validate_dataset(ds);
  auto eng = make_engine(mix_seed(seed, seed_tag::kDataset, 1));
  return split_80_20(ds, eng);
}

Dataset load_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("load_csv: empty file");
  // Header must be exactly x0,...,x{k-1},label.
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  if (cols.size() < 2 || cols.back() != "label")
    throw std::runtime_error("load_csv: header must end with 'label'");
  for (std::size_t j = 0; j + 1 < cols.size(); ++j)
    if (cols[j] != "x" + std::to_string(j))
      throw std::runtime_error("load_csv: expected column x" + std::to_string(j) +
                               ", got " + cols[j]);
  const std::size_t dim = cols.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<std::string> fields;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (fields.size() != dim + 1)
      throw std::runtime_error("load_csv: wrong field count at line " +
                               std::to_string(lineno));
    try {
      for (std::size_t j = 0; j < dim; ++j) values.push_back(std::stod(fields[j]));
      labels.push_back(std::stoi(fields[dim]));
    } catch (const std::exception&) {
      throw std::runtime_error("load_csv: parse error at line " + std::to_string(lineno));
    }
  }
  if (labels.empty()) throw std::runtime_error("load_csv: no data rows");

  Dataset ds;
  ds.inputs = Matrix(labels.size(), dim);
  ds.inputs.data = std::move(values);
  ds.labels = std::move(labels);
  ds.class_count = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  validate_dataset(ds);
  return ds;
}

Partition partition_iid(const Dataset& ds, std::size_t n_clients, std::uint64_t seed) {
  if (n_clients == 0 || n_clients > ds.size())
    throw std::invalid_argument("partition_iid: need 1 <= n <= dataset size");
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto eng = make_engine(mix_seed(seed, seed_tag::kPartition));
  std::shuffle(idx.begin(), idx.end(), eng);

  Partition part;
  part.client_indices.resize(n_clients);
  const std::size_t base = ds.size() / n_clients;
  const std::size_t extra = ds.size() % n_clients;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < n_clients; ++c) {
    const std::size_t take = base + (c < extra ? 1 : 0);
    part.client_indices[c].assign(idx.begin() + pos, idx.begin() + pos + take);
    pos += take;
  }
  return part;
}

Partition partition_dirichlet(const Dataset& ds, std::size_t n_clients,
                              double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0)) throw std::invalid_argument("partition_dirichlet: alpha must be > 0");
  if (n_clients == 0 || n_clients > ds.size())
    throw std::invalid_argument("partition_dirichlet: need 1 <= n <= dataset size");

  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(ds.class_count));
  for (std::size_t i = 0; i < ds.size(); ++i)
    by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

  auto eng = make_engine(mix_seed(seed, seed_tag::kPartition, 1));
  std::gamma_distribution<double> gamma(alpha, 1.0);

  constexpr int kMaxAttempts = 1000;
  Partition part;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    part.client_indices.assign(n_clients, {});
    for (const auto& class_idx : by_class) {
      auto idx = class_idx;
      std::shuffle(idx.begin(), idx.end(), eng);
      std::vector<double> w(n_clients);
      double total = 0.0;
      for (double& x : w) {
        x = gamma(eng);
        total += x;
      }
      if (total <= 0.0) {
        // All-zero gamma draws (possible for tiny alpha); dump to client 0.
        w.assign(n_clients, 0.0);
        w[0] = 1.0;
        total = 1.0;
      }
      // Cumulative-proportion cuts over this class's shuffled indices.
      double cum = 0.0;
      std::size_t start = 0;
      for (std::size_t c = 0; c < n_clients; ++c) {
        cum += w[c] / total;
        const std::size_t end =
            c + 1 == n_clients
                ? idx.size()
                : std::min(idx.size(), static_cast<std::size_t>(
                                           cum * static_cast<double>(idx.size())));
        for (std::size_t k = start; k < end; ++k)
          part.client_indices[c].push_back(idx[k]);
        start = std::max(start, end);
      }
    }
    const bool all_nonempty =
        std::all_of(part.client_indices.begin(), part.client_indices.end(),
                    [](const auto& v) { return !v.empty(); });
    if (all_nonempty) return part;
  }
  // Deterministic fix-up if redrawing never produced full coverage: move
  // one sample from the largest shard into each empty one.
  for (auto& shard : part.client_indices) {
    if (!shard.empty()) continue;
    auto largest = std::max_element(
        part.client_indices.begin(), part.client_indices.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    shard.push_back(largest->back());
    largest->pop_back();
  }
  return part;
}

}  // namespace fedsim
