#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedsim/vecops.hpp"

namespace fedsim {

// Dense row-major matrix, minimal on purpose.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double* row(std::size_t i) { return data.data() + i * cols; }
  const double* row(std::size_t i) const { return data.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Layer sizes of a fully connected net: input dim, hidden dims..., class
// count. Hidden layers use ReLU, the last layer emits raw logits.
struct ModelSpec {
  std::vector<std::size_t> layer_sizes;

  void validate() const;
  std::size_t layer_count() const { return layer_sizes.size() - 1; }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t class_count() const { return layer_sizes.back(); }

  // d = sum over layers of (in+1)*out; weights then bias per layer.
  std::size_t param_dim() const;
};

struct Batch {
  Matrix inputs;            // B x input_dim
  std::vector<int> labels;  // B entries in [0, C)

  std::size_t size() const { return labels.size(); }
};

// Model = spec + flat parameters. Parameter layout is layer-major:
// [W0 (out0 x in0, row-major), b0, W1, b1, ...].
struct ModelState {
  ModelSpec spec;
  ParamVector params;
};

// Deterministic init: weights ~ N(0, 1/fan_in) per layer, biases zero.
ModelState init_model(const ModelSpec& spec, std::uint64_t seed);

// Raw logits, B x C. Throws std::invalid_argument on shape mismatch.
Matrix forward_logits(const ModelState& state, const Batch& batch);

// Signed mean cross-entropy and its exact gradient w.r.t. the flat
// parameters. sign=+1 is the honest objective, sign=-1 the attacker's
// (loss maximisation). Softmax is folded into the loss with a max-shifted
// log-sum-exp. Satisfies loss/grad(sign=-1) == -loss/grad(sign=+1) exactly.
struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};
LossGrad loss_and_grad(const ModelState& state, const Batch& batch, int sign);

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Holds Adam moment buffers; construct one per model per round.
class Optimizer {
 public:
  explicit Optimizer(const OptimizerConfig& cfg) : cfg_(cfg) {}

  // w <- w - lr*g (SGD) or the bias-corrected Adam update.
  // Throws std::runtime_error on non-finite gradients.
  void step(ParamVector& weights, const ParamVector& grad);

  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  ParamVector m_, v_;
  std::int64_t t_ = 0;
};

// Flatten/unflatten. ModelState already stores flat parameters, so the
// codec reduces to validated copies; kept as the module boundary so the
// layout stays a private detail of this header.
ParamVector flatten(const ModelState& state);
ModelState unflatten(const ModelSpec& spec, const ParamVector& params);

// Text dump: header "paramvec v1 <d>" then one value per line, full
// round-trip precision.
void dump_paramvec(std::ostream& os, const ParamVector& v);
ParamVector parse_paramvec(std::istream& is);
void dump_paramvec_file(const std::string& path, const ParamVector& v);
ParamVector parse_paramvec_file(const std::string& path);

}  // namespace fedsim
