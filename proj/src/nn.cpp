#include "fedsim/nn.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "fedsim/rng.hpp"

namespace fedsim {

void ModelSpec::validate() const {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("ModelSpec: need at least input and output layer");
  for (std::size_t s : layer_sizes)
    if (s < 1) throw std::invalid_argument("ModelSpec: layer sizes must be >= 1");
}

std::size_t ModelSpec::param_dim() const {
  std::size_t d = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
    d += (layer_sizes[l] + 1) * layer_sizes[l + 1];
  return d;
}

ModelState init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ModelState state{spec, ParamVector(spec.param_dim(), 0.0)};
  auto eng = make_engine(mix_seed(seed, seed_tag::kModelInit));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const std::size_t in = spec.layer_sizes[l];
    const std::size_t out = spec.layer_sizes[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < in * out; ++i) state.params[p++] = scale * normal(eng);
    p += out;  // biases stay zero
  }
  return state;
}

namespace {

void check_batch(const ModelState& state, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("Batch: empty");
  if (batch.inputs.rows != batch.size() ||
      batch.inputs.cols != state.spec.input_dim())
    throw std::invalid_argument("Batch: input shape does not match model spec");
  if (state.params.size() != state.spec.param_dim())
    throw std::invalid_argument("ModelState: parameter length mismatch");
}

// Activations per layer for a full forward pass. acts[0] is the input,
// acts[l+1] the (post-ReLU) output of layer l; the last entry holds raw
// logits. pre[l] keeps pre-activations for the ReLU mask in backprop.
struct ForwardTrace {
  std::vector<Matrix> acts;
  std::vector<Matrix> pre;
};

ForwardTrace run_forward(const ModelState& state, const Batch& batch) {
  const auto& sizes = state.spec.layer_sizes;
  const std::size_t B = batch.size();
  ForwardTrace tr;
  tr.acts.reserve(sizes.size());
  tr.acts.push_back(batch.inputs);
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const double* W = state.params.data() + p;
    const double* b = W + in * out;
    const Matrix& a = tr.acts.back();
    Matrix z(B, out);
    for (std::size_t r = 0; r < B; ++r) {
      const double* ar = a.row(r);
      double* zr = z.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = W + o * in;
        double s = b[o];
        for (std::size_t i = 0; i < in; ++i) s += w[i] * ar[i];
        zr[o] = s;
      }
    }
    const bool last = (l + 2 == sizes.size());
    tr.pre.push_back(z);
    if (!last) {
      for (double& x : z.data) x = x > 0.0 ? x : 0.0;
    }
    tr.acts.push_back(std::move(z));
    p += (in + 1) * out;
  }
  return tr;
}

}  // namespace

Matrix forward_logits(const ModelState& state, const Batch& batch) {
  check_batch(state, batch);
  ForwardTrace tr = run_forward(state, batch);
  Matrix& logits = tr.acts.back();
  if (!all_finite(logits.data))
    throw std::runtime_error("forward_logits: non-finite logits");
  return std::move(logits);
}

LossGrad loss_and_grad(const ModelState& state, const Batch& batch, int sign) {
  if (sign != 1 && sign != -1)
    throw std::invalid_argument("loss_and_grad: sign must be +1 or -1");
  check_batch(state, batch);
  const auto& sizes = state.spec.layer_sizes;
  const std::size_t B = batch.size();
  const std::size_t C = sizes.back();
  for (int y : batch.labels)
    if (y < 0 || static_cast<std::size_t>(y) >= C)
      throw std::invalid_argument("loss_and_grad: label out of range");

  ForwardTrace tr = run_forward(state, batch);
  const Matrix& logits = tr.acts.back();

  // Mean cross-entropy with max-shifted log-sum-exp; delta = softmax - onehot.
  double loss = 0.0;
  Matrix delta(B, C);
  for (std::size_t r = 0; r < B; ++r) {
    const double* lr = logits.row(r);
    double m = lr[0];
    for (std::size_t c = 1; c < C; ++c) m = std::max(m, lr[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(lr[c] - m);
    const double lse = m + std::log(sum);
    loss += lse - lr[static_cast<std::size_t>(batch.labels[r])];
    double* dr = delta.row(r);
    for (std::size_t c = 0; c < C; ++c) dr[c] = std::exp(lr[c] - m) / sum;
    dr[static_cast<std::size_t>(batch.labels[r])] -= 1.0;
  }
  loss /= static_cast<double>(B);
  const double inv_b = 1.0 / static_cast<double>(B);
  for (double& x : delta.data) x *= inv_b;

  // Backprop through the flat layout, last layer first.
  LossGrad out;
  out.grad.assign(state.params.size(), 0.0);
  std::vector<std::size_t> offsets(sizes.size() - 1);
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    offsets[l] = p;
    p += (sizes[l] + 1) * sizes[l + 1];
  }
  Matrix cur = std::move(delta);
  for (std::size_t l = sizes.size() - 2;; --l) {
    const std::size_t in = sizes[l];
    const std::size_t outn = sizes[l + 1];
    const Matrix& a = tr.acts[l];
    double* gW = out.grad.data() + offsets[l];
    double* gb = gW + in * outn;
    for (std::size_t r = 0; r < B; ++r) {
      const double* dr = cur.row(r);
      const double* ar = a.row(r);
      for (std::size_t o = 0; o < outn; ++o) {
        const double d = dr[o];
        if (d == 0.0) continue;
        double* g = gW + o * in;
        for (std::size_t i = 0; i < in; ++i) g[i] += d * ar[i];
        gb[o] += d;
      }
    }
    if (l == 0) break;
    const double* W = state.params.data() + offsets[l];
    Matrix prev(B, in);
    for (std::size_t r = 0; r < B; ++r) {
      const double* dr = cur.row(r);
      const double* zr = tr.pre[l - 1].row(r);
      double* pr = prev.row(r);
      for (std::size_t i = 0; i < in; ++i) {
        if (zr[i] <= 0.0) continue;  // ReLU mask
        double s = 0.0;
        for (std::size_t o = 0; o < outn; ++o) s += dr[o] * W[o * in + i];
        pr[i] = s;
      }
    }
    cur = std::move(prev);
  }

  if (!std::isfinite(loss) || !all_finite(out.grad))
    throw std::runtime_error("loss_and_grad: non-finite result");
  if (sign < 0) {
    loss = -loss;
    for (double& g : out.grad) g = -g;
  }
  out.loss = loss;
  return out;
}

void Optimizer::step(ParamVector& weights, const ParamVector& grad) {
  if (grad.size() != weights.size())
    throw std::invalid_argument("Optimizer::step: gradient length mismatch");
  if (!all_finite(grad)) throw std::runtime_error("Optimizer::step: non-finite gradient");
  if (cfg_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i] -= cfg_.lr * grad[i];
    return;
  }
  if (m_.empty()) {
    m_.assign(weights.size(), 0.0);
    v_.assign(weights.size(), 0.0);
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    weights[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
  }
}

ParamVector flatten(const ModelState& state) {
  if (state.params.size() != state.spec.param_dim())
    throw std::invalid_argument("flatten: parameter length mismatch");
  return state.params;
}

ModelState unflatten(const ModelSpec& spec, const ParamVector& params) {
  spec.validate();
  if (params.size() != spec.param_dim())
    throw std::invalid_argument("unflatten: expected length " +
                                std::to_string(spec.param_dim()) + ", got " +
                                std::to_string(params.size()));
  return ModelState{spec, params};
}

void dump_paramvec(std::ostream& os, const ParamVector& v) {
  os << "paramvec v1 " << v.size() << "\n";
  char buf[64];
  for (double x : v) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    os << buf << "\n";
  }
}

ParamVector parse_paramvec(std::istream& is) {
  std::string word;
  std::size_t d = 0;
  std::string version;
  if (!(is >> word >> version >> d) || word != "paramvec" || version != "v1")
    throw std::runtime_error("paramvec: bad header");
  ParamVector v(d);
  for (std::size_t i = 0; i < d; ++i)
    if (!(is >> v[i])) throw std::runtime_error("paramvec: truncated at entry " + std::to_string(i));
  return v;
}

void dump_paramvec_file(const std::string& path, const ParamVector& v) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  dump_paramvec(os, v);
}

ParamVector parse_paramvec_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  return parse_paramvec(is);
}

}  // namespace fedsim
