#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "fedsim/nn.hpp"
#include "oracles.hpp"

using namespace fedsim;

namespace {

Batch random_batch(std::size_t b, std::size_t dim, std::size_t classes,
                   std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> lab(0, static_cast<int>(classes) - 1);
  Batch batch;
  batch.inputs = Matrix(b, dim);
  for (double& x : batch.inputs.data) x = normal(eng);
  batch.labels.resize(b);
  for (int& y : batch.labels) y = lab(eng);
  return batch;
}

}  // namespace

TEST_CASE("param dimension formula") {
  ModelSpec spec{{2, 3, 2}};
  CHECK(spec.param_dim() == 17);  // (2+1)*3 + (3+1)*2
  ModelSpec wide{{20, 16, 2}};
  CHECK(wide.param_dim() == (20 + 1) * 16 + (16 + 1) * 2);
}

TEST_CASE("init is deterministic with zero biases") {
  ModelSpec spec{{4, 5, 3}};
  const ModelState a = init_model(spec, 42);
  const ModelState b = init_model(spec, 42);
  CHECK(a.params == b.params);
  const ModelState c = init_model(spec, 43);
  CHECK(a.params != c.params);

  // Bias slots sit after each weight block and must be exactly zero.
  std::size_t p = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    p += spec.layer_sizes[l] * spec.layer_sizes[l + 1];
    for (std::size_t i = 0; i < spec.layer_sizes[l + 1]; ++i)
      CHECK(a.params[p + i] == 0.0);
    p += spec.layer_sizes[l + 1];
  }
}

TEST_CASE("zero weights give zero logits") {
  ModelSpec spec{{3, 4, 2}};
  ModelState state{spec, ParamVector(spec.param_dim(), 0.0)};
  const Batch batch = random_batch(5, 3, 2, 7);
  const Matrix logits = forward_logits(state, batch);
  for (double x : logits.data) CHECK(x == 0.0);
}

TEST_CASE("rows are independent in forward") {
  ModelSpec spec{{4, 6, 3}};
  const ModelState state = init_model(spec, 1);
  Batch two = random_batch(2, 4, 3, 9);
  Batch one;
  one.inputs = Matrix(1, 4);
  for (std::size_t j = 0; j < 4; ++j) one.inputs.at(0, j) = two.inputs.at(0, j);
  one.labels = {two.labels[0]};
  const Matrix l2 = forward_logits(state, two);
  const Matrix l1 = forward_logits(state, one);
  for (std::size_t c = 0; c < 3; ++c) CHECK(l1.at(0, c) == l2.at(0, c));
}

TEST_CASE("forward matches a hand-computed 2x2 net") {
  // One layer [2 -> 2]: logits = W x + b.
  ModelSpec spec{{2, 2}};
  ModelState state{spec, {1.0, 2.0, -0.5, 0.25, 0.1, -0.1}};  // W rows then b
  Batch batch;
  batch.inputs = Matrix(1, 2);
  batch.inputs.at(0, 0) = 3.0;
  batch.inputs.at(0, 1) = -1.0;
  batch.labels = {0};
  const Matrix logits = forward_logits(state, batch);
  CHECK(logits.at(0, 0) == doctest::Approx(1.0 * 3 + 2.0 * (-1) + 0.1));
  CHECK(logits.at(0, 1) == doctest::Approx(-0.5 * 3 + 0.25 * (-1) - 0.1));

  // Two layers [2 -> 2 -> 2] with ReLU in between, all-ones weights.
  ModelSpec deep{{2, 2, 2}};
  ParamVector w(deep.param_dim(), 1.0);
  ModelState dstate{deep, w};
  const Matrix dl = forward_logits(dstate, batch);
  // hidden = relu([3-1+1, 3-1+1]) = [3,3]; logits = [3+3+1, 3+3+1].
  CHECK(dl.at(0, 0) == doctest::Approx(7.0));
  CHECK(dl.at(0, 1) == doctest::Approx(7.0));
}

TEST_CASE("uniform logits give ln C loss") {
  ModelSpec spec{{3, 4, 2}};
  ModelState state{spec, ParamVector(spec.param_dim(), 0.0)};
  const Batch batch = random_batch(6, 3, 2, 11);
  const LossGrad lg = loss_and_grad(state, batch, +1);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("sign symmetry is exact") {
  ModelSpec spec{{3, 5, 3}};
  const ModelState state = init_model(spec, 5);
  const Batch batch = random_batch(4, 3, 3, 13);
  const LossGrad plus = loss_and_grad(state, batch, +1);
  const LossGrad minus = loss_and_grad(state, batch, -1);
  CHECK(minus.loss == -plus.loss);
  for (std::size_t i = 0; i < plus.grad.size(); ++i)
    CHECK(minus.grad[i] == -plus.grad[i]);
}

TEST_CASE("analytic gradient matches central differences") {
  ModelSpec spec{{2, 3, 2}};
  const ModelState state = init_model(spec, 17);
  const Batch batch = random_batch(4, 2, 2, 19);
  const LossGrad lg = loss_and_grad(state, batch, +1);
  const std::vector<double> fd = oracles::finite_diff_grad(state, batch, 1e-5);
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double denom = std::max({std::abs(lg.grad[i]), std::abs(fd[i]), 1e-3});
    worst = std::max(worst, std::abs(lg.grad[i] - fd[i]) / denom);
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("sgd step") {
  Optimizer opt(OptimizerConfig{OptimizerKind::kSgd, 0.1});
  ParamVector w{1.0, 1.0};
  opt.step(w, {1.0, -1.0});
  CHECK(w[0] == doctest::Approx(0.9));
  CHECK(w[1] == doctest::Approx(1.1));

  ParamVector w2{0.5, -0.5};
  const ParamVector before = w2;
  opt.step(w2, {0.0, 0.0});
  CHECK(w2 == before);
}

TEST_CASE("adam first step has magnitude about lr") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::kAdam;
  cfg.lr = 0.01;
  Optimizer opt(cfg);
  ParamVector w{1.0, 2.0, -3.0};
  const ParamVector g{0.5, -2.0, 0.01};
  const ParamVector before = w;
  opt.step(w, g);
  // First bias-corrected step is lr * g/|g| per coordinate up to eps.
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double delta = before[i] - w[i];
    CHECK(std::abs(delta) == doctest::Approx(cfg.lr).epsilon(1e-3));
    CHECK(delta * g[i] > 0.0);  // moves against the gradient sign
  }
}

TEST_CASE("codec roundtrip preserves forward") {
  ModelSpec spec{{4, 8, 3}};
  const ModelState state = init_model(spec, 23);
  const ParamVector flat = flatten(state);
  const ModelState back = unflatten(spec, flat);
  CHECK(back.params == state.params);
  const Batch batch = random_batch(3, 4, 3, 29);
  CHECK(forward_logits(back, batch).data == forward_logits(state, batch).data);

  CHECK_THROWS_AS(unflatten(spec, ParamVector(flat.size() + 1, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("paramvec text dump roundtrips") {
  ModelSpec spec{{3, 3, 2}};
  const ModelState state = init_model(spec, 31);
  std::stringstream ss;
  dump_paramvec(ss, state.params);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "paramvec v1 " + std::to_string(state.params.size()));
  ss.seekg(0);
  const ParamVector parsed = parse_paramvec(ss);
  CHECK(parsed == state.params);
}

TEST_CASE("shape errors are rejected") {
  ModelSpec spec{{3, 4, 2}};
  const ModelState state = init_model(spec, 3);
  Batch bad = random_batch(2, 5, 2, 37);  // wrong input dim
  CHECK_THROWS_AS(forward_logits(state, bad), std::invalid_argument);
  CHECK_THROWS_AS(loss_and_grad(state, bad, +1), std::invalid_argument);
}
