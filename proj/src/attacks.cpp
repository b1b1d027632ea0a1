#include "fedsim/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

void check_context(const AttackContext& ctx, const char* who) {
  if (ctx.attacker_count() < 2)
    throw std::invalid_argument(std::string(who) + ": needs f >= 2 controlled clients");
  if (ctx.malicious_params.size() != ctx.attacker_count())
    throw std::invalid_argument(std::string(who) +
                                ": parameter list size does not match update count");
  const std::size_t d = ctx.malicious_updates.front().vector.size();
  for (const auto& u : ctx.malicious_updates)
    if (u.vector.size() != d)
      throw std::invalid_argument(std::string(who) + ": ragged update lengths");
  for (const auto& p : ctx.malicious_params)
    if (p.size() != d)
      throw std::invalid_argument(std::string(who) + ": ragged parameter lengths");
}

std::vector<ParamVector> update_vectors(const AttackContext& ctx) {
  std::vector<ParamVector> vs;
  vs.reserve(ctx.attacker_count());
  for (const auto& u : ctx.malicious_updates) vs.push_back(u.vector);
  return vs;
}

// One pass of minibatch training with the attacker's negated loss.
// Returns the number of optimizer steps taken; step_hook can veto a step
// by returning false, which also ends the walk.
template <typename StepHook>
int train_epochs(ModelState& model, const Dataset& data,
                 const AttackTrainConfig& cfg, std::size_t epochs,
                 std::mt19937_64& eng, StepHook&& hook) {
  Optimizer opt(cfg.optimizer);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  int steps = 0;
  const std::size_t bs = std::max<std::size_t>(1, cfg.batch_size);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), eng);
    for (std::size_t s = 0; s < order.size(); s += bs) {
      std::vector<std::size_t> idx(order.begin() + s,
                                   order.begin() + std::min(order.size(), s + bs));
      const Batch batch = data.gather(idx);
      const LossGrad lg = loss_and_grad(model, batch, -1);
      ParamVector before = model.params;
      opt.step(model.params, lg.grad);
      if (!hook(before)) return steps;
      ++steps;
    }
  }
  return steps;
}

}  // namespace

MaliciousMeans malicious_means(const AttackContext& ctx) {
  check_context(ctx, "malicious_means");
  MaliciousMeans out;
  out.mu_param = mean_vector(ctx.malicious_params);
  if (ctx.mode == UpdateKind::kGradients)
    out.mu_grad = mean_vector(update_vectors(ctx));
  return out;
}

double pairwise_extreme_sqdist(const std::vector<ParamVector>& vectors,
                               PairExtreme which) {
  if (vectors.size() < 2)
    throw std::invalid_argument("pairwise_extreme_sqdist: needs >= 2 vectors");
  double best = which == PairExtreme::kMax ? -1.0
                                           : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double d = sq_dist(vectors[i], vectors[j]);
      best = which == PairExtreme::kMax ? std::max(best, d) : std::min(best, d);
    }
  }
  return best;
}

std::pair<ParamVector, AttackDiagnostics> disbelieve_params(
    const AttackContext& ctx, const AttackTrainConfig& train_cfg) {
  check_context(ctx, "disbelieve_params");
  if (ctx.mode != UpdateKind::kParameters)
    throw std::invalid_argument("disbelieve_params: context is not in parameter mode");
  if (ctx.combined_data.size() == 0)
    throw std::invalid_argument("disbelieve_params: combined data is empty");

  const std::vector<ParamVector> params = update_vectors(ctx);
  const ParamVector mu = mean_vector(params);
  const double p_dist = pairwise_extreme_sqdist(params, PairExtreme::kMax);

  ModelState model = unflatten(ctx.model_spec, mu);
  auto eng = make_engine(mix_seed(train_cfg.seed, seed_tag::kAttackTrain));

  // Walk while inside the ball; revert the step that first leaves it.
  AttackDiagnostics diag;
  diag.mu_param_norm = l2_norm(mu);
  diag.threshold = p_dist;
  diag.training_steps =
      train_epochs(model, ctx.combined_data, train_cfg, train_cfg.max_epochs, eng,
                   [&](const ParamVector& before) {
                     if (sq_dist(model.params, mu) > p_dist) {
                       model.params = before;
                       return false;
                     }
                     return true;
                   });
  diag.achieved_sq_dist = sq_dist(model.params, mu);
  return {model.params, diag};
}

ScaleSearchResult binary_search_scale(const ParamVector& g_hat,
                                      const ParamVector& mu_grad, double g_dist) {
  if (g_hat.size() != mu_grad.size())
    throw std::invalid_argument("binary_search_scale: length mismatch");
  if (std::abs(l2_norm(g_hat) - 1.0) > 1e-9)
    throw std::invalid_argument("binary_search_scale: g_hat must be unit length");
  if (g_dist < 0.0)
    throw std::invalid_argument("binary_search_scale: G_dist must be >= 0");

  const double mu_sq = sq_norm(mu_grad);
  const double proj = dot(g_hat, mu_grad);
  // diff(sf) = ||sf*g_hat - mu||^2 = sf^2 - 2*sf*proj + mu_sq for unit g_hat.
  const auto diff_at = [&](double sf) { return sf * sf - 2.0 * sf * proj + mu_sq; };

  ScaleSearchResult res;
  double start = 0.001;
  double end = 1000.0;
  bool found_feasible = false;
  while (std::abs(start - end) > 0.01) {
    const double sf = 0.5 * (start + end);
    const double diff = diff_at(sf);
    if (diff > g_dist) {
      start = sf;
    } else {
      end = sf;
      res.sf = sf;
      res.diff = diff;
      found_feasible = true;
    }
    ++res.iterations;
  }
  if (!found_feasible) {
    res.sf = std::clamp(proj, 0.001, 1000.0);
    res.diff = diff_at(res.sf);
    res.fallback_used = true;
  }
  return res;
}

std::pair<ParamVector, AttackDiagnostics> disbelieve_grads(
    const AttackContext& ctx, const AttackTrainConfig& train_cfg) {
  check_context(ctx, "disbelieve_grads");
  if (ctx.mode != UpdateKind::kGradients)
    throw std::invalid_argument("disbelieve_grads: context is not in gradient mode");
  if (ctx.combined_data.size() == 0)
    throw std::invalid_argument("disbelieve_grads: combined data is empty");

  const std::vector<ParamVector> grads = update_vectors(ctx);
  const ParamVector mu_param = mean_vector(ctx.malicious_params);
  const ParamVector mu_grad = mean_vector(grads);
  const double g_dist = pairwise_extreme_sqdist(grads, PairExtreme::kMin);

  ModelState model = unflatten(ctx.model_spec, mu_param);
  auto eng = make_engine(mix_seed(train_cfg.seed, seed_tag::kAttackTrain, 1));

  AttackDiagnostics diag;
  diag.mu_param_norm = l2_norm(mu_param);
  diag.mu_grad_norm = l2_norm(mu_grad);
  diag.threshold = g_dist;
  diag.training_steps = train_epochs(model, ctx.combined_data, train_cfg,
                                     train_cfg.epochs, eng,
                                     [](const ParamVector&) { return true; });

  const LossGrad lg = loss_and_grad(model, ctx.combined_data.as_batch(), -1);
  const double norm = l2_norm(lg.grad);
  if (norm == 0.0)
    throw DegenerateAttackError("disbelieve_grads: zero proxy gradient");
  ParamVector g_hat = lg.grad;
  for (double& x : g_hat) x /= norm;

  const ScaleSearchResult sr = binary_search_scale(g_hat, mu_grad, g_dist);
  diag.sf = sr.sf;
  diag.fallback_used = sr.fallback_used;
  diag.achieved_sq_dist = sr.diff;

  ParamVector out = std::move(g_hat);
  for (double& x : out) x *= sr.sf;
  return {std::move(out), diag};
}

ParamVector lie_attack(const AttackContext& ctx, double z) {
  check_context(ctx, "lie_attack");
  const std::vector<ParamVector> vs = update_vectors(ctx);
  const std::size_t d = vs.front().size();
  const double f = static_cast<double>(vs.size());
  ParamVector out(d);
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (const auto& v : vs) mu += v[j];
    mu /= f;
    double var = 0.0;
    for (const auto& v : vs) {
      const double dl = v[j] - mu;
      var += dl * dl;
    }
    out[j] = mu - z * std::sqrt(var / f);
  }
  return out;
}

ParamVector min_max_attack(const AttackContext& ctx, MinMaxDirection direction) {
  check_context(ctx, "min_max_attack");
  const std::vector<ParamVector> vs = update_vectors(ctx);
  const std::size_t d = vs.front().size();
  const double f = static_cast<double>(vs.size());

  ParamVector mu(d, 0.0);
  for (const auto& v : vs)
    for (std::size_t j = 0; j < d; ++j) mu[j] += v[j];
  for (double& x : mu) x /= f;

  ParamVector pert(d, 0.0);
  if (direction == MinMaxDirection::kInverseUnit) {
    const double nm = l2_norm(mu);
    if (nm == 0.0) {
      direction = MinMaxDirection::kNegativeStd;  // documented fallback
    } else {
      for (std::size_t j = 0; j < d; ++j) pert[j] = -mu[j] / nm;
    }
  }
  if (direction == MinMaxDirection::kNegativeStd) {
    for (std::size_t j = 0; j < d; ++j) {
      double var = 0.0;
      for (const auto& v : vs) {
        const double dl = v[j] - mu[j];
        var += dl * dl;
      }
      pert[j] = -std::sqrt(var / f);
    }
  }

  // Largest gamma keeping the poisoned point within the maximum pairwise
  // distance of the known updates. gamma = 0 is always feasible.
  double max_pair = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j)
      max_pair = std::max(max_pair, l2_dist(vs[i], vs[j]));

  ParamVector candidate(d);
  const auto feasible = [&](double gamma) {
    for (std::size_t j = 0; j < d; ++j) candidate[j] = mu[j] + gamma * pert[j];
    double worst = 0.0;
    for (const auto& v : vs) worst = std::max(worst, l2_dist(candidate, v));
    return worst <= max_pair;
  };

  double lo = 0.0, hi = 1000.0;
  if (feasible(hi)) {
    lo = hi;
  } else {
    while (hi - lo > 0.01) {
      const double mid = 0.5 * (lo + hi);
      if (feasible(mid))
        lo = mid;
      else
        hi = mid;
    }
  }
  ParamVector out(d);
  for (std::size_t j = 0; j < d; ++j) out[j] = mu[j] + lo * pert[j];
  return out;
}

ParamVector gaussian_noise_attack(const ParamVector& update, double sigma,
                                  std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("gaussian_noise_attack: sigma must be >= 0");
  ParamVector out = update;
  if (sigma == 0.0) return out;
  auto eng = make_engine(mix_seed(seed, seed_tag::kNoise));
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& x : out) x += normal(eng);
  return out;
}

ParamVector scale_attack(const ParamVector& update, double lambda) {
  ParamVector out = update;
  for (double& x : out) x *= lambda;
  return out;
}

Batch label_flip(const Batch& batch, int class_count) {
  Batch out = batch;
  for (int& y : out.labels) {
    if (y < 0 || y >= class_count)
      throw std::invalid_argument("label_flip: label out of range");
    y = (class_count - 1) - y;
  }
  return out;
}

}  // namespace fedsim
