#include "drpl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cross_fit.hpp"
#include "drpl/error.hpp"
#include "drpl/parallel.hpp"
#include "drpl/rng.hpp"

namespace drpl {

NuisanceBundle fit_per_action_nuisances(const Dataset& data, RadiusDelta delta, const EstimatorConfig& cfg) {
  data.validate();
  if (data.empty()) throw InvalidArgument("fit_per_action_nuisances: empty dataset");
  const std::size_t M = data.num_actions;
  NuisanceBundle b;
  b.folds = make_folds(data.size(), cfg.K, cfg.seed);
  b.delta = delta.value();
  const std::size_t K = b.folds.K;
  b.per_fold.resize(K);
  parallel_for(K, [&](std::size_t k) { b.per_fold[k].propensity = detail::fit_fold_propensity(data, b.folds, k, cfg); });

  std::vector<detail::OutcomeNuisance> cells(K * M);
  parallel_for(K * M, [&](std::size_t c) {
    const std::size_t k = c / M, a = c % M;
    try {
      cells[c] = detail::fit_fold_outcome(data, b.folds, k, constant_policy(static_cast<int>(a)), delta, cfg,
                                          detail::OutcomeTarget::DualLoss);
    } catch (const InsufficientSamples& e) {
      throw InsufficientSamples(std::string(e.what()) + " for action " + std::to_string(a + 1));
    }
  });
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t a = 0; a < M; ++a) {
      b.per_fold[k].fields.push_back(std::move(*cells[k * M + a].field));
      b.per_fold[k].regressions.push_back(std::move(cells[k * M + a].g));
    }
  }
  return b;
}

namespace {

void check_bundle(const Dataset& data, const NuisanceBundle& b) {
  if (b.folds.n() != data.size()) throw InvalidArgument("nuisance bundle was fit on a dataset of different size");
  if (b.per_fold.size() != b.folds.K) throw InvalidArgument("nuisance bundle: missing folds");
  for (const auto& f : b.per_fold)
    if (f.fields.size() != data.num_actions || f.regressions.size() != data.num_actions)
      throw InvalidArgument("nuisance bundle: missing actions");
}

// Unweighted summand for unit i and action a.
double summand(const Dataset& data, const NuisanceBundle& b, std::size_t i, std::size_t a, RadiusDelta delta) {
  const auto& f = b.per_fold[b.folds.assignment[i]];
  const auto xi = data.covariate(i);
  const double g = f.regressions[a].predict(xi);
  if (static_cast<std::size_t>(data.actions[i]) != a) return g;
  const double p = f.propensity.predict(xi, static_cast<int>(a));
  return (g_hat_target(xi, data.rewards[i], f.fields[a], delta) - g) / p + g;
}

}  // namespace

ScoreMatrix build_score_matrix(const Dataset& data, const NuisanceBundle& bundle) {
  check_bundle(data, bundle);
  const RadiusDelta delta(bundle.delta);
  const std::size_t n = data.size(), M = data.num_actions, K = bundle.folds.K;
  ScoreMatrix s;
  s.n = n;
  s.num_actions = M;
  s.values.assign(n * M, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const double w = static_cast<double>(n) /
                     (static_cast<double>(K) * static_cast<double>(bundle.folds.rows[bundle.folds.assignment[i]].size()));
    for (std::size_t a = 0; a < M; ++a) s.at(i, a) = -w * summand(data, bundle, i, a, delta);
  });
  return s;
}

RobustValueReport evaluate_with_bundle(const Dataset& data, const NuisanceBundle& bundle, const Policy& policy) {
  check_bundle(data, bundle);
  const RadiusDelta delta(bundle.delta);
  const std::size_t n = data.size();
  RobustValueReport rep;
  rep.n = n;
  rep.delta = bundle.delta;
  rep.summands.assign(n, 0.0);
  std::size_t clipped = 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < bundle.folds.K; ++k) {
    double total = 0.0;
    const auto& fold = bundle.per_fold[k];
    for (auto i : bundle.folds.rows[k]) {
      const int a = policy(data.covariate(i));
      if (a < 0 || static_cast<std::size_t>(a) >= data.num_actions) throw InvalidArgument("policy returned an invalid action");
      rep.summands[i] = summand(data, bundle, i, static_cast<std::size_t>(a), delta);
      if (data.actions[i] == a && fold.propensity.predict(data.covariate(i), a) <= fold.propensity.clip_floor() * (1.0 + 1e-12))
        ++clipped;
      total += rep.summands[i];
    }
    rep.per_fold.push_back(total / static_cast<double>(bundle.folds.rows[k].size()));
    acc += rep.per_fold.back();
    for (const auto& w : fold.propensity.warnings()) rep.diagnostics.warnings.push_back("fold " + std::to_string(k + 1) + ": " + w);
  }
  rep.estimate = -acc / static_cast<double>(bundle.folds.K);
  rep.std_error = detail::sample_sd(rep.summands) / std::sqrt(static_cast<double>(n));
  rep.diagnostics.clip_rate = static_cast<double>(clipped) / static_cast<double>(n);
  rep.diagnostics.in_sample = true;
  double ff = 0.0;
  std::size_t count = 0, min_samples = 0;
  for (const auto& f : bundle.per_fold)
    for (const auto& fld : f.fields) {
      ff += fld.diagnostics.floor_fraction;
      min_samples = count == 0 ? fld.diagnostics.samples : std::min(min_samples, fld.diagnostics.samples);
      ++count;
    }
  rep.diagnostics.floor_fraction = count ? ff / static_cast<double>(count) : 0.0;
  rep.diagnostics.field_samples_min = min_samples;
  return rep;
}

LearnResult learn(const Dataset& data, RadiusDelta delta, const LearnerConfig& cfg) {
  if (!(cfg.eval_fraction >= 0.0 && cfg.eval_fraction < 1.0)) throw InvalidArgument("learn: eval_fraction must lie in [0, 1)");
  if (cfg.depth < 0 || cfg.depth > 2) throw InvalidArgument("unsupported depth");
  data.validate();

  Dataset train = data, holdout;
  if (cfg.eval_fraction > 0.0) {
    std::vector<std::size_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(cfg.estimator.seed, {0x686f6c64}));
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng() % i)]);
    const auto n_eval = static_cast<std::size_t>(std::round(cfg.eval_fraction * static_cast<double>(data.size())));
    std::vector<std::size_t> ev(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_eval));
    std::vector<std::size_t> tr(perm.begin() + static_cast<std::ptrdiff_t>(n_eval), perm.end());
    std::sort(ev.begin(), ev.end());
    std::sort(tr.begin(), tr.end());
    train = data.subset(tr);
    holdout = data.subset(ev);
  }

  const auto bundle = fit_per_action_nuisances(train, delta, cfg.estimator);
  const auto scores = build_score_matrix(train, bundle);
  const auto found = search_policy_tree(scores, train.x, train.dim, cfg.depth);

  LearnResult out;
  out.tree = found.tree;
  out.search_value = found.value;
  if (cfg.eval_fraction > 0.0) {
    out.report = estimate_policy_value(holdout, out.tree.as_policy(), delta, cfg.estimator);
    out.report.diagnostics.in_sample = false;
  } else {
    out.report = evaluate_with_bundle(train, bundle, out.tree.as_policy());
  }
  return out;
}

}  // namespace drpl
