#include "drpl/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cross_fit.hpp"
#include "drpl/error.hpp"
#include "drpl/parallel.hpp"
#include "drpl/rng.hpp"

namespace drpl {
namespace detail {

namespace {

std::vector<double> gather_x(const Dataset& data, const std::vector<std::size_t>& rows) {
  std::vector<double> x;
  x.reserve(rows.size() * data.dim);
  for (auto i : rows) {
    const auto xi = data.covariate(i);
    x.insert(x.end(), xi.begin(), xi.end());
  }
  return x;
}

std::vector<std::size_t> matching_in(const Dataset& data, const std::vector<std::size_t>& rows, const Policy& selector) {
  std::vector<std::size_t> out;
  for (auto i : rows)
    if (selector(data.covariate(i)) == data.actions[i]) out.push_back(i);
  return out;
}

std::string fold_tag(std::size_t k) { return "fold " + std::to_string(k + 1); }

}  // namespace

PropensityModel fit_fold_propensity(const Dataset& data, const FoldPlan& plan, std::size_t k,
                                    const EstimatorConfig& cfg) {
  if (cfg.propensity_override) return *cfg.propensity_override;
  const Dataset train = data.subset(plan.rows[plan.next(k, 1)]);
  return PropensityModel::fit(train, cfg.propensity, derive_seed(cfg.seed, {k, kRolePropensity}));
}

OutcomeNuisance fit_fold_outcome(const Dataset& data, const FoldPlan& plan, std::size_t k, const Policy& selector,
                                 RadiusDelta delta, const EstimatorConfig& cfg, OutcomeTarget target) {
  OutcomeNuisance out;
  out.target = target;
  const std::size_t d = data.dim;
  const std::size_t min_samples = std::max<std::size_t>(cfg.field.min_samples, 1);

  if (target == OutcomeTarget::DualLoss) {
    const auto rows1 = matching_in(data, plan.rows[plan.next(k, 1)], selector);
    if (rows1.size() < min_samples)
      throw InsufficientSamples("insufficient on-policy samples in " + fold_tag(plan.next(k, 1)) + " (training " +
                                fold_tag(k) + "): " + std::to_string(rows1.size()) + " < " +
                                std::to_string(min_samples));
    const auto x1 = gather_x(data, rows1);
    std::vector<double> y1;
    y1.reserve(rows1.size());
    for (auto i : rows1) y1.push_back(data.rewards[i]);
    const BasisSpec basis = cfg.basis ? cfg.basis(x1, d) : BasisSpec::default_for(x1, d);
    out.field = fit_dual_field(x1, d, y1, delta, basis, cfg.field);
  }

  if (cfg.zero_regression) {
    out.g = RegressionModel::constant(d, 0.0);
    return out;
  }
  const auto rows2 = matching_in(data, plan.rows[plan.next(k, 2)], selector);
  if (rows2.size() < min_samples)
    throw InsufficientSamples("insufficient on-policy samples in " + fold_tag(plan.next(k, 2)) + " (training " +
                              fold_tag(k) + "): " + std::to_string(rows2.size()) + " < " +
                              std::to_string(min_samples));
  const auto x2 = gather_x(data, rows2);
  std::vector<double> t2;
  t2.reserve(rows2.size());
  for (auto i : rows2) t2.push_back(out.big_g(data.covariate(i), data.rewards[i], delta));
  out.g = RegressionModel::fit(x2, d, t2, cfg.regression, derive_seed(cfg.seed, {k, kRoleRegression}));
  return out;
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

namespace {

using detail::OutcomeTarget;

void check_inputs(const Dataset& data, const EstimatorConfig& cfg) {
  data.validate();
  if (data.empty()) throw InvalidArgument("estimate_policy_value: empty dataset");
  if (cfg.propensity_override && cfg.propensity_override->num_actions() != data.num_actions)
    throw InvalidArgument("estimate_policy_value: propensity override has the wrong number of actions");
}

struct FoldResult {
  double value = 0.0;
  double floor_fraction = 0.0;
  std::size_t field_samples = 0;
  std::size_t clipped = 0;
  std::vector<std::string> warnings;
};

// Evaluates fold k's summands into `summands` (indexed by row).
FoldResult evaluate_fold(const Dataset& data, const FoldPlan& plan, std::size_t k, const Policy& policy,
                         RadiusDelta delta, const PropensityModel& prop, const detail::OutcomeNuisance& nu,
                         std::vector<double>& summands) {
  FoldResult fr;
  double total = 0.0;
  const double floor = prop.clip_floor();
  for (auto i : plan.rows[k]) {
    const auto xi = data.covariate(i);
    const double g = nu.g.predict(xi);
    double s = g;
    if (policy(xi) == data.actions[i]) {
      const double p = prop.predict(xi, data.actions[i]);
      if (p <= floor * (1.0 + 1e-12)) ++fr.clipped;
      s += (nu.big_g(xi, data.rewards[i], delta) - g) / p;
    }
    summands[i] = s;
    total += s;
  }
  fr.value = total / static_cast<double>(plan.rows[k].size());
  if (nu.field) {
    fr.floor_fraction = nu.field->diagnostics.floor_fraction;
    fr.field_samples = nu.field->diagnostics.samples;
  }
  return fr;
}

RobustValueReport assemble(const Dataset& data, RadiusDelta delta, std::vector<FoldResult>& folds,
                           std::vector<double> summands, const std::vector<PropensityModel>& props) {
  RobustValueReport rep;
  rep.n = data.size();
  rep.delta = delta.value();
  double acc = 0.0;
  std::size_t clipped = 0;
  rep.diagnostics.field_samples_min = folds.empty() ? 0 : folds.front().field_samples;
  for (auto& f : folds) {
    rep.per_fold.push_back(f.value);
    acc += f.value;
    clipped += f.clipped;
    rep.diagnostics.floor_fraction += f.floor_fraction / static_cast<double>(folds.size());
    rep.diagnostics.field_samples_min = std::min(rep.diagnostics.field_samples_min, f.field_samples);
  }
  rep.estimate = -acc / static_cast<double>(folds.size());
  rep.diagnostics.clip_rate = static_cast<double>(clipped) / static_cast<double>(data.size());
  for (std::size_t k = 0; k < props.size(); ++k)
    for (const auto& w : props[k].warnings()) rep.diagnostics.warnings.push_back("fold " + std::to_string(k + 1) + ": " + w);
  rep.std_error = detail::sample_sd(summands) / std::sqrt(static_cast<double>(data.size()));
  rep.summands = std::move(summands);
  return rep;
}

std::vector<RobustValueReport> run(const Dataset& data, const Policy& policy, std::span<const double> deltas,
                                   const EstimatorConfig& cfg, OutcomeTarget target) {
  check_inputs(data, cfg);
  const FoldPlan plan = make_folds(data.size(), cfg.K, cfg.seed);
  std::vector<PropensityModel> props(plan.K);
  parallel_for(plan.K, [&](std::size_t k) { props[k] = detail::fit_fold_propensity(data, plan, k, cfg); });

  std::vector<RobustValueReport> reports;
  for (double dv : deltas) {
    const RadiusDelta delta(dv);
    std::vector<FoldResult> folds(plan.K);
    std::vector<double> summands(data.size(), 0.0);
    parallel_for(plan.K, [&](std::size_t k) {
      const auto nu = detail::fit_fold_outcome(data, plan, k, policy, delta, cfg, target);
      folds[k] = evaluate_fold(data, plan, k, policy, delta, props[k], nu, summands);
    });
    reports.push_back(assemble(data, delta, folds, std::move(summands), props));
  }
  return reports;
}

}  // namespace

RobustValueReport estimate_policy_value(const Dataset& data, const Policy& policy, RadiusDelta delta,
                                        const EstimatorConfig& cfg) {
  const double d = delta.value();
  return run(data, policy, {&d, 1}, cfg, OutcomeTarget::DualLoss).front();
}

std::vector<RobustValueReport> estimate_policy_value_sweep(const Dataset& data, const Policy& policy,
                                                           std::span<const double> deltas,
                                                           const EstimatorConfig& cfg) {
  if (deltas.empty()) throw InvalidArgument("estimate_policy_value_sweep: empty delta grid");
  return run(data, policy, deltas, cfg, OutcomeTarget::DualLoss);
}

RobustValueReport estimate_policy_value_aipw(const Dataset& data, const Policy& policy, const EstimatorConfig& cfg) {
  const double d = 0.0;
  auto rep = run(data, policy, {&d, 1}, cfg, OutcomeTarget::NegatedOutcome).front();
  return rep;
}

RobustValueReport estimate_policy_value_with_covariate_shift(const Dataset& data,
                                                             std::span<const double> target_x,
                                                             const Policy& policy, RadiusDelta delta,
                                                             const EstimatorConfig& cfg,
                                                             std::function<double(Covariate)> ratio) {
  check_inputs(data, cfg);
  const std::size_t d = data.dim;
  if (target_x.empty() || target_x.size() % d != 0)
    throw InvalidArgument("covariate shift: target covariates empty or not a multiple of the dimension");
  const std::size_t m = target_x.size() / d;
  const FoldPlan plan = make_folds(data.size(), cfg.K, cfg.seed);
  const FoldPlan tplan = make_folds(m, cfg.K, derive_seed(cfg.seed, {detail::kRoleRatio}));
  const double cap = cfg.ratio_cap;

  auto quad = [d](Covariate x, std::vector<double>& z) {
    z.resize(2 * d);
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = x[j];
      z[d + j] = x[j] * x[j];
    }
  };

  std::vector<PropensityModel> props(plan.K);
  std::vector<FoldResult> folds(plan.K);
  std::vector<double> src_terms(data.size(), 0.0);
  std::vector<double> tgt_terms(m, 0.0);
  parallel_for(plan.K, [&](std::size_t k) {
    props[k] = detail::fit_fold_propensity(data, plan, k, cfg);
    const auto nu = detail::fit_fold_outcome(data, plan, k, policy, delta, cfg, OutcomeTarget::DualLoss);

    // Discriminator: label 1 for target covariates, 0 for source ones.
    std::function<double(Covariate)> r = ratio;
    if (!r) {
      const auto& srows = plan.rows[plan.next(k, 1)];
      const auto& trows = tplan.rows[tplan.next(k, 1)];
      std::vector<double> z, buf;
      std::vector<int> labels;
      for (auto i : srows) {
        quad(data.covariate(i), buf);
        z.insert(z.end(), buf.begin(), buf.end());
        labels.push_back(0);
      }
      for (auto j : trows) {
        quad(Covariate{target_x.data() + j * d, d}, buf);
        z.insert(z.end(), buf.begin(), buf.end());
        labels.push_back(1);
      }
      auto coef = fit_logistic(z, 2 * d, labels, 1e-4, 100);
      const double prior = static_cast<double>(srows.size()) / static_cast<double>(trows.size());
      r = [coef = std::move(coef), prior, quad](Covariate x) {
        thread_local std::vector<double> zz;
        quad(x, zz);
        return prior * std::exp(logistic_logit(coef, zz));
      };
    }

    FoldResult fr;
    double src = 0.0;
    for (auto i : plan.rows[k]) {
      const auto xi = data.covariate(i);
      double s = 0.0;
      if (policy(xi) == data.actions[i]) {
        double w = r(xi);
        if (!ratio && w > cap) {
          w = cap;
          ++fr.clipped;
        }
        const double p = props[k].predict(xi, data.actions[i]);
        s = w * (nu.big_g(xi, data.rewards[i], delta) - nu.g.predict(xi)) / p;
      }
      src_terms[i] = s;
      src += s;
    }
    double tgt = 0.0;
    for (auto j : tplan.rows[k]) {
      const double g = nu.g.predict(Covariate{target_x.data() + j * d, d});
      tgt_terms[j] = g;
      tgt += g;
    }
    fr.value = src / static_cast<double>(plan.rows[k].size()) + tgt / static_cast<double>(tplan.rows[k].size());
    fr.floor_fraction = nu.field->diagnostics.floor_fraction;
    fr.field_samples = nu.field->diagnostics.samples;
    folds[k] = std::move(fr);
  });

  RobustValueReport rep = assemble(data, delta, folds, src_terms, props);
  rep.diagnostics.ratio_clipped = 0;
  for (const auto& f : folds) rep.diagnostics.ratio_clipped += f.clipped;
  rep.diagnostics.clip_rate = 0.0;
  if (rep.diagnostics.ratio_clipped > 0)
    rep.diagnostics.warnings.push_back(std::to_string(rep.diagnostics.ratio_clipped) +
                                       " estimated density ratios clipped at " + std::to_string(cap));
  const double se2 = std::pow(detail::sample_sd(src_terms), 2) / static_cast<double>(data.size()) +
                     std::pow(detail::sample_sd(tgt_terms), 2) / static_cast<double>(m);
  rep.std_error = std::sqrt(se2);
  return rep;
}

}  // namespace drpl
