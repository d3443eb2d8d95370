#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "drpl/baseline.hpp"
#include "drpl/bench.hpp"
#include "drpl/csv_io.hpp"
#include "drpl/error.hpp"
#include "drpl/estimator.hpp"
#include "drpl/learner.hpp"
#include "drpl/parallel.hpp"
#include "drpl/policy_tree.hpp"
#include "drpl/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace drpl;

namespace {

// Every flag that influences a command's output. Serialized next to the
// outputs; `--config` replays it.
struct RunConfig {
  std::string command;
  // simulate
  std::size_t n = 1000;
  std::string design = "linear";
  bool test = false;
  // inputs and outputs
  std::string data;
  std::string test_path;
  std::string policy = "rings";
  std::string out;
  std::string policy_out;
  // method
  std::vector<double> delta{0.1};
  std::size_t folds = 3;
  std::uint64_t seed = 0;
  int depth = 2;
  std::string basis = "spline";
  std::string propensity = "trees";
  std::string regression = "trees";
  double clip_floor = 0.01;
  double alpha_floor = kDefaultAlphaFloor;
  double eval_fraction = 0.0;
  std::string baseline;
  std::size_t kl_sphere = 0;
};

json to_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (c.command == "simulate") {
    j["n"] = c.n;
    j["design"] = c.design;
    j["test"] = c.test;
    j["seed"] = c.seed;
    j["out"] = c.out;
    return j;
  }
  if (c.command == "evaluate") {
    j["test"] = c.test_path;
  } else {
    j["data"] = c.data;
  }
  if (c.command != "learn") j["policy"] = c.policy;
  j["delta"] = c.delta;
  j["folds"] = c.folds;
  j["seed"] = c.seed;
  j["basis"] = c.basis;
  j["alpha_floor"] = c.alpha_floor;
  if (c.command != "evaluate") {
    j["propensity"] = c.propensity;
    j["regression"] = c.regression;
    j["clip_floor"] = c.clip_floor;
  }
  if (c.command == "learn") {
    j["depth"] = c.depth;
    j["eval_fraction"] = c.eval_fraction;
    j["baseline"] = c.baseline;
    j["test"] = c.test_path;
    j["policy_out"] = c.policy_out;
  }
  if (c.command == "evaluate") j["kl_sphere"] = c.kl_sphere;
  j["out"] = c.out;
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("command", c.command);
  get("n", c.n);
  get("design", c.design);
  get("seed", c.seed);
  get("out", c.out);
  get("data", c.data);
  get("policy", c.policy);
  get("delta", c.delta);
  get("folds", c.folds);
  get("basis", c.basis);
  get("alpha_floor", c.alpha_floor);
  get("propensity", c.propensity);
  get("regression", c.regression);
  get("clip_floor", c.clip_floor);
  get("depth", c.depth);
  get("eval_fraction", c.eval_fraction);
  get("baseline", c.baseline);
  get("policy_out", c.policy_out);
  get("kl_sphere", c.kl_sphere);
  if (j.contains("test")) {
    if (j.at("test").is_boolean())
      c.test = j.at("test").get<bool>();
    else
      c.test_path = j.at("test").get<std::string>();
  }
  return c;
}

std::string sidecar(const std::string& out, const std::string& suffix) {
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("write failed for '" + path + "'");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// "rings", "constant:k" (1-based) or a policy-tree JSON file.
Policy resolve_policy(const std::string& spec, std::size_t dim, std::size_t num_actions) {
  if (spec == "rings") {
    if (dim != kLinearBoundaryDim || num_actions < kLinearBoundaryActions)
      throw InvalidArgument("policy 'rings' needs 5 covariates and 3 actions");
    return target_policy_rings;
  }
  if (spec.rfind("constant:", 0) == 0) {
    int k = 0;
    try {
      k = std::stoi(spec.substr(9));
    } catch (const std::exception&) {
      throw InvalidArgument("policy '" + spec + "': expected constant:<action>");
    }
    if (k < 1 || static_cast<std::size_t>(k) > num_actions)
      throw InvalidArgument("policy '" + spec + "': action out of range");
    return constant_policy(k - 1);
  }
  const auto tree = PolicyTree::from_json(read_text(spec));
  if (tree.max_feature() >= static_cast<int>(dim))
    throw InvalidArgument("policy '" + spec + "' uses feature " + std::to_string(tree.max_feature() + 1) +
                          " but the data has " + std::to_string(dim));
  if (tree.max_action() >= static_cast<int>(num_actions))
    throw InvalidArgument("policy '" + spec + "' uses action " + std::to_string(tree.max_action() + 1) +
                          " but the data has " + std::to_string(num_actions));
  return tree.as_policy();
}

BasisFactory resolve_basis(const std::string& spec) {
  if (spec == "spline") return {};
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used == s.size() && v >= 0) return v;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("basis '" + spec + "': expected spline, spline:<knots> or poly:<degree>");
  };
  if (spec.rfind("spline:", 0) == 0) {
    const int knots = number(spec.substr(7));
    return [knots](std::span<const double> x, std::size_t dim) { return BasisSpec::additive_spline(x, dim, knots); };
  }
  if (spec.rfind("poly:", 0) == 0) {
    const int degree = number(spec.substr(5));
    return [degree](std::span<const double>, std::size_t dim) { return BasisSpec::polynomial(dim, degree); };
  }
  throw InvalidArgument("basis '" + spec + "': expected spline, spline:<knots> or poly:<degree>");
}

EstimatorConfig estimator_config(const RunConfig& c) {
  EstimatorConfig e;
  e.K = c.folds;
  e.seed = c.seed;
  e.basis = resolve_basis(c.basis);
  e.field.alpha_floor = c.alpha_floor;
  e.propensity.clip_floor = c.clip_floor;
  if (c.propensity == "logistic")
    e.propensity.kind = PropensityKind::MultinomialLogistic;
  else if (c.propensity != "trees")
    throw InvalidArgument("propensity '" + c.propensity + "': expected trees or logistic");
  if (c.regression == "kernel")
    e.regression.kind = RegressionKind::NadarayaWatson;
  else if (c.regression != "trees")
    throw InvalidArgument("regression '" + c.regression + "': expected trees or kernel");
  return e;
}

RadiusDelta single_delta(const RunConfig& c) {
  if (c.delta.size() != 1) throw InvalidArgument(c.command + " takes exactly one --delta");
  return RadiusDelta(c.delta.front());
}

json report_json(const RobustValueReport& r) {
  json j;
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["ci95"] = {r.estimate - 1.959963984540054 * r.std_error, r.estimate + 1.959963984540054 * r.std_error};
  j["per_fold"] = r.per_fold;
  j["n"] = r.n;
  j["delta"] = r.delta;
  json d;
  d["clip_rate"] = r.diagnostics.clip_rate;
  d["floor_fraction"] = r.diagnostics.floor_fraction;
  d["field_samples_min"] = r.diagnostics.field_samples_min;
  d["ratio_clipped"] = r.diagnostics.ratio_clipped;
  d["in_sample"] = r.diagnostics.in_sample;
  d["warnings"] = r.diagnostics.warnings;
  j["diagnostics"] = d;
  return j;
}

void run_simulate(const RunConfig& c) {
  if (c.design == "linear") {
    if (c.test)
      write_outcomes_csv(c.out, simulate_linear_boundary_outcomes(c.n, c.seed), true);
    else
      write_dataset_csv(c.out, simulate_linear_boundary(c.n, c.seed));
  } else if (c.design == "bernoulli") {
    if (c.test) throw InvalidArgument("design 'bernoulli' has no potential-outcome variant");
    write_dataset_csv(c.out, simulate_bernoulli_constant(c.n, c.seed));
  } else {
    throw InvalidArgument("design '" + c.design + "': expected linear or bernoulli");
  }
}

void run_estimate(const RunConfig& c) {
  const auto data = read_dataset_csv(c.data);
  const auto policy = resolve_policy(c.policy, data.dim, data.num_actions);
  const auto cfg = estimator_config(c);
  json out;
  out["policy"] = c.policy;
  if (c.delta.size() == 1) {
    out["report"] = report_json(estimate_policy_value(data, policy, RadiusDelta(c.delta.front()), cfg));
  } else {
    for (const auto& r : estimate_policy_value_sweep(data, policy, c.delta, cfg)) out["reports"].push_back(report_json(r));
  }
  write_json(c.out, out);
}

void run_learn(const RunConfig& c) {
  const auto data = read_dataset_csv(c.data);
  const RadiusDelta delta = single_delta(c);
  LearnerConfig lc;
  lc.estimator = estimator_config(c);
  lc.depth = c.depth;
  lc.eval_fraction = c.eval_fraction;
  const auto res = learn(data, delta, lc);
  write_text(c.policy_out, res.tree.to_json() + "\n");

  json out;
  out["policy"] = json::parse(res.tree.to_json());
  out["search_value"] = res.search_value;
  out["report"] = report_json(res.report);

  if (!c.baseline.empty()) {
    if (c.baseline != "joint") throw InvalidArgument("baseline '" + c.baseline + "': expected joint");
    BaselineConfig bc;
    bc.K = c.folds;
    bc.seed = c.seed;
    bc.propensity = lc.estimator.propensity;
    bc.alpha_floor = c.alpha_floor;
    const auto base = learn_joint_dro(data, delta, c.depth, bc);
    write_text(sidecar(c.out, ".baseline.policy.json"), base.tree.to_json() + "\n");

    // Both trees scored under the same yardsticks.
    const auto bundle = fit_per_action_nuisances(data, delta, lc.estimator);
    const auto weights = cross_fitted_ipw_weights(data, bc);
    std::optional<PotentialOutcomeTable> test;
    if (!c.test_path.empty()) test = read_outcomes_csv(c.test_path);
    json rows = json::array();
    for (const auto& [name, tree] : {std::pair{std::string("LN"), res.tree}, std::pair{std::string("joint"), base.tree}}) {
      json row;
      row["method"] = name;
      row["policy"] = json::parse(tree.to_json());
      row["robust_estimate"] = evaluate_with_bundle(data, bundle, tree.as_policy()).estimate;
      row["joint_value"] = joint_dro_policy_value(data, weights, tree.as_policy(), delta, c.alpha_floor).value;
      if (test) row["v_bar_test"] = empirical_robust_value(*test, tree.as_policy(), delta);
      rows.push_back(row);
    }
    out["comparison"] = rows;
  }
  write_json(c.out, out);
}

void run_evaluate(const RunConfig& c) {
  const auto test = read_outcomes_csv(c.test_path);
  const auto policy = resolve_policy(c.policy, test.dim, test.num_actions);
  const RadiusDelta delta = single_delta(c);
  if (c.kl_sphere > 0 && !test.has_metadata())
    throw InvalidArgument("--kl-sphere needs mu/sigma metadata columns in '" + c.test_path + "'");
  EmpiricalValueConfig ec;
  ec.basis = resolve_basis(c.basis);
  ec.field.alpha_floor = c.alpha_floor;
  json out;
  out["policy"] = c.policy;
  out["delta"] = delta.value();
  out["n"] = test.size();
  double mean = 0.0;
  for (double y : test.chosen_outcomes(policy)) mean += y;
  out["mean_outcome"] = mean / static_cast<double>(test.size());
  out["v_bar"] = empirical_robust_value(test, policy, delta, ec);
  if (c.kl_sphere > 0) {
    std::vector<PotentialOutcomeTable> sets;
    for (std::size_t j = 0; j < c.kl_sphere; ++j) sets.push_back(kl_sphere_perturb(test, delta, derive_seed(c.seed, {j})));
    out["kl_sphere_sets"] = c.kl_sphere;
    out["v_min"] = v_min_metric(policy, sets);
  }
  write_json(c.out, out);
}

void execute(RunConfig c) {
  if (c.out.empty()) throw InvalidArgument("--out is required");
  if (c.command == "learn" && c.policy_out.empty()) c.policy_out = sidecar(c.out, ".policy.json");
  if (c.command == "simulate")
    run_simulate(c);
  else if (c.command == "estimate")
    run_estimate(c);
  else if (c.command == "learn")
    run_learn(c);
  else if (c.command == "evaluate")
    run_evaluate(c);
  else
    throw InvalidArgument("unknown command '" + c.command + "'");
  write_json(sidecar(c.out, ".run.json"), to_json(c));
}

int fail(const std::string& kind, const std::string& message, int code) {
  json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concept-drift robust off-policy evaluation and policy learning"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string config_path;
  unsigned threads = 0;
  app.add_option("--config", config_path, "Re-run from a RunConfig JSON written by a previous run");
  app.add_option("--threads", threads, "Cap on worker threads (0 = all cores)");

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "Output path");
    sub->add_option("--seed", cfg.seed, "Random seed (DRP_SEED overrides)");
  };
  auto method = [&](CLI::App* sub) {
    sub->add_option("--delta", cfg.delta, "KL radius (estimate accepts several)")->expected(1, -1);
    sub->add_option("--folds", cfg.folds, "Cross-fitting folds (>= 3)");
    sub->add_option("--basis", cfg.basis, "spline | spline:<knots> | poly:<degree>");
    sub->add_option("--alpha-floor", cfg.alpha_floor, "Lower bound on the dual alpha");
  };
  auto nuisance = [&](CLI::App* sub) {
    sub->add_option("--propensity", cfg.propensity, "trees | logistic");
    sub->add_option("--regression", cfg.regression, "trees | kernel");
    sub->add_option("--clip-floor", cfg.clip_floor, "Propensity clipping floor");
  };

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic dataset");
  common(sim);
  sim->add_option("--n", cfg.n, "Rows");
  sim->add_option("--design", cfg.design, "linear | bernoulli");
  sim->add_flag("--test,--with-potential-outcomes", cfg.test, "Write all potential outcomes with mu/sigma columns");

  auto* est = app.add_subcommand("estimate", "Cross-fitted robust value of a policy");
  common(est);
  method(est);
  nuisance(est);
  est->add_option("--data", cfg.data, "Logged dataset CSV");
  est->add_option("--policy", cfg.policy, "rings | constant:<k> | policy JSON file");

  auto* lrn = app.add_subcommand("learn", "Learn a robust policy tree");
  common(lrn);
  method(lrn);
  nuisance(lrn);
  lrn->add_option("--data", cfg.data, "Logged dataset CSV");
  lrn->add_option("--depth", cfg.depth, "Tree depth (0-2)");
  lrn->add_option("--eval-fraction", cfg.eval_fraction, "Holdout fraction for an out-of-sample report");
  lrn->add_option("--baseline", cfg.baseline, "Also run a comparator: joint");
  lrn->add_option("--test", cfg.test_path, "Potential-outcome CSV for the comparison row");
  lrn->add_option("--policy-out", cfg.policy_out, "Policy JSON path");

  auto* evl = app.add_subcommand("evaluate", "Test-set robust value and KL-sphere worst case");
  common(evl);
  method(evl);
  evl->add_option("--test", cfg.test_path, "Potential-outcome CSV");
  evl->add_option("--policy", cfg.policy, "rings | constant:<k> | policy JSON file");
  evl->add_option("--kl-sphere", cfg.kl_sphere, "Number of perturbed sets for the worst-case metric");

  try {
    if (argc > 1 && std::string(argv[1]) == "--config") app.require_subcommand(0, 1);
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    set_max_threads(threads);
    if (!config_path.empty()) {
      const auto j = json::parse(read_text(config_path));
      execute(from_json(j));
      return 0;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (const char* env = std::getenv("DRP_SEED"); env && *env) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw InvalidArgument(std::string("DRP_SEED is not an unsigned integer: ") + env);
      }
    }
    execute(cfg);
  } catch (const ParseError& e) {
    return fail("parse", e.what(), 1);
  } catch (const InvalidArgument& e) {
    return fail("invalid_argument", e.what(), 1);
  } catch (const InsufficientSamples& e) {
    return fail("insufficient_samples", e.what(), 1);
  } catch (const json::exception& e) {
    return fail("config", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("error", e.what(), 1);
  }
  return 0;
}
