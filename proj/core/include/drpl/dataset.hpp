#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace drpl {

using Covariate = std::span<const double>;

/// A deterministic policy: covariate -> 0-based action index.
using Policy = std::function<int(Covariate)>;

/// Logged bandit feedback: (X_i, A_i, Y_i) with covariates stored row-major.
/// Actions are 0-based internally; the CSV format is 1-based.
struct Dataset {
  std::size_t dim = 0;
  std::size_t num_actions = 0;
  std::vector<double> x;
  std::vector<int> actions;
  std::vector<double> rewards;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
  Covariate covariate(std::size_t i) const { return {x.data() + i * dim, dim}; }

  void push_back(Covariate xi, int a, double y);
  Dataset subset(std::span<const std::size_t> rows) const;

  /// Throws InvalidArgument on inconsistent sizes, out-of-range actions or
  /// non-finite values.
  void validate() const;
};

/// Test-time table with every potential outcome Y_i(1..M). When the rows were
/// generated from Gaussian arms, mu/sigma carry each arm's law (row-major n x M).
struct PotentialOutcomeTable {
  std::size_t dim = 0;
  std::size_t num_actions = 0;
  std::vector<double> x;
  std::vector<double> outcomes;
  std::vector<double> mu;
  std::vector<double> sigma;

  std::size_t size() const { return dim == 0 ? 0 : x.size() / dim; }
  bool empty() const { return size() == 0; }
  bool has_metadata() const { return !mu.empty() && mu.size() == outcomes.size() && sigma.size() == outcomes.size(); }
  Covariate covariate(std::size_t i) const { return {x.data() + i * dim, dim}; }
  double outcome(std::size_t i, int a) const { return outcomes[i * num_actions + static_cast<std::size_t>(a)]; }

  void validate() const;

  /// Realized rewards when every row follows `policy`.
  std::vector<double> chosen_outcomes(const Policy& policy) const;

  /// The logged dataset obtained by letting `policy` pick the action.
  Dataset as_dataset(const Policy& policy) const;
};

/// Index lists of rows with A_i == selector(X_i).
std::vector<std::size_t> rows_matching(const Dataset& data, const Policy& selector);
std::vector<std::size_t> rows_with_action(const Dataset& data, int action);

Policy constant_policy(int action);

}  // namespace drpl
