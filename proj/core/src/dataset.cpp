#include "drpl/dataset.hpp"

#include <cmath>
#include <string>

#include "drpl/error.hpp"

namespace drpl {

void Dataset::push_back(Covariate xi, int a, double y) {
  if (dim == 0) dim = xi.size();
  if (xi.size() != dim) throw InvalidArgument("covariate dimension mismatch");
  x.insert(x.end(), xi.begin(), xi.end());
  actions.push_back(a);
  rewards.push_back(y);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  out.num_actions = num_actions;
  out.x.reserve(rows.size() * dim);
  out.actions.reserve(rows.size());
  out.rewards.reserve(rows.size());
  for (auto i : rows) {
    auto xi = covariate(i);
    out.x.insert(out.x.end(), xi.begin(), xi.end());
    out.actions.push_back(actions[i]);
    out.rewards.push_back(rewards[i]);
  }
  return out;
}

void Dataset::validate() const {
  if (dim == 0) throw InvalidArgument("dataset has zero covariate dimension");
  if (num_actions == 0) throw InvalidArgument("dataset has zero actions");
  if (x.size() != actions.size() * dim || rewards.size() != actions.size())
    throw InvalidArgument("dataset column lengths disagree");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || static_cast<std::size_t>(actions[i]) >= num_actions)
      throw InvalidArgument("action out of range at row " + std::to_string(i));
    if (!std::isfinite(rewards[i])) throw InvalidArgument("non-finite reward at row " + std::to_string(i));
  }
  for (double v : x)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite covariate");
}

void PotentialOutcomeTable::validate() const {
  if (dim == 0 || num_actions == 0) throw InvalidArgument("potential-outcome table has empty shape");
  if (x.size() % dim != 0) throw InvalidArgument("covariate block is not a multiple of dim");
  if (outcomes.size() != size() * num_actions) throw InvalidArgument("outcome block has wrong size");
  if (!mu.empty() && (mu.size() != outcomes.size() || sigma.size() != outcomes.size()))
    throw InvalidArgument("metadata block has wrong size");
  for (double s : sigma)
    if (!(s > 0.0)) throw InvalidArgument("arm sigma must be positive");
}

std::vector<double> PotentialOutcomeTable::chosen_outcomes(const Policy& policy) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const int a = policy(covariate(i));
    if (a < 0 || static_cast<std::size_t>(a) >= num_actions) throw InvalidArgument("policy returned an invalid action");
    out[i] = outcome(i, a);
  }
  return out;
}

Dataset PotentialOutcomeTable::as_dataset(const Policy& policy) const {
  Dataset d;
  d.dim = dim;
  d.num_actions = num_actions;
  d.x = x;
  d.actions.resize(size());
  d.rewards.resize(size());
  for (std::size_t i = 0; i < size(); ++i) {
    const int a = policy(covariate(i));
    if (a < 0 || static_cast<std::size_t>(a) >= num_actions) throw InvalidArgument("policy returned an invalid action");
    d.actions[i] = a;
    d.rewards[i] = outcome(i, a);
  }
  return d;
}

std::vector<std::size_t> rows_matching(const Dataset& data, const Policy& selector) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (selector(data.covariate(i)) == data.actions[i]) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> rows_with_action(const Dataset& data, int action) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data.actions[i] == action) rows.push_back(i);
  return rows;
}

Policy constant_policy(int action) {
  return [action](Covariate) { return action; };
}

}  // namespace drpl
