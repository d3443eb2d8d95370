#include <random>
#include <vector>

#include "doctest.h"
#include "drpl/error.hpp"
#include "drpl/policy_tree.hpp"
#include "drpl/tree_search.hpp"
#include "tree_oracle.hpp"

using namespace drpl;

namespace {

struct Instance {
  ScoreMatrix s;
  std::vector<double> x;
  std::size_t dim;
};

Instance random_instance(std::size_t n, std::size_t dim, std::size_t M, std::uint64_t seed, bool discrete = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> level(0, 4);
  Instance in{{n, M, std::vector<double>(n * M)}, std::vector<double>(n * dim), dim};
  for (auto& v : in.s.values) v = z(rng);
  for (auto& v : in.x) v = discrete ? level(rng) : z(rng);
  return in;
}

PolicyTree random_tree(const Instance& in, int depth, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> act(0, static_cast<int>(in.s.num_actions) - 1);
  std::uniform_int_distribution<std::size_t> feat(0, in.dim - 1), row(0, in.s.n - 1);
  if (depth == 0 || rng() % 4 == 0) return PolicyTree::leaf(act(rng));
  const auto f = feat(rng);
  return PolicyTree::split(static_cast<int>(f), in.x[row(rng) * in.dim + f], random_tree(in, depth - 1, rng),
                           random_tree(in, depth - 1, rng));
}

// Greedy: best depth-1 split at the root, then best split inside each child.
PolicyTree greedy_tree(const Instance& in) {
  auto fit = [&](const std::vector<std::size_t>& rows, int depth) {
    ScoreMatrix sub{rows.size(), in.s.num_actions, {}};
    std::vector<double> sx;
    for (auto i : rows) {
      for (std::size_t a = 0; a < in.s.num_actions; ++a) sub.values.push_back(in.s.at(i, a));
      for (std::size_t f = 0; f < in.dim; ++f) sx.push_back(in.x[i * in.dim + f]);
    }
    return search_policy_tree(sub, sx, in.dim, depth).tree;
  };
  std::vector<std::size_t> all(in.s.n);
  for (std::size_t i = 0; i < in.s.n; ++i) all[i] = i;
  const auto root = fit(all, 1);
  if (root.nodes().size() == 1) return root;
  const auto& r = root.nodes()[0];
  std::vector<std::size_t> l, rr;
  for (auto i : all) (in.x[i * in.dim + static_cast<std::size_t>(r.feature)] <= r.threshold ? l : rr).push_back(i);
  return PolicyTree::split(r.feature, r.threshold, fit(l, 1), fit(rr, 1));
}

}  // namespace

TEST_CASE("depth 0 returns the best column") {
  const auto in = random_instance(30, 2, 4, 1);
  const auto res = search_policy_tree(in.s, in.x, in.dim, 0);
  CHECK(res.tree.nodes().size() == 1);
  CHECK(res.value == doctest::Approx(oracle::best_value(in.s, in.x, in.dim, 0)).epsilon(1e-14));
}

TEST_CASE("depth 1 matches brute-force enumeration") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto in = random_instance(20, 2, 3, seed);
    const auto res = search_policy_tree(in.s, in.x, in.dim, 1);
    CHECK(res.value == doctest::Approx(oracle::best_value(in.s, in.x, in.dim, 1)).epsilon(1e-12));
    CHECK(res.value == in.s.policy_value(res.tree, in.x, in.dim));
  }
}

TEST_CASE("depth 2 matches brute-force enumeration, including tied covariates") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto in = random_instance(24, 3, 3, 100 + seed, seed % 2 == 1);
    const auto res = search_policy_tree(in.s, in.x, in.dim, 2);
    CHECK(res.value == doctest::Approx(oracle::best_value(in.s, in.x, in.dim, 2)).epsilon(1e-12));
    CHECK(res.tree.depth() <= 2);
  }
}

TEST_CASE("exact search dominates greedy and random trees") {
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = random_instance(60, 3, 3, 200 + seed);
    const auto res = search_policy_tree(in.s, in.x, in.dim, 2);
    CHECK(res.value >= in.s.policy_value(greedy_tree(in), in.x, in.dim) - 1e-12);
    for (int t = 0; t < 1000; ++t) CHECK(res.value >= in.s.policy_value(random_tree(in, 2, rng), in.x, in.dim) - 1e-12);
  }
}

TEST_CASE("per-row shifts leave the argmax tree unchanged") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto in = random_instance(20, 2, 3, 300 + seed);
    for (int depth : {0, 1}) {
      const auto base = search_policy_tree(in.s, in.x, in.dim, depth);
      auto shifted = in.s;
      for (std::size_t i = 0; i < shifted.n; ++i) {
        const double c = 3.0 * z(rng);
        for (std::size_t a = 0; a < shifted.num_actions; ++a) shifted.at(i, a) += c;
      }
      CHECK(search_policy_tree(shifted, in.x, in.dim, depth).tree == base.tree);
    }
  }
}

TEST_CASE("a dominant column yields a constant tree at every depth") {
  auto in = random_instance(40, 2, 3, 7);
  for (std::size_t i = 0; i < in.s.n; ++i) in.s.at(i, 1) = 10.0 + in.s.at(i, 1);
  for (int depth : {0, 1, 2}) {
    const auto res = search_policy_tree(in.s, in.x, in.dim, depth);
    CHECK(res.tree == PolicyTree::leaf(1));
  }
}

TEST_CASE("unsupported depth") {
  const auto in = random_instance(10, 2, 2, 1);
  CHECK_THROWS_WITH_AS(search_policy_tree(in.s, in.x, in.dim, 3), "unsupported depth", InvalidArgument);
}

TEST_CASE("policy tree evaluation and JSON round-trip") {
  const auto tree = PolicyTree::split(0, 0.25, PolicyTree::leaf(2),
                                      PolicyTree::split(1, -1.0 / 3.0, PolicyTree::leaf(0), PolicyTree::leaf(1)));
  CHECK(tree.depth() == 2);
  CHECK(tree.max_feature() == 1);
  CHECK(tree.max_action() == 2);
  const std::vector<double> a{0.25, 5.0}, b{0.3, -0.5}, c{0.3, 0.0};
  CHECK(tree(a) == 2);
  CHECK(tree(b) == 0);
  CHECK(tree(c) == 1);
  const auto back = PolicyTree::from_json(tree.to_json());
  CHECK(back == tree);
  CHECK(back.nodes()[2].threshold == -1.0 / 3.0);
  CHECK(PolicyTree::from_json(PolicyTree::leaf(0).to_json()) == PolicyTree::leaf(0));

  std::mt19937_64 rng(1);
  const auto in = random_instance(30, 3, 4, 5);
  for (int t = 0; t < 200; ++t) {
    const auto r = random_tree(in, 2, rng);
    CHECK(PolicyTree::from_json(r.to_json()) == r);
  }
}

TEST_CASE("policy JSON errors carry a location") {
  CHECK_THROWS_AS(PolicyTree::from_json("not json"), ParseError);
  CHECK_THROWS_AS(PolicyTree::from_json("{\"depth\": 1}"), ParseError);
  CHECK_THROWS_WITH(PolicyTree::from_json(R"({"depth":1,"nodes":[{"feature":1,"threshold":0.5},{"action":0},{"action":2}]})"),
                    doctest::Contains("nodes[1]"));
  CHECK_THROWS_WITH(PolicyTree::from_json(R"({"depth":1,"nodes":[{"feature":1,"threshold":"x"},{"action":1},{"action":2}]})"),
                    doctest::Contains("nodes[0]"));
  CHECK_THROWS_AS(PolicyTree::from_json(R"({"depth":1,"nodes":[{"feature":1,"threshold":0.5},{"action":1}]})"),
                  ParseError);
  CHECK_THROWS_AS(PolicyTree::from_json(R"({"depth":0,"nodes":[{"feature":1,"threshold":0.5},{"action":1},{"action":2}]})"),
                  ParseError);
}
