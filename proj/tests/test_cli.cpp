#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string err;
};

// Runs the CLI in `dir`, capturing stderr.
Run drpl(const fs::path& dir, const std::string& args) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" DRPL_CLI_PATH "' " + args + " 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  std::ifstream f(err);
  std::stringstream ss;
  ss << f.rdbuf();
  return {status, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t columns(const fs::path& csv) {
  std::ifstream f(csv);
  std::string header;
  std::getline(f, header);
  return static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
}

std::size_t rows(const fs::path& csv) {
  std::ifstream f(csv);
  std::size_t count = 0;
  for (std::string line; std::getline(f, line);) ++count;
  return count - 1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::current_path() / ("cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("simulate writes the documented layouts reproducibly") {
  const auto dir = scratch("simulate");
  REQUIRE(drpl(dir, "simulate --n 100 --seed 7 --out d.csv").code == 0);
  CHECK(columns(dir / "d.csv") == 7);
  CHECK(rows(dir / "d.csv") == 100);
  REQUIRE(drpl(dir, "simulate --n 100 --seed 7 --out e.csv").code == 0);
  CHECK(slurp(dir / "d.csv") == slurp(dir / "e.csv"));
  REQUIRE(drpl(dir, "simulate --n 50 --seed 7 --test --with-potential-outcomes --out t.csv").code == 0);
  CHECK(columns(dir / "t.csv") == 14);
  CHECK(fs::exists(dir / "t.run.json"));
}

TEST_CASE("estimate on the rings policy") {
  const auto dir = scratch("estimate");
  REQUIRE(drpl(dir, "simulate --n 1500 --seed 3 --out d.csv").code == 0);
  REQUIRE(drpl(dir, "estimate --data d.csv --policy rings --delta 0.1 --out r.json").code == 0);
  const auto r = load(dir / "r.json")["report"];
  CHECK(std::isfinite(r["estimate"].get<double>()));
  CHECK(r["std_error"].get<double>() > 0.0);

  REQUIRE(drpl(dir, "estimate --data d.csv --policy rings --delta 0.05 0.2 --out s.json").code == 0);
  const auto s = load(dir / "s.json")["reports"];
  REQUIRE(s.size() == 2);
  CHECK(s[1]["estimate"].get<double>() <= s[0]["estimate"].get<double>());
}

TEST_CASE("estimate at delta 0 on Bernoulli(0.5) rewards is near 0.5") {
  const auto dir = scratch("bernoulli");
  REQUIRE(drpl(dir, "simulate --design bernoulli --n 6000 --seed 5 --out d.csv").code == 0);
  REQUIRE(drpl(dir, "estimate --data d.csv --policy constant:2 --delta 0 --out r.json").code == 0);
  const auto r = load(dir / "r.json")["report"];
  CHECK(std::abs(r["estimate"].get<double>() - 0.5) <= 3.0 * r["std_error"].get<double>() + 1e-3);
}

TEST_CASE("learn is reproducible and replayable") {
  const auto dir = scratch("learn");
  REQUIRE(drpl(dir, "simulate --n 900 --seed 11 --out d.csv").code == 0);

  REQUIRE(drpl(dir, "learn --data d.csv --delta 0.1 --depth 0 --out l0.json").code == 0);
  const auto tree = load(dir / "l0.policy.json");
  REQUIRE(tree["nodes"].size() == 1);
  CHECK(tree["nodes"][0].contains("action"));

  REQUIRE(drpl(dir, "learn --data d.csv --delta 0.1 --depth 1 --seed 4 --out a.json --policy-out a.tree.json").code == 0);
  REQUIRE(drpl(dir, "learn --data d.csv --delta 0.1 --depth 1 --seed 4 --out b.json --policy-out b.tree.json").code == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(slurp(dir / "a.tree.json") == slurp(dir / "b.tree.json"));

  const std::string first = slurp(dir / "a.json");
  fs::remove(dir / "a.json");
  REQUIRE(drpl(dir, "--config a.run.json").code == 0);
  CHECK(slurp(dir / "a.json") == first);
}

TEST_CASE("learn with the joint baseline emits a comparison") {
  const auto dir = scratch("baseline");
  REQUIRE(drpl(dir, "simulate --n 900 --seed 12 --out d.csv").code == 0);
  REQUIRE(drpl(dir, "simulate --n 500 --seed 13 --test --out t.csv").code == 0);
  REQUIRE(drpl(dir, "learn --data d.csv --delta 0.1 --depth 1 --baseline joint --test t.csv --out l.json").code == 0);
  const auto rows = load(dir / "l.json")["comparison"];
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) CHECK(row.contains("v_bar_test"));
  CHECK(fs::exists(dir / "l.baseline.policy.json"));
}

TEST_CASE("evaluate at delta 0 reports the chosen-outcome mean") {
  const auto dir = scratch("evaluate");
  REQUIRE(drpl(dir, "simulate --n 800 --seed 21 --test --out t.csv").code == 0);
  REQUIRE(drpl(dir, "evaluate --test t.csv --policy rings --delta 0 --kl-sphere 1 --out e.json").code == 0);
  const auto e = load(dir / "e.json");
  CHECK(e["v_bar"].get<double>() == doctest::Approx(e["mean_outcome"].get<double>()).epsilon(1e-9));
  CHECK(e["v_min"].get<double>() == doctest::Approx(e["mean_outcome"].get<double>()).epsilon(0.1));
}

TEST_CASE("errors are one JSON line with a nonzero exit") {
  const auto dir = scratch("errors");
  REQUIRE(drpl(dir, "simulate --n 300 --seed 1 --out d.csv").code == 0);

  auto check_error = [](const Run& r, const std::string& needle) {
    CHECK(r.code != 0);
    REQUIRE(std::count(r.err.begin(), r.err.end(), '\n') == 1);
    const auto j = json::parse(r.err);
    CHECK(j.contains("error"));
    CHECK(j["message"].get<std::string>().find(needle) != std::string::npos);
  };

  check_error(drpl(dir, "evaluate --test d.csv --policy rings --delta 0.1 --kl-sphere 2 --out e.json"), "line 1");

  std::ofstream(dir / "bad.json") << R"({"depth": 1, "nodes": [{"feature": 1, "threshold": 0.0}, {"action": 1}, {"oops": 2}]})";
  check_error(drpl(dir, "estimate --data d.csv --policy bad.json --delta 0.1 --out r.json"), "nodes[2]");

  check_error(drpl(dir, "estimate --data d.csv --policy constant:9 --delta 0.1 --out r.json"), "out of range");
  check_error(drpl(dir, "estimate --bogus"), "bogus");
  check_error(drpl(dir, "simulate --n 10 --out /nonexistent/dir/x.csv"), "nonexistent");
}

TEST_CASE("DRP_SEED overrides --seed") {
  const auto dir = scratch("env");
  REQUIRE(drpl(dir, "simulate --n 50 --seed 99 --out a.csv").code == 0);
  REQUIRE(drpl(dir, "simulate --n 50 --seed 1 --out b.csv").code == 0);
  REQUIRE(std::system(("cd '" + dir.string() + "' && DRP_SEED=99 '" DRPL_CLI_PATH "' simulate --n 50 --seed 1 --out c.csv").c_str()) == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "c.csv"));
  CHECK(slurp(dir / "b.csv") != slurp(dir / "c.csv"));
}
