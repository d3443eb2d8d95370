#include <cstdio>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "drpl/bench.hpp"
#include "drpl/csv_io.hpp"
#include "drpl/error.hpp"

using namespace drpl;

TEST_CASE("dataset CSV round-trips bit-exactly") {
  const auto data = simulate_linear_boundary(200, 9);
  std::stringstream ss;
  write_dataset_csv(ss, data);
  const std::string text = ss.str();
  CHECK(text.rfind("x1,x2,x3,x4,x5,a,y\n", 0) == 0);
  const auto back = read_dataset_csv(ss);
  CHECK(back.dim == data.dim);
  CHECK(back.num_actions == 3);
  CHECK(back.x == data.x);
  CHECK(back.actions == data.actions);
  CHECK(back.rewards == data.rewards);
}

TEST_CASE("potential outcome CSV round-trips with and without metadata") {
  const auto table = simulate_linear_boundary_outcomes(50, 4);
  std::stringstream with, without;
  write_outcomes_csv(with, table, true);
  write_outcomes_csv(without, table, false);
  const auto a = read_outcomes_csv(with);
  const auto b = read_outcomes_csv(without);
  CHECK(a.outcomes == table.outcomes);
  CHECK(a.mu == table.mu);
  CHECK(a.sigma == table.sigma);
  CHECK(a.has_metadata());
  CHECK(b.outcomes == table.outcomes);
  CHECK_FALSE(b.has_metadata());
  CHECK(b.num_actions == 3);
}

TEST_CASE("CSV parse errors") {
  std::stringstream bad_action("x1,a,y\n0.5,0,1.0\n");
  CHECK_THROWS_AS(read_dataset_csv(bad_action), ParseError);
  std::stringstream bad_number("x1,a,y\n0.5,1,abc\n");
  CHECK_THROWS_AS(read_dataset_csv(bad_number), ParseError);
  std::stringstream short_row("x1,a,y\n0.5,1\n");
  CHECK_THROWS_AS(read_dataset_csv(short_row), ParseError);
  CHECK_THROWS(read_dataset_csv(std::string("/nonexistent/dir/file.csv")));
}

TEST_CASE("format_double uses 17 significant digits") {
  const double v = 0.1;
  CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(1.0) == "1");
}
