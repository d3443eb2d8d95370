#include "drpl/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "drpl/error.hpp"

namespace drpl {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t s = 0;
    while (s < cell.size() && cell[s] == ' ') ++s;
    cells.push_back(cell.substr(s));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse number '" + s + "'");
  return v;
}

// Counts the leading run of columns named <prefix>1, <prefix>2, ... starting at `from`.
std::size_t count_prefixed(const std::vector<std::string>& header, std::size_t from, const std::string& prefix) {
  std::size_t k = 0;
  while (from + k < header.size() && header[from + k] == prefix + std::to_string(k + 1)) ++k;
  return k;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for reading");
  return f;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.dim; ++j) out << 'x' << (j + 1) << ',';
  out << "a,y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.covariate(i)) out << format_double(v) << ',';
    out << (data.actions[i] + 1) << ',' << format_double(data.rewards[i]) << '\n';
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  auto f = open_out(path);
  write_dataset_csv(f, data);
  if (!f) throw Error("write failed for '" + path + "'");
}

Dataset read_dataset_csv(std::istream& in, std::size_t num_actions) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty dataset file");
  const auto header = split_line(line);
  const std::size_t d = count_prefixed(header, 0, "x");
  if (d == 0 || header.size() != d + 2 || header[d] != "a" || header[d + 1] != "y")
    throw ParseError("line 1: expected header x1,...,xd,a,y");
  Dataset data;
  data.dim = d;
  std::size_t line_no = 1;
  int max_action = 0;
  std::vector<double> row(d);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != d + 2) throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(d + 2) + " fields");
    for (std::size_t j = 0; j < d; ++j) row[j] = parse_double(cells[j], line_no);
    const double a = parse_double(cells[d], line_no);
    if (a < 1 || a != static_cast<double>(static_cast<int>(a)))
      throw ParseError("line " + std::to_string(line_no) + ": action must be a positive integer");
    max_action = std::max(max_action, static_cast<int>(a));
    data.push_back(row, static_cast<int>(a) - 1, parse_double(cells[d + 1], line_no));
  }
  data.num_actions = num_actions ? num_actions : static_cast<std::size_t>(max_action);
  data.validate();
  return data;
}

Dataset read_dataset_csv(const std::string& path, std::size_t num_actions) {
  auto f = open_in(path);
  return read_dataset_csv(f, num_actions);
}

void write_outcomes_csv(std::ostream& out, const PotentialOutcomeTable& t, bool with_metadata) {
  with_metadata = with_metadata && t.has_metadata();
  const std::size_t M = t.num_actions;
  for (std::size_t j = 0; j < t.dim; ++j) out << 'x' << (j + 1) << ',';
  for (std::size_t a = 0; a < M; ++a) out << (a ? "," : "") << 'y' << (a + 1);
  if (with_metadata) {
    for (std::size_t a = 0; a < M; ++a) out << ",mu" << (a + 1);
    for (std::size_t a = 0; a < M; ++a) out << ",sigma" << (a + 1);
  }
  out << '\n';
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (double v : t.covariate(i)) out << format_double(v) << ',';
    for (std::size_t a = 0; a < M; ++a) out << (a ? "," : "") << format_double(t.outcomes[i * M + a]);
    if (with_metadata) {
      for (std::size_t a = 0; a < M; ++a) out << ',' << format_double(t.mu[i * M + a]);
      for (std::size_t a = 0; a < M; ++a) out << ',' << format_double(t.sigma[i * M + a]);
    }
    out << '\n';
  }
}

void write_outcomes_csv(const std::string& path, const PotentialOutcomeTable& t, bool with_metadata) {
  auto f = open_out(path);
  write_outcomes_csv(f, t, with_metadata);
  if (!f) throw Error("write failed for '" + path + "'");
}

PotentialOutcomeTable read_outcomes_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty potential-outcome file");
  const auto header = split_line(line);
  const std::size_t d = count_prefixed(header, 0, "x");
  const std::size_t M = count_prefixed(header, d, "y");
  if (d == 0 || M == 0) throw ParseError("line 1: expected header x1..xd,y1..yM");
  bool meta = false;
  if (header.size() == d + 3 * M) {
    if (count_prefixed(header, d + M, "mu") != M || count_prefixed(header, d + 2 * M, "sigma") != M)
      throw ParseError("line 1: metadata columns must be mu1..muM,sigma1..sigmaM");
    meta = true;
  } else if (header.size() != d + M) {
    throw ParseError("line 1: unexpected column count");
  }
  PotentialOutcomeTable t;
  t.dim = d;
  t.num_actions = M;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) throw ParseError("line " + std::to_string(line_no) + ": wrong field count");
    for (std::size_t j = 0; j < d; ++j) t.x.push_back(parse_double(cells[j], line_no));
    for (std::size_t a = 0; a < M; ++a) t.outcomes.push_back(parse_double(cells[d + a], line_no));
    if (meta) {
      for (std::size_t a = 0; a < M; ++a) t.mu.push_back(parse_double(cells[d + M + a], line_no));
      for (std::size_t a = 0; a < M; ++a) t.sigma.push_back(parse_double(cells[d + 2 * M + a], line_no));
    }
  }
  t.validate();
  return t;
}

PotentialOutcomeTable read_outcomes_csv(const std::string& path) {
  auto f = open_in(path);
  return read_outcomes_csv(f);
}

}  // namespace drpl
