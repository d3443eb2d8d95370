#pragma once

#include <iosfwd>
#include <string>

#include "drpl/dataset.hpp"

namespace drpl {

// Dataset CSV:      x1,...,xd,a,y          (a is 1-based)
// Potential outcomes: x1,...,xd,y1,...,yM[,mu1..muM,sigma1..sigmaM]
// Floats are written with 17 significant digits so files round-trip exactly.

void write_dataset_csv(std::ostream& out, const Dataset& data);
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, std::size_t num_actions = 0);
Dataset read_dataset_csv(const std::string& path, std::size_t num_actions = 0);

void write_outcomes_csv(std::ostream& out, const PotentialOutcomeTable& table, bool with_metadata = true);
void write_outcomes_csv(const std::string& path, const PotentialOutcomeTable& table, bool with_metadata = true);
PotentialOutcomeTable read_outcomes_csv(std::istream& in);
PotentialOutcomeTable read_outcomes_csv(const std::string& path);

std::string format_double(double v);

}  // namespace drpl
