#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "mondrian/training_set.hpp"

namespace mondrian::harness {

/// Training data CSV: header `x1,...,xd,y`, one observation per row, `.` as
/// decimal separator. Covariates outside [0,1] are rejected.
TrainingSet read_training_csv(const std::string& path);
TrainingSet parse_training_csv(std::istream& in, const std::string& source = "<stream>");

/// Query CSV: header `x1,...,xd` (a trailing `y` column is ignored).
/// Returns row-major coordinates.
std::vector<double> read_query_csv(const std::string& path, std::size_t dim);

void write_training_csv(const std::string& path, const TrainingSet& data);

/// Shortest decimal text that reads back to exactly `v`.
std::string format_number(double v);

/// Parses a comma separated list of numbers such as "0.5,0.25".
std::vector<double> parse_number_list(const std::string& text);

}  // namespace mondrian::harness
