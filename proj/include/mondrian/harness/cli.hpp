#pragma once

#include <iostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "mondrian/debias.hpp"

namespace mondrian::harness {

/// A semantic usage problem (missing or conflicting flags). Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serialised debiased forest: settings, the training data and every tree.
nlohmann::json model_to_json(const DebiasedForest& forest, std::uint64_t seed);
DebiasedForest model_from_json(const nlohmann::json& model);

/// Entry point of the `mondrian` tool.
///
///   mondrian [--seed N] [--threads N] [--config FILE] <command> ...
///
/// Commands: fit, predict, ci, tune, simulate. Returns 0 on success, 2 on
/// usage errors and 1 on runtime errors.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace mondrian::harness
