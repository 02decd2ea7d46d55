#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "mondrian/harness/dgp.hpp"

namespace mondrian::harness {

enum class ExperimentKind { coverage, bias_decay };

/// How the lifetime is chosen in each replication.
///
///   fixed      lambda_value
///   aimse      plug-in for order J
///   aimse_rbc  plug-in for order J - 1, estimation with order J (J >= 1)
///   rate       lambda_scale * n^{1/(4J+4+d)}, rounded up if lambda_ceil
enum class LambdaRule { fixed, aimse, aimse_rbc, rate };

/// Monte Carlo experiment description. Read from a flat `key = value` file
/// with `#` comments; see README for the key list.
struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::coverage;
  Dgp dgp;
  /// Row-major, dgp.dim coordinates per point.
  std::vector<double> queries{0.5};

  LambdaRule lambda_rule = LambdaRule::fixed;
  double lambda_value = 10.0;
  double lambda_scale = 1.0;
  bool lambda_ceil = false;
  /// Bias decay only.
  std::vector<double> lambda_grid;

  /// 0 selects select_forest_size(n, J).
  std::size_t B = 0;
  std::size_t J = 0;
  std::string scales = "geometric";
  double gamma = 0.05;
  std::vector<double> alphas{0.05};
  std::size_t replications = 100;

  std::string output_csv;
  std::string output_json;

  std::size_t query_count() const { return queries.size() / dgp.dim; }
  /// Throws std::invalid_argument when inconsistent.
  void validate() const;
};

/// Parses the flat config. Unknown keys are an error.
ExperimentSpec parse_experiment_spec(std::istream& in, const std::string& source = "<stream>");
ExperimentSpec read_experiment_spec(const std::string& path);

struct CoverageRow {
  std::vector<double> x;
  double alpha = 0.05;
  double true_value = 0.0;
  double coverage = 0.0;
  double mean_width = 0.0;
  double mean_estimate = 0.0;
  double rmse = 0.0;
  double mean_Sigma_hat = 0.0;
  /// (n / lambda^d) times the sample variance of the estimates, with
  /// lambda the mean lifetime over replications.
  double scaled_estimate_variance = 0.0;
  double mean_lambda = 0.0;
};

struct CoverageResult {
  std::size_t replications = 0;
  std::size_t B = 0;
  std::size_t J = 0;
  std::vector<CoverageRow> rows;
};

struct BiasDecayRow {
  double lambda = 0.0;
  /// Monte Carlo mean of mu_hat_J(x) - mu(x) and its standard error.
  double bias = 0.0;
  double std_error = 0.0;
  /// Same for the undebiased base level of the same forests.
  double base_bias = 0.0;
  double base_std_error = 0.0;
  bool used_in_fit = true;
};

struct BiasDecayResult {
  std::vector<double> x;
  std::size_t J = 0;
  std::size_t B = 0;
  std::size_t replications = 0;
  std::vector<BiasDecayRow> rows;
  /// Least-squares slope of log|bias| on log lambda.
  double slope = 0.0;
  double base_slope = 0.0;
};

/// Replication r draws its data from (seed, {r, kDataLevel, 0}) and its
/// forests from an independent master derived from (seed, r). Results do not
/// depend on `threads`.
CoverageResult run_coverage(const ExperimentSpec& spec, unsigned threads = 1);

/// Requires allow_zero_noise and at least three lambda values. Uses the
/// first query point. A lambda whose bias is numerically zero is excluded
/// from the slope fit with a warning.
BiasDecayResult run_bias_decay(const ExperimentSpec& spec, unsigned threads = 1);

/// Least-squares slope of log|y| on log x over the points with y != 0.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json to_json(const ExperimentSpec& spec);
nlohmann::json to_json(const ExperimentSpec& spec, const CoverageResult& result);
nlohmann::json to_json(const ExperimentSpec& spec, const BiasDecayResult& result);

void write_coverage_csv(const std::string& path, const CoverageResult& result);
void write_bias_decay_csv(const std::string& path, const BiasDecayResult& result);

/// Runs the experiment described by `spec` and writes the outputs it names.
/// Returns the JSON summary.
nlohmann::json run_experiment(const ExperimentSpec& spec, unsigned threads = 1);

}  // namespace mondrian::harness
