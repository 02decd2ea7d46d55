#include "mondrian/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "mondrian/debias.hpp"
#include "mondrian/diagnostics.hpp"
#include "mondrian/forest.hpp"
#include "mondrian/harness/csv.hpp"
#include "mondrian/inference.hpp"
#include "mondrian/parallel.hpp"
#include "mondrian/tuning.hpp"

namespace mondrian::harness {

namespace {

constexpr std::uint64_t kExperimentLevel = 0xE4E0'0000'0000'0004ULL;
constexpr int kSchemaVersion = 1;

std::string to_string(ExperimentKind k) { return k == ExperimentKind::coverage ? "coverage" : "bias_decay"; }

std::string to_string(LambdaRule r) {
  switch (r) {
    case LambdaRule::fixed: return "fixed";
    case LambdaRule::aimse: return "aimse";
    case LambdaRule::aimse_rbc: return "aimse_rbc";
    case LambdaRule::rate: return "rate";
  }
  return "fixed";
}

double to_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': expected a number, found '" + value + "'");
  }
}

std::size_t to_count(const std::string& key, const std::string& value) {
  double v = to_number(key, value);
  if (!(v >= 0.0) || v != std::floor(v) || v > 1e15) {
    throw std::invalid_argument("config key '" + key + "': expected a nonnegative integer, found '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config key '" + key + "': expected true or false, found '" + value + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  try {
    return parse_number_list(value);
  } catch (const std::exception& e) {
    throw std::invalid_argument("config key '" + key + "': " + e.what());
  }
}

/// "0.25,0.5;0.75,0.5" -> row-major points.
std::vector<double> to_points(const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string point;
  while (std::getline(ss, point, ';')) {
    auto coords = to_list("query", point);
    out.insert(out.end(), coords.begin(), coords.end());
  }
  return out;
}

std::vector<double> make_scales(const ExperimentSpec& spec, std::size_t order) {
  return spec.scales == "arithmetic" ? arithmetic_scales(order, spec.gamma) : geometric_scales(order, spec.gamma);
}

std::size_t forest_size(const ExperimentSpec& spec) {
  return spec.B > 0 ? spec.B : select_forest_size(spec.dgp.n, spec.J);
}

double rate_lifetime(const ExperimentSpec& spec) {
  const double exponent = 1.0 / static_cast<double>(4 * spec.J + 4 + spec.dgp.dim);
  double lambda = spec.lambda_scale * std::pow(static_cast<double>(spec.dgp.n), exponent);
  return spec.lambda_ceil ? std::ceil(lambda) : lambda;
}

double choose_lifetime(const ExperimentSpec& spec, const TrainingSet& data, const DebiasConfig& config) {
  switch (spec.lambda_rule) {
    case LambdaRule::fixed: return spec.lambda_value;
    case LambdaRule::rate: return rate_lifetime(spec);
    case LambdaRule::aimse: return lambda_aimse(data, config).lambda_hat;
    case LambdaRule::aimse_rbc: {
      DebiasConfig lower = debias_coefficients(spec.J - 1, make_scales(spec, spec.J - 1));
      return lambda_aimse(data, lower).lambda_hat;
    }
  }
  return spec.lambda_value;
}

std::span<const double> query_point(const ExperimentSpec& spec, std::size_t q) {
  return {spec.queries.data() + q * spec.dgp.dim, spec.dgp.dim};
}

RngStream forest_stream(const ExperimentSpec& spec, std::size_t replicate, std::size_t grid_index) {
  const std::uint64_t master = derive_seed(spec.dgp.seed, {replicate, kExperimentLevel, grid_index});
  return RngStream(master, {replicate, 0, 0});
}

/// Outer workers over replications; any spare threads go to tree fitting.
unsigned inner_threads(unsigned threads, std::size_t replications) {
  if (threads == 0) threads = default_thread_count();
  return replications >= threads ? 1u : std::max(1u, threads / static_cast<unsigned>(replications));
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void close_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace

void ExperimentSpec::validate() const {
  dgp.validate();
  if (replications < 1) throw std::invalid_argument("experiment: replications must be at least 1");
  if (queries.empty() || queries.size() % dgp.dim != 0) {
    throw std::invalid_argument("experiment: query points must have d coordinates each");
  }
  for (double c : queries) {
    if (kind == ExperimentKind::coverage ? !(c > 0.0 && c < 1.0) : !(c >= 0.0 && c <= 1.0)) {
      throw std::invalid_argument("experiment: query points must lie in the interior of [0,1]^d");
    }
  }
  if (J > kMaxDebiasOrder) throw std::invalid_argument("experiment: J must be at most 5");
  if (scales != "geometric" && scales != "arithmetic") {
    throw std::invalid_argument("experiment: scales must be geometric or arithmetic");
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("experiment: gamma must be positive");
  if (lambda_rule == LambdaRule::fixed && !(lambda_value > 0.0 && std::isfinite(lambda_value))) {
    throw std::invalid_argument("experiment: lambda must be positive");
  }
  if (lambda_rule == LambdaRule::rate && !(lambda_scale > 0.0)) {
    throw std::invalid_argument("experiment: lambda_scale must be positive");
  }
  if (lambda_rule == LambdaRule::aimse_rbc && J == 0) {
    throw std::invalid_argument("experiment: lambda = aimse_rbc needs J >= 1");
  }
  for (double a : alphas) {
    if (!(a > 0.0 && a < 1.0)) throw std::invalid_argument("experiment: alpha must lie in (0, 1)");
  }
  if (alphas.empty()) throw std::invalid_argument("experiment: at least one alpha is needed");
  if (kind == ExperimentKind::bias_decay) {
    if (!dgp.allow_zero_noise) {
      throw std::invalid_argument("experiment: bias_decay needs allow_zero_noise = true (and normally sigma = 0)");
    }
    if (lambda_grid.size() < 3) throw std::invalid_argument("experiment: bias_decay needs at least 3 lambda_grid values");
    for (double l : lambda_grid) {
      if (!(l > 0.0 && std::isfinite(l))) throw std::invalid_argument("experiment: lambda_grid values must be positive");
    }
  }
}

ExperimentSpec parse_experiment_spec(std::istream& in, const std::string& source) {
  CLI::ConfigTOML reader;
  std::vector<CLI::ConfigItem> items;
  try {
    items = reader.from_config(in);
  } catch (const std::exception& e) {
    throw std::invalid_argument(source + ": " + e.what());
  }

  ExperimentSpec spec;
  bool query_given = false;
  for (const auto& item : items) {
    if (!item.parents.empty()) {
      throw std::invalid_argument(source + ": sections are not supported (key '" + item.fullname() + "')");
    }
    const std::string& key = item.name;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];

    if (key == "kind") {
      if (value == "coverage") spec.kind = ExperimentKind::coverage;
      else if (value == "bias_decay") spec.kind = ExperimentKind::bias_decay;
      else throw std::invalid_argument(source + ": kind must be coverage or bias_decay");
    } else if (key == "d") {
      spec.dgp.dim = to_count(key, value);
    } else if (key == "n") {
      spec.dgp.n = to_count(key, value);
    } else if (key == "seed") {
      try {
        spec.dgp.seed = std::stoull(value);
      } catch (const std::exception&) {
        throw std::invalid_argument("config key 'seed': expected an unsigned integer, found '" + value + "'");
      }
    } else if (key == "mu") {
      spec.dgp.mean = parse_mean_function(value);
    } else if (key == "mu_center") {
      spec.dgp.mean_center = to_number(key, value);
    } else if (key == "mu_level") {
      spec.dgp.mean_level = to_number(key, value);
    } else if (key == "density") {
      spec.dgp.density = parse_density(value);
    } else if (key == "beta_a") {
      spec.dgp.beta_a = to_number(key, value);
    } else if (key == "beta_b") {
      spec.dgp.beta_b = to_number(key, value);
    } else if (key == "noise") {
      spec.dgp.noise = parse_noise(value);
    } else if (key == "sigma") {
      spec.dgp.sigma = to_number(key, value);
    } else if (key == "sigma_slope") {
      spec.dgp.sigma_slope = to_number(key, value);
    } else if (key == "allow_zero_noise") {
      spec.dgp.allow_zero_noise = to_bool(key, value);
    } else if (key == "query") {
      spec.queries = to_points(value);
      query_given = true;
    } else if (key == "lambda") {
      if (value == "aimse") spec.lambda_rule = LambdaRule::aimse;
      else if (value == "aimse_rbc") spec.lambda_rule = LambdaRule::aimse_rbc;
      else if (value == "rate") spec.lambda_rule = LambdaRule::rate;
      else {
        spec.lambda_rule = LambdaRule::fixed;
        spec.lambda_value = to_number(key, value);
      }
    } else if (key == "lambda_scale") {
      spec.lambda_scale = to_number(key, value);
    } else if (key == "lambda_ceil") {
      spec.lambda_ceil = to_bool(key, value);
    } else if (key == "lambda_grid") {
      spec.lambda_grid = to_list(key, value);
    } else if (key == "B") {
      spec.B = value == "auto" ? 0 : to_count(key, value);
    } else if (key == "J") {
      spec.J = to_count(key, value);
    } else if (key == "scales") {
      spec.scales = value;
    } else if (key == "gamma") {
      spec.gamma = to_number(key, value);
    } else if (key == "alpha") {
      spec.alphas = to_list(key, value);
    } else if (key == "replications") {
      spec.replications = to_count(key, value);
    } else if (key == "output_csv") {
      spec.output_csv = value;
    } else if (key == "output_json") {
      spec.output_json = value;
    } else {
      throw std::invalid_argument(source + ": unknown key '" + key + "'");
    }
  }
  if (!query_given) spec.queries.assign(spec.dgp.dim, 0.5);
  spec.validate();
  return spec;
}

ExperimentSpec read_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return parse_experiment_spec(in, path);
}

CoverageResult run_coverage(const ExperimentSpec& spec, unsigned threads) {
  spec.validate();
  const std::size_t R = spec.replications;
  const std::size_t Q = spec.query_count();
  const std::size_t A = spec.alphas.size();
  const std::size_t B = forest_size(spec);
  const DebiasConfig config = debias_coefficients(spec.J, make_scales(spec, spec.J));
  const unsigned inner = inner_threads(threads, R);

  std::vector<double> lambdas(R);
  std::vector<double> estimates(R * Q), sigmas(R * Q), half_widths(R * Q * A);

  parallel_for(R, threads, [&](std::size_t r) {
    auto data = std::make_shared<const TrainingSet>(generate(spec.dgp, r));
    const double lambda = choose_lifetime(spec, *data, config);
    lambdas[r] = lambda;
    DebiasedForest forest = fit_debiased(data, lambda, B, config, forest_stream(spec, r, 0), inner);
    for (std::size_t q = 0; q < Q; ++q) {
      InferenceResult ci = confidence_interval(forest, query_point(spec, q), spec.alphas[0]);
      estimates[r * Q + q] = ci.estimate;
      sigmas[r * Q + q] = ci.Sigma_hat;
      const double q0 = normal_quantile(1.0 - spec.alphas[0] / 2.0);
      for (std::size_t a = 0; a < A; ++a) {
        const double qa = normal_quantile(1.0 - spec.alphas[a] / 2.0);
        half_widths[(r * Q + q) * A + a] = ci.half_width() * (qa / q0);
      }
    }
  });

  CoverageResult result;
  result.replications = R;
  result.B = B;
  result.J = spec.J;
  double mean_lambda = 0.0;
  for (double l : lambdas) mean_lambda += l;
  mean_lambda /= static_cast<double>(R);
  const double d = static_cast<double>(spec.dgp.dim);
  const double n = static_cast<double>(spec.dgp.n);

  for (std::size_t q = 0; q < Q; ++q) {
    auto x = query_point(spec, q);
    const double truth = spec.dgp.mu(x);
    double mean_est = 0.0, mean_sigma = 0.0, sq_err = 0.0;
    for (std::size_t r = 0; r < R; ++r) {
      mean_est += estimates[r * Q + q];
      mean_sigma += sigmas[r * Q + q];
      sq_err += (estimates[r * Q + q] - truth) * (estimates[r * Q + q] - truth);
    }
    mean_est /= static_cast<double>(R);
    mean_sigma /= static_cast<double>(R);
    double var = 0.0;
    for (std::size_t r = 0; r < R; ++r) var += (estimates[r * Q + q] - mean_est) * (estimates[r * Q + q] - mean_est);
    var = R > 1 ? var / static_cast<double>(R - 1) : 0.0;

    for (std::size_t a = 0; a < A; ++a) {
      CoverageRow row;
      row.x.assign(x.begin(), x.end());
      row.alpha = spec.alphas[a];
      row.true_value = truth;
      std::size_t hits = 0;
      double width = 0.0;
      for (std::size_t r = 0; r < R; ++r) {
        const double est = estimates[r * Q + q];
        const double hw = half_widths[(r * Q + q) * A + a];
        if (est - hw <= truth && truth <= est + hw) ++hits;
        width += 2.0 * hw;
      }
      row.coverage = static_cast<double>(hits) / static_cast<double>(R);
      row.mean_width = width / static_cast<double>(R);
      row.mean_estimate = mean_est;
      row.rmse = std::sqrt(sq_err / static_cast<double>(R));
      row.mean_Sigma_hat = mean_sigma;
      row.scaled_estimate_variance = n / std::pow(mean_lambda, d) * var;
      row.mean_lambda = mean_lambda;
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("loglog_slope: length mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] != 0.0 && x[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(std::abs(y[i])));
    }
  }
  if (lx.size() < 2) return std::nan("");
  const double m = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= m;
  my /= m;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

BiasDecayResult run_bias_decay(const ExperimentSpec& spec, unsigned threads) {
  spec.validate();
  const std::size_t R = spec.replications;
  const std::size_t G = spec.lambda_grid.size();
  const std::size_t B = forest_size(spec);
  const DebiasConfig config = debias_coefficients(spec.J, make_scales(spec, spec.J));
  const unsigned inner = inner_threads(threads, R);
  auto x = query_point(spec, 0);
  const double truth = spec.dgp.mu(x);

  std::vector<double> err(R * G), base_err(R * G);
  parallel_for(R, threads, [&](std::size_t r) {
    auto data = std::make_shared<const TrainingSet>(generate(spec.dgp, r));
    for (std::size_t g = 0; g < G; ++g) {
      DebiasedForest forest = fit_debiased(data, spec.lambda_grid[g], B, config, forest_stream(spec, r, g), inner);
      err[r * G + g] = predict_debiased(forest, x) - truth;
      base_err[r * G + g] = predict(forest.level(0), x) - truth;
    }
  });

  auto summarize = [&](const std::vector<double>& e, std::size_t g, double& mean, double& se) {
    mean = 0.0;
    for (std::size_t r = 0; r < R; ++r) mean += e[r * G + g];
    mean /= static_cast<double>(R);
    double ss = 0.0;
    for (std::size_t r = 0; r < R; ++r) ss += (e[r * G + g] - mean) * (e[r * G + g] - mean);
    se = R > 1 ? std::sqrt(ss / static_cast<double>(R - 1) / static_cast<double>(R)) : 0.0;
  };

  BiasDecayResult result;
  result.x.assign(x.begin(), x.end());
  result.J = spec.J;
  result.B = B;
  result.replications = R;
  const double zero_tol = 1e-15 * std::max(1.0, std::abs(truth));
  std::vector<double> fit_l, fit_b, fit_base_l, fit_base_b;
  for (std::size_t g = 0; g < G; ++g) {
    BiasDecayRow row;
    row.lambda = spec.lambda_grid[g];
    summarize(err, g, row.bias, row.std_error);
    summarize(base_err, g, row.base_bias, row.base_std_error);
    if (std::abs(row.bias) <= zero_tol) {
      row.used_in_fit = false;
      std::ostringstream msg;
      msg << "bias_decay: bias at lambda " << row.lambda << " is numerically zero; excluded from the slope fit";
      warn(msg.str());
    } else {
      fit_l.push_back(row.lambda);
      fit_b.push_back(row.bias);
    }
    if (std::abs(row.base_bias) > zero_tol) {
      fit_base_l.push_back(row.lambda);
      fit_base_b.push_back(row.base_bias);
    }
    result.rows.push_back(row);
  }
  result.slope = loglog_slope(fit_l, fit_b);
  result.base_slope = loglog_slope(fit_base_l, fit_base_b);
  return result;
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  j["d"] = spec.dgp.dim;
  j["n"] = spec.dgp.n;
  j["seed"] = spec.dgp.seed;
  j["mu"] = to_string(spec.dgp.mean);
  j["mu_center"] = spec.dgp.mean_center;
  j["mu_level"] = spec.dgp.mean_level;
  j["density"] = to_string(spec.dgp.density);
  j["beta_a"] = spec.dgp.beta_a;
  j["beta_b"] = spec.dgp.beta_b;
  j["noise"] = to_string(spec.dgp.noise);
  j["sigma"] = spec.dgp.sigma;
  j["sigma_slope"] = spec.dgp.sigma_slope;
  j["allow_zero_noise"] = spec.dgp.allow_zero_noise;
  j["query"] = spec.queries;
  j["lambda_rule"] = to_string(spec.lambda_rule);
  if (spec.lambda_rule == LambdaRule::fixed) j["lambda"] = spec.lambda_value;
  if (spec.lambda_rule == LambdaRule::rate) {
    j["lambda_scale"] = spec.lambda_scale;
    j["lambda_ceil"] = spec.lambda_ceil;
  }
  if (spec.kind == ExperimentKind::bias_decay) j["lambda_grid"] = spec.lambda_grid;
  j["B"] = forest_size(spec);
  j["J"] = spec.J;
  j["scales"] = spec.scales;
  j["gamma"] = spec.gamma;
  j["alpha"] = spec.alphas;
  j["replications"] = spec.replications;
  return j;
}

nlohmann::json to_json(const ExperimentSpec& spec, const CoverageResult& result) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "coverage";
  j["config"] = to_json(spec);
  j["rows"] = nlohmann::json::array();
  for (const auto& row : result.rows) {
    j["rows"].push_back({{"x", row.x},
                         {"alpha", row.alpha},
                         {"true_value", row.true_value},
                         {"coverage", row.coverage},
                         {"mean_width", row.mean_width},
                         {"mean_estimate", row.mean_estimate},
                         {"rmse", row.rmse},
                         {"mean_Sigma_hat", row.mean_Sigma_hat},
                         {"scaled_estimate_variance", row.scaled_estimate_variance},
                         {"mean_lambda", row.mean_lambda}});
  }
  return j;
}

nlohmann::json to_json(const ExperimentSpec& spec, const BiasDecayResult& result) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "bias_decay";
  j["config"] = to_json(spec);
  j["x"] = result.x;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : result.rows) {
    j["rows"].push_back({{"lambda", row.lambda},
                         {"bias", row.bias},
                         {"std_error", row.std_error},
                         {"base_bias", row.base_bias},
                         {"base_std_error", row.base_std_error},
                         {"used_in_fit", row.used_in_fit}});
  }
  // NaN is not representable in JSON
  j["slope"] = std::isfinite(result.slope) ? nlohmann::json(result.slope) : nlohmann::json(nullptr);
  j["base_slope"] = std::isfinite(result.base_slope) ? nlohmann::json(result.base_slope) : nlohmann::json(nullptr);
  return j;
}

void write_coverage_csv(const std::string& path, const CoverageResult& result) {
  auto out = open_output(path);
  const std::size_t dim = result.rows.empty() ? 0 : result.rows.front().x.size();
  for (std::size_t j = 0; j < dim; ++j) out << 'x' << (j + 1) << ',';
  out << "alpha,true_value,coverage,mean_width,mean_estimate,rmse,mean_Sigma_hat,"
         "scaled_estimate_variance,mean_lambda,B,J,replications\n";
  for (const auto& row : result.rows) {
    for (double c : row.x) out << format_number(c) << ',';
    for (double v : {row.alpha, row.true_value, row.coverage, row.mean_width, row.mean_estimate, row.rmse,
                     row.mean_Sigma_hat, row.scaled_estimate_variance, row.mean_lambda}) {
      out << format_number(v) << ',';
    }
    out << result.B << ',' << result.J << ',' << result.replications << '\n';
  }
  close_output(out, path);
}

void write_bias_decay_csv(const std::string& path, const BiasDecayResult& result) {
  auto out = open_output(path);
  out << "lambda,bias,std_error,base_bias,base_std_error,used_in_fit\n";
  for (const auto& row : result.rows) {
    for (double v : {row.lambda, row.bias, row.std_error, row.base_bias, row.base_std_error}) {
      out << format_number(v) << ',';
    }
    out << (row.used_in_fit ? 1 : 0) << '\n';
  }
  close_output(out, path);
}

nlohmann::json run_experiment(const ExperimentSpec& spec, unsigned threads) {
  nlohmann::json summary;
  if (spec.kind == ExperimentKind::coverage) {
    auto result = run_coverage(spec, threads);
    if (!spec.output_csv.empty()) write_coverage_csv(spec.output_csv, result);
    summary = to_json(spec, result);
  } else {
    auto result = run_bias_decay(spec, threads);
    if (!spec.output_csv.empty()) write_bias_decay_csv(spec.output_csv, result);
    summary = to_json(spec, result);
  }
  if (!spec.output_json.empty()) {
    auto out = open_output(spec.output_json);
    out << summary.dump(2) << '\n';
    close_output(out, spec.output_json);
  }
  return summary;
}

}  // namespace mondrian::harness
