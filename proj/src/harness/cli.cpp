#include "mondrian/harness/cli.hpp"

#include <fstream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "mondrian/diagnostics.hpp"
#include "mondrian/harness/csv.hpp"
#include "mondrian/harness/experiment.hpp"
#include "mondrian/inference.hpp"
#include "mondrian/parallel.hpp"
#include "mondrian/tuning.hpp"

namespace mondrian::harness {

namespace {

constexpr const char* kModelFormat = "mondrian-debiased-forest";
constexpr int kModelVersion = 1;

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct ForestOptions {
  std::string data;
  double lambda = 0.0;
  std::size_t B = 0;
  std::size_t J = 0;
  double gamma = kDefaultScaleGamma;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* B_opt = nullptr;

  void add_to(CLI::App* cmd, bool data_required) {
    auto* d = cmd->add_option("--data", data, "training CSV with header x1,...,xd,y");
    if (data_required) d->required();
    lambda_opt = cmd->add_option("--lambda", lambda, "base lifetime (default: AIMSE plug-in)")
                     ->check(CLI::PositiveNumber);
    B_opt = cmd->add_option("--B", B, "trees per level (default: rate rule for J)")->check(CLI::PositiveNumber);
    cmd->add_option("--J", J, "debiasing order")->check(CLI::Range(0, static_cast<int>(kMaxDebiasOrder)));
    cmd->add_option("--gamma", gamma, "geometric scale ratio a_r = (1+gamma)^r")->check(CLI::PositiveNumber);
  }
};

struct LifetimeChoice {
  double lambda = 0.0;
  std::string source;
};

/// With J >= 1 an unspecified lifetime follows robust bias correction
/// (plug-in at order J - 1); with J = 0 the plug-in at order 0.
LifetimeChoice resolve_lifetime(const ForestOptions& o, const TrainingSet& data) {
  if (o.lambda_opt->count() > 0) return {o.lambda, "user"};
  if (o.J >= 1) return {tune_for_inference(data, o.J, o.gamma).lifetime, "aimse_rbc"};
  return {lambda_aimse(data, debias_coefficients(0, geometric_scales(0, o.gamma))).lambda_hat, "aimse"};
}

std::size_t resolve_size(const ForestOptions& o, std::size_t n) {
  return o.B_opt->count() > 0 ? o.B : select_forest_size(n, o.J);
}

struct FittedModel {
  DebiasedForest forest;
  std::string lambda_source;
};

FittedModel fit_from_options(const ForestOptions& o, const GlobalOptions& g) {
  auto data = std::make_shared<const TrainingSet>(read_training_csv(o.data));
  const auto choice = resolve_lifetime(o, *data);
  const auto config = debias_coefficients(o.J, geometric_scales(o.J, o.gamma));
  RngStream rng(g.seed, {});
  return {fit_debiased(data, choice.lambda, resolve_size(o, data->size()), config, rng, g.threads), choice.source};
}

std::vector<double> read_points(const std::string& x, const std::string& query_file, std::size_t dim) {
  if (!x.empty() && !query_file.empty()) throw UsageError("give either --x or --query, not both");
  if (x.empty() && query_file.empty()) throw UsageError("a query point is required (--x or --query)");
  if (!query_file.empty()) return read_query_csv(query_file, dim);
  std::vector<double> point;
  try {
    point = parse_number_list(x);
  } catch (const std::exception& e) {
    throw UsageError(std::string("--x: ") + e.what());
  }
  if (point.size() != dim) {
    throw UsageError("--x has " + std::to_string(point.size()) + " coordinates but the data has d = " +
                     std::to_string(dim));
  }
  return point;
}

nlohmann::json::array_t to_array(std::span<const double> v) { return nlohmann::json::array_t(v.begin(), v.end()); }

nlohmann::json report_to_json(const TuneReport& report) {
  nlohmann::json j;
  j["method"] = to_string(report.method);
  j["J"] = report.J_used;
  j["lambda_hat"] = report.lambda_hat;
  if (report.method == TuneMethod::aimse_plugin) {
    j["derivative_means"] = report.derivative_means;
    j["curvature_sum"] = report.curvature_sum;
    j["residual_variance"] = report.residual_variance;
  } else {
    j["curve"] = nlohmann::json::array();
    for (const auto& p : report.curve) j["curve"].push_back({{"lambda", p.lifetime}, {"score", p.score}});
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace

nlohmann::json model_to_json(const DebiasedForest& forest, std::uint64_t seed) {
  const auto& training = forest.training();
  const auto& config = forest.config();
  nlohmann::json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["d"] = training.dim();
  j["n"] = training.size();
  j["lambda"] = forest.base_lifetime();
  j["B"] = forest.size();
  j["J"] = config.order;
  j["scales"] = config.scales;
  j["seed"] = seed;
  j["data"] = {{"x", to_array(training.x())}, {"y", to_array(training.y())}};
  j["levels"] = nlohmann::json::array();
  for (const auto& level : forest.levels()) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : level.trees()) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& node : tree.nodes()) {
        nodes.push_back({node.split_dim, node.split_loc, node.time, node.left, node.right});
      }
      trees.push_back(std::move(nodes));
    }
    j["levels"].push_back({{"lifetime", level.lifetime()}, {"trees", std::move(trees)}});
  }
  return j;
}

DebiasedForest model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != kModelFormat || j.at("version") != kModelVersion) {
      throw std::runtime_error("model: unsupported format or version");
    }
    const auto dim = j.at("d").get<std::size_t>();
    auto data = std::make_shared<const TrainingSet>(j.at("data").at("x").get<std::vector<double>>(),
                                                    j.at("data").at("y").get<std::vector<double>>(), dim);
    const auto order = j.at("J").get<std::size_t>();
    const auto scales = j.at("scales").get<std::vector<double>>();
    DebiasConfig config = debias_coefficients(order, scales);
    std::vector<Forest> levels;
    for (const auto& level : j.at("levels")) {
      const double lifetime = level.at("lifetime").get<double>();
      std::vector<MondrianTree> trees;
      for (const auto& nodes_json : level.at("trees")) {
        std::vector<TreeNode> nodes;
        nodes.reserve(nodes_json.size());
        for (const auto& row : nodes_json) {
          TreeNode node;
          node.split_dim = row.at(0).get<std::int32_t>();
          node.split_loc = row.at(1).get<double>();
          node.time = row.at(2).get<double>();
          node.left = row.at(3).get<std::int32_t>();
          node.right = row.at(4).get<std::int32_t>();
          nodes.push_back(node);
        }
        trees.push_back(MondrianTree::from_nodes(lifetime, dim, std::move(nodes)));
      }
      levels.emplace_back(data, lifetime, std::move(trees));
    }
    if (levels.size() != order + 1) throw std::runtime_error("model: expected J + 1 levels");
    return DebiasedForest(std::move(levels), std::move(config), j.at("lambda").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Debiased Mondrian random forests: fitting, inference, tuning and simulation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a key = value file");

  GlobalOptions g;
  g.threads = default_thread_count();
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--threads", g.threads, std::string("worker threads (default: $") + kThreadsEnvVar +
                                             " or hardware concurrency)")
      ->check(CLI::PositiveNumber);

  // fit
  auto* fit = app.add_subcommand("fit", "fit a debiased forest and save it as JSON");
  ForestOptions fit_opts;
  fit_opts.add_to(fit, true);
  std::string fit_out;
  fit->add_option("--out", fit_out, "model file (default: stdout)");

  // predict
  auto* pred = app.add_subcommand("predict", "predict at query points");
  ForestOptions pred_opts;
  pred_opts.add_to(pred, false);
  std::string pred_model, pred_x, pred_query, pred_out;
  pred->add_option("--model", pred_model, "model file written by fit");
  pred->add_option("--x", pred_x, "query point, comma separated");
  pred->add_option("--query", pred_query, "query CSV with header x1,...,xd");
  pred->add_option("--out", pred_out, "prediction CSV (default: stdout)");

  // ci
  auto* ci = app.add_subcommand("ci", "point estimate and confidence interval");
  ForestOptions ci_opts;
  ci_opts.add_to(ci, true);
  std::string ci_x, ci_query;
  double ci_alpha = 0.05;
  ci->add_option("--x", ci_x, "query point, comma separated");
  ci->add_option("--query", ci_query, "query CSV with header x1,...,xd");
  ci->add_option("--alpha", ci_alpha, "1 - confidence level")->check(CLI::Range(0.0, 1.0));

  // tune
  auto* tune = app.add_subcommand("tune", "select the lifetime");
  std::string tune_data, tune_method = "aimse", tune_grid;
  std::size_t tune_J = 0, tune_B = 0;
  double tune_gamma = kDefaultScaleGamma;
  tune->add_option("--data", tune_data, "training CSV")->required();
  tune->add_option("--method", tune_method, "aimse, gcv or loocv")
      ->check(CLI::IsMember({"aimse", "aimse_plugin", "gcv", "loocv"}));
  tune->add_option("--J", tune_J, "debiasing order")->check(CLI::Range(0, static_cast<int>(kMaxDebiasOrder)));
  auto* tune_B_opt = tune->add_option("--B", tune_B, "trees per level for gcv/loocv")->check(CLI::PositiveNumber);
  tune->add_option("--grid", tune_grid, "comma separated lifetimes for gcv/loocv");
  tune->add_option("--gamma", tune_gamma, "geometric scale ratio")->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  std::string sim_spec;
  sim->add_option("--spec", sim_spec, "experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(fit)) {
      auto model = fit_from_options(fit_opts, g);
      const std::string text = model_to_json(model.forest, g.seed).dump() + "\n";
      if (fit_out.empty()) out << text;
      else write_text(fit_out, text);
    } else if (app.got_subcommand(pred)) {
      if (!pred_model.empty() && !pred_opts.data.empty()) throw UsageError("give either --model or --data, not both");
      if (pred_model.empty() && pred_opts.data.empty()) throw UsageError("predict needs --model or --data");
      DebiasedForest forest = pred_model.empty() ? fit_from_options(pred_opts, g).forest
                                                 : model_from_json(read_json(pred_model));
      const std::size_t dim = forest.dim();
      auto points = read_points(pred_x, pred_query, dim);
      require_in_unit_cube(points, dim, "predict");
      auto values = predict_debiased_many(forest, PointsView{points, dim}, g.threads);
      std::ostringstream csv;
      for (std::size_t j = 0; j < dim; ++j) csv << 'x' << (j + 1) << ',';
      csv << "prediction\n";
      for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t j = 0; j < dim; ++j) csv << format_number(points[i * dim + j]) << ',';
        csv << format_number(values[i]) << '\n';
      }
      if (pred_out.empty()) out << csv.str();
      else write_text(pred_out, csv.str());
    } else if (app.got_subcommand(ci)) {
      auto model = fit_from_options(ci_opts, g);
      const std::size_t dim = model.forest.dim();
      auto points = read_points(ci_x, ci_query, dim);
      nlohmann::json results = nlohmann::json::array();
      for (std::size_t i = 0; i < points.size() / dim; ++i) {
        std::span<const double> x(points.data() + i * dim, dim);
        auto r = confidence_interval(model.forest, x, ci_alpha);
        results.push_back({{"x", to_array(x)},
                           {"estimate", r.estimate},
                           {"sigma2_hat", r.sigma2_hat},
                           {"Sigma_hat", r.Sigma_hat},
                           {"ci", {r.ci_lower, r.ci_upper}},
                           {"alpha", r.alpha},
                           {"lambda", r.lambda},
                           {"lambda_source", model.lambda_source},
                           {"B", r.B},
                           {"J", r.J}});
      }
      out << (ci_query.empty() ? results.front() : nlohmann::json{{"results", results}}).dump(2) << '\n';
    } else if (app.got_subcommand(tune)) {
      auto data = std::make_shared<const TrainingSet>(read_training_csv(tune_data));
      const auto method = parse_tune_method(tune_method);
      const auto config = debias_coefficients(tune_J, geometric_scales(tune_J, tune_gamma));
      TuneReport report;
      if (method == TuneMethod::aimse_plugin) {
        report = lambda_aimse(*data, config);
      } else {
        std::vector<double> grid;
        if (!tune_grid.empty()) {
          try {
            grid = parse_number_list(tune_grid);
          } catch (const std::exception& e) {
            throw UsageError(std::string("--grid: ") + e.what());
          }
        }
        const std::size_t B = tune_B_opt->count() > 0 ? tune_B : select_forest_size(data->size(), tune_J);
        report = select_lifetime(data, method, config, B, grid, RngStream(g.seed, {}), g.threads);
      }
      out << report_to_json(report).dump(2) << '\n';
    } else if (app.got_subcommand(sim)) {
      auto spec = read_experiment_spec(sim_spec);
      out << run_experiment(spec, g.threads).dump(2) << '\n';
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace mondrian::harness
