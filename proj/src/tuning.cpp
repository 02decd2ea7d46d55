#include "mondrian/tuning.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mondrian/diagnostics.hpp"
#include "mondrian/forest.hpp"
#include "mondrian/parallel.hpp"
#include "mondrian/theory.hpp"

namespace mondrian {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr std::uint64_t kTuneLevel = 0x7E5E'0000'0000'0003ULL;

double falling_factorial(std::size_t k, std::size_t m) {
  double v = 1.0;
  for (std::size_t t = 0; t < m; ++t) v *= static_cast<double>(k - t);
  return v;
}

}  // namespace

std::string to_string(TuneMethod method) {
  switch (method) {
    case TuneMethod::aimse_plugin: return "aimse_plugin";
    case TuneMethod::gcv: return "gcv";
    case TuneMethod::loocv: return "loocv";
  }
  return "unknown";
}

TuneMethod parse_tune_method(const std::string& name) {
  if (name == "aimse" || name == "aimse_plugin") return TuneMethod::aimse_plugin;
  if (name == "gcv") return TuneMethod::gcv;
  if (name == "loocv") return TuneMethod::loocv;
  throw std::invalid_argument("unknown tuning method '" + name + "' (expected aimse, gcv or loocv)");
}

AdditivePolynomialFit::AdditivePolynomialFit(const TrainingSet& training, std::size_t degree)
    : degree_(degree), dim_(training.dim()) {
  const std::size_t n = training.size();
  const std::size_t columns = degree * dim_ + 1;
  if (degree == 0) throw std::invalid_argument("AdditivePolynomialFit: degree must be at least 1");
  if (n <= columns) {
    throw std::invalid_argument("polynomial pilot needs n > " + std::to_string(columns) +
                                " observations for positive residual degrees of freedom, got n = " +
                                std::to_string(n));
  }

  Eigen::MatrixXd P(n, columns);
  Eigen::VectorXd Y(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = training.row(i);
    P(i, 0) = 1.0;
    for (std::size_t j = 0; j < dim_; ++j) {
      const double c = x[j] - 0.5;
      double power = 1.0;
      for (std::size_t k = 1; k <= degree; ++k) {
        power *= c;
        P(i, 1 + j * degree + (k - 1)) = power;
      }
    }
    Y(i) = training.y()[i];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s(s.size() - 1) <= kRankTolerance * s(0)) {
    throw std::runtime_error("polynomial pilot design is rank deficient (collinear covariates); "
                             "use GCV or LOOCV lifetime selection instead");
  }
  Eigen::VectorXd coef = svd.solve(Y);
  intercept_ = coef(0);
  beta_.assign(coef.data() + 1, coef.data() + coef.size());
  rss_ = (Y - P * coef).squaredNorm();
  sigma2_ = rss_ / static_cast<double>(n - columns);
}

double AdditivePolynomialFit::value(std::span<const double> x) const {
  double v = intercept_;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double c = x[j] - 0.5;
    double power = 1.0;
    for (std::size_t k = 1; k <= degree_; ++k) {
      power *= c;
      v += coefficient(j, k) * power;
    }
  }
  return v;
}

double AdditivePolynomialFit::derivative(std::size_t j, std::size_t order, double x_j) const {
  if (order == 0) throw std::invalid_argument("derivative: order must be at least 1");
  const double c = x_j - 0.5;
  double v = 0.0;
  double power = 1.0;
  for (std::size_t k = order; k <= degree_; ++k) {
    v += coefficient(j, k) * falling_factorial(k, order) * power;
    power *= c;
  }
  return v;
}

double aimse_lifetime(double curvature_sum, double sigma2, std::size_t dim, const DebiasConfig& config) {
  const double J = static_cast<double>(config.order);
  const double numerator = (4.0 * J + 4.0) * config.omega_bar * config.omega_bar / ((J + 2.0) * (J + 2.0)) *
                           curvature_sum;
  const double denominator = static_cast<double>(dim) * sigma2 * variance_constant(config, dim);
  if (!(numerator > 0.0) || !(denominator > 0.0) || !std::isfinite(numerator / denominator)) {
    std::ostringstream msg;
    msg << "AIMSE lifetime is undefined (bias term " << numerator << ", variance term " << denominator
        << "); the pilot found no curvature or no residual noise, use GCV or LOOCV instead";
    throw std::runtime_error(msg.str());
  }
  return std::pow(numerator / denominator, 1.0 / (4.0 * J + 4.0 + static_cast<double>(dim)));
}

TuneReport lambda_aimse(const TrainingSet& training, const DebiasConfig& config) {
  const std::size_t J = config.order;
  const std::size_t order = 2 * J + 2;
  AdditivePolynomialFit pilot(training, 2 * J + 4);

  TuneReport report;
  report.method = TuneMethod::aimse_plugin;
  report.J_used = J;
  report.derivative_means.assign(training.dim(), 0.0);
  report.residual_variance = pilot.residual_variance();

  const std::size_t n = training.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto x = training.row(i);
    double total = 0.0;
    for (std::size_t j = 0; j < training.dim(); ++j) {
      double dj = pilot.derivative(j, order, x[j]);
      report.derivative_means[j] += dj;
      total += dj;
    }
    report.curvature_sum += total * total;
  }
  for (double& m : report.derivative_means) m /= static_cast<double>(n);

  report.lambda_hat = aimse_lifetime(report.curvature_sum, report.residual_variance, training.dim(), config);
  return report;
}

double loocv_score(std::shared_ptr<const TrainingSet> training, double lifetime, const DebiasConfig& config,
                   std::size_t size, const RngStream& rng, unsigned threads) {
  DebiasedForest forest = fit_debiased(training, lifetime, size, config, rng, threads);
  const TrainingSet& data = *training;
  const std::size_t n = data.size();
  const std::size_t levels = config.order + 1;
  auto y = data.y();

  // One residual vector per (level, tree), summed afterwards in a fixed order.
  std::vector<std::vector<double>> parts(levels * size);
  parallel_for(levels * size, threads, [&](std::size_t k) {
    const std::size_t r = k / size;
    const MondrianTree& tree = forest.level(r).trees()[k % size];
    LeafStatistics stats = leaf_statistics(tree, data);
    auto& out = parts[k];
    out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t leaf = tree.locate(data.row(i));
      const double count = static_cast<double>(stats.count[leaf]);
      if (stats.count[leaf] < 2) continue;
      out[i] = (y[i] - stats.sum[leaf] / count) / (1.0 - 1.0 / count);
    }
  });

  std::vector<double> residual(n, 0.0);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double w = config.coefficient(k / size) / static_cast<double>(size);
    for (std::size_t i = 0; i < n; ++i) residual[i] += w * parts[k][i];
  }
  double score = 0.0;
  for (double e : residual) score += e * e;
  return score / static_cast<double>(n);
}

double gcv_score(std::shared_ptr<const TrainingSet> training, double lifetime, const DebiasConfig& config,
                 std::size_t size, const RngStream& rng, unsigned threads) {
  const TrainingSet& data = *training;
  const double n = static_cast<double>(data.size());
  const double d = static_cast<double>(data.dim());
  double abar_d = 0.0;
  for (double a : config.scales) abar_d += std::pow(a, d);
  abar_d /= static_cast<double>(config.scales.size());
  const double load = abar_d * std::pow(lifetime, d) / n;
  if (!(load < 1.0)) {
    std::ostringstream msg;
    msg << "gcv_score: lifetime " << lifetime << " exceeds the effective-sample bound (abar^d lambda^d = "
        << load * n << " >= n = " << data.size() << "); shrink the lifetime grid";
    throw std::invalid_argument(msg.str());
  }

  DebiasedForest forest = fit_debiased(training, lifetime, size, config, rng, threads);
  auto fitted = predict_debiased_many(forest, data.points(), threads);
  auto y = data.y();
  double score = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double e = (y[i] - fitted[i]) / (1.0 - load);
    score += e * e;
  }
  return score / n;
}

std::size_t select_forest_size(std::size_t n, std::size_t J) {
  if (n == 0) throw std::invalid_argument("select_forest_size: n must be at least 1");
  const double nn = static_cast<double>(n);
  const double v = J == 0 ? std::sqrt(nn)
                          : std::pow(nn, (2.0 * static_cast<double>(J) - 1.0) / (2.0 * static_cast<double>(J)));
  // Snap values within round-off of an integer so exact powers are not bumped up.
  const double nearest = std::round(v);
  const double size = std::fabs(v - nearest) <= 1e-9 * std::max(1.0, v) ? nearest : std::ceil(v);
  return std::max<std::size_t>(1, static_cast<std::size_t>(size));
}

std::vector<double> default_lifetime_grid(std::size_t n, std::size_t dim, std::size_t points) {
  if (n < 2 || dim == 0 || points < 2) throw std::invalid_argument("default_lifetime_grid: need n >= 2, d >= 1, points >= 2");
  const double nn = static_cast<double>(n), d = static_cast<double>(dim);
  const double lo = std::log(std::pow(nn, 1.0 / (d + 8.0)));
  const double hi = std::log(std::pow(nn, 1.0 / d));
  std::vector<double> grid(points);
  for (std::size_t g = 0; g < points; ++g) {
    grid[g] = std::exp(lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1));
  }
  return grid;
}

TuneReport select_lifetime(std::shared_ptr<const TrainingSet> training, TuneMethod method,
                           const DebiasConfig& config, std::size_t size, std::vector<double> grid,
                           const RngStream& rng, unsigned threads) {
  if (method == TuneMethod::aimse_plugin) {
    throw std::invalid_argument("select_lifetime: use lambda_aimse for the plug-in method");
  }
  if (grid.empty()) grid = default_lifetime_grid(training->size(), training->dim());

  if (method == TuneMethod::gcv) {
    const double d = static_cast<double>(training->dim());
    double abar_d = 0.0;
    for (double a : config.scales) abar_d += std::pow(a, d);
    abar_d /= static_cast<double>(config.scales.size());
    std::vector<double> kept;
    for (double lambda : grid) {
      if (abar_d * std::pow(lambda, d) < static_cast<double>(training->size())) {
        kept.push_back(lambda);
      } else {
        std::ostringstream msg;
        msg << "GCV: skipping lifetime " << lambda << " beyond the effective-sample bound";
        warn(msg.str());
      }
    }
    if (kept.empty()) throw std::invalid_argument("GCV: every lifetime in the grid exceeds the effective-sample bound");
    grid = std::move(kept);
  }

  TuneReport report;
  report.method = method;
  report.J_used = config.order;
  report.curve.resize(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t g) {
    RngStream stream(derive_seed(rng.master_seed(), {rng.id().replicate, kTuneLevel, g}), StreamId{});
    const double score = method == TuneMethod::gcv ? gcv_score(training, grid[g], config, size, stream, 1)
                                                   : loocv_score(training, grid[g], config, size, stream, 1);
    report.curve[g] = {grid[g], score};
  });

  std::size_t best = 0;
  for (std::size_t g = 1; g < report.curve.size(); ++g) {
    if (report.curve[g].score < report.curve[best].score) best = g;
  }
  report.lambda_hat = report.curve[best].lifetime;
  return report;
}

InferenceTuning tune_for_inference(const TrainingSet& training, std::size_t J, double gamma) {
  if (J == 0) throw std::invalid_argument("tune_for_inference: robust bias correction needs J >= 1");
  DebiasConfig lower = debias_coefficients(J - 1, geometric_scales(J - 1, gamma));
  InferenceTuning out;
  out.report = lambda_aimse(training, lower);
  out.lifetime = out.report.lambda_hat;
  out.order = J;
  return out;
}

}  // namespace mondrian
