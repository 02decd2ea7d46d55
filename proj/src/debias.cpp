#include "mondrian/debias.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mondrian/diagnostics.hpp"

namespace mondrian {

namespace {

using MatrixLD = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorLD = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

constexpr long double kResidualWarning = 1e-8L;

}  // namespace

double DebiasConfig::coefficient_l1() const {
  long double s = 0.0L;
  for (long double w : coefficients) s += std::fabs(w);
  return static_cast<double>(s);
}

std::vector<double> geometric_scales(std::size_t order, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("geometric_scales: gamma must be positive");
  std::vector<double> a(order + 1);
  for (std::size_t r = 0; r <= order; ++r) a[r] = std::pow(1.0 + gamma, static_cast<double>(r));
  return a;
}

std::vector<double> arithmetic_scales(std::size_t order, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("arithmetic_scales: gamma must be positive");
  std::vector<double> a(order + 1);
  for (std::size_t r = 0; r <= order; ++r) a[r] = 1.0 + gamma * static_cast<double>(r);
  return a;
}

DebiasConfig debias_coefficients(std::size_t order, std::span<const double> scales) {
  if (order > kMaxDebiasOrder) {
    throw std::invalid_argument("debias_coefficients: order J=" + std::to_string(order) +
                                " exceeds the supported maximum " + std::to_string(kMaxDebiasOrder));
  }
  if (scales.size() != order + 1) {
    throw std::invalid_argument("debias_coefficients: need J+1=" + std::to_string(order + 1) +
                                " scales, got " + std::to_string(scales.size()));
  }
  for (std::size_t r = 0; r <= order; ++r) {
    if (!(scales[r] > 0.0) || !std::isfinite(scales[r])) {
      throw std::invalid_argument("debias_coefficients: scale a_" + std::to_string(r) + " must be positive");
    }
    for (std::size_t q = 0; q < r; ++q) {
      if (scales[q] == scales[r]) {
        std::ostringstream msg;
        msg << "debias_coefficients: scales a_" << q << " and a_" << r << " are equal (" << scales[r]
            << "); the Vandermonde system is singular";
        throw std::invalid_argument(msg.str());
      }
    }
  }

  const auto size = static_cast<Eigen::Index>(order + 1);
  MatrixLD A(size, size);
  for (Eigen::Index s = 0; s < size; ++s) {
    for (Eigen::Index r = 0; r < size; ++r) {
      A(s, r) = std::pow(static_cast<long double>(scales[r]), -2.0L * static_cast<long double>(s));
    }
  }
  VectorLD e0 = VectorLD::Zero(size);
  e0(0) = 1.0L;

  Eigen::PartialPivLU<MatrixLD> lu(A);
  VectorLD omega = lu.solve(e0);
  omega += lu.solve(VectorLD(e0 - A * omega));

  const long double residual = (A * omega - e0).cwiseAbs().maxCoeff();
  if (residual > kResidualWarning) {
    std::ostringstream msg;
    msg << "debias_coefficients: residual " << static_cast<double>(residual) << " for J=" << order
        << "; the scale sequence is badly conditioned";
    warn(msg.str());
  }

  DebiasConfig config;
  config.order = order;
  config.scales.assign(scales.begin(), scales.end());
  config.coefficients.assign(omega.data(), omega.data() + size);
  long double bar = 0.0L;
  for (std::size_t r = 0; r <= order; ++r) {
    bar += omega(static_cast<Eigen::Index>(r)) *
           std::pow(static_cast<long double>(scales[r]), -2.0L * static_cast<long double>(order + 1));
  }
  config.omega_bar = static_cast<double>(bar);
  return config;
}

DebiasConfig default_debias_config(std::size_t order) {
  auto a = geometric_scales(order);
  return debias_coefficients(order, a);
}

DebiasedForest::DebiasedForest(std::vector<Forest> levels, DebiasConfig config, double base_lifetime)
    : levels_(std::move(levels)), config_(std::move(config)), base_lifetime_(base_lifetime) {
  if (levels_.size() != config_.order + 1) {
    throw std::invalid_argument("DebiasedForest: need one forest per debiasing level");
  }
  for (const Forest& f : levels_) {
    if (f.training_ptr() != levels_.front().training_ptr() || f.size() != levels_.front().size()) {
      throw std::invalid_argument("DebiasedForest: levels must share training data and forest size");
    }
  }
}

DebiasedForest fit_debiased(std::shared_ptr<const TrainingSet> training, double base_lifetime,
                            std::size_t size, const DebiasConfig& config, const RngStream& rng,
                            unsigned threads) {
  if (!(base_lifetime > 0.0)) throw std::invalid_argument("fit_debiased: lifetime must be positive");
  std::vector<Forest> levels;
  levels.reserve(config.order + 1);
  for (std::size_t r = 0; r <= config.order; ++r) {
    RngStream level_rng = rng.substream({rng.id().replicate, r, 0});
    levels.push_back(fit_forest(training, config.scales[r] * base_lifetime, size, level_rng, threads));
  }
  return DebiasedForest(std::move(levels), config, base_lifetime);
}

double predict_debiased(const DebiasedForest& forest, std::span<const double> x) {
  double total = 0.0;
  for (std::size_t r = 0; r < forest.levels().size(); ++r) {
    total += forest.config().coefficient(r) * predict(forest.level(r), x);
  }
  return total;
}

std::vector<double> debiased_weights(const DebiasedForest& forest, std::span<const double> x) {
  std::vector<double> w(forest.training().size(), 0.0);
  for (std::size_t r = 0; r < forest.levels().size(); ++r) {
    accumulate_tree_weights(forest.level(r), x, forest.config().coefficient(r), w);
  }
  return w;
}

std::vector<double> predict_debiased_many(const DebiasedForest& forest, PointsView queries,
                                          unsigned threads) {
  std::vector<double> total(queries.rows(), 0.0);
  for (std::size_t r = 0; r < forest.levels().size(); ++r) {
    auto level = predict_many(forest.level(r), queries, threads);
    const double w = forest.config().coefficient(r);
    for (std::size_t q = 0; q < total.size(); ++q) total[q] += w * level[q];
  }
  return total;
}

}  // namespace mondrian
