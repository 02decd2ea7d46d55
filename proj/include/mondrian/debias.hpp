#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mondrian/forest.hpp"

namespace mondrian {

/// Largest supported debiasing order.
inline constexpr std::size_t kMaxDebiasOrder = 5;

/// Default ratio of the geometric lifetime sequence a_r = (1 + gamma)^r.
inline constexpr double kDefaultScaleGamma = 0.05;

/// Generalised jackknife configuration.
///
/// The coefficients solve sum_r omega_r = 1 and sum_r omega_r a_r^{-2s} = 0
/// for s = 1..J. They are kept in long double: for closely spaced scales the
/// coefficients grow to ~1e8 in magnitude and double storage alone would
/// leave residuals near 1e-8.
struct DebiasConfig {
  std::size_t order = 0;
  std::vector<double> scales{1.0};
  std::vector<long double> coefficients{1.0L};
  /// sum_r omega_r a_r^{-2J-2}, the weight on the first surviving bias term.
  double omega_bar = 1.0;

  double coefficient(std::size_t r) const { return static_cast<double>(coefficients[r]); }
  /// sum_r |omega_r|.
  double coefficient_l1() const;
};

/// a_r = (1 + gamma)^r for r = 0..order.
std::vector<double> geometric_scales(std::size_t order, double gamma = kDefaultScaleGamma);
/// a_r = 1 + gamma r for r = 0..order.
std::vector<double> arithmetic_scales(std::size_t order, double gamma);

/// Solves the (J+1)x(J+1) Vandermonde system A omega = e_0 with
/// A_{sr} = a_r^{-2s}. Throws std::invalid_argument on a length mismatch,
/// non-positive scales, J > kMaxDebiasOrder, or equal scales (naming the pair).
DebiasConfig debias_coefficients(std::size_t order, std::span<const double> scales);

/// debias_coefficients(order, geometric_scales(order)).
DebiasConfig default_debias_config(std::size_t order);

/// J + 1 forests over one training set, level r at lifetime a_r * lambda.
class DebiasedForest {
 public:
  DebiasedForest(std::vector<Forest> levels, DebiasConfig config, double base_lifetime);

  std::span<const Forest> levels() const { return levels_; }
  const Forest& level(std::size_t r) const { return levels_[r]; }
  const DebiasConfig& config() const { return config_; }
  double base_lifetime() const { return base_lifetime_; }
  std::size_t size() const { return levels_.front().size(); }
  const TrainingSet& training() const { return levels_.front().training(); }
  std::size_t dim() const { return training().dim(); }

 private:
  std::vector<Forest> levels_;
  DebiasConfig config_;
  double base_lifetime_;
};

/// Level r uses the streams (master, {replicate, r, b}).
DebiasedForest fit_debiased(std::shared_ptr<const TrainingSet> training, double base_lifetime,
                            std::size_t size, const DebiasConfig& config, const RngStream& rng,
                            unsigned threads = 1);

/// sum_r omega_r predict(level_r, x).
double predict_debiased(const DebiasedForest& forest, std::span<const double> x);

/// sum_r omega_r tree_weights(level_r, x).
std::vector<double> debiased_weights(const DebiasedForest& forest, std::span<const double> x);

std::vector<double> predict_debiased_many(const DebiasedForest& forest, PointsView queries,
                                          unsigned threads = 1);

}  // namespace mondrian
