#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "mondrian/debias.hpp"
#include "mondrian/rng.hpp"
#include "mondrian/training_set.hpp"

namespace mondrian {

enum class TuneMethod { aimse_plugin, gcv, loocv };

std::string to_string(TuneMethod method);
/// Parses "aimse", "aimse_plugin", "gcv" or "loocv".
TuneMethod parse_tune_method(const std::string& name);

struct CriterionPoint {
  double lifetime = 0.0;
  double score = 0.0;
};

struct TuneReport {
  double lambda_hat = 0.0;
  TuneMethod method = TuneMethod::aimse_plugin;
  std::size_t J_used = 0;
  /// Plug-in only: per-dimension sample mean of the estimated (2J+2)-th
  /// pure derivative over the covariates.
  std::vector<double> derivative_means;
  /// Plug-in only: sum_i (sum_j d_j^{2J+2} mu_hat(X_i))^2.
  double curvature_sum = 0.0;
  /// Plug-in only: residual variance of the polynomial pilot fit.
  double residual_variance = 0.0;
  /// Grid methods only: the criterion curve.
  std::vector<CriterionPoint> curve;
};

/// Least-squares fit of an additive polynomial without interactions,
/// mu(x) ~ c + sum_j sum_{k=1..degree} beta_{jk} (x_j - 1/2)^k.
class AdditivePolynomialFit {
 public:
  /// Throws std::invalid_argument when n <= degree*d + 1 and
  /// std::runtime_error when the design is rank deficient (smallest singular
  /// value below 1e-10 of the largest).
  AdditivePolynomialFit(const TrainingSet& training, std::size_t degree);

  std::size_t degree() const { return degree_; }
  std::size_t dim() const { return dim_; }
  double intercept() const { return intercept_; }
  /// beta_{jk} for k = 1..degree.
  double coefficient(std::size_t j, std::size_t k) const { return beta_[j * degree_ + (k - 1)]; }
  double residual_sum_of_squares() const { return rss_; }
  /// RSS / (n - degree*d - 1).
  double residual_variance() const { return sigma2_; }

  double value(std::span<const double> x) const;
  /// d^order/dx_j^order of the fitted polynomial at coordinate value x_j.
  double derivative(std::size_t j, std::size_t order, double x_j) const;

 private:
  std::size_t degree_;
  std::size_t dim_;
  double intercept_ = 0.0;
  std::vector<double> beta_;
  double rss_ = 0.0;
  double sigma2_ = 0.0;
};

/// Closed-form AIMSE-optimal lifetime
/// ( (4J+4) omega_bar^2 / (J+2)^2 * curvature_sum / (d sigma2 V) )^{1/(4J+4+d)}
/// with V = variance_constant(config, d). For the population version pass
/// curvature_sum = n * integral of (sum_j d_j^{2J+2} mu)^2.
double aimse_lifetime(double curvature_sum, double sigma2, std::size_t dim, const DebiasConfig& config);

/// Plug-in lifetime from a global polynomial pilot of degree 2J+4.
TuneReport lambda_aimse(const TrainingSet& training, const DebiasConfig& config);

/// Closed-form leave-one-out criterion from a single fit. Tree terms whose
/// cell contains only X_i (N = 1) have no leave-one-out prediction and are
/// dropped from the inner sum.
double loocv_score(std::shared_ptr<const TrainingSet> training, double lifetime, const DebiasConfig& config,
                   std::size_t size, const RngStream& rng, unsigned threads = 1);

/// (1/n) sum_i ((Y_i - mu_d(X_i)) / (1 - abar^d lambda^d / n))^2 with
/// abar^d = mean_r a_r^d. Throws std::invalid_argument when abar^d lambda^d >= n.
double gcv_score(std::shared_ptr<const TrainingSet> training, double lifetime, const DebiasConfig& config,
                 std::size_t size, const RngStream& rng, unsigned threads = 1);

/// ceil(sqrt(n)) for J = 0, ceil(n^{(2J-1)/(2J)}) otherwise.
std::size_t select_forest_size(std::size_t n, std::size_t J);

/// Geometric grid of `points` lifetimes spanning [n^{1/(d+8)}, n^{1/d}].
std::vector<double> default_lifetime_grid(std::size_t n, std::size_t dim, std::size_t points = 20);

/// Minimises GCV or LOOCV over `grid` (empty = default grid). Grid point g
/// is fitted with its own stream derived from rng, so the curve is
/// reproducible and independent of `threads`. For GCV, grid points beyond
/// the effective-sample bound are skipped with a warning.
TuneReport select_lifetime(std::shared_ptr<const TrainingSet> training, TuneMethod method,
                           const DebiasConfig& config, std::size_t size, std::vector<double> grid,
                           const RngStream& rng, unsigned threads = 1);

struct InferenceTuning {
  double lifetime = 0.0;
  std::size_t order = 0;
  TuneReport report;
};

/// Robust bias correction: the lifetime is the AIMSE plug-in for order
/// J - 1 and estimation uses order J. Requires J >= 1.
InferenceTuning tune_for_inference(const TrainingSet& training, std::size_t J,
                                   double gamma = kDefaultScaleGamma);

}  // namespace mondrian
