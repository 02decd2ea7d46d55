#include "mondrian/inference.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mondrian/diagnostics.hpp"

namespace mondrian {

double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    std::ostringstream msg;
    msg << "normal_quantile: probability must lie in (0,1), got " << p;
    throw std::invalid_argument(msg.str());
  }
  // Acklam (2003) coefficients.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double z;
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    z = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    double q = p - 0.5;
    double r = q * q;
    z = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log1p(-p));
    z = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement. The residual uses the tail that avoids cancellation.
  double e = z < 0.0 ? 0.5 * std::erfc(-z / std::numbers::sqrt2) - p
                     : (1.0 - p) - 0.5 * std::erfc(z / std::numbers::sqrt2);
  double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
  z -= u / (1.0 + 0.5 * z * u);
  return z;
}

double sigma2_hat(const DebiasedForest& forest, std::span<const double> x) {
  const Forest& base = forest.level(0);
  auto stats = cell_statistics(base, x);
  double mu = 0.0;
  for (const CellSums& s : stats) {
    if (s.count > 0) mu += s.mean();
  }
  mu /= static_cast<double>(base.size());

  double total = 0.0;
  for (const CellSums& s : stats) {
    if (s.count > 0) total += s.sum_sq_about(mu) / static_cast<double>(s.count);
  }
  return std::max(0.0, total / static_cast<double>(base.size()));
}

namespace {

double scaled_weight_norm(const DebiasedForest& forest, std::span<const double> x) {
  auto w = debiased_weights(forest, x);
  double norm2 = 0.0;
  for (double v : w) norm2 += v * v;
  const double n = static_cast<double>(forest.training().size());
  return norm2 * n / std::pow(forest.base_lifetime(), static_cast<double>(forest.dim()));
}

}  // namespace

double Sigma_hat_debiased(const DebiasedForest& forest, std::span<const double> x) {
  return std::max(0.0, sigma2_hat(forest, x) * scaled_weight_norm(forest, x));
}

InferenceResult confidence_interval(const DebiasedForest& forest, std::span<const double> x, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    std::ostringstream msg;
    msg << "confidence_interval: alpha must lie in (0,1), got " << alpha;
    throw std::invalid_argument(msg.str());
  }
  require_in_unit_cube(x, forest.dim(), "confidence_interval");
  for (double v : x) {
    if (v == 0.0 || v == 1.0) {
      warn("confidence_interval: query point lies on the boundary of [0,1]^d; "
           "coverage guarantees hold only for interior points");
      break;
    }
  }

  InferenceResult res;
  res.alpha = alpha;
  res.lambda = forest.base_lifetime();
  res.B = forest.size();
  res.J = forest.config().order;
  res.estimate = predict_debiased(forest, x);
  res.sigma2_hat = sigma2_hat(forest, x);

  res.Sigma_hat = std::max(0.0, res.sigma2_hat * scaled_weight_norm(forest, x));

  const double n = static_cast<double>(forest.training().size());
  const double lambda_d = std::pow(forest.base_lifetime(), static_cast<double>(forest.dim()));

  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(lambda_d / n) * std::sqrt(res.Sigma_hat);
  res.ci_lower = res.estimate - half;
  res.ci_upper = res.estimate + half;
  return res;
}

}  // namespace mondrian
