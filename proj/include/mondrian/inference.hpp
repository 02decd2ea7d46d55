#pragma once

#include <cstddef>
#include <span>

#include "mondrian/debias.hpp"

namespace mondrian {

/// Standard normal distribution function.
double normal_cdf(double z);

/// Standard normal quantile. Acklam's rational approximation followed by one
/// Halley step against normal_cdf; absolute error below 1e-12 on (0,1).
/// Throws std::invalid_argument unless 0 < p < 1.
double normal_quantile(double p);

/// A pointwise confidence interval and the settings that produced it.
struct InferenceResult {
  double estimate = 0.0;
  double sigma2_hat = 0.0;
  double Sigma_hat = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double alpha = 0.05;
  double lambda = 0.0;
  std::size_t B = 0;
  std::size_t J = 0;

  double half_width() const { return 0.5 * (ci_upper - ci_lower); }
};

/// Residual variance at x from the base (a_0) level:
/// (1/B) sum_b sum_i (Y_i - mu_hat(x))^2 1{X_i in T_b(x)} / N_b(x), with
/// mu_hat(x) the base level's prediction and empty cells contributing 0.
double sigma2_hat(const DebiasedForest& forest, std::span<const double> x);

/// sigma2_hat(x) * (n / lambda^d) * sum_i w_i^2 with w the debiased
/// smoother weights at x and lambda the base lifetime.
double Sigma_hat_debiased(const DebiasedForest& forest, std::span<const double> x);

/// mu_d(x) -/+ q_{1-alpha/2} sqrt(lambda^d / n) sqrt(Sigma_hat_d(x)).
/// Warns when x is on the boundary of [0,1]^d.
InferenceResult confidence_interval(const DebiasedForest& forest, std::span<const double> x, double alpha);

}  // namespace mondrian
