#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "mondrian/debias.hpp"
#include "mondrian/rng.hpp"

namespace mondrian {

/// Multi-index nu in N^d.
using MultiIndex = std::vector<int>;

/// Values of the even partial derivatives d^{2 nu} mu(x), keyed by nu
/// (so key {2, 0} holds d^4 mu / dx_1^4 and key {1, 1} holds
/// d^4 mu / dx_1^2 dx_2^2).
using EvenDerivatives = std::map<MultiIndex, double>;

/// Local description of the data-generating process at a query point.
struct LocalModel {
  std::size_t dim = 1;
  double density = 1.0;
  std::vector<double> density_gradient;  // empty means all zero
  std::vector<double> mu_gradient;       // empty means all zero
  std::vector<double> mu_second;         // pure second derivatives; empty means all zero
  double noise_variance = 1.0;
  EvenDerivatives even_derivatives;      // only needed by bias_uniform

  /// Throws std::invalid_argument on non-positive density or variance, or
  /// vectors whose length is neither 0 nor dim.
  void validate() const;
};

/// l_{rr'} = (2 a_r / 3) (1 - (a_r / a_r') log(a_r' / a_r + 1)).
long double overlap_constant(long double a_r, long double a_rp);

/// sum_r sum_r' omega_r omega_r' (l_{rr'} + l_{r'r})^d.
double variance_constant(const DebiasConfig& config, std::size_t dim);

/// Limiting variance of the normalised debiased estimator:
/// sigma^2 / f * variance_constant(config, d).
double limiting_variance(const DebiasConfig& config, const LocalModel& model);

/// Leading bias B_1(x) / lambda^2 =
/// (1 / 2 lambda^2) [ sum_j d_j^2 mu + (1/f) sum_j d_j mu d_j f ].
double leading_bias_quadratic(const LocalModel& model, double lifetime);

/// All multi-indices nu in N^dim with |nu| = order, in lexicographically
/// decreasing order.
std::vector<MultiIndex> multi_indices(std::size_t dim, std::size_t order);

/// Bias term B_r(x) / lambda^{2r} for uniform covariates:
/// lambda^{-2r} sum_{|nu| = r} d^{2 nu} mu(x) prod_j 1 / (nu_j + 1).
/// Throws std::invalid_argument if a needed derivative is missing.
double bias_uniform(const EvenDerivatives& derivatives, std::size_t dim, std::size_t order, double lifetime);

/// One draw of the side lengths of T(x) from the closed-form law
/// |T(x)_j| = min(E_j1 / lambda, x_j) + min(E_j2 / lambda, 1 - x_j).
std::vector<double> cell_shape_sampler(std::span<const double> x, double lifetime, RngStream& rng);

/// E|T(x)_j| under the same law: (1 - e^{-lambda x_j}) / lambda + (1 - e^{-lambda (1 - x_j)}) / lambda.
double expected_side_length(double x_j, double lifetime);

}  // namespace mondrian
