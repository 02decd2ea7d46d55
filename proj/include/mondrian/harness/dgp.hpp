#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "mondrian/rng.hpp"
#include "mondrian/theory.hpp"
#include "mondrian/training_set.hpp"

namespace mondrian::harness {

/// Lower bound on the noise standard deviation unless zero noise is allowed.
inline constexpr double kMinNoiseSd = 1e-3;

enum class MeanFunction { constant, linear, quadratic, quartic, sin_pi_prod };
enum class DensityKind { uniform, product_beta };
enum class NoiseKind { constant, linear };

MeanFunction parse_mean_function(const std::string& name);
DensityKind parse_density(const std::string& name);
NoiseKind parse_noise(const std::string& name);
std::string to_string(MeanFunction f);
std::string to_string(DensityKind f);
std::string to_string(NoiseKind f);

/// Synthetic regression model Y = mu(X) + sigma(X) eps on [0,1]^d.
///
///   constant     mu(x) = mean_level
///   linear       mu(x) = sum_j x_j
///   quadratic    mu(x) = sum_j (x_j - mean_center)^2
///   quartic      mu(x) = sum_j (x_j - mean_center)^4
///   sin_pi_prod  mu(x) = prod_j sin(pi x_j)
///
/// Covariates are uniform or independent Beta(beta_a, beta_b) per coordinate
/// (beta_a, beta_b in (0, 1] so the density stays bounded away from zero).
/// sigma(x) = sigma + sigma_slope * mean_j x_j for linear noise.
struct Dgp {
  std::size_t dim = 1;
  std::size_t n = 1000;
  std::uint64_t seed = 0;

  MeanFunction mean = MeanFunction::sin_pi_prod;
  double mean_level = 0.0;
  double mean_center = 0.0;

  DensityKind density = DensityKind::uniform;
  double beta_a = 1.0;
  double beta_b = 1.0;

  NoiseKind noise = NoiseKind::constant;
  double sigma = 1.0;
  double sigma_slope = 0.0;
  /// Permits sigma == 0 (bias experiments only).
  bool allow_zero_noise = false;

  /// Throws std::invalid_argument for inadmissible settings.
  void validate() const;

  double mu(std::span<const double> x) const;
  double noise_sd(std::span<const double> x) const;
  double density_at(std::span<const double> x) const;
  /// Derivatives of mu and f at x, and d^{2 nu} mu for |nu| <= 2.
  LocalModel local_model(std::span<const double> x) const;
};

/// n i.i.d. draws. Per row: d covariates by inversion, then one Gaussian
/// noise draw by inversion, all from `rng`.
TrainingSet generate(const Dgp& dgp, RngStream& rng);

/// generate() on the stream (dgp.seed, {replicate, kDataLevel, 0}).
TrainingSet generate(const Dgp& dgp, std::uint64_t replicate = 0);

}  // namespace mondrian::harness
