#include "mondrian/harness/dgp.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mondrian::harness {

MeanFunction parse_mean_function(const std::string& name) {
  if (name == "constant") return MeanFunction::constant;
  if (name == "linear") return MeanFunction::linear;
  if (name == "quadratic") return MeanFunction::quadratic;
  if (name == "quartic") return MeanFunction::quartic;
  if (name == "sin_pi_prod") return MeanFunction::sin_pi_prod;
  throw std::invalid_argument("unknown mean function '" + name +
                              "' (expected constant, linear, quadratic, quartic or sin_pi_prod)");
}

DensityKind parse_density(const std::string& name) {
  if (name == "uniform") return DensityKind::uniform;
  if (name == "product_beta") return DensityKind::product_beta;
  throw std::invalid_argument("unknown covariate density '" + name + "' (expected uniform or product_beta)");
}

NoiseKind parse_noise(const std::string& name) {
  if (name == "constant") return NoiseKind::constant;
  if (name == "linear") return NoiseKind::linear;
  throw std::invalid_argument("unknown noise model '" + name + "' (expected constant or linear)");
}

std::string to_string(MeanFunction f) {
  switch (f) {
    case MeanFunction::constant: return "constant";
    case MeanFunction::linear: return "linear";
    case MeanFunction::quadratic: return "quadratic";
    case MeanFunction::quartic: return "quartic";
    case MeanFunction::sin_pi_prod: return "sin_pi_prod";
  }
  return "unknown";
}

std::string to_string(DensityKind f) { return f == DensityKind::uniform ? "uniform" : "product_beta"; }
std::string to_string(NoiseKind f) { return f == NoiseKind::constant ? "constant" : "linear"; }

void Dgp::validate() const {
  if (dim == 0) throw std::invalid_argument("dgp: dimension must be at least 1");
  if (n == 0) throw std::invalid_argument("dgp: n must be at least 1");
  if (density == DensityKind::product_beta &&
      !(beta_a > 0.0 && beta_a <= 1.0 && beta_b > 0.0 && beta_b <= 1.0)) {
    throw std::invalid_argument("dgp: product_beta needs shape parameters in (0, 1] "
                                "so the density is bounded away from zero");
  }
  if (!std::isfinite(sigma) || !std::isfinite(sigma_slope)) throw std::invalid_argument("dgp: noise parameters must be finite");
  const double slope = noise == NoiseKind::linear ? sigma_slope : 0.0;
  const double smallest = sigma + std::min(0.0, slope);
  if (allow_zero_noise) {
    if (smallest < 0.0) throw std::invalid_argument("dgp: noise standard deviation must be nonnegative");
  } else if (smallest < kMinNoiseSd) {
    throw std::invalid_argument("dgp: noise standard deviation must be at least 0.001 on [0,1]^d "
                                "(set allow_zero_noise for noiseless bias experiments)");
  }
}

double Dgp::mu(std::span<const double> x) const {
  double v = 0.0;
  switch (mean) {
    case MeanFunction::constant:
      return mean_level;
    case MeanFunction::linear:
      for (double c : x) v += c;
      return v;
    case MeanFunction::quadratic:
      for (double c : x) v += (c - mean_center) * (c - mean_center);
      return v;
    case MeanFunction::quartic:
      for (double c : x) {
        double t = (c - mean_center) * (c - mean_center);
        v += t * t;
      }
      return v;
    case MeanFunction::sin_pi_prod:
      v = 1.0;
      for (double c : x) v *= std::sin(std::numbers::pi * c);
      return v;
  }
  return v;
}

double Dgp::noise_sd(std::span<const double> x) const {
  if (noise == NoiseKind::constant) return sigma;
  double m = 0.0;
  for (double c : x) m += c;
  return sigma + sigma_slope * m / static_cast<double>(x.size());
}

double Dgp::density_at(std::span<const double> x) const {
  if (density == DensityKind::uniform) return 1.0;
  boost::math::beta_distribution<double> law(beta_a, beta_b);
  double f = 1.0;
  for (double c : x) f *= boost::math::pdf(law, c);
  return f;
}

LocalModel Dgp::local_model(std::span<const double> x) const {
  LocalModel m;
  m.dim = dim;
  m.density = density_at(x);
  m.density_gradient.assign(dim, 0.0);
  if (density == DensityKind::product_beta) {
    for (std::size_t j = 0; j < dim; ++j) {
      m.density_gradient[j] = m.density * ((beta_a - 1.0) / x[j] - (beta_b - 1.0) / (1.0 - x[j]));
    }
  }
  double s = noise_sd(x);
  m.noise_variance = s > 0.0 ? s * s : kMinNoiseSd * kMinNoiseSd;

  m.mu_gradient.assign(dim, 0.0);
  m.mu_second.assign(dim, 0.0);
  // even[nu] for |nu| <= 2
  auto set_even = [&](const MultiIndex& nu, double v) { m.even_derivatives[nu] = v; };
  for (std::size_t order = 1; order <= 2; ++order) {
    for (const auto& nu : multi_indices(dim, order)) set_even(nu, 0.0);
  }

  switch (mean) {
    case MeanFunction::constant:
      break;
    case MeanFunction::linear:
      std::fill(m.mu_gradient.begin(), m.mu_gradient.end(), 1.0);
      break;
    case MeanFunction::quadratic:
      for (std::size_t j = 0; j < dim; ++j) {
        m.mu_gradient[j] = 2.0 * (x[j] - mean_center);
        m.mu_second[j] = 2.0;
        MultiIndex nu(dim, 0);
        nu[j] = 1;
        set_even(nu, 2.0);
      }
      break;
    case MeanFunction::quartic:
      for (std::size_t j = 0; j < dim; ++j) {
        const double c = x[j] - mean_center;
        m.mu_gradient[j] = 4.0 * c * c * c;
        m.mu_second[j] = 12.0 * c * c;
        MultiIndex nu(dim, 0);
        nu[j] = 1;
        set_even(nu, 12.0 * c * c);
        nu[j] = 2;
        set_even(nu, 24.0);
      }
      break;
    case MeanFunction::sin_pi_prod: {
      const double pi = std::numbers::pi;
      const double value = mu(x);
      for (std::size_t j = 0; j < dim; ++j) {
        double others = 1.0;
        for (std::size_t k = 0; k < dim; ++k) {
          if (k != j) others *= std::sin(pi * x[k]);
        }
        m.mu_gradient[j] = pi * std::cos(pi * x[j]) * others;
        m.mu_second[j] = -pi * pi * value;
      }
      for (std::size_t order = 1; order <= 2; ++order) {
        for (const auto& nu : multi_indices(dim, order)) {
          set_even(nu, std::pow(-pi * pi, static_cast<double>(order)) * value);
        }
      }
      break;
    }
  }
  return m;
}

TrainingSet generate(const Dgp& dgp, RngStream& rng) {
  dgp.validate();
  std::vector<double> x(dgp.n * dgp.dim);
  std::vector<double> y(dgp.n);
  for (std::size_t i = 0; i < dgp.n; ++i) {
    std::span<double> row(x.data() + i * dgp.dim, dgp.dim);
    for (double& c : row) {
      const double u = rng.uniform_open();
      c = dgp.density == DensityKind::uniform ? u : boost::math::ibeta_inv(dgp.beta_a, dgp.beta_b, u);
    }
    const double eps = rng.normal();
    y[i] = dgp.mu(row) + dgp.noise_sd(row) * eps;
  }
  return TrainingSet(std::move(x), std::move(y), dgp.dim);
}

TrainingSet generate(const Dgp& dgp, std::uint64_t replicate) {
  RngStream rng(dgp.seed, {replicate, kDataLevel, 0});
  return generate(dgp, rng);
}

}  // namespace mondrian::harness
