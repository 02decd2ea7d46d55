#include "mondrian/theory.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace mondrian {

void LocalModel::validate() const {
  if (dim == 0) throw std::invalid_argument("LocalModel: dimension must be at least 1");
  if (!(density > 0.0)) throw std::invalid_argument("LocalModel: density must be positive");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("LocalModel: noise variance must be positive");
  for (const auto* v : {&density_gradient, &mu_gradient, &mu_second}) {
    if (!v->empty() && v->size() != dim) {
      throw std::invalid_argument("LocalModel: derivative vectors must be empty or have length dim");
    }
  }
}

long double overlap_constant(long double a_r, long double a_rp) {
  return (2.0L * a_r / 3.0L) * (1.0L - (a_r / a_rp) * std::log(a_rp / a_r + 1.0L));
}

double variance_constant(const DebiasConfig& config, std::size_t dim) {
  const std::size_t levels = config.order + 1;
  long double total = 0.0L;
  for (std::size_t r = 0; r < levels; ++r) {
    for (std::size_t q = 0; q < levels; ++q) {
      long double ar = config.scales[r], aq = config.scales[q];
      long double pair = overlap_constant(ar, aq) + overlap_constant(aq, ar);
      total += config.coefficients[r] * config.coefficients[q] *
               std::pow(pair, static_cast<long double>(dim));
    }
  }
  return static_cast<double>(total);
}

double limiting_variance(const DebiasConfig& config, const LocalModel& model) {
  model.validate();
  return model.noise_variance / model.density * variance_constant(config, model.dim);
}

double leading_bias_quadratic(const LocalModel& model, double lifetime) {
  model.validate();
  if (!(lifetime > 0.0)) throw std::invalid_argument("leading_bias_quadratic: lifetime must be positive");
  double curvature = 0.0;
  for (double v : model.mu_second) curvature += v;
  double drift = 0.0;
  if (!model.mu_gradient.empty() && !model.density_gradient.empty()) {
    for (std::size_t j = 0; j < model.dim; ++j) drift += model.mu_gradient[j] * model.density_gradient[j];
  }
  return (curvature + drift / model.density) / (2.0 * lifetime * lifetime);
}

std::vector<MultiIndex> multi_indices(std::size_t dim, std::size_t order) {
  std::vector<MultiIndex> out;
  MultiIndex current(dim, 0);
  std::function<void(std::size_t, int)> fill = [&](std::size_t j, int remaining) {
    if (j + 1 == dim) {
      current[j] = remaining;
      out.push_back(current);
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      current[j] = k;
      fill(j + 1, remaining - k);
    }
  };
  if (dim > 0) fill(0, static_cast<int>(order));
  return out;
}

double bias_uniform(const EvenDerivatives& derivatives, std::size_t dim, std::size_t order, double lifetime) {
  if (order == 0) throw std::invalid_argument("bias_uniform: order must be at least 1");
  if (!(lifetime > 0.0)) throw std::invalid_argument("bias_uniform: lifetime must be positive");
  double total = 0.0;
  for (const MultiIndex& nu : multi_indices(dim, order)) {
    auto it = derivatives.find(nu);
    if (it == derivatives.end()) {
      std::ostringstream msg;
      msg << "bias_uniform: missing derivative for nu = (";
      for (std::size_t j = 0; j < nu.size(); ++j) msg << (j ? "," : "") << nu[j];
      msg << ")";
      throw std::invalid_argument(msg.str());
    }
    double weight = 1.0;
    for (int k : nu) weight /= static_cast<double>(k + 1);
    total += it->second * weight;
  }
  return total / std::pow(lifetime, 2.0 * static_cast<double>(order));
}

std::vector<double> cell_shape_sampler(std::span<const double> x, double lifetime, RngStream& rng) {
  std::vector<double> sides(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    double left = std::min(rng.exponential(1.0) / lifetime, x[j]);
    double right = std::min(rng.exponential(1.0) / lifetime, 1.0 - x[j]);
    sides[j] = left + right;
  }
  return sides;
}

double expected_side_length(double x_j, double lifetime) {
  return (-std::expm1(-lifetime * x_j) - std::expm1(-lifetime * (1.0 - x_j))) / lifetime;
}

}  // namespace mondrian
