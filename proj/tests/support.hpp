#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "mondrian/rng.hpp"
#include "mondrian/training_set.hpp"

namespace testing {

/// Uniform covariates on [0,1]^d with responses from `mu` plus N(0, sigma^2).
template <typename Mu>
mondrian::TrainingSet uniform_data(std::size_t n, std::size_t dim, Mu mu, double sigma, std::uint64_t seed) {
  mondrian::RngStream rng(seed, {0, mondrian::kAuxLevel, 7});
  std::vector<double> x(n * dim), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) x[i * dim + j] = rng.uniform_open();
    y[i] = mu(std::span<const double>(x.data() + i * dim, dim)) + sigma * rng.normal();
  }
  return mondrian::TrainingSet(std::move(x), std::move(y), dim);
}

inline std::shared_ptr<const mondrian::TrainingSet> share(mondrian::TrainingSet t) {
  return std::make_shared<const mondrian::TrainingSet>(std::move(t));
}

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
inline double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace testing
