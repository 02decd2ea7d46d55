#include "mondrian/training_set.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mondrian/mondrian_tree.hpp"

namespace mondrian {

TrainingSet::TrainingSet(std::vector<double> x, std::vector<double> y, std::size_t dim)
    : dim_(dim), x_(std::move(x)), y_(std::move(y)) {
  if (dim_ == 0) throw std::invalid_argument("TrainingSet: dimension must be at least 1");
  if (y_.empty()) throw std::invalid_argument("TrainingSet: need at least one observation");
  if (x_.size() != y_.size() * dim_) {
    throw std::invalid_argument("TrainingSet: X has " + std::to_string(x_.size()) +
                                " values but Y has " + std::to_string(y_.size()) +
                                " rows at dimension " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (!std::isfinite(y_[i])) {
      throw std::invalid_argument("TrainingSet: non-finite response in row " + std::to_string(i + 1));
    }
    if (!in_unit_cube(row(i))) {
      throw std::invalid_argument("TrainingSet: covariates of row " + std::to_string(i + 1) +
                                  " lie outside [0,1]; rescale each covariate to [0,1] "
                                  "(e.g. min-max scaling) before fitting");
    }
  }
  build_index();
}

TrainingSet TrainingSet::with_responses(std::vector<double> y) const {
  return TrainingSet(x_, std::move(y), dim_);
}

void TrainingSet::build_index() {
  const std::size_t n = y_.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return x_[a * dim_] < x_[b * dim_]; });
  sorted_x0_.resize(n);
  center_ = 0.0;
  for (std::size_t p = 0; p < n; ++p) center_ += y_[order_[p]];
  center_ /= static_cast<double>(n);
  prefix_dev_.assign(n + 1, 0.0);
  prefix_dev2_.assign(n + 1, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t i = order_[p];
    sorted_x0_[p] = x_[i * dim_];
    double dev = y_[i] - center_;
    prefix_dev_[p + 1] = prefix_dev_[p] + dev;
    prefix_dev2_[p + 1] = prefix_dev2_[p] + dev * dev;
  }
}

std::pair<std::size_t, std::size_t> TrainingSet::slab(double lower0, double upper0) const {
  auto first = std::lower_bound(sorted_x0_.begin(), sorted_x0_.end(), lower0);
  auto last = upper0 == 1.0 ? sorted_x0_.end()
                            : std::lower_bound(first, sorted_x0_.end(), upper0);
  return {static_cast<std::size_t>(first - sorted_x0_.begin()),
          static_cast<std::size_t>(last - sorted_x0_.begin())};
}

bool TrainingSet::inside_tail(std::span<const double> lower, std::span<const double> upper,
                              std::size_t i) const {
  const double* xi = x_.data() + i * dim_;
  for (std::size_t j = 1; j < dim_; ++j) {
    if (xi[j] < lower[j]) return false;
    if (xi[j] >= upper[j] && !(upper[j] == 1.0 && xi[j] == 1.0)) return false;
  }
  return true;
}

CellSums TrainingSet::cell_sums(std::span<const double> lower, std::span<const double> upper) const {
  CellSums s;
  s.center = center_;
  if (dim_ == 1) {
    auto [begin, end] = slab(lower[0], upper[0]);
    s.count = end - begin;
    s.sum_dev = prefix_dev_[end] - prefix_dev_[begin];
    s.sum_dev2 = std::max(0.0, prefix_dev2_[end] - prefix_dev2_[begin]);
    return s;
  }
  for_each_in_cell(lower, upper, [&](std::size_t i) {
    double dev = y_[i] - center_;
    ++s.count;
    s.sum_dev += dev;
    s.sum_dev2 += dev * dev;
  });
  return s;
}

}  // namespace mondrian
