#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mondrian/points.hpp"

namespace mondrian {

/// Count and response moments over the training points inside one box.
/// Sums are of deviations from `center` (the global response mean), which
/// keeps cancellation small when they come from prefix tables.
struct CellSums {
  std::size_t count = 0;
  double center = 0.0;
  double sum_dev = 0.0;
  double sum_dev2 = 0.0;

  double mean() const { return count == 0 ? 0.0 : center + sum_dev / static_cast<double>(count); }
  double sum_y() const { return static_cast<double>(count) * center + sum_dev; }
  /// Sum of (y - m)^2 over the box.
  double sum_sq_about(double m) const {
    double shift = m - center;
    return sum_dev2 - 2.0 * shift * sum_dev + static_cast<double>(count) * shift * shift;
  }
};

/// Covariates in [0,1]^d and responses, plus an index sorted along the
/// first coordinate for fast box queries. Immutable once built.
class TrainingSet {
 public:
  /// `x` is row-major n x dim. Throws std::invalid_argument on empty input,
  /// length mismatch, non-finite values, or covariates outside [0,1].
  TrainingSet(std::vector<double> x, std::vector<double> y, std::size_t dim);

  std::size_t size() const { return y_.size(); }
  std::size_t dim() const { return dim_; }
  PointsView points() const { return {x_, dim_}; }
  std::span<const double> row(std::size_t i) const { return points().row(i); }
  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }

  /// Same covariates with a different response vector.
  TrainingSet with_responses(std::vector<double> y) const;

  /// Row indices sorted by the first coordinate (ties by index).
  std::span<const std::size_t> order() const { return order_; }

  /// Half-open range of positions in order() whose first coordinate lies in
  /// the box's first side, under the box membership convention.
  std::pair<std::size_t, std::size_t> slab(double lower0, double upper0) const;

  CellSums cell_sums(std::span<const double> lower, std::span<const double> upper) const;

  /// Calls fn(i) for every row i inside the box, in sorted order.
  template <typename Fn>
  void for_each_in_cell(std::span<const double> lower, std::span<const double> upper, Fn&& fn) const {
    auto [begin, end] = slab(lower[0], upper[0]);
    for (std::size_t p = begin; p < end; ++p) {
      std::size_t i = order_[p];
      if (dim_ == 1 || inside_tail(lower, upper, i)) fn(i);
    }
  }

 private:
  bool inside_tail(std::span<const double> lower, std::span<const double> upper, std::size_t i) const;
  void build_index();

  std::size_t dim_ = 0;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<std::size_t> order_;
  std::vector<double> sorted_x0_;
  double center_ = 0.0;
  std::vector<double> prefix_dev_;   // prefix sums of y - center in sorted order, size n + 1
  std::vector<double> prefix_dev2_;
};

}  // namespace mondrian
