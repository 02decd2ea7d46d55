#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mondrian/points.hpp"
#include "mondrian/rng.hpp"

namespace mondrian {

/// Hard cap on the number of nodes in a single sampled tree.
inline constexpr std::size_t kMaxTreeNodes = 10'000'000;

/// Membership test for the box [lower, upper).
///
/// Boxes are half-open in every coordinate except that a face lying on the
/// global upper boundary x_j = 1 is closed, so every point of [0,1]^d lies
/// in exactly one leaf of a partition.
bool box_contains(std::span<const double> lower, std::span<const double> upper,
                  std::span<const double> x) noexcept;

/// An axis-aligned box inside [0,1]^d with positive side lengths.
class Cell {
 public:
  Cell(std::vector<double> lower, std::vector<double> upper);

  static Cell unit(std::size_t dim);

  std::size_t dim() const { return lower_.size(); }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }

  double side(std::size_t j) const { return upper_[j] - lower_[j]; }
  double volume() const;
  /// Half-perimeter: the sum of the side lengths.
  double linear_dimension() const;

  bool contains(std::span<const double> x) const {
    return box_contains(lower_, upper_, x);
  }

  friend bool operator==(const Cell&, const Cell&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// A node of a sampled tree. Internal nodes have split_dim >= 0 and `time` is
/// the split time; leaves have split_dim == -1, `time` is the formation time
/// and `leaf` indexes the leaf table.
struct TreeNode {
  std::int32_t split_dim = -1;
  double split_loc = 0.0;
  double time = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf = -1;

  bool is_leaf() const { return split_dim < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// A realisation of the Mondrian process on [0,1]^d stopped at a lifetime.
/// Immutable after construction; safe to share across threads.
class MondrianTree {
 public:
  /// Rebuilds a tree from its node table (root at index 0), validating the
  /// structural invariants. Used for deserialisation.
  static MondrianTree from_nodes(double lifetime, std::size_t dim, std::vector<TreeNode> nodes);

  double lifetime() const { return lifetime_; }
  std::size_t dim() const { return dim_; }
  std::span<const TreeNode> nodes() const { return nodes_; }
  std::size_t leaf_count() const { return leaf_time_.size(); }

  /// Leaf index containing x. No validation of x.
  std::size_t locate(std::span<const double> x) const;

  std::span<const double> leaf_lower(std::size_t leaf) const {
    return std::span<const double>(leaf_bounds_).subspan(2 * dim_ * leaf, dim_);
  }
  std::span<const double> leaf_upper(std::size_t leaf) const {
    return std::span<const double>(leaf_bounds_).subspan(2 * dim_ * leaf + dim_, dim_);
  }
  double leaf_time(std::size_t leaf) const { return leaf_time_[leaf]; }
  Cell leaf_cell(std::size_t leaf) const;

  friend bool operator==(const MondrianTree&, const MondrianTree&) = default;

 private:
  friend MondrianTree sample_tree(double, std::size_t, RngStream&, std::size_t);
  MondrianTree(double lifetime, std::size_t dim) : lifetime_(lifetime), dim_(dim) {}

  double lifetime_ = 0.0;
  std::size_t dim_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<double> leaf_bounds_;  // per leaf: d lower bounds then d upper bounds
  std::vector<double> leaf_time_;
};

/// Samples T ~ Mondrian([0,1]^d, lifetime).
///
/// Each cell D formed at time t draws E ~ Exp(|D|_1); if t + E <= lifetime
/// it splits along dimension j with probability |D_j| / |D|_1 at a location
/// uniform on the side, and both children are formed at time t + E.
/// Cells are expanded depth first, left child before right, which fixes the
/// order of random draws.
MondrianTree sample_tree(double lifetime, std::size_t dim, RngStream& rng,
                         std::size_t max_nodes = kMaxTreeNodes);

/// The leaf cell of `tree` containing x. Throws if x is outside [0,1]^d.
Cell cell_containing(const MondrianTree& tree, std::span<const double> x);

/// Number of rows of X lying in `cell`, under the same membership rule as
/// cell_containing.
std::size_t count_points_in(const Cell& cell, PointsView points);

}  // namespace mondrian
