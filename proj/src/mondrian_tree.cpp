#include "mondrian/mondrian_tree.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mondrian {

bool in_unit_cube(std::span<const double> x) noexcept {
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

void require_in_unit_cube(std::span<const double> x, std::size_t dim, const char* what) {
  if (x.size() != dim) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(dim) +
                                " coordinates, got " + std::to_string(x.size()));
  }
  if (!in_unit_cube(x)) {
    throw std::invalid_argument(std::string(what) + ": point must lie in [0,1]^d");
  }
}

bool box_contains(std::span<const double> lower, std::span<const double> upper,
                  std::span<const double> x) noexcept {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < lower[j]) return false;
    if (x[j] >= upper[j] && !(upper[j] == 1.0 && x[j] == 1.0)) return false;
  }
  return true;
}

Cell::Cell(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.empty()) {
    throw std::invalid_argument("Cell: lower and upper must have the same nonzero length");
  }
  for (std::size_t j = 0; j < lower_.size(); ++j) {
    if (!(lower_[j] >= 0.0 && upper_[j] <= 1.0 && lower_[j] < upper_[j])) {
      throw std::invalid_argument("Cell: need 0 <= lower[j] < upper[j] <= 1 in every dimension");
    }
  }
}

Cell Cell::unit(std::size_t dim) {
  return Cell(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

double Cell::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < dim(); ++j) v *= side(j);
  return v;
}

double Cell::linear_dimension() const {
  double s = 0.0;
  for (std::size_t j = 0; j < dim(); ++j) s += side(j);
  return s;
}

std::size_t MondrianTree::locate(std::span<const double> x) const {
  std::size_t k = 0;
  while (!nodes_[k].is_leaf()) {
    const TreeNode& n = nodes_[k];
    k = static_cast<std::size_t>(x[n.split_dim] < n.split_loc ? n.left : n.right);
  }
  return static_cast<std::size_t>(nodes_[k].leaf);
}

Cell MondrianTree::leaf_cell(std::size_t leaf) const {
  auto lo = leaf_lower(leaf);
  auto hi = leaf_upper(leaf);
  return Cell({lo.begin(), lo.end()}, {hi.begin(), hi.end()});
}

MondrianTree sample_tree(double lifetime, std::size_t dim, RngStream& rng, std::size_t max_nodes) {
  if (dim == 0) throw std::invalid_argument("sample_tree: dimension must be at least 1");
  if (!(lifetime >= 0.0) || !std::isfinite(lifetime)) {
    throw std::invalid_argument("sample_tree: lifetime must be finite and nonnegative");
  }

  MondrianTree tree(lifetime, dim);
  // Boxes of all nodes, 2*dim doubles each; only leaf boxes are kept.
  std::vector<double> boxes;
  std::vector<std::size_t> stack;
  std::vector<double> box(2 * dim);

  auto add_node = [&](std::span<const double> b, double time) {
    if (tree.nodes_.size() >= max_nodes) {
      throw std::runtime_error("sample_tree: exceeded " + std::to_string(max_nodes) +
                               " nodes (lifetime=" + std::to_string(lifetime) +
                               ", dim=" + std::to_string(dim) + "); lifetime is too large");
    }
    TreeNode node;
    node.time = time;
    tree.nodes_.push_back(node);
    boxes.insert(boxes.end(), b.begin(), b.end());
    return tree.nodes_.size() - 1;
  };

  std::fill(box.begin(), box.begin() + dim, 0.0);
  std::fill(box.begin() + dim, box.end(), 1.0);
  stack.push_back(add_node(box, 0.0));

  while (!stack.empty()) {
    std::size_t k = stack.back();
    stack.pop_back();
    std::copy(boxes.begin() + 2 * dim * k, boxes.begin() + 2 * dim * (k + 1), box.begin());
    const double born = tree.nodes_[k].time;

    double linear = 0.0;
    for (std::size_t j = 0; j < dim; ++j) linear += box[dim + j] - box[j];
    const double split_time = born + rng.exponential(linear);

    if (split_time > lifetime) {
      TreeNode& leaf = tree.nodes_[k];
      leaf.leaf = static_cast<std::int32_t>(tree.leaf_time_.size());
      tree.leaf_time_.push_back(born);
      tree.leaf_bounds_.insert(tree.leaf_bounds_.end(), box.begin(), box.end());
      continue;
    }

    // Split dimension with probability proportional to side length.
    double pick = rng.uniform_open() * linear;
    std::size_t split_dim = dim - 1;
    for (std::size_t j = 0; j < dim; ++j) {
      double side = box[dim + j] - box[j];
      if (pick < side) {
        split_dim = j;
        break;
      }
      pick -= side;
    }
    const double lo = box[split_dim];
    const double hi = box[dim + split_dim];
    double loc = lo + rng.uniform_open() * (hi - lo);
    if (!(loc > lo && loc < hi)) loc = 0.5 * (lo + hi);

    std::vector<double> child = box;
    child[dim + split_dim] = loc;
    std::size_t left = add_node(child, split_time);
    child[dim + split_dim] = hi;
    child[split_dim] = loc;
    std::size_t right = add_node(child, split_time);

    TreeNode& node = tree.nodes_[k];
    node.split_dim = static_cast<std::int32_t>(split_dim);
    node.split_loc = loc;
    node.time = split_time;
    node.left = static_cast<std::int32_t>(left);
    node.right = static_cast<std::int32_t>(right);
    stack.push_back(right);
    stack.push_back(left);
  }
  return tree;
}

MondrianTree MondrianTree::from_nodes(double lifetime, std::size_t dim, std::vector<TreeNode> nodes) {
  if (dim == 0 || nodes.empty()) throw std::invalid_argument("MondrianTree: empty tree");
  MondrianTree tree(lifetime, dim);
  tree.nodes_ = std::move(nodes);
  const auto count = tree.nodes_.size();

  struct Frame {
    std::size_t node;
    std::vector<double> box;
    double parent_time;
  };
  std::vector<Frame> stack;
  std::vector<double> root(2 * dim, 0.0);
  std::fill(root.begin() + dim, root.end(), 1.0);
  stack.push_back({0, root, -1.0});
  std::vector<char> seen(count, 0);
  std::size_t leaves = 0;

  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    if (f.node >= count || seen[f.node]) throw std::invalid_argument("MondrianTree: malformed node table");
    seen[f.node] = 1;
    TreeNode& n = tree.nodes_[f.node];
    if (n.is_leaf()) {
      n.leaf = static_cast<std::int32_t>(leaves++);
      tree.leaf_time_.push_back(n.time);
      tree.leaf_bounds_.insert(tree.leaf_bounds_.end(), f.box.begin(), f.box.end());
      continue;
    }
    auto sd = static_cast<std::size_t>(n.split_dim);
    if (sd >= dim || n.time > lifetime || n.time <= f.parent_time ||
        !(n.split_loc > f.box[sd] && n.split_loc < f.box[dim + sd])) {
      throw std::invalid_argument("MondrianTree: node violates split invariants");
    }
    n.leaf = -1;
    std::vector<double> left = f.box, right = f.box;
    left[dim + sd] = n.split_loc;
    right[sd] = n.split_loc;
    stack.push_back({static_cast<std::size_t>(n.right), std::move(right), n.time});
    stack.push_back({static_cast<std::size_t>(n.left), std::move(left), n.time});
  }
  if (leaves * 2 - 1 != count) throw std::invalid_argument("MondrianTree: unreachable nodes");
  return tree;
}

Cell cell_containing(const MondrianTree& tree, std::span<const double> x) {
  require_in_unit_cube(x, tree.dim(), "cell_containing");
  return tree.leaf_cell(tree.locate(x));
}

std::size_t count_points_in(const Cell& cell, PointsView points) {
  if (points.rows() > 0 && points.dim != cell.dim()) {
    throw std::invalid_argument("count_points_in: dimension mismatch");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    if (cell.contains(points.row(i))) ++count;
  }
  return count;
}

}  // namespace mondrian
