#include "mondrian/forest.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "mondrian/parallel.hpp"

namespace mondrian {

Forest::Forest(std::shared_ptr<const TrainingSet> training, double lifetime,
               std::vector<MondrianTree> trees)
    : training_(std::move(training)), lifetime_(lifetime), trees_(std::move(trees)) {
  if (!training_) throw std::invalid_argument("Forest: missing training set");
  if (trees_.empty()) throw std::invalid_argument("Forest: need at least one tree");
  for (const auto& t : trees_) {
    if (t.lifetime() != lifetime_ || t.dim() != training_->dim()) {
      throw std::invalid_argument("Forest: trees must share the forest lifetime and dimension");
    }
  }
}

Forest fit_forest(std::shared_ptr<const TrainingSet> training, double lifetime, std::size_t size,
                  const RngStream& rng, unsigned threads) {
  if (!training || training->size() == 0) throw std::invalid_argument("fit_forest: empty training set");
  if (size == 0) throw std::invalid_argument("fit_forest: forest size must be at least 1");
  if (!(lifetime > 0.0) || !std::isfinite(lifetime)) {
    throw std::invalid_argument("fit_forest: lifetime must be positive and finite");
  }
  const std::size_t dim = training->dim();
  std::vector<std::optional<MondrianTree>> slots(size);
  parallel_for(size, threads, [&](std::size_t b) {
    RngStream stream = rng.substream({rng.id().replicate, rng.id().level, b});
    slots[b] = sample_tree(lifetime, dim, stream);
  });
  std::vector<MondrianTree> trees;
  trees.reserve(size);
  for (auto& s : slots) trees.push_back(std::move(*s));
  return Forest(std::move(training), lifetime, std::move(trees));
}

std::vector<CellSums> cell_statistics(const Forest& forest, std::span<const double> x) {
  require_in_unit_cube(x, forest.dim(), "predict");
  std::vector<CellSums> out;
  out.reserve(forest.size());
  for (const auto& tree : forest.trees()) {
    std::size_t leaf = tree.locate(x);
    out.push_back(forest.training().cell_sums(tree.leaf_lower(leaf), tree.leaf_upper(leaf)));
  }
  return out;
}

double predict(const Forest& forest, std::span<const double> x) {
  double total = 0.0;
  for (const CellSums& s : cell_statistics(forest, x)) {
    if (s.count > 0) total += s.mean();
  }
  return total / static_cast<double>(forest.size());
}

void accumulate_tree_weights(const Forest& forest, std::span<const double> x, double scale,
                             std::span<double> weights) {
  require_in_unit_cube(x, forest.dim(), "tree_weights");
  const TrainingSet& data = forest.training();
  if (weights.size() != data.size()) throw std::invalid_argument("tree_weights: weight length mismatch");
  const double per_tree = scale / static_cast<double>(forest.size());
  std::vector<std::size_t> members;
  for (const auto& tree : forest.trees()) {
    std::size_t leaf = tree.locate(x);
    members.clear();
    data.for_each_in_cell(tree.leaf_lower(leaf), tree.leaf_upper(leaf),
                          [&](std::size_t i) { members.push_back(i); });
    if (members.empty()) continue;
    const double w = per_tree / static_cast<double>(members.size());
    for (std::size_t i : members) weights[i] += w;
  }
}

std::vector<double> tree_weights(const Forest& forest, std::span<const double> x) {
  std::vector<double> w(forest.training().size(), 0.0);
  accumulate_tree_weights(forest, x, 1.0, w);
  return w;
}

LeafStatistics leaf_statistics(const MondrianTree& tree, const TrainingSet& training) {
  LeafStatistics stats;
  stats.count.assign(tree.leaf_count(), 0);
  stats.sum.assign(tree.leaf_count(), 0.0);
  auto y = training.y();
  // Accumulate in sorted order so the sums do not depend on row order.
  for (std::size_t i : training.order()) {
    std::size_t leaf = tree.locate(training.row(i));
    ++stats.count[leaf];
    stats.sum[leaf] += y[i];
  }
  return stats;
}

std::vector<double> predict_many(const Forest& forest, PointsView queries, unsigned threads) {
  if (queries.rows() > 0 && queries.dim != forest.dim()) {
    throw std::invalid_argument("predict_many: dimension mismatch");
  }
  for (std::size_t q = 0; q < queries.rows(); ++q) require_in_unit_cube(queries.row(q), forest.dim(), "predict");

  const std::size_t m = queries.rows();
  std::vector<std::vector<double>> per_tree(forest.size());
  parallel_for(forest.size(), threads, [&](std::size_t b) {
    const MondrianTree& tree = forest.trees()[b];
    LeafStatistics stats = leaf_statistics(tree, forest.training());
    auto& out = per_tree[b];
    out.assign(m, 0.0);
    for (std::size_t q = 0; q < m; ++q) {
      std::size_t leaf = tree.locate(queries.row(q));
      if (stats.count[leaf] > 0) out[q] = stats.sum[leaf] / static_cast<double>(stats.count[leaf]);
    }
  });
  std::vector<double> result(m, 0.0);
  for (const auto& tree_values : per_tree) {
    for (std::size_t q = 0; q < m; ++q) result[q] += tree_values[q];
  }
  for (double& v : result) v /= static_cast<double>(forest.size());
  return result;
}

}  // namespace mondrian
