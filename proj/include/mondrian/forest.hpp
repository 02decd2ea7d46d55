#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mondrian/mondrian_tree.hpp"
#include "mondrian/rng.hpp"
#include "mondrian/training_set.hpp"

namespace mondrian {

/// B independent Mondrian trees at a common lifetime over a shared training set.
class Forest {
 public:
  Forest(std::shared_ptr<const TrainingSet> training, double lifetime, std::vector<MondrianTree> trees);

  const TrainingSet& training() const { return *training_; }
  const std::shared_ptr<const TrainingSet>& training_ptr() const { return training_; }
  double lifetime() const { return lifetime_; }
  std::size_t size() const { return trees_.size(); }
  std::size_t dim() const { return training_->dim(); }
  std::span<const MondrianTree> trees() const { return trees_; }

 private:
  std::shared_ptr<const TrainingSet> training_;
  double lifetime_;
  std::vector<MondrianTree> trees_;
};

/// Samples `size` trees. Tree b uses the stream
/// (rng.master_seed(), {rng.id().replicate, rng.id().level, b}), so the result
/// does not depend on `threads` (0 = default thread count).
Forest fit_forest(std::shared_ptr<const TrainingSet> training, double lifetime, std::size_t size,
                  const RngStream& rng, unsigned threads = 1);

/// Count and response sums of the cell containing x in each tree.
std::vector<CellSums> cell_statistics(const Forest& forest, std::span<const double> x);

/// (1/B) sum_b mean of Y over T_b(x); a tree whose cell is empty contributes 0.
double predict(const Forest& forest, std::span<const double> x);

/// Linear-smoother weights w_i = (1/B) sum_b 1{X_i in T_b(x)} / N_b(x).
std::vector<double> tree_weights(const Forest& forest, std::span<const double> x);

/// Adds scale * tree_weights(forest, x) into `weights` (length n).
void accumulate_tree_weights(const Forest& forest, std::span<const double> x, double scale,
                             std::span<double> weights);

/// Per-leaf training counts and response sums of one tree.
struct LeafStatistics {
  std::vector<std::size_t> count;
  std::vector<double> sum;
};

LeafStatistics leaf_statistics(const MondrianTree& tree, const TrainingSet& training);

/// predict() at many points, one pass per tree over all queries.
std::vector<double> predict_many(const Forest& forest, PointsView queries, unsigned threads = 1);

}  // namespace mondrian
