#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mondrian/diagnostics.hpp"
#include "mondrian/inference.hpp"
#include "mondrian/theory.hpp"
#include "support.hpp"

using namespace mondrian;

namespace {

MondrianTree leaf_tree() { return MondrianTree::from_nodes(1.0, 1, std::vector<TreeNode>(1)); }

MondrianTree split_tree(double loc) {
  std::vector<TreeNode> nodes(3);
  nodes[0] = {0, loc, 0.5, 1, 2, -1};
  nodes[1].time = nodes[2].time = 0.5;
  return MondrianTree::from_nodes(1.0, 1, nodes);
}

DebiasedForest single_level(std::shared_ptr<const TrainingSet> data, std::vector<MondrianTree> trees) {
  return DebiasedForest({Forest(std::move(data), 1.0, std::move(trees))}, default_debias_config(0), 1.0);
}

double bump(std::span<const double> x) { return std::exp(-x[0]); }

}  // namespace

TEST_CASE("normal quantiles against 50-digit values") {
  CHECK(std::fabs(normal_quantile(0.975) - 1.9599639845400542355) < 1e-12);
  CHECK(std::fabs(normal_quantile(0.995) - 2.5758293035489007610) < 1e-12);
  CHECK(std::fabs(normal_quantile(0.95) - 1.6448536269514727149) < 1e-12);
  CHECK(std::fabs(normal_quantile(0.5)) < 1e-15);
  CHECK(normal_quantile(0.025) == doctest::Approx(-normal_quantile(0.975)).epsilon(1e-14));
  CHECK(std::fabs(normal_quantile(1e-10) + 6.3613409024040557) < 1e-9);
  for (double p : {0.0, 1.0, -0.5, 2.0, std::nan("")}) CHECK_THROWS_AS(normal_quantile(p), std::invalid_argument);
  for (double p : {0.01, 0.2, 0.6, 0.999}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("sigma2_hat on a hand-built forest") {
  auto data = testing::share(TrainingSet({0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}, 1));
  auto f = single_level(data, {leaf_tree()});
  const double x[1] = {0.6};
  CHECK(sigma2_hat(f, x) == doctest::Approx(2.0 / 3.0));
  // weights are 1/3 each: Sigma = (2/3) * (n / lambda) * 3 / 9
  CHECK(Sigma_hat_debiased(f, x) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("empty cells give zero variance estimates") {
  auto data = testing::share(TrainingSet({0.1, 0.2}, {1.0, 5.0}, 1));
  auto f = single_level(data, {split_tree(0.5), split_tree(0.4)});
  const double x[1] = {0.75};
  CHECK(sigma2_hat(f, x) == 0.0);
  CHECK(Sigma_hat_debiased(f, x) == 0.0);
  auto ci = confidence_interval(f, x, 0.05);
  CHECK(ci.ci_lower == ci.ci_upper);
}

TEST_CASE("J = 0 variance estimate is sigma2_hat times the squared weights") {
  auto train = testing::uniform_data(400, 2, bump, 0.5, 1);
  auto data = testing::share(train);
  DebiasedForest f = fit_debiased(data, 4.0, 12, default_debias_config(0), RngStream(2, {}));
  const double x[2] = {0.4, 0.55};
  auto w = tree_weights(f.level(0), x);
  double w2 = 0.0;
  for (double v : w) w2 += v * v;
  CHECK(Sigma_hat_debiased(f, x) == doctest::Approx(sigma2_hat(f, x) * 400.0 / 16.0 * w2).epsilon(1e-12));
}

TEST_CASE("confidence interval invariants") {
  auto train = testing::uniform_data(1000, 1, bump, 0.4, 3);
  auto data = testing::share(train);
  DebiasedForest f = fit_debiased(data, 6.0, 30, default_debias_config(1), RngStream(4, {}));
  const double x[1] = {0.37};
  auto ci = confidence_interval(f, x, 0.05);
  CHECK(ci.estimate == doctest::Approx(predict_debiased(f, x)).epsilon(1e-14));
  CHECK(ci.ci_lower < ci.estimate);
  CHECK(ci.estimate < ci.ci_upper);
  CHECK(ci.estimate - ci.ci_lower == doctest::Approx(ci.ci_upper - ci.estimate).epsilon(1e-12));
  CHECK(ci.half_width() ==
        doctest::Approx(normal_quantile(0.975) * std::sqrt(6.0 / 1000.0) * std::sqrt(ci.Sigma_hat)).epsilon(1e-12));
  CHECK(ci.sigma2_hat == doctest::Approx(sigma2_hat(f, x)));
  CHECK(ci.lambda == 6.0);
  CHECK(ci.B == 30);
  CHECK(ci.J == 1);

  auto narrow = confidence_interval(f, x, 0.2), wide = confidence_interval(f, x, 0.01);
  CHECK(narrow.half_width() < ci.half_width());
  CHECK(ci.half_width() < wide.half_width());
  CHECK_THROWS_AS(confidence_interval(f, x, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(confidence_interval(f, x, 1.0), std::invalid_argument);

  // y -> c y + s moves the estimate affinely and scales the width by |c|
  std::vector<double> y2(train.y().begin(), train.y().end());
  for (double& v : y2) v = -3.0 * v + 7.0;
  std::vector<Forest> levels;
  auto moved = testing::share(train.with_responses(y2));
  for (const Forest& l : f.levels()) levels.emplace_back(moved, l.lifetime(), std::vector<MondrianTree>(l.trees().begin(), l.trees().end()));
  DebiasedForest g(levels, f.config(), f.base_lifetime());
  auto ci2 = confidence_interval(g, x, 0.05);
  CHECK(ci2.estimate == doctest::Approx(-3.0 * ci.estimate + 7.0).epsilon(1e-9));
  CHECK(ci2.half_width() == doctest::Approx(3.0 * ci.half_width()).epsilon(1e-9));
}

TEST_CASE("boundary query points warn") {
  auto data = testing::share(testing::uniform_data(100, 2, bump, 0.4, 5));
  DebiasedForest f = fit_debiased(data, 2.0, 5, default_debias_config(0), RngStream(6, {}));
  {
    ScopedWarningCapture capture;
    const double inside[2] = {0.5, 0.5};
    confidence_interval(f, inside, 0.05);
    CHECK(capture.count() == 0);
  }
  ScopedWarningCapture capture;
  const double edge[2] = {0.5, 1.0};
  confidence_interval(f, edge, 0.05);
  CHECK(capture.count() == 1);
  CHECK(capture.text().find("boundary") != std::string::npos);
}

TEST_CASE("variance estimators are consistent") {
  // sigma^2 = 1, f = 1, J = 0, d = 1: Sigma -> (4 - 4 log 2) / 3
  const std::size_t reps = 20;
  std::vector<double> s2, big;
  for (std::size_t r = 0; r < reps; ++r) {
    RngStream rng(30, {r, kDataLevel, 0});
    std::vector<double> xs(5000), ys(5000);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      xs[i] = rng.uniform_open();
      ys[i] = std::sin(xs[i]) + rng.normal();
    }
    DebiasedForest f = fit_debiased(testing::share(TrainingSet(xs, ys, 1)), 10.0, 200, default_debias_config(0),
                                    RngStream(31, {r, 0, 0}));
    const double x[1] = {0.5};
    s2.push_back(sigma2_hat(f, x));
    big.push_back(Sigma_hat_debiased(f, x));
  }
  CHECK(testing::mean(s2) == doctest::Approx(1.0).epsilon(0.10));
  CHECK(testing::mean(big) == doctest::Approx(0.40913709258673958744).epsilon(0.15));
}
