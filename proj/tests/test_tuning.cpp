#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mondrian/diagnostics.hpp"
#include "mondrian/tuning.hpp"
#include "support.hpp"

using namespace mondrian;

namespace {

double sinpi(std::span<const double> x) { return std::sin(std::numbers::pi * x[0]); }

// Leave-one-out residual of row i by refitting on the other rows with the
// same trees; trees whose cell around X_i is left empty are skipped.
double brute_loocv(const TrainingSet& train, const DebiasedForest& forest) {
  const std::size_t n = train.size();
  double score = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      xs.insert(xs.end(), train.row(k).begin(), train.row(k).end());
      ys.push_back(train.y()[k]);
    }
    auto loo = testing::share(TrainingSet(xs, ys, train.dim()));
    double residual = 0.0;
    for (std::size_t r = 0; r < forest.levels().size(); ++r) {
      const Forest& lvl = forest.level(r);
      Forest refit(loo, lvl.lifetime(), std::vector<MondrianTree>(lvl.trees().begin(), lvl.trees().end()));
      double sum = 0.0;
      for (const CellSums& c : cell_statistics(refit, train.row(i)))
        if (c.count > 0) sum += train.y()[i] - c.mean();
      residual += forest.config().coefficient(r) * sum / static_cast<double>(lvl.size());
    }
    score += residual * residual;
  }
  return score / static_cast<double>(n);
}

}  // namespace

TEST_CASE("method names") {
  CHECK(parse_tune_method("aimse") == TuneMethod::aimse_plugin);
  CHECK(parse_tune_method("aimse_plugin") == TuneMethod::aimse_plugin);
  CHECK(parse_tune_method("gcv") == TuneMethod::gcv);
  CHECK(to_string(TuneMethod::loocv) == "loocv");
  CHECK_THROWS_AS(parse_tune_method("cv"), std::invalid_argument);
}

TEST_CASE("forest size rule") {
  CHECK(select_forest_size(100, 0) == 10);
  CHECK(select_forest_size(256, 1) == 16);
  CHECK(select_forest_size(1000, 2) == 178);
  CHECK(select_forest_size(101, 0) == 11);
  CHECK(select_forest_size(1, 3) == 1);
  CHECK_THROWS_AS(select_forest_size(0, 0), std::invalid_argument);
  for (std::size_t J = 0; J <= 3; ++J) {
    std::size_t prev = 0;
    for (std::size_t n = 1; n < 5000; n += 37) {
      const std::size_t b = select_forest_size(n, J);
      CHECK(b >= prev);
      prev = b;
    }
  }
}

TEST_CASE("additive polynomial fit recovers a polynomial") {
  auto train = testing::uniform_data(
      200, 2,
      [](std::span<const double> x) {
        const double c = x[0] - 0.5, e = x[1] - 0.5;
        return 1.0 + 2.0 * c + 3.0 * c * c * c - 5.0 * std::pow(e, 4);
      },
      0.0, 1);
  AdditivePolynomialFit fit(train, 4);
  CHECK(fit.intercept() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.coefficient(0, 1) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(fit.coefficient(0, 3) == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(std::fabs(fit.coefficient(0, 2)) < 1e-8);
  CHECK(fit.coefficient(1, 4) == doctest::Approx(-5.0).epsilon(1e-8));
  CHECK(fit.residual_sum_of_squares() < 1e-18);
  CHECK(fit.derivative(0, 3, 0.9) == doctest::Approx(18.0).epsilon(1e-7));
  CHECK(fit.derivative(0, 1, 0.7) == doctest::Approx(2.0 + 9.0 * 0.04).epsilon(1e-7));
  CHECK(fit.derivative(1, 4, 0.1) == doctest::Approx(-120.0).epsilon(1e-6));
  const double x[2] = {0.2, 0.6};
  CHECK(fit.value(x) == doctest::Approx(1.0 - 0.6 - 0.081 - 0.0005).epsilon(1e-9));
}

TEST_CASE("polynomial fit failures") {
  std::vector<double> same(50, 0.3), y(50);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<double>(i);
  CHECK_THROWS_AS(AdditivePolynomialFit(TrainingSet(same, y, 1), 4), std::runtime_error);
  auto small = testing::uniform_data(5, 1, sinpi, 0.1, 2);
  CHECK_THROWS_AS(AdditivePolynomialFit(small, 4), std::invalid_argument);
}

TEST_CASE("AIMSE lifetime formula") {
  const DebiasConfig c0 = default_debias_config(0);
  const double base = aimse_lifetime(1000.0, 1.0, 1, c0);
  CHECK(aimse_lifetime(2000.0, 1.0, 1, c0) == doctest::Approx(base * std::pow(2.0, 0.2)).epsilon(1e-12));
  CHECK(aimse_lifetime(1000.0, 2.0, 1, c0) == doctest::Approx(base * std::pow(2.0, -0.2)).epsilon(1e-12));
  // population value for sin(pi x), n = 5000, sigma^2 = 1
  const double pop = 5000.0 * std::pow(std::numbers::pi, 4) / 2.0;
  CHECK(aimse_lifetime(pop, 1.0, 1, c0) == doctest::Approx(14.286772493460406402).epsilon(1e-10));
  CHECK_THROWS_AS(aimse_lifetime(0.0, 1.0, 1, c0), std::runtime_error);
  CHECK_THROWS_AS(aimse_lifetime(1.0, 0.0, 1, c0), std::runtime_error);
  // J = 1 uses exponent 1 / (4J + 4 + d)
  const DebiasConfig c1 = default_debias_config(1);
  CHECK(aimse_lifetime(2000.0, 1.0, 1, c1) ==
        doctest::Approx(aimse_lifetime(1000.0, 1.0, 1, c1) * std::pow(2.0, 1.0 / 9.0)).epsilon(1e-12));
}

TEST_CASE("AIMSE plug-in") {
  auto train = testing::uniform_data(2000, 1, sinpi, 0.5, 3);
  TuneReport r = lambda_aimse(train, default_debias_config(0));
  CHECK(r.method == TuneMethod::aimse_plugin);
  CHECK(r.J_used == 0);
  CHECK(r.residual_variance == doctest::Approx(0.25).epsilon(0.1));
  // population value 15.69
  CHECK(r.lambda_hat > 15.694884552506762688 / 2.0);
  CHECK(r.lambda_hat < 15.694884552506762688 * 2.0);
  REQUIRE(r.derivative_means.size() == 1);
  // mean of mu'' = -pi^2 sin(pi x) over U(0,1) is -2 pi
  CHECK(r.derivative_means[0] == doctest::Approx(-2.0 * std::numbers::pi).epsilon(0.15));

  std::vector<double> shifted(train.y().begin(), train.y().end());
  for (double& v : shifted) v += 40.0;
  TuneReport s = lambda_aimse(train.with_responses(shifted), default_debias_config(0));
  CHECK(s.lambda_hat == doctest::Approx(r.lambda_hat).epsilon(1e-8));

  auto flat = testing::uniform_data(500, 1, [](auto) { return 0.0; }, 1.0, 4);
  TuneReport f = lambda_aimse(flat, default_debias_config(0));
  CHECK(f.lambda_hat > 0.0);
  CHECK(std::isfinite(f.lambda_hat));
}

TEST_CASE("LOOCV closed form") {
  // lambda -> 0: one cell holding both points, each left-out prediction is the other response
  auto two = testing::share(TrainingSet({0.2, 0.7}, {0.0, 2.0}, 1));
  CHECK(loocv_score(two, 1e-9, default_debias_config(0), 3, RngStream(1, {})) == doctest::Approx(4.0));

  auto constant = testing::share(TrainingSet({0.1, 0.3, 0.5, 0.9}, {3.0, 3.0, 3.0, 3.0}, 1));
  CHECK(loocv_score(constant, 4.0, default_debias_config(1), 10, RngStream(2, {})) < 1e-20);

  for (std::size_t J : {0u, 1u}) {
    for (std::size_t d : {1u, 2u}) {
      auto train = testing::uniform_data(25, d, sinpi, 0.5, 5 + d);
      auto data = testing::share(train);
      const DebiasConfig c = default_debias_config(J);
      const RngStream rng(7, {J, 0, 0});
      DebiasedForest forest = fit_debiased(data, 3.0, 6, c, rng);
      CHECK(loocv_score(data, 3.0, c, 6, rng) == doctest::Approx(brute_loocv(train, forest)).epsilon(1e-10));
      CHECK(loocv_score(data, 3.0, c, 6, rng, 3) == loocv_score(data, 3.0, c, 6, rng, 1));
    }
  }
}

TEST_CASE("GCV") {
  auto train = testing::uniform_data(300, 1, sinpi, 0.3, 8);
  auto data = testing::share(train);
  const DebiasConfig c = default_debias_config(1);
  const RngStream rng(9, {});
  DebiasedForest forest = fit_debiased(data, 12.0, 10, c, rng);
  const double load = (1.0 + 1.05) / 2.0 * 12.0 / 300.0;
  double expected = 0.0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double e = (train.y()[i] - predict_debiased(forest, train.row(i))) / (1.0 - load);
    expected += e * e;
  }
  CHECK(gcv_score(data, 12.0, c, 10, rng) == doctest::Approx(expected / 300.0).epsilon(1e-12));
  // abar lambda >= n
  CHECK_THROWS_AS(gcv_score(data, 300.0, c, 10, rng), std::invalid_argument);

  auto constant = testing::share(train.with_responses(std::vector<double>(300, -2.0)));
  CHECK(gcv_score(constant, 12.0, c, 10, rng) < 1e-20);
}

TEST_CASE("grid selection") {
  auto data = testing::share(testing::uniform_data(400, 1, sinpi, 0.4, 10));
  const DebiasConfig c = default_debias_config(0);
  const RngStream rng(11, {2, 0, 0});
  std::vector<double> grid{2.0, 5.0, 10.0, 20.0, 40.0};
  for (TuneMethod m : {TuneMethod::gcv, TuneMethod::loocv}) {
    TuneReport r = select_lifetime(data, m, c, 8, grid, rng, 2);
    REQUIRE(r.curve.size() == grid.size());
    CHECK(std::find(grid.begin(), grid.end(), r.lambda_hat) != grid.end());
    auto best = std::min_element(r.curve.begin(), r.curve.end(),
                                 [](const auto& a, const auto& b) { return a.score < b.score; });
    CHECK(best->lifetime == r.lambda_hat);
    TuneReport again = select_lifetime(data, m, c, 8, grid, rng, 1);
    for (std::size_t g = 0; g < grid.size(); ++g) CHECK(again.curve[g].score == r.curve[g].score);
    // the curve is smooth enough that the ends are not optimal here
    CHECK(r.lambda_hat > 2.0);
    CHECK(r.lambda_hat < 40.0);
  }
  CHECK_THROWS_AS(select_lifetime(data, TuneMethod::aimse_plugin, c, 8, grid, rng), std::invalid_argument);

  ScopedWarningCapture capture;
  TuneReport r = select_lifetime(data, TuneMethod::gcv, c, 4, {5.0, 500.0}, rng);
  CHECK(r.curve.size() == 1);
  CHECK(capture.count() == 1);
  CHECK_THROWS_AS(select_lifetime(data, TuneMethod::gcv, c, 4, {500.0}, rng), std::invalid_argument);

  auto grid20 = default_lifetime_grid(10000, 2);
  CHECK(grid20.size() == 20);
  CHECK(grid20.front() == doctest::Approx(std::pow(10000.0, 0.1)));
  CHECK(grid20.back() == doctest::Approx(100.0));
}

TEST_CASE("robust bias correction tuning") {
  auto train = testing::uniform_data(1500, 1, sinpi, 0.5, 12);
  InferenceTuning t = tune_for_inference(train, 1);
  CHECK(t.order == 1);
  CHECK(t.report.J_used == 0);
  CHECK(t.lifetime == lambda_aimse(train, default_debias_config(0)).lambda_hat);
  CHECK_THROWS_AS(tune_for_inference(train, 0), std::invalid_argument);
}
