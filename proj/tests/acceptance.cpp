// Acceptance checks. Usage: acceptance <criterion 1..10 | all> [--threads N]
// Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mondrian/debias.hpp"
#include "mondrian/harness/dgp.hpp"
#include "mondrian/harness/experiment.hpp"
#include "mondrian/mondrian_tree.hpp"
#include "mondrian/parallel.hpp"
#include "mondrian/theory.hpp"
#include "mondrian/tuning.hpp"
#include "support.hpp"

using namespace mondrian;
using namespace mondrian::harness;

namespace {

// Fixed before any criterion was run.
constexpr std::uint64_t kSeed = 20261015;

// (4 - 4 log 2) / 3 and its square, 50 digits (tests/oracles/constants.py).
constexpr long double kV0 = 0.40913709258673958744369050472243124256599982085299L;
constexpr long double kV0sq = 0.16739316053033032148024583717388770769698254733162L;
// Analytic AIMSE lifetime for sin(pi x), n = 5000, sigma^2 = 1, J = 0.
constexpr double kLambdaAimseSin = 14.286772493460406402;

unsigned g_threads = 1;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Dgp sin_dgp(std::size_t n) {
  Dgp d;
  d.dim = 1;
  d.n = n;
  d.seed = kSeed;
  d.mean = MeanFunction::sin_pi_prod;
  d.sigma = 1.0;
  return d;
}

// 1. Vandermonde identities over random admissible sequences.
Outcome debias_identities() {
  RngStream rng(kSeed, {1, kAuxLevel, 0});
  long double worst = 0.0L;
  for (int k = 0; k < 200; ++k) {
    const std::size_t J = 1 + static_cast<std::size_t>(rng.uniform_open() * 5.0);
    const double gamma = 0.01 + 0.49 * rng.uniform_open();
    const auto a = k % 2 == 0 ? geometric_scales(J, gamma) : arithmetic_scales(J, gamma);
    const DebiasConfig c = debias_coefficients(J, a);
    for (std::size_t s = 0; s <= J; ++s) {
      long double m = 0.0L;
      for (std::size_t r = 0; r <= J; ++r)
        m += c.coefficients[r] * std::pow(static_cast<long double>(a[r]), -2.0L * static_cast<long double>(s));
      worst = std::max(worst, std::fabs(m - (s == 0 ? 1.0L : 0.0L)));
    }
  }
  return {worst < 1e-10L, fmt("max residual %.3Le over 200 sequences (tol 1e-10)", worst)};
}

// 2. Limiting variance constant.
Outcome variance_constant_check() {
  LocalModel m;
  const long double v1 = limiting_variance(default_debias_config(0), m);
  m.dim = 2;
  const long double v2 = limiting_variance(default_debias_config(0), m);
  const long double e1 = std::fabs(v1 - kV0), e2 = std::fabs(v2 - kV0sq);
  return {e1 < 1e-12L && e2 < 1e-12L, fmt("d=1 %.17Lf (err %.2Le), d=2 err %.2Le (tol 1e-12)", v1, e1, e2)};
}

// 3. Cell-shape law.
Outcome cell_shape() {
  const double lambda = 20.0;
  const double x[1] = {0.5};
  std::vector<double> tree(10000), oracle(1000000);
  parallel_for(tree.size(), g_threads, [&](std::size_t b) {
    RngStream s(kSeed, {3, 0, b});
    tree[b] = cell_containing(sample_tree(lambda, 1, s), x).side(0);
  });
  RngStream o(kSeed, {3, kAuxLevel, 0});
  for (double& v : oracle) v = cell_shape_sampler(x, lambda, o)[0];
  const double ks = testing::ks_distance(tree, oracle);
  return {ks < 0.02, fmt("KS distance %.4f (tol 0.02)", ks)};
}

// 4. Mean leaf count in one dimension is 1 + lambda.
Outcome leaf_count() {
  std::vector<double> leaves(10000);
  parallel_for(leaves.size(), g_threads, [&](std::size_t b) {
    RngStream s(kSeed, {4, 0, b});
    leaves[b] = static_cast<double>(sample_tree(5.0, 1, s).leaf_count());
  });
  const double m = testing::mean(leaves);
  return {std::fabs(m - 6.0) <= 0.02 * 6.0, fmt("mean leaf count %.4f (target 6 +/- 2%%)", m)};
}

// 5. Bias decay.
Outcome bias_decay() {
  ExperimentSpec q;
  q.kind = ExperimentKind::bias_decay;
  q.dgp.dim = 1;
  q.dgp.n = 20000;
  q.dgp.seed = kSeed;
  q.dgp.mean = MeanFunction::quadratic;  // x^2
  q.dgp.mean_center = 0.0;
  q.dgp.sigma = 0.0;
  q.dgp.allow_zero_noise = true;
  q.queries = {0.5};
  q.lambda_grid = {10, 20, 40, 80};
  q.B = 500;
  q.J = 0;
  q.replications = 600;
  BiasDecayResult rq = run_bias_decay(q, g_threads);
  const double b10 = std::fabs(rq.rows[0].bias);
  const bool quad_ok = std::fabs(b10 - 0.01) <= 0.25 * 0.01 && std::fabs(rq.slope + 2.0) <= 0.5;

  ExperimentSpec c = q;
  c.dgp.mean = MeanFunction::quartic;  // (x - 1/2)^4
  c.dgp.mean_center = 0.5;
  c.lambda_grid = {8, 16, 32};
  c.J = 1;
  c.replications = 4000;
  BiasDecayResult rc = run_bias_decay(c, g_threads);
  bool smaller = true;
  std::string levels;
  for (const auto& row : rc.rows) {
    smaller = smaller && std::fabs(row.bias) < std::fabs(row.base_bias);
    levels += fmt(" lambda=%g: J1 %.3e+/-%.1e J0 %.3e+/-%.1e;", row.lambda, row.bias, row.std_error, row.base_bias,
                  row.base_std_error);
  }
  const bool quartic_ok = std::fabs(rc.slope + 4.0) <= 0.7 && smaller;
  return {quad_ok && quartic_ok,
          fmt("x^2 J=0: |bias(10)| %.5f (0.01 +/- 25%%), slope %.3f (-2 +/- 0.5) [%s]; ", b10, rq.slope,
              quad_ok ? "ok" : "off") +
              fmt("(x-1/2)^4 J=1: slope %.3f (-4 +/- 0.7), |J1| < |J0| at every lambda: %s [%s];", rc.slope,
                  smaller ? "yes" : "no", quartic_ok ? "ok" : "off") +
              levels};
}

// 6. Variance calibration.
Outcome variance_calibration() {
  ExperimentSpec s;
  s.dgp = sin_dgp(5000);
  s.queries = {0.5};
  s.lambda_rule = LambdaRule::rate;  // ceil(n^{1/5})
  s.lambda_scale = 1.0;
  s.lambda_ceil = true;
  s.B = 0;  // ceil(sqrt(n))
  s.J = 0;
  s.replications = 200;
  CoverageResult r = run_coverage(s, g_threads);
  const auto& row = r.rows.front();
  const double target = static_cast<double>(kV0);
  const bool sigma_ok = std::fabs(row.mean_Sigma_hat - target) <= 0.15 * target;
  const bool var_ok = std::fabs(row.scaled_estimate_variance - target) <= 0.20 * target;
  return {sigma_ok && var_ok,
          fmt("lambda=%g B=%zu: mean Sigma_hat %.4f (0.40914 +/- 15%%) [%s], scaled variance %.4f "
              "(0.40914 +/- 20%%) [%s]",
              row.mean_lambda, r.B, row.mean_Sigma_hat, sigma_ok ? "ok" : "off", row.scaled_estimate_variance,
              var_ok ? "ok" : "off")};
}

// 7. Coverage with robust bias correction.
Outcome coverage() {
  ExperimentSpec s;
  s.dgp = sin_dgp(5000);
  s.queries = {0.5};
  s.lambda_rule = LambdaRule::aimse_rbc;
  s.B = 0;
  s.J = 1;
  s.alphas = {0.05};
  s.replications = 500;
  CoverageResult r = run_coverage(s, g_threads);
  const auto& row = r.rows.front();
  return {row.coverage >= 0.91 && row.coverage <= 0.985,
          fmt("coverage %.3f in [0.91, 0.985] (mean lambda %.3f, B=%zu, mean Sigma_hat %.3f, scaled variance %.3f)",
              row.coverage, row.mean_lambda, r.B, row.mean_Sigma_hat, row.scaled_estimate_variance)};
}

// 8. AIMSE plug-in against the analytic lifetime.
Outcome aimse_sanity() {
  TrainingSet data = generate(sin_dgp(5000), 0);
  const double l = lambda_aimse(data, default_debias_config(0)).lambda_hat;
  const double ratio = l / kLambdaAimseSin;
  return {ratio >= 0.5 && ratio <= 2.0, fmt("lambda_hat %.4f vs analytic %.4f (ratio %.3f, within factor 2)", l,
                                            kLambdaAimseSin, ratio)};
}

// 9. Closed-form LOOCV against refitting without each point.
Outcome loocv_identity() {
  RngStream rng(kSeed, {9, kAuxLevel, 0});
  int accepted = 0, attempts = 0;
  double worst = 0.0;
  while (accepted < 50 && attempts < 100000) {
    ++attempts;
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_open() * 5.0);
    const std::size_t B = 1 + static_cast<std::size_t>(rng.uniform_open() * 3.0);
    const std::size_t J = static_cast<std::size_t>(rng.uniform_open() * 3.0);
    const double lambda = 0.2 + 2.8 * rng.uniform_open();
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = rng.uniform_open();
      ys[i] = rng.normal();
    }
    TrainingSet train(xs, ys, 1);
    auto data = testing::share(train);
    const DebiasConfig c = default_debias_config(J);
    const RngStream forest_rng(kSeed, {9, 0, static_cast<std::uint64_t>(attempts)});
    DebiasedForest forest = fit_debiased(data, lambda, B, c, forest_rng);

    bool dense = true;
    for (const Forest& lvl : forest.levels())
      for (std::size_t i = 0; i < n && dense; ++i)
        for (const auto& s : cell_statistics(lvl, train.row(i))) dense = dense && s.count >= 2;
    if (!dense) continue;

    double brute = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> lx, ly;
      for (std::size_t k = 0; k < n; ++k)
        if (k != i) {
          lx.push_back(xs[k]);
          ly.push_back(ys[k]);
        }
      auto loo = testing::share(TrainingSet(lx, ly, 1));
      std::vector<Forest> levels;
      for (const Forest& lvl : forest.levels())
        levels.emplace_back(loo, lvl.lifetime(), std::vector<MondrianTree>(lvl.trees().begin(), lvl.trees().end()));
      DebiasedForest refit(levels, c, lambda);
      const double e = ys[i] - predict_debiased(refit, train.row(i));
      brute += e * e;
    }
    brute /= static_cast<double>(n);
    const double closed = loocv_score(data, lambda, c, B, forest_rng);
    worst = std::max(worst, std::fabs(closed - brute));
    ++accepted;
  }
  return {accepted == 50 && worst < 1e-10,
          fmt("%d instances (%d drawn), max |closed - brute| %.3e (tol 1e-10)", accepted, attempts, worst)};
}

// 10. RMSE decreases along the rate-optimal lifetime sequence.
Outcome rmse_monotone() {
  std::vector<double> rmse;
  std::string detail;
  for (std::size_t n : {1000u, 4000u, 16000u}) {
    ExperimentSpec s;
    s.dgp = sin_dgp(n);
    s.queries = {0.5};
    s.lambda_rule = LambdaRule::rate;  // n^{1/(4J+4+d)}
    s.lambda_scale = 1.0;
    s.B = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    s.J = 1;
    s.replications = 300;
    CoverageResult r = run_coverage(s, g_threads);
    rmse.push_back(r.rows.front().rmse);
    detail += fmt(" n=%zu lambda=%.3f RMSE %.4f;", n, r.rows.front().mean_lambda, r.rows.front().rmse);
  }
  return {rmse[0] > rmse[1] && rmse[1] > rmse[2], "strictly decreasing RMSE (property check):" + detail};
}

const std::map<int, std::pair<const char*, std::function<Outcome()>>> kCriteria{
    {1, {"debias coefficient identities", debias_identities}},
    {2, {"limiting variance constant", variance_constant_check}},
    {3, {"cell-shape law", cell_shape}},
    {4, {"one-dimensional split intensity", leaf_count}},
    {5, {"bias decay", bias_decay}},
    {6, {"variance calibration", variance_calibration}},
    {7, {"CI coverage", coverage}},
    {8, {"AIMSE plug-in sanity", aimse_sanity}},
    {9, {"LOOCV identity", loocv_identity}},
    {10, {"RMSE monotone in n", rmse_monotone}},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("acceptance checks");
  std::string which = "all";
  g_threads = default_thread_count();
  app.add_option("criterion", which, "1..10 or all");
  app.add_option("--threads", g_threads, "worker threads");
  CLI11_PARSE(app, argc, argv);

  std::vector<int> ids;
  if (which == "all") {
    for (const auto& [id, _] : kCriteria) ids.push_back(id);
  } else {
    const int id = std::atoi(which.c_str());
    if (!kCriteria.count(id)) {
      std::fprintf(stderr, "unknown criterion '%s'\n", which.c_str());
      return 2;
    }
    ids.push_back(id);
  }

  int failures = 0;
  for (int id : ids) {
    const auto& [name, run] = kCriteria.at(id);
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
