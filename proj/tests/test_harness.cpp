#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "catoni/datagen.hpp"
#include "catoni/estimators.hpp"
#include "catoni/harness.hpp"

namespace {

using namespace catoni;

const double kInf = std::numeric_limits<double>::infinity();

MethodSpec method_of(Method m) {
  MethodSpec ms;
  ms.method = m;
  return ms;
}

ExperimentConfig mean_config(std::vector<Method> methods, const char* noise,
                             int reps, std::size_t n, std::uint64_t seed) {
  ExperimentConfig cfg;
  for (Method m : methods) cfg.methods.push_back(method_of(m));
  cfg.noise = NoiseSpec::parse(noise);
  cfg.reps = reps;
  cfg.n = n;
  cfg.base_seed = seed;
  return cfg;
}

Eigen::MatrixXd normal_design(std::size_t n, std::size_t d,
                              std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.normal();
    }
  }
  return X;
}

// Reference re-implementation of the documented fold protocol: deterministic
// Fisher-Yates order, contiguous position blocks as held-out folds,
// lexicographically sorted candidates, mean absolute held-out error.
std::vector<double> brute_force_cv(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    std::vector<std::vector<double>> candidates, int folds,
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&,
                                        const Eigen::VectorXd&,
                                        const std::vector<double>&)>& fit,
    std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(y.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.uniform_index(i + 1)]);
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<double> best;
  double best_loss = kInf;
  for (const auto& cand : candidates) {
    double total = 0.0;
    bool ok = true;
    for (int k = 0; k < folds && ok; ++k) {
      const std::size_t begin = n * static_cast<std::size_t>(k) /
                                static_cast<std::size_t>(folds);
      const std::size_t end = n * static_cast<std::size_t>(k + 1) /
                              static_cast<std::size_t>(folds);
      std::vector<bool> held(n, false);
      for (std::size_t p = begin; p < end; ++p) held[order[p]] = true;
      const std::size_t n_test = end - begin;
      Eigen::MatrixXd Xtr(n - n_test, X.cols());
      Eigen::VectorXd ytr(n - n_test);
      Eigen::Index row = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (held[i]) continue;
        Xtr.row(row) = X.row(static_cast<Eigen::Index>(i));
        ytr[row] = y[static_cast<Eigen::Index>(i)];
        ++row;
      }
      try {
        const Eigen::VectorXd coef = fit(Xtr, ytr, cand);
        for (std::size_t i = 0; i < n; ++i) {
          if (!held[i]) continue;
          total += std::fabs(y[static_cast<Eigen::Index>(i)] -
                             X.row(static_cast<Eigen::Index>(i)).dot(coef));
        }
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) continue;
    const double loss = total / static_cast<double>(n);
    if (loss < best_loss) {
      best_loss = loss;
      best = cand;
    }
  }
  REQUIRE(!best.empty());
  return best;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("method names round trip") {
  for (Method m : {Method::SampleMean, Method::CatoniKnownSigma,
                   Method::CatoniSampleSigma, Method::JointCatoniMean,
                   Method::Ols, Method::AdaptiveHuber, Method::JointCatoni,
                   Method::RidgeLs, Method::AdaptiveHuberRidge,
                   Method::JointCatoniRidge}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK(method_name(Method::JointCatoni) == "joint-catoni");
  CHECK(is_mean_method(Method::CatoniSampleSigma));
  CHECK_FALSE(is_mean_method(Method::RidgeLs));
  CHECK(is_ridge_method(Method::JointCatoniRidge));
  CHECK_FALSE(is_ridge_method(Method::JointCatoni));
  CHECK_THROWS_AS(parse_method("huber"), std::invalid_argument);
}

TEST_CASE("empirical quantile uses the upper order statistic") {
  const std::vector<double> v{50.0, 10.0, 40.0, 20.0, 30.0};
  CHECK(empirical_quantile(v, 0.5) == 30.0);
  CHECK(empirical_quantile(v, 1.0) == 50.0);
  CHECK(empirical_quantile(v, 0.2) == 10.0);
  CHECK(empirical_quantile(v, 0.21) == 20.0);
  // 0.9 * 10 must index the ninth order statistic, not drift to the tenth.
  std::vector<double> ten(10);
  std::iota(ten.begin(), ten.end(), 1.0);
  CHECK(empirical_quantile(ten, 0.9) == 9.0);
  CHECK_THROWS_AS(empirical_quantile(v, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(empirical_quantile(v, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(empirical_quantile(v, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), std::invalid_argument);
}

TEST_CASE("error metrics on hand data") {
  const MetricsBundle simple = compute_metrics({1.0, 2.0, 3.0}, 0.1);
  CHECK(simple.mae == 2.0);
  CHECK(simple.medae == 2.0);
  CHECK(simple.trimmed_mae == 2.0);  // floor(0.05 * 3) = 0 dropped
  CHECK(simple.trim_alpha == 0.1);

  const MetricsBundle heavy = compute_metrics({0.0, 0.0, 0.0, 100.0}, 0.5);
  CHECK(heavy.mae == 25.0);
  CHECK(heavy.medae == 0.0);
  CHECK(heavy.trimmed_mae == 0.0);  // one value trimmed from each end

  const MetricsBundle lone = compute_metrics({5.0}, 0.0);
  CHECK(lone.mae == 5.0);
  CHECK(lone.medae == 5.0);
  CHECK(lone.trimmed_mae == 5.0);

  // Untrimmed mean must be the plain MAE, bit for bit.
  const std::vector<double> errs =
      sample_noise(NoiseSpec::half_t(3.0), 31, 17);
  const MetricsBundle untrimmed = compute_metrics(errs, 0.0);
  CHECK(untrimmed.trimmed_mae == untrimmed.mae);
  CHECK(untrimmed.medae == empirical_quantile(errs, 0.5));

  CHECK_THROWS_AS(compute_metrics({}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(compute_metrics({1.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_metrics({1.0}, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(compute_metrics({1.0, kInf}, 0.1), std::invalid_argument);
}

TEST_CASE("replication errors replay the documented seeding") {
  ExperimentConfig cfg =
      mean_config({Method::SampleMean}, "t:2.1", 1, 50, 9001);
  const ReplicationErrors rr = run_replications(cfg);
  REQUIRE(rr.method_names == std::vector<std::string>{"sample-mean"});
  REQUIRE(rr.errors.size() == 1);
  REQUIRE(rr.errors[0].size() == 1);
  const std::vector<double> data = sample_noise(cfg.noise, cfg.n, 9001);
  CHECK(rr.errors[0][0] == std::fabs(sample_mean_var(data).first));
  CHECK(rr.failures == std::vector<int>{0});
}

TEST_CASE("replication results are identical for any thread count") {
  ExperimentConfig cfg = mean_config(
      {Method::SampleMean, Method::JointCatoniMean}, "t:2.1", 12, 50, 321);
  cfg.threads = 1;
  const ReplicationErrors one = run_replications(cfg);
  cfg.threads = 3;
  const ReplicationErrors three = run_replications(cfg);
  CHECK(one.method_names == three.method_names);
  CHECK(one.failures == three.failures);
  REQUIRE(one.errors.size() == three.errors.size());
  for (std::size_t m = 0; m < one.errors.size(); ++m) {
    CHECK(one.errors[m] == three.errors[m]);
  }
}

TEST_CASE("failed fits are counted and recorded as infinite error") {
  // Zero-sigma noise produces constant data: the sample mean is exact while
  // the sample-sigma Catoni estimator cannot run at all.
  ExperimentConfig cfg = mean_config(
      {Method::SampleMean, Method::CatoniSampleSigma}, "normal:0", 5, 10, 5);
  const ReplicationErrors rr = run_replications(cfg);
  CHECK(rr.failures == std::vector<int>{0, 5});
  for (double e : rr.errors[0]) CHECK(e == 0.0);
  for (double e : rr.errors[1]) CHECK(e == kInf);
}

TEST_CASE("experiment validation") {
  ExperimentConfig cfg = mean_config({Method::SampleMean}, "t:3", 5, 20, 1);

  ExperimentConfig no_methods = cfg;
  no_methods.methods.clear();
  CHECK_THROWS_AS(run_replications(no_methods), std::invalid_argument);

  ExperimentConfig mixed = cfg;
  mixed.methods.push_back(method_of(Method::Ols));
  CHECK_THROWS_AS(run_replications(mixed), std::invalid_argument);

  ExperimentConfig tiny = cfg;
  tiny.n = 3;
  CHECK_THROWS_AS(run_replications(tiny), std::invalid_argument);

  ExperimentConfig no_reps = cfg;
  no_reps.reps = 0;
  CHECK_THROWS_AS(run_replications(no_reps), std::invalid_argument);

  ExperimentConfig reg = cfg;
  reg.methods = {method_of(Method::Ols)};
  reg.d = 3;
  reg.theta_star = Eigen::VectorXd::Ones(2);  // length mismatch
  CHECK_THROWS_AS(run_replications(reg), std::invalid_argument);
  reg.theta_star = Eigen::VectorXd::Ones(3);
  reg.n = 3;  // n <= d
  CHECK_THROWS_AS(run_replications(reg), std::invalid_argument);

  ExperimentConfig bad_levels = cfg;
  bad_levels.quantile_levels = {0.9, 0.5};
  CHECK_THROWS_AS(run_quantile_experiment(bad_levels), std::invalid_argument);
  bad_levels.quantile_levels = {0.9, 1.5};
  CHECK_THROWS_AS(run_quantile_experiment(bad_levels), std::invalid_argument);
}

TEST_CASE("quantile report matches the replication errors") {
  ExperimentConfig cfg =
      mean_config({Method::SampleMean}, "t:2.1", 40, 30, 777);
  const QuantileReport report = run_quantile_experiment(cfg);
  const ReplicationErrors rr = run_replications(cfg);

  // Default ladder: 0.90 step 0.005 up to exactly 1.0.
  REQUIRE(report.rows.size() == 21);
  CHECK(report.rows.front().level == 0.90);
  CHECK(report.rows.back().level == 1.0);
  double prev = -1.0;
  for (const auto& row : report.rows) {
    CHECK(row.method == "sample-mean");
    CHECK(row.error >= prev);
    prev = row.error;
    CHECK(row.error == empirical_quantile(rr.errors[0], row.level));
  }
  const std::vector<double> sorted_errors = [&] {
    std::vector<double> v = rr.errors[0];
    std::sort(v.begin(), v.end());
    return v;
  }();
  CHECK(report.rows.back().error == sorted_errors.back());

  // Metadata carries the resolved protocol but never the thread count.
  const auto& md = report.metadata;
  CHECK(md.at("rng") == std::string(kRngVersion));
  CHECK(md.at("methods") == "sample-mean");
  CHECK(md.at("noise") == "t:2.1");
  CHECK(md.at("failures_sample-mean") == "0");
  CHECK(md.count("mean_error_sample-mean") == 1);
  CHECK(md.count("threads") == 0);
  CHECK(md.count("psi1") == 0);  // no joint method configured

  ExperimentConfig joint = mean_config(
      {Method::JointCatoniMean}, "t:2.1", 5, 30, 778);
  joint.quantile_levels = {0.5, 1.0};
  const QuantileReport jr = run_quantile_experiment(joint);
  REQUIRE(jr.rows.size() == 2);
  CHECK(jr.rows[0].level == 0.5);
  CHECK(jr.rows[1].level == 1.0);
  CHECK(jr.metadata.at("psi1") == "wide");
  CHECK(jr.metadata.at("psi2") == "wide");
}

TEST_CASE("k-fold selection equals a brute-force re-scoring") {
  const std::size_t n = 24;
  const Eigen::MatrixXd X = normal_design(n, 2, 1001);
  Eigen::VectorXd theta(2);
  theta << 1.0, -1.0;
  Rng rng(1002);
  Eigen::VectorXd y = X * theta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.student_t(3.0);

  const auto fit = [](const Eigen::MatrixXd& Xtr, const Eigen::VectorXd& ytr,
                      const std::vector<double>& c) {
    return ridge_ls(Xtr, ytr, c[0]);
  };
  const std::vector<std::vector<double>> candidates = {
      {1e-3}, {1e-1}, {10.0}};
  const std::vector<double> chosen =
      kfold_cv_select(X, y, candidates, 3, fit, 42);
  CHECK(chosen == brute_force_cv(X, y, candidates, 3, fit, 42));

  // A single candidate is returned as-is.
  const std::vector<std::vector<double>> lone = {{0.7, 0.3}};
  CHECK(kfold_cv_select(X, y, lone, 3, fit, 42) ==
        std::vector<double>{0.7, 0.3});

  // Ties break toward the lexicographically smallest candidate.
  const auto constant_fit = [](const Eigen::MatrixXd& Xtr,
                               const Eigen::VectorXd& ytr,
                               const std::vector<double>&) {
    return ridge_ls(Xtr, ytr, 0.1);
  };
  CHECK(kfold_cv_select(X, y, {{2.0}, {1.0}}, 3, constant_fit, 42) ==
        std::vector<double>{1.0});

  // Throwing candidates are discarded; if all throw, the selection fails.
  const auto picky_fit = [](const Eigen::MatrixXd& Xtr,
                            const Eigen::VectorXd& ytr,
                            const std::vector<double>& c) {
    if (c[0] < 0.0) throw std::runtime_error("reject");
    return ridge_ls(Xtr, ytr, c[0]);
  };
  CHECK(kfold_cv_select(X, y, {{-1.0}, {1.0}}, 3, picky_fit, 42) ==
        std::vector<double>{1.0});
  CHECK_THROWS_AS(kfold_cv_select(X, y, {{-1.0}}, 3, picky_fit, 42),
                  std::runtime_error);

  CHECK_THROWS_AS(kfold_cv_select(X, y, candidates, 1, fit, 42),
                  std::invalid_argument);
  CHECK_THROWS_AS(kfold_cv_select(X, y, candidates, 25, fit, 42),
                  std::invalid_argument);
  CHECK_THROWS_AS(kfold_cv_select(X, y, {}, 3, fit, 42),
                  std::invalid_argument);
}

TEST_CASE("ridge penalty selection stays on the grid") {
  ExperimentConfig cfg;
  const Eigen::MatrixXd X = normal_design(40, 3, 2001);
  Eigen::VectorXd theta(3);
  theta << 2.0, 0.0, -1.0;
  Rng rng(2002);
  Eigen::VectorXd y = X * theta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.normal();

  const double lambda = select_ridge_lambda(cfg, X, y, 7);
  CHECK(std::count(cfg.ridge_lambda_grid.begin(), cfg.ridge_lambda_grid.end(),
                   lambda) == 1);

  cfg.ridge_lambda_grid = {0.37};
  CHECK(select_ridge_lambda(cfg, X, y, 7) == 0.37);
}

TEST_CASE("single-fit dispatch honours the method") {
  ExperimentConfig cfg;
  cfg.d = 2;
  const Eigen::MatrixXd X = normal_design(30, 2, 3001);
  Eigen::VectorXd theta(2);
  theta << 1.0, 2.0;
  Rng rng(3002);
  Eigen::VectorXd y = X * theta;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.normal();

  const SingleRegressionFit ls =
      fit_regression(method_of(Method::Ols), cfg, X, y, 0, -1.0);
  CHECK((ls.coef - ols(X, y)).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(ls.lambda == 0.0);
  CHECK(ls.converged);
  CHECK(ls.constants.empty());

  // Without CV the joint ridge method applies lambda_ridge with unit
  // constants.
  const SingleRegressionFit jcr = fit_regression(
      method_of(Method::JointCatoniRidge), cfg, X, y, 0, 0.3);
  CHECK(jcr.lambda == 0.3);
  CHECK(jcr.constants == std::vector<double>{1.0, 1.0, 1.0});

  CHECK_THROWS_AS(
      fit_regression(method_of(Method::SampleMean), cfg, X, y, 0, -1.0),
      std::invalid_argument);

  const std::vector<double> data{1.0, 2.0, 3.0, 4.0};
  const SingleMeanFit sm =
      fit_mean(method_of(Method::SampleMean), cfg, data, 0.0);
  CHECK(sm.theta == sample_mean_var(data).first);
  CHECK_THROWS_AS(fit_mean(method_of(Method::Ols), cfg, data, 0.0),
                  std::invalid_argument);
}

TEST_CASE("leave-one-out errors on hand data") {
  ExperimentConfig cfg;
  const Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd y(3);
  y << 1.0, 2.0, 3.0;
  const LoocvResult loo =
      loocv_errors(X, y, method_of(Method::SampleMean), cfg);
  CHECK(loo.errors == std::vector<double>{1.5, 0.0, 1.5});
  CHECK(loo.failures == 0);

  // Noiseless regression: every held-out prediction is exact.
  const Eigen::MatrixXd Xr = normal_design(10, 2, 4001);
  Eigen::VectorXd truth(2);
  truth << 2.0, -1.0;
  const Eigen::VectorXd yr = Xr * truth;
  const LoocvResult exact = loocv_errors(Xr, yr, method_of(Method::Ols), cfg);
  CHECK(exact.failures == 0);
  for (double e : exact.errors) CHECK(std::fabs(e) <= 1e-9);

  Eigen::MatrixXd small = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd ysmall(2);
  ysmall << 1.0, 2.0;
  CHECK_THROWS_AS(loocv_errors(small, ysmall, method_of(Method::SampleMean),
                               cfg),
                  std::invalid_argument);
}

TEST_CASE("correlation screening ranks planted signals first") {
  const Eigen::MatrixXd X = normal_design(30, 4, 5001);
  CHECK(sis_screen(X, X.col(1), 1) == std::vector<std::size_t>{1});

  const Eigen::MatrixXd Xp = normal_design(60, 12, 5002);
  Rng rng(5003);
  Eigen::VectorXd yp = 3.0 * Xp.col(7);
  for (Eigen::Index i = 0; i < yp.size(); ++i) yp[i] += 0.5 * rng.normal();
  const std::vector<std::size_t> ranked = sis_screen(Xp, yp, 3);
  REQUIRE(ranked.size() == 3);
  CHECK(ranked[0] == 7);

  // Zero-variance predictors sink to the bottom.
  Eigen::MatrixXd Xc = normal_design(30, 3, 5004);
  Xc.col(1).setConstant(2.0);
  const Eigen::VectorXd yc = Xc.col(0);
  const std::vector<std::size_t> with_const = sis_screen(Xc, yc, 3);
  CHECK(with_const[0] == 0);
  CHECK(with_const[2] == 1);

  // A constant response zeroes every varying column's strength: ties keep
  // index order (on a design with no constant columns).
  CHECK(sis_screen(X, Eigen::VectorXd::Constant(30, 1.0), 4) ==
        std::vector<std::size_t>({0, 1, 2, 3}));
  // With a constant column present, that column still sinks below the ties.
  CHECK(sis_screen(Xc, Eigen::VectorXd::Constant(30, 1.0), 3) ==
        std::vector<std::size_t>({0, 2, 1}));

  // Duplicated predictors tie exactly; the lower index wins.
  Eigen::MatrixXd Xd = normal_design(30, 3, 5005);
  Xd.col(2) = Xd.col(0);
  const std::vector<std::size_t> dup = sis_screen(Xd, Xd.col(0), 3);
  CHECK(dup[0] == 0);
  CHECK(dup[1] == 2);

  CHECK_THROWS_AS(sis_screen(Xc, yc, 0), std::invalid_argument);
  CHECK_THROWS_AS(sis_screen(Xc, yc, 4), std::invalid_argument);
}

TEST_CASE("parameter sweeps reuse the replication machinery") {
  ExperimentConfig cfg =
      mean_config({Method::SampleMean}, "normal:1", 30, 25, 606);
  cfg.sweep = SweepSpec{"sigma", 2.0, 2.0, 1.0};
  const SweepReport report = run_parameter_sweep(cfg);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].method == "sample-mean");
  CHECK(report.rows[0].parameter_value == 2.0);
  CHECK(report.metadata.at("sweep") == "sigma:2:2:1");

  ExperimentConfig point = cfg;
  point.sweep.reset();
  point.noise.sigma = 2.0;
  const ReplicationErrors rr = run_replications(point);
  CHECK(report.rows[0].q99 == empirical_quantile(rr.errors[0], 0.99));

  // Scaling sigma scales the sample-mean error exactly (same normal draws,
  // power-of-two factor), so the two sweep points differ by that factor.
  ExperimentConfig two = cfg;
  two.sweep = SweepSpec{"sigma", 1.0, 2.0, 1.0};
  const SweepReport pair = run_parameter_sweep(two);
  REQUIRE(pair.rows.size() == 2);
  CHECK(pair.rows[0].parameter_value == 1.0);
  CHECK(pair.rows[1].parameter_value == 2.0);
  CHECK(pair.rows[1].q99 == 2.0 * pair.rows[0].q99);

  ExperimentConfig no_sweep = cfg;
  no_sweep.sweep.reset();
  CHECK_THROWS_AS(run_parameter_sweep(no_sweep), std::invalid_argument);

  ExperimentConfig bogus = cfg;
  bogus.sweep = SweepSpec{"bogus", 1.0, 2.0, 1.0};
  CHECK_THROWS_AS(run_parameter_sweep(bogus), std::invalid_argument);
  ExperimentConfig bad_range = cfg;
  bad_range.sweep = SweepSpec{"sigma", 2.0, 1.0, 1.0};
  CHECK_THROWS_AS(run_parameter_sweep(bad_range), std::invalid_argument);
}

TEST_CASE("parallel_for fills every slot once") {
  std::vector<int> counts(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { counts[i] += 1; });
  CHECK(std::all_of(counts.begin(), counts.end(),
                    [](int c) { return c == 1; }));
  std::vector<int> inline_counts(7, 0);
  parallel_for(7, 1, [&](std::size_t i) { inline_counts[i] += 1; });
  CHECK(std::all_of(inline_counts.begin(), inline_counts.end(),
                    [](int c) { return c == 1; }));
}

}  // TEST_SUITE
