#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "catoni/datagen.hpp"
#include "catoni/estimators.hpp"

namespace catoni {

enum class Method {
  SampleMean,
  CatoniKnownSigma,
  CatoniSampleSigma,
  JointCatoniMean,
  Ols,
  AdaptiveHuber,
  JointCatoni,
  RidgeLs,
  AdaptiveHuberRidge,
  JointCatoniRidge,
};

Method parse_method(const std::string& name);
std::string method_name(Method m);
bool is_mean_method(Method m);
bool is_ridge_method(Method m);

struct MethodSpec {
  Method method = Method::SampleMean;
  InfluenceSpec influence{};  // used by the joint-catoni methods
};

struct SweepSpec {
  std::string parameter;  // "sigma" | "df" | "shape"
  double from = 0.0;
  double to = 0.0;
  double step = 0.0;
};

struct ExperimentConfig {
  std::vector<MethodSpec> methods;
  int reps = 1000;
  std::size_t n = 500;
  std::size_t d = 0;  // 0 for mean experiments
  NoiseSpec noise{};
  Eigen::VectorXd theta_star;  // regression truth; empty means zeros
  TuningParams tp{};
  std::vector<double> quantile_levels;  // default 0.90 .. 1.00 step 0.005
  std::optional<SweepSpec> sweep;
  std::uint64_t base_seed = 1;
  int threads = 1;
  double trim_alpha = 0.1;

  // Constant selection protocol: when cv_constants is set, each replication
  // picks the joint-catoni c2/c3 (and the adaptive-Huber c1) from cv_grid by
  // k-fold cross-validation on that replication's data.
  bool cv_constants = false;
  std::vector<double> cv_grid = {0.5, 1.0, 1.5};
  int cv_folds = 3;
  // Ridge experiments: lambda_ridge is chosen per replication by
  // ridge_folds-fold CV of ridge_ls over this grid, then the robust methods
  // rescale it by a CV-selected constant from cv_grid.
  std::vector<double> ridge_lambda_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
  int ridge_folds = 5;
};

struct ReplicationErrors {
  std::vector<std::string> method_names;
  std::vector<std::vector<double>> errors;  // [method][replication]
  std::vector<int> failures;                // non-converged / failed fits
};

// Runs cfg.reps seeded replications (seed_r = base_seed xor r), fitting every
// configured method on shared data. Mean experiments record |theta_hat - mu|,
// regression experiments ||coef - theta_star||_2. A failed fit records +inf,
// a non-converged one records its estimate; both bump the failure counter.
// Results are identical for any thread count.
ReplicationErrors run_replications(const ExperimentConfig& cfg);

struct SingleMeanFit {
  double theta = 0.0;
  double v_hat = std::numeric_limits<double>::quiet_NaN();  // joint methods
  bool converged = true;
};

struct SingleRegressionFit {
  Eigen::VectorXd coef;
  double v_hat = std::numeric_limits<double>::quiet_NaN();  // joint methods
  double lambda = 0.0;  // l2 penalty actually applied (0 when none)
  bool converged = true;
  std::vector<double> constants;  // tuning constants used (CV-chosen if on)
};

// One fit of `method` on explicit data under cfg's protocol (the same
// dispatch the replication loop uses). sigma_known feeds only the
// known-sigma Catoni baseline. For the ridge-family methods lambda_ridge is
// the base penalty that gets rescaled; pass select_ridge_lambda's result (or
// any fixed value); it is ignored by non-ridge methods.
SingleMeanFit fit_mean(const MethodSpec& method, const ExperimentConfig& cfg,
                       const std::vector<double>& data, double sigma_known);
SingleRegressionFit fit_regression(const MethodSpec& method,
                                   const ExperimentConfig& cfg,
                                   const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y,
                                   std::uint64_t cv_seed, double lambda_ridge);

// Base ridge penalty: cfg.ridge_folds-fold CV of ridge_ls over
// cfg.ridge_lambda_grid.
double select_ridge_lambda(const ExperimentConfig& cfg,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           std::uint64_t seed);

struct QuantileReport {
  struct Row {
    std::string method;
    double level = 0.0;
    double error = 0.0;
  };
  std::vector<Row> rows;
  std::map<std::string, std::string> metadata;
};

struct SweepReport {
  struct Row {
    std::string method;
    double parameter_value = 0.0;
    double q99 = 0.0;
  };
  std::vector<Row> rows;
  std::map<std::string, std::string> metadata;
};

QuantileReport run_quantile_experiment(const ExperimentConfig& cfg);
SweepReport run_parameter_sweep(const ExperimentConfig& cfg);

// Resolved-config echo embedded in every report ('#key=value' lines in the
// CSV). Deliberately excludes the worker-thread count, which never affects
// the numbers.
std::map<std::string, std::string> experiment_metadata(
    const ExperimentConfig& cfg);

// Upper empirical quantile: sorted ascending, index ceil(level * n) (1-based).
// level in (0, 1].
double empirical_quantile(std::vector<double> values, double level);

struct MetricsBundle {
  double mae = 0.0;
  double medae = 0.0;
  double trimmed_mae = 0.0;
  double trim_alpha = 0.0;
};

// MAE / median-AE / symmetrically trimmed MAE (floor(alpha/2 * n) dropped
// from each end). Requires non-empty, finite errors and trim_alpha in [0,1).
MetricsBundle compute_metrics(const std::vector<double>& errors,
                              double trim_alpha);

// K-fold CV over candidate constant vectors: deterministic Fisher-Yates fold
// assignment from `seed`, held-out mean absolute prediction error, ties
// resolved toward the lexicographically smallest candidate. The callback
// fits on a training split and returns coefficients. Candidates whose fits
// fail on some fold are discarded; throws if every candidate fails.
std::vector<double> kfold_cv_select(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const std::vector<std::vector<double>>& candidates, int folds,
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&,
                                        const Eigen::VectorXd&,
                                        const std::vector<double>&)>& fit,
    std::uint64_t seed);

struct LoocvResult {
  std::vector<double> errors;  // |y_i - <x_i, theta_hat_{-i}>|, NaN on failure
  int failures = 0;
};

// Leave-one-out prediction errors for one method under the protocol carried
// by cfg (tuning, CV grids, seed). Requires n >= 3.
LoocvResult loocv_errors(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const MethodSpec& method, const ExperimentConfig& cfg);

// Correlation screening: rank predictors by |corr(x_j, y)| (descending, ties
// toward the lower index, zero-variance columns last) and keep the top
// `keep` indices in rank order.
std::vector<std::size_t> sis_screen(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y,
                                    std::size_t keep);

// Index-addressed parallel loop used by the harness; body(i) must write only
// to slot i of preallocated storage so results cannot depend on the worker
// count. threads <= 1 runs inline.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace catoni
