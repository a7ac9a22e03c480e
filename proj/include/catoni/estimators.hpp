#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <utility>
#include <vector>

#include "catoni/influence.hpp"
#include "catoni/solver.hpp"

namespace catoni {

// Confidence/moment tuning shared by the joint estimators. eps is the
// exceedance level, beta the moment order in (1, 2], c1..c3 multiplicative
// constants (c1 scales the Huber truncation, c2 scales alpha1, c3 scales
// alpha2). alpha1/alpha2 are filled in by derived_for_mean /
// derived_for_regression and left at 0 until then.
struct TuningParams {
  double eps = 0.01;
  double beta = 2.0;
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  static TuningParams make(double eps, double beta, double c1 = 1.0,
                           double c2 = 1.0, double c3 = 1.0);

  // alpha1 = c2 * sqrt(log(n^(1/beta - 1/2) / eps) / n)
  // alpha2 = c3 * (log(1/eps) / n)^(1/beta)
  TuningParams derived_for_mean(std::size_t n) const;

  // Same alpha2; alpha1 picks up the dimension:
  // alpha1 = c2 * sqrt(log(d * n^(1/beta - 1/2) / eps) / n)
  TuningParams derived_for_regression(std::size_t n, std::size_t d) const;
};

struct JointFit {
  double theta_hat = 0.0;
  double v_hat = 0.0;
  SolveDiagnostics diagnostics{};
};

struct RegressionFit {
  Eigen::VectorXd coef;
  double v_hat = 0.0;
  double lambda = 0.0;  // penalty actually applied (lambda0 * alpha1), 0 if none
  SolveDiagnostics diagnostics{};
};

struct DesignSummary {
  double lambda_min = 0.0;    // smallest eigenvalue of S_n = (1/n) X^T X
  double lambda_max = 0.0;
  double max_row_norm = 0.0;  // max_i ||x_i||_2
};

// Basic location/scale helpers (shared by the initialisers and tests).
double sample_median(std::vector<double> values);
// 1.4826 * median(|x - median(x)|); falls back to the mean absolute
// deviation when the MAD is zero but the data are not constant.
double mad_scale(const std::vector<double>& values);
std::pair<double, double> sample_mean_var(const std::vector<double>& data);

// Joint trend/scale estimate for i.i.d. data: solve
//   (1/n) sum psi1(alpha1 (x_i - theta) / v)            = 0
//   (1/n) sum psi2(alpha2 ((x_i - theta)^2 / v^2 - 1))  = 0
// with the alphas derived from tp for this n. Constant data returns the
// constant with degenerate_scale set.
JointFit joint_mean_variance(const std::vector<double>& data,
                             const TuningParams& tp, const InfluenceSpec& spec,
                             const SolveOptions& opts = {});

// Classical single-equation Catoni mean with known sigma:
// root of sum psi1_wide(alpha (x_i - theta)) with
// alpha = (1/sigma) sqrt(2 log(1/eps) / n).
double catoni_mean(const std::vector<double>& data, double eps, double sigma);
// Same with sigma replaced by the (1/n-normalised) sample deviation.
double catoni_mean_sample_sigma(const std::vector<double>& data, double eps);

// Returns (mean, (1/n) sum (x_i - mean)^2).
// (declared above with the helpers)

// Joint trend/scale linear regression: solve
//   (1/n) sum x_i psi1(alpha1 (y_i - <x_i,theta>) / v)              = 0
//   (1/n) sum     psi2(alpha2 ((y_i - <x_i,theta>)^2 / v^2 - 1))    = 0.
// Requires n > d and a nonsingular S_n.
RegressionFit joint_regression(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, const TuningParams& tp,
                               const InfluenceSpec& spec,
                               const SolveOptions& opts = {});

// Ridge-penalised variant: first equation becomes f1(theta, v) - lambda theta
// with lambda = lambda0 * alpha1; the scale equation is unchanged.
// lambda0 = 0 reduces exactly to joint_regression.
RegressionFit joint_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const TuningParams& tp, const InfluenceSpec& spec,
                          double lambda0, const SolveOptions& opts = {});

// Least-squares baselines, normal-equation convention
//   (S_n + lambda I) theta = (1/n) X^T y,  S_n = (1/n) X^T X.
Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
Eigen::VectorXd ridge_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double lambda);

// Adaptive Huber truncation level tau = c1 * sigma_bar * sqrt(n / log n),
// sigma_bar the 1/n-normalised deviation of y. huber_tau_value exposes the
// formula for a real-valued n.
double huber_tau_value(double sigma_bar, double n_eff, double c1);
double huber_tau(const Eigen::VectorXd& y, double c1);

// IRLS for the Huber objective (1/n) sum l_tau(y_i - <x_i,theta>) +
// (lambda/2) ||theta||^2 with weights w_i = min(1, tau/|r_i|). Converges when
// the coefficient step drops below 1e-10 (sup norm); throws after 500
// iterations without convergence.
Eigen::VectorXd adaptive_huber(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, double tau,
                               double lambda = 0.0);

DesignSummary gram_summary(const Eigen::MatrixXd& X);

}  // namespace catoni
