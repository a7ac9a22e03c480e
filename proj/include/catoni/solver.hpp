#pragma once

#include <Eigen/Dense>

#include <functional>
#include <utility>
#include <vector>

namespace catoni {

struct SolveOptions {
  double tol_residual = 1e-9;  // convergence threshold on the score values
  double tol_step = 1e-10;     // relative step / bracket width threshold
  int max_outer = 200;
  // Scale-search bracket for the second equation. Both zero (default) means
  // the caller derives a bracket from the data (the estimators use a
  // MAD-based one).
  double v_lo = 0.0;
  double v_hi = 0.0;
  double damping = 1.0;  // initial damping for the coupled updates
};

struct SolveDiagnostics {
  int outer_iterations = 0;
  double residual_1 = 0.0;  // |f1| (or ||f1||_inf) at the returned point
  double residual_2 = 0.0;  // |f2| at the returned point
  bool converged = false;
  bool degenerate_scale = false;  // f2 had no root inside the scale bracket
};

struct RootResult {
  double x = 0.0;
  double f_value = 0.0;
  bool sign_change = true;  // false: no sign change over [lo,hi], x is the
                            // endpoint (or probe) with the smallest |f|
};

// Bisection for a monotone non-increasing (or non-decreasing) f on [lo, hi].
// Derivative-free on purpose: the narrow influence variants are not
// differentiable at |x| = 1. Returns the point with the smallest |f| seen,
// which is the midpoint chain's best approximation of the root when a sign
// change exists. tol is an absolute width threshold on the bracket.
RootResult find_root_monotone(const std::function<double(double)>& f, double lo,
                              double hi, double tol);

struct ScalarJointFit {
  double theta = 0.0;
  double v = 0.0;
  SolveDiagnostics diagnostics{};
};

// Alternating solve of the coupled system f1(theta, v) = 0, f2(theta, v) = 0
// where f1 is non-increasing in theta (v fixed) and f2 is non-increasing in v
// (theta fixed). opts.v_lo/v_hi must be a valid positive bracket here.
ScalarJointFit solve_coupled_scalar(
    const std::function<double(double, double)>& f1,
    const std::function<double(double, double)>& f2, double theta_init,
    double v_init, const SolveOptions& opts);

struct VectorScoreFit {
  Eigen::VectorXd theta;
  SolveDiagnostics diagnostics{};
};

// Damped fixed-point iteration for a vector score equation score(theta) = 0:
//   theta <- theta + damping * scale_factor * gram_inverse_apply(score(theta))
// Divergence (growing ||score||_inf) halves the damping, floor 1/64.
VectorScoreFit solve_score_fixed_point(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& score,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>&
        gram_inverse_apply,
    double scale_factor, const Eigen::VectorXd& init, const SolveOptions& opts);

// Brute-force reference: minimise max(||f1||_inf, |f2|) over a full grid.
// Intentionally simple and slow; used to cross-check the solver on small
// problems (theta dimension 1 or 2).
struct GridBox {
  std::vector<std::pair<double, double>> theta;  // per-coordinate [lo, hi]
  std::pair<double, double> v{0.0, 0.0};
};

struct GridPoint {
  Eigen::VectorXd theta;
  double v = 0.0;
  double worst_residual = 0.0;
};

GridPoint grid_oracle(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& f1,
    const std::function<double(const Eigen::VectorXd&, double)>& f2,
    const GridBox& box, int resolution);

// Scalar-theta convenience overload (avoids per-point vector allocations).
GridPoint grid_oracle_scalar(const std::function<double(double, double)>& f1,
                             const std::function<double(double, double)>& f2,
                             double theta_lo, double theta_hi, double v_lo,
                             double v_hi, int resolution);

}  // namespace catoni
