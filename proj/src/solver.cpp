#include "catoni/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace catoni {

namespace {

double checked_eval(const std::function<double(double)>& f, double x) {
  const double value = f(x);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "function evaluated to a non-finite value at x = " << x;
    throw std::runtime_error(msg.str());
  }
  return value;
}

}  // namespace

RootResult find_root_monotone(const std::function<double(double)>& f, double lo,
                              double hi, double tol) {
  if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi)) {
    throw std::invalid_argument("find_root_monotone: invalid bracket");
  }
  if (!(tol > 0.0)) {
    throw std::invalid_argument("find_root_monotone: tol must be positive");
  }

  double flo = checked_eval(f, lo);
  if (flo == 0.0) return {lo, 0.0, true};
  double fhi = checked_eval(f, hi);
  if (fhi == 0.0) return {hi, 0.0, true};

  RootResult best{lo, flo, true};
  if (std::fabs(fhi) < std::fabs(flo)) best = {hi, fhi, true};

  if ((flo > 0.0) == (fhi > 0.0)) {
    best.sign_change = false;
    return best;  // endpoint with the smaller |f|
  }

  // Plain bisection; the midpoint of a symmetric bracket is exactly the
  // centre, which keeps symmetric problems bit-exact.
  for (int iter = 0; iter < 200 && (hi - lo) > tol; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket exhausted in double precision
    const double fm = checked_eval(f, mid);
    if (std::fabs(fm) < std::fabs(best.f_value)) best = {mid, fm, true};
    if (fm == 0.0) return best;
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return best;
}

ScalarJointFit solve_coupled_scalar(
    const std::function<double(double, double)>& f1,
    const std::function<double(double, double)>& f2, double theta_init,
    double v_init, const SolveOptions& opts) {
  if (!(opts.v_lo > 0.0 && opts.v_hi > opts.v_lo)) {
    throw std::invalid_argument(
        "solve_coupled_scalar: needs a positive scale bracket");
  }
  if (!(opts.tol_residual > 0.0 && opts.tol_step > 0.0 && opts.max_outer > 0)) {
    throw std::invalid_argument("solve_coupled_scalar: bad tolerances");
  }
  if (!std::isfinite(theta_init) || !std::isfinite(v_init)) {
    throw std::invalid_argument("solve_coupled_scalar: non-finite start");
  }

  ScalarJointFit fit;
  double theta = theta_init;
  double v = std::clamp(v_init, opts.v_lo, opts.v_hi);
  double damping = opts.damping;
  // Bisection width tolerances sit well below tol_step: the residual check
  // is what decides convergence, the brackets just need enough headroom.
  // Pure relative widths keep very small and very large scales working; the
  // bisection loop's own guard stops at double-precision exhaustion.
  const double v_tol = 1e-4 * opts.tol_step * (opts.v_hi - opts.v_lo);
  double prev_worst = std::numeric_limits<double>::infinity();
  bool degenerate = false;

  int outer = 0;
  for (; outer < opts.max_outer; ++outer) {
    // --- theta step: root of f1(., v), bracket by geometric expansion.
    const auto f1v = [&](double t) { return f1(t, v); };
    double span = std::max({std::fabs(theta), v, 1.0}) * 0.5;
    double t_lo = theta - span;
    double t_hi = theta + span;
    double g_lo = checked_eval(f1v, t_lo);
    double g_hi = checked_eval(f1v, t_hi);
    // f1 is non-increasing in theta: need g_lo >= 0 >= g_hi.
    for (int grow = 0; grow < 80 && (g_lo < 0.0 || g_hi > 0.0); ++grow) {
      span *= 2.0;
      if (g_lo < 0.0) {
        t_lo = theta - span;
        g_lo = checked_eval(f1v, t_lo);
      }
      if (g_hi > 0.0) {
        t_hi = theta + span;
        g_hi = checked_eval(f1v, t_hi);
      }
    }
    const double t_tol = 1e-4 * opts.tol_step * (t_hi - t_lo);
    const RootResult t_root = find_root_monotone(f1v, t_lo, t_hi, t_tol);
    const double theta_prev = theta;
    theta = (damping == 1.0) ? t_root.x : theta + damping * (t_root.x - theta);

    // --- v step: root of f2(theta, .) on the scale bracket.
    const auto f2t = [&](double s) { return f2(theta, s); };
    const RootResult v_root =
        find_root_monotone(f2t, opts.v_lo, opts.v_hi, v_tol);
    degenerate = !v_root.sign_change;
    v = (damping == 1.0) ? v_root.x : v + damping * (v_root.x - v);
    v = std::clamp(v, opts.v_lo, opts.v_hi);

    const double r1 = std::fabs(f1(theta, v));
    const double r2 = std::fabs(f2(theta, v));
    const double worst = std::max(r1, r2);
    if (worst <= opts.tol_residual) {
      ++outer;
      break;
    }
    if (degenerate &&
        std::fabs(theta - theta_prev) <=
            opts.tol_step * std::max(1.0, std::fabs(theta))) {
      ++outer;
      break;  // scale pinned to the bracket edge and theta stable
    }
    if (worst > prev_worst * (1.0 + 1e-9)) {
      damping *= 0.5;
      if (damping < 1.0 / 64.0) {
        ++outer;
        break;
      }
    }
    prev_worst = std::min(prev_worst, worst);
  }

  fit.theta = theta;
  fit.v = v;
  fit.diagnostics.outer_iterations = outer;
  fit.diagnostics.residual_1 = std::fabs(f1(theta, v));
  fit.diagnostics.residual_2 = std::fabs(f2(theta, v));
  fit.diagnostics.degenerate_scale = degenerate;
  fit.diagnostics.converged =
      std::max(fit.diagnostics.residual_1, fit.diagnostics.residual_2) <=
      opts.tol_residual;
  return fit;
}

VectorScoreFit solve_score_fixed_point(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& score,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>&
        gram_inverse_apply,
    double scale_factor, const Eigen::VectorXd& init,
    const SolveOptions& opts) {
  if (init.size() == 0) {
    throw std::invalid_argument("solve_score_fixed_point: empty start");
  }
  if (!(scale_factor > 0.0) || !std::isfinite(scale_factor)) {
    throw std::invalid_argument("solve_score_fixed_point: bad scale factor");
  }

  VectorScoreFit fit;
  Eigen::VectorXd theta = init;
  Eigen::VectorXd s = score(theta);
  if (!s.allFinite()) {
    throw std::runtime_error("solve_score_fixed_point: non-finite score");
  }
  double norm = s.lpNorm<Eigen::Infinity>();
  double damping = opts.damping;
  int steps = 0;

  while (norm > opts.tol_residual && steps < opts.max_outer) {
    const Eigen::VectorXd step =
        (damping * scale_factor) * gram_inverse_apply(s);
    const Eigen::VectorXd candidate = theta + step;
    Eigen::VectorXd s_new = score(candidate);
    const double norm_new =
        s_new.allFinite() ? s_new.lpNorm<Eigen::Infinity>()
                          : std::numeric_limits<double>::infinity();
    ++steps;
    if (norm_new > norm * (1.0 + 1e-9)) {
      // Diverging: stay put and damp the step.
      damping *= 0.5;
      if (damping < 1.0 / 64.0) break;
      continue;
    }
    theta = candidate;
    s = std::move(s_new);
    norm = norm_new;
    if (step.lpNorm<Eigen::Infinity>() <=
        opts.tol_step * std::max(1.0, theta.lpNorm<Eigen::Infinity>())) {
      break;
    }
  }

  fit.theta = theta;
  fit.diagnostics.outer_iterations = steps;
  fit.diagnostics.residual_1 = norm;
  fit.diagnostics.converged = norm <= opts.tol_residual;
  return fit;
}

namespace {

void check_grid_args(const GridBox& box, int resolution) {
  if (resolution < 16) {
    throw std::invalid_argument("grid_oracle: resolution must be >= 16");
  }
  if (box.theta.empty() || box.theta.size() > 2) {
    throw std::invalid_argument(
        "grid_oracle: theta dimension must be 1 or 2");
  }
  const auto bad = [](const std::pair<double, double>& r) {
    return !(std::isfinite(r.first) && std::isfinite(r.second) &&
             r.first < r.second);
  };
  for (const auto& r : box.theta) {
    if (bad(r)) throw std::invalid_argument("grid_oracle: bad theta range");
  }
  if (bad(box.v) || box.v.first <= 0.0) {
    throw std::invalid_argument("grid_oracle: bad scale range");
  }
}

inline double grid_value(double lo, double hi, int i, int resolution) {
  return lo + (hi - lo) * static_cast<double>(i) /
                  static_cast<double>(resolution - 1);
}

}  // namespace

GridPoint grid_oracle(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>& f1,
    const std::function<double(const Eigen::VectorXd&, double)>& f2,
    const GridBox& box, int resolution) {
  check_grid_args(box, resolution);
  const std::size_t dim = box.theta.size();

  GridPoint best;
  best.worst_residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta(dim);

  const int outer1 = resolution;
  const int outer2 = dim == 2 ? resolution : 1;
  for (int i = 0; i < outer1; ++i) {
    theta[0] = grid_value(box.theta[0].first, box.theta[0].second, i, resolution);
    for (int j = 0; j < outer2; ++j) {
      if (dim == 2) {
        theta[1] =
            grid_value(box.theta[1].first, box.theta[1].second, j, resolution);
      }
      for (int k = 0; k < resolution; ++k) {
        const double v = grid_value(box.v.first, box.v.second, k, resolution);
        const double r1 = f1(theta, v).lpNorm<Eigen::Infinity>();
        const double r2 = std::fabs(f2(theta, v));
        const double worst = std::max(r1, r2);
        if (!std::isfinite(worst)) {
          throw std::runtime_error("grid_oracle: non-finite residual");
        }
        if (worst < best.worst_residual) {
          best.theta = theta;
          best.v = v;
          best.worst_residual = worst;
        }
      }
    }
  }
  return best;
}

GridPoint grid_oracle_scalar(const std::function<double(double, double)>& f1,
                             const std::function<double(double, double)>& f2,
                             double theta_lo, double theta_hi, double v_lo,
                             double v_hi, int resolution) {
  GridBox box;
  box.theta = {{theta_lo, theta_hi}};
  box.v = {v_lo, v_hi};
  check_grid_args(box, resolution);

  GridPoint best;
  best.worst_residual = std::numeric_limits<double>::infinity();
  double best_theta = theta_lo;

  for (int i = 0; i < resolution; ++i) {
    const double theta = grid_value(theta_lo, theta_hi, i, resolution);
    for (int k = 0; k < resolution; ++k) {
      const double v = grid_value(v_lo, v_hi, k, resolution);
      const double worst =
          std::max(std::fabs(f1(theta, v)), std::fabs(f2(theta, v)));
      if (!std::isfinite(worst)) {
        throw std::runtime_error("grid_oracle: non-finite residual");
      }
      if (worst < best.worst_residual) {
        best_theta = theta;
        best.v = v;
        best.worst_residual = worst;
      }
    }
  }
  best.theta = Eigen::VectorXd::Constant(1, best_theta);
  return best;
}

}  // namespace catoni
