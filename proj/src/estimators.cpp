#include "catoni/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace catoni {

namespace {

void require_finite_data(const std::vector<double>& data, std::size_t min_n,
                         const char* who) {
  if (data.size() < min_n) {
    std::ostringstream msg;
    msg << who << ": needs at least " << min_n << " observations, got "
        << data.size();
    throw std::invalid_argument(msg.str());
  }
  for (double x : data) {
    if (!std::isfinite(x)) {
      throw std::invalid_argument(std::string(who) + ": non-finite data");
    }
  }
}

void require_finite_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const char* who) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw std::invalid_argument(std::string(who) + ": empty design");
  }
  if (y.size() != X.rows()) {
    throw std::invalid_argument(std::string(who) +
                                ": response length does not match design");
  }
  if (!X.allFinite() || !y.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite input");
  }
}

}  // namespace

TuningParams TuningParams::make(double eps, double beta, double c1, double c2,
                                double c3) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("eps must lie in (0, 1)");
  }
  if (!(beta > 1.0 && beta <= 2.0)) {
    throw std::invalid_argument("beta must lie in (1, 2]");
  }
  for (double c : {c1, c2, c3}) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("tuning constants must be positive");
    }
  }
  TuningParams tp;
  tp.eps = eps;
  tp.beta = beta;
  tp.c1 = c1;
  tp.c2 = c2;
  tp.c3 = c3;
  return tp;
}

TuningParams TuningParams::derived_for_mean(std::size_t n) const {
  if (n < 2) throw std::invalid_argument("tuning needs n >= 2");
  TuningParams out = make(eps, beta, c1, c2, c3);
  const double nn = static_cast<double>(n);
  // log(n^(1/beta - 1/2) / eps) = (1/beta - 1/2) log n + log(1/eps)
  const double log_term = (1.0 / beta - 0.5) * std::log(nn) - std::log(eps);
  out.alpha1 = c2 * std::sqrt(log_term / nn);
  out.alpha2 = c3 * std::pow(-std::log(eps) / nn, 1.0 / beta);
  return out;
}

TuningParams TuningParams::derived_for_regression(std::size_t n,
                                                  std::size_t d) const {
  if (n < 2) throw std::invalid_argument("tuning needs n >= 2");
  if (d < 1) throw std::invalid_argument("tuning needs d >= 1");
  TuningParams out = make(eps, beta, c1, c2, c3);
  const double nn = static_cast<double>(n);
  const double log_term = std::log(static_cast<double>(d)) +
                          (1.0 / beta - 0.5) * std::log(nn) - std::log(eps);
  out.alpha1 = c2 * std::sqrt(log_term / nn);
  out.alpha2 = c3 * std::pow(-std::log(eps) / nn, 1.0 / beta);
  return out;
}

double sample_median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sequence");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mad_scale(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mad_scale of empty sequence");
  const double med = sample_median(values);
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    dev[i] = std::fabs(values[i] - med);
  }
  const double mad = sample_median(dev);
  if (mad > 0.0) return 1.4826 * mad;
  // The MAD vanishes whenever more than half the points sit at the median,
  // which does not mean the data carry no scale; fall back to the mean
  // absolute deviation (zero only for constant data).
  double acc = 0.0;
  for (double d : dev) acc += d;
  return 1.2533 * (acc / static_cast<double>(dev.size()));
}

std::pair<double, double> sample_mean_var(const std::vector<double>& data) {
  require_finite_data(data, 1, "sample_mean_var");
  const double n = static_cast<double>(data.size());
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : data) var += (x - mean) * (x - mean);
  var /= n;  // 1/n normalisation throughout (sigma-bar convention)
  return {mean, var};
}

JointFit joint_mean_variance(const std::vector<double>& data,
                             const TuningParams& tp, const InfluenceSpec& spec,
                             const SolveOptions& opts) {
  require_finite_data(data, 4, "joint_mean_variance");
  const std::size_t n = data.size();
  const TuningParams t = tp.derived_for_mean(n);
  const double med = sample_median(data);
  const double s = mad_scale(data);

  JointFit fit;
  if (s == 0.0) {
    // All entries equal: theta is that value, the scale equation carries no
    // information at all.
    fit.theta_hat = med;
    fit.v_hat = 1e-12 * std::max(1.0, std::fabs(med));
    fit.diagnostics.degenerate_scale = true;
    fit.diagnostics.converged = false;
    fit.diagnostics.residual_1 = 0.0;
    fit.diagnostics.residual_2 = std::fabs(eval_psi2(spec, -t.alpha2));
    return fit;
  }

  SolveOptions local = opts;
  if (!(local.v_lo > 0.0 && local.v_hi > local.v_lo)) {
    local.v_lo = 1e-6 * s;
    local.v_hi = 20.0 * s;
  }

  const double a1 = t.alpha1;
  const double a2 = t.alpha2;
  const double inv_n = 1.0 / static_cast<double>(n);
  const auto f1 = [&](double theta, double v) {
    double acc = 0.0;
    const double scale = a1 / v;
    for (double x : data) acc += eval_psi1(spec, scale * (x - theta));
    return acc * inv_n;
  };
  const auto f2 = [&](double theta, double v) {
    double acc = 0.0;
    const double inv_v2 = 1.0 / (v * v);
    for (double x : data) {
      const double r = x - theta;
      acc += eval_psi2(spec, a2 * (r * r * inv_v2 - 1.0));
    }
    return acc * inv_n;
  };

  const ScalarJointFit sf = solve_coupled_scalar(f1, f2, med, s, local);
  fit.theta_hat = sf.theta;
  fit.v_hat = sf.v;
  fit.diagnostics = sf.diagnostics;
  return fit;
}

double catoni_mean(const std::vector<double>& data, double eps, double sigma) {
  require_finite_data(data, 1, "catoni_mean");
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("catoni_mean: eps must lie in (0, 1)");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("catoni_mean: sigma must be positive");
  }
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (lo == hi) return lo;  // psi1(0) = 0 at theta = c

  const std::size_t n = data.size();
  const double alpha =
      std::sqrt(2.0 * -std::log(eps) / static_cast<double>(n)) / sigma;
  const InfluenceSpec wide{};  // psi1 wide is the classical choice
  const auto f = [&](double theta) {
    double acc = 0.0;
    for (double x : data) acc += eval_psi1(wide, alpha * (x - theta));
    return acc / static_cast<double>(n);
  };
  // f(min) > 0 > f(max) for non-constant data, so the root is bracketed.
  return find_root_monotone(f, lo, hi, 1e-12 * (hi - lo)).x;
}

double catoni_mean_sample_sigma(const std::vector<double>& data, double eps) {
  require_finite_data(data, 2, "catoni_mean_sample_sigma");
  const auto [mean, var] = sample_mean_var(data);
  (void)mean;
  if (var == 0.0) {
    throw std::invalid_argument(
        "catoni_mean_sample_sigma: zero sample variance");
  }
  return catoni_mean(data, eps, std::sqrt(var));
}

namespace {

// Shared core of joint_regression / joint_ridge. lambda0 = 0 makes the two
// public entry points bit-identical by construction.
RegressionFit joint_linear_impl(const Eigen::MatrixXd& X,
                                const Eigen::VectorXd& y,
                                const TuningParams& tp,
                                const InfluenceSpec& spec, double lambda0,
                                const SolveOptions& opts, const char* who) {
  require_finite_xy(X, y, who);
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n <= d) {
    throw std::invalid_argument(std::string(who) + ": needs n > d");
  }
  if (!(lambda0 >= 0.0) || !std::isfinite(lambda0)) {
    throw std::invalid_argument(std::string(who) + ": bad lambda0");
  }

  const TuningParams t = tp.derived_for_regression(
      static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  const double a1 = t.alpha1;
  const double a2 = t.alpha2;
  const double lambda = lambda0 * a1;

  const Eigen::MatrixXd Sn =
      (X.transpose() * X) / static_cast<double>(n);
  if (lambda == 0.0) {
    // Without a penalty the fixed-point preconditioner is S_n itself.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        Sn, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    if (lmin <= 1e-12 * std::max(1.0, lmax)) {
      throw std::invalid_argument(std::string(who) + ": singular design");
    }
  }

  // Initialise from the (possibly penalised) least-squares fit.
  Eigen::VectorXd theta = ridge_ls(X, y, lambda);
  Eigen::VectorXd resid = y - X * theta;
  double s = mad_scale(std::vector<double>(resid.data(), resid.data() + n));
  if (s <= 0.0) {
    // Exact-fit residuals: the scale equation is degenerate; a tiny bracket
    // lets the solver detect and flag that.
    s = 1e-9 * std::max(1.0, y.lpNorm<Eigen::Infinity>());
  }

  SolveOptions local = opts;
  if (!(local.v_lo > 0.0 && local.v_hi > local.v_lo)) {
    local.v_lo = 1e-6 * s;
    local.v_hi = 20.0 * s;
  }
  double v = std::clamp(s, local.v_lo, local.v_hi);

  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd psi_vals(n);
  const auto score = [&](const Eigen::VectorXd& th, double vv) {
    Eigen::VectorXd r = y - X * th;
    const double scale = a1 / vv;
    for (Eigen::Index i = 0; i < n; ++i) {
      psi_vals[i] = eval_psi1(spec, scale * r[i]);
    }
    Eigen::VectorXd sc = (X.transpose() * psi_vals) * inv_n;
    if (lambda > 0.0) sc -= lambda * th;
    return sc;
  };
  const auto f2 = [&](const Eigen::VectorXd& th, double vv) {
    const Eigen::VectorXd r = y - X * th;
    const double inv_v2 = 1.0 / (vv * vv);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      acc += eval_psi2(spec, a2 * (r[i] * r[i] * inv_v2 - 1.0));
    }
    return acc * inv_n;
  };

  SolveOptions inner = local;
  inner.max_outer = 80;
  const double v_tol = 1e-4 * local.tol_step * (local.v_hi - local.v_lo);

  RegressionFit fit;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  if (lambda == 0.0) ldlt.compute(Sn);  // preconditioner fixed over the solve
  Eigen::MatrixXd precond;
  bool degenerate = false;
  int outer = 0;
  for (; outer < local.max_outer; ++outer) {
    // theta step at fixed v: damped fixed point with the penalised Gram.
    if (lambda > 0.0) {
      precond = Sn;
      precond.diagonal().array() += lambda * v / a1;
      ldlt.compute(precond);
    }
    const double v_now = v;
    const VectorScoreFit tstep = solve_score_fixed_point(
        [&](const Eigen::VectorXd& th) { return score(th, v_now); },
        [&](const Eigen::VectorXd& g) { return ldlt.solve(g).eval(); },
        v_now / a1, theta, inner);
    const double theta_step = (tstep.theta - theta).lpNorm<Eigen::Infinity>();
    theta = tstep.theta;

    // v step at fixed theta: monotone bisection over the scale bracket.
    const RootResult vr = find_root_monotone(
        [&](double vv) { return f2(theta, vv); }, local.v_lo, local.v_hi,
        v_tol);
    degenerate = !vr.sign_change;
    v = vr.x;

    const double r1 = score(theta, v).lpNorm<Eigen::Infinity>();
    const double r2 = std::fabs(f2(theta, v));
    if (std::max(r1, r2) <= local.tol_residual) {
      ++outer;
      break;
    }
    if (degenerate &&
        theta_step <=
            local.tol_step *
                std::max(1.0, theta.lpNorm<Eigen::Infinity>())) {
      ++outer;
      break;
    }
  }

  fit.coef = theta;
  fit.v_hat = v;
  fit.lambda = lambda;
  fit.diagnostics.outer_iterations = outer;
  fit.diagnostics.residual_1 = score(theta, v).lpNorm<Eigen::Infinity>();
  fit.diagnostics.residual_2 = std::fabs(f2(theta, v));
  fit.diagnostics.degenerate_scale = degenerate;
  fit.diagnostics.converged =
      std::max(fit.diagnostics.residual_1, fit.diagnostics.residual_2) <=
      local.tol_residual;
  return fit;
}

}  // namespace

RegressionFit joint_regression(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, const TuningParams& tp,
                               const InfluenceSpec& spec,
                               const SolveOptions& opts) {
  return joint_linear_impl(X, y, tp, spec, 0.0, opts, "joint_regression");
}

RegressionFit joint_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const TuningParams& tp, const InfluenceSpec& spec,
                          double lambda0, const SolveOptions& opts) {
  return joint_linear_impl(X, y, tp, spec, lambda0, opts, "joint_ridge");
}

Eigen::VectorXd ridge_ls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         double lambda) {
  require_finite_xy(X, y, "ridge_ls");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("ridge_ls: lambda must be non-negative");
  }
  const double n = static_cast<double>(X.rows());
  Eigen::MatrixXd A = (X.transpose() * X) / n;
  A.diagonal().array() += lambda;
  const Eigen::VectorXd b = (X.transpose() * y) / n;
  const Eigen::VectorXd theta = Eigen::LDLT<Eigen::MatrixXd>(A).solve(b);
  const double check = (A * theta - b).lpNorm<Eigen::Infinity>();
  const double scale = std::max(
      {1.0, b.lpNorm<Eigen::Infinity>(), theta.lpNorm<Eigen::Infinity>()});
  if (!theta.allFinite() || check > 1e-8 * scale) {
    throw std::invalid_argument("ridge_ls: singular design");
  }
  return theta;
}

Eigen::VectorXd ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  return ridge_ls(X, y, 0.0);
}

double huber_tau_value(double sigma_bar, double n_eff, double c1) {
  if (!(sigma_bar > 0.0) || !std::isfinite(sigma_bar)) {
    throw std::invalid_argument("huber_tau: sigma_bar must be positive");
  }
  if (!(n_eff > 1.0) || !std::isfinite(n_eff)) {
    throw std::invalid_argument("huber_tau: needs n > 1");
  }
  if (!(c1 > 0.0) || !std::isfinite(c1)) {
    throw std::invalid_argument("huber_tau: c1 must be positive");
  }
  return c1 * sigma_bar * std::sqrt(n_eff / std::log(n_eff));
}

double huber_tau(const Eigen::VectorXd& y, double c1) {
  if (y.size() < 3) throw std::invalid_argument("huber_tau: needs n >= 3");
  const std::vector<double> data(y.data(), y.data() + y.size());
  const auto [mean, var] = sample_mean_var(data);
  (void)mean;
  if (var == 0.0) {
    throw std::invalid_argument("huber_tau: zero sample deviation");
  }
  return huber_tau_value(std::sqrt(var), static_cast<double>(y.size()), c1);
}

Eigen::VectorXd adaptive_huber(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, double tau,
                               double lambda) {
  require_finite_xy(X, y, "adaptive_huber");
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument("adaptive_huber: tau must be positive");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("adaptive_huber: lambda must be non-negative");
  }
  const Eigen::Index n = X.rows();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Start from the least-squares solution (the tau = infinity limit); this
  // also performs the S_n + lambda I nonsingularity check.
  Eigen::VectorXd theta = ridge_ls(X, y, lambda);
  Eigen::VectorXd w(n);

  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::VectorXd r = y - X * theta;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double ar = std::fabs(r[i]);
      w[i] = ar <= tau ? 1.0 : tau / ar;
    }
    // Weighted normal equations ((1/n) X^T W X + lambda I) theta = (1/n) X^T W y.
    Eigen::MatrixXd A = X.transpose() * w.asDiagonal() * X * inv_n;
    A.diagonal().array() += lambda;
    const Eigen::VectorXd b = X.transpose() * (w.cwiseProduct(y)) * inv_n;
    const Eigen::VectorXd theta_new = Eigen::LDLT<Eigen::MatrixXd>(A).solve(b);
    if (!theta_new.allFinite()) {
      throw std::runtime_error("adaptive_huber: singular weighted system");
    }
    const double step = (theta_new - theta).lpNorm<Eigen::Infinity>();
    theta = theta_new;
    if (step <= 1e-10) return theta;
  }
  throw std::runtime_error(
      "adaptive_huber: IRLS did not converge within 500 iterations");
}

DesignSummary gram_summary(const Eigen::MatrixXd& X) {
  if (X.rows() < 1 || X.cols() < 1) {
    throw std::invalid_argument("gram_summary: empty design");
  }
  if (!X.allFinite()) {
    throw std::invalid_argument("gram_summary: non-finite design");
  }
  const Eigen::MatrixXd Sn =
      (X.transpose() * X) / static_cast<double>(X.rows());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Sn, Eigen::EigenvaluesOnly);
  DesignSummary out;
  out.lambda_min = es.eigenvalues().minCoeff();
  out.lambda_max = es.eigenvalues().maxCoeff();
  out.max_row_norm = std::sqrt(X.rowwise().squaredNorm().maxCoeff());
  return out;
}

}  // namespace catoni
