#include "catoni/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace catoni {

namespace {

constexpr std::uint64_t kCvSalt = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kRidgeSalt = 0xd1b54a32d192ed03ULL;

const struct {
  Method method;
  const char* name;
} kMethodNames[] = {
    {Method::SampleMean, "sample-mean"},
    {Method::CatoniKnownSigma, "catoni"},
    {Method::CatoniSampleSigma, "catoni-sample"},
    {Method::JointCatoniMean, "joint-catoni-mean"},
    {Method::Ols, "ols"},
    {Method::AdaptiveHuber, "adaptive-huber"},
    {Method::JointCatoni, "joint-catoni"},
    {Method::RidgeLs, "ridge"},
    {Method::AdaptiveHuberRidge, "adaptive-huber-ridge"},
    {Method::JointCatoniRidge, "joint-catoni-ridge"},
};

}  // namespace

Method parse_method(const std::string& name) {
  for (const auto& entry : kMethodNames) {
    if (name == entry.name) return entry.method;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  for (const auto& entry : kMethodNames) {
    if (entry.method == m) return entry.name;
  }
  throw std::logic_error("unreachable method");
}

bool is_mean_method(Method m) {
  switch (m) {
    case Method::SampleMean:
    case Method::CatoniKnownSigma:
    case Method::CatoniSampleSigma:
    case Method::JointCatoniMean:
      return true;
    default:
      return false;
  }
}

bool is_ridge_method(Method m) {
  switch (m) {
    case Method::RidgeLs:
    case Method::AdaptiveHuberRidge:
    case Method::JointCatoniRidge:
      return true;
    default:
      return false;
  }
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const std::size_t workers = threads <= 1
                                  ? 1
                                  : std::min<std::size_t>(
                                        static_cast<std::size_t>(threads), count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  const auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) {
    throw std::invalid_argument("empirical_quantile: empty sample");
  }
  if (!(level > 0.0 && level <= 1.0)) {
    throw std::invalid_argument("empirical_quantile: level must be in (0, 1]");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  // Upper order statistic at ceil(level * n); the small shave guards against
  // FP representation of levels like 0.9 pushing the product just above the
  // intended integer.
  auto idx = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
  idx = std::clamp<std::size_t>(idx, 1, values.size());
  return values[idx - 1];
}

MetricsBundle compute_metrics(const std::vector<double>& errors,
                              double trim_alpha) {
  if (errors.empty()) {
    throw std::invalid_argument("compute_metrics: empty error sequence");
  }
  if (!(trim_alpha >= 0.0 && trim_alpha < 1.0)) {
    throw std::invalid_argument("compute_metrics: trim_alpha must be in [0,1)");
  }
  for (double e : errors) {
    if (!std::isfinite(e)) {
      throw std::invalid_argument("compute_metrics: non-finite error value");
    }
  }
  std::vector<double> sorted(errors);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  // Both means over the sorted sequence so that trim_alpha = 0 reproduces
  // the MAE bit-exactly.
  const auto mean_range = [&](std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += sorted[i];
    return acc / static_cast<double>(hi - lo);
  };

  MetricsBundle out;
  out.mae = mean_range(0, n);
  out.medae = n % 2 == 1 ? sorted[n / 2]
                         : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const auto k = static_cast<std::size_t>(
      std::floor(0.5 * trim_alpha * static_cast<double>(n)));
  out.trimmed_mae = mean_range(k, n - k);
  out.trim_alpha = trim_alpha;
  return out;
}

std::vector<double> kfold_cv_select(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
    const std::vector<std::vector<double>>& candidates, int folds,
    const std::function<Eigen::VectorXd(const Eigen::MatrixXd&,
                                        const Eigen::VectorXd&,
                                        const std::vector<double>&)>& fit,
    std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(X.rows());
  if (folds < 2) throw std::invalid_argument("kfold_cv_select: folds >= 2");
  if (n < static_cast<std::size_t>(folds)) {
    throw std::invalid_argument("kfold_cv_select: needs n >= folds");
  }
  if (y.size() != X.rows()) {
    throw std::invalid_argument("kfold_cv_select: response length mismatch");
  }
  if (candidates.empty()) {
    throw std::invalid_argument("kfold_cv_select: no candidates");
  }

  // Deterministic Fisher-Yates shuffle, then contiguous balanced blocks.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i + 1));
    std::swap(order[i], order[j]);
  }
  const auto fold_begin = [&](int k) {
    return n * static_cast<std::size_t>(k) / static_cast<std::size_t>(folds);
  };

  // Lexicographically sorted scan makes the tie-break "smallest candidate".
  std::vector<std::vector<double>> cands(candidates);
  std::sort(cands.begin(), cands.end());

  std::vector<double> best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (const auto& cand : cands) {
    double total = 0.0;
    bool ok = true;
    for (int k = 0; k < folds && ok; ++k) {
      const std::size_t te_lo = fold_begin(k);
      const std::size_t te_hi = fold_begin(k + 1);
      const std::size_t n_test = te_hi - te_lo;
      const std::size_t n_train = n - n_test;
      Eigen::MatrixXd Xtr(n_train, X.cols());
      Eigen::VectorXd ytr(n_train);
      Eigen::MatrixXd Xte(n_test, X.cols());
      Eigen::VectorXd yte(n_test);
      std::size_t tr = 0;
      std::size_t te = 0;
      for (std::size_t p = 0; p < n; ++p) {
        const std::size_t row = order[p];
        if (p >= te_lo && p < te_hi) {
          Xte.row(te) = X.row(row);
          yte[te++] = y[row];
        } else {
          Xtr.row(tr) = X.row(row);
          ytr[tr++] = y[row];
        }
      }
      try {
        const Eigen::VectorXd coef = fit(Xtr, ytr, cand);
        const Eigen::VectorXd pred_err = yte - Xte * coef;
        if (!pred_err.allFinite()) throw std::runtime_error("non-finite fold");
        total += pred_err.cwiseAbs().sum();
      } catch (const std::exception&) {
        ok = false;  // candidate discarded
      }
    }
    if (!ok) continue;
    const double loss = total / static_cast<double>(n);
    if (loss < best_loss) {
      best_loss = loss;
      best = cand;
    }
  }
  if (best.empty()) {
    throw std::runtime_error("kfold_cv_select: every candidate failed");
  }
  return best;
}

double select_ridge_lambda(const ExperimentConfig& cfg,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           std::uint64_t seed) {
  std::vector<std::vector<double>> cands;
  cands.reserve(cfg.ridge_lambda_grid.size());
  for (double l : cfg.ridge_lambda_grid) cands.push_back({l});
  const auto fit = [](const Eigen::MatrixXd& Xtr, const Eigen::VectorXd& ytr,
                      const std::vector<double>& c) {
    return ridge_ls(Xtr, ytr, c[0]);
  };
  return kfold_cv_select(X, y, cands, cfg.ridge_folds, fit, seed)[0];
}

namespace {

std::vector<std::vector<double>> grid_product(const std::vector<double>& grid,
                                              int arity) {
  std::vector<std::vector<double>> out{{}};
  for (int a = 0; a < arity; ++a) {
    std::vector<std::vector<double>> next;
    next.reserve(out.size() * grid.size());
    for (const auto& prefix : out) {
      for (double g : grid) {
        auto item = prefix;
        item.push_back(g);
        next.push_back(std::move(item));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace

SingleRegressionFit fit_regression(const MethodSpec& ms,
                                   const ExperimentConfig& cfg,
                                   const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& y,
                                   std::uint64_t cv_seed,
                                   double lambda_ridge) {
  SingleRegressionFit out;
  const TuningParams& tp = cfg.tp;

  const auto jc_fit = [&](const Eigen::MatrixXd& Xf, const Eigen::VectorXd& yf,
                          double c2, double c3,
                          double penalty) -> RegressionFit {
    TuningParams t = TuningParams::make(tp.eps, tp.beta, tp.c1, c2, c3);
    if (penalty <= 0.0) return joint_regression(Xf, yf, t, ms.influence);
    // The rescaled ridge lambda is the penalty coefficient lambda0; the
    // score equation is then penalised by (lambda0 * alpha1) * theta, which
    // keeps the effective shrinkage on the same scale as ridge_ls's lambda
    // (the score is ~ alpha1/v times the least-squares gradient).
    return joint_ridge(Xf, yf, t, ms.influence, penalty);
  };

  switch (ms.method) {
    case Method::Ols:
      out.coef = ols(X, y);
      return out;

    case Method::RidgeLs:
      out.coef = ridge_ls(X, y, lambda_ridge);
      out.lambda = lambda_ridge;
      return out;

    case Method::AdaptiveHuber: {
      double c1 = tp.c1;
      if (cfg.cv_constants) {
        const auto fit = [&](const Eigen::MatrixXd& Xtr,
                             const Eigen::VectorXd& ytr,
                             const std::vector<double>& c) {
          return adaptive_huber(Xtr, ytr, huber_tau(ytr, c[0]), 0.0);
        };
        c1 = kfold_cv_select(X, y, grid_product(cfg.cv_grid, 1), cfg.cv_folds,
                             fit, cv_seed)[0];
      }
      out.coef = adaptive_huber(X, y, huber_tau(y, c1), 0.0);
      out.constants = {c1};
      return out;
    }

    case Method::AdaptiveHuberRidge: {
      double c1 = tp.c1;
      double c_ah = 1.0;
      if (cfg.cv_constants) {
        const auto fit = [&](const Eigen::MatrixXd& Xtr,
                             const Eigen::VectorXd& ytr,
                             const std::vector<double>& c) {
          return adaptive_huber(Xtr, ytr, huber_tau(ytr, c[0]),
                                c[1] * lambda_ridge);
        };
        const auto sel = kfold_cv_select(X, y, grid_product(cfg.cv_grid, 2),
                                         cfg.cv_folds, fit, cv_seed);
        c1 = sel[0];
        c_ah = sel[1];
      }
      out.coef = adaptive_huber(X, y, huber_tau(y, c1), c_ah * lambda_ridge);
      out.lambda = c_ah * lambda_ridge;
      out.constants = {c1, c_ah};
      return out;
    }

    case Method::JointCatoni: {
      double c2 = tp.c2;
      double c3 = tp.c3;
      if (cfg.cv_constants) {
        const auto fit = [&](const Eigen::MatrixXd& Xtr,
                             const Eigen::VectorXd& ytr,
                             const std::vector<double>& c) {
          return jc_fit(Xtr, ytr, c[0], c[1], 0.0).coef;
        };
        const auto sel = kfold_cv_select(X, y, grid_product(cfg.cv_grid, 2),
                                         cfg.cv_folds, fit, cv_seed);
        c2 = sel[0];
        c3 = sel[1];
      }
      const RegressionFit rf = jc_fit(X, y, c2, c3, 0.0);
      out.coef = rf.coef;
      out.v_hat = rf.v_hat;
      out.converged = rf.diagnostics.converged;
      out.constants = {c2, c3};
      return out;
    }

    case Method::JointCatoniRidge: {
      double c2 = tp.c2;
      double c3 = tp.c3;
      double c_jc = 1.0;
      if (cfg.cv_constants) {
        const auto fit = [&](const Eigen::MatrixXd& Xtr,
                             const Eigen::VectorXd& ytr,
                             const std::vector<double>& c) {
          return jc_fit(Xtr, ytr, c[0], c[1], c[2] * lambda_ridge).coef;
        };
        const auto sel = kfold_cv_select(X, y, grid_product(cfg.cv_grid, 3),
                                         cfg.cv_folds, fit, cv_seed);
        c2 = sel[0];
        c3 = sel[1];
        c_jc = sel[2];
      }
      const RegressionFit rf = jc_fit(X, y, c2, c3, c_jc * lambda_ridge);
      out.coef = rf.coef;
      out.v_hat = rf.v_hat;
      out.lambda = c_jc * lambda_ridge;
      out.converged = rf.diagnostics.converged;
      out.constants = {c2, c3, c_jc};
      return out;
    }

    default:
      throw std::invalid_argument("fit_regression: not a regression method");
  }
}

SingleMeanFit fit_mean(const MethodSpec& ms, const ExperimentConfig& cfg,
                       const std::vector<double>& data, double sigma_known) {
  SingleMeanFit out;
  switch (ms.method) {
    case Method::SampleMean:
      out.theta = sample_mean_var(data).first;
      return out;
    case Method::CatoniKnownSigma:
      out.theta = catoni_mean(data, cfg.tp.eps, sigma_known);
      return out;
    case Method::CatoniSampleSigma:
      out.theta = catoni_mean_sample_sigma(data, cfg.tp.eps);
      return out;
    case Method::JointCatoniMean: {
      const JointFit jf = joint_mean_variance(data, cfg.tp, ms.influence);
      out.theta = jf.theta_hat;
      out.v_hat = jf.v_hat;
      out.converged = jf.diagnostics.converged;
      return out;
    }
    default:
      throw std::invalid_argument("fit_mean: not a mean method");
  }
}

namespace {

void validate_experiment(const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) {
    throw std::invalid_argument("experiment: no methods configured");
  }
  if (cfg.reps < 1) throw std::invalid_argument("experiment: reps >= 1");
  const bool mean_kind = is_mean_method(cfg.methods.front().method);
  for (const auto& ms : cfg.methods) {
    if (is_mean_method(ms.method) != mean_kind) {
      throw std::invalid_argument(
          "experiment: cannot mix mean and regression methods");
    }
  }
  if (mean_kind) {
    if (cfg.n < 4) throw std::invalid_argument("experiment: n too small");
  } else {
    if (cfg.d < 1 || cfg.theta_star.size() != static_cast<Eigen::Index>(cfg.d)) {
      throw std::invalid_argument(
          "experiment: regression needs theta_star of length d");
    }
    if (cfg.n <= cfg.d) throw std::invalid_argument("experiment: needs n > d");
  }
  double prev = 0.0;
  for (double q : cfg.quantile_levels) {
    if (!(q > 0.0 && q <= 1.0) || q < prev) {
      throw std::invalid_argument(
          "experiment: quantile levels must be sorted within (0, 1]");
    }
    prev = q;
  }
  cfg.noise.validate();
  (void)TuningParams::make(cfg.tp.eps, cfg.tp.beta, cfg.tp.c1, cfg.tp.c2,
                           cfg.tp.c3);
}

}  // namespace

ReplicationErrors run_replications(const ExperimentConfig& cfg) {
  validate_experiment(cfg);
  const std::size_t n_methods = cfg.methods.size();
  const auto reps = static_cast<std::size_t>(cfg.reps);
  const bool mean_kind = is_mean_method(cfg.methods.front().method);

  // Resolve per-config constants up front so configuration errors surface
  // before any replication work starts.
  double sigma_known = 0.0;
  bool any_ridge = false;
  for (const auto& ms : cfg.methods) {
    if (ms.method == Method::CatoniKnownSigma) {
      sigma_known = cfg.noise.analytic_sd();
    }
    any_ridge = any_ridge || is_ridge_method(ms.method);
  }
  const double mu_true = mean_kind ? cfg.noise.effective_mean() : 0.0;

  ReplicationErrors out;
  out.method_names.reserve(n_methods);
  for (const auto& ms : cfg.methods) {
    out.method_names.push_back(method_name(ms.method));
  }
  out.errors.assign(n_methods, std::vector<double>(reps, 0.0));
  out.failures.assign(n_methods, 0);
  std::vector<std::vector<unsigned char>> failed(
      n_methods, std::vector<unsigned char>(reps, 0));

  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    const std::uint64_t seed = cfg.base_seed ^ static_cast<std::uint64_t>(r);
    if (mean_kind) {
      const std::vector<double> data = sample_noise(cfg.noise, cfg.n, seed);
      for (std::size_t m = 0; m < n_methods; ++m) {
        try {
          const SingleMeanFit mo =
              fit_mean(cfg.methods[m], cfg, data, sigma_known);
          out.errors[m][r] = std::fabs(mo.theta - mu_true);
          failed[m][r] = mo.converged ? 0 : 1;
        } catch (const std::exception&) {
          out.errors[m][r] = std::numeric_limits<double>::infinity();
          failed[m][r] = 1;
        }
      }
    } else {
      LinearModelSpec lm;
      lm.theta_star = cfg.theta_star;
      lm.n = cfg.n;
      lm.noise = cfg.noise;
      lm.seed = seed;
      const LinearData data = gen_linear_data(lm);
      const std::uint64_t cv_seed = seed ^ kCvSalt;
      double lambda_ridge = -1.0;
      if (any_ridge) {
        lambda_ridge =
            select_ridge_lambda(cfg, data.X, data.y, seed ^ kRidgeSalt);
      }
      for (std::size_t m = 0; m < n_methods; ++m) {
        try {
          const SingleRegressionFit ro = fit_regression(
              cfg.methods[m], cfg, data.X, data.y, cv_seed, lambda_ridge);
          out.errors[m][r] = (ro.coef - cfg.theta_star).norm();
          failed[m][r] = ro.converged ? 0 : 1;
        } catch (const std::exception&) {
          out.errors[m][r] = std::numeric_limits<double>::infinity();
          failed[m][r] = 1;
        }
      }
    }
  });

  for (std::size_t m = 0; m < n_methods; ++m) {
    out.failures[m] =
        static_cast<int>(std::count(failed[m].begin(), failed[m].end(), 1));
  }
  return out;
}

namespace {

std::string format_metadata_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> experiment_metadata(
    const ExperimentConfig& cfg) {
  std::map<std::string, std::string> meta;
  meta["base_seed"] = std::to_string(cfg.base_seed);
  meta["beta"] = format_metadata_double(cfg.tp.beta);
  meta["c1"] = format_metadata_double(cfg.tp.c1);
  meta["c2"] = format_metadata_double(cfg.tp.c2);
  meta["c3"] = format_metadata_double(cfg.tp.c3);
  meta["cv_constants"] = cfg.cv_constants ? "true" : "false";
  meta["cv_folds"] = std::to_string(cfg.cv_folds);
  {
    std::ostringstream grid;
    for (std::size_t i = 0; i < cfg.cv_grid.size(); ++i) {
      if (i) grid << ',';
      grid << format_metadata_double(cfg.cv_grid[i]);
    }
    meta["cv_grid"] = grid.str();
  }
  meta["d"] = std::to_string(cfg.d);
  meta["eps"] = format_metadata_double(cfg.tp.eps);
  {
    std::ostringstream names;
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      if (m) names << ',';
      names << method_name(cfg.methods[m].method);
    }
    meta["methods"] = names.str();
  }
  meta["n"] = std::to_string(cfg.n);
  meta["noise"] = cfg.noise.name();
  bool any_joint = false;
  for (const auto& ms : cfg.methods) {
    if (ms.method == Method::JointCatoniMean ||
        ms.method == Method::JointCatoni ||
        ms.method == Method::JointCatoniRidge) {
      if (!any_joint) {
        meta["psi1"] = psi_choice_name(ms.influence.psi1);
        meta["psi2"] = psi_choice_name(ms.influence.psi2);
      }
      any_joint = true;
    }
  }
  meta["reps"] = std::to_string(cfg.reps);
  meta["rng"] = kRngVersion;
  if (cfg.theta_star.size() > 0) {
    std::ostringstream ts;
    for (Eigen::Index i = 0; i < cfg.theta_star.size(); ++i) {
      if (i) ts << ',';
      ts << format_metadata_double(cfg.theta_star[i]);
    }
    meta["theta_star"] = ts.str();
  }
  meta["trim_alpha"] = format_metadata_double(cfg.trim_alpha);
  // The worker-thread count is deliberately not echoed: outputs are
  // identical for any value, so recording it would break byte-equality
  // between reruns that only changed parallelism.
  return meta;
}

QuantileReport run_quantile_experiment(const ExperimentConfig& cfg) {
  ExperimentConfig local = cfg;
  if (local.quantile_levels.empty()) {
    for (int i = 0; i <= 20; ++i) {
      local.quantile_levels.push_back(0.90 + 0.005 * i);
    }
    local.quantile_levels.back() = 1.0;
  }
  const ReplicationErrors rr = run_replications(local);

  QuantileReport report;
  report.metadata = experiment_metadata(local);
  for (std::size_t m = 0; m < rr.method_names.size(); ++m) {
    std::vector<double> sorted(rr.errors[m]);
    std::sort(sorted.begin(), sorted.end());
    double mean = 0.0;
    for (double e : sorted) mean += e;
    mean /= static_cast<double>(sorted.size());
    report.metadata["mean_error_" + rr.method_names[m]] =
        format_metadata_double(mean);
    report.metadata["failures_" + rr.method_names[m]] =
        std::to_string(rr.failures[m]);
    for (double level : local.quantile_levels) {
      const double n = static_cast<double>(sorted.size());
      auto idx = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
      idx = std::clamp<std::size_t>(idx, 1, sorted.size());
      report.rows.push_back({rr.method_names[m], level, sorted[idx - 1]});
    }
  }
  return report;
}

SweepReport run_parameter_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) {
    throw std::invalid_argument("run_parameter_sweep: no sweep configured");
  }
  const SweepSpec& sw = *cfg.sweep;
  if (!(sw.step > 0.0) || !(sw.to >= sw.from)) {
    throw std::invalid_argument("run_parameter_sweep: bad sweep range");
  }
  std::vector<double> values;
  for (double p = sw.from; p <= sw.to + 1e-12; p += sw.step) {
    values.push_back(p);
  }

  SweepReport report;
  report.metadata = experiment_metadata(cfg);
  report.metadata["sweep"] = sw.parameter + ":" +
                             format_metadata_double(sw.from) + ":" +
                             format_metadata_double(sw.to) + ":" +
                             format_metadata_double(sw.step);

  std::vector<std::vector<double>> q99(cfg.methods.size());
  std::vector<std::string> names;
  for (double p : values) {
    ExperimentConfig point = cfg;
    point.sweep.reset();
    if (sw.parameter == "sigma") {
      point.noise.sigma = p;
    } else if (sw.parameter == "df") {
      point.noise.df = p;
    } else if (sw.parameter == "shape") {
      point.noise.shape = p;
    } else {
      throw std::invalid_argument("run_parameter_sweep: unknown parameter '" +
                                  sw.parameter + "'");
    }
    point.noise.validate();
    const ReplicationErrors rr = run_replications(point);
    names = rr.method_names;
    for (std::size_t m = 0; m < rr.method_names.size(); ++m) {
      q99[m].push_back(empirical_quantile(rr.errors[m], 0.99));
    }
  }
  for (std::size_t m = 0; m < names.size(); ++m) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      report.rows.push_back({names[m], values[i], q99[m][i]});
    }
  }
  return report;
}

LoocvResult loocv_errors(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const MethodSpec& method,
                         const ExperimentConfig& cfg) {
  const Eigen::Index n = y.size();
  if (n < 3) throw std::invalid_argument("loocv_errors: needs n >= 3");

  LoocvResult result;
  result.errors.assign(static_cast<std::size_t>(n),
                       std::numeric_limits<double>::quiet_NaN());
  const bool mean_kind = is_mean_method(method.method);
  if (!mean_kind && (X.rows() != n || X.cols() < 1)) {
    throw std::invalid_argument("loocv_errors: design/response mismatch");
  }

  std::vector<int> fail_flags(static_cast<std::size_t>(n), 0);
  parallel_for(static_cast<std::size_t>(n), cfg.threads, [&](std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double prediction = 0.0;
    try {
      if (mean_kind) {
        std::vector<double> rest;
        rest.reserve(static_cast<std::size_t>(n) - 1);
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r != ii) rest.push_back(y[r]);
        }
        prediction = fit_mean(method, cfg, rest, 0.0).theta;
      } else {
        Eigen::MatrixXd Xr(n - 1, X.cols());
        Eigen::VectorXd yr(n - 1);
        Eigen::Index w = 0;
        for (Eigen::Index r = 0; r < n; ++r) {
          if (r == ii) continue;
          Xr.row(w) = X.row(r);
          yr[w++] = y[r];
        }
        const std::uint64_t cv_seed =
            cfg.base_seed ^ kCvSalt ^ static_cast<std::uint64_t>(i);
        double lambda_ridge = -1.0;
        if (is_ridge_method(method.method)) {
          lambda_ridge = select_ridge_lambda(
              cfg, Xr, yr,
              cfg.base_seed ^ kRidgeSalt ^ static_cast<std::uint64_t>(i));
        }
        const SingleRegressionFit ro =
            fit_regression(method, cfg, Xr, yr, cv_seed, lambda_ridge);
        prediction = X.row(ii).dot(ro.coef);
      }
      result.errors[i] = std::fabs(y[ii] - prediction);
    } catch (const std::exception&) {
      fail_flags[i] = 1;  // NaN marker stays in place
    }
  });
  result.failures =
      static_cast<int>(std::count(fail_flags.begin(), fail_flags.end(), 1));
  return result;
}

std::vector<std::size_t> sis_screen(const Eigen::MatrixXd& X,
                                    const Eigen::VectorXd& y,
                                    std::size_t keep) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2 || d < 1) throw std::invalid_argument("sis_screen: empty input");
  if (y.size() != n) throw std::invalid_argument("sis_screen: length mismatch");
  if (keep < 1 || keep > static_cast<std::size_t>(d)) {
    throw std::invalid_argument("sis_screen: keep must be in [1, d]");
  }

  const Eigen::VectorXd yc = y.array() - y.mean();
  const double y_ss = yc.squaredNorm();
  std::vector<double> strength(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const Eigen::VectorXd xc = X.col(j).array() - X.col(j).mean();
    const double x_ss = xc.squaredNorm();
    if (x_ss == 0.0) {
      strength[static_cast<std::size_t>(j)] = -1.0;  // constant column: last
    } else if (y_ss == 0.0) {
      strength[static_cast<std::size_t>(j)] = 0.0;
    } else {
      strength[static_cast<std::size_t>(j)] =
          std::fabs(xc.dot(yc)) / std::sqrt(x_ss * y_ss);
    }
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (strength[a] != strength[b]) return strength[a] > strength[b];
    return a < b;
  });
  idx.resize(keep);
  return idx;
}

}  // namespace catoni
