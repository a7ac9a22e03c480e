#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "catoni/config.hpp"
#include "catoni/csv.hpp"
#include "catoni/estimators.hpp"
#include "catoni/harness.hpp"

namespace {

using namespace catoni;

// Thrown once setup (flags, config, data) succeeded; maps to exit code 3.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto numeric_phase(F&& f) {
  try {
    return f();
  } catch (const std::exception& err) {
    throw NumericError(err.what());
  }
}

CsvReadResult load_data(const std::string& path, bool has_header) {
  try {
    return read_csv(path, has_header);
  } catch (const std::exception& err) {
    throw ConfigError(0, err.what());
  }
}

Eigen::Index resolve_response(const CsvReadResult& csv,
                              const std::string& response) {
  if (response.empty()) {
    if (csv.values.cols() == 1) return 0;
    throw ConfigError(0, "multi-column data needs a response column "
                         "(config key 'response' or --response)");
  }
  for (std::size_t j = 0; j < csv.header.size(); ++j) {
    if (csv.header[j] == response) return static_cast<Eigen::Index>(j);
  }
  try {
    std::size_t consumed = 0;
    const long idx = std::stol(response, &consumed);
    if (consumed == response.size() && idx >= 0 && idx < csv.values.cols()) {
      return static_cast<Eigen::Index>(idx);
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(0, "response column '" + response + "' not found");
}

void split_xy(const Eigen::MatrixXd& all, Eigen::Index response_col,
              Eigen::MatrixXd& X, Eigen::VectorXd& y) {
  const Eigen::Index n = all.rows();
  const Eigen::Index d = all.cols() - 1;
  if (d < 1) throw ConfigError(0, "data has no predictor columns");
  X.resize(n, d);
  y = all.col(response_col);
  Eigen::Index w = 0;
  for (Eigen::Index j = 0; j < all.cols(); ++j) {
    if (j == response_col) continue;
    X.col(w++) = all.col(j);
  }
}

std::vector<std::string> constant_names(Method m) {
  switch (m) {
    case Method::AdaptiveHuber:
      return {"c1"};
    case Method::AdaptiveHuberRidge:
      return {"c1", "c_ridge_scale"};
    case Method::JointCatoni:
      return {"c2", "c3"};
    case Method::JointCatoniRidge:
      return {"c2", "c3", "c_ridge_scale"};
    default:
      return {};
  }
}

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::string method;
  std::string response;
  bool no_header = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

ToolConfig resolved_config(const CommonArgs& args) {
  ToolConfig cfg;
  if (!args.config_path.empty()) cfg = parse_config(args.config_path);
  if (args.seed) cfg.experiment.base_seed = *args.seed;
  if (args.threads) {
    if (*args.threads < 1) throw ConfigError(0, "--threads must be >= 1");
    cfg.experiment.threads = *args.threads;
  }
  if (!args.response.empty()) cfg.response = args.response;
  return cfg;
}

MethodSpec make_method(const ToolConfig& cfg, const std::string& name) {
  MethodSpec ms;
  try {
    ms.method = parse_method(name);
  } catch (const std::exception& err) {
    throw ConfigError(0, err.what());
  }
  ms.influence = cfg.influence;
  return ms;
}

int cmd_simulate(const CommonArgs& args, bool sweep) {
  ToolConfig cfg = resolved_config(args);
  if (cfg.experiment.methods.empty()) {
    throw ConfigError(0, "config must list at least one method");
  }
  if (sweep) {
    if (!cfg.experiment.sweep) {
      throw ConfigError(0, "sweep subcommand needs a 'sweep=' config key");
    }
    const SweepReport report =
        numeric_phase([&] { return run_parameter_sweep(cfg.experiment); });
    write_report(report, args.out_path);
  } else {
    const QuantileReport report =
        numeric_phase([&] { return run_quantile_experiment(cfg.experiment); });
    write_report(report, args.out_path);
  }
  return 0;
}

int cmd_estimate_mean(const CommonArgs& args) {
  ToolConfig cfg = resolved_config(args);
  const CsvReadResult csv = load_data(args.data_path, !args.no_header);
  const Eigen::Index col = resolve_response(csv, cfg.response);
  if (csv.values.rows() < 4) throw ConfigError(0, "need at least 4 rows");
  std::vector<double> data(static_cast<std::size_t>(csv.values.rows()));
  for (Eigen::Index i = 0; i < csv.values.rows(); ++i) {
    data[static_cast<std::size_t>(i)] = csv.values(i, col);
  }

  std::vector<MethodSpec> methods = cfg.experiment.methods;
  if (methods.empty()) {
    for (const char* name :
         {"sample-mean", "catoni-sample", "joint-catoni-mean"}) {
      methods.push_back(make_method(cfg, name));
    }
  }
  double sigma_known = 0.0;
  for (const auto& ms : methods) {
    if (!is_mean_method(ms.method)) {
      throw ConfigError(0, "estimate-mean accepts mean methods only, got '" +
                               method_name(ms.method) + "'");
    }
    if (ms.method == Method::CatoniKnownSigma) {
      sigma_known = cfg.experiment.noise.analytic_sd();
    }
  }

  std::vector<std::pair<std::string, double>> rows;
  for (const auto& ms : methods) {
    const SingleMeanFit fit = numeric_phase(
        [&] { return fit_mean(ms, cfg.experiment, data, sigma_known); });
    const std::string name = method_name(ms.method);
    rows.emplace_back("theta_" + name, fit.theta);
    if (ms.method == Method::JointCatoniMean) {
      rows.emplace_back("v_" + name, fit.v_hat);
      rows.emplace_back("converged_" + name, fit.converged ? 1.0 : 0.0);
    }
  }
  auto meta = config_metadata(cfg);
  meta["data_rows"] = std::to_string(csv.values.rows());
  meta["dropped_rows"] = std::to_string(csv.dropped_rows);
  write_named_values(rows, meta, args.out_path);
  return 0;
}

int cmd_regress(const CommonArgs& args, bool ridge_mode) {
  ToolConfig cfg = resolved_config(args);
  const CsvReadResult csv = load_data(args.data_path, !args.no_header);
  const Eigen::Index col = resolve_response(csv, cfg.response);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  split_xy(csv.values, col, X, y);
  if (X.rows() <= X.cols()) throw ConfigError(0, "need n > d observations");

  const std::string default_method =
      ridge_mode ? "joint-catoni-ridge" : "joint-catoni";
  const MethodSpec ms =
      make_method(cfg, args.method.empty() ? default_method : args.method);
  if (is_mean_method(ms.method)) {
    throw ConfigError(0, "regress/ridge need a regression method");
  }
  if (ridge_mode != is_ridge_method(ms.method)) {
    throw ConfigError(0, ridge_mode ? "ridge needs a ridge-family method"
                                    : "regress needs an unpenalized method");
  }

  std::vector<std::pair<std::string, double>> rows;
  auto meta = config_metadata(cfg);

  Eigen::VectorXd coef;
  if (ridge_mode && ms.method == Method::JointCatoniRidge && cfg.lambda0 > 0.0) {
    // Direct penalty scale, bypassing the CV rescaling protocol.
    const RegressionFit fit = numeric_phase([&] {
      return joint_ridge(X, y, cfg.experiment.tp, ms.influence, cfg.lambda0);
    });
    coef = fit.coef;
    rows.emplace_back("v_hat", fit.v_hat);
    rows.emplace_back("lambda", fit.lambda);
    rows.emplace_back("converged", fit.diagnostics.converged ? 1.0 : 0.0);
  } else {
    double lambda_ridge = -1.0;
    if (is_ridge_method(ms.method)) {
      lambda_ridge = cfg.ridge_lambda >= 0.0
                         ? cfg.ridge_lambda
                         : numeric_phase([&] {
                             return select_ridge_lambda(
                                 cfg.experiment, X, y,
                                 cfg.experiment.base_seed);
                           });
      meta["lambda_ridge"] = format_double(lambda_ridge);
    }
    const SingleRegressionFit fit = numeric_phase([&] {
      return fit_regression(ms, cfg.experiment, X, y, cfg.experiment.base_seed,
                            lambda_ridge);
    });
    coef = fit.coef;
    const auto names = constant_names(ms.method);
    for (std::size_t i = 0; i < fit.constants.size(); ++i) {
      rows.emplace_back(names[i], fit.constants[i]);
    }
    if (ms.method == Method::JointCatoni ||
        ms.method == Method::JointCatoniRidge) {
      rows.emplace_back("v_hat", fit.v_hat);
    }
    if (is_ridge_method(ms.method)) rows.emplace_back("lambda", fit.lambda);
    rows.emplace_back("converged", fit.converged ? 1.0 : 0.0);
  }
  std::vector<std::pair<std::string, double>> out_rows;
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    out_rows.emplace_back("coef_" + std::to_string(j), coef[j]);
  }
  out_rows.insert(out_rows.end(), rows.begin(), rows.end());

  meta["method"] = method_name(ms.method);
  meta["data_rows"] = std::to_string(csv.values.rows());
  meta["dropped_rows"] = std::to_string(csv.dropped_rows);
  write_named_values(out_rows, meta, args.out_path);
  return 0;
}

int cmd_cv(const CommonArgs& args) {
  ToolConfig cfg = resolved_config(args);
  cfg.experiment.cv_constants = true;
  const CsvReadResult csv = load_data(args.data_path, !args.no_header);
  const Eigen::Index col = resolve_response(csv, cfg.response);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  split_xy(csv.values, col, X, y);

  const MethodSpec ms =
      make_method(cfg, args.method.empty() ? "joint-catoni" : args.method);
  if (is_mean_method(ms.method)) {
    throw ConfigError(0, "cv needs a regression method");
  }

  std::vector<std::pair<std::string, double>> rows;
  double lambda_ridge = -1.0;
  if (is_ridge_method(ms.method)) {
    lambda_ridge = numeric_phase([&] {
      return select_ridge_lambda(cfg.experiment, X, y,
                                 cfg.experiment.base_seed);
    });
    rows.emplace_back("lambda_ridge", lambda_ridge);
  }
  const SingleRegressionFit fit = numeric_phase([&] {
    return fit_regression(ms, cfg.experiment, X, y, cfg.experiment.base_seed,
                          lambda_ridge);
  });
  const auto names = constant_names(ms.method);
  for (std::size_t i = 0; i < fit.constants.size(); ++i) {
    rows.emplace_back(names[i], fit.constants[i]);
  }
  if (is_ridge_method(ms.method)) rows.emplace_back("lambda", fit.lambda);

  auto meta = config_metadata(cfg);
  meta["method"] = method_name(ms.method);
  meta["data_rows"] = std::to_string(csv.values.rows());
  meta["dropped_rows"] = std::to_string(csv.dropped_rows);
  write_named_values(rows, meta, args.out_path);
  return 0;
}

int cmd_loocv(const CommonArgs& args) {
  ToolConfig cfg = resolved_config(args);
  const CsvReadResult csv = load_data(args.data_path, !args.no_header);
  const Eigen::Index col = resolve_response(csv, cfg.response);

  const MethodSpec ms =
      make_method(cfg, args.method.empty() ? "ols" : args.method);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  if (is_mean_method(ms.method)) {
    y = csv.values.col(col);
    X.resize(y.size(), 1);
    X.setOnes();
  } else {
    split_xy(csv.values, col, X, y);
  }

  const LoocvResult loo =
      numeric_phase([&] { return loocv_errors(X, y, ms, cfg.experiment); });
  std::vector<double> finite;
  finite.reserve(loo.errors.size());
  for (double e : loo.errors) {
    if (std::isfinite(e)) finite.push_back(e);
  }
  if (finite.empty()) throw NumericError("every leave-one-out fit failed");
  const MetricsBundle metrics = numeric_phase(
      [&] { return compute_metrics(finite, cfg.experiment.trim_alpha); });

  auto meta = config_metadata(cfg);
  meta["method"] = method_name(ms.method);
  meta["data_rows"] = std::to_string(csv.values.rows());
  meta["dropped_rows"] = std::to_string(csv.dropped_rows);
  meta["loocv_failures"] = std::to_string(loo.failures);
  write_metrics({{method_name(ms.method), metrics}}, meta, args.out_path);
  return 0;
}

int cmd_screen(const CommonArgs& args, std::optional<std::size_t> keep_flag) {
  ToolConfig cfg = resolved_config(args);
  const CsvReadResult csv = load_data(args.data_path, !args.no_header);
  const Eigen::Index col = resolve_response(csv, cfg.response);
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  split_xy(csv.values, col, X, y);

  const std::size_t keep = keep_flag ? *keep_flag : cfg.sis_keep;
  if (keep < 1) {
    throw ConfigError(0, "screen needs --keep or config key 'sis_keep'");
  }
  if (keep > static_cast<std::size_t>(X.cols())) {
    throw ConfigError(0, "keep exceeds the number of predictors");
  }
  const auto selected = numeric_phase([&] { return sis_screen(X, y, keep); });

  std::vector<std::pair<std::string, double>> rows;
  for (std::size_t r = 0; r < selected.size(); ++r) {
    rows.emplace_back("rank_" + std::to_string(r),
                      static_cast<double>(selected[r]));
  }
  auto meta = config_metadata(cfg);
  meta["data_rows"] = std::to_string(csv.values.rows());
  meta["dropped_rows"] = std::to_string(csv.dropped_rows);
  meta["keep"] = std::to_string(keep);
  write_named_values(rows, meta, args.out_path);
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_config,
                bool needs_data, bool has_method) {
  auto* config =
      cmd->add_option("--config", args.config_path, "key=value config file");
  if (needs_config) config->required();
  config->check(CLI::ExistingFile);
  if (needs_data) {
    cmd->add_option("--data", args.data_path, "input CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--response", args.response,
                    "response column (header name or 0-based index)");
    cmd->add_flag("--no-header", args.no_header,
                  "input CSV has no header row");
  }
  if (has_method) {
    cmd->add_option("--method", args.method, "method name");
  }
  cmd->add_option("--out", args.out_path, "output CSV path")->required();
  cmd->add_option("--seed", args.seed, "base seed override");
  cmd->add_option("--threads", args.threads, "worker thread count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint Catoni trend/variance estimation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::optional<std::size_t> keep_flag;

  auto* sim = app.add_subcommand(
      "simulate", "Seeded replication study with error-quantile report");
  add_common(sim, args, /*config*/ true, /*data*/ false, /*method*/ false);

  auto* swp = app.add_subcommand(
      "sweep", "99%-quantile curve over a distribution-parameter sweep");
  add_common(swp, args, true, false, false);

  auto* est = app.add_subcommand("estimate-mean",
                                 "Mean/variance estimates for one sample");
  add_common(est, args, false, true, false);

  auto* reg = app.add_subcommand("regress",
                                 "Fit one regression method to a dataset");
  add_common(reg, args, false, true, true);

  auto* rdg = app.add_subcommand("ridge",
                                 "Fit one penalized regression method");
  add_common(rdg, args, false, true, true);

  auto* cv = app.add_subcommand(
      "cv", "Cross-validated tuning-constant selection for one method");
  add_common(cv, args, false, true, true);

  auto* loo = app.add_subcommand(
      "loocv", "Leave-one-out prediction-error metrics for one method");
  add_common(loo, args, false, true, true);

  auto* scr = app.add_subcommand("screen",
                                 "Correlation screening of predictors");
  add_common(scr, args, false, true, false);
  scr->add_option("--keep", keep_flag, "number of predictors to keep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(args, false);
    if (swp->parsed()) return cmd_simulate(args, true);
    if (est->parsed()) return cmd_estimate_mean(args);
    if (reg->parsed()) return cmd_regress(args, false);
    if (rdg->parsed()) return cmd_regress(args, true);
    if (cv->parsed()) return cmd_cv(args);
    if (loo->parsed()) return cmd_loocv(args);
    if (scr->parsed()) return cmd_screen(args, keep_flag);
    return 2;
  } catch (const NumericError& err) {
    std::fprintf(stderr, "numeric failure: %s\n", err.what());
    return 3;
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return 2;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 2;
  }
}
