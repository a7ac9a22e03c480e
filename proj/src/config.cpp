#include "catoni/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace catoni {

namespace {

std::string trim(const std::string& s) {
  std::string::size_type lo = 0;
  std::string::size_type hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

double parse_real(int line, const std::string& key, const std::string& value) {
  try {
    std::size_t consumed = 0;
    const double v = std::stod(value, &consumed);
    if (consumed != value.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(line, key + ": expected a real number, got '" + value + "'");
  }
}

long long parse_integer(int line, const std::string& key,
                        const std::string& value) {
  try {
    std::size_t consumed = 0;
    const long long v = std::stoll(value, &consumed);
    if (consumed != value.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(line, key + ": expected an integer, got '" + value + "'");
  }
}

bool parse_flag(int line, const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(line, key + ": expected true/false, got '" + value + "'");
}

std::vector<double> parse_real_list(int line, const std::string& key,
                                    const std::string& value) {
  std::vector<double> out;
  std::string::size_type start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const std::string item = trim(value.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    if (item.empty()) {
      throw ConfigError(line, key + ": empty list element");
    }
    out.push_back(parse_real(line, key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError(line, key + ": empty list");
  return out;
}

}  // namespace

ToolConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");

  ToolConfig cfg;
  ExperimentConfig& ex = cfg.experiment;
  PsiChoice psi1{};
  PsiChoice psi2{};
  std::vector<std::string> method_names;
  int methods_line = 0;
  std::set<std::string> seen;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line_no, "expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "missing key");
    if (value.empty()) throw ConfigError(line_no, key + ": missing value");
    if (!seen.insert(key).second) {
      throw ConfigError(line_no, "duplicate key '" + key + "'");
    }

    try {
      if (key == "model") {
        if (value != "mean" && value != "regression" && value != "ridge") {
          throw ConfigError(line_no, "model: expected mean|regression|ridge");
        }
        cfg.model = value;
      } else if (key == "methods") {
        methods_line = line_no;
        std::string::size_type start = 0;
        while (start <= value.size()) {
          const auto comma = value.find(',', start);
          const std::string item = trim(value.substr(
              start,
              comma == std::string::npos ? std::string::npos : comma - start));
          if (item.empty()) throw ConfigError(line_no, "methods: empty element");
          method_names.push_back(item);
          if (comma == std::string::npos) break;
          start = comma + 1;
        }
      } else if (key == "reps") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 1) throw ConfigError(line_no, "reps: must be >= 1");
        ex.reps = static_cast<int>(v);
      } else if (key == "n") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 1) throw ConfigError(line_no, "n: must be >= 1");
        ex.n = static_cast<std::size_t>(v);
      } else if (key == "d") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 0) throw ConfigError(line_no, "d: must be >= 0");
        ex.d = static_cast<std::size_t>(v);
      } else if (key == "noise") {
        ex.noise = NoiseSpec::parse(value);
      } else if (key == "theta_star") {
        const auto values = parse_real_list(line_no, key, value);
        ex.theta_star.resize(static_cast<Eigen::Index>(values.size()));
        for (std::size_t i = 0; i < values.size(); ++i) {
          ex.theta_star[static_cast<Eigen::Index>(i)] = values[i];
        }
      } else if (key == "eps") {
        ex.tp.eps = parse_real(line_no, key, value);
      } else if (key == "beta") {
        ex.tp.beta = parse_real(line_no, key, value);
      } else if (key == "c1") {
        ex.tp.c1 = parse_real(line_no, key, value);
      } else if (key == "c2") {
        ex.tp.c2 = parse_real(line_no, key, value);
      } else if (key == "c3") {
        ex.tp.c3 = parse_real(line_no, key, value);
      } else if (key == "psi1") {
        psi1 = parse_psi_choice(value);
      } else if (key == "psi2") {
        psi2 = parse_psi_choice(value);
      } else if (key == "quantiles") {
        ex.quantile_levels = parse_real_list(line_no, key, value);
      } else if (key == "sweep") {
        // parameter:from:to:step
        std::vector<std::string> parts;
        std::string::size_type start = 0;
        while (start <= value.size()) {
          const auto colon = value.find(':', start);
          parts.push_back(trim(value.substr(
              start,
              colon == std::string::npos ? std::string::npos : colon - start)));
          if (colon == std::string::npos) break;
          start = colon + 1;
        }
        if (parts.size() != 4) {
          throw ConfigError(line_no, "sweep: expected parameter:from:to:step");
        }
        SweepSpec sw;
        sw.parameter = parts[0];
        sw.from = parse_real(line_no, key, parts[1]);
        sw.to = parse_real(line_no, key, parts[2]);
        sw.step = parse_real(line_no, key, parts[3]);
        if (sw.parameter != "sigma" && sw.parameter != "df" &&
            sw.parameter != "shape") {
          throw ConfigError(line_no, "sweep: parameter must be sigma|df|shape");
        }
        if (!(sw.step > 0.0) || !(sw.to >= sw.from)) {
          throw ConfigError(line_no, "sweep: need step > 0 and to >= from");
        }
        ex.sweep = sw;
      } else if (key == "seed" || key == "base_seed") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 0) throw ConfigError(line_no, key + ": must be >= 0");
        ex.base_seed = static_cast<std::uint64_t>(v);
      } else if (key == "threads") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 1) throw ConfigError(line_no, "threads: must be >= 1");
        ex.threads = static_cast<int>(v);
      } else if (key == "trim_alpha") {
        const double v = parse_real(line_no, key, value);
        if (!(v >= 0.0 && v < 1.0)) {
          throw ConfigError(line_no, "trim_alpha: must be in [0, 1)");
        }
        ex.trim_alpha = v;
      } else if (key == "cv_constants") {
        ex.cv_constants = parse_flag(line_no, key, value);
      } else if (key == "cv_grid") {
        ex.cv_grid = parse_real_list(line_no, key, value);
      } else if (key == "cv_folds") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 2) throw ConfigError(line_no, "cv_folds: must be >= 2");
        ex.cv_folds = static_cast<int>(v);
      } else if (key == "ridge_lambda_grid") {
        ex.ridge_lambda_grid = parse_real_list(line_no, key, value);
      } else if (key == "ridge_folds") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 2) throw ConfigError(line_no, "ridge_folds: must be >= 2");
        ex.ridge_folds = static_cast<int>(v);
      } else if (key == "lambda0") {
        const double v = parse_real(line_no, key, value);
        if (v < 0.0) throw ConfigError(line_no, "lambda0: must be >= 0");
        cfg.lambda0 = v;
      } else if (key == "ridge_lambda") {
        const double v = parse_real(line_no, key, value);
        if (v < 0.0) throw ConfigError(line_no, "ridge_lambda: must be >= 0");
        cfg.ridge_lambda = v;
      } else if (key == "response") {
        cfg.response = value;
      } else if (key == "sis_keep") {
        const long long v = parse_integer(line_no, key, value);
        if (v < 1) throw ConfigError(line_no, "sis_keep: must be >= 1");
        cfg.sis_keep = static_cast<std::size_t>(v);
      } else {
        throw ConfigError(line_no, "unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& err) {
      throw ConfigError(line_no, key + ": " + err.what());
    }
  }

  // Cross-field validation and defaults that need the whole file.
  try {
    (void)TuningParams::make(ex.tp.eps, ex.tp.beta, ex.tp.c1, ex.tp.c2,
                             ex.tp.c3);
  } catch (const std::exception& err) {
    throw ConfigError(0, err.what());
  }
  ex.noise.validate();

  const InfluenceSpec influence{psi1, psi2, ex.tp.beta};
  cfg.influence = influence;
  for (const auto& name : method_names) {
    MethodSpec ms;
    try {
      ms.method = parse_method(name);
    } catch (const std::exception& err) {
      throw ConfigError(methods_line, err.what());
    }
    ms.influence = influence;
    ex.methods.push_back(ms);
  }

  if (ex.theta_star.size() > 0) {
    if (ex.d == 0) {
      ex.d = static_cast<std::size_t>(ex.theta_star.size());
    } else if (ex.d != static_cast<std::size_t>(ex.theta_star.size())) {
      throw ConfigError(0, "theta_star length does not match d");
    }
  } else if (ex.d > 0) {
    ex.theta_star = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ex.d));
  }
  return cfg;
}

std::map<std::string, std::string> config_metadata(const ToolConfig& cfg) {
  auto meta = experiment_metadata(cfg.experiment);
  meta["model"] = cfg.model;
  const auto fmt = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  if (cfg.model == "ridge") meta["lambda0"] = fmt(cfg.lambda0);
  if (cfg.ridge_lambda >= 0.0) meta["ridge_lambda"] = fmt(cfg.ridge_lambda);
  if (!cfg.response.empty()) meta["response"] = cfg.response;
  if (cfg.sis_keep > 0) meta["sis_keep"] = std::to_string(cfg.sis_keep);
  return meta;
}

}  // namespace catoni
