#include "catoni/datagen.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace catoni {

double Rng::uniform() {
  // 53-bit mantissa, offset by half a step: never exactly 0 or 1.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_normal_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw std::invalid_argument("gamma shape must be positive");
  }
  if (shape < 1.0) {
    // Boost: draw the uniform first, then the shape+1 variate.
    const double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze method.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double cube;
    do {
      x = normal();
      cube = 1.0 + c * x;
    } while (cube <= 0.0);
    cube = cube * cube * cube;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * cube;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - cube + std::log(cube))) {
      return d * cube;
    }
  }
}

double Rng::chi_square(double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi_square df must be positive");
  return 2.0 * gamma(0.5 * df);
}

double Rng::student_t(double df) {
  if (!(df > 0.0)) throw std::invalid_argument("student_t df must be positive");
  const double z = normal();  // numerator drawn first (pinned order)
  return z / std::sqrt(chi_square(df) / df);
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_index: zero bound");
  // Plain modulo mapping, pinned; the bias is ~bound/2^64 and irrelevant here.
  return engine_() % bound;
}

NoiseSpec NoiseSpec::normal(double sigma) {
  NoiseSpec s;
  s.family = NoiseFamily::Normal;
  s.sigma = sigma;
  s.center = false;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::student_t(double df) {
  NoiseSpec s;
  s.family = NoiseFamily::StudentT;
  s.df = df;
  s.center = false;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::pareto(double scale, double shape) {
  NoiseSpec s;
  s.family = NoiseFamily::Pareto;
  s.scale = scale;
  s.shape = shape;
  s.center = true;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::frechet(double location, double scale, double shape) {
  NoiseSpec s;
  s.family = NoiseFamily::Frechet;
  s.location = location;
  s.scale = scale;
  s.shape = shape;
  s.center = true;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::double_pareto(double scale, double shape) {
  NoiseSpec s;
  s.family = NoiseFamily::DoublePareto;
  s.scale = scale;
  s.shape = shape;
  s.center = false;  // symmetric, mean already zero
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::half_t(double df) {
  NoiseSpec s;
  s.family = NoiseFamily::HalfT;
  s.df = df;
  s.center = true;
  s.validate();
  return s;
}

void NoiseSpec::validate() const {
  switch (family) {
    case NoiseFamily::Normal:
      if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("normal noise: sigma must be >= 0");
      }
      return;
    case NoiseFamily::StudentT:
    case NoiseFamily::HalfT:
      if (!(df > 0.0) || !std::isfinite(df)) {
        throw std::invalid_argument("t noise: df must be positive");
      }
      if (family == NoiseFamily::HalfT && center && !(df > 1.0)) {
        throw std::invalid_argument(
            "half-t noise: centering needs df > 1 (finite mean)");
      }
      return;
    case NoiseFamily::Pareto:
    case NoiseFamily::Frechet:
    case NoiseFamily::DoublePareto:
      if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw std::invalid_argument("noise scale must be positive");
      }
      if (!(shape > 0.0) || !std::isfinite(shape)) {
        throw std::invalid_argument("noise shape must be positive");
      }
      if (!std::isfinite(location)) {
        throw std::invalid_argument("noise location must be finite");
      }
      if (center && family != NoiseFamily::DoublePareto && !(shape > 1.0)) {
        throw std::invalid_argument(
            "centering needs shape > 1 (finite mean)");
      }
      return;
  }
  throw std::logic_error("unreachable noise family");
}

double NoiseSpec::analytic_mean() const {
  validate();
  switch (family) {
    case NoiseFamily::Normal:
      return 0.0;
    case NoiseFamily::StudentT:
      if (!(df > 1.0)) throw std::domain_error("t mean needs df > 1");
      return 0.0;
    case NoiseFamily::Pareto:
      if (!(shape > 1.0)) throw std::domain_error("Pareto mean needs shape > 1");
      return scale * shape / (shape - 1.0);
    case NoiseFamily::Frechet:
      if (!(shape > 1.0)) {
        throw std::domain_error("Frechet mean needs shape > 1");
      }
      return location + scale * std::tgamma(1.0 - 1.0 / shape);
    case NoiseFamily::DoublePareto:
      if (!(shape > 1.0)) {
        throw std::domain_error("double Pareto mean needs shape > 1");
      }
      return 0.0;
    case NoiseFamily::HalfT: {
      if (!(df > 1.0)) throw std::domain_error("half-t mean needs df > 1");
      // E|T_df| = 2 sqrt(df) Gamma((df+1)/2) / (sqrt(pi) (df-1) Gamma(df/2))
      return 2.0 * std::sqrt(df) * std::tgamma(0.5 * (df + 1.0)) /
             (std::sqrt(std::numbers::pi) * (df - 1.0) * std::tgamma(0.5 * df));
    }
  }
  throw std::logic_error("unreachable noise family");
}

double NoiseSpec::analytic_sd() const {
  validate();
  switch (family) {
    case NoiseFamily::Normal:
      return sigma;
    case NoiseFamily::StudentT:
      if (!(df > 2.0)) throw std::domain_error("t sd needs df > 2");
      return std::sqrt(df / (df - 2.0));
    case NoiseFamily::Pareto:
      if (!(shape > 2.0)) throw std::domain_error("Pareto sd needs shape > 2");
      return scale / (shape - 1.0) * std::sqrt(shape / (shape - 2.0));
    case NoiseFamily::Frechet: {
      if (!(shape > 2.0)) throw std::domain_error("Frechet sd needs shape > 2");
      const double g1 = std::tgamma(1.0 - 1.0 / shape);
      const double g2 = std::tgamma(1.0 - 2.0 / shape);
      return scale * std::sqrt(g2 - g1 * g1);
    }
    case NoiseFamily::DoublePareto:
      if (!(shape > 2.0)) {
        throw std::domain_error("double Pareto sd needs shape > 2");
      }
      return scale * std::sqrt(shape / (shape - 2.0));
    case NoiseFamily::HalfT: {
      if (!(df > 2.0)) throw std::domain_error("half-t sd needs df > 2");
      const double m = analytic_mean();
      return std::sqrt(df / (df - 2.0) - m * m);
    }
  }
  throw std::logic_error("unreachable noise family");
}

double NoiseSpec::effective_mean() const {
  if (center) return 0.0;
  switch (family) {
    case NoiseFamily::Normal:
    case NoiseFamily::StudentT:
    case NoiseFamily::DoublePareto:
      return 0.0;  // symmetric families are mean-zero as drawn
    default:
      return analytic_mean();
  }
}

namespace {

std::vector<std::string> split_colon(const std::string& text) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  for (;;) {
    const auto pos = text.find(':', start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_real(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad " + what + " in noise spec: '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw std::invalid_argument("bad " + what + " in noise spec: '" + text + "'");
  }
  return value;
}

std::string format_real(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

NoiseSpec NoiseSpec::parse(const std::string& text) {
  const std::vector<std::string> parts = split_colon(text);
  const std::string& family = parts[0];
  const auto want = [&](std::size_t n_args) {
    if (parts.size() != n_args + 1) {
      throw std::invalid_argument("noise spec '" + text +
                                  "': wrong number of parameters");
    }
  };
  if (family == "normal") {
    want(1);
    return NoiseSpec::normal(parse_real(parts[1], "sigma"));
  }
  if (family == "t") {
    want(1);
    return NoiseSpec::student_t(parse_real(parts[1], "df"));
  }
  if (family == "pareto") {
    want(2);
    return NoiseSpec::pareto(parse_real(parts[1], "scale"),
                             parse_real(parts[2], "shape"));
  }
  if (family == "frechet") {
    want(3);
    return NoiseSpec::frechet(parse_real(parts[1], "location"),
                              parse_real(parts[2], "scale"),
                              parse_real(parts[3], "shape"));
  }
  if (family == "dpareto") {
    want(2);
    return NoiseSpec::double_pareto(parse_real(parts[1], "scale"),
                                    parse_real(parts[2], "shape"));
  }
  if (family == "halft") {
    want(1);
    return NoiseSpec::half_t(parse_real(parts[1], "df"));
  }
  throw std::invalid_argument("unknown noise family '" + family + "'");
}

std::string NoiseSpec::name() const {
  switch (family) {
    case NoiseFamily::Normal:
      return "normal:" + format_real(sigma);
    case NoiseFamily::StudentT:
      return "t:" + format_real(df);
    case NoiseFamily::Pareto:
      return "pareto:" + format_real(scale) + ":" + format_real(shape);
    case NoiseFamily::Frechet:
      return "frechet:" + format_real(location) + ":" + format_real(scale) +
             ":" + format_real(shape);
    case NoiseFamily::DoublePareto:
      return "dpareto:" + format_real(scale) + ":" + format_real(shape);
    case NoiseFamily::HalfT:
      return "halft:" + format_real(df);
  }
  throw std::logic_error("unreachable noise family");
}

namespace {

// Precomputes the centering offset so tight loops avoid tgamma calls.
struct NoiseSampler {
  const NoiseSpec& spec;
  double offset;

  explicit NoiseSampler(const NoiseSpec& s)
      : spec(s), offset(s.center ? s.analytic_mean() : 0.0) {
    s.validate();
  }

  double operator()(Rng& rng) const {
    switch (spec.family) {
      case NoiseFamily::Normal:
        return spec.sigma * rng.normal();
      case NoiseFamily::StudentT:
        return rng.student_t(spec.df);
      case NoiseFamily::Pareto:
        return spec.scale * std::pow(rng.uniform(), -1.0 / spec.shape) - offset;
      case NoiseFamily::Frechet:
        return spec.location +
               spec.scale * std::pow(-std::log(rng.uniform()), -1.0 / spec.shape) -
               offset;
      case NoiseFamily::DoublePareto: {
        // Sign drawn first, then the magnitude (pinned order).
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        return sign * spec.scale * std::pow(rng.uniform(), -1.0 / spec.shape);
      }
      case NoiseFamily::HalfT:
        return std::fabs(rng.student_t(spec.df)) - offset;
    }
    throw std::logic_error("unreachable noise family");
  }
};

}  // namespace

double draw_noise(Rng& rng, const NoiseSpec& spec) {
  return NoiseSampler(spec)(rng);
}

std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n,
                                 std::uint64_t seed) {
  const NoiseSampler sampler(spec);
  Rng rng(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sampler(rng);
  return out;
}

LinearData gen_linear_data(const LinearModelSpec& spec) {
  const Eigen::Index d = spec.theta_star.size();
  if (d < 1) throw std::invalid_argument("gen_linear_data: needs d >= 1");
  if (spec.n < 1) throw std::invalid_argument("gen_linear_data: needs n >= 1");
  if (!spec.theta_star.allFinite()) {
    throw std::invalid_argument("gen_linear_data: non-finite theta_star");
  }
  // Regression noise must have finite variance; for the power-tail families
  // that means shape > 2.
  if ((spec.noise.family == NoiseFamily::Pareto ||
       spec.noise.family == NoiseFamily::Frechet) &&
      !(spec.noise.shape > 2.0)) {
    throw std::invalid_argument(
        "gen_linear_data: Pareto/Frechet regression noise needs shape > 2");
  }
  const NoiseSampler sampler(spec.noise);
  Rng rng(spec.seed);

  LinearData data;
  data.X.resize(static_cast<Eigen::Index>(spec.n), d);
  // Pinned draw order: design first, row-major, then the noise vector.
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.X(i, j) = rng.normal();
  }
  data.y.resize(data.X.rows());
  for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
    data.y[i] = data.X.row(i).dot(spec.theta_star) + sampler(rng);
  }
  return data;
}

double kurtosis(const std::vector<double>& data) {
  if (data.size() < 4) throw std::invalid_argument("kurtosis: needs n >= 4");
  for (double x : data) {
    if (!std::isfinite(x)) throw std::invalid_argument("kurtosis: non-finite data");
  }
  const double n = static_cast<double>(data.size());
  double mean = 0.0;
  for (double x : data) mean += x;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : data) {
    const double c = x - mean;
    const double c2 = c * c;
    m2 += c2;
    m4 += c2 * c2;
  }
  m2 /= n;
  m4 /= n;
  if (m2 == 0.0) throw std::invalid_argument("kurtosis: zero variance");
  return m4 / (m2 * m2);
}

}  // namespace catoni
