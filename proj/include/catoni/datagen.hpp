#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace catoni {

// Identifier for the pinned generator pipeline below; echoed in report
// metadata so runs can be matched to the stream definition.
inline constexpr const char* kRngVersion = "catoni-rng/1";

// Deterministic random stream: mt19937_64 (bit-exact by the standard) with
// fixed output mappings, so the same seed yields the same draws on every
// platform. std::*_distribution is deliberately not used (its sequences are
// implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Strictly inside (0,1): ((x >> 11) + 0.5) * 2^-53.
  double uniform();
  // Box-Muller with a cached spare.
  double normal();
  // Unit-scale gamma, Marsaglia-Tsang; shape < 1 via the U^(1/a) boost.
  double gamma(double shape);
  double chi_square(double df);   // 2 * gamma(df/2)
  double student_t(double df);    // normal / sqrt(chi_square(df)/df)
  // Uniform index in [0, bound); used by the deterministic Fisher-Yates.
  std::uint64_t uniform_index(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

enum class NoiseFamily { Normal, StudentT, Pareto, Frechet, DoublePareto, HalfT };

// Noise distribution descriptor. Asymmetric families (Pareto, Frechet,
// HalfT) default to center = true, i.e. draws are shifted by the analytic
// mean so the noise is mean-zero; centering requires the mean to exist
// (shape/df > 1). Symmetric families ignore centering (mean already 0).
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Normal;
  double sigma = 1.0;     // Normal
  double df = 3.0;        // StudentT / HalfT
  double scale = 1.0;     // Pareto / Frechet / DoublePareto
  double shape = 2.1;     // tail index for those three
  double location = 0.0;  // Frechet
  bool center = false;

  static NoiseSpec normal(double sigma);
  static NoiseSpec student_t(double df);
  static NoiseSpec pareto(double scale, double shape);
  static NoiseSpec frechet(double location, double scale, double shape);
  static NoiseSpec double_pareto(double scale, double shape);
  static NoiseSpec half_t(double df);

  // "normal:1.0" | "t:2.1" | "pareto:1:2.1" | "frechet:0:1:2.1" |
  // "dpareto:1:2.1" | "halft:2.1"
  static NoiseSpec parse(const std::string& text);
  std::string name() const;

  // Closed-form moments of the *uncentered* draw; throw std::domain_error
  // when the moment does not exist (e.g. sd for shape <= 2).
  double analytic_mean() const;
  double analytic_sd() const;
  // Mean of the draws as generated (0 when center is set).
  double effective_mean() const;

  void validate() const;  // throws std::invalid_argument on bad parameters
};

// One draw from the family using the stream (centering already applied).
double draw_noise(Rng& rng, const NoiseSpec& spec);

// n draws from a fresh stream seeded with `seed`.
std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n,
                                 std::uint64_t seed);

struct LinearModelSpec {
  Eigen::VectorXd theta_star;
  std::size_t n = 0;
  NoiseSpec noise{};
  std::uint64_t seed = 0;
};

struct LinearData {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
};

// y = X theta_star + eps with X_ij iid standard normal. Draw order is
// pinned: X row-major first, then the n noise values, all from one stream.
LinearData gen_linear_data(const LinearModelSpec& spec);

// Sample kurtosis m4 / m2^2 (1/n central moments). Requires n >= 4 and
// non-constant data.
double kurtosis(const std::vector<double>& data);

}  // namespace catoni
