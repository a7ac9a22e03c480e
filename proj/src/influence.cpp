#include "catoni/influence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace catoni {

namespace {

void require_finite(double x) {
  if (!std::isfinite(x)) {
    throw std::domain_error("influence function argument must be finite");
  }
}

void require_beta(double beta) {
  if (!(beta > 1.0 && beta <= 2.0)) {
    std::ostringstream msg;
    msg << "beta must lie in (1, 2], got " << beta;
    throw std::invalid_argument(msg.str());
  }
}

void require_choice(const PsiChoice& choice) {
  if (choice.variant == PsiVariant::Mixed &&
      !(choice.mix_weight >= 0.0 && choice.mix_weight <= 1.0)) {
    throw std::invalid_argument("mix weight must lie in [0, 1]");
  }
}

// |x|^beta with the beta == 2 hot path kept off std::pow.
inline double pow_abs(double x, double beta) {
  if (beta == 2.0) return x * x;
  return std::pow(std::fabs(x), beta);
}

inline double psi1_wide(double x) {
  // log(1 + x + x^2/2) for x >= 0, odd reflection below.
  if (x >= 0.0) return std::log1p(x + 0.5 * x * x);
  return -std::log1p(-x + 0.5 * x * x);
}

inline double psi1_narrow(double x) {
  // -sign(x) log(1 - |x| + x^2/2) inside [-1, 1]; saturates at +-log 2
  // (the branches agree at |x| = 1 since -log(1/2) = log 2).
  const double ax = std::fabs(x);
  if (ax <= 1.0) {
    const double value = -std::log1p(-ax + 0.5 * x * x);
    return x >= 0.0 ? value : -value;
  }
  constexpr double kLog2 = 0.6931471805599453;
  return x > 0.0 ? kLog2 : -kLog2;
}

inline double psi2_wide(double x, double beta) {
  if (x >= 0.0) return std::log1p(x + pow_abs(x, beta) / beta);
  return -std::log1p(-x + pow_abs(x, beta) / beta);
}

inline double psi2_narrow(double x, double beta) {
  // Saturation level log(beta): at |x| = 1 the interior branch gives
  // -log(1 - 1 + 1/beta) = log(beta).
  const double ax = std::fabs(x);
  if (ax <= 1.0) {
    const double value = -std::log1p(-ax + pow_abs(x, beta) / beta);
    return x >= 0.0 ? value : -value;
  }
  const double sat = std::log(beta);
  return x > 0.0 ? sat : -sat;
}

}  // namespace

double eval_psi1(const InfluenceSpec& spec, double x) {
  require_finite(x);
  require_choice(spec.psi1);
  switch (spec.psi1.variant) {
    case PsiVariant::Wide:
      return psi1_wide(x);
    case PsiVariant::Narrow:
      return psi1_narrow(x);
    case PsiVariant::Mixed: {
      const double w = spec.psi1.mix_weight;
      return w * psi1_wide(x) + (1.0 - w) * psi1_narrow(x);
    }
  }
  throw std::logic_error("unreachable psi1 variant");
}

double eval_psi2(const InfluenceSpec& spec, double x) {
  require_finite(x);
  require_beta(spec.beta);
  require_choice(spec.psi2);
  switch (spec.psi2.variant) {
    case PsiVariant::Wide:
      return psi2_wide(x, spec.beta);
    case PsiVariant::Narrow:
      return psi2_narrow(x, spec.beta);
    case PsiVariant::Mixed: {
      const double w = spec.psi2.mix_weight;
      return w * psi2_wide(x, spec.beta) + (1.0 - w) * psi2_narrow(x, spec.beta);
    }
  }
  throw std::logic_error("unreachable psi2 variant");
}

double psi1_envelope_upper(double x) {
  require_finite(x);
  return std::log1p(x + 0.5 * x * x);
}

double psi1_envelope_lower(double x) {
  require_finite(x);
  return -std::log1p(-x + 0.5 * x * x);
}

double psi2_envelope_upper(double x, double beta) {
  require_finite(x);
  require_beta(beta);
  return std::log1p(x + pow_abs(x, beta) / beta);
}

double psi2_envelope_lower(double x, double beta) {
  require_finite(x);
  require_beta(beta);
  return -std::log1p(-x + pow_abs(x, beta) / beta);
}

bool check_envelope(const InfluenceSpec& spec, std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("empty evaluation grid");
  require_beta(spec.beta);
  std::vector<double> xs(grid.begin(), grid.end());
  for (double x : xs) require_finite(x);
  std::sort(xs.begin(), xs.end());

  // The wide variant *is* the upper envelope for x > 0 (lower for x < 0),
  // so the band check needs a little slack for the mixed round-off.
  const auto inside = [](double value, double lo, double hi) {
    const double slack =
        1e-12 * std::max({1.0, std::fabs(lo), std::fabs(hi)});
    return value >= lo - slack && value <= hi + slack;
  };

  double prev1 = -std::numeric_limits<double>::infinity();
  double prev2 = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    const double p1 = eval_psi1(spec, x);
    const double p2 = eval_psi2(spec, x);
    if (!inside(p1, psi1_envelope_lower(x), psi1_envelope_upper(x))) return false;
    if (!inside(p2, psi2_envelope_lower(x, spec.beta),
                psi2_envelope_upper(x, spec.beta))) {
      return false;
    }
    if (p1 < prev1 - 1e-12 || p2 < prev2 - 1e-12) return false;
    prev1 = p1;
    prev2 = p2;
  }
  return true;
}

PsiChoice parse_psi_choice(const std::string& text) {
  if (text == "wide") return {PsiVariant::Wide, 0.5};
  if (text == "narrow") return {PsiVariant::Narrow, 0.5};
  const std::string prefix = "mixed:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string tail = text.substr(prefix.size());
    std::size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(tail, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad mix weight in '" + text + "'");
    }
    if (used != tail.size() || !(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("bad mix weight in '" + text + "'");
    }
    return {PsiVariant::Mixed, w};
  }
  throw std::invalid_argument("unknown influence variant '" + text + "'");
}

std::string psi_choice_name(const PsiChoice& choice) {
  switch (choice.variant) {
    case PsiVariant::Wide:
      return "wide";
    case PsiVariant::Narrow:
      return "narrow";
    case PsiVariant::Mixed: {
      std::ostringstream out;
      out << "mixed:" << choice.mix_weight;
      return out.str();
    }
  }
  throw std::logic_error("unreachable psi variant");
}

}  // namespace catoni
