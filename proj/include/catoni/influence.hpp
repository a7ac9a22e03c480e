#pragma once

#include <span>
#include <string>

namespace catoni {

// Variants of the two influence families. "Wide" follows the upper envelope
// on the positive axis, "Narrow" follows the lower envelope on (0,1] and then
// saturates, "Mixed" is the pointwise convex combination of the two.
enum class PsiVariant { Wide, Narrow, Mixed };

struct PsiChoice {
  PsiVariant variant = PsiVariant::Wide;
  double mix_weight = 0.5;  // weight on Wide when variant == Mixed, in [0,1]
};

// Selection of the psi1/psi2 pair used by the joint estimators. beta is the
// moment order of the psi2 family and must lie in (1, 2]; psi1 does not
// depend on beta.
struct InfluenceSpec {
  PsiChoice psi1{};
  PsiChoice psi2{};
  double beta = 2.0;
};

// psi1: odd, non-decreasing, bounded between the Catoni envelopes
//   -log(1 - x + x^2/2) <= psi1(x) <= log(1 + x + x^2/2).
double eval_psi1(const InfluenceSpec& spec, double x);

// psi2: same structure with x^2/2 replaced by |x|^beta / beta.
double eval_psi2(const InfluenceSpec& spec, double x);

// Envelope bounds themselves (the defining inequalities above).
double psi1_envelope_upper(double x);
double psi1_envelope_lower(double x);
double psi2_envelope_upper(double x, double beta);
double psi2_envelope_lower(double x, double beta);

// Verifies that both selected functions stay inside their envelopes and are
// non-decreasing across the supplied grid of evaluation points (the grid is
// sorted internally). Returns false on the first violation.
bool check_envelope(const InfluenceSpec& spec, std::span<const double> grid);

// Parse "wide" | "narrow" | "mixed:<w>" (w in [0,1]); throws
// std::invalid_argument on anything else. psi_choice_name inverts it.
PsiChoice parse_psi_choice(const std::string& text);
std::string psi_choice_name(const PsiChoice& choice);

}  // namespace catoni
