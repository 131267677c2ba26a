#pragma once

// Origin and tail fits, the comparison bound u ≥ kΓ_0, rate-transfer slope
// checks, and the supercritical nonintegrability probes.

#include <optional>
#include <string>
#include <vector>

#include "choquard/exponents.hpp"
#include "choquard/radial.hpp"

namespace choquard {

struct SingularityFit {
  double limit_estimate = 0;  // a in u r^{N-2} ≈ a + b r^β
  double slope = 0;           // b
  double r_a = 0, r_b = 0;
  double correction_exponent = 0;
  double residual = 0;        // rms of the fit
  bool accepted = false;      // residual ≤ 1e-3 |a|
};

/// Correction exponent for u_k: min(T_1 - T_0, 2), further capped by the
/// e^{-r}-type correction of Γ_0 itself (exponent 1 when N = 3).
double origin_correction_exponent(const ProblemExponents& e);

/// Fits g = u r^{N-2} on [r_1, min(10 r_1, 0.05)]. β defaults to the
/// exponent of Γ_0's own correction (1 for N = 3, else 2).
SingularityFit fit_origin(const RadialProfile& u, int N, std::optional<double> beta = std::nullopt);

struct DecayFit {
  double rate = 0;             // λ
  double algebraic_power = 0;  // m
  double r_a = 0, r_b = 0;
  double residual = 0;         // rms in log u
};

/// log u ≈ c - λ r - m log r on [max(r_max/2, 10), r_max].
DecayFit fit_decay(const RadialProfile& u);

/// max_i (kΓ_0 - u)_+/(kΓ_0).
double check_lower_bound(const RadialProfile& u, double k, int N);

enum class RateOperator { Green, Riesz, GreenOfRieszPower };
const char* to_string(RateOperator op);

struct RateCheck {
  RateOperator op = RateOperator::Green;
  int N = 0;
  double alpha = 0;
  double p = 1;
  double tau = 0;
  SingularityRate predicted = SingularityRate::bounded();
  double slope = 0;            // fitted d log y / d log r near 0
  double power_residual = 0;   // relative rms of C r^{-s}
  double log_residual = 0;     // relative rms of a + b log(1/r)
  std::string observed;        // "power(s)", "log" or "bounded"
  bool pass = false;
  std::string detail;
};

/// V_τ = r^{-τ} on (0, 1], e^{-r} beyond. Green: 𝔾[V_τ]; Riesz: I_α[V_τ];
/// GreenOfRieszPower: 𝔾[I_α[V_τ^p]]. Power branches pass when the slope is
/// within ±0.05 of the prediction, log branches when the log model has the
/// smaller residual, bounded branches when |slope| ≤ 0.05.
RateCheck verify_rate_transfer(RateOperator op, int N, const Rational& alpha, const Rational& p,
                               const Rational& tau, const RadialGrid& grid);

/// Same, reusing assembled operators on one grid (`riesz` must have order α).
RateCheck verify_rate_transfer(RateOperator op, const Rational& alpha, const Rational& p,
                               const Rational& tau, const OperatorMatrix& green,
                               const OperatorMatrix& riesz);

enum class GrowthClass { Convergent, LogDivergent, PowerDivergent, InnerDivergent };
const char* to_string(GrowthClass g);

struct ProbeReport {
  std::vector<double> epsilons;
  std::vector<double> partial_integrals;  // ∫_{ε}^{1}
  GrowthClass growth = GrowthClass::Convergent;
  double rate = 0;      // ρ in ε^{-ρ}
  double log_power = 0; // μ in log(1/ε)^μ
  Rational density_exponent;
};

/// Sign classification of (2-N)(p+q) + α + N.
GrowthClass predicted_growth(const ProblemExponents& e);

/// ∫_ε^1 I_α[Γ_0^p χ_{B_1}] Γ_0^q r^{N-1} dr for each ε (decreasing in (0,1)).
/// p ≥ N/(N-2) short-circuits to InnerDivergent.
ProbeReport integrability_probe(const ProblemExponents& e, const std::vector<double>& epsilons);

/// {limit, c_N_times_k, rel_err}, {rate, power}, lower_bound_violation.
nlohmann::json analysis_json(const RadialProfile& u, const ProblemExponents& e, double k);

}  // namespace choquard
