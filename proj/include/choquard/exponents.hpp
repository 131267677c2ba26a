#pragma once

// Exact exponent bookkeeping for -Δu + u = I_α[u^p]u^q + kδ_0 in R^N.
//
// Everything that is equality-sensitive (criticality thresholds, singularity
// rate branches, the bootstrap ledgers) is computed in exact rationals.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include "json.hpp"

namespace choquard {

using Rational = boost::multiprecision::cpp_rational;

/// Raised when an input violates a documented precondition. The message names
/// the violated constraint.
class DomainError : public std::invalid_argument {
 public:
  explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

/// Parses "a/b", an integer, or a decimal ("2.5", "1e-3", "-0.25") exactly.
Rational parse_rational(std::string_view text);

/// "num/den", or just "num" for integers.
std::string to_string(const Rational& r);

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

struct ProblemExponents {
  int N = 3;
  Rational alpha;
  Rational p;
  Rational q;

  /// Validates N ≥ 3, 0 < α < N, p > 0, q ≥ 1.
  static ProblemExponents make(int N, Rational alpha, Rational p, Rational q);

  Rational sum() const { return p + q; }
};

enum class CriticalityClass { Subcritical, Supercritical };

enum class Trigger { Sum, P, Q };

const char* to_string(CriticalityClass c);
const char* to_string(Trigger t);

struct CriticalityReport {
  CriticalityClass cls = CriticalityClass::Subcritical;
  std::vector<Trigger> triggers;
  Rational sum_threshold;  // (N+α)/(N-2)
  Rational p_threshold;    // N/(N-2)
  Rational q_threshold;    // N/(N-2)
};

CriticalityReport classify(const ProblemExponents& e);

inline bool is_subcritical(const ProblemExponents& e) {
  return classify(e).cls == CriticalityClass::Subcritical;
}

// ---------------------------------------------------------------------------
// Barrier threshold. Real arithmetic: k_q is irrational in general.

struct KThreshold {
  double k_q = 0;
  double t_q = 0;
};

/// k_q = (1/(c(p+q)))^{1/(p+q-1)} (p+q-1)/(p+q),  t_q = ((p+q)/(p+q-1))^{p+q}.
KThreshold k_threshold(double c, double p, double q);

struct Tangency {
  bool admissible = false;
  std::optional<double> witness_t;  // t_q when admissible
};

/// Whether (c t k^{p+q-1} + 1)^{p+q} ≤ t has a solution t, i.e. k ≤ k_q.
Tangency tangency_admissible(double c, double k, double p, double q);

// ---------------------------------------------------------------------------
// Singularity rates near the origin.

class SingularityRate {
 public:
  enum class Kind { Bounded, Log, Power };

  static SingularityRate bounded() { return SingularityRate(Kind::Bounded, 0); }
  static SingularityRate log() { return SingularityRate(Kind::Log, 0); }
  /// |x|^{-e}. A zero exponent normalizes to bounded(); negative is rejected.
  static SingularityRate power(const Rational& e);

  Kind kind() const { return kind_; }
  /// Exponent of a power bound; zero for the other kinds.
  const Rational& exponent() const { return exponent_; }

  std::string describe() const;

  friend bool operator==(const SingularityRate& a, const SingularityRate& b) {
    return a.kind_ == b.kind_ && a.exponent_ == b.exponent_;
  }
  /// Bounded < Log < Power(e), Power monotone in e.
  friend int compare(const SingularityRate& a, const SingularityRate& b);
  friend bool operator<(const SingularityRate& a, const SingularityRate& b) {
    return compare(a, b) < 0;
  }
  friend bool operator<=(const SingularityRate& a, const SingularityRate& b) {
    return compare(a, b) <= 0;
  }

 private:
  SingularityRate(Kind k, Rational e) : kind_(k), exponent_(std::move(e)) {}
  Kind kind_;
  Rational exponent_;
};

/// Rate of 𝔾[V] near 0 for V ≲ |x|^{-τ}: power τ-2, log at τ = 2, bounded below.
/// Log and bounded inputs map to bounded. Rejects τ ≥ N.
SingularityRate green_rate(const SingularityRate& input, int N);

/// Rate of I_α[V] near 0: power τ-α, log at τ = α, bounded below. Rejects τ ≥ N.
SingularityRate riesz_rate(const SingularityRate& input, const Rational& alpha, int N);

struct CompositeRates {
  std::optional<SingularityRate> riesz_power;  // 𝔾[(I_α[V_τ^p])^t], needs (pτ-α)t < N
  std::optional<SingularityRate> power;        // 𝔾[(V_τ^q)^t], needs τqt < N
};

/// Bounds for 𝔾[(I_α[V_τ^p])^t] and 𝔾[(V_τ^q)^t] for V_τ ≲ |x|^{-τ}.
/// Requires p < N/(N-2), 1 < q < N/(N-2), 0 < τ ≤ N-2 and t > 0. A bound
/// whose own condition fails is left empty; throws when both fail.
CompositeRates composite_rates(const ProblemExponents& e, const Rational& tau,
                               const Rational& t);

// ---------------------------------------------------------------------------
// Bootstrap ledgers of the regularity argument.

enum class AlphaCase { PBelowAlphaCritical, PAtAlphaCritical, PAboveAlphaCritical };

const char* to_string(AlphaCase c);

struct BootstrapStart {
  AlphaCase alpha_case = AlphaCase::PAboveAlphaCritical;
  std::optional<Rational> t1;  // only when p(N-2) > α
};

/// t_1 = ((p+q)(N-2) - α)/(p(N-2) - α). Rejects supercritical input.
BootstrapStart bootstrap_t1(const ProblemExponents& e);

/// Balance identity (1/t1) N/(p(N-2)-α) == ((t1-1)/t1)(1/q) N/(N-2), exactly.
bool balance_identity_holds(const ProblemExponents& e, const Rational& t1);

enum class STermination { ExceededHalfN, BoundedBranch };

struct SSequence {
  std::vector<Rational> s;  // s_1, s_2, ...
  /// 1-based index of the last term: the first s_n > N/2, or the term at which
  /// p(N - 2s) - αs ≤ 0 made I_α[u^p] locally bounded.
  std::size_t n1 = 0;
  STermination termination = STermination::ExceededHalfN;
  /// 1-based index of a term that hit N/2 exactly and was nudged down.
  std::optional<std::size_t> refined_index;
};

/// Default s_1: midpoint of (1, min(N/((p+q)(N-2)-α), (p+q)N/(2(p+q)+α))).
Rational default_s1(const ProblemExponents& e);

/// s_n = N s_{n-1} / ((p+q)(N - 2 s_{n-1}) - α s_{n-1}), iterated exactly.
SSequence s_sequence(const ProblemExponents& e, std::optional<Rational> s1 = std::nullopt);

struct TSequence {
  std::vector<Rational> T;  // T_0 = 2 - N, T_1 = 2 + α - (p+q)(N-2), ...
  std::size_t n0 = 0;       // first index with T_n > 0
  Rational ratio;           // q t1/(t1 - 1)
};

/// T_n = 2 + (q t1/(t1-1)) T_{n-1}, stopped at the first positive term.
TSequence T_sequence(const ProblemExponents& e);

struct BootstrapLedger {
  AlphaCase alpha_case = AlphaCase::PAboveAlphaCritical;
  std::optional<Rational> t1;
  std::optional<SSequence> s;
  std::optional<TSequence> T;
};

/// Full ledger for a subcritical tuple; sequences only in the p(N-2) > α case.
BootstrapLedger build_ledger(const ProblemExponents& e, std::optional<Rational> s1 = std::nullopt);

struct DensityExponent {
  Rational exponent;  // (2-N)(p+q) + α
  bool locally_integrable = false;  // exponent > -N
};

DensityExponent supercritical_density_exponent(const ProblemExponents& e);

// JSON views used by the CLI. Rationals are "num/den" strings.
nlohmann::json to_json(const CriticalityReport& r);
nlohmann::json to_json(const BootstrapLedger& l);
nlohmann::json to_json(const ProblemExponents& e);

}  // namespace choquard
