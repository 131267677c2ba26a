#pragma once

// Monotone iteration v_{n} = 𝔾[I_α[v_{n-1}^p] v_{n-1}^q] + kΓ_0 for the
// minimal singular solution, its barrier, and the k* bracket.

#include <memory>
#include <optional>
#include <vector>

#include "choquard/exponents.hpp"
#include "choquard/radial.hpp"

namespace choquard {

/// The input was supercritical; the message names the fired inequality.
class SupercriticalInput : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Riesz and Green matrices for one (N, α, grid). Immutable once built.
class Operators {
 public:
  Operators(int N, double alpha, const RadialGrid& grid, unsigned threads = 0);

  const OperatorMatrix& riesz() const { return riesz_; }
  const OperatorMatrix& green() const { return green_; }
  const RadialGrid& grid() const { return riesz_.grid(); }
  int N() const { return riesz_.kernel().N; }

 private:
  OperatorMatrix riesz_;
  OperatorMatrix green_;
};

struct ProblemInstance {
  ProblemExponents exponents;
  double k = 0;
  int max_iter = 2000;
  double conv_tol = 1e-8;
  std::optional<double> blowup_cap = std::nullopt;  // default 1e12·k·Γ_0(r_1)
};

struct IterationRecord {
  int n = 0;
  double sup = 0;
  double rel_delta = 0;
  double monotonicity_violation = 0;  // max_i (v_{n-1,i} - v_{n,i})_+ / ‖v_{n-1}‖
  std::optional<double> barrier_margin;  // min(w - v_n)/‖w‖
};

struct IterationTrace {
  std::vector<IterationRecord> steps;
  double max_violation() const;
  std::optional<double> min_barrier_margin() const;
};

enum class Verdict { Converged, Diverged, MaxIterations };
const char* to_string(Verdict v);

struct SolveOutcome {
  Verdict verdict = Verdict::MaxIterations;
  RadialProfile profile;  // last iterate
  int iterations = 0;
  double sup_norm = 0;
  double residual = 0;    // ‖v - T(v)‖/‖v‖, converged runs only
  IterationTrace trace;
};

/// Throws SupercriticalInput unless the exponents are subcritical.
void require_subcritical(const ProblemExponents& e);

/// 𝔾[I_α[v^p] v^q] + kΓ_0. Propagates NonIntegrableOrigin.
RadialProfile iterate_once(const RadialProfile& v, const ProblemInstance& inst,
                           const Operators& ops);

/// Starts at kΓ_0. When `barrier` is given its margin is audited each step.
SolveOutcome solve_minimal(const ProblemInstance& inst, const Operators& ops,
                           const RadialProfile* barrier = nullptr);

/// 𝔾[I_α[Φ_0^p]Φ_0^q].
RadialProfile barrier_core(const ProblemExponents& e, const Operators& ops);

/// w_t = t k^{p+q} core + kΦ_0.
RadialProfile barrier(const ProblemInstance& inst, double t, const RadialProfile& core,
                      const Operators& ops);

struct BarrierConstant {
  double chat = 0;
  double argmax_r = 0;
  bool ends_ok = false;  // ratio falls off at both grid ends
  Eigen::VectorXd ratio;
};

/// ĉ = max over nodes of 𝔾[I_α[Φ_0^p]Φ_0^q]/Φ_0.
BarrierConstant estimate_barrier_constant(const ProblemExponents& e, const Operators& ops);

/// Tangency condition at t = t_q with the empirical ĉ.
bool barrier_admissible(const ProblemInstance& inst, double chat);

struct KSample {
  double k = 0;
  Verdict verdict = Verdict::MaxIterations;
  int iterations = 0;
};

struct KStarBracket {
  double k_conv = 0;
  double k_div = 0;
  int steps_done = 0;
  std::optional<double> undetermined_k;  // a MaxIterations midpoint stopped the search
  std::vector<KSample> samples;          // in evaluation order
};

/// Bisection on k with solve_minimal verdicts. Throws DomainError when k_lo
/// does not converge or k_hi does not diverge. The two endpoint solves run
/// on up to `workers` threads.
KStarBracket estimate_kstar(const ProblemInstance& tmpl, const Operators& ops, double k_lo,
                            double k_hi, int steps, unsigned workers = 1);

/// Solves at each k, concurrently on up to `workers` threads; results in input order.
std::vector<SolveOutcome> solve_many(const ProblemInstance& tmpl, const Operators& ops,
                                     const std::vector<double>& ks, unsigned workers = 0);

}  // namespace choquard
