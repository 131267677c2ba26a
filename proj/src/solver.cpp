#include "choquard/solver.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

namespace choquard {

Operators::Operators(int N, double alpha, const RadialGrid& grid, unsigned threads)
    : riesz_(OperatorMatrix::assemble({KernelKind::Riesz, N, alpha}, grid, threads)),
      green_(OperatorMatrix::assemble({KernelKind::Green, N, 0.0}, grid, threads)) {}

double IterationTrace::max_violation() const {
  double m = 0;
  for (const auto& s : steps) m = std::max(m, s.monotonicity_violation);
  return m;
}

std::optional<double> IterationTrace::min_barrier_margin() const {
  std::optional<double> m;
  for (const auto& s : steps) {
    if (s.barrier_margin) m = m ? std::min(*m, *s.barrier_margin) : *s.barrier_margin;
  }
  return m;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "converged";
    case Verdict::Diverged: return "diverged";
    case Verdict::MaxIterations: return "max_iterations";
  }
  return "?";
}

void require_subcritical(const ProblemExponents& e) {
  const CriticalityReport rep = classify(e);
  if (rep.cls == CriticalityClass::Subcritical) return;
  std::string which;
  for (Trigger t : rep.triggers) {
    if (!which.empty()) which += ", ";
    switch (t) {
      case Trigger::Sum: which += "p + q >= (N+alpha)/(N-2) = " + to_string(rep.sum_threshold); break;
      case Trigger::P: which += "p >= N/(N-2) = " + to_string(rep.p_threshold); break;
      case Trigger::Q: which += "q >= N/(N-2) = " + to_string(rep.q_threshold); break;
    }
  }
  throw SupercriticalInput("supercritical exponents (" + which + "): no singular solution with k > 0");
}

namespace {

RadialProfile forcing(const ProblemInstance& inst, const Operators& ops) {
  return gamma0_profile(ops.grid(), ops.N(), inst.k);
}

RadialProfile step(const RadialProfile& v, const ProblemInstance& inst, const Operators& ops,
                   const RadialProfile& kg) {
  const double p = to_double(inst.exponents.p), q = to_double(inst.exponents.q);
  const RadialProfile ip = ops.riesz().apply(pointwise_power(v, p));
  RadialProfile out = pointwise_add(ops.green().apply(pointwise_product(ip, pointwise_power(v, q))), kg);
  // the kΓ_0 part fixes the leading annotations
  out.origin_exponent = kg.origin_exponent;
  out.tail = kg.tail;
  return out;
}

double sup_abs(const Eigen::VectorXd& x) { return x.cwiseAbs().maxCoeff(); }

}  // namespace

RadialProfile iterate_once(const RadialProfile& v, const ProblemInstance& inst,
                           const Operators& ops) {
  return step(v, inst, ops, forcing(inst, ops));
}

SolveOutcome solve_minimal(const ProblemInstance& inst, const Operators& ops,
                           const RadialProfile* barrier) {
  require_subcritical(inst.exponents);
  if (!(inst.k > 0)) throw DomainError("k must be positive");
  if (inst.max_iter < 1) throw DomainError("max_iter must be positive");
  if (!(inst.conv_tol > 0)) throw DomainError("conv_tol must be positive");
  const RadialProfile kg = forcing(inst, ops);
  const double cap = inst.blowup_cap.value_or(1e12 * inst.k * gamma0(ops.N(), ops.grid().r.front()));

  SolveOutcome out;
  RadialProfile v = kg;
  std::vector<double> sups{v.sup()};
  for (int n = 1; n <= inst.max_iter; ++n) {
    RadialProfile next = step(v, inst, ops, kg);
    IterationRecord rec;
    rec.n = n;
    const bool finite = next.values.allFinite();
    rec.sup = finite ? next.sup() : std::numeric_limits<double>::infinity();
    if (finite) {
      rec.rel_delta = sup_abs(next.values - v.values) / rec.sup;
      rec.monotonicity_violation = (v.values - next.values).cwiseMax(0.0).maxCoeff() / v.sup();
      if (barrier) {
        const double w = barrier->sup();
        rec.barrier_margin = (barrier->values - next.values).minCoeff() / w;
      }
    } else {
      rec.rel_delta = std::numeric_limits<double>::infinity();
    }
    out.trace.steps.push_back(rec);
    sups.push_back(rec.sup);
    out.iterations = n;

    if (!finite || rec.sup > cap) {
      const std::size_t window = std::min<std::size_t>(10, n);
      bool growing = true;
      for (std::size_t j = sups.size() - window; j < sups.size(); ++j) {
        if (!(sups[j] > sups[j - 1])) growing = false;
      }
      if (!finite || growing) {
        out.verdict = Verdict::Diverged;
        out.sup_norm = rec.sup;
        out.profile = finite ? std::move(next) : std::move(v);
        return out;
      }
    }
    v = std::move(next);
    if (rec.rel_delta < inst.conv_tol) {
      out.verdict = Verdict::Converged;
      out.sup_norm = rec.sup;
      const RadialProfile tv = step(v, inst, ops, kg);
      out.residual = sup_abs(v.values - tv.values) / v.sup();
      out.profile = std::move(v);
      return out;
    }
  }
  out.verdict = Verdict::MaxIterations;
  out.sup_norm = v.sup();
  out.profile = std::move(v);
  return out;
}

RadialProfile barrier_core(const ProblemExponents& e, const Operators& ops) {
  require_subcritical(e);
  const RadialProfile phi = phi0_profile(ops.grid(), ops.N());
  const double p = to_double(e.p), q = to_double(e.q);
  const RadialProfile ip = ops.riesz().apply(pointwise_power(phi, p));
  return ops.green().apply(pointwise_product(ip, pointwise_power(phi, q)));
}

RadialProfile barrier(const ProblemInstance& inst, double t, const RadialProfile& core,
                      const Operators& ops) {
  if (!(t > 0)) throw DomainError("barrier needs t > 0");
  const double s = to_double(inst.exponents.p + inst.exponents.q);
  return pointwise_add(pointwise_scale(core, t * std::pow(inst.k, s)),
                       phi0_profile(ops.grid(), ops.N(), inst.k));
}

BarrierConstant estimate_barrier_constant(const ProblemExponents& e, const Operators& ops) {
  const RadialProfile core = barrier_core(e, ops);
  const RadialProfile phi = phi0_profile(ops.grid(), ops.N());
  BarrierConstant out;
  out.ratio = core.values.cwiseQuotient(phi.values);
  Eigen::Index at = 0;
  out.chat = out.ratio.maxCoeff(&at);
  out.argmax_r = ops.grid().r[at];
  const Eigen::Index M = out.ratio.size();
  // the maximum must sit away from both ends with the ratio falling toward them
  out.ends_ok = at > 0 && at < M - 1 && out.ratio[0] < out.ratio[1] &&
                out.ratio[M - 1] < out.ratio[M - 2];
  return out;
}

bool barrier_admissible(const ProblemInstance& inst, double chat) {
  return tangency_admissible(chat, inst.k, to_double(inst.exponents.p), to_double(inst.exponents.q))
      .admissible;
}

std::vector<SolveOutcome> solve_many(const ProblemInstance& tmpl, const Operators& ops,
                                     const std::vector<double>& ks, unsigned workers) {
  std::vector<SolveOutcome> out(ks.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, ks.size()));
  auto run = [&](std::size_t i) {
    ProblemInstance inst = tmpl;
    inst.k = ks[i];
    inst.blowup_cap.reset();
    out[i] = solve_minimal(inst, ops);
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < ks.size(); ++i) run(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < ks.size(); i += workers) run(i);
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

KStarBracket estimate_kstar(const ProblemInstance& tmpl, const Operators& ops, double k_lo,
                            double k_hi, int steps, unsigned workers) {
  if (!(k_lo > 0) || !(k_lo < k_hi)) throw DomainError("k bracket needs 0 < k_lo < k_hi");
  if (steps < 0) throw DomainError("steps must be nonnegative");
  KStarBracket out;
  auto verdict_at = [&](double k) {
    ProblemInstance inst = tmpl;
    inst.k = k;
    inst.blowup_cap.reset();
    const SolveOutcome s = solve_minimal(inst, ops);
    out.samples.push_back({k, s.verdict, s.iterations});
    return s.verdict;
  };
  const auto ends = solve_many(tmpl, ops, {k_lo, k_hi}, workers);
  out.samples.push_back({k_lo, ends[0].verdict, ends[0].iterations});
  out.samples.push_back({k_hi, ends[1].verdict, ends[1].iterations});
  const Verdict lo = ends[0].verdict;
  if (lo != Verdict::Converged) {
    throw DomainError(fmt::format("k_lo = {} does not converge ({}); choose a smaller k_lo", k_lo,
                                  to_string(lo)));
  }
  const Verdict hi = ends[1].verdict;
  if (hi != Verdict::Diverged) {
    throw DomainError(fmt::format("k_hi = {} does not diverge ({}); choose a larger k_hi", k_hi,
                                  to_string(hi)));
  }
  out.k_conv = k_lo;
  out.k_div = k_hi;
  for (int i = 0; i < steps; ++i) {
    const double mid = 0.5 * (out.k_conv + out.k_div);
    const Verdict v = verdict_at(mid);
    if (v == Verdict::MaxIterations) {
      out.undetermined_k = mid;
      break;
    }
    (v == Verdict::Converged ? out.k_conv : out.k_div) = mid;
    ++out.steps_done;
  }
  return out;
}

}  // namespace choquard
