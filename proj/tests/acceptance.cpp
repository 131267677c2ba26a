// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "choquard/asymptotics.hpp"
#include "choquard/cli.hpp"
#include "choquard/exponents.hpp"
#include "choquard/kernels.hpp"
#include "choquard/radial.hpp"
#include "choquard/solver.hpp"

using namespace choquard;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "ok: " : "FAILED: ") + what);
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

Rational R(const char* s) { return parse_rational(s); }

ProblemExponents E(int N, const char* a, const char* p, const char* q) {
  return ProblemExponents::make(N, R(a), R(p), R(q));
}

// ---------------------------------------------------------------------------

void criterion1(Outcome& o) {
  struct Row {
    int N;
    const char *a, *p, *q;
    bool sub;
    std::set<Trigger> triggers;
  };
  using enum Trigger;
  const std::vector<Row> table{
      {3, "2", "2", "1", true, {}},
      {3, "2", "3", "1", false, {P}},          // p = N/(N-2)
      {5, "1", "1", "1", false, {Sum}},        // p + q = (N+α)/(N-2)
      {3, "2", "1", "3", false, {Q}},          // q = N/(N-2)
      {4, "1", "6/5", "1", true, {}},
      {3, "2", "2", "3", false, {Sum, Q}},
      {4, "1", "1", "2", false, {Sum, Q}},
      {5, "1", "1", "3/2", false, {Sum}},
      {6, "3", "1", "1", true, {}},
      {4, "3", "5/2", "1", false, {Sum, P}},
      {3, "2", "4", "4", false, {Sum, P, Q}},
      {3, "2", "2.99", "1", true, {}},
  };
  int errors = 0;
  for (const auto& row : table) {
    const auto rep = classify(E(row.N, row.a, row.p, row.q));
    const std::set<Trigger> got(rep.triggers.begin(), rep.triggers.end());
    const bool ok = (rep.cls == CriticalityClass::Subcritical) == row.sub && got == row.triggers;
    if (!ok) {
      ++errors;
      o.notes.push_back(fmt::format("mismatch at ({}, {}, {}, {})", row.N, row.a, row.p, row.q));
    }
  }
  o.require(errors == 0, fmt::format("{} tuples, {} classification errors", table.size(), errors));
}

void criterion2(Outcome& o) {
  const auto e = E(4, "1", "6/5", "1");
  const auto start = bootstrap_t1(e);
  o.require(start.t1 && *start.t1 == R("17/7"), "t1 = 17/7");
  const auto T = T_sequence(e);
  const std::vector<Rational> want{R("-2"), R("-7/5"), R("-19/50"), R("677/500")};
  o.require(T.T == want, "T_seq = [-2, -7/5, -19/50, 677/500]");
  o.require(T.n0 == 3, fmt::format("n0 = {}", T.n0));
  bool law = T.T.size() >= 2;
  Rational pw = 1;
  for (std::size_t n = 1; n < T.T.size(); ++n) {
    law = law && (T.T[n] - T.T[n - 1] == pw * (T.T[1] - T.T[0]));
    pw *= R("17/10");
  }
  o.require(law, "T_n - T_{n-1} = (17/10)^{n-1} (T_1 - T_0) exactly");

  const auto s = s_sequence(E(3, "2", "5/2", "1"), R("11/10"));
  o.require(s.s == std::vector<Rational>{R("11/10"), R("11/2")}, "s_seq = [11/10, 11/2]");
  o.require(s.termination == STermination::ExceededHalfN && s.s.back() > Rational(3, 2),
            "terminates past N/2");
}

void criterion3(Outcome& o) {
  double worst = 0;
  for (double r = 1e-3; r <= 20; r *= 1.01) worst = std::max(worst, rel(gamma0(3, r), std::exp(-r) / (4 * pi * r)));
  o.require(worst <= 1e-10, fmt::format("gamma0(3) vs e^-r/(4 pi r): {:.2e}", worst));
  for (int N : {3, 4, 5}) {
    const double ex = std::tgamma(N / 2.0 - 1) / (4 * std::pow(pi, N / 2.0));
    // Richardson on r^{N-2} Γ_0(r) = c_N (1 + O(r))
    const double h = 1e-5;
    const double lim = 2 * std::pow(h, N - 2) * gamma0(N, h) - std::pow(2 * h, N - 2) * gamma0(N, 2 * h);
    o.require(rel(lim, ex) <= 1e-6 && rel(c_N(N), ex) <= 1e-6,
              fmt::format("c_{} extrapolated {:.3e}, c_N {:.3e}", N, rel(lim, ex), rel(c_N(N), ex)));
  }
  for (int N : {3, 4, 5}) {
    bool dom = true;
    for (double r : build_grid(1e-4, 50, 40).r) dom = dom && gamma0(N, r) <= phi0(N, r);
    const double near = gamma0(N, 1e-6) / phi0(N, 1e-6), far = gamma0(N, 50) / phi0(N, 50);
    o.require(dom && std::abs(near - 1) < 1e-5 && far < 1e-6,
              fmt::format("N={}: Gamma0 <= Phi0, ratio {:.8f} at 1e-6, {:.2e} at 50", N, near, far));
  }
}

// -Δ + 1 in x = log r by centered 5-point differences, interior nodes in [1e-2, 5]
double green_inverse_error(int ppd) {
  const RadialGrid g = build_grid(1e-4, 30, ppd);
  const auto G = OperatorMatrix::assemble({KernelKind::Green, 3, 0}, g);
  auto bump = [](double r) { return std::exp(-r * r); };
  const auto u = G.apply(make_profile(g, bump, 0.0, TailModel::zero())).values;
  const double h = std::log(g.ratio);
  double worst = 0;
  for (std::size_t i = 2; i + 2 < g.size(); ++i) {
    const double r = g.r[i];
    if (r < 1e-2 || r > 5) continue;
    const double d1 = (u[i - 2] - 8 * u[i - 1] + 8 * u[i + 1] - u[i + 2]) / (12 * h);
    const double d2 = (-u[i - 2] + 16 * u[i - 1] - 30 * u[i] + 16 * u[i + 1] - u[i + 2]) / (12 * h * h);
    // u_rr + (2/r) u_r = (u_xx + u_x)/r² for N = 3
    worst = std::max(worst, std::abs(-(d2 + d1) / (r * r) + u[i] - bump(r)));
  }
  return worst;  // bump max is 1
}

void criterion4(Outcome& o) {
  const RadialGrid g = build_grid(1e-4, 1, 40);
  const auto one = make_profile(g, [](double) { return 1.0; }, 0.0, TailModel::zero());
  const double vi = OperatorMatrix::assemble({KernelKind::Riesz, 3, 2.0}, g).apply(one).values[0];
  o.require(rel(vi, 2 * pi) <= 1e-3, fmt::format("I_2[1_B1](r_1) rel err {:.2e}", rel(vi, 2 * pi)));
  const double vg = OperatorMatrix::assemble({KernelKind::Green, 3, 0.0}, g).apply(one).values[0];
  const double eg = 1 - 2 / std::exp(1.0);
  o.require(rel(vg, eg) <= 1e-3, fmt::format("G[1_B1](r_1) rel err {:.2e}", rel(vg, eg)));
  const double e40 = green_inverse_error(40), e80 = green_inverse_error(80);
  o.require(e40 <= 1e-3, fmt::format("(-Delta + 1) G[bump] vs bump at 40 ppd: {:.3e}", e40));
  o.require(e80 <= 0.5 * e40, fmt::format("at 80 ppd: {:.3e} (ratio {:.2f})", e80, e40 / e80));
}

void criterion5(Outcome& o) {
  const int N = 5;
  const RadialGrid g = build_grid(1e-4, 30, 40);
  const auto green = OperatorMatrix::assemble({KernelKind::Green, N, 0}, g);
  const auto r2 = OperatorMatrix::assemble({KernelKind::Riesz, N, 2.0}, g);
  const auto r1 = OperatorMatrix::assemble({KernelKind::Riesz, N, 1.0}, g);
  // expected exponent of r^{-s}; 0 = log, -1 = bounded
  struct Row {
    RateOperator op;
    const char *alpha, *p;
    int tau;
    double s;
  };
  const std::vector<Row> table{
      {RateOperator::Green, "2", "1", 3, 1},  {RateOperator::Green, "2", "1", 2, 0},
      {RateOperator::Green, "2", "1", 1, -1}, {RateOperator::Riesz, "2", "1", 3, 1},
      {RateOperator::Riesz, "2", "1", 2, 0},  {RateOperator::Riesz, "2", "1", 1, -1},
      {RateOperator::GreenOfRieszPower, "1", "3/2", 3, 1.5},
      {RateOperator::GreenOfRieszPower, "1", "3/2", 2, 0},
      {RateOperator::GreenOfRieszPower, "1", "3/2", 1, -1},
  };
  for (const auto& row : table) {
    const auto& rz = std::string(row.alpha) == "2" ? r2 : r1;
    const auto rc = verify_rate_transfer(row.op, R(row.alpha), R(row.p), Rational(row.tau), green, rz);
    bool ok;
    std::string what;
    if (row.s > 0) {
      ok = std::abs(-rc.slope - row.s) <= 0.05;
      what = fmt::format("slope {:.4f} vs -{}", rc.slope, row.s);
    } else if (row.s == 0) {
      ok = rc.log_residual < rc.power_residual;
      what = fmt::format("log residual {:.2e} < power {:.2e}", rc.log_residual, rc.power_residual);
    } else {
      ok = std::abs(rc.slope) <= 0.05;
      what = fmt::format("slope {:.4f} vs 0", rc.slope);
    }
    o.require(ok, fmt::format("{} alpha={} p={} tau={}: {}", to_string(row.op), row.alpha, row.p, row.tau, what));
  }
}

struct Shared {
  std::optional<Operators> ops40;
  double khat = 0;
};

SingularityFit origin_fit(const ProblemExponents& e, const Operators& ops, double k, bool with_barrier,
                          Outcome* o) {
  const double chat = estimate_barrier_constant(e, ops).chat;
  const auto kt = k_threshold(chat, 2, 1);
  ProblemInstance inst{e, k};
  std::optional<RadialProfile> w;
  if (with_barrier) w = barrier(inst, kt.t_q, barrier_core(e, ops), ops);
  const auto s = solve_minimal(inst, ops, w ? &*w : nullptr);
  if (o) {
    o->require(s.verdict == Verdict::Converged && s.iterations <= 200,
               fmt::format("{} in {} iterations", to_string(s.verdict), s.iterations));
    o->require(s.trace.max_violation() <= 1e-8,
               fmt::format("max monotonicity violation {:.2e}", s.trace.max_violation()));
    const auto margin = s.trace.min_barrier_margin();
    o->require(with_barrier && barrier_admissible(inst, chat) && margin && *margin >= 0,
               fmt::format("barrier domination, min margin {:.3e}", margin.value_or(NAN)));
    const double lb = check_lower_bound(s.profile, k, 3);
    o->require(lb <= 1e-8, fmt::format("lower bound violation {:.2e}", lb));
    const auto& g = s.profile.grid;
    bool mono = true;
    double prev = INFINITY;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.r[i] < std::max(g.r.back() / 2, 10.0)) continue;
      const double v = s.profile.values[static_cast<Eigen::Index>(i)] * std::exp(0.3 * g.r[i]);
      mono = mono && v <= prev;
      prev = v;
    }
    o->require(mono, "u e^{0.3r} nonincreasing on the tail window");
  }
  return fit_origin(s.profile, 3, origin_correction_exponent(e));
}

void criterion6(Outcome& o, Shared& sh) {
  const auto e = E(3, "2", "2", "1");
  sh.ops40.emplace(3, 2.0, build_grid(1e-4, 30, 40));
  sh.khat = k_threshold(estimate_barrier_constant(e, *sh.ops40).chat, 2, 1).k_q;
  const double k = 0.5 * sh.khat;
  const double target = c_N(3) * k;
  const auto f40 = origin_fit(e, *sh.ops40, k, true, &o);
  const double d40 = (f40.limit_estimate - target) / target;
  o.require(std::abs(d40) <= 0.05, fmt::format("origin limit vs c_3 k at 40 ppd: {:+.3e}", d40));
  const Operators ops80(3, 2.0, build_grid(1e-4, 30, 80));
  const auto f80 = origin_fit(e, ops80, k, false, nullptr);
  const double d80 = (f80.limit_estimate - target) / target;
  o.require(std::abs(d80) < std::abs(d40), fmt::format("deviation decreases at 80 ppd: {:+.3e} -> {:+.3e}", d40, d80));
}

void criterion7(Outcome& o) {
  const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  const auto a = integrability_probe(E(3, "2", "2", "3"), eps);
  o.require(a.growth == GrowthClass::LogDivergent,
            fmt::format("(3, 2, 2, 3): {} (rate {:.3f}, log power {:.3f})", to_string(a.growth), a.rate, a.log_power));
  const auto b = integrability_probe(E(3, "2", "3", "1"), eps);
  o.require(b.growth == GrowthClass::InnerDivergent, fmt::format("(3, 2, 3, 1): {}", to_string(b.growth)));
  for (const char* p : {"2", "3"}) {
    const char* q = std::string(p) == "2" ? "3" : "1";
    std::ostringstream out, err;
    const int code = cli::run({"solve", "--N", "3", "--alpha", "2", "--p", p, "--q", q, "--k", "1"}, out, err);
    o.require(code == 3, fmt::format("solve (3, 2, {}, {}) exits {}", p, q, code));
  }
}

void criterion8(Outcome& o, Shared& sh) {
  const auto e = E(3, "2", "2", "1");
  if (!sh.ops40) {
    sh.ops40.emplace(3, 2.0, build_grid(1e-4, 30, 40));
    sh.khat = k_threshold(estimate_barrier_constant(e, *sh.ops40).chat, 2, 1).k_q;
  }
  const double kq = sh.khat;
  const auto br = estimate_kstar(ProblemInstance{e, kq}, *sh.ops40, 0.5 * kq, 50 * kq, 12);
  o.require(!br.undetermined_k && br.k_conv >= 0.9 * kq,
            fmt::format("k_conv {:.4f} >= 0.9 khat_q = {:.4f}", br.k_conv, 0.9 * kq));
  o.require(std::isfinite(br.k_div) && br.k_div > br.k_conv, fmt::format("k_div {:.4f}", br.k_div));
  bool closed = true;
  for (const auto& s : br.samples) {
    if (s.k < br.k_conv) closed = closed && s.verdict == Verdict::Converged;
    if (s.k >= br.k_div) closed = closed && s.verdict == Verdict::Diverged;
  }
  o.require(closed, fmt::format("downward closure over {} samples", br.samples.size()));
  const std::vector<double> ks{0.5 * kq, kq, br.k_conv};
  const auto out = solve_many(ProblemInstance{e, kq}, *sh.ops40, ks, 1);
  bool mono = out[0].verdict == Verdict::Converged;
  for (std::size_t i = 1; i < out.size(); ++i) {
    mono = mono && out[i].verdict == Verdict::Converged &&
           (out[i].profile.values - out[i - 1].profile.values).minCoeff() >= -1e-8 * out[i].profile.sup();
  }
  o.require(mono, fmt::format("u_k nodewise increasing at k = {:.4f}, {:.4f}, {:.4f}", ks[0], ks[1], ks[2]));
}

}  // namespace

int main() {
  Shared sh;
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all{
      {1, "exact classification", 1, criterion1},
      {2, "exact bootstrap ledgers", 1, criterion2},
      {3, "kernel accuracy", 10, criterion3},
      {4, "operator oracles", 60, criterion4},
      {5, "rate branch table", 60, criterion5},
      {6, "end-to-end solve", 300, [&](Outcome& o) { criterion6(o, sh); }},
      {7, "nonexistence probes", 60, criterion7},
      {8, "k* bracketing", 900, [&](Outcome& o) { criterion8(o, sh); }},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& ex) {
      o.require(false, fmt::format("exception: {}", ex.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.budget_s, fmt::format("runtime {:.2f} s within {} s", secs, c.budget_s));
    for (const auto& n : o.notes) std::cout << "    " << n << '\n';
    std::cout << fmt::format("criterion {}: {} - {}", c.id, o.pass ? "PASS" : "FAIL", c.name) << std::endl;
    if (!o.pass) ++failed;
  }
  std::cout << fmt::format("{} of {} criteria passed", all.size() - failed, all.size()) << '\n';
  return failed == 0 ? 0 : 1;
}
