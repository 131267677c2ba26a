#include "choquard/verify.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "choquard/asymptotics.hpp"
#include "choquard/exponents.hpp"
#include "choquard/kernels.hpp"
#include "choquard/radial.hpp"

namespace choquard {

namespace {

constexpr double pi = std::numbers::pi;

CheckResult check(std::string name, bool pass, std::string detail) {
  return {std::move(name), pass, std::move(detail)};
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// relative residual of -u'' - (N-1)u'/r + u for u = gamma0(N, .)
double ode_residual(int N, double r) {
  const double h = 1e-3 * r;
  auto u = [N](double x) { return gamma0(N, x); };
  const double um2 = u(r - 2 * h), um1 = u(r - h), u0 = u(r), up1 = u(r + h), up2 = u(r + 2 * h);
  const double d1 = (-up2 + 8 * up1 - 8 * um1 + um2) / (12 * h);
  const double d2 = (-up2 + 16 * up1 - 30 * u0 + 16 * um1 - um2) / (12 * h * h);
  const double res = -d2 - (N - 1) / r * d1 + u0;
  return std::abs(res) / (std::abs(d2) + (N - 1) / r * std::abs(d1) + std::abs(u0));
}

std::vector<CheckResult> kernels_suite(std::ostream* csv) {
  std::vector<CheckResult> out;
  {
    const double v = bessel_k(0.5, 1.0), ex = std::sqrt(pi / 2) * std::exp(-1.0);
    out.push_back(check("bessel_k(1/2, 1) closed form", rel(v, ex) < 1e-14, fmt::format("{:.12g}", v)));
    const double w = bessel_k(1.5, 2.0), ew = std::sqrt(pi / 4) * std::exp(-2.0) * 1.5;
    out.push_back(check("bessel_k(3/2, 2) closed form", rel(w, ew) < 1e-14, fmt::format("{:.12g}", w)));
  }
  {
    double worst = 0;
    if (csv) *csv << "r,gamma0,phi0,closed_form,residual\n";
    const RadialGrid g = build_grid(1e-3, 20, 40);
    for (double r : g.r) {
      const double v = gamma0(3, r), ex = std::exp(-r) / (4 * pi * r);
      worst = std::max(worst, rel(v, ex));
      if (csv) {
        *csv << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r, v, phi0(3, r), ex,
                            ode_residual(3, r));
      }
    }
    out.push_back(check("gamma0(3, r) = e^-r/(4 pi r) on [1e-3, 20]", worst <= 1e-10,
                        fmt::format("max rel err {:.3e}", worst)));
  }
  for (int N : {3, 4, 5, 6}) {
    double worst = 0;
    for (double r : build_grid(1e-3, 20, 20).r) worst = std::max(worst, ode_residual(N, r));
    out.push_back(check(fmt::format("radial ODE residual N={}", N), worst < 1e-8,
                        fmt::format("max rel residual {:.3e}", worst)));
  }
  for (int N : {3, 4, 5}) {
    const double h = 1e-4;
    const double g1 = std::pow(h, N - 2) * gamma0(N, h), g2 = std::pow(2 * h, N - 2) * gamma0(N, 2 * h);
    const double extrap = 2 * g1 - g2;
    out.push_back(check(fmt::format("c_N extrapolation N={}", N), rel(extrap, c_N(N)) < 1e-6,
                        fmt::format("extrapolated {:.10g}, c_N {:.10g}", extrap, c_N(N))));
  }
  for (int N : {3, 4, 5}) {
    bool dominated = true;
    for (double r : build_grid(1e-3, 50, 20).r) dominated = dominated && gamma0(N, r) <= phi0(N, r);
    const double near = gamma0(N, 1e-6) / phi0(N, 1e-6), far = gamma0(N, 50) / phi0(N, 50);
    out.push_back(check(fmt::format("Gamma0 <= Phi0, ratio 1 at 0 and 0 at infinity, N={}", N),
                        dominated && near > 1 - 1e-5 && far < 1e-6,
                        fmt::format("ratio(1e-6) {:.9f}, ratio(50) {:.3e}", near, far)));
  }
  {
    double worst = 0;
    for (double r : {0.3, 1.0, 2.5}) {
      for (double s : {0.1, 0.7, 1.0, 1.3, 4.0}) {
        const double v = green_angular(3, r, s);
        const double ex = (std::exp(-std::abs(r - s)) - std::exp(-(r + s))) / (2 * r * s);
        worst = std::max(worst, rel(v, ex));
      }
    }
    out.push_back(check("green_angular(3, r, s) closed form", worst < 1e-10,
                        fmt::format("max rel err {:.3e}", worst)));
    const double v = riesz_angular(3, 2, 1, 2);
    out.push_back(check("riesz_angular(3, 2, 1, 2) = 2 pi", rel(v, 2 * pi) < 1e-10, fmt::format("{:.12g}", v)));
  }
  return out;
}

// -Δ + 1 in x = log r by 5-point centered differences, applied to 𝔾[e^{-r²}]
double green_inverse_error(int ppd) {
  const int N = 3;
  const RadialGrid g = build_grid(1e-4, 30, ppd);
  const auto G = OperatorMatrix::assemble({KernelKind::Green, N, 0}, g);
  const RadialProfile f = make_profile(g, [](double r) { return std::exp(-r * r); }, 0.0, TailModel::zero());
  const RadialProfile u = G.apply(f);
  const double h = std::log(g.ratio);
  const auto& v = u.values;
  double worst = 0;
  for (std::size_t i = 2; i + 2 < g.size(); ++i) {
    const double r = g.r[i];
    if (r < 1e-2 || r > 5) continue;
    const double ux = (-v[i + 2] + 8 * v[i + 1] - 8 * v[i - 1] + v[i - 2]) / (12 * h);
    const double uxx = (-v[i + 2] + 16 * v[i + 1] - 30 * v[i] + 16 * v[i - 1] - v[i - 2]) / (12 * h * h);
    const double Lu = -(uxx + (N - 2) * ux) / (r * r) + v[i];
    worst = std::max(worst, std::abs(Lu - f.values[i]));
  }
  return worst / f.values.maxCoeff();
}

std::vector<CheckResult> operators_suite() {
  std::vector<CheckResult> out;
  {
    const RadialGrid g = build_grid(1e-4, 30, 40);
    const auto g17 = build_grid(1e-4, 1, 4);
    out.push_back(check("grid (1e-4, 1, 4) has 17 nodes", g17.size() == 17, fmt::format("{}", g17.size())));
    out.push_back(check("grid (1e-4, 30, 40) has 220 nodes", g.size() == 220, fmt::format("{}", g.size())));
  }
  const RadialGrid g = build_grid(1e-4, 1, 40);
  const auto R = OperatorMatrix::assemble({KernelKind::Riesz, 3, 2.0}, g);
  const auto G = OperatorMatrix::assemble({KernelKind::Green, 3, 0.0}, g);
  const RadialProfile one = make_profile(g, [](double) { return 1.0; }, 0.0, TailModel::zero());
  {
    const double v = R.apply(one).values[0];
    out.push_back(check("I_2[1_B1] at innermost node = 2 pi", rel(v, 2 * pi) <= 1e-3,
                        fmt::format("{:.10g}, rel err {:.3e}", v, rel(v, 2 * pi))));
    const double w = G.apply(one).values[0], ex = 1 - 2 / std::exp(1.0);
    out.push_back(check("G[1_B1] at innermost node = 1 - 2/e", rel(w, ex) <= 1e-3,
                        fmt::format("{:.10g}, rel err {:.3e}", w, rel(w, ex))));
  }
  {
    const bool nonneg = R.weights().minCoeff() >= 0 && G.weights().minCoeff() >= 0;
    out.push_back(check("operator weights nonnegative", nonneg, ""));
    const RadialProfile a = make_profile(g, [](double r) { return std::exp(-r); }, 0.0, TailModel::zero());
    const RadialProfile b = make_profile(g, [](double r) { return r * r; }, 0.0, TailModel::zero());
    const Eigen::VectorXd lhs = R.apply(pointwise_add(a, b)).values;
    const Eigen::VectorXd rhs = R.apply(a).values + R.apply(b).values;
    const double err = (lhs - rhs).cwiseAbs().maxCoeff() / rhs.cwiseAbs().maxCoeff();
    out.push_back(check("linearity of apply", err <= 1e-12, fmt::format("{:.3e}", err)));
  }
  {
    const double e40 = green_inverse_error(40);
    const double e80 = green_inverse_error(80);
    out.push_back(check("(-Delta + 1) G[bump] = bump at 40 ppd", e40 <= 1e-3, fmt::format("rel sup err {:.3e}", e40)));
    out.push_back(check("Green inverse error halves at 80 ppd", e80 <= 0.5 * e40,
                        fmt::format("{:.3e} -> {:.3e}", e40, e80)));
  }
  return out;
}

std::vector<CheckResult> rates_suite() {
  std::vector<CheckResult> out;
  const int N = 5;
  const RadialGrid g = build_grid(1e-4, 30, 40);
  const auto green = OperatorMatrix::assemble({KernelKind::Green, N, 0}, g);
  const auto riesz2 = OperatorMatrix::assemble({KernelKind::Riesz, N, 2.0}, g);
  const auto riesz1 = OperatorMatrix::assemble({KernelKind::Riesz, N, 1.0}, g);
  const Rational one(1), two(2), three_halves(3, 2);
  for (int tau : {3, 2, 1}) {
    const RateCheck rc = verify_rate_transfer(RateOperator::Green, two, one, Rational(tau), green, riesz2);
    out.push_back(check(fmt::format("green N=5 tau={} -> {}", tau, rc.predicted.describe()), rc.pass, rc.detail));
  }
  for (int tau : {3, 2, 1}) {
    const RateCheck rc = verify_rate_transfer(RateOperator::Riesz, two, one, Rational(tau), green, riesz2);
    out.push_back(check(fmt::format("riesz N=5 alpha=2 tau={} -> {}", tau, rc.predicted.describe()), rc.pass, rc.detail));
  }
  const auto e = ProblemExponents::make(N, one, three_halves, Rational(6, 5));
  for (int tau : {3, 2, 1}) {
    const RateCheck rc =
        verify_rate_transfer(RateOperator::GreenOfRieszPower, one, three_halves, Rational(tau), green, riesz1);
    const auto cr = composite_rates(e, Rational(tau), one).riesz_power;
    const bool table = cr && *cr == rc.predicted;
    out.push_back(check(fmt::format("green(riesz(V^3/2)) N=5 alpha=1 tau={} -> {}", tau, rc.predicted.describe()),
                        rc.pass && table, rc.detail));
  }
  return out;
}

std::vector<CheckResult> bootstrap_suite() {
  std::vector<CheckResult> out;
  const auto R = [](const char* s) { return parse_rational(s); };
  {
    const auto e = ProblemExponents::make(4, R("1"), R("6/5"), R("1"));
    const auto start = bootstrap_t1(e);
    out.push_back(check("t1(4, 1, 6/5, 1) = 17/7", start.t1 && *start.t1 == R("17/7"),
                        start.t1 ? to_string(*start.t1) : "none"));
    const auto T = T_sequence(e);
    const std::vector<Rational> want{R("-2"), R("-7/5"), R("-19/50"), R("677/500")};
    std::string got;
    for (const auto& t : T.T) got += to_string(t) + " ";
    out.push_back(check("T_seq(4, 1, 6/5, 1)", T.T == want && T.n0 == 3, got + fmt::format("n0={}", T.n0)));
    bool law = T.ratio == R("17/10");
    Rational pw = 1;
    for (std::size_t n = 2; n < T.T.size(); ++n) {
      pw *= T.ratio;
      law = law && (T.T[n] - T.T[n - 1] == pw * (T.T[1] - T.T[0]));
    }
    out.push_back(check("T difference law with ratio 17/10", law, to_string(T.ratio)));
    const auto s = s_sequence(e, R("21/20"));
    bool grows = s.termination == STermination::ExceededHalfN && s.s.back() > 2;
    for (std::size_t n = 1; n < s.s.size(); ++n) grows = grows && s.s[n] / s.s[n - 1] >= R("20/17");
    out.push_back(check("s_seq(4, 1, 6/5, 1, 21/20) crosses 2 with growth >= 20/17", grows,
                        fmt::format("{} terms", s.s.size())));
  }
  {
    const auto e = ProblemExponents::make(3, R("2"), R("5/2"), R("1"));
    const auto start = bootstrap_t1(e);
    out.push_back(check("t1(3, 2, 5/2, 1) = 3", start.t1 && *start.t1 == 3, start.t1 ? to_string(*start.t1) : "none"));
    const auto T = T_sequence(e);
    out.push_back(check("T_seq(3, 2, 5/2, 1) = [-1, 1/2]", T.T == std::vector<Rational>{R("-1"), R("1/2")} && T.n0 == 1, ""));
    const auto s = s_sequence(e, R("11/10"));
    out.push_back(check("s_seq(3, 2, 5/2, 1, 11/10) = [11/10, 11/2]",
                        s.s == std::vector<Rational>{R("11/10"), R("11/2")} && s.n1 == 2, ""));
    bool rejected = false;
    try {
      s_sequence(e, R("3/2"));
    } catch (const DomainError&) {
      rejected = true;
    }
    out.push_back(check("s1 = 3/2 rejected", rejected, ""));
    out.push_back(check("balance identity (3, 2, 5/2, 1)", balance_identity_holds(e, *start.t1), ""));
  }
  {
    const auto e = ProblemExponents::make(3, R("2"), R("2"), R("1"));
    out.push_back(check("(3, 2, 2, 1) is p_at_alpha_critical",
                        bootstrap_t1(e).alpha_case == AlphaCase::PAtAlphaCritical, ""));
    bool rejected = false;
    try {
      bootstrap_t1(ProblemExponents::make(5, R("2"), R("2"), R("1")));
    } catch (const DomainError&) {
      rejected = true;
    }
    out.push_back(check("(5, 2, 2, 1) rejected as supercritical", rejected, ""));
  }
  return out;
}

}  // namespace

const std::vector<std::string>& verify_suite_names() {
  static const std::vector<std::string> names{"kernels", "operators", "rates", "bootstrap"};
  return names;
}

std::vector<CheckResult> run_verify_suite(const std::string& suite, std::ostream* kernel_csv) {
  if (suite == "kernels") return kernels_suite(kernel_csv);
  if (suite == "operators") return operators_suite();
  if (suite == "rates") return rates_suite();
  if (suite == "bootstrap") return bootstrap_suite();
  throw DomainError(fmt::format("unknown verify suite '{}'", suite));
}

}  // namespace choquard
