#include "choquard/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "choquard/kernels.hpp"

namespace choquard {

namespace {

// Least squares of y on the given columns.
Eigen::VectorXd lsq(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
  return A.colPivHouseholderQr().solve(y);
}

double rms(const Eigen::VectorXd& x) { return std::sqrt(x.squaredNorm() / double(x.size())); }

std::vector<std::size_t> nodes_in(const RadialGrid& g, double a, double b) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.r[i] >= a * (1 - 1e-12) && g.r[i] <= b * (1 + 1e-12)) idx.push_back(i);
  }
  return idx;
}

}  // namespace

double origin_correction_exponent(const ProblemExponents& e) {
  const Rational gap = Rational(e.N) + e.alpha - (e.p + e.q) * Rational(e.N - 2);  // T_1 - T_0
  double beta = std::min(to_double(gap), 2.0);
  if (e.N == 3) beta = std::min(beta, 1.0);
  return beta;
}

SingularityFit fit_origin(const RadialProfile& u, int N, std::optional<double> beta) {
  const RadialGrid& g = u.grid;
  SingularityFit fit;
  fit.r_a = g.r.front();
  fit.r_b = std::min(10 * g.r.front(), 0.05);
  fit.correction_exponent = beta.value_or(N == 3 ? 1.0 : 2.0);
  const auto idx = nodes_in(g, fit.r_a, fit.r_b);
  if (idx.size() < 3) throw DomainError("origin fit window holds fewer than three nodes");

  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd A(n, 2);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r = g.r[idx[j]];
    y[j] = u.values[idx[j]] * std::pow(r, N - 2);
    A(j, 0) = 1;
    A(j, 1) = std::pow(r, fit.correction_exponent);
  }
  const double scale = y.cwiseAbs().maxCoeff();
  if (!(scale > 0)) throw DomainError("profile has no r^(2-N) singularity (zero on the fit window)");
  // monotone up to round-off, else the grid does not resolve the singularity
  const double tol = 1e-6 * scale;
  double up = 0, down = 0;
  for (Eigen::Index j = 1; j < n; ++j) {
    up = std::max(up, y[j] - y[j - 1]);
    down = std::max(down, y[j - 1] - y[j]);
  }
  if (up > tol && down > tol) {
    throw DomainError("u r^(N-2) is not monotone on the origin window; refine the grid");
  }
  const Eigen::VectorXd c = lsq(A, y);
  fit.limit_estimate = c[0];
  fit.slope = c[1];
  fit.residual = rms(A * c - y);
  fit.accepted = fit.residual <= 1e-3 * std::abs(fit.limit_estimate);
  return fit;
}

DecayFit fit_decay(const RadialProfile& u) {
  const RadialGrid& g = u.grid;
  DecayFit fit;
  fit.r_b = g.r_max;
  fit.r_a = std::max(g.r_max / 2, 10.0);
  if (fit.r_a >= fit.r_b) fit.r_a = g.r_max / 2;
  const auto idx = nodes_in(g, fit.r_a, fit.r_b);
  if (idx.size() < 4) throw DomainError("decay fit window holds fewer than four nodes");
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd A(n, 3);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r = g.r[idx[j]], v = u.values[idx[j]];
    if (!(v > 0)) throw DomainError("profile vanishes on the decay window");
    y[j] = std::log(v);
    A(j, 0) = 1;
    A(j, 1) = -r;
    A(j, 2) = -std::log(r);
  }
  const Eigen::VectorXd c = lsq(A, y);
  fit.rate = c[1];
  fit.algebraic_power = c[2];
  fit.residual = rms(A * c - y);
  return fit;
}

double check_lower_bound(const RadialProfile& u, double k, int N) {
  double worst = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double lb = k * gamma0(N, u.grid.r[i]);
    worst = std::max(worst, (lb - u.values[i]) / lb);
  }
  return worst;
}

// ---------------------------------------------------------------------------

const char* to_string(RateOperator op) {
  switch (op) {
    case RateOperator::Green: return "green";
    case RateOperator::Riesz: return "riesz";
    case RateOperator::GreenOfRieszPower: return "green_of_riesz_power";
  }
  return "?";
}

RateCheck verify_rate_transfer(RateOperator op, int N, const Rational& alpha, const Rational& p,
                               const Rational& tau, const RadialGrid& grid) {
  const auto green = OperatorMatrix::assemble({KernelKind::Green, N, 0}, grid);
  const auto riesz = OperatorMatrix::assemble({KernelKind::Riesz, N, to_double(alpha)}, grid);
  return verify_rate_transfer(op, alpha, p, tau, green, riesz);
}

RateCheck verify_rate_transfer(RateOperator op, const Rational& alpha, const Rational& p,
                               const Rational& tau, const OperatorMatrix& green,
                               const OperatorMatrix& riesz) {
  const int N = green.kernel().N;
  const RadialGrid& grid = green.grid();
  if (!(riesz.grid() == grid) || riesz.kernel().N != N || riesz.kernel().alpha != to_double(alpha)) {
    throw DomainError("rate check operators disagree on grid, N or alpha");
  }
  if (!(tau > 0) || !(tau < N)) throw DomainError("tau must lie in (0, N)");
  RateCheck rc;
  rc.op = op;
  rc.N = N;
  rc.alpha = to_double(alpha);
  rc.p = to_double(p);
  rc.tau = to_double(tau);
  const auto power = SingularityRate::power(tau);
  switch (op) {
    case RateOperator::Green: rc.predicted = green_rate(power, N); break;
    case RateOperator::Riesz: rc.predicted = riesz_rate(power, alpha, N); break;
    case RateOperator::GreenOfRieszPower:
      rc.predicted = green_rate(riesz_rate(SingularityRate::power(p * tau), alpha, N), N);
      break;
  }

  const double t = rc.tau;
  const RadialProfile v = make_profile(
      grid, [t](double r) { return r <= 1 ? std::pow(r, -t) : std::exp(-r); }, t,
      TailModel::exp_decay(1, 0));
  RadialProfile y;
  switch (op) {
    case RateOperator::Green: y = green.apply(v); break;
    case RateOperator::Riesz: y = riesz.apply(v); break;
    case RateOperator::GreenOfRieszPower: y = green.apply(riesz.apply(pointwise_power(v, rc.p))); break;
  }

  const double r1 = grid.r.front();
  {
    const auto idx = nodes_in(grid, r1, 10 * r1);
    Eigen::MatrixXd A(idx.size(), 2);
    Eigen::VectorXd b(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
      A(j, 0) = 1;
      A(j, 1) = std::log(grid.r[idx[j]]);
      b[j] = std::log(y.values[idx[j]]);
    }
    rc.slope = lsq(A, b)[1];
  }
  {
    const auto idx = nodes_in(grid, r1, 100 * r1);
    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd ly(n), yy(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      A(j, 0) = 1;
      A(j, 1) = std::log(grid.r[idx[j]]);
      yy[j] = y.values[idx[j]];
      ly[j] = std::log(yy[j]);
    }
    const Eigen::VectorXd cp = lsq(A, ly);
    const Eigen::VectorXd yp = (A * cp).array().exp().matrix();
    rc.power_residual = rms(yp.cwiseQuotient(yy) - Eigen::VectorXd::Ones(n));
    Eigen::MatrixXd B = A;
    B.col(1) = -A.col(1);  // log(1/r)
    const Eigen::VectorXd cl = lsq(B, yy);
    rc.log_residual = rms((B * cl).cwiseQuotient(yy) - Eigen::VectorXd::Ones(n));
  }

  const double s = -rc.slope;
  if (s > 0.05 && rc.log_residual < rc.power_residual) rc.observed = "log";
  else if (s > 0.05) rc.observed = fmt::format("power({:.4f})", s);
  else rc.observed = "bounded";

  switch (rc.predicted.kind()) {
    case SingularityRate::Kind::Power: {
      const double e = to_double(rc.predicted.exponent());
      rc.pass = std::abs(s - e) <= 0.05;
      rc.detail = fmt::format("slope {:.4f} vs predicted {:.4f}", -s, -e);
      break;
    }
    case SingularityRate::Kind::Log:
      rc.pass = rc.log_residual < rc.power_residual;
      rc.detail = fmt::format("log residual {:.3e} vs power residual {:.3e}", rc.log_residual,
                              rc.power_residual);
      break;
    case SingularityRate::Kind::Bounded:
      rc.pass = std::abs(s) <= 0.05;
      rc.detail = fmt::format("slope {:.4f} vs predicted 0", -s);
      break;
  }
  return rc;
}

// ---------------------------------------------------------------------------

const char* to_string(GrowthClass g) {
  switch (g) {
    case GrowthClass::Convergent: return "convergent";
    case GrowthClass::LogDivergent: return "log_divergent";
    case GrowthClass::PowerDivergent: return "power_divergent";
    case GrowthClass::InnerDivergent: return "inner_divergent";
  }
  return "?";
}

GrowthClass predicted_growth(const ProblemExponents& e) {
  if (e.p * (e.N - 2) >= e.N) return GrowthClass::InnerDivergent;
  const Rational m = supercritical_density_exponent(e).exponent + e.N;
  if (m > 0) return GrowthClass::Convergent;
  if (m == 0) return GrowthClass::LogDivergent;
  return GrowthClass::PowerDivergent;
}

ProbeReport integrability_probe(const ProblemExponents& e, const std::vector<double>& epsilons) {
  if (epsilons.size() < 4) throw DomainError("the probe needs at least four epsilons");
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    if (!(epsilons[j] > 0 && epsilons[j] < 1) || (j > 0 && !(epsilons[j] < epsilons[j - 1]))) {
      throw DomainError("epsilons must decrease within (0, 1)");
    }
  }
  ProbeReport rep;
  rep.epsilons = epsilons;
  rep.density_exponent = supercritical_density_exponent(e).exponent;
  const int N = e.N;
  if (e.p * (N - 2) >= N) {
    // ∫_{B_1} |y|^{(2-N)p} |x-y|^{α-N} dy = +∞ for every x
    rep.growth = GrowthClass::InnerDivergent;
    return rep;
  }

  const double p = to_double(e.p), q = to_double(e.q);
  const RadialGrid g = build_grid(epsilons.back() / 10, 1.0, 20);
  const auto R = OperatorMatrix::assemble({KernelKind::Riesz, N, to_double(e.alpha)}, g);
  RadialProfile f = pointwise_power(gamma0_profile(g, N), p);
  f.tail = TailModel::zero();  // restricted to the unit ball
  const RadialProfile J = R.apply(f);

  // cumulative ∫_{r_i}^{1} in x = log r, trapezoid
  const std::size_t M = g.size();
  std::vector<double> x(M), cum(M, 0.0);
  for (std::size_t i = 0; i < M; ++i) x[i] = std::log(g.r[i]);
  auto h = [&](std::size_t i) {
    return J.values[i] * std::pow(gamma0(N, g.r[i]), q) * std::pow(g.r[i], N);
  };
  for (std::size_t i = M - 1; i-- > 0;) cum[i] = cum[i + 1] + 0.5 * (h(i) + h(i + 1)) * (x[i + 1] - x[i]);
  auto partial = [&](double eps) {
    const double xe = std::log(eps);
    auto it = std::upper_bound(x.begin(), x.end(), xe);
    const std::size_t j = std::clamp<std::size_t>(it - x.begin(), 1, M - 1);
    const double w = (xe - x[j - 1]) / (x[j] - x[j - 1]);
    return (1 - w) * cum[j - 1] + w * cum[j];
  };
  for (double eps : epsilons) rep.partial_integrals.push_back(partial(eps));

  // log of the increment density against log(1/ε) and log log(1/ε)
  const std::size_t n = epsilons.size() - 1;
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  bool positive = true;
  for (std::size_t j = 0; j < n; ++j) {
    const double dP = rep.partial_integrals[j + 1] - rep.partial_integrals[j];
    const double dx = std::log(epsilons[j] / epsilons[j + 1]);
    if (!(dP > 0)) positive = false;
    const double L = -0.5 * std::log(epsilons[j] * epsilons[j + 1]);
    A(j, 0) = 1;
    A(j, 1) = L;
    A(j, 2) = std::log(L);
    b[j] = std::log(std::max(dP, 1e-300) / dx);
  }
  if (!positive) {
    rep.growth = GrowthClass::Convergent;
    return rep;
  }
  const Eigen::VectorXd c = lsq(A, b);
  rep.rate = c[1];
  rep.log_power = c[2];
  if (rep.rate > 0.05) rep.growth = GrowthClass::PowerDivergent;
  else if (rep.rate < -0.05) rep.growth = GrowthClass::Convergent;
  else rep.growth = rep.log_power > -1 ? GrowthClass::LogDivergent : GrowthClass::Convergent;
  return rep;
}

nlohmann::json analysis_json(const RadialProfile& u, const ProblemExponents& e, double k) {
  const int N = e.N;
  nlohmann::json out;
  const double target = c_N(N) * k;
  try {
    const SingularityFit sf = fit_origin(u, N, origin_correction_exponent(e));
    out["singularity"] = {{"limit", sf.limit_estimate},
                          {"c_N_times_k", target},
                          {"rel_err", std::abs(sf.limit_estimate - target) / target},
                          {"correction_exponent", sf.correction_exponent},
                          {"window", {sf.r_a, sf.r_b}},
                          {"residual", sf.residual},
                          {"accepted", sf.accepted}};
  } catch (const DomainError& ex) {
    out["singularity"] = {{"error", ex.what()}};
  }
  try {
    const DecayFit df = fit_decay(u);
    out["decay"] = {{"rate", df.rate}, {"power", df.algebraic_power}, {"window", {df.r_a, df.r_b}},
                    {"residual", df.residual}};
  } catch (const DomainError& ex) {
    out["decay"] = {{"error", ex.what()}};
  }
  out["lower_bound_violation"] = check_lower_bound(u, k, N);
  return out;
}

}  // namespace choquard
