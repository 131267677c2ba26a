#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "choquard/exponents.hpp"
#include "choquard/kernels.hpp"
#include "choquard/radial.hpp"

using namespace choquard;
using std::numbers::pi;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ∫_0^∞ f(s) s^{N-1} k(r, s) ds with the kernel given in closed form, split at r
template <class F, class K>
double radial_oracle(int N, double r, F f, K k, double upper) {
  auto g = [&](double s) { return f(s) * std::pow(s, N - 1) * k(r, s); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  return GK::integrate(g, 0.0, std::min(r, upper), 15, 1e-13) +
         (r < upper ? GK::integrate(g, r, upper, 15, 1e-13) : 0.0);
}

double green3(double r, double s) {
  return (std::exp(-std::abs(r - s)) - std::exp(-(r + s))) / (2 * r * s);
}
double riesz3_2(double r, double s) { return 4 * pi / std::max(r, s); }
double riesz4_2(double r, double s) { return 2 * pi * pi / std::pow(std::max(r, s), 2); }

double bump(double r) { return std::exp(-r * r); }

// worst relative error over nodes in [a, b]
template <class Oracle>
double worst_error(const RadialProfile& u, double a, double b, Oracle ex) {
  double w = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = u.grid.r[i];
    if (r < a || r > b) continue;
    w = std::max(w, rel(u.values[static_cast<Eigen::Index>(i)], ex(r)));
  }
  return w;
}

}  // namespace

TEST_CASE("build_grid") {
  const auto g = build_grid(1e-4, 1, 4);
  CHECK(g.size() == 17);
  CHECK(g.ratio == doctest::Approx(std::pow(10.0, 0.25)).epsilon(1e-14));
  CHECK(g.r.front() == 1e-4);
  CHECK(g.r.back() == doctest::Approx(1).epsilon(1e-14));
  const auto h = build_grid(1e-4, 30, 40);
  CHECK(h.size() == 220);
  double dev = 0;
  for (std::size_t i = 1; i < h.size(); ++i) dev = std::max(dev, std::abs(h.r[i] / h.r[i - 1] - h.ratio));
  CHECK(dev < 1e-12);
  CHECK_THROWS_AS(build_grid(1, 1e-4, 40), DomainError);
  CHECK_THROWS_AS(build_grid(0, 1, 40), DomainError);
  CHECK_THROWS_AS(build_grid(1e-4, 1, 0), DomainError);
}

TEST_CASE("pointwise operations carry annotations") {
  const auto g = build_grid(1e-3, 25, 10);
  const auto G = gamma0_profile(g, 3, 2.0);
  REQUIRE(G.origin_exponent);
  CHECK(*G.origin_exponent == 1);
  CHECK(G.values[5] == doctest::Approx(2 * gamma0(3, g.r[5])));
  const auto P = pointwise_power(G, 2.5);
  CHECK(*P.origin_exponent == doctest::Approx(2.5));
  CHECK(P.tail.kind == TailModel::Kind::ExpDecay);
  CHECK(P.tail.rate == doctest::Approx(2.5 * G.tail.rate));
  const auto Q = pointwise_product(P, G);
  CHECK(*Q.origin_exponent == doctest::Approx(3.5));
  const auto Z = pointwise_scale(G, 0);
  CHECK(Z.values.cwiseAbs().maxCoeff() == 0);
  const auto S = pointwise_add(G, G);
  CHECK(S.values[3] == doctest::Approx(2 * G.values[3]));
  CHECK_THROWS_AS(pointwise_power(G, -1), DomainError);
  CHECK(estimate_origin_exponent(G) == doctest::Approx(1).epsilon(1e-2));
  const auto Phi = phi0_profile(g, 4);
  CHECK(*Phi.origin_exponent == 2);
  CHECK(Phi.tail.rate == doctest::Approx(0.5));
}

TEST_CASE("validate rejects bad profiles") {
  const auto g = build_grid(1e-3, 25, 10);
  auto f = gamma0_profile(g, 3);
  f.values[3] = -1;
  CHECK_THROWS_AS(validate(f), DomainError);
  f.values[3] = std::nan("");
  CHECK_THROWS_AS(validate(f), DomainError);
  auto h = gamma0_profile(g, 3);
  h.origin_exponent = -0.5;
  CHECK_THROWS_AS(validate(h), DomainError);
}

TEST_CASE("indicator oracles at the innermost node") {
  const auto g = build_grid(1e-4, 1, 40);
  const auto R = OperatorMatrix::assemble({KernelKind::Riesz, 3, 2.0}, g);
  const auto G = OperatorMatrix::assemble({KernelKind::Green, 3, 0.0}, g);
  const auto one = make_profile(g, [](double) { return 1.0; }, 0.0, TailModel::zero());
  CHECK(rel(R.apply(one).values[0], 2 * pi) < 1e-3);
  CHECK(rel(G.apply(one).values[0], 1 - 2 / std::exp(1.0)) < 1e-3);
  CHECK(R.weights().minCoeff() >= 0);
  CHECK(G.weights().minCoeff() >= 0);

  SUBCASE("r^{-1} cutoff, N = 3, alpha = 2") {
    const auto f = make_profile(g, [](double r) { return 1 / r; }, 1.0, TailModel::zero());
    const auto u = R.apply(f);
    CHECK(worst_error(u, 1e-4, 0.9, [](double r) { return 4 * pi * (1 - r / 2); }) < 1e-3);
    CHECK_FALSE(u.annotation_warning);
  }
  SUBCASE("indicator everywhere, N = 3, alpha = 2") {
    const auto u = R.apply(one);
    // ∫_0^1 s² 4π/max(r,s) ds = 2π - 2π r²/3
    CHECK(worst_error(u, 1e-4, 0.9, [](double r) { return 2 * pi - 2 * pi * r * r / 3; }) < 1e-3);
  }
}

TEST_CASE("r^{-1} cutoff, N = 4, alpha = 2") {
  const auto g = build_grid(1e-4, 1, 40);
  const auto R = OperatorMatrix::assemble({KernelKind::Riesz, 4, 2.0}, g);
  const auto f = make_profile(g, [](double r) { return 1 / r; }, 1.0, TailModel::zero());
  const auto u = R.apply(f);
  CHECK(worst_error(u, 1e-4, 0.9, [](double r) { return 2 * pi * pi * (1 - 2 * r / 3); }) < 1e-3);
}

TEST_CASE("Gaussian bump: Riesz matches 1D oracles at 160 ppd") {
  // hat product integration is second order; 40 ppd leaves a few 1e-3 here
  const auto g = build_grid(1e-4, 30, 160);
  const auto f = make_profile(g, bump, 0.0, TailModel::zero());
  const auto R3 = OperatorMatrix::assemble({KernelKind::Riesz, 3, 2.0}, g);
  CHECK(worst_error(R3.apply(f), 1e-4, 20, [](double r) { return radial_oracle(3, r, bump, riesz3_2, 12); }) < 1e-3);
  const auto R4 = OperatorMatrix::assemble({KernelKind::Riesz, 4, 2.0}, g);
  CHECK(worst_error(R4.apply(f), 1e-4, 20, [](double r) { return radial_oracle(4, r, bump, riesz4_2, 12); }) < 1e-3);
}

TEST_CASE("oracle error at least halves per doubling of points per decade") {
  auto errors = [](int ppd) {
    const auto g = build_grid(1e-3, 30, ppd);
    const auto f = make_profile(g, bump, 0.0, TailModel::zero());
    const auto G = OperatorMatrix::assemble({KernelKind::Green, 3, 0.0}, g);
    const auto R = OperatorMatrix::assemble({KernelKind::Riesz, 4, 2.0}, g);
    return std::pair{
        worst_error(G.apply(f), 1e-3, 8, [](double r) { return radial_oracle(3, r, bump, green3, 12); }),
        worst_error(R.apply(f), 1e-3, 20, [](double r) { return radial_oracle(4, r, bump, riesz4_2, 12); })};
  };
  const auto [g20, r20] = errors(20);
  const auto [g40, r40] = errors(40);
  const auto [g80, r80] = errors(80);
  MESSAGE("green " << g20 << " " << g40 << " " << g80 << ", riesz N=4 " << r20 << " " << r40 << " " << r80);
  CHECK(g40 <= 0.5 * g20);
  CHECK(g80 <= 0.5 * g40);
  CHECK(r40 <= 0.5 * r20);
  CHECK(r80 <= 0.5 * r40);
}

TEST_CASE("apply: linearity, monotonicity, zero, tails") {
  const auto g = build_grid(1e-3, 25, 16);
  const auto R = OperatorMatrix::assemble({KernelKind::Riesz, 3, 1.5}, g);
  const auto G = OperatorMatrix::assemble({KernelKind::Green, 3, 0.0}, g);
  const auto a = gamma0_profile(g, 3);
  const auto b = make_profile(g, [](double r) { return std::exp(-r); }, 0.0, TailModel::exp_decay(1, 0));
  // linear for profiles sharing σ and tail
  const auto c = make_profile(g, [](double r) { return (1 + r * r) * std::exp(-r) / r; }, 1.0, a.tail);
  for (const OperatorMatrix* m : {&R, &G}) {
    const auto lhs = m->apply(pointwise_add(a, c)).values;
    const Eigen::VectorXd rhs = m->apply(a).values + m->apply(c).values;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
    CHECK(m->apply(pointwise_scale(a, 0)).values.cwiseAbs().maxCoeff() == 0);
  }
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u01(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    auto lo = b;
    auto hi = b;
    for (Eigen::Index i = 0; i < lo.values.size(); ++i) {
      lo.values[i] *= u01(rng);
      hi.values[i] = lo.values[i] + u01(rng) * b.values[i];
    }
    const Eigen::VectorXd d = G.apply(hi).values - G.apply(lo).values;
    const Eigen::VectorXd e = R.apply(hi).values - R.apply(lo).values;
    CHECK(d.minCoeff() >= 0);
    CHECK(e.minCoeff() >= 0);
  }
  // annotations of the outputs
  const auto ra = R.apply(a);
  CHECK(*ra.origin_exponent == 0);
  CHECK(ra.tail.kind == TailModel::Kind::PowerLaw);
  CHECK(ra.tail.power == doctest::Approx(1.5));
  const auto ga = G.apply(pointwise_power(a, 2));
  CHECK(*ga.origin_exponent == doctest::Approx(0));
  CHECK(ga.tail.kind == TailModel::Kind::ExpDecay);
  CHECK(ga.tail.rate == doctest::Approx(1));
  // the power-law tail from the Riesz output is accepted by the next Green application
  CHECK(G.apply(ra).values.allFinite());
}

TEST_CASE("origin cell: non-integrable sigma and annotation warnings") {
  const auto g = build_grid(1e-3, 25, 16);
  const auto R = OperatorMatrix::assemble({KernelKind::Riesz, 3, 2.0}, g);
  const auto G3 = pointwise_power(gamma0_profile(g, 3), 3);
  CHECK_THROWS_AS(R.apply(G3), NonIntegrableOrigin);
  try {
    R.apply(G3);
  } catch (const NonIntegrableOrigin& ex) {
    CHECK(ex.sigma == doctest::Approx(3));
  }
  auto lying = gamma0_profile(g, 3);
  lying.origin_exponent = 0.0;
  CHECK(R.apply(lying).annotation_warning);
  CHECK_FALSE(R.apply(gamma0_profile(g, 3)).annotation_warning);
  const auto other = build_grid(1e-3, 25, 20);
  CHECK_THROWS_AS(R.apply(gamma0_profile(other, 3)), DomainError);
}

TEST_CASE("PowerLaw tail closed form requires m > alpha") {
  const auto g = build_grid(1e-3, 25, 16);
  const auto R = OperatorMatrix::assemble({KernelKind::Riesz, 3, 2.0}, g);
  const auto slow = make_profile(g, [](double r) { return 1 / (1 + r); }, 0.0, TailModel::power_law(1));
  CHECK_THROWS_AS(R.apply(slow), DomainError);
  const auto fast = make_profile(g, [](double r) { return 1 / (1 + r * r * r * r); }, 0.0, TailModel::power_law(4));
  CHECK(R.apply(fast).values.allFinite());
}

TEST_CASE("profile CSV round trip is bit exact") {
  const auto g = build_grid(1e-4, 30, 40);
  const auto f = gamma0_profile(g, 3, 0.37);
  const auto path = (std::filesystem::temp_directory_path() / "choquard_roundtrip.csv").string();
  write_profile_csv(path, f);
  const auto h = read_profile_csv(path, 40);
  REQUIRE(h.size() == f.size());
  CHECK(h.grid == f.grid);
  CHECK((h.values.array() == f.values.array()).all());
  const auto j = annotations_json(f);
  CHECK(j["origin_exponent"] == 1.0);
  CHECK(j["tail_model"]["kind"] == "exp_decay");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read_profile_csv("/nonexistent/x.csv", 40), DomainError);
}
