#include "choquard/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "choquard/exponents.hpp"
#include "quadrature.hpp"

namespace choquard {

namespace {

constexpr double pi = std::numbers::pi;

bool is_half_integer(double nu, int& n) {
  const double t = nu - 0.5;
  if (t < 0 || t > 40 || t != std::floor(t)) return false;
  n = static_cast<int>(t);
  return true;
}

// K_{n+1/2}(x) = sqrt(π/(2x)) e^{-x} Σ_k (n+k)!/(k!(n-k)!) (2x)^{-k}
double bessel_k_half(int n, double x) {
  double term = 1, sum = 1;
  for (int k = 1; k <= n; ++k) {
    term *= double(n + k) * double(n - k + 1) / (double(k) * 2 * x);
    sum += term;
  }
  return std::sqrt(pi / (2 * x)) * std::exp(-x) * sum;
}

// Angular integral of kern(d) sin^{N-2}θ over [0, π], d = |x - y| at angle θ.
// `scale` is the angle below which the integrand changes character; panels
// are graded geometrically away from it.
template <class K>
double angular_integral(int N, double r, double s, K&& kern, double scale) {
  const double rs = r * s;
  const double delta = r - s;
  auto integrand = [&](double th) {
    const double h = std::sin(0.5 * th);
    const double d = std::sqrt(delta * delta + 4 * rs * h * h);
    return kern(d) * std::pow(std::sin(th), N - 2);
  };
  double acc = detail::gl<10>(integrand, 0.0, scale);
  double a = scale;
  while (a < pi) {
    const double b = std::min(2 * a, pi);
    acc += detail::gl<10>(integrand, a, b);
    a = b;
  }
  return acc;
}

}  // namespace

double bessel_k(double nu, double x) {
  if (!(x > 0)) throw DomainError(fmt::format("bessel_k needs x > 0 (got {})", x));
  if (!(nu >= 0)) throw DomainError("bessel_k needs nu >= 0");
  int n = 0;
  if (is_half_integer(nu, n)) return bessel_k_half(n, x);
  return std::cyl_bessel_k(nu, x);
}

double gamma0(int N, double r) {
  if (!(r > 0)) throw DomainError(fmt::format("gamma0 needs r > 0 (got {})", r));
  if (N == 3) return std::exp(-r) / (4 * pi * r);
  const double nu = 0.5 * (N - 2);
  return std::pow(2 * pi, -0.5 * N) * std::pow(r, -nu) * bessel_k(nu, r);
}

double phi0(int N, double r) {
  if (!(r > 0)) throw DomainError(fmt::format("phi0 needs r > 0 (got {})", r));
  return std::ldexp(gamma0(N, 0.5 * r), 2 - N);
}

double c_N(int N) { return std::tgamma(0.5 * N - 1) / (4 * std::pow(pi, 0.5 * N)); }

double sphere_area(int d) {
  return 2 * std::pow(pi, 0.5 * (d + 1)) / std::tgamma(0.5 * (d + 1));
}

double riesz_angular(int N, double alpha, double r, double s) {
  if (r < 0 || s < 0 || (r == 0 && s == 0)) throw DomainError("riesz_angular needs r, s > 0");
  if (!(alpha > 0 && alpha < N)) throw DomainError("riesz_angular needs alpha in (0, N)");
  const double expo = 0.5 * (alpha - N);
  if (r == 0 || s == 0) return sphere_area(N - 1) * std::pow(std::max(r, s), alpha - N);
  auto kern = [expo](double d) { return std::pow(d * d, expo); };

  if (r == s) {
    if (alpha <= 1) return std::numeric_limits<double>::infinity();
    // integrand ~ θ^{α-2} at 0; θ = b v^{1/(α-1)} makes it regular in v
    const double b = pi / 16;
    const double beta = 1 / (alpha - 1);
    auto sub = [&](double v) {
      const double th = b * std::pow(v, beta);
      const double h = std::sin(0.5 * th);
      const double d = 2 * r * h;
      const double jac = b * beta * std::pow(v, beta - 1);
      return kern(d) * std::pow(std::sin(th), N - 2) * jac;
    };
    double acc = detail::gl_composite<10>(sub, 0.0, 1.0, 4);
    auto integrand = [&](double th) {
      const double d = 2 * r * std::sin(0.5 * th);
      return kern(d) * std::pow(std::sin(th), N - 2);
    };
    for (double a = b; a < pi;) {
      const double e = std::min(2 * a, pi);
      acc += detail::gl<10>(integrand, a, e);
      a = e;
    }
    return sphere_area(N - 2) * acc;
  }

  const double tw = std::abs(r - s) / std::sqrt(r * s);
  const double scale = std::min(tw, pi / 16);
  return sphere_area(N - 2) * angular_integral(N, r, s, kern, scale);
}

double green_angular(int N, double r, double s) {
  if (r < 0 || s < 0 || (r == 0 && s == 0)) throw DomainError("green_angular needs r, s > 0");
  if (r == 0 || s == 0) return sphere_area(N - 1) * gamma0(N, std::max(r, s));
  auto kern = [N](double d) { return gamma0(N, d); };
  const double rs = r * s;
  const double delta = std::abs(r - s);
  const double tw = r == s ? pi / 16 : delta / std::sqrt(rs);
  // width of the exp(-d) bump around θ = 0 for far-out radii
  const double tg = std::sqrt(2 * std::max(delta, 1.0) / rs);
  const double scale = std::min({tw, tg, pi / 16});
  return sphere_area(N - 2) * angular_integral(N, r, s, kern, scale);
}

}  // namespace choquard
