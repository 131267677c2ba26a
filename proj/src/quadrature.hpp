#pragma once

// Fixed Gauss-Legendre rules and panel helpers shared by the kernel and
// operator code. Internal header.

#include <array>
#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace choquard::detail {

struct Rule {
  std::vector<double> x;  // on [-1, 1]
  std::vector<double> w;
};

template <unsigned P>
Rule make_rule() {
  using G = boost::math::quadrature::gauss<double, P>;
  const auto& a = G::abscissa();
  const auto& wt = G::weights();
  Rule r;
  // boost stores the nonnegative half; a leading zero node exists for odd P
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] == 0.0) continue;
    r.x.push_back(-a[i]);
    r.w.push_back(wt[i]);
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.x.push_back(a[i]);
    r.w.push_back(wt[i]);
  }
  return r;
}

template <unsigned P>
const Rule& rule() {
  static const Rule r = make_rule<P>();
  return r;
}

// ∫_a^b f with a P-point rule.
template <unsigned P, class F>
double gl(F&& f, double a, double b) {
  const Rule& r = rule<P>();
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  double acc = 0;
  for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(m + h * r.x[i]);
  return acc * h;
}

// ∫_a^b f on n equal panels.
template <unsigned P, class F>
double gl_composite(F&& f, double a, double b, int n) {
  double acc = 0;
  const double h = (b - a) / n;
  for (int k = 0; k < n; ++k) acc += gl<P>(f, a + k * h, a + (k + 1) * h);
  return acc;
}

// Breakpoints a = x_0 < ... < x_n = b graded geometrically toward a, with the
// smallest panel of width about `first` (clipped to the interval).
inline std::vector<double> graded_breaks(double a, double b, double first) {
  std::vector<double> out{a};
  double w = first;
  while (a + 2 * w < b) {
    out.push_back(a + w);
    w *= 2;
  }
  out.push_back(b);
  return out;
}

}  // namespace choquard::detail
