#include "choquard/radial.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

#include "choquard/exponents.hpp"
#include "quadrature.hpp"

namespace choquard {

RadialGrid build_grid(double r_min, double r_max, int points_per_decade) {
  if (!(r_min > 0) || !std::isfinite(r_max) || !(r_min < r_max)) {
    throw DomainError(fmt::format("grid needs 0 < r_min < r_max (got {}, {})", r_min, r_max));
  }
  if (points_per_decade < 1) throw DomainError("points_per_decade must be positive");
  const long m = std::lround(points_per_decade * std::log10(r_max / r_min)) + 1;
  RadialGrid g;
  const std::size_t M = static_cast<std::size_t>(std::max(m, 2L));
  g.ratio = std::pow(r_max / r_min, 1.0 / double(M - 1));
  g.r.resize(M);
  for (std::size_t i = 0; i < M; ++i) g.r[i] = r_min * std::pow(g.ratio, double(i));
  g.r_min = g.r.front();
  g.r_max = g.r.back();
  g.points_per_decade = points_per_decade;
  return g;
}

std::string TailModel::describe() const {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::ExpDecay: return fmt::format("exp_decay(rate={:.17g}, power={:.17g})", rate, power);
    case Kind::PowerLaw: return fmt::format("power_law(power={:.17g})", power);
  }
  return "?";
}

namespace {

// larger is slower
int tail_rank(const TailModel& t) {
  switch (t.kind) {
    case TailModel::Kind::Zero: return 0;
    case TailModel::Kind::ExpDecay: return 1;
    case TailModel::Kind::PowerLaw: return 2;
  }
  return 0;
}

}  // namespace

TailModel slower_tail(const TailModel& a, const TailModel& b) {
  if (tail_rank(a) != tail_rank(b)) return tail_rank(a) > tail_rank(b) ? a : b;
  if (a.kind == TailModel::Kind::ExpDecay && a.rate != b.rate) return a.rate < b.rate ? a : b;
  return a.power <= b.power ? a : b;
}

void validate(const RadialProfile& f) {
  if (static_cast<std::size_t>(f.values.size()) != f.grid.size()) {
    throw DomainError("profile size does not match its grid");
  }
  for (Eigen::Index i = 0; i < f.values.size(); ++i) {
    if (!std::isfinite(f.values[i]) || f.values[i] < 0) {
      throw DomainError(fmt::format("profile value at r = {} is not finite and nonnegative",
                                    f.grid.r[i]));
    }
  }
  if (f.origin_exponent && !(*f.origin_exponent >= 0)) {
    throw DomainError("origin exponent must be nonnegative");
  }
}

RadialProfile make_profile(const RadialGrid& g, const std::function<double(double)>& f,
                           std::optional<double> origin_exponent, TailModel tail) {
  RadialProfile out{g, Eigen::VectorXd(g.size()), origin_exponent, tail, false};
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g.r[i]);
  validate(out);
  return out;
}

RadialProfile gamma0_profile(const RadialGrid& g, int N, double k) {
  return make_profile(g, [&](double r) { return k * gamma0(N, r); }, N - 2.0,
                      TailModel::exp_decay(1.0, 0.5 * (N - 1)));
}

RadialProfile phi0_profile(const RadialGrid& g, int N, double k) {
  return make_profile(g, [&](double r) { return k * phi0(N, r); }, N - 2.0,
                      TailModel::exp_decay(0.5, 0.5 * (N - 1)));
}

double estimate_origin_exponent(const RadialProfile& f, std::size_t n) {
  n = std::min(n, f.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(f.values[i] > 0)) continue;
    const double x = std::log(f.grid.r[i]), y = std::log(f.values[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++used;
  }
  if (used < 2) return 0.0;
  const double slope = (used * sxy - sx * sy) / (used * sxx - sx * sx);
  return std::max(0.0, -slope);
}

RadialProfile pointwise_power(const RadialProfile& f, double e) {
  if (!(e >= 0)) throw DomainError("pointwise_power needs e >= 0");
  RadialProfile out = f;
  out.values = f.values.array().pow(e).matrix();
  const double sigma = f.origin_exponent.value_or(estimate_origin_exponent(f));
  out.origin_exponent = sigma * e;
  if (e == 0) {
    out.tail = TailModel::power_law(0);
  } else {
    switch (f.tail.kind) {
      case TailModel::Kind::Zero: break;
      case TailModel::Kind::ExpDecay: out.tail = TailModel::exp_decay(f.tail.rate * e, f.tail.power * e); break;
      case TailModel::Kind::PowerLaw: out.tail = TailModel::power_law(f.tail.power * e); break;
    }
  }
  return out;
}

RadialProfile pointwise_product(const RadialProfile& f, const RadialProfile& g) {
  if (!(f.grid == g.grid)) throw DomainError("pointwise_product: grids differ");
  RadialProfile out = f;
  out.values = f.values.cwiseProduct(g.values);
  out.origin_exponent = f.origin_exponent.value_or(estimate_origin_exponent(f)) +
                        g.origin_exponent.value_or(estimate_origin_exponent(g));
  out.annotation_warning = f.annotation_warning || g.annotation_warning;
  using K = TailModel::Kind;
  const TailModel& a = f.tail;
  const TailModel& b = g.tail;
  if (a.kind == K::Zero || b.kind == K::Zero) {
    out.tail = TailModel::zero();
  } else if (a.kind == K::PowerLaw && b.kind == K::PowerLaw) {
    out.tail = TailModel::power_law(a.power + b.power);
  } else {
    out.tail = TailModel::exp_decay(a.rate + b.rate, a.power + b.power);
  }
  return out;
}

RadialProfile pointwise_add(const RadialProfile& f, const RadialProfile& g) {
  if (!(f.grid == g.grid)) throw DomainError("pointwise_add: grids differ");
  RadialProfile out = f;
  out.values = f.values + g.values;
  out.origin_exponent = std::max(f.origin_exponent.value_or(estimate_origin_exponent(f)),
                                 g.origin_exponent.value_or(estimate_origin_exponent(g)));
  out.tail = slower_tail(f.tail, g.tail);
  out.annotation_warning = f.annotation_warning || g.annotation_warning;
  return out;
}

RadialProfile pointwise_scale(const RadialProfile& f, double c) {
  if (!(c >= 0)) throw DomainError("pointwise_scale needs c >= 0");
  RadialProfile out = f;
  out.values = f.values * c;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kDiagLevels = 20;

struct HatPair {
  double left = 0;   // ∫ (b-s)/(b-a) g(s) ds
  double right = 0;  // ∫ (s-a)/(b-a) g(s) ds
};

// Accumulates the hat moments of g over [lo, hi] ⊂ [a, b] with 8 points.
template <class G>
void add_panel(HatPair& acc, G&& g, double a, double b, double lo, double hi) {
  const detail::Rule& rule = detail::rule<8>();
  const double h = 0.5 * (hi - lo), m = 0.5 * (hi + lo), len = b - a;
  for (std::size_t q = 0; q < rule.x.size(); ++q) {
    const double s = m + h * rule.x[q];
    const double v = rule.w[q] * h * g(s);
    acc.left += v * (b - s) / len;
    acc.right += v * (s - a) / len;
  }
}

// Hat moments of s^{N-1} k(r, s) over the cell [a, b]. `sing` is -1 when
// r = a, +1 when r = b, 0 when r is off the cell.
HatPair cell_moments(const RadialKernel& kern, double r, double a, double b, int sing) {
  const int N = kern.N;
  auto g = [&](double s) { return std::pow(s, N - 1) * kern(r, s); };
  HatPair acc;
  if (sing == 0) {
    add_panel(acc, g, a, b, a, b);
    return acc;
  }
  const double len = b - a;
  // panels at distance len 2^{-k-1} .. len 2^{-k} from the singular end
  for (int k = 0; k < kDiagLevels - 1; ++k) {
    const double d0 = len * std::ldexp(1.0, -k - 1), d1 = len * std::ldexp(1.0, -k);
    if (sing < 0) add_panel(acc, g, a, b, a + d0, a + d1);
    else add_panel(acc, g, a, b, b - d1, b - d0);
  }
  const double delta = len * std::ldexp(1.0, -(kDiagLevels - 1));
  if (kern.kind == KernelKind::Riesz && kern.alpha < 1) {
    // k ~ c|r-s|^{α-1}: ∫_0^δ k ≈ k(δ) δ/α
    const double near = sing < 0 ? a + delta : b - delta;
    const double mass = std::pow(r, N - 1) * kern(r, near) * delta / kern.alpha;
    (sing < 0 ? acc.left : acc.right) += mass;
  } else if (sing < 0) {
    add_panel(acc, g, a, b, a, a + delta);
  } else {
    add_panel(acc, g, a, b, b - delta, b);
  }
  return acc;
}

template <class F>
void parallel_rows(std::size_t M, unsigned threads, F&& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, M));
  if (threads <= 1) {
    for (std::size_t i = 0; i < M; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < M; i += threads) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

OperatorMatrix OperatorMatrix::assemble(const RadialKernel& kernel, const RadialGrid& grid,
                                        unsigned threads) {
  if (kernel.N < 3) throw DomainError("operators need N >= 3");
  if (kernel.kind == KernelKind::Riesz && !(kernel.alpha > 0 && kernel.alpha < kernel.N)) {
    throw DomainError("Riesz order must lie in (0, N)");
  }
  const std::size_t M = grid.size();
  if (M < 2) throw DomainError("grid needs at least two nodes");
  OperatorMatrix op;
  op.kernel_ = kernel;
  op.grid_ = grid;
  op.weights_ = Eigen::MatrixXd::Zero(M, M);
  const auto& r = grid.r;

  if (kernel.kind == KernelKind::Riesz) {
    // Homogeneity: the row at r_i is r_i^α times the row at 1 shifted by i.
    const double rho = grid.ratio;
    const long D = static_cast<long>(M) - 1;
    std::vector<HatPair> cells(2 * D);  // offsets -D .. D-1
    parallel_rows(cells.size(), threads, [&](std::size_t c) {
      const long d = static_cast<long>(c) - D;
      const double a = std::pow(rho, double(d)), b = std::pow(rho, double(d + 1));
      const int sing = d == 0 ? -1 : (d == -1 ? 1 : 0);
      cells[c] = cell_moments(kernel, 1.0, a, b, sing);
    });
    for (std::size_t i = 0; i < M; ++i) {
      const double scale = std::pow(r[i], kernel.alpha);
      for (std::size_t j = 0; j < M; ++j) {
        const long d = static_cast<long>(j) - static_cast<long>(i);
        double w = 0;
        if (j + 1 < M) w += cells[d + D].left;
        if (j >= 1) w += cells[d - 1 + D].right;
        op.weights_(i, j) = scale * w;
      }
    }
  } else {
    parallel_rows(M, threads, [&](std::size_t i) {
      for (std::size_t c = 0; c + 1 < M; ++c) {
        const int sing = c == i ? -1 : (c + 1 == i ? 1 : 0);
        const HatPair hp = cell_moments(kernel, r[i], r[c], r[c + 1], sing);
        op.weights_(i, c) += hp.left;
        op.weights_(i, c + 1) += hp.right;
      }
    });
  }

  // origin cell: s = r_1 e^{-y}, panels graded toward y = 0
  op.origin_Y_ = 64;
  std::vector<double> breaks = detail::graded_breaks(0.0, 1.0, 1e-8);
  for (int y = 2; y <= op.origin_Y_; ++y) breaks.push_back(y);
  const detail::Rule& rule = detail::rule<8>();
  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double h = 0.5 * (breaks[b + 1] - breaks[b]), m = 0.5 * (breaks[b + 1] + breaks[b]);
    for (std::size_t q = 0; q < rule.x.size(); ++q) {
      op.origin_y_.push_back(m + h * rule.x[q]);
      op.origin_w_.push_back(h * rule.w[q]);
    }
  }
  op.origin_k_.resize(M, op.origin_y_.size());
  op.origin_inf_.resize(M);
  parallel_rows(M, threads, [&](std::size_t i) {
    for (std::size_t m = 0; m < op.origin_y_.size(); ++m) {
      op.origin_k_(i, m) = kernel(r[i], r[0] * std::exp(-op.origin_y_[m]));
    }
    op.origin_inf_[i] = kernel(r[i], 0.0);
  });

  op.tail_sref_ = r.back() * std::sqrt(grid.ratio);
  op.tail_k_.resize(M);
  parallel_rows(M, threads, [&](std::size_t i) { op.tail_k_[i] = kernel(r[i], op.tail_sref_); });
  return op;
}

Eigen::VectorXd OperatorMatrix::origin_column(double sigma) const {
  const int N = kernel_.N;
  const double gamma = N - sigma;
  if (!(gamma > 0)) {
    throw NonIntegrableOrigin(
        fmt::format("origin cell not integrable: s^(N-1-sigma) with sigma = {} >= N = {}", sigma, N),
        sigma);
  }
  const std::size_t n = origin_y_.size();
  Eigen::VectorXd wy(n);
  for (std::size_t m = 0; m < n; ++m) wy[m] = origin_w_[m] * std::exp(-gamma * origin_y_[m]);
  const double scale = std::pow(grid_.r.front(), N);
  return scale * (origin_k_ * wy + origin_inf_ * (std::exp(-gamma * origin_Y_) / gamma));
}

Eigen::VectorXd OperatorMatrix::tail_column(const TailModel& tail) const {
  const std::size_t M = grid_.size();
  if (tail.kind == TailModel::Kind::Zero) return Eigen::VectorXd::Zero(M);
  const int N = kernel_.N;
  const double rM = grid_.r.back(), sref = tail_sref_;
  const double m = tail.power;
  const double lambda = tail.kind == TailModel::Kind::ExpDecay ? tail.rate : 0.0;
  const bool green = kernel_.kind == KernelKind::Green;
  const double mu = lambda + (green ? 1.0 : 0.0);
  double moment = 0;
  if (mu > 0) {
    auto g = [&](double s) {
      double v = std::pow(s / rM, -m) * std::exp(-lambda * (s - rM)) * std::pow(s, N - 1);
      if (green) v *= std::exp(-(s - sref)) * std::pow(s / sref, -0.5 * (N - 1));
      else v *= std::pow(s / sref, kernel_.alpha - N);
      return v;
    };
    moment = detail::gl_composite<8>(g, rM, rM + 50.0 / mu, 50);
  } else {
    // ∫_{rM}^∞ (s/rM)^{-m} s^{N-1} (s/sref)^{α-N} ds
    const double alpha = kernel_.alpha;
    if (!(m > alpha)) {
      throw DomainError(fmt::format("power-law tail r^-{} is not Riesz-integrable (order {})", m, alpha));
    }
    moment = std::pow(rM, m) * std::pow(sref, N - alpha) * std::pow(rM, alpha - m) / (m - alpha);
  }
  return tail_k_ * moment;
}

RadialProfile OperatorMatrix::apply(const RadialProfile& f) const {
  if (!(f.grid == grid_)) throw DomainError("profile grid does not match operator grid");
  validate(f);
  const int N = kernel_.N;
  const std::size_t M = grid_.size();
  const double sigma = f.origin_exponent.value_or(estimate_origin_exponent(f));

  RadialProfile out;
  out.grid = grid_;
  out.values = weights_ * f.values;
  if (f.values[0] > 0) out.values += f.values[0] * origin_column(sigma);
  if (f.values[M - 1] > 0) out.values += f.values[M - 1] * tail_column(f.tail);

  const double order = kernel_.kind == KernelKind::Riesz ? kernel_.alpha : 2.0;
  out.origin_exponent = std::max(sigma - order, 0.0);
  if (kernel_.kind == KernelKind::Riesz) {
    TailModel t = TailModel::power_law(N - kernel_.alpha);
    if (f.tail.kind == TailModel::Kind::PowerLaw) {
      t = slower_tail(t, TailModel::power_law(f.tail.power - kernel_.alpha));
    }
    out.tail = t;
  } else {
    out.tail = slower_tail(TailModel::exp_decay(1.0, 0.5 * (N - 1)), f.tail);
  }

  out.annotation_warning = f.annotation_warning;
  if (f.origin_exponent && f.values[0] > 0 && f.values[1] > 0) {
    const double slope = -std::log(f.values[1] / f.values[0]) / std::log(grid_.ratio);
    if (std::abs(slope - *f.origin_exponent) > 0.5) out.annotation_warning = true;
  }
  return out;
}

}  // namespace choquard
