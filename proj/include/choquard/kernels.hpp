#pragma once

// Yukawa fundamental solutions and angularly averaged radial kernels.

namespace choquard {

/// Modified Bessel function of the second kind K_ν(x), x > 0.
/// Half-integer orders use the terminating closed form.
double bessel_k(double nu, double x);

/// Fundamental solution of -Δ + 1 in R^N:
/// (2π)^{-N/2} r^{(2-N)/2} K_{(N-2)/2}(r).
double gamma0(int N, double r);

/// Fundamental solution of -Δ + 1/4: 2^{2-N} gamma0(N, r/2).
double phi0(int N, double r);

/// Γ(N/2 - 1)/(4π^{N/2}), the limit of r^{N-2} gamma0(N, r) at 0.
double c_N(int N);

/// Surface area of the unit sphere S^d ⊂ R^{d+1}.
double sphere_area(int d);

/// |S^{N-2}| ∫_0^π (r² + s² - 2rs cos θ)^{(α-N)/2} sin^{N-2}θ dθ, so that
/// I_α[f](r) = ∫_0^∞ f(s) s^{N-1} riesz_angular(N, α, r, s) ds for radial f.
/// s = 0 (or r = 0) gives the limit |S^{N-1}| max(r,s)^{α-N}.
/// On the diagonal r = s the value is finite only for α > 1; +∞ otherwise.
double riesz_angular(int N, double alpha, double r, double s);

/// Same reduction for the kernel gamma0(N, |x - y|).
double green_angular(int N, double r, double s);

enum class KernelKind { Riesz, Green };

/// A radial kernel k(r, s) with its parameters bound.
struct RadialKernel {
  KernelKind kind = KernelKind::Green;
  int N = 3;
  double alpha = 0;  // Riesz order; unused for Green

  double operator()(double r, double s) const {
    return kind == KernelKind::Riesz ? riesz_angular(N, alpha, r, s) : green_angular(N, r, s);
  }
};

}  // namespace choquard
