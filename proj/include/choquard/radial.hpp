#pragma once

// Radial profiles on geometric grids and dense quadrature operators for the
// Riesz potential I_α and the Green operator 𝔾 = (-Δ + 1)^{-1}.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "choquard/kernels.hpp"
#include "json.hpp"

namespace choquard {

struct RadialGrid {
  std::vector<double> r;  // r_1 < ... < r_M
  double r_min = 0;
  double r_max = 0;
  int points_per_decade = 0;
  double ratio = 1;  // r_{i+1}/r_i

  std::size_t size() const { return r.size(); }
  friend bool operator==(const RadialGrid& a, const RadialGrid& b) { return a.r == b.r; }
};

/// M = round(ppd·log10(r_max/r_min)) + 1 geometrically spaced nodes.
RadialGrid build_grid(double r_min, double r_max, int points_per_decade);

/// Behaviour beyond r_max used by the operators.
struct TailModel {
  enum class Kind { Zero, ExpDecay, PowerLaw };
  Kind kind = Kind::Zero;
  double rate = 0;   // λ in r^{-m} e^{-λ r}
  double power = 0;  // m

  static TailModel zero() { return {}; }
  static TailModel exp_decay(double rate, double power) { return {Kind::ExpDecay, rate, power}; }
  static TailModel power_law(double power) { return {Kind::PowerLaw, 0, power}; }

  std::string describe() const;
  friend bool operator==(const TailModel&, const TailModel&) = default;
};

/// The slower-decaying of two tails.
TailModel slower_tail(const TailModel& a, const TailModel& b);

struct RadialProfile {
  RadialGrid grid;
  Eigen::VectorXd values;
  /// σ with u(r) ≈ u_1 (r/r_1)^{-σ} on (0, r_1); estimated when unset.
  std::optional<double> origin_exponent;
  TailModel tail;
  /// Set by apply when the σ annotation disagrees with the first-two-node slope.
  bool annotation_warning = false;

  std::size_t size() const { return grid.size(); }
  double sup() const { return values.size() ? values.maxCoeff() : 0.0; }
};

/// Validates nonnegative finite values and σ ≥ 0.
void validate(const RadialProfile& f);

RadialProfile make_profile(const RadialGrid& g, const std::function<double(double)>& f,
                           std::optional<double> origin_exponent, TailModel tail);

/// k·Γ_0 sampled on the grid with σ = N-2 and Yukawa tail.
RadialProfile gamma0_profile(const RadialGrid& g, int N, double k = 1.0);
/// k·Φ_0 with σ = N-2 and tail e^{-r/2} r^{-(N-1)/2}.
RadialProfile phi0_profile(const RadialGrid& g, int N, double k = 1.0);

/// -slope of log u against log r over the first `n` nodes (least squares).
double estimate_origin_exponent(const RadialProfile& f, std::size_t n = 3);

RadialProfile pointwise_power(const RadialProfile& f, double e);
RadialProfile pointwise_product(const RadialProfile& f, const RadialProfile& g);
RadialProfile pointwise_add(const RadialProfile& f, const RadialProfile& g);
RadialProfile pointwise_scale(const RadialProfile& f, double c);

/// The origin cell would need ∫_0 s^{N-1-σ} ds with σ ≥ N.
class NonIntegrableOrigin : public std::runtime_error {
 public:
  NonIntegrableOrigin(const std::string& what, double sigma)
      : std::runtime_error(what), sigma(sigma) {}
  double sigma;
};

class OperatorMatrix {
 public:
  /// Dense product-integration operator for `kernel` on `grid`. Rows are
  /// assembled in parallel on `threads` workers (0 picks the hardware count).
  static OperatorMatrix assemble(const RadialKernel& kernel, const RadialGrid& grid,
                                 unsigned threads = 0);

  /// ∫_0^∞ f(s) s^{N-1} k(r_i, s) ds at every node, with the origin cell
  /// and the tail beyond r_max integrated against the profile's annotations.
  RadialProfile apply(const RadialProfile& f) const;

  /// Contribution of the origin cell for a unit value at r_1.
  Eigen::VectorXd origin_column(double sigma) const;
  /// Contribution of the tail for a unit value at r_M.
  Eigen::VectorXd tail_column(const TailModel& tail) const;

  const RadialKernel& kernel() const { return kernel_; }
  const RadialGrid& grid() const { return grid_; }
  const Eigen::MatrixXd& weights() const { return weights_; }

 private:
  RadialKernel kernel_;
  RadialGrid grid_;
  Eigen::MatrixXd weights_;
  std::vector<double> origin_y_, origin_w_;
  Eigen::MatrixXd origin_k_;   // k(r_i, r_1 e^{-y_m})
  Eigen::VectorXd origin_inf_; // k(r_i, 0)
  double origin_Y_ = 0;
  double tail_sref_ = 0;
  Eigen::VectorXd tail_k_;     // k(r_i, s_ref)
};

/// Writes `r,value` rows with 17 significant digits.
void write_profile_csv(const std::string& path, const RadialProfile& f);
/// {origin_exponent, tail_model} sidecar.
nlohmann::json annotations_json(const RadialProfile& f);
RadialProfile read_profile_csv(const std::string& path, int points_per_decade);

}  // namespace choquard
