#include "choquard/exponents.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace choquard {

using boost::multiprecision::cpp_int;

namespace {

cpp_int parse_digits(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw DomainError(fmt::format("'{}' is not a rational number", whole));
  for (char c : digits) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw DomainError(fmt::format("'{}' is not a rational number", whole));
    }
  }
  // a leading 0 would make cpp_int read octal
  const auto first = digits.find_first_not_of('0');
  return first == std::string_view::npos ? cpp_int(0) : cpp_int(std::string(digits.substr(first)));
}

cpp_int ten_pow(long n) {
  cpp_int r = 1;
  for (long i = 0; i < n; ++i) r *= 10;
  return r;
}

Rational parse_decimal(std::string_view text, std::string_view whole) {
  bool negative = false;
  if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  long exponent = 0;
  if (auto epos = text.find_first_of("eE"); epos != std::string_view::npos) {
    std::string_view exp_part = text.substr(epos + 1);
    text = text.substr(0, epos);
    bool exp_negative = false;
    if (!exp_part.empty() && (exp_part.front() == '-' || exp_part.front() == '+')) {
      exp_negative = exp_part.front() == '-';
      exp_part.remove_prefix(1);
    }
    if (exp_part.empty() || exp_part.size() > 6) {
      throw DomainError(fmt::format("'{}' is not a rational number", whole));
    }
    exponent = parse_digits(exp_part, whole).convert_to<long>();
    if (exp_negative) exponent = -exponent;
  }
  std::string digits;
  long fraction_digits = 0;
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    std::string_view frac_part = text.substr(dot + 1);
    if (int_part.empty() && frac_part.empty()) {
      throw DomainError(fmt::format("'{}' is not a rational number", whole));
    }
    digits = std::string(int_part) + std::string(frac_part);
    fraction_digits = static_cast<long>(frac_part.size());
  } else {
    digits = std::string(text);
  }
  cpp_int mantissa = parse_digits(digits, whole);
  const long scale = exponent - fraction_digits;
  Rational value = scale >= 0 ? Rational(mantissa * ten_pow(scale))
                              : Rational(mantissa, ten_pow(-scale));
  return negative ? Rational(-value) : value;
}

Rational two_minus(const ProblemExponents& e) { return Rational(e.N - 2); }

}  // namespace

Rational parse_rational(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  const std::string_view whole = text;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_decimal(text.substr(0, slash), whole);
    Rational den = parse_decimal(text.substr(slash + 1), whole);
    if (den == 0) throw DomainError(fmt::format("'{}' has a zero denominator", whole));
    return num / den;
  }
  return parse_decimal(text, whole);
}

std::string to_string(const Rational& r) {
  const cpp_int num = boost::multiprecision::numerator(r);
  const cpp_int den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

ProblemExponents ProblemExponents::make(int N, Rational alpha, Rational p, Rational q) {
  if (N < 3) throw DomainError(fmt::format("N must be at least 3 (got {})", N));
  if (alpha <= 0 || alpha >= N) {
    throw DomainError(fmt::format("alpha must lie in (0, N) (got alpha = {}, N = {})",
                                  to_string(alpha), N));
  }
  if (p <= 0) throw DomainError(fmt::format("p must be positive (got {})", to_string(p)));
  if (q < 1) throw DomainError(fmt::format("q must be at least 1 (got {})", to_string(q)));
  return ProblemExponents{N, std::move(alpha), std::move(p), std::move(q)};
}

const char* to_string(CriticalityClass c) {
  return c == CriticalityClass::Subcritical ? "subcritical" : "supercritical";
}

const char* to_string(Trigger t) {
  switch (t) {
    case Trigger::Sum: return "sum";
    case Trigger::P: return "p";
    case Trigger::Q: return "q";
  }
  return "?";
}

const char* to_string(AlphaCase c) {
  switch (c) {
    case AlphaCase::PBelowAlphaCritical: return "p_below_alpha_critical";
    case AlphaCase::PAtAlphaCritical: return "p_at_alpha_critical";
    case AlphaCase::PAboveAlphaCritical: return "p_above_alpha_critical";
  }
  return "?";
}

CriticalityReport classify(const ProblemExponents& e) {
  CriticalityReport r;
  const Rational n2 = two_minus(e);
  r.sum_threshold = (Rational(e.N) + e.alpha) / n2;
  r.p_threshold = Rational(e.N) / n2;
  r.q_threshold = r.p_threshold;
  if (e.p + e.q >= r.sum_threshold) r.triggers.push_back(Trigger::Sum);
  if (e.p >= r.p_threshold) r.triggers.push_back(Trigger::P);
  if (e.q >= r.q_threshold) r.triggers.push_back(Trigger::Q);
  r.cls = r.triggers.empty() ? CriticalityClass::Subcritical : CriticalityClass::Supercritical;
  return r;
}

KThreshold k_threshold(double c, double p, double q) {
  if (!(c > 0)) throw DomainError("barrier constant c must be positive");
  const double s = p + q;
  if (!(s > 1)) throw DomainError(fmt::format("p + q must exceed 1 (got {})", s));
  KThreshold out;
  out.k_q = std::pow(1.0 / (c * s), 1.0 / (s - 1.0)) * (s - 1.0) / s;
  out.t_q = std::pow(s / (s - 1.0), s);
  return out;
}

Tangency tangency_admissible(double c, double k, double p, double q) {
  if (!(c > 0) || !(k > 0)) throw DomainError("c and k must be positive");
  const double s = p + q;
  if (!(s > 1)) throw DomainError(fmt::format("p + q must exceed 1 (got {})", s));
  const double lhs = c * std::pow(k, s - 1.0);
  const double rhs = std::pow((s - 1.0) / s, s - 1.0) / s;
  Tangency out;
  // Relative slack of a few ulps so that k = k_q computed in floating point
  // lands on the admissible side of the tangency.
  out.admissible = lhs <= rhs * (1.0 + 1e-12);
  if (out.admissible) out.witness_t = std::pow(s / (s - 1.0), s);
  return out;
}

// ---------------------------------------------------------------------------

SingularityRate SingularityRate::power(const Rational& e) {
  if (e < 0) throw DomainError("a power singularity needs a nonnegative exponent");
  if (e == 0) return bounded();
  return SingularityRate(Kind::Power, e);
}

std::string SingularityRate::describe() const {
  switch (kind_) {
    case Kind::Bounded: return "bounded";
    case Kind::Log: return "log";
    case Kind::Power: return "power(" + to_string(exponent_) + ")";
  }
  return "?";
}

int compare(const SingularityRate& a, const SingularityRate& b) {
  if (a.kind_ != b.kind_) return static_cast<int>(a.kind_) < static_cast<int>(b.kind_) ? -1 : 1;
  if (a.exponent_ == b.exponent_) return 0;
  return a.exponent_ < b.exponent_ ? -1 : 1;
}

namespace {

SingularityRate smoothing_rate(const SingularityRate& input, const Rational& order, int N) {
  if (input.kind() != SingularityRate::Kind::Power) return SingularityRate::bounded();
  const Rational& tau = input.exponent();
  if (tau >= N) {
    throw DomainError(fmt::format("singularity exponent tau = {} must be below N = {}",
                                  to_string(tau), N));
  }
  if (tau > order) return SingularityRate::power(tau - order);
  if (tau == order) return SingularityRate::log();
  return SingularityRate::bounded();
}

SingularityRate three_branch(const Rational& tau, const Rational& threshold,
                             const Rational& power_exponent) {
  if (tau > threshold) return SingularityRate::power(power_exponent);
  if (tau == threshold) return SingularityRate::log();
  return SingularityRate::bounded();
}

}  // namespace

SingularityRate green_rate(const SingularityRate& input, int N) {
  return smoothing_rate(input, Rational(2), N);
}

SingularityRate riesz_rate(const SingularityRate& input, const Rational& alpha, int N) {
  return smoothing_rate(input, alpha, N);
}

CompositeRates composite_rates(const ProblemExponents& e, const Rational& tau, const Rational& t) {
  const Rational n2 = two_minus(e);
  const Rational crit = Rational(e.N) / n2;
  if (!(e.p < crit)) throw DomainError("composite rates require p < N/(N-2)");
  if (!(e.q > 1)) throw DomainError("composite rates require q > 1");
  if (!(e.q < crit)) throw DomainError("composite rates require q < N/(N-2)");
  if (!(tau > 0)) throw DomainError("composite rates require tau > 0");
  if (!(tau <= n2)) throw DomainError("composite rates require tau <= N-2");
  if (!(t > 0)) throw DomainError("composite rates require t > 0");
  const bool riesz_ok = (e.p * tau - e.alpha) * t < e.N;
  const bool power_ok = tau * e.q * t < e.N;
  if (!riesz_ok && !power_ok) {
    throw DomainError("composite rates require (p*tau - alpha)*t < N or tau*q*t < N");
  }
  CompositeRates out;
  if (riesz_ok) {
    out.riesz_power = three_branch(tau, (e.alpha + Rational(2) / t) / e.p, t * (e.p * tau - e.alpha) - 2);
  }
  if (power_ok) out.power = three_branch(tau, Rational(2) / (e.q * t), tau * e.q * t - 2);
  return out;
}

// ---------------------------------------------------------------------------

BootstrapStart bootstrap_t1(const ProblemExponents& e) {
  if (!is_subcritical(e)) throw DomainError("bootstrap ledger requires subcritical exponents");
  const Rational n2 = two_minus(e);
  const Rational gap = e.p * n2 - e.alpha;
  BootstrapStart out;
  if (gap > 0) {
    out.alpha_case = AlphaCase::PAboveAlphaCritical;
    out.t1 = ((e.p + e.q) * n2 - e.alpha) / gap;
  } else if (gap == 0) {
    out.alpha_case = AlphaCase::PAtAlphaCritical;
  } else {
    out.alpha_case = AlphaCase::PBelowAlphaCritical;
  }
  return out;
}

bool balance_identity_holds(const ProblemExponents& e, const Rational& t1) {
  const Rational n2 = two_minus(e);
  const Rational lhs = Rational(e.N) / (t1 * (e.p * n2 - e.alpha));
  const Rational rhs = (t1 - 1) / t1 / e.q * Rational(e.N) / n2;
  return lhs == rhs;
}

namespace {

void require_above_case(const ProblemExponents& e, const char* what) {
  const BootstrapStart start = bootstrap_t1(e);
  if (start.alpha_case != AlphaCase::PAboveAlphaCritical) {
    throw DomainError(fmt::format("{} requires p(N-2) > alpha (case {})", what,
                                  to_string(start.alpha_case)));
  }
}

}  // namespace

Rational default_s1(const ProblemExponents& e) {
  require_above_case(e, "s_sequence");
  const Rational s = e.p + e.q;
  const Rational cap1 = Rational(e.N) / (s * two_minus(e) - e.alpha);
  const Rational cap2 = s * e.N / (2 * s + e.alpha);
  return (1 + (cap1 < cap2 ? cap1 : cap2)) / 2;
}

SSequence s_sequence(const ProblemExponents& e, std::optional<Rational> s1_in) {
  require_above_case(e, "s_sequence");
  const Rational s = e.p + e.q;
  const Rational N(e.N);
  const Rational half_n = N / 2;
  const Rational s1 = s1_in ? *s1_in : default_s1(e);
  const Rational upper = N / (s * two_minus(e) - e.alpha);
  if (!(s1 > 1)) throw DomainError("s_1 must exceed 1");
  if (!(s1 < upper)) throw DomainError("s_1 must be below N/((p+q)(N-2)-alpha)");
  if (!(s * (N - 2 * s1) - e.alpha * s1 > 0)) {
    throw DomainError("s_1 must keep (p+q)(N-2*s_1) - alpha*s_1 positive (got " +
                      to_string(s * (N - 2 * s1) - e.alpha * s1) + ")");
  }

  SSequence out;
  out.s.push_back(s1);
  constexpr std::size_t kMaxTerms = 100000;
  while (out.s.size() < kMaxTerms) {
    Rational cur = out.s.back();
    if (cur > half_n) {
      out.termination = STermination::ExceededHalfN;
      break;
    }
    if (cur == half_n && !out.refined_index) {
      const Rational prev = out.s.size() > 1 ? out.s[out.s.size() - 2] : Rational(1);
      cur -= (cur - prev) / 100;
      out.s.back() = cur;
      out.refined_index = out.s.size();
    }
    // the step is taken while its denominator is positive; the p-branch sign
    // at s_{n-1} decides the bounded-branch exit after it
    const Rational den = s * (N - 2 * cur) - e.alpha * cur;
    const bool bounded = e.p * (N - 2 * cur) - e.alpha * cur <= 0;
    if (den <= 0) {
      out.termination = STermination::BoundedBranch;
      break;
    }
    out.s.push_back(N * cur / den);
    if (out.s.back() > half_n) {
      out.termination = STermination::ExceededHalfN;
      break;
    }
    if (bounded) {
      out.termination = STermination::BoundedBranch;
      break;
    }
  }
  if (out.s.size() >= kMaxTerms) throw std::logic_error("s_sequence did not terminate");
  out.n1 = out.s.size();
  return out;
}

TSequence T_sequence(const ProblemExponents& e) {
  const BootstrapStart start = bootstrap_t1(e);
  if (!start.t1) throw DomainError("T_sequence requires a finite t1, i.e. p(N-2) > alpha");
  const Rational& t1 = *start.t1;
  const Rational n2 = two_minus(e);

  TSequence out;
  out.ratio = e.q * t1 / (t1 - 1);
  out.T.push_back(Rational(2 - e.N));
  const Rational T1 = 2 + e.alpha - (e.p + e.q) * n2;
  if (T1 != 2 + out.ratio * out.T[0]) throw std::logic_error("T_1 consistency failed");
  out.T.push_back(T1);
  while (out.T.back() <= 0) {
    if (out.T.size() > 100000) throw std::logic_error("T_sequence did not terminate");
    out.T.push_back(2 + out.ratio * out.T.back());
  }
  out.n0 = out.T.size() - 1;
  return out;
}

BootstrapLedger build_ledger(const ProblemExponents& e, std::optional<Rational> s1) {
  const BootstrapStart start = bootstrap_t1(e);
  BootstrapLedger out;
  out.alpha_case = start.alpha_case;
  out.t1 = start.t1;
  if (start.alpha_case == AlphaCase::PAboveAlphaCritical) {
    out.s = s_sequence(e, std::move(s1));
    out.T = T_sequence(e);
  }
  return out;
}

DensityExponent supercritical_density_exponent(const ProblemExponents& e) {
  DensityExponent out;
  out.exponent = Rational(2 - e.N) * (e.p + e.q) + e.alpha;
  out.locally_integrable = out.exponent > -e.N;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json rational_list(const std::vector<Rational>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : v) out.push_back(to_string(r));
  return out;
}

}  // namespace

nlohmann::json to_json(const ProblemExponents& e) {
  return {{"N", e.N}, {"alpha", to_string(e.alpha)}, {"p", to_string(e.p)}, {"q", to_string(e.q)}};
}

nlohmann::json to_json(const CriticalityReport& r) {
  nlohmann::json triggers = nlohmann::json::array();
  for (Trigger t : r.triggers) triggers.push_back(to_string(t));
  return {{"class", to_string(r.cls)},
          {"triggers", triggers},
          {"thresholds",
           {{"sum", to_string(r.sum_threshold)},
            {"p", to_string(r.p_threshold)},
            {"q", to_string(r.q_threshold)}}}};
}

nlohmann::json to_json(const BootstrapLedger& l) {
  nlohmann::json out;
  out["case"] = to_string(l.alpha_case);
  out["t1"] = l.t1 ? nlohmann::json(to_string(*l.t1)) : nlohmann::json(nullptr);
  if (l.s) {
    out["s_seq"] = rational_list(l.s->s);
    out["n1"] = l.s->n1;
    out["s_termination"] =
        l.s->termination == STermination::ExceededHalfN ? "exceeded_half_n" : "bounded_branch";
    out["s_refined_index"] =
        l.s->refined_index ? nlohmann::json(*l.s->refined_index) : nlohmann::json(nullptr);
  } else {
    out["s_seq"] = nlohmann::json::array();
    out["n1"] = nullptr;
  }
  if (l.T) {
    out["T_seq"] = rational_list(l.T->T);
    out["n0"] = l.T->n0;
    out["T_ratio"] = to_string(l.T->ratio);
  } else {
    out["T_seq"] = nlohmann::json::array();
    out["n0"] = nullptr;
  }
  return out;
}

}  // namespace choquard
