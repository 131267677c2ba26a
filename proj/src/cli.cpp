#include "choquard/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <fmt/format.h>
#include <fmt/os.h>

#include "CLI11.hpp"
#include "choquard/asymptotics.hpp"
#include "choquard/exponents.hpp"
#include "choquard/kernels.hpp"
#include "choquard/radial.hpp"
#include "choquard/solver.hpp"
#include "choquard/verify.hpp"

namespace choquard::cli {

using nlohmann::json;

namespace {

std::string exponent_text(const json& v, const char* name) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw DomainError(fmt::format("config: exponents.{} must be a string or number", name));
}

template <class T>
void read_field(const json& obj, const char* key, T& dst, const char* where) {
  if (!obj.contains(key) || obj[key].is_null()) return;
  try {
    dst = obj[key].get<T>();
  } catch (const json::exception&) {
    throw DomainError(fmt::format("config: {}.{} has the wrong type", where, key));
  }
}

// Options bound straight into a RunConfig; `seen` tells which were given.
struct Bound {
  RunConfig flags;
  std::string config_path;
  std::vector<std::pair<CLI::Option*, void (*)(RunConfig&, const RunConfig&)>> seen;
  double k = 0, blowup_cap = 0;
  CLI::Option* k_opt = nullptr;
  CLI::Option* cap_opt = nullptr;
};

#define CHQ_BIND(app, b, flag, field, desc)                                            \
  (b).seen.emplace_back((app)->add_option(flag, (b).flags.field, desc),                \
                        [](RunConfig& d, const RunConfig& s) { d.field = s.field; })

void add_exponents(CLI::App* app, Bound& b) {
  CHQ_BIND(app, b, "--N", N, "dimension (>= 3)");
  CHQ_BIND(app, b, "--alpha", alpha, "Riesz order, a/b or decimal");
  CHQ_BIND(app, b, "--p", p, "Riesz-side exponent");
  CHQ_BIND(app, b, "--q", q, "local exponent");
  app->add_option("--config", b.config_path, "RunConfig JSON; flags override it");
}

void add_run(CLI::App* app, Bound& b) {
  b.k_opt = app->add_option("--k", b.k, "Dirac coefficient");
  CHQ_BIND(app, b, "--r-min", r_min, "innermost grid node");
  CHQ_BIND(app, b, "--r-max", r_max, "outermost grid node");
  CHQ_BIND(app, b, "--ppd", points_per_decade, "grid points per decade");
  CHQ_BIND(app, b, "--max-iter", max_iter, "iteration limit");
  CHQ_BIND(app, b, "--conv-tol", conv_tol, "relative sup-norm step tolerance");
  b.cap_opt = app->add_option("--blowup-cap", b.blowup_cap, "divergence threshold");
}

void add_outputs(CLI::App* app, Bound& b) {
  CHQ_BIND(app, b, "--profile-csv", profile_csv, "profile CSV (annotations go to <csv>.json)");
  CHQ_BIND(app, b, "--report-json", report_json, "report JSON");
  CHQ_BIND(app, b, "--trace-json", trace_json, "iteration trace JSON");
}

#undef CHQ_BIND

RunConfig resolve(const Bound& b) {
  RunConfig cfg = b.config_path.empty() ? RunConfig{} : load_config(b.config_path);
  for (const auto& [opt, copy] : b.seen) {
    if (opt->count() > 0) copy(cfg, b.flags);
  }
  if (b.k_opt && b.k_opt->count() > 0) cfg.k = b.k;
  if (b.cap_opt && b.cap_opt->count() > 0) cfg.blowup_cap = b.blowup_cap;
  return cfg;
}

ProblemExponents exponents_of(const RunConfig& c) {
  for (auto [name, v] : {std::pair{"alpha", &c.alpha}, {"p", &c.p}, {"q", &c.q}}) {
    if (v->empty()) throw DomainError(fmt::format("--{} is required", name));
  }
  return ProblemExponents::make(c.N, parse_rational(c.alpha), parse_rational(c.p),
                                parse_rational(c.q));
}

void require_positive(double v, const char* what) {
  if (!(std::isfinite(v) && v > 0)) throw DomainError(fmt::format("{} must be positive (got {})", what, v));
}

void validate_grid(const RunConfig& c) {
  require_positive(c.r_min, "r_min");
  if (!(std::isfinite(c.r_max) && c.r_max > c.r_min)) {
    throw DomainError(fmt::format("r_max must exceed r_min (got {} <= {})", c.r_max, c.r_min));
  }
  if (c.points_per_decade < 8) {
    throw DomainError(fmt::format("points_per_decade must be >= 8 (got {})", c.points_per_decade));
  }
}

void validate_solver(const RunConfig& c) {
  if (c.max_iter < 1) throw DomainError("max_iter must be >= 1");
  require_positive(c.conv_tol, "conv_tol");
  if (c.blowup_cap) require_positive(*c.blowup_cap, "blowup_cap");
}

void validate_output(const std::string& path, const char* what) {
  if (path.empty()) return;
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (fs::is_directory(p)) throw DomainError(fmt::format("{} '{}' is a directory", what, path));
  fs::path dir = p.parent_path();
  if (dir.empty()) dir = ".";
  if (!fs::is_directory(dir)) {
    throw DomainError(fmt::format("{} '{}': directory '{}' does not exist", what, path, dir.string()));
  }
  if (::access(dir.c_str(), W_OK) != 0 || (fs::exists(p) && ::access(p.c_str(), W_OK) != 0)) {
    throw DomainError(fmt::format("{} '{}' is not writable", what, path));
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("cannot write " + path);
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json trace_json(const SolveOutcome& s) {
  json sup = json::array(), delta = json::array(), viol = json::array(), margin = json::array();
  for (const auto& r : s.trace.steps) {
    sup.push_back(r.sup);
    delta.push_back(r.rel_delta);
    viol.push_back(r.monotonicity_violation);
    margin.push_back(opt_json(r.barrier_margin));
  }
  return {{"verdict", to_string(s.verdict)},
          {"iterations", s.iterations},
          {"sup", sup},
          {"rel_delta", delta},
          {"monotonicity_violation", viol},
          {"barrier_margin", margin}};
}

json grid_json(const RadialGrid& g) {
  return {{"r_min", g.r_min}, {"r_max", g.r_max}, {"points_per_decade", g.points_per_decade},
          {"nodes", g.size()}};
}

const std::vector<double> kProbeEpsilons{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

json probe_json(const ProblemExponents& e) {
  const ProbeReport rep = integrability_probe(e, kProbeEpsilons);
  return {{"epsilons", rep.epsilons},
          {"partial_integrals", rep.partial_integrals},
          {"growth", to_string(rep.growth)},
          {"predicted", to_string(predicted_growth(e))},
          {"rate", rep.rate},
          {"log_power", rep.log_power},
          {"density_exponent", to_string(rep.density_exponent)}};
}

// --- commands --------------------------------------------------------------

int cmd_classify(const RunConfig& c, std::ostream& out) {
  const ProblemExponents e = exponents_of(c);
  const CriticalityReport rep = classify(e);
  json j = to_json(rep);
  j["exponents"] = to_json(e);
  const DensityExponent d = supercritical_density_exponent(e);
  j["density_exponent"] = {{"value", to_string(d.exponent)},
                           {"locally_integrable", d.locally_integrable}};
  if (rep.cls == CriticalityClass::Subcritical) j["ledger"] = to_json(build_ledger(e));
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_bootstrap(const RunConfig& c, const std::string& s1, std::ostream& out) {
  const ProblemExponents e = exponents_of(c);
  std::optional<Rational> s;
  if (!s1.empty()) s = parse_rational(s1);
  require_subcritical(e);
  json j = to_json(build_ledger(e, s));
  j["exponents"] = to_json(e);
  out << j.dump(2) << '\n';
  return kOk;
}

int cmd_solve(const RunConfig& c, unsigned threads, std::ostream& out) {
  const ProblemExponents e = exponents_of(c);
  if (!c.k) throw DomainError("--k is required");
  require_positive(*c.k, "k");
  validate_grid(c);
  validate_solver(c);
  validate_output(c.profile_csv, "profile_csv");
  if (!c.profile_csv.empty()) validate_output(c.profile_csv + ".json", "profile annotations");
  validate_output(c.report_json, "report_json");
  validate_output(c.trace_json, "trace_json");
  require_subcritical(e);

  const RadialGrid grid = build_grid(c.r_min, c.r_max, c.points_per_decade);
  const Operators ops(e.N, to_double(e.alpha), grid, threads);
  ProblemInstance inst{e, *c.k, c.max_iter, c.conv_tol, c.blowup_cap};

  const BarrierConstant bc = estimate_barrier_constant(e, ops);
  const double p = to_double(e.p), q = to_double(e.q);
  const KThreshold kt = k_threshold(bc.chat, p, q);
  const bool admissible = barrier_admissible(inst, bc.chat);
  std::optional<RadialProfile> w;
  if (admissible) w = barrier(inst, kt.t_q, barrier_core(e, ops), ops);

  const SolveOutcome s = solve_minimal(inst, ops, w ? &*w : nullptr);

  json report = {{"verdict", to_string(s.verdict)},
                 {"exponents", to_json(e)},
                 {"k", *c.k},
                 {"grid", grid_json(grid)},
                 {"iterations", s.iterations},
                 {"sup_norm", s.sup_norm},
                 {"chat", bc.chat},
                 {"chat_argmax_r", bc.argmax_r},
                 {"chat_ends_ok", bc.ends_ok},
                 {"khat_q", kt.k_q},
                 {"t_q", kt.t_q},
                 {"barrier_admissible", admissible},
                 {"max_monotonicity_violation", s.trace.max_violation()},
                 {"min_barrier_margin", opt_json(s.trace.min_barrier_margin())}};
  if (s.verdict == Verdict::Converged) {
    report["residual"] = s.residual;
    report.update(analysis_json(s.profile, e, *c.k));
  }

  if (!c.profile_csv.empty()) {
    write_profile_csv(c.profile_csv, s.profile);
    json ann = annotations_json(s.profile);
    ann["verdict"] = to_string(s.verdict);
    write_json(c.profile_csv + ".json", ann);
  }
  if (!c.trace_json.empty()) write_json(c.trace_json, trace_json(s));
  if (!c.report_json.empty()) write_json(c.report_json, report);

  out << json{{"verdict", to_string(s.verdict)},
              {"iterations", s.iterations},
              {"sup_norm", s.sup_norm},
              {"khat_q", kt.k_q},
              {"singularity_rel_err",
               report.contains("singularity") && report["singularity"].contains("rel_err")
                   ? report["singularity"]["rel_err"]
                   : json(nullptr)}}
             .dump(2)
      << '\n';
  switch (s.verdict) {
    case Verdict::Converged: return kOk;
    case Verdict::Diverged: return kDiverged;
    case Verdict::MaxIterations: return kUndetermined;
  }
  return kUndetermined;
}

struct SweepArgs {
  std::optional<double> k_lo, k_hi;
  int steps = 12;
  unsigned workers = 1;
  std::string out;
};

int cmd_sweep(const RunConfig& c, const SweepArgs& a, unsigned threads, std::ostream& out) {
  const ProblemExponents e = exponents_of(c);
  validate_grid(c);
  validate_solver(c);
  if (a.k_lo) require_positive(*a.k_lo, "k_lo");
  if (a.k_hi) require_positive(*a.k_hi, "k_hi");
  if (a.k_lo && a.k_hi && !(*a.k_lo < *a.k_hi)) throw DomainError("k bracket needs k_lo < k_hi");
  if (a.steps < 0) throw DomainError("steps must be >= 0");
  if (a.workers < 1) throw DomainError("workers must be >= 1");
  validate_output(a.out, "--out");
  require_subcritical(e);

  const RadialGrid grid = build_grid(c.r_min, c.r_max, c.points_per_decade);
  const Operators ops(e.N, to_double(e.alpha), grid, threads);
  const BarrierConstant bc = estimate_barrier_constant(e, ops);
  const KThreshold kt = k_threshold(bc.chat, to_double(e.p), to_double(e.q));
  const double lo = a.k_lo.value_or(0.5 * kt.k_q), hi = a.k_hi.value_or(50 * kt.k_q);
  if (!(lo < hi)) throw DomainError("k bracket needs k_lo < k_hi");

  ProblemInstance tmpl{e, lo, c.max_iter, c.conv_tol, std::nullopt};
  const KStarBracket br = estimate_kstar(tmpl, ops, lo, hi, a.steps, a.workers);
  json samples = json::array();
  for (const auto& s : br.samples) {
    samples.push_back({{"k", s.k}, {"verdict", to_string(s.verdict)}, {"iterations", s.iterations}});
  }
  const json j = {{"k_conv", br.k_conv},
                  {"k_div", br.k_div},
                  {"khat_q", kt.k_q},
                  {"chat", bc.chat},
                  {"t_q", kt.t_q},
                  {"k_lo", lo},
                  {"k_hi", hi},
                  {"steps_done", br.steps_done},
                  {"undetermined_k", opt_json(br.undetermined_k)},
                  {"samples", samples},
                  {"exponents", to_json(e)},
                  {"grid", grid_json(grid)}};
  if (!a.out.empty()) write_json(a.out, j);
  out << j.dump(2) << '\n';
  return br.undetermined_k ? kUndetermined : kOk;
}

int cmd_verify(const std::string& suite, const std::string& csv, std::ostream& out,
               std::ostream& err) {
  const auto& names = verify_suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw DomainError(fmt::format("unknown suite '{}' (kernels, operators, rates, bootstrap)", suite));
  }
  if (!csv.empty() && suite != "kernels") throw DomainError("--csv only applies to the kernels suite");
  validate_output(csv, "--csv");
  std::ofstream f;
  if (!csv.empty()) f.open(csv, std::ios::binary);
  const auto results = run_verify_suite(suite, csv.empty() ? nullptr : &f);
  out << "1.." << results.size() << '\n';
  const CheckResult* first_fail = nullptr;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << (r.pass ? "ok " : "not ok ") << i + 1 << " - " << r.name;
    if (!r.detail.empty()) out << " # " << r.detail;
    out << '\n';
    if (!r.pass && !first_fail) first_fail = &r;
  }
  if (first_fail) {
    err << "verify " << suite << ": first failing check: " << first_fail->name << '\n';
    return kVerifyFailed;
  }
  return kOk;
}

struct ReportArgs {
  std::string profile;
  std::string out_json, out_csv;
};

int cmd_report(const RunConfig& c, const ReportArgs& a, std::ostream& out) {
  const ProblemExponents e = exponents_of(c);
  if (!c.k) throw DomainError("--k is required");
  require_positive(*c.k, "k");
  if (c.points_per_decade < 8) throw DomainError("points_per_decade must be >= 8");
  if (a.profile.empty()) throw DomainError("--profile is required");
  validate_output(a.out_json, "--out-json");
  validate_output(a.out_csv, "--out-csv");
  require_subcritical(e);
  const RadialProfile u = read_profile_csv(a.profile, c.points_per_decade);

  json j = analysis_json(u, e, *c.k);
  j["exponents"] = to_json(e);
  j["k"] = *c.k;
  j["grid"] = grid_json(u.grid);
  j["probes"] = json::array({probe_json(e)});

  if (!a.out_csv.empty()) {
    auto f = fmt::output_file(a.out_csv);
    f.print("r,u,u_r_N2,k_gamma0\n");
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double r = u.grid.r[i], v = u.values[static_cast<Eigen::Index>(i)];
      f.print("{:.17g},{:.17g},{:.17g},{:.17g}\n", r, v, v * std::pow(r, e.N - 2),
              *c.k * gamma0(e.N, r));
    }
  }
  if (!a.out_json.empty()) write_json(a.out_json, j);
  out << j.dump(2) << '\n';
  return kOk;
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DomainError(fmt::format("cannot read config '{}'", path));
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& ex) {
    throw DomainError(fmt::format("config '{}' is not valid JSON: {}", path, ex.what()));
  }
  if (!j.is_object()) throw DomainError("config must be a JSON object");
  RunConfig c;
  if (j.contains("exponents")) {
    const json& x = j["exponents"];
    read_field(x, "N", c.N, "exponents");
    for (auto [name, dst] : {std::pair{"alpha", &c.alpha}, {"p", &c.p}, {"q", &c.q}}) {
      if (x.contains(name)) *dst = exponent_text(x[name], name);
    }
  }
  if (j.contains("k") && !j["k"].is_null()) {
    if (!j["k"].is_number()) throw DomainError("config: k must be a number");
    c.k = j["k"].get<double>();
  }
  if (j.contains("grid")) {
    read_field(j["grid"], "r_min", c.r_min, "grid");
    read_field(j["grid"], "r_max", c.r_max, "grid");
    read_field(j["grid"], "points_per_decade", c.points_per_decade, "grid");
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    read_field(s, "max_iter", c.max_iter, "solver");
    read_field(s, "conv_tol", c.conv_tol, "solver");
    if (s.contains("blowup_cap") && !s["blowup_cap"].is_null()) {
      double cap = 0;
      read_field(s, "blowup_cap", cap, "solver");
      c.blowup_cap = cap;
    }
  }
  if (j.contains("outputs")) {
    read_field(j["outputs"], "profile_csv", c.profile_csv, "outputs");
    read_field(j["outputs"], "report_json", c.report_json, "outputs");
    read_field(j["outputs"], "trace_json", c.trace_json, "outputs");
  }
  return c;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Singular solutions of -Δu + u = I_α[u^p]u^q + kδ_0 in R^N", "choquard"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "assembly threads (0 = all cores)");

  Bound cls, boot, solve, sweep, rep;
  std::string s1, suite, csv;
  SweepArgs sw;
  ReportArgs ra;
  double k_lo = 0, k_hi = 0;

  auto* c_cls = app.add_subcommand("classify", "criticality class and bootstrap ledger");
  add_exponents(c_cls, cls);

  auto* c_boot = app.add_subcommand("bootstrap", "exact bootstrap ledger");
  add_exponents(c_boot, boot);
  c_boot->add_option("--s1", s1, "starting integrability index");

  auto* c_solve = app.add_subcommand("solve", "minimal solution by monotone iteration");
  add_exponents(c_solve, solve);
  add_run(c_solve, solve);
  add_outputs(c_solve, solve);

  auto* c_sweep = app.add_subcommand("sweep-k", "bisection bracket for k*");
  add_exponents(c_sweep, sweep);
  add_run(c_sweep, sweep);
  auto* o_lo = c_sweep->add_option("--k-lo", k_lo, "convergent end (default khat_q/2)");
  auto* o_hi = c_sweep->add_option("--k-hi", k_hi, "divergent end (default 50 khat_q)");
  c_sweep->add_option("--steps", sw.steps, "bisection steps")->capture_default_str();
  c_sweep->add_option("--workers", sw.workers, "concurrent endpoint solves")->capture_default_str();
  c_sweep->add_option("--out", sw.out, "also write the bracket JSON here");

  auto* c_verify = app.add_subcommand("verify", "self-check suite, TAP output");
  c_verify->add_option("suite", suite, "kernels | operators | rates | bootstrap")->required();
  c_verify->add_option("--csv", csv, "kernels audit table");

  auto* c_rep = app.add_subcommand("report", "asymptotic analysis of a saved profile");
  add_exponents(c_rep, rep);
  add_run(c_rep, rep);
  c_rep->add_option("--profile", ra.profile, "profile CSV from solve")->required();
  c_rep->add_option("--out-json", ra.out_json, "report JSON");
  c_rep->add_option("--out-csv", ra.out_csv, "r, u, u r^(N-2), k Gamma_0 table");

  std::vector<std::string> storage{"choquard"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*c_cls) return cmd_classify(resolve(cls), out);
    if (*c_boot) return cmd_bootstrap(resolve(boot), s1, out);
    if (*c_solve) return cmd_solve(resolve(solve), threads, out);
    if (*c_sweep) {
      if (o_lo->count()) sw.k_lo = k_lo;
      if (o_hi->count()) sw.k_hi = k_hi;
      return cmd_sweep(resolve(sweep), sw, threads, out);
    }
    if (*c_verify) return cmd_verify(suite, csv, out, err);
    if (*c_rep) return cmd_report(resolve(rep), ra, out);
  } catch (const SupercriticalInput& ex) {
    err << "error: " << ex.what() << '\n';
    return kSupercritical;
  } catch (const DomainError& ex) {
    err << "error: " << ex.what() << '\n';
    return kInvalid;
  } catch (const NonIntegrableOrigin& ex) {
    err << "error: " << ex.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace choquard::cli
