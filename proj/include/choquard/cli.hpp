#pragma once

// The `choquard` command line. Exit codes: 0 ok, 1 verify failure, 2 invalid
// input, 3 supercritical exponents, 4 diverged, 5 max iterations/undetermined.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace choquard::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kInvalid = 2,
  kSupercritical = 3,
  kDiverged = 4,
  kUndetermined = 5,
};

struct RunConfig {
  int N = 3;
  std::string alpha, p, q;
  std::optional<double> k;
  double r_min = 1e-4;
  double r_max = 30;
  int points_per_decade = 40;
  int max_iter = 2000;
  double conv_tol = 1e-8;
  std::optional<double> blowup_cap;
  std::string profile_csv, report_json, trace_json;
};

/// Reads a RunConfig JSON file; throws DomainError on malformed content.
RunConfig load_config(const std::string& path);

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace choquard::cli
