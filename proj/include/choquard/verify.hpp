#pragma once

// Self-check suites behind `choquard verify <suite>`.

#include <ostream>
#include <string>
#include <vector>

namespace choquard {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Suites: "kernels", "operators", "rates", "bootstrap". Throws DomainError
/// for an unknown name. `kernel_csv`, when set, receives the kernels audit
/// table (r, gamma0, phi0, closed_form, residual).
std::vector<CheckResult> run_verify_suite(const std::string& suite,
                                          std::ostream* kernel_csv = nullptr);

const std::vector<std::string>& verify_suite_names();

}  // namespace choquard
