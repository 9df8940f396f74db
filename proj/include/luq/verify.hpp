#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "luq/common.hpp"

namespace luq {

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double bound = 0.0;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Registered suite names (one per module invariant block).
std::vector<std::string> verify_suite_names();

/// Runs one suite, or every suite for "all". Unknown names are errors.
std::vector<SuiteReport> run_verify(const std::string& suite_or_all, std::uint64_t seed,
                                    int n_threads);

/// One line per check: "PASS|FAIL <suite>.<name> <observed> <bound>".
std::string format_report(const std::vector<SuiteReport>& reports);

bool reports_all_pass(const std::vector<SuiteReport>& reports);

}  // namespace luq
