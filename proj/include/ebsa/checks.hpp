#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebsa/problem.hpp"

namespace ebsa {

struct CheckEntry {
  std::string problem;
  std::string what;  // derivative field name or identity label
  double max_err = 0.0;
  double tol = 0.0;
  bool pass = true;
};

struct CheckSuiteResult {
  std::vector<CheckEntry> entries;
  bool all_pass = true;
};

/// Derivative validation plus the slack-pair identity sweep over a problem
/// list.  Per problem: every analytic derivative against central differences
/// at `points` box samples, then random (s, r, rho) tuples at box points
/// checking z >= 0, kappa >= 0, z*kappa = r*rho and z+g = kappa - rho*s to
/// within tol-scaled error.
CheckSuiteResult run_problem_checks(
    const std::vector<const BilevelProblem*>& problems, double tol,
    std::uint64_t seed, int points);

/// The same suite over the built-in corpus.
CheckSuiteResult run_corpus_checks(double tol, std::uint64_t seed, int points);

/// Render failing entries (or all of them) as an aligned text table.
std::string format_check_table(const CheckSuiteResult& result,
                               bool failures_only);

}  // namespace ebsa
