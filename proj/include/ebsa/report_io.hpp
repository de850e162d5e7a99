#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ebsa/ebsa.hpp"
#include "ebsa/metrics.hpp"

namespace ebsa {

/// One solver run in the reporting layer.  Every field lands in both the JSON
/// report and the summary CSV.
struct RunRecord {
  std::string problem;
  std::uint64_t seed = 0;
  int rep = 0;
  Vector x0, y0;  // perturbed start actually used
  std::string status;
  std::string stop_rule;
  int outer_iterations = 0;
  double res = 0;
  double F_val = 0;
  double f_val = 0;
  bool has_reference = false;
  double R_F = 0;  // NaN without a reference solution
  double R_f = 0;
  double infease_total = 0;
  double optimality_gap = 0;
  bool gap_valid = true;
  bool applicable = false;
  double wall_seconds = 0;
  Vector x_final, y_final;
};

nlohmann::json config_json(const SolverConfig& cfg);
nlohmann::json run_record_json(const RunRecord& rec);
nlohmann::json solve_report_json(const SolveReport& rep);

void write_text_file(const std::string& path, const std::string& content);

/// Per-iteration CSV: k, res, dnorm, sigma, theta, r, rho, c, gamma, alpha,
/// feasible, wall_seconds.
void write_trace_csv(const std::string& path, const SolveReport& rep);

/// Record rows (one per run) followed by per-problem "best" and "median"
/// aggregate rows carrying the applicable count.
void write_summary_csv(const std::string& path,
                       const std::vector<RunRecord>& records);

/// Plot-ready series: fig_rF.dat, fig_rf.dat, fig_infease.dat, fig_time.dat.
/// Each holds per-problem medians sorted ascending, two columns
/// (1-based case index, value).  Problems without the needed field are
/// skipped (no reference => no ratio rows; invalid gap => no infease row).
void write_fig_files(const std::string& dir,
                     const std::vector<RunRecord>& records);

/// Median of a copy of v (even count averages the middle pair).
double median(std::vector<double> v);

}  // namespace ebsa
