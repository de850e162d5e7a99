#pragma once

#include <cstdint>

#include "ebsa/inner_solver.hpp"
#include "ebsa/problem.hpp"

namespace ebsa {

struct ValueFunctionOptions {
  int starts = 5;          // default start plus perturbed copies
  double perturb = 0.5;    // scale of the normal perturbation on extra starts
  double psi_tol = 1e-8;   // slack residual required of an accepted run
  double r_floor = 1e-12;  // smoothing must shrink below this before acceptance
  int max_cycles = 600;
  std::uint64_t seed = 0x51AC5EEDULL;  // arbitrary fixed value, determinism only
  InnerOptions inner;
};

/// Lower-level optimal value V(x) = min_y { f(x,y) | g(x,y) <= 0 }, estimated
/// by driving the smoothed stationarity system with multiplier updates and a
/// shrinking smoothing parameter from several starts; best f over the starts
/// that converge.  Throws ValueFunctionFailure when none does.
double value_function(const BilevelProblem& prob, const Vector& x,
                      const ValueFunctionOptions& opts = {});

struct InfeaseBreakdown {
  double upper_ineq = 0;      // ||max(G,0)||_inf
  double upper_eq = 0;        // ||H||_inf
  double lower_ineq = 0;      // ||max(g,0)||_inf
  double optimality_gap = 0;  // f(x,y) - V(x), raw (may be slightly negative)
  double total = 0;           // sum of the four parts
  bool gap_valid = true;      // false when the value function did not converge
  bool applicable = false;    // parts with the gap clamped at 0 stay below 0.1
};

InfeaseBreakdown infeasibility(const BilevelProblem& prob, const Vector& x,
                               const Vector& y,
                               const ValueFunctionOptions& opts = {});

struct Ratios {
  double R_F = 0;
  double R_f = 0;
};

/// R_F = (F_val - F_star) / (1 + |F_star|) and the same in f.
Ratios ratios(double F_val, double f_val, double F_star, double f_star);

struct OracleSolution {
  Vector x, y;
  double F_val = 0;
  double f_val = 0;
  double resolution = 0;
  Box box;  // the box the final scan ran over
};

/// Axis grids for a box scan, one sorted point vector per coordinate.
struct GridAxes {
  std::vector<Vector> x_axes;
  std::vector<Vector> y_axes;
};

GridAxes make_axes(const Box& box, double resolution);

struct ScanBest {
  bool found = false;
  Vector x, y;
  double F_val = 0;
  double f_val = 0;
};

/// Reference scan: for each grid x, the feasible-grid lower minimum y*(x)
/// (g <= tol entrywise, ties to the lexicographically first y), then the
/// minimum of F over pairs with G <= tol and |H| <= tol, ties to the
/// lexicographically first x.
ScanBest scan_grid_serial(const BilevelProblem& prob, const GridAxes& axes,
                          double tol);

/// Same contract, x-slices sharded across OpenMP threads with a deterministic
/// reduction; results are identical to the serial scan for any thread count.
ScanBest scan_grid_openmp(const BilevelProblem& prob, const GridAxes& axes,
                          double tol);

/// Brute-force ground truth over prob.box.  Exhaustive at the requested
/// resolution for d+l <= 2; for d+l in {3,4} the scan refines through nested
/// boxes around the incumbent until the spacing reaches the resolution, with
/// the final level feasibility-tested at tol = resolution.
/// Throws IntractableDimension when d+l > 4, NoFeasiblePoint when a scan level
/// finds nothing feasible.
OracleSolution grid_oracle(const BilevelProblem& prob, double resolution);

/// Lower-level grid minimum at a fixed x over the box's y grid; the per-slice
/// building block of the oracle, exposed for cross-checks.
/// Throws NoFeasiblePoint when no grid y satisfies g <= resolution.
double lower_grid_min(const BilevelProblem& prob, const Vector& x,
                      double resolution);

struct LicqReport {
  std::size_t rank = 0;
  std::size_t active_count = 0;
  bool holds = true;
};

/// Numerical rank of the active lower-constraint gradients in y, with
/// activity meaning g_i >= -tol; rank counts singular values above
/// 1e-8 times the largest.
LicqReport check_licq(const BilevelProblem& prob, const Vector& x,
                      const Vector& y, double tol);

}  // namespace ebsa
