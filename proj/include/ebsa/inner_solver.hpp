#pragma once

#include "ebsa/problem.hpp"
#include "ebsa/smoothing.hpp"

namespace ebsa {

enum class InnerStatus {
  Converged,
  MaxIterations,
  LineSearchStall,
  SingularHessian,
};

const char* to_string(InnerStatus s);

struct InnerResult {
  Vector y;
  InnerStatus status = InnerStatus::MaxIterations;
  int iterations = 0;
  double phi_norm = 0.0;   // ||grad_y of the smoothed objective|| at exit
  double f_tilde = 0.0;    // smoothed objective value at exit
  int levenberg_shifts = 0;
};

struct InnerOptions {
  int max_iterations = 200;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  double levenberg_tau0 = 1e-6;  // first diagonal shift tried on a bad step
  int max_shift_retries = 8;     // shift grows tenfold per retry
};

/// Minimise the smoothed lower-level objective over y at fixed (x, s, r, rho).
/// Newton steps on the y-gradient, shifted when the step is not a descent
/// direction or the linear solve fails, with an Armijo backtracking search on
/// the objective value.  Stops once ||grad_y|| <= tol.
InnerResult minimize_y(const BilevelProblem& prob, const Vector& x,
                       const Vector& y0, const Vector& s, double r, double rho,
                       double tol, const InnerOptions& opts = {});

struct InnerStepDiagnostics {
  double hessian_min_eig_estimate = 0.0;
  double step_norm = 0.0;
};

/// One Newton step worth of diagnostics at a point: smallest eigenvalue of the
/// y-Hessian of the smoothed objective and the unshifted step length.
InnerStepDiagnostics inner_step_diagnostics(const BilevelProblem& prob,
                                            const Vector& x, const Vector& y,
                                            const Vector& s, double r,
                                            double rho);

struct KktResult {
  Vector y;
  Vector s;
  InnerStatus status = InnerStatus::MaxIterations;
  int iterations = 0;
  double residual_norm = 0.0;  // ||C|| at exit
};

/// Solve the smoothed stationarity system C(x, y, s) = 0 in (y, s) jointly by
/// damped Newton with backtracking on ||C||^2.  Used to evaluate the smoothed
/// solution path at a fixed x.
KktResult solve_smoothed_kkt(const BilevelProblem& prob, const Vector& x,
                             const Vector& y0, const Vector& s0, double r,
                             double rho, double tol,
                             const InnerOptions& opts = {});

}  // namespace ebsa
