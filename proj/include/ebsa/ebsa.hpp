#pragma once

#include <string>

#include "ebsa/inner_solver.hpp"
#include "ebsa/numkit.hpp"
#include "ebsa/problem.hpp"

namespace ebsa {

/// Practical stopping rules applied to the residual sequence
/// Res_k = max(||d_k||, sigma_k).  Any one of them ends the run.
struct StopRules {
  double res_tol = 1e-9;       // Res_k below this: converged
  int k_cap = 1000;            // k beyond this: iteration cap
  int flat_after = 200;        // |Res_k - Res_{k-1}| < flat_tol once k > flat_after
  double flat_tol = 1e-18;
  int diverged_after = 300;    // Res_k > diverged_res once k > diverged_after
  double diverged_res = 1e3;
  int slow_after = 300;        // |Res_k - Res_{k-1}| < slow_tol once k > slow_after
  double slow_tol = 1e-9;
  int lowres_after = 800;      // Res_k < lowres_res once k > lowres_after
  double lowres_res = 1e-2;
};

struct SolverConfig {
  double eps = 1e-9;      // overall tolerance; also guards the slack overwrite g_i < -eps
  double r1 = 1.0;        // initial smoothing parameter
  double rho1 = 2.0;      // initial lower-level penalty
  double c1 = 50.0;       // initial upper-level penalty
  double beta = 0.7;      // line-search backtracking ratio
  double delta0 = 0.05;   // sufficient-decrease factor
  double delta1 = 0.8;    // shrink factor for gamma, r, tau, eps_k
  double delta2 = 0.95;   // shrink factor for r, rho on a failed feasibility test
  double rho_bar = 1e-7;  // floor for rho
  double gamma1 = 0.1;    // initial inner tolerance
  double gamma_floor = 1e-14;  // inner solves never demand a tolerance below this
  double eps1 = 0.01;     // initial multiplier-test tolerance
  double tau1 = 0.8;      // initial direction-norm threshold for multiplier updates
  double s1 = 1.0;        // initial slack value, replicated across coordinates
  double lambda_max = 1e8;
  double mu_min = -1e8;
  double mu_max = 1e8;
  int max_outer = 1000;
  int max_backtracks = 60;
  int max_step4_failures = 50;   // consecutive failed feasibility cycles allowed
  int max_inner_failures = 10;   // consecutive non-converged inner solves allowed
  int max_sens_fallbacks = 25;   // consecutive singular sensitivity systems allowed
  InnerOptions inner;
  StopRules stop;
};

/// Everything the outer loop carries between passes.
struct IterateState {
  int k = 1;
  Vector x, y, s;
  Vector lambda, mu;  // raw multipliers; clamp before use inside theta
  double r = 0, rho = 0, c = 0, gamma = 0, tau = 0, eps_k = 0;
  Vector last_d;
  double last_res = 0;
};

enum class SolveStatus {
  ResConverged,
  IterationCap,
  Stalled,
  SingularSensitivity,
  InnerFailure,
};

const char* to_string(SolveStatus s);

struct HistoryRow {
  int k = 0;
  double res = 0;
  double dnorm = 0;
  double sigma = 0;
  double theta = 0;   // line-search base value at (x_k, y_{k+1})
  double r = 0;       // parameters the pass ran with (pre-update)
  double rho = 0;
  double c = 0;
  double gamma = 0;
  double alpha = 0;   // accepted step length, 0 on no-move passes
  bool feasible = false;  // feasibility test outcome for this pass
  double wall_seconds = 0;
};

struct SolveTotals {
  int passes = 0;
  int feasible_passes = 0;
  int infeasible_passes = 0;
  int multiplier_updates = 0;
  long inner_iterations = 0;
  int inner_failures = 0;
  int sensitivity_fallbacks = 0;
  double wall_seconds = 0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Stalled;
  std::string stop_rule;  // which rule or guard ended the run
  Vector x, y, s;
  Vector lambda, mu;      // raw values
  double res = 0;
  double r = 0, rho = 0, c = 0, gamma = 0, tau = 0, eps_k = 0;
  int k = 0;
  std::vector<HistoryRow> history;
  SolveTotals totals;
};

struct ThetaGrad {
  Vector gx, gy;
};

/// Upper-level augmented Lagrangian
///   theta = F + (1/2c) sum_i (max{0, lambda_i + c G_i}^2 - lambda_i^2)
///         + sum_j (mu_j H_j + (c/2) H_j^2).
/// Callers pass the clamped multipliers.
double theta(const BilevelProblem& prob, const Vector& x, const Vector& y,
             const Vector& lambda_bar, const Vector& mu_bar, double c);

ThetaGrad grad_theta(const BilevelProblem& prob, const Vector& x,
                     const Vector& y, const Vector& lambda_bar,
                     const Vector& mu_bar, double c);

/// Infeasibility-and-complementarity residual
///   sigma = max_j |H_j| vee max_i |min{lambda_i, -G_i}|, 0 when p=q=0.
double sigma(const BilevelProblem& prob, const Vector& x, const Vector& y,
             const Vector& lambda);

/// Slack update on a passed feasibility test: s_next = s + (z+g)/rho, which
/// equals kappa/rho and is entrywise nonnegative.
Vector update_s_feasible(const Vector& s, double rho, const Vector& z,
                         const Vector& g);

struct InfeasibleUpdate {
  Vector s_next;
  double r_next = 0;
  double rho_next = 0;
};

/// Slack and parameter update on a failed feasibility test: start from
/// s_tilde = kappa/rho, overwrite s_i with -r/g_i wherever g_i < -eps (this
/// zeroes the slack residual at the current y), shrink r by delta2 and rho by
/// delta2 with floor rho_bar.
InfeasibleUpdate update_s_infeasible(const Vector& s_tilde, const Vector& g,
                                     double r, double rho, double eps,
                                     double delta2, double rho_bar);

/// d = -(gx + V^T gy).
Vector direction(const DenseMatrix& V, const Vector& gx, const Vector& gy);

struct LineSearchResult {
  double alpha = 0;
  Vector x_next, y_tilde;
  bool armijo = false;  // sufficient decrease satisfied
  bool moved = false;   // armijo, or best trial did not increase theta
  int trials = 0;
  double theta_base = 0;
  double theta_next = 0;
};

/// Backtracking search for the largest alpha in {1, beta, beta^2, ...} with
///   theta(x+alpha d, y+alpha V d) - theta(x, y) <= -alpha delta0 ||d||^2.
/// If no trial satisfies it, the final (smallest) trial is kept provided it
/// does not increase theta; otherwise moved=false and the caller stalls.
LineSearchResult line_search(const BilevelProblem& prob, const Vector& x,
                             const Vector& y, const Vector& d,
                             const DenseMatrix& V, const Vector& lambda_bar,
                             const Vector& mu_bar, double c, double beta,
                             double delta0, int max_backtracks);

struct MultiplierUpdate {
  Vector lambda_next, mu_next;
  double tau_next = 0;
};

/// lambda_next_i = max{0, lambda_bar_i + c G_i}, mu_next_j = mu_bar_j + c H_j,
/// tau_next = delta1 tau.
MultiplierUpdate update_multipliers(const Vector& lambda_bar,
                                    const Vector& mu_bar, double c,
                                    const Vector& G_val, const Vector& H_val,
                                    double tau, double delta1);

Vector clamp_lambda(const Vector& lambda, double lambda_max);
Vector clamp_mu(const Vector& mu, double mu_min, double mu_max);

/// Run the full outer loop from (x0, y0) with slacks filled at config.s1.
/// Initial multipliers are lambda = max{0, c1 G(x0,y0)}, mu = c1 H(x0,y0).
SolveReport solve(const BilevelProblem& prob, const SolverConfig& config,
                  const Vector& x0, const Vector& y0);

/// Same, with an explicit initial slack vector.
SolveReport solve(const BilevelProblem& prob, const SolverConfig& config,
                  const Vector& x0, const Vector& y0, const Vector& s0);

}  // namespace ebsa
