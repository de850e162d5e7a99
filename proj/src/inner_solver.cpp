#include "ebsa/inner_solver.hpp"

#include <cmath>
#include <limits>

#include "ebsa/errors.hpp"
#include "ebsa/numkit.hpp"

namespace ebsa {

const char* to_string(InnerStatus s) {
  switch (s) {
    case InnerStatus::Converged: return "converged";
    case InnerStatus::MaxIterations: return "max_iterations";
    case InnerStatus::LineSearchStall: return "line_search_stall";
    case InnerStatus::SingularHessian: return "singular_hessian";
  }
  return "unknown";
}

namespace {

// Newton step on the y-gradient; nullopt when the linear solve is singular.
bool try_newton_step(const DenseMatrix& hess, const Vector& grad, double shift,
                     Vector* step) {
  DenseMatrix h = hess;
  for (std::size_t i = 0; i < h.rows(); ++i) h(i, i) += shift;
  Vector rhs(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) rhs[i] = -grad[i];
  try {
    *step = solve_dense(h, rhs);
  } catch (const SingularMatrix&) {
    return false;
  }
  for (double v : *step)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

InnerResult minimize_y(const BilevelProblem& prob, const Vector& x,
                       const Vector& y0, const Vector& s, double r, double rho,
                       double tol, const InnerOptions& opts) {
  if (tol < 0.0) throw InvalidParameter("minimize_y: negative tolerance");
  InnerResult res;
  res.y = y0;

  SbalEval ev = eval_sbal(prob, x, res.y, s, r, rho);
  res.phi_norm = norm2(ev.grad_y);
  res.f_tilde = ev.value;

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (res.phi_norm <= tol) {
      res.status = InnerStatus::Converged;
      return res;
    }
    DenseMatrix hess = jac_phi_y(prob, x, res.y, s, r, rho);

    Vector step;
    double shift = 0.0;
    bool have_step = false;
    for (int attempt = 0; attempt <= opts.max_shift_retries; ++attempt) {
      if (try_newton_step(hess, ev.grad_y, shift, &step) &&
          dot(ev.grad_y, step) < 0.0) {
        have_step = true;
        break;
      }
      shift = (shift == 0.0) ? opts.levenberg_tau0 : shift * 10.0;
      ++res.levenberg_shifts;
    }
    if (!have_step) {
      // Steepest descent as a last resort; the objective is smooth so this
      // can only stall on a line search failure, not on direction choice.
      step.assign(ev.grad_y.size(), 0.0);
      for (std::size_t i = 0; i < step.size(); ++i) step[i] = -ev.grad_y[i];
      double sn = norm2(step);
      if (sn == 0.0) {
        res.status = InnerStatus::SingularHessian;
        return res;
      }
      for (double& v : step) v /= std::max(1.0, sn);
    }

    const double slope = dot(ev.grad_y, step);
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      Vector y_trial(res.y.size());
      for (std::size_t i = 0; i < y_trial.size(); ++i)
        y_trial[i] = res.y[i] + alpha * step[i];
      SbalEval trial;
      bool ok = true;
      try {
        trial = eval_sbal(prob, x, y_trial, s, r, rho);
      } catch (const NonFiniteEvaluation&) {
        ok = false;
      }
      if (ok && std::isfinite(trial.value)) {
        // Near the minimum the objective is flat to rounding; a strict drop
        // in the gradient norm is accepted so Newton can finish the job.
        const bool armijo_ok =
            trial.value <= ev.value + opts.armijo_slope * alpha * slope;
        const bool residual_ok =
            norm2(trial.grad_y) <= (1.0 - 1e-4 * alpha) * res.phi_norm;
        if (armijo_ok || residual_ok) {
          res.y = y_trial;
          ev = trial;
          accepted = true;
          break;
        }
      }
      alpha *= opts.backtrack;
    }
    ++res.iterations;
    res.phi_norm = norm2(ev.grad_y);
    res.f_tilde = ev.value;
    if (!accepted) {
      res.status = InnerStatus::LineSearchStall;
      return res;
    }
  }
  res.status =
      (res.phi_norm <= tol) ? InnerStatus::Converged : InnerStatus::MaxIterations;
  return res;
}

InnerStepDiagnostics inner_step_diagnostics(const BilevelProblem& prob,
                                            const Vector& x, const Vector& y,
                                            const Vector& s, double r,
                                            double rho) {
  InnerStepDiagnostics diag;
  SbalEval ev = eval_sbal(prob, x, y, s, r, rho);
  DenseMatrix hess = jac_phi_y(prob, x, y, s, r, rho);
  Vector eigs = sym_eigenvalues(hess);
  diag.hessian_min_eig_estimate = eigs.empty() ? 0.0 : eigs.front();
  Vector step;
  if (try_newton_step(hess, ev.grad_y, 0.0, &step))
    diag.step_norm = norm2(step);
  else
    diag.step_norm = std::numeric_limits<double>::quiet_NaN();
  return diag;
}

KktResult solve_smoothed_kkt(const BilevelProblem& prob, const Vector& x,
                             const Vector& y0, const Vector& s0, double r,
                             double rho, double tol, const InnerOptions& opts) {
  if (tol < 0.0) throw InvalidParameter("solve_smoothed_kkt: negative tolerance");
  const std::size_t l = prob.dims.l;
  const std::size_t m = prob.dims.m;
  KktResult res;
  res.y = y0;
  res.s = s0;

  Vector c = eval_C(prob, x, res.y, res.s, r, rho);
  res.residual_norm = norm2(c);

  for (int it = 0; it < opts.max_iterations; ++it) {
    if (res.residual_norm <= tol) {
      res.status = InnerStatus::Converged;
      return res;
    }
    CJac jac = jac_C(prob, x, res.y, res.s, r, rho);
    Vector rhs(l + m);
    for (std::size_t i = 0; i < l + m; ++i) rhs[i] = -c[i];
    Vector step;
    try {
      step = solve_dense(jac.jac_ys, rhs);
    } catch (const SingularMatrix&) {
      res.status = InnerStatus::SingularHessian;
      return res;
    }

    double alpha = 1.0;
    bool accepted = false;
    const double base = res.residual_norm * res.residual_norm;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      Vector y_trial(l), s_trial(m);
      for (std::size_t i = 0; i < l; ++i) y_trial[i] = res.y[i] + alpha * step[i];
      for (std::size_t i = 0; i < m; ++i)
        s_trial[i] = res.s[i] + alpha * step[l + i];
      Vector c_trial;
      bool ok = true;
      try {
        c_trial = eval_C(prob, x, y_trial, s_trial, r, rho);
      } catch (const NonFiniteEvaluation&) {
        ok = false;
      }
      if (ok) {
        const double trial = dot(c_trial, c_trial);
        if (trial <= (1.0 - 1e-4 * alpha) * base) {
          res.y = y_trial;
          res.s = s_trial;
          c = c_trial;
          res.residual_norm = std::sqrt(trial);
          accepted = true;
          break;
        }
      }
      alpha *= opts.backtrack;
    }
    ++res.iterations;
    if (!accepted) {
      res.status = InnerStatus::LineSearchStall;
      return res;
    }
  }
  res.status = (res.residual_norm <= tol) ? InnerStatus::Converged
                                          : InnerStatus::MaxIterations;
  return res;
}

}  // namespace ebsa
