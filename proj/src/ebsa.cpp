#include "ebsa/ebsa.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ebsa/errors.hpp"
#include "ebsa/smoothing.hpp"

namespace ebsa {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::ResConverged: return "res_converged";
    case SolveStatus::IterationCap: return "iteration_cap";
    case SolveStatus::Stalled: return "stalled";
    case SolveStatus::SingularSensitivity: return "singular_sensitivity";
    case SolveStatus::InnerFailure: return "inner_failure";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double theta_from(const UpperEval& ue, const Vector& lambda_bar,
                  const Vector& mu_bar, double c) {
  double val = ue.F;
  for (std::size_t i = 0; i < ue.G.size(); ++i) {
    const double hinge = std::max(0.0, lambda_bar[i] + c * ue.G[i]);
    val += (hinge * hinge - lambda_bar[i] * lambda_bar[i]) / (2.0 * c);
  }
  for (std::size_t j = 0; j < ue.H.size(); ++j)
    val += mu_bar[j] * ue.H[j] + 0.5 * c * ue.H[j] * ue.H[j];
  return val;
}

ThetaGrad grad_theta_from(const UpperEval& ue, const Vector& lambda_bar,
                          const Vector& mu_bar, double c, std::size_t d,
                          std::size_t l) {
  ThetaGrad gr;
  gr.gx = ue.grad_x_F;
  gr.gy = ue.grad_y_F;
  for (std::size_t i = 0; i < ue.G.size(); ++i) {
    const double hinge = std::max(0.0, lambda_bar[i] + c * ue.G[i]);
    if (hinge == 0.0) continue;
    for (std::size_t a = 0; a < d; ++a) gr.gx[a] += hinge * ue.jac_x_G(i, a);
    for (std::size_t b = 0; b < l; ++b) gr.gy[b] += hinge * ue.jac_y_G(i, b);
  }
  for (std::size_t j = 0; j < ue.H.size(); ++j) {
    const double w = mu_bar[j] + c * ue.H[j];
    for (std::size_t a = 0; a < d; ++a) gr.gx[a] += w * ue.jac_x_H(j, a);
    for (std::size_t b = 0; b < l; ++b) gr.gy[b] += w * ue.jac_y_H(j, b);
  }
  return gr;
}

double sigma_from(const UpperEval& ue, const Vector& lambda) {
  double val = 0.0;
  for (std::size_t j = 0; j < ue.H.size(); ++j)
    val = std::max(val, std::abs(ue.H[j]));
  for (std::size_t i = 0; i < ue.G.size(); ++i)
    val = std::max(val, std::abs(std::min(lambda[i], -ue.G[i])));
  return val;
}

void check_multiplier_shapes(const BilevelProblem& prob, const Vector& lambda,
                             const Vector& mu, const char* who) {
  if (lambda.size() != prob.dims.p || mu.size() != prob.dims.q)
    throw ShapeMismatch(std::string(who) + ": multiplier sizes do not match problem");
}

}  // namespace

double theta(const BilevelProblem& prob, const Vector& x, const Vector& y,
             const Vector& lambda_bar, const Vector& mu_bar, double c) {
  if (c <= 0.0) throw InvalidParameter("theta: c must be positive");
  check_multiplier_shapes(prob, lambda_bar, mu_bar, "theta");
  return theta_from(eval_upper(prob, x, y), lambda_bar, mu_bar, c);
}

ThetaGrad grad_theta(const BilevelProblem& prob, const Vector& x,
                     const Vector& y, const Vector& lambda_bar,
                     const Vector& mu_bar, double c) {
  if (c <= 0.0) throw InvalidParameter("grad_theta: c must be positive");
  check_multiplier_shapes(prob, lambda_bar, mu_bar, "grad_theta");
  return grad_theta_from(eval_upper(prob, x, y), lambda_bar, mu_bar, c,
                         prob.dims.d, prob.dims.l);
}

double sigma(const BilevelProblem& prob, const Vector& x, const Vector& y,
             const Vector& lambda) {
  if (lambda.size() != prob.dims.p)
    throw ShapeMismatch("sigma: lambda size does not match problem");
  return sigma_from(eval_upper(prob, x, y), lambda);
}

Vector update_s_feasible(const Vector& s, double rho, const Vector& z,
                         const Vector& g) {
  if (s.size() != z.size() || s.size() != g.size())
    throw ShapeMismatch("update_s_feasible: size mismatch");
  Vector out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    out[i] = std::max(0.0, s[i] + (z[i] + g[i]) / rho);
  return out;
}

InfeasibleUpdate update_s_infeasible(const Vector& s_tilde, const Vector& g,
                                     double r, double rho, double eps,
                                     double delta2, double rho_bar) {
  if (s_tilde.size() != g.size())
    throw ShapeMismatch("update_s_infeasible: size mismatch");
  InfeasibleUpdate out;
  out.s_next = s_tilde;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] < -eps) out.s_next[i] = -r / g[i];
  out.r_next = delta2 * r;
  out.rho_next = std::max(rho_bar, delta2 * rho);
  return out;
}

Vector direction(const DenseMatrix& V, const Vector& gx, const Vector& gy) {
  if (V.rows() != gy.size() || V.cols() != gx.size())
    throw ShapeMismatch("direction: V shape does not match gradients");
  Vector d(gx.size());
  for (std::size_t a = 0; a < gx.size(); ++a) {
    double acc = gx[a];
    for (std::size_t b = 0; b < gy.size(); ++b) acc += V(b, a) * gy[b];
    d[a] = -acc;
  }
  return d;
}

LineSearchResult line_search(const BilevelProblem& prob, const Vector& x,
                             const Vector& y, const Vector& d,
                             const DenseMatrix& V, const Vector& lambda_bar,
                             const Vector& mu_bar, double c, double beta,
                             double delta0, int max_backtracks) {
  LineSearchResult res;
  res.theta_base = theta(prob, x, y, lambda_bar, mu_bar, c);
  const double dnorm2 = dot(d, d);

  double last_alpha = 0.0;
  double last_theta = kInf;
  Vector last_x, last_y;

  double alpha = 1.0;
  for (int j = 0; j <= max_backtracks; ++j, alpha *= beta) {
    Vector x_trial(x.size()), y_trial(y.size());
    for (std::size_t a = 0; a < x.size(); ++a) x_trial[a] = x[a] + alpha * d[a];
    for (std::size_t b = 0; b < y.size(); ++b) {
      double vd = 0.0;
      for (std::size_t a = 0; a < d.size(); ++a) vd += V(b, a) * d[a];
      y_trial[b] = y[b] + alpha * vd;
    }
    double theta_trial;
    try {
      theta_trial = theta(prob, x_trial, y_trial, lambda_bar, mu_bar, c);
    } catch (const NonFiniteEvaluation&) {
      ++res.trials;
      continue;
    }
    ++res.trials;
    if (theta_trial - res.theta_base <= -alpha * delta0 * dnorm2) {
      res.alpha = alpha;
      res.x_next = std::move(x_trial);
      res.y_tilde = std::move(y_trial);
      res.armijo = true;
      res.moved = true;
      res.theta_next = theta_trial;
      return res;
    }
    last_alpha = alpha;
    last_theta = theta_trial;
    last_x = std::move(x_trial);
    last_y = std::move(y_trial);
  }

  // No trial passed the sufficient-decrease test; keep the final (smallest)
  // step when it at least does not increase theta, otherwise report a stall.
  if (last_theta <= res.theta_base) {
    res.alpha = last_alpha;
    res.x_next = std::move(last_x);
    res.y_tilde = std::move(last_y);
    res.moved = true;
    res.theta_next = last_theta;
  }
  return res;
}

MultiplierUpdate update_multipliers(const Vector& lambda_bar,
                                    const Vector& mu_bar, double c,
                                    const Vector& G_val, const Vector& H_val,
                                    double tau, double delta1) {
  if (lambda_bar.size() != G_val.size() || mu_bar.size() != H_val.size())
    throw ShapeMismatch("update_multipliers: size mismatch");
  MultiplierUpdate out;
  out.lambda_next.resize(lambda_bar.size());
  for (std::size_t i = 0; i < lambda_bar.size(); ++i)
    out.lambda_next[i] = std::max(0.0, lambda_bar[i] + c * G_val[i]);
  out.mu_next.resize(mu_bar.size());
  for (std::size_t j = 0; j < mu_bar.size(); ++j)
    out.mu_next[j] = mu_bar[j] + c * H_val[j];
  out.tau_next = delta1 * tau;
  return out;
}

Vector clamp_lambda(const Vector& lambda, double lambda_max) {
  Vector out(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i)
    out[i] = std::clamp(lambda[i], 0.0, lambda_max);
  return out;
}

Vector clamp_mu(const Vector& mu, double mu_min, double mu_max) {
  Vector out(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j)
    out[j] = std::clamp(mu[j], mu_min, mu_max);
  return out;
}

SolveReport solve(const BilevelProblem& prob, const SolverConfig& config,
                  const Vector& x0, const Vector& y0) {
  return solve(prob, config, x0, y0, Vector(prob.dims.m, config.s1));
}

SolveReport solve(const BilevelProblem& prob, const SolverConfig& cfg,
                  const Vector& x0, const Vector& y0, const Vector& s0) {
  if (x0.size() != prob.dims.d || y0.size() != prob.dims.l ||
      s0.size() != prob.dims.m)
    throw ShapeMismatch("solve: start shapes do not match problem dims");
  if (cfg.delta1 >= cfg.delta2)
    throw InvalidParameter("solve: delta1 must be below delta2");
  if (cfg.beta <= 0.0 || cfg.beta >= 1.0)
    throw InvalidParameter("solve: beta must lie in (0,1)");
  if (cfg.r1 <= 0.0 || cfg.rho1 <= 0.0 || cfg.c1 <= 0.0 || cfg.gamma1 <= 0.0 ||
      cfg.eps1 <= 0.0 || cfg.tau1 <= 0.0)
    throw InvalidParameter("solve: initial parameters must be positive");
  if (cfg.gamma_floor < 0.0)
    throw InvalidParameter("solve: gamma_floor must be nonnegative");

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  IterateState st;
  st.x = x0;
  st.y = y0;
  st.s = s0;
  st.r = cfg.r1;
  st.rho = cfg.rho1;
  st.c = cfg.c1;
  st.gamma = cfg.gamma1;
  st.tau = cfg.tau1;
  st.eps_k = cfg.eps1;

  {
    UpperEval u0 = eval_upper(prob, st.x, st.y);
    st.lambda.resize(prob.dims.p);
    for (std::size_t i = 0; i < prob.dims.p; ++i)
      st.lambda[i] = std::max(0.0, cfg.c1 * u0.G[i]);
    st.mu.resize(prob.dims.q);
    for (std::size_t j = 0; j < prob.dims.q; ++j) st.mu[j] = cfg.c1 * u0.H[j];
  }

  SolveReport rep;
  double last_dnorm = kInf;
  double last_sigma = kInf;
  double prev_res = kInf;
  st.last_res = kInf;
  int consec_step4 = 0;
  int consec_inner = 0;
  int consec_sens = 0;

  auto finish = [&](SolveStatus status, const std::string& rule) {
    rep.status = status;
    rep.stop_rule = rule;
    rep.x = st.x;
    rep.y = st.y;
    rep.s = st.s;
    rep.lambda = st.lambda;
    rep.mu = st.mu;
    rep.res = st.last_res;
    rep.r = st.r;
    rep.rho = st.rho;
    rep.c = st.c;
    rep.gamma = st.gamma;
    rep.tau = st.tau;
    rep.eps_k = st.eps_k;
    rep.k = st.k;
    rep.totals.wall_seconds = elapsed();
    return rep;
  };

  // Fires after the pass's residual has been recorded; empty when no rule hit.
  auto stop_rule_hit = [&](double res) -> std::string {
    const auto& sr = cfg.stop;
    if (res < sr.res_tol) return "res_tol";
    const double dres = std::abs(res - prev_res);
    if (st.k > sr.flat_after && dres < sr.flat_tol) return "stall_flat";
    if (st.k > sr.diverged_after && res > sr.diverged_res)
      return "stall_diverged";
    if (st.k > sr.slow_after && dres < sr.slow_tol) return "stall_slow";
    if (st.k > sr.lowres_after && res < sr.lowres_res) return "stall_lowres";
    return "";
  };

  while (true) {
    if (st.k > cfg.stop.k_cap) return finish(SolveStatus::IterationCap, "k_cap");
    if (st.k > cfg.max_outer)
      return finish(SolveStatus::IterationCap, "max_outer");

    const double r_used = st.r;
    const double rho_used = st.rho;
    const double gamma_used = st.gamma;
    const double c_used = st.c;

    // The schedule sends gamma below what doubles can resolve; the floor only
    // caps what the inner solve is asked for, the feasibility test stays exact.
    InnerResult ir = minimize_y(prob, st.x, st.y, st.s, st.r, st.rho,
                                std::max(st.gamma, cfg.gamma_floor), cfg.inner);
    rep.totals.inner_iterations += ir.iterations;
    const Vector y_new = ir.y;
    if (ir.status == InnerStatus::Converged) {
      consec_inner = 0;
    } else {
      ++rep.totals.inner_failures;
      ++consec_inner;
    }

    LowerDerivs lo = eval_lower_derivs(prob, st.x, y_new);
    ZKPair zk = eval_zk(lo.g, st.s, st.r, st.rho);
    Vector psi(prob.dims.m);
    for (std::size_t i = 0; i < prob.dims.m; ++i) psi[i] = zk.z[i] + lo.g[i];
    const double psi_norm = norm2(psi);
    const Vector s_tilde = update_s_feasible(st.s, st.rho, zk.z, lo.g);

    UpperEval ue = eval_upper(prob, st.x, y_new);
    const Vector lb = clamp_lambda(st.lambda, cfg.lambda_max);
    const Vector mb = clamp_mu(st.mu, cfg.mu_min, cfg.mu_max);
    const double theta_here = theta_from(ue, lb, mb, st.c);

    ++rep.totals.passes;
    HistoryRow row;
    row.k = st.k;
    row.theta = theta_here;
    row.r = r_used;
    row.rho = rho_used;
    row.c = c_used;
    row.gamma = gamma_used;

    if (consec_inner > cfg.max_inner_failures) {
      row.res = st.last_res;
      row.dnorm = last_dnorm;
      row.sigma = last_sigma;
      row.wall_seconds = elapsed();
      rep.history.push_back(row);
      return finish(SolveStatus::InnerFailure, "inner_failures");
    }

    if (psi_norm <= st.gamma) {
      ++rep.totals.feasible_passes;
      consec_step4 = 0;
      row.feasible = true;

      st.gamma = cfg.delta1 * gamma_used;
      st.r = cfg.delta1 * r_used;
      st.s = s_tilde;

      DenseMatrix V(prob.dims.l, prob.dims.d, 0.0);
      bool fallback = false;
      try {
        V = sensitivity(prob, st.x, y_new, st.s, r_used, rho_used).V;
      } catch (const SingularSensitivity&) {
        try {
          V = sensitivity(prob, st.x, y_new, st.s, 10.0 * r_used, rho_used).V;
        } catch (const SingularSensitivity&) {
          fallback = true;  // V stays zero so d = -gx below
          ++rep.totals.sensitivity_fallbacks;
        }
      }
      consec_sens = fallback ? consec_sens + 1 : 0;

      // Step 6/7 below evaluate at the pre-move point; ue already holds it.
      st.y = y_new;

      ThetaGrad tg = grad_theta_from(ue, lb, mb, st.c, prob.dims.d, prob.dims.l);
      Vector d = direction(V, tg.gx, tg.gy);
      const double dnorm = norm2(d);
      const double sig = sigma_from(ue, st.lambda);
      const double res = std::max(dnorm, sig);
      st.last_d = d;

      bool fatal_stall = false;
      if (dnorm > 0.0) {
        LineSearchResult ls =
            line_search(prob, st.x, st.y, d, V, lb, mb, st.c, cfg.beta,
                        cfg.delta0, cfg.max_backtracks);
        if (ls.moved) {
          st.x = ls.x_next;
          st.y = ls.y_tilde;
          row.alpha = ls.alpha;
        } else {
          fatal_stall = true;
        }
      }

      if (dnorm < st.tau && !fatal_stall) {
        MultiplierUpdate mu_upd =
            update_multipliers(lb, mb, st.c, ue.G, ue.H, st.tau, cfg.delta1);
        st.lambda = mu_upd.lambda_next;
        st.mu = mu_upd.mu_next;
        st.tau = mu_upd.tau_next;
        ++rep.totals.multiplier_updates;
        const double sig_plus = sigma_from(ue, st.lambda);
        if (sig_plus < st.eps_k)
          st.eps_k *= cfg.delta1;
        else
          st.c /= cfg.delta1;
      }

      row.res = res;
      row.dnorm = dnorm;
      row.sigma = sig;
      row.wall_seconds = elapsed();
      rep.history.push_back(row);
      last_dnorm = dnorm;
      last_sigma = sig;
      prev_res = st.last_res;
      st.last_res = res;

      if (fatal_stall) return finish(SolveStatus::Stalled, "line_search");
      if (consec_sens > cfg.max_sens_fallbacks)
        return finish(SolveStatus::SingularSensitivity, "sensitivity_singular");
      const std::string rule = stop_rule_hit(res);
      if (rule == "res_tol") return finish(SolveStatus::ResConverged, rule);
      if (!rule.empty()) return finish(SolveStatus::Stalled, rule);
      ++st.k;
    } else {
      ++rep.totals.infeasible_passes;
      ++consec_step4;
      row.feasible = false;

      InfeasibleUpdate upd = update_s_infeasible(
          s_tilde, lo.g, r_used, rho_used, cfg.eps, cfg.delta2, cfg.rho_bar);
      st.s = upd.s_next;
      st.r = upd.r_next;
      st.rho = upd.rho_next;
      st.y = y_new;

      const double res = std::max(last_dnorm, last_sigma);
      row.res = res;
      row.dnorm = last_dnorm;
      row.sigma = last_sigma;
      row.wall_seconds = elapsed();
      rep.history.push_back(row);
      prev_res = st.last_res;
      st.last_res = res;

      const std::string rule = stop_rule_hit(res);
      if (rule == "res_tol") return finish(SolveStatus::ResConverged, rule);
      if (!rule.empty()) return finish(SolveStatus::Stalled, rule);
      if (consec_step4 > cfg.max_step4_failures)
        return finish(SolveStatus::Stalled, "step4_failures");
      ++st.k;
    }
  }
}

}  // namespace ebsa
