#include "ebsa/smoothing.hpp"

#include <cmath>
#include <string>

namespace ebsa {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw InvalidParameter(std::string(what) + " must be positive");
}

}  // namespace

ZKPair eval_zk(const Vector& g, const Vector& s, double r, double rho) {
  if (g.size() != s.size()) throw ShapeMismatch("eval_zk: g and s sizes differ");
  if (r < 0.0) throw InvalidParameter("eval_zk: r must be non-negative");
  require_positive(rho, "eval_zk: rho");

  const std::size_t m = g.size();
  ZKPair out{Vector(m), Vector(m)};
  const double rr = r * rho;
  for (std::size_t i = 0; i < m; ++i) {
    const double a = rho * s[i] + g[i];
    if (rr == 0.0) {
      out.z[i] = std::max(-a, 0.0);
      out.k[i] = std::max(a, 0.0);
      continue;
    }
    const double disc = std::sqrt(a * a + 4.0 * rr);
    // compute the small root from the large one so neither branch cancels
    if (a >= 0.0) {
      out.k[i] = 0.5 * (disc + a);
      out.z[i] = rr / out.k[i];
    } else {
      out.z[i] = 0.5 * (disc - a);
      out.k[i] = rr / out.z[i];
    }
  }
  return out;
}

ZKGrads eval_zk_grads(const BilevelProblem& prob, const Vector& x, const Vector& y,
                      const Vector& s, double r, double rho) {
  require_positive(r, "eval_zk_grads: r");
  require_positive(rho, "eval_zk_grads: rho");
  const auto dm = prob.dims;
  if (s.size() != dm.m) throw ShapeMismatch("eval_zk_grads: s size");

  const LowerDerivs lo = eval_lower_derivs(prob, x, y);
  const ZKPair zk = eval_zk(lo.g, s, r, rho);
  ZKGrads out;
  out.dz_dxy = DenseMatrix(dm.m, dm.d + dm.l);
  out.dk_dxy = DenseMatrix(dm.m, dm.d + dm.l);
  out.dz_ds.assign(dm.m, 0.0);
  out.dk_ds.assign(dm.m, 0.0);
  for (std::size_t i = 0; i < dm.m; ++i) {
    const double denom = zk.z[i] + zk.k[i];  // sqrt(a^2 + 4 r rho) > 0 for r > 0
    const double zfac = -zk.z[i] / denom;
    const double kfac = zk.k[i] / denom;
    for (std::size_t j = 0; j < dm.d; ++j) {
      out.dz_dxy(i, j) = zfac * lo.jac_x_g(i, j);
      out.dk_dxy(i, j) = kfac * lo.jac_x_g(i, j);
    }
    for (std::size_t j = 0; j < dm.l; ++j) {
      out.dz_dxy(i, dm.d + j) = zfac * lo.jac_y_g(i, j);
      out.dk_dxy(i, dm.d + j) = kfac * lo.jac_y_g(i, j);
    }
    out.dz_ds[i] = rho * zfac;
    out.dk_ds[i] = rho * kfac;
  }
  return out;
}

SbalEval eval_sbal(const BilevelProblem& prob, const Vector& x, const Vector& y,
                   const Vector& s, double r, double rho) {
  if (r < 0.0) throw InvalidParameter("eval_sbal: r must be non-negative");
  require_positive(rho, "eval_sbal: rho");
  const auto dm = prob.dims;
  if (s.size() != dm.m) throw ShapeMismatch("eval_sbal: s size");

  const LowerDerivs lo = eval_lower_derivs(prob, x, y);
  SbalEval out;
  out.zk = eval_zk(lo.g, s, r, rho);
  out.value = lo.f;
  out.grad_y = lo.grad_y_f;
  out.grad_s.assign(dm.m, 0.0);
  for (std::size_t i = 0; i < dm.m; ++i) {
    const double zg = out.zk.z[i] + lo.g[i];
    out.value += s[i] * zg + zg * zg / (2.0 * rho);
    if (r > 0.0) out.value -= r * std::log(out.zk.z[i]);
    const double u_est = out.zk.k[i] / rho;
    for (std::size_t j = 0; j < dm.l; ++j) out.grad_y[j] += u_est * lo.jac_y_g(i, j);
    out.grad_s[i] = zg;
  }
  return out;
}

Vector eval_C(const BilevelProblem& prob, const Vector& x, const Vector& y, const Vector& s,
              double r, double rho) {
  const SbalEval ev = eval_sbal(prob, x, y, s, r, rho);
  Vector c;
  c.reserve(ev.grad_y.size() + ev.grad_s.size());
  c.insert(c.end(), ev.grad_y.begin(), ev.grad_y.end());
  c.insert(c.end(), ev.grad_s.begin(), ev.grad_s.end());
  return c;
}

namespace {

// hess_yy_f + sum_i (k_i/rho) hess_yy_g_i, the curvature part shared by the
// phi Jacobian and the sensitivity system.
DenseMatrix weighted_hess_yy(const BilevelProblem& prob,
                             const LowerDerivs& lo, const Vector& u_est) {
  DenseMatrix h = lo.hess_yy_f;
  for (std::size_t i = 0; i < prob.dims.m; ++i) {
    if (u_est[i] == 0.0) continue;
    const DenseMatrix& hg = lo.hess_yy_g[i];
    for (std::size_t a = 0; a < prob.dims.l; ++a)
      for (std::size_t b = 0; b < prob.dims.l; ++b) h(a, b) += u_est[i] * hg(a, b);
  }
  return h;
}

DenseMatrix weighted_hess_xy(const BilevelProblem& prob, const LowerDerivs& lo,
                             const Vector& u_est) {
  DenseMatrix h = lo.hess_xy_f;
  for (std::size_t i = 0; i < prob.dims.m; ++i) {
    if (u_est[i] == 0.0) continue;
    const DenseMatrix& hg = lo.hess_xy_g[i];
    for (std::size_t a = 0; a < prob.dims.l; ++a)
      for (std::size_t b = 0; b < prob.dims.d; ++b) h(a, b) += u_est[i] * hg(a, b);
  }
  return h;
}

void symmetrize(DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double avg = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = m(j, i) = avg;
    }
}

}  // namespace

DenseMatrix jac_phi_y(const BilevelProblem& prob, const Vector& x, const Vector& y,
                      const Vector& s, double r, double rho) {
  require_positive(r, "jac_phi_y: r");
  require_positive(rho, "jac_phi_y: rho");
  const auto dm = prob.dims;
  const LowerDerivs lo = eval_lower_derivs(prob, x, y);
  const ZKPair zk = eval_zk(lo.g, s, r, rho);

  Vector u_est(dm.m);
  for (std::size_t i = 0; i < dm.m; ++i) u_est[i] = zk.k[i] / rho;
  DenseMatrix h = weighted_hess_yy(prob, lo, u_est);
  for (std::size_t i = 0; i < dm.m; ++i) {
    const double f = zk.k[i] / (rho * (zk.z[i] + zk.k[i]));
    for (std::size_t a = 0; a < dm.l; ++a)
      for (std::size_t b = 0; b < dm.l; ++b) h(a, b) += f * lo.jac_y_g(i, a) * lo.jac_y_g(i, b);
  }
  return h;
}

CJac jac_C(const BilevelProblem& prob, const Vector& x, const Vector& y, const Vector& s,
           double r, double rho) {
  require_positive(r, "jac_C: r");
  require_positive(rho, "jac_C: rho");
  const auto dm = prob.dims;
  if (s.size() != dm.m) throw ShapeMismatch("jac_C: s size");
  const std::size_t n = dm.l + dm.m;

  const LowerDerivs lo = eval_lower_derivs(prob, x, y);
  const ZKPair zk = eval_zk(lo.g, s, r, rho);
  Vector u_est(dm.m);
  for (std::size_t i = 0; i < dm.m; ++i) u_est[i] = zk.k[i] / rho;

  CJac out;
  out.jac_ys = DenseMatrix(n, n);
  out.jac_x = DenseMatrix(n, dm.d);

  DenseMatrix hyy = weighted_hess_yy(prob, lo, u_est);
  DenseMatrix hxy = weighted_hess_xy(prob, lo, u_est);
  for (std::size_t i = 0; i < dm.m; ++i) {
    const double f = zk.k[i] / (rho * (zk.z[i] + zk.k[i]));
    for (std::size_t a = 0; a < dm.l; ++a) {
      for (std::size_t b = 0; b < dm.l; ++b) hyy(a, b) += f * lo.jac_y_g(i, a) * lo.jac_y_g(i, b);
      for (std::size_t b = 0; b < dm.d; ++b) hxy(a, b) += f * lo.jac_y_g(i, a) * lo.jac_x_g(i, b);
    }
  }
  for (std::size_t a = 0; a < dm.l; ++a) {
    for (std::size_t b = 0; b < dm.l; ++b) out.jac_ys(a, b) = hyy(a, b);
    for (std::size_t b = 0; b < dm.d; ++b) out.jac_x(a, b) = hxy(a, b);
  }

  for (std::size_t i = 0; i < dm.m; ++i) {
    const double ratio = zk.k[i] / (zk.z[i] + zk.k[i]);
    // phi depends on s only through k
    for (std::size_t a = 0; a < dm.l; ++a) out.jac_ys(a, dm.l + i) = ratio * lo.jac_y_g(i, a);
    // psi row: gradient of z_i + g_i
    for (std::size_t b = 0; b < dm.l; ++b) out.jac_ys(dm.l + i, b) = ratio * lo.jac_y_g(i, b);
    out.jac_ys(dm.l + i, dm.l + i) = -rho * zk.z[i] / (zk.z[i] + zk.k[i]);
    for (std::size_t b = 0; b < dm.d; ++b) out.jac_x(dm.l + i, b) = ratio * lo.jac_x_g(i, b);
  }
  return out;
}

Sensitivity sensitivity(const BilevelProblem& prob, const Vector& x, const Vector& y,
                        const Vector& s, double r, double rho) {
  require_positive(r, "sensitivity: r");
  require_positive(rho, "sensitivity: rho");
  const auto dm = prob.dims;
  if (s.size() != dm.m) throw ShapeMismatch("sensitivity: s size");
  const std::size_t n = dm.l + dm.m;

  const LowerDerivs lo = eval_lower_derivs(prob, x, y);
  const ZKPair zk = eval_zk(lo.g, s, r, rho);
  Vector u_est(dm.m);
  for (std::size_t i = 0; i < dm.m; ++i) u_est[i] = zk.k[i] / rho;

  Sensitivity out;
  out.w.assign(dm.m, 0.0);
  for (std::size_t i = 0; i < dm.m; ++i) out.w[i] = zk.z[i] / (zk.z[i] + zk.k[i] / rho);

  DenseMatrix ul = weighted_hess_yy(prob, lo, u_est);
  symmetrize(ul);

  out.Btilde = DenseMatrix(n, n);
  out.btilde = DenseMatrix(n, dm.d);
  for (std::size_t a = 0; a < dm.l; ++a)
    for (std::size_t b = 0; b < dm.l; ++b) out.Btilde(a, b) = ul(a, b);
  for (std::size_t i = 0; i < dm.m; ++i) {
    for (std::size_t a = 0; a < dm.l; ++a) {
      out.Btilde(a, dm.l + i) = lo.jac_y_g(i, a);
      out.Btilde(dm.l + i, a) = (out.w[i] - 1.0) * lo.jac_y_g(i, a);
    }
    out.Btilde(dm.l + i, dm.l + i) = out.w[i];
  }
  DenseMatrix bt = weighted_hess_xy(prob, lo, u_est);
  for (std::size_t a = 0; a < dm.l; ++a)
    for (std::size_t b = 0; b < dm.d; ++b) out.btilde(a, b) = bt(a, b);
  for (std::size_t i = 0; i < dm.m; ++i)
    for (std::size_t b = 0; b < dm.d; ++b)
      out.btilde(dm.l + i, b) = (out.w[i] - 1.0) * lo.jac_x_g(i, b);

  DenseMatrix rhs(n, dm.d);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < dm.d; ++b) rhs(a, b) = -out.btilde(a, b);
  try {
    out.Vtilde = solve_dense(out.Btilde, rhs);
  } catch (const SingularMatrix& e) {
    throw SingularSensitivity(std::string("sensitivity: ") + e.what());
  }
  out.V = DenseMatrix(dm.l, dm.d);
  for (std::size_t a = 0; a < dm.l; ++a)
    for (std::size_t b = 0; b < dm.d; ++b) out.V(a, b) = out.Vtilde(a, b);
  return out;
}

LimitJacobians limit_jacobians(const BilevelProblem& prob, const Vector& x, const Vector& y,
                               const Vector& u, const Vector& w) {
  const auto dm = prob.dims;
  if (u.size() != dm.m || w.size() != dm.m)
    throw ShapeMismatch("limit_jacobians: u or w size");
  for (double wi : w)
    if (wi < 0.0 || wi > 1.0) throw InvalidParameter("limit_jacobians: w entries must be in [0,1]");
  const std::size_t n = dm.l + dm.m;

  const LowerDerivs lo = eval_lower_derivs(prob, x, y);
  DenseMatrix ul = weighted_hess_yy(prob, lo, u);
  symmetrize(ul);

  LimitJacobians out;
  out.A = DenseMatrix(n, n);
  out.a = DenseMatrix(n, dm.d);
  for (std::size_t a = 0; a < dm.l; ++a)
    for (std::size_t b = 0; b < dm.l; ++b) out.A(a, b) = ul(a, b);
  for (std::size_t i = 0; i < dm.m; ++i) {
    for (std::size_t a = 0; a < dm.l; ++a) {
      out.A(a, dm.l + i) = lo.jac_y_g(i, a);
      out.A(dm.l + i, a) = (w[i] - 1.0) * lo.jac_y_g(i, a);
    }
    out.A(dm.l + i, dm.l + i) = w[i];
  }
  DenseMatrix hxy = weighted_hess_xy(prob, lo, u);
  for (std::size_t a = 0; a < dm.l; ++a)
    for (std::size_t b = 0; b < dm.d; ++b) out.a(a, b) = hxy(a, b);
  for (std::size_t i = 0; i < dm.m; ++i)
    for (std::size_t b = 0; b < dm.d; ++b) out.a(dm.l + i, b) = (w[i] - 1.0) * lo.jac_x_g(i, b);
  return out;
}

SmoothingEval smoothing_eval(const BilevelProblem& prob, const Vector& x, const Vector& y,
                             const Vector& s, double r, double rho) {
  SmoothingEval out;
  const SbalEval ev = eval_sbal(prob, x, y, s, r, rho);
  out.zk = ev.zk;
  out.phi = ev.grad_y;
  out.psi = ev.grad_s;
  const CJac cj = jac_C(prob, x, y, s, r, rho);
  out.jac_ys = cj.jac_ys;
  out.jac_x = cj.jac_x;
  const Sensitivity sv = sensitivity(prob, x, y, s, r, rho);
  out.w = sv.w;
  out.Btilde = sv.Btilde;
  out.btilde = sv.btilde;
  return out;
}

}  // namespace ebsa
