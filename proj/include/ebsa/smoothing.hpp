#pragma once

#include "ebsa/problem.hpp"

namespace ebsa {

/// Smoothed slack/multiplier pair for the lower-level constraints.  With
/// a = rho*s_i + g_i:
///   z_i = ( sqrt(a^2 + 4 r rho) - a ) / 2,
///   k_i = ( sqrt(a^2 + 4 r rho) + a ) / 2 = z_i + g_i + rho*s_i.
/// Both are non-negative, z_i * k_i = r * rho exactly, and at r = 0 they
/// collapse to max(-a, 0) and max(a, 0).
struct ZKPair {
  Vector z, k;
};

/// Evaluates (z, k) from raw constraint values; cancellation-free in both
/// branches of the sign of rho*s_i + g_i.
ZKPair eval_zk(const Vector& g, const Vector& s, double r, double rho);

struct ZKGrads {
  DenseMatrix dz_dxy;  // m x (d+l); row i is the (x, y) gradient of z_i
  DenseMatrix dk_dxy;  // m x (d+l)
  Vector dz_ds;        // dz_i/ds_i = -rho z_i / (z_i + k_i); off-diagonals vanish
  Vector dk_ds;        // dk_i/ds_i = +rho k_i / (z_i + k_i)
};

/// First derivatives of (z, k); requires r > 0.
ZKGrads eval_zk_grads(const BilevelProblem& prob, const Vector& x, const Vector& y,
                      const Vector& s, double r, double rho);

/// Barrier-augmented-Lagrangian value and first derivatives:
///   value  = f + sum_i [ -r ln z_i + s_i (z_i + g_i) + (z_i + g_i)^2 / (2 rho) ]
///   grad_y = phi = grad_y f + sum_i (k_i / rho) grad_y g_i
///   grad_s = psi = z + g
struct SbalEval {
  double value = 0.0;
  Vector grad_y;  // phi
  Vector grad_s;  // psi
  ZKPair zk;
};
SbalEval eval_sbal(const BilevelProblem& prob, const Vector& x, const Vector& y,
                   const Vector& s, double r, double rho);

/// Stacked smoothed stationarity-and-feasibility map C = (phi; psi); r >= 0.
Vector eval_C(const BilevelProblem& prob, const Vector& x, const Vector& y, const Vector& s,
              double r, double rho);

/// y-block of the Jacobian of phi (the Hessian of the smoothed objective in
/// y); shared by the inner solver and jac_C.
DenseMatrix jac_phi_y(const BilevelProblem& prob, const Vector& x, const Vector& y,
                      const Vector& s, double r, double rho);

struct CJac {
  DenseMatrix jac_ys;  // (l+m) x (l+m), derivative of C in (y, s)
  DenseMatrix jac_x;   // (l+m) x d
};
/// Full Jacobian of C; requires r > 0.
CJac jac_C(const BilevelProblem& prob, const Vector& x, const Vector& y, const Vector& s,
           double r, double rho);

/// Sensitivity of the smoothed solution path in x, obtained from the
/// equivalent scaled system  btilde + Btilde * Vtilde = 0 with weights
/// w_i = z_i / (z_i + k_i / rho) in [0, 1].  The upper-left block of Btilde
/// is symmetrised by averaging.  Throws ebsa::SingularSensitivity if the
/// system is singular; no regularisation is attempted here.
struct Sensitivity {
  DenseMatrix V;       // l x d, derivative of y in x along the path
  DenseMatrix Vtilde;  // (l+m) x d, includes the multiplier-estimate rows
  DenseMatrix Btilde;  // (l+m) x (l+m)
  DenseMatrix btilde;  // (l+m) x d
  Vector w;
};
Sensitivity sensitivity(const BilevelProblem& prob, const Vector& x, const Vector& y,
                        const Vector& s, double r, double rho);

/// Limit coefficient matrices at a KKT pair (y, u) for a fixed weight
/// choice w (each entry in [0, 1]):
///   A = [ hess_yy L   jac_y_g' ]      a = [ hess_xy L    ]
///       [ (W-I) jac_y_g   W    ]          [ (W-I) jac_x_g ]
/// Columns of -A^{-1} a are generalised-derivative elements of the lower
/// solution map.
struct LimitJacobians {
  DenseMatrix A;  // (l+m) x (l+m)
  DenseMatrix a;  // (l+m) x d
};
LimitJacobians limit_jacobians(const BilevelProblem& prob, const Vector& x, const Vector& y,
                               const Vector& u, const Vector& w);

/// Everything the smoothing layer knows at one point, for traces and tests.
struct SmoothingEval {
  ZKPair zk;
  Vector phi, psi, w;
  DenseMatrix jac_ys, jac_x, Btilde, btilde;
};
SmoothingEval smoothing_eval(const BilevelProblem& prob, const Vector& x, const Vector& y,
                             const Vector& s, double r, double rho);

}  // namespace ebsa
