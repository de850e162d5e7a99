#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ebsa/numkit.hpp"
#include "ebsa/poly.hpp"

namespace ebsa {

struct Dims {
  std::size_t d = 0;  // upper-level variables x
  std::size_t l = 0;  // lower-level variables y
  std::size_t m = 0;  // lower-level inequality constraints g <= 0
  std::size_t p = 0;  // upper-level inequality constraints G <= 0
  std::size_t q = 0;  // upper-level equality constraints H = 0
};

struct Box {
  Vector x_lo, x_hi, y_lo, y_hi;
};

/// Best known solution, used for reporting relative objective gaps.
struct Reference {
  Vector x_star, y_star;
  double F_star = 0.0;
  double f_star = 0.0;
};

/// A bilevel program
///   min F(x, y)  s.t.  G(x, y) <= 0,  H(x, y) = 0,
///   y solves  min_y f(x, y)  s.t.  g(x, y) <= 0.
///
/// Derivative conventions: jacobians of vector constraints have one row per
/// constraint; hess_xy_f is l x d with entry (i, j) = d^2 f / (dy_i dx_j),
/// and likewise for each hess_xy_g(i).
struct BilevelProblem {
  std::string name;
  Dims dims;
  Box box;
  Vector x0, y0;
  std::optional<Reference> reference;

  using Scalar = std::function<double(const Vector&, const Vector&)>;
  using Vec = std::function<Vector(const Vector&, const Vector&)>;
  using Mat = std::function<DenseMatrix(const Vector&, const Vector&)>;
  using MatAt = std::function<DenseMatrix(const Vector&, const Vector&, std::size_t)>;

  Scalar F;
  Vec grad_x_F, grad_y_F;
  Vec G;
  Mat jac_x_G, jac_y_G;
  Vec H;
  Mat jac_x_H, jac_y_H;

  Scalar f;
  Vec grad_y_f;
  Mat hess_yy_f, hess_xy_f;
  Vec g;
  Mat jac_x_g, jac_y_g;
  MatAt hess_yy_g, hess_xy_g;  // per-constraint second derivatives
};

struct UpperEval {
  double F = 0.0;
  Vector grad_x_F, grad_y_F;
  Vector G;
  DenseMatrix jac_x_G, jac_y_G;
  Vector H;
  DenseMatrix jac_x_H, jac_y_H;
};

struct LowerDerivs {
  double f = 0.0;
  Vector grad_y_f;
  DenseMatrix hess_yy_f, hess_xy_f;
  Vector g;
  DenseMatrix jac_x_g, jac_y_g;
  std::vector<DenseMatrix> hess_yy_g, hess_xy_g;
};

/// Evaluates the upper-level data with shape and finiteness checks.
UpperEval eval_upper(const BilevelProblem& prob, const Vector& x, const Vector& y);

/// Evaluates the lower-level data with shape, finiteness and Hessian-symmetry
/// checks (asymmetry beyond 1e-12 relative to the matrix scale throws).
LowerDerivs eval_lower_derivs(const BilevelProblem& prob, const Vector& x, const Vector& y);

struct LagrangianEval {
  double value = 0.0;
  Vector grad_y;
};

/// Lower-level Lagrangian f + u' g and its y-gradient.
LagrangianEval lagrangian(const BilevelProblem& prob, const Vector& x, const Vector& y,
                          const Vector& u);

struct DerivativeCheck {
  std::string field;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct DerivativeReport {
  std::vector<DerivativeCheck> checks;
  int points = 0;
  double tol = 0.0;
  bool pass = true;
};

/// Compares every supplied derivative against central differences at points
/// sampled uniformly from the box.  rel err = |analytic - fd|_inf scaled by
/// max(1, |analytic|_inf).
DerivativeReport validate_derivatives(const BilevelProblem& prob, int points, double tol,
                                      std::uint64_t seed = 20240801ull);

/// Fills in every derivative of a value-only problem with central
/// differences (first order 1e-6-scaled steps, second order 1e-4-scaled,
/// Hessians symmetrised).  Intended for quick experiments; analytic
/// derivatives are preferred whenever available.
struct ValueOnlyProblem {
  std::string name;
  Dims dims;
  Box box;
  Vector x0, y0;
  std::optional<Reference> reference;
  BilevelProblem::Scalar F, f;
  BilevelProblem::Vec G, H, g;
};
BilevelProblem lift_value_only(const ValueOnlyProblem& src);

/// Builds a problem whose pieces are polynomials over (x, y); all
/// derivatives are exact.
struct PolyProblemSpec {
  std::string name;
  Dims dims;
  Box box;
  Vector x0, y0;
  std::optional<Reference> reference;
  Poly F;
  std::vector<Poly> G, H;
  Poly f;
  std::vector<Poly> g;
};
BilevelProblem make_poly_problem(const PolyProblemSpec& spec);

}  // namespace ebsa
