#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ebsa/errors.hpp"

namespace ebsa {

using Vector = std::vector<double>;

/// Dense row-major matrix.  Sizes in this library are tiny (tens of rows at
/// most), so everything is kept simple and allocation-friendly rather than
/// blocked or vectorised.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n);

  double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return a_.empty(); }

  const std::vector<double>& data() const { return a_; }
  std::vector<double>& data() { return a_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> a_;
};

DenseMatrix transpose(const DenseMatrix& m);
DenseMatrix mul(const DenseMatrix& a, const DenseMatrix& b);
Vector mul(const DenseMatrix& a, const Vector& x);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);

/// Infinity norm; empty input gives 0.
double inf_norm(const Vector& v);
/// Induced infinity norm (max absolute row sum); empty gives 0.
double inf_norm(const DenseMatrix& m);

/// Solves A X = B by LU factorisation with partial pivoting.  A must be
/// square and match B's row count.  Throws SingularMatrix when a pivot
/// falls below 1e-14 * ||A||_inf.
DenseMatrix solve_dense(const DenseMatrix& a, const DenseMatrix& b);
Vector solve_dense(const DenseMatrix& a, const Vector& b);

/// Eigenvalues of a symmetric matrix in ascending order, by cyclic Jacobi
/// rotations.  Input is symmetrised by averaging first.  Intended for the
/// tiny matrices this library works with.
Vector sym_eigenvalues(const DenseMatrix& m);

/// Central-difference Jacobian with a uniform step:
///   J(:, j) = (fn(at + step e_j) - fn(at - step e_j)) / (2 step).
/// Throws NonFiniteEvaluation if fn produces a non-finite entry at any
/// probe point, InvalidParameter when step <= 0.
DenseMatrix central_diff_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& at, double step);

/// Same, but with the per-coordinate default step 1e-6 * max(1, |at_j|).
DenseMatrix central_diff_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& at);

}  // namespace ebsa
