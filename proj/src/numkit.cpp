#include "ebsa/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>

namespace ebsa {

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

DenseMatrix mul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows())
    throw ShapeMismatch("mul: " + std::to_string(a.cols()) + " cols vs " +
                        std::to_string(b.rows()) + " rows");
  DenseMatrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector mul(const DenseMatrix& a, const Vector& x) {
  if (a.cols() != x.size())
    throw ShapeMismatch("mul: matrix cols " + std::to_string(a.cols()) +
                        " vs vector size " + std::to_string(x.size()));
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw ShapeMismatch("dot: size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double inf_norm(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double inf_norm(const DenseMatrix& m) {
  double best = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) row += std::abs(m(i, j));
    best = std::max(best, row);
  }
  return best;
}

DenseMatrix solve_dense(const DenseMatrix& a, const DenseMatrix& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeMismatch("solve_dense: A not square");
  if (b.rows() != n) throw ShapeMismatch("solve_dense: B row count mismatch");

  // Pivot tolerance is relative to the matrix scale; an exactly zero pivot
  // is singular even when the matrix itself is all zeros.
  const double tol = 1e-14 * inf_norm(a);

  DenseMatrix lu = a;
  DenseMatrix x = b;
  const std::size_t k = b.cols();
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    double mag = std::abs(lu(col, col));
    for (std::size_t r = col + 1; r < n; ++r) {
      const double m = std::abs(lu(r, col));
      if (m > mag) {
        mag = m;
        best = r;
      }
    }
    if (mag < tol || mag == 0.0)
      throw SingularMatrix("solve_dense: pivot " + std::to_string(mag) +
                           " below tolerance at column " + std::to_string(col));
    if (best != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(col, j), lu(best, j));
      for (std::size_t j = 0; j < k; ++j) std::swap(x(col, j), x(best, j));
    }
    const double inv = 1.0 / lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = lu(r, col) * inv;
      if (f == 0.0) continue;
      lu(r, col) = f;
      for (std::size_t j = col + 1; j < n; ++j) lu(r, j) -= f * lu(col, j);
      for (std::size_t j = 0; j < k; ++j) x(r, j) -= f * x(col, j);
    }
  }

  for (std::size_t col = n; col-- > 0;) {
    const double inv = 1.0 / lu(col, col);
    for (std::size_t j = 0; j < k; ++j) {
      double acc = x(col, j);
      for (std::size_t r = col + 1; r < n; ++r) acc -= lu(col, r) * x(r, j);
      x(col, j) = acc * inv;
    }
  }
  return x;
}

Vector solve_dense(const DenseMatrix& a, const Vector& b) {
  DenseMatrix rhs(b.size(), 1);
  for (std::size_t i = 0; i < b.size(); ++i) rhs(i, 0) = b[i];
  DenseMatrix x = solve_dense(a, rhs);
  Vector out(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) out[i] = x(i, 0);
  return out;
}

Vector sym_eigenvalues(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  if (m.cols() != n) throw ShapeMismatch("sym_eigenvalues: matrix not square");
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (m(i, j) + m(j, i));

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-30) break;
    for (std::size_t pidx = 0; pidx < n; ++pidx)
      for (std::size_t qidx = pidx + 1; qidx < n; ++qidx) {
        const double apq = a(pidx, qidx);
        if (apq == 0.0) continue;
        const double theta = (a(qidx, qidx) - a(pidx, pidx)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, pidx);
          const double akq = a(k, qidx);
          a(k, pidx) = c * akp - sn * akq;
          a(k, qidx) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(pidx, k);
          const double aqk = a(qidx, k);
          a(pidx, k) = c * apk - sn * aqk;
          a(qidx, k) = sn * apk + c * aqk;
        }
      }
  }
  Vector ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

namespace {

Vector probe(const std::function<Vector(const Vector&)>& fn, const Vector& at) {
  Vector v = fn(at);
  for (double e : v)
    if (!std::isfinite(e)) throw NonFiniteEvaluation("central_diff_jacobian: non-finite value");
  return v;
}

DenseMatrix fd_jacobian(const std::function<Vector(const Vector&)>& fn, const Vector& at,
                        const Vector& steps) {
  Vector p = at;
  DenseMatrix j;
  for (std::size_t col = 0; col < at.size(); ++col) {
    const double h = steps[col];
    p[col] = at[col] + h;
    const Vector up = probe(fn, p);
    p[col] = at[col] - h;
    const Vector dn = probe(fn, p);
    p[col] = at[col];
    if (up.size() != dn.size()) throw ShapeMismatch("central_diff_jacobian: output size varies");
    if (j.empty()) j = DenseMatrix(up.size(), at.size());
    if (up.size() != j.rows()) throw ShapeMismatch("central_diff_jacobian: output size varies");
    const double inv = 1.0 / (2.0 * h);
    for (std::size_t r = 0; r < up.size(); ++r) j(r, col) = (up[r] - dn[r]) * inv;
  }
  if (j.empty()) j = DenseMatrix(probe(fn, at).size(), 0);
  return j;
}

}  // namespace

DenseMatrix central_diff_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& at, double step) {
  if (!(step > 0.0)) throw InvalidParameter("central_diff_jacobian: step must be positive");
  return fd_jacobian(fn, at, Vector(at.size(), step));
}

DenseMatrix central_diff_jacobian(const std::function<Vector(const Vector&)>& fn,
                                  const Vector& at) {
  Vector steps(at.size());
  for (std::size_t i = 0; i < at.size(); ++i)
    steps[i] = 1e-6 * std::max(1.0, std::abs(at[i]));
  return fd_jacobian(fn, at, steps);
}

}  // namespace ebsa
