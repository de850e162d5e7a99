#include <cmath>

#include "doctest.h"
#include "ebsa/numkit.hpp"
#include "ebsa/rng.hpp"

using namespace ebsa;

TEST_CASE("identity solve returns rhs") {
  DenseMatrix a = DenseMatrix::identity(3);
  DenseMatrix b(3, 2);
  b(0, 0) = 1.0; b(0, 1) = 4.0;
  b(1, 0) = 2.0; b(1, 1) = 5.0;
  b(2, 0) = 3.0; b(2, 1) = 6.0;
  DenseMatrix x = solve_dense(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(x(i, j) == doctest::Approx(b(i, j)).epsilon(1e-14));
}

TEST_CASE("diagonal solve divides componentwise") {
  DenseMatrix a(3, 3);
  a(0, 0) = 2.0;
  a(1, 1) = -4.0;
  a(2, 2) = 0.5;
  Vector b{2.0, 8.0, 3.0};
  Vector x = solve_dense(a, b);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(-2.0));
  CHECK(x[2] == doctest::Approx(6.0));
}

TEST_CASE("known 8x8 system recovers the planted solution") {
  NormalRng rng(42);
  DenseMatrix a(8, 8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) a(i, j) = rng.next();
  for (std::size_t i = 0; i < 8; ++i) a(i, i) += 8.0;  // keep it well conditioned
  DenseMatrix xs(8, 2);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 2; ++j) xs(i, j) = rng.next();
  DenseMatrix b = mul(a, xs);
  DenseMatrix x = solve_dense(a, b);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(x(i, j) - xs(i, j)) < 1e-9);
}

TEST_CASE("singular and near-singular matrices throw") {
  DenseMatrix a(2, 2);
  a(0, 0) = 1.0; a(0, 1) = 2.0;
  a(1, 0) = 2.0; a(1, 1) = 4.0;
  Vector b{1.0, 2.0};
  CHECK_THROWS_AS(solve_dense(a, b), SingularMatrix);

  DenseMatrix z(2, 2, 0.0);
  CHECK_THROWS_AS(solve_dense(z, b), SingularMatrix);

  // rank-1 plus a perturbation below the pivot tolerance
  DenseMatrix n(2, 2);
  n(0, 0) = 1.0; n(0, 1) = 1.0;
  n(1, 0) = 1.0; n(1, 1) = 1.0 + 1e-16;
  CHECK_THROWS_AS(solve_dense(n, b), SingularMatrix);
}

TEST_CASE("shape mismatches throw") {
  DenseMatrix a(2, 3);
  Vector b{1.0, 2.0};
  CHECK_THROWS_AS(solve_dense(a, b), ShapeMismatch);
  DenseMatrix sq = DenseMatrix::identity(3);
  CHECK_THROWS_AS(solve_dense(sq, b), ShapeMismatch);
}

TEST_CASE("residual bound holds over random systems") {
  NormalRng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 20.0);
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.next();
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 2.0 * static_cast<double>(n);
    DenseMatrix b(n, 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 2; ++j) b(i, j) = rng.next();
    DenseMatrix x = solve_dense(a, b);

    DenseMatrix r = mul(a, x);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 2; ++j) r(i, j) -= b(i, j);
    const double bound = 1e-10 * (1.0 + inf_norm(a) * inf_norm(x));
    CHECK(inf_norm(r) <= bound);
  }
}

TEST_CASE("central difference jacobian matches the quadratic oracle") {
  auto fn = [](const Vector& v) { return Vector{v[0] * v[0], v[0] * v[1]}; };
  // exact J at (1, 2): [[2, 0], [2, 1]]
  DenseMatrix j = central_diff_jacobian(fn, Vector{1.0, 2.0}, 1e-6);
  CHECK(j.rows() == 2);
  CHECK(j.cols() == 2);
  CHECK(j(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(j(0, 1) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(j(1, 0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(j(1, 1) == doctest::Approx(1.0).epsilon(1e-8));

  DenseMatrix jd = central_diff_jacobian(fn, Vector{1.0, 2.0});
  CHECK(jd(1, 0) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("central difference jacobian is exact on cubics to O(h^2)") {
  auto fn = [](const Vector& v) { return Vector{v[0] * v[0] * v[0]}; };
  // error for f = t^3 is exactly h^2 at t = 1
  DenseMatrix j = central_diff_jacobian(fn, Vector{1.0}, 1e-4);
  CHECK(std::abs(j(0, 0) - 3.0) == doctest::Approx(1e-8).epsilon(1e-3));
}

TEST_CASE("non-finite evaluations and bad steps are rejected") {
  auto fn = [](const Vector& v) { return Vector{1.0 / v[0]}; };
  CHECK_THROWS_AS(central_diff_jacobian(fn, Vector{0.0}, 0.0), InvalidParameter);
  auto bad = [](const Vector& v) { return Vector{std::sqrt(v[0])}; };
  CHECK_THROWS_AS(central_diff_jacobian(bad, Vector{0.0}, 1e-3), NonFiniteEvaluation);
}

TEST_CASE("inf_norm basics") {
  CHECK(inf_norm(Vector{}) == 0.0);
  CHECK(inf_norm(Vector{-3.0, 2.0}) == 3.0);
  DenseMatrix m(2, 2);
  m(0, 0) = 1.0; m(0, 1) = -2.0;
  m(1, 0) = 0.5; m(1, 1) = 0.25;
  CHECK(inf_norm(m) == doctest::Approx(3.0));
  CHECK(inf_norm(DenseMatrix{}) == 0.0);
}

TEST_CASE("matrix helpers") {
  DenseMatrix a(2, 3);
  a(0, 0) = 1; a(0, 1) = 2; a(0, 2) = 3;
  a(1, 0) = 4; a(1, 1) = 5; a(1, 2) = 6;
  DenseMatrix t = transpose(a);
  CHECK(t.rows() == 3);
  CHECK(t(2, 1) == 6.0);
  Vector v = mul(a, Vector{1.0, 1.0, 1.0});
  CHECK(v[0] == 6.0);
  CHECK(v[1] == 15.0);
  CHECK_THROWS_AS(mul(a, Vector{1.0}), ShapeMismatch);
}
