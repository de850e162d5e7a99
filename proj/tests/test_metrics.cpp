#include <cmath>

#include "doctest.h"
#include "ebsa/corpus.hpp"
#include "ebsa/errors.hpp"
#include "ebsa/metrics.hpp"
#include "ebsa/poly.hpp"
#include "ebsa/problem.hpp"

using namespace ebsa;

namespace {

BilevelProblem inline_problem(const char* name, Dims dims, Poly F, Poly f,
                              std::vector<Poly> g = {}, std::vector<Poly> G = {},
                              std::vector<Poly> H = {}) {
  PolyProblemSpec s;
  s.name = name;
  s.dims = dims;
  s.box.x_lo.assign(dims.d, -2.0);
  s.box.x_hi.assign(dims.d, 2.0);
  s.box.y_lo.assign(dims.l, -2.0);
  s.box.y_hi.assign(dims.l, 2.0);
  s.x0.assign(dims.d, 0.0);
  s.y0.assign(dims.l, 0.0);
  s.F = std::move(F);
  s.f = std::move(f);
  s.g = std::move(g);
  s.G = std::move(G);
  s.H = std::move(H);
  return make_poly_problem(s);
}

}  // namespace

TEST_CASE("lower-level value function matches closed forms") {
  const BilevelProblem& qp = corpus_get("qp_kink");
  // min 1/2 y^2 - x y over y >= 0: y* = max(x, 0), V = -max(x,0)^2 / 2
  CHECK(std::fabs(value_function(qp, {2.0}) - (-2.0)) <= 1e-6);
  CHECK(std::fabs(value_function(qp, {-1.0}) - 0.0) <= 1e-6);
  CHECK(std::fabs(value_function(qp, {0.5}) - (-0.125)) <= 1e-6);

  // repeated calls share the seeded start draw
  CHECK(value_function(qp, {0.7}) == value_function(qp, {0.7}));
}

TEST_CASE("value function without lower constraints") {
  Poly y = Poly::var(2, 1);
  BilevelProblem p = inline_problem("free_quad", {1, 1, 0, 0, 0},
                                    Poly::var(2, 0), 0.5 * (y - 3.0) * (y - 3.0));
  CHECK(std::fabs(value_function(p, {0.0})) <= 1e-8);
  CHECK(std::fabs(value_function(p, {1.3})) <= 1e-8);
}

TEST_CASE("value function failure on an unbounded lower level") {
  BilevelProblem p = inline_problem("runaway", {1, 1, 0, 0, 0},
                                    Poly::var(2, 0), -Poly::var(2, 1));
  ValueFunctionOptions fast;
  fast.starts = 2;
  fast.max_cycles = 3;
  fast.inner.max_iterations = 20;
  CHECK_THROWS_AS(value_function(p, {0.0}, fast), ValueFunctionFailure);

  InfeaseBreakdown ib = infeasibility(p, {0.0}, {0.0}, fast);
  CHECK_FALSE(ib.gap_valid);
  CHECK_FALSE(ib.applicable);
  CHECK(std::isnan(ib.total));
}

TEST_CASE("infeasibility breakdown at a bilevel-optimal point") {
  const BilevelProblem& qp = corpus_get("qp_kink");
  InfeaseBreakdown ib = infeasibility(qp, {1.0}, {1.0});
  CHECK(ib.upper_ineq == 0.0);
  CHECK(ib.upper_eq == 0.0);
  CHECK(ib.lower_ineq == 0.0);
  CHECK(ib.gap_valid);
  CHECK(std::fabs(ib.optimality_gap) <= 1e-6);
  CHECK(std::fabs(ib.total) <= 1e-6);
  CHECK(ib.applicable);
}

TEST_CASE("a lower-suboptimal y shows up as an optimality gap") {
  const BilevelProblem& qp = corpus_get("qp_kink");
  // f(2,3) = 4.5 - 6 = -1.5 while V(2) = -2
  InfeaseBreakdown ib = infeasibility(qp, {2.0}, {3.0});
  CHECK(ib.gap_valid);
  CHECK(ib.optimality_gap == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(ib.total == doctest::Approx(0.5).epsilon(1e-5));
  CHECK_FALSE(ib.applicable);
}

TEST_CASE("constraint violations land in their own buckets") {
  const BilevelProblem& lin = corpus_get("lin_upper_con");
  // y = x is lower-optimal, so only the upper bound x <= 0.75 is violated
  InfeaseBreakdown ib = infeasibility(lin, {0.95}, {0.95});
  CHECK(ib.upper_ineq == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(ib.lower_ineq == 0.0);
  CHECK(std::fabs(ib.optimality_gap) <= 1e-6);
  CHECK_FALSE(ib.applicable);  // 0.2 over the 0.1 applicability bar

  const BilevelProblem& mx = corpus_get("mixed_con");
  InfeaseBreakdown ib2 = infeasibility(mx, {0.45}, {0.45});
  CHECK(ib2.upper_eq == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solution-quality ratios") {
  Ratios r = ratios(1.5, -0.25, 1.0, -0.5);
  CHECK(r.R_F == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(r.R_f == doctest::Approx(0.25 / 1.5).epsilon(1e-15));

  // zero reference: plain difference
  CHECK(ratios(0.125, 0.0, 0.0, 0.0).R_F == doctest::Approx(0.125).epsilon(1e-15));

  // scale grows with the error, sign follows the difference
  CHECK(ratios(2.0, 0.0, 1.0, 0.0).R_F > ratios(1.5, 0.0, 1.0, 0.0).R_F);
  CHECK(ratios(0.5, 0.0, 1.0, 0.0).R_F < 0.0);
}

TEST_CASE("grid axes cover the box and hit the endpoints") {
  Box b;
  b.x_lo = {0.0};
  b.x_hi = {1.0};
  b.y_lo = {-1.0};
  b.y_hi = {2.0};
  GridAxes ax = make_axes(b, 0.25);
  REQUIRE(ax.x_axes.size() == 1);
  REQUIRE(ax.y_axes.size() == 1);
  CHECK(ax.x_axes[0].size() == 5);
  CHECK(ax.x_axes[0].front() == 0.0);
  CHECK(ax.x_axes[0].back() == 1.0);
  CHECK(ax.y_axes[0].size() == 13);
  CHECK(ax.y_axes[0].back() == 2.0);
  for (std::size_t i = 1; i < ax.y_axes[0].size(); ++i)
    CHECK(ax.y_axes[0][i] > ax.y_axes[0][i - 1]);

  // resolution coarser than the box still keeps both endpoints
  GridAxes coarse = make_axes(b, 5.0);
  CHECK(coarse.x_axes[0].size() == 2);
  CHECK(coarse.x_axes[0].front() == 0.0);
  CHECK(coarse.x_axes[0].back() == 1.0);
}

TEST_CASE("serial and parallel scans agree bitwise") {
  for (const char* name : {"qp_kink", "quad_2d2d"}) {
    const BilevelProblem& p = corpus_get(name);
    GridAxes ax = make_axes(p.box, name[0] == 'q' && name[1] == 'p' ? 0.05 : 0.25);
    ScanBest a = scan_grid_serial(p, ax, 1e-9);
    ScanBest b = scan_grid_openmp(p, ax, 1e-9);
    REQUIRE(a.found == b.found);
    REQUIRE(a.found);
    CHECK(a.F_val == b.F_val);
    CHECK(a.f_val == b.f_val);
    for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
    for (std::size_t i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);
  }
}

TEST_CASE("reference scan finds the known optima") {
  OracleSolution qp = grid_oracle(corpus_get("qp_kink"), 1e-3);
  CHECK(qp.resolution == 1e-3);
  CHECK(std::fabs(qp.x[0] - 1.0) <= 2e-3);
  CHECK(std::fabs(qp.y[0] - 1.0) <= 2e-3);
  CHECK(std::fabs(qp.F_val) <= 1e-5);

  OracleSolution lin = grid_oracle(corpus_get("lin_upper_con"), 1e-3);
  CHECK(std::fabs(lin.x[0] - 0.75) <= 2e-3);
  CHECK(std::fabs(lin.F_val - 0.125) <= 1e-3);
}

TEST_CASE("scans report infeasible and oversized setups") {
  Poly y = Poly::var(2, 1);
  BilevelProblem noupper =
      inline_problem("never_ok", {1, 1, 0, 1, 0}, Poly::var(2, 0) * Poly::var(2, 0),
                     0.5 * y * y, {}, {Poly::constant(2, 1.0)});
  CHECK_THROWS_AS(grid_oracle(noupper, 0.05), NoFeasiblePoint);

  BilevelProblem nolower =
      inline_problem("no_lower", {1, 1, 1, 0, 0}, Poly::var(2, 0) * Poly::var(2, 0),
                     0.5 * y * y, {Poly::constant(2, 1.0)});
  CHECK_THROWS_AS(lower_grid_min(nolower, {0.0}, 0.05), NoFeasiblePoint);

  Poly big = Poly::var(5, 0) * Poly::var(5, 0);
  Poly fsum(5);
  for (int j = 2; j < 5; ++j)
    fsum += Poly::var(5, j) * Poly::var(5, j);
  BilevelProblem wide = inline_problem("wide", {2, 3, 0, 0, 0}, big, fsum);
  CHECK_THROWS_AS(grid_oracle(wide, 0.5), IntractableDimension);
}

TEST_CASE("per-slice grid minimum tracks the value function") {
  const BilevelProblem& qp = corpus_get("qp_kink");
  for (double x : {-1.5, 0.3, 1.7}) {
    const double grid = lower_grid_min(qp, {x}, 1e-2);
    const double exact = value_function(qp, {x});
    CHECK(std::fabs(grid - exact) <= 2e-2);
    CHECK(grid >= exact - 1e-9);  // a grid point can never beat the minimum
  }
}

TEST_CASE("active-gradient rank check") {
  const BilevelProblem& qp = corpus_get("qp_kink");

  LicqReport active = check_licq(qp, {-1.0}, {0.0}, 1e-6);
  CHECK(active.active_count == 1);
  CHECK(active.rank == 1);
  CHECK(active.holds);

  LicqReport inactive = check_licq(qp, {2.0}, {2.0}, 1e-6);
  CHECK(inactive.active_count == 0);
  CHECK(inactive.holds);

  Poly y = Poly::var(2, 1);
  BilevelProblem dup = inline_problem("dup_rows", {1, 1, 2, 0, 0},
                                      Poly::var(2, 0), 0.5 * y * y, {-y, -y});
  LicqReport broken = check_licq(dup, {0.0}, {0.0}, 1e-6);
  CHECK(broken.active_count == 2);
  CHECK(broken.rank == 1);
  CHECK_FALSE(broken.holds);
}
