#include <cmath>

#include "doctest.h"
#include "ebsa/corpus.hpp"
#include "ebsa/errors.hpp"
#include "ebsa/inner_solver.hpp"
#include "ebsa/rng.hpp"
#include "ebsa/smoothing.hpp"

using namespace ebsa;

namespace {

Vector box_point(const Vector& lo, const Vector& hi, NormalRng& rng) {
  Vector v(lo.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = lo[i] + rng.uniform() * (hi[i] - lo[i]);
  return v;
}

double rel_gap(const DenseMatrix& a, const DenseMatrix& b) {
  double worst = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, std::fabs(a(i, j) - b(i, j)));
      scale = std::max(scale, std::fabs(a(i, j)));
    }
  return worst / scale;
}

}  // namespace

TEST_CASE("slack pair identities hold over a broad random sweep") {
  NormalRng rng(2024);
  for (int t = 0; t < 10000; ++t) {
    const double g = (rng.uniform() * 2.0 - 1.0) * 1e3;
    const double s = (rng.uniform() * 2.0 - 1.0) * 1e3;
    const double r = (t % 7 == 0) ? 0.0 : rng.uniform() * 10.0;
    const double rho = 1e-7 + rng.uniform() * (10.0 - 1e-7);
    ZKPair zk = eval_zk({g}, {s}, r, rho);
    const double z = zk.z[0], k = zk.k[0];
    CHECK(z >= 0.0);
    CHECK(k >= 0.0);
    CHECK(std::fabs(z * k - r * rho) <= 1e-9 * std::max(1.0, r * rho));
    CHECK(std::fabs((z + g) - (k - rho * s)) <=
          1e-9 * std::max(1.0, std::fabs(k) + rho * std::fabs(s)));
  }
}

TEST_CASE("r=0 collapses to the exact complementarity pair") {
  for (double g : {-3.0, -1e-12, 0.0, 2.5}) {
    for (double s : {0.0, 0.5, 4.0}) {
      const double rho = 2.0;
      ZKPair zk = eval_zk({g}, {s}, 0.0, rho);
      const double a = rho * s + g;
      CHECK(zk.z[0] == std::max(0.0, -a));
      CHECK(zk.k[0] == std::max(0.0, a));
    }
  }
}

TEST_CASE("large |rho s + g| keeps the product exact") {
  // The naive difference form loses every digit here; the implementation
  // must route the small root through r*rho / (large root).
  for (double a_sign : {1.0, -1.0}) {
    const double g = a_sign * 1e6;
    const double s = 0.0;
    const double r = 1e-6, rho = 1.0;
    ZKPair zk = eval_zk({g}, {s}, r, rho);
    CHECK(zk.z[0] > 0.0);
    CHECK(zk.k[0] > 0.0);
    CHECK(std::fabs(zk.z[0] * zk.k[0] - r * rho) <= 1e-10 * r * rho);
  }
}

TEST_CASE("parameter preconditions are enforced") {
  CHECK_THROWS_AS(eval_zk({0.0}, {0.0}, 1.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(eval_zk({0.0}, {0.0}, -1.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(eval_zk({0.0}, {0.0, 1.0}, 1.0, 1.0), ShapeMismatch);
  const BilevelProblem& p = corpus_get("qp_kink");
  CHECK_THROWS_AS(eval_zk_grads(p, {0.5}, {0.5}, {1.0}, 0.0, 1.0),
                  InvalidParameter);
  CHECK_THROWS_AS(jac_C(p, {0.5}, {0.5}, {1.0}, 0.0, 1.0), InvalidParameter);
}

TEST_CASE("slack derivatives match finite differences across the corpus") {
  NormalRng rng(77);
  for (const std::string& name : corpus_names()) {
    const BilevelProblem& p = corpus_get(name);
    if (p.dims.m == 0) continue;
    for (int t = 0; t < 5; ++t) {
      Vector x = box_point(p.box.x_lo, p.box.x_hi, rng);
      Vector y = box_point(p.box.y_lo, p.box.y_hi, rng);
      Vector s(p.dims.m);
      for (double& v : s) v = rng.uniform() * 2.0;
      const double r = 0.05 + rng.uniform();
      const double rho = 0.5 + rng.uniform() * 2.0;

      ZKGrads an = eval_zk_grads(p, x, y, s, r, rho);

      Vector xy(p.dims.d + p.dims.l);
      for (std::size_t i = 0; i < p.dims.d; ++i) xy[i] = x[i];
      for (std::size_t j = 0; j < p.dims.l; ++j) xy[p.dims.d + j] = y[j];
      auto z_of = [&](const Vector& v) {
        Vector xx(v.begin(), v.begin() + p.dims.d);
        Vector yy(v.begin() + p.dims.d, v.end());
        return eval_zk(p.g(xx, yy), s, r, rho).z;
      };
      auto k_of = [&](const Vector& v) {
        Vector xx(v.begin(), v.begin() + p.dims.d);
        Vector yy(v.begin() + p.dims.d, v.end());
        return eval_zk(p.g(xx, yy), s, r, rho).k;
      };
      INFO(name);
      CHECK(rel_gap(an.dz_dxy, central_diff_jacobian(z_of, xy)) <= 1e-5);
      CHECK(rel_gap(an.dk_dxy, central_diff_jacobian(k_of, xy)) <= 1e-5);

      for (std::size_t i = 0; i < p.dims.m; ++i) {
        auto zs = [&](const Vector& sv) {
          Vector ss = s;
          ss[i] = sv[0];
          return Vector{eval_zk(p.g(x, y), ss, r, rho).z[i]};
        };
        DenseMatrix fd = central_diff_jacobian(zs, {s[i]});
        CHECK(std::fabs(an.dz_ds[i] - fd(0, 0)) <=
              1e-5 * std::max(1.0, std::fabs(fd(0, 0))));
      }
    }
  }
}

TEST_CASE("stacked map jacobians match finite differences") {
  NormalRng rng(41);
  for (const std::string& name : {"qp_kink", "two_ineq", "quad_2d2d", "g_dep_x"}) {
    const BilevelProblem& p = corpus_get(name);
    for (int t = 0; t < 4; ++t) {
      Vector x = box_point(p.box.x_lo, p.box.x_hi, rng);
      Vector y = box_point(p.box.y_lo, p.box.y_hi, rng);
      Vector s(p.dims.m);
      for (double& v : s) v = 0.2 + rng.uniform();
      const double r = 0.1 + rng.uniform() * 0.5;
      const double rho = 1.0 + rng.uniform();

      CJac an = jac_C(p, x, y, s, r, rho);

      Vector ys(p.dims.l + p.dims.m);
      for (std::size_t j = 0; j < p.dims.l; ++j) ys[j] = y[j];
      for (std::size_t i = 0; i < p.dims.m; ++i) ys[p.dims.l + i] = s[i];
      auto c_of_ys = [&](const Vector& v) {
        Vector yy(v.begin(), v.begin() + p.dims.l);
        Vector ss(v.begin() + p.dims.l, v.end());
        return eval_C(p, x, yy, ss, r, rho);
      };
      auto c_of_x = [&](const Vector& v) { return eval_C(p, v, y, s, r, rho); };
      INFO(name);
      CHECK(rel_gap(an.jac_ys, central_diff_jacobian(c_of_ys, ys)) <= 1e-5);
      CHECK(rel_gap(an.jac_x, central_diff_jacobian(c_of_x, x)) <= 1e-5);
    }
  }
}

TEST_CASE("barrier objective gradient matches finite differences") {
  NormalRng rng(55);
  const BilevelProblem& p = corpus_get("quad_2d2d");
  for (int t = 0; t < 6; ++t) {
    Vector x = box_point(p.box.x_lo, p.box.x_hi, rng);
    Vector y = box_point(p.box.y_lo, p.box.y_hi, rng);
    Vector s = {0.3 + rng.uniform(), 0.3 + rng.uniform()};
    const double r = 0.2, rho = 1.5;
    SbalEval ev = eval_sbal(p, x, y, s, r, rho);
    auto val_y = [&](const Vector& yy) {
      return Vector{eval_sbal(p, x, yy, s, r, rho).value};
    };
    auto val_s = [&](const Vector& ss) {
      return Vector{eval_sbal(p, x, y, ss, r, rho).value};
    };
    DenseMatrix fd_y = central_diff_jacobian(val_y, y);
    DenseMatrix fd_s = central_diff_jacobian(val_s, s);
    for (std::size_t j = 0; j < p.dims.l; ++j)
      CHECK(std::fabs(ev.grad_y[j] - fd_y(0, j)) <=
            1e-5 * std::max(1.0, std::fabs(fd_y(0, j))));
    for (std::size_t i = 0; i < p.dims.m; ++i)
      CHECK(std::fabs(ev.grad_s[i] - fd_s(0, i)) <=
            1e-5 * std::max(1.0, std::fabs(fd_s(0, i))));
  }
}

TEST_CASE("smoothing bundle is internally consistent") {
  const BilevelProblem& p = corpus_get("two_ineq");
  Vector x = {0.8}, y = {0.4}, s = {0.7, 0.2};
  const double r = 0.3, rho = 1.2;
  SmoothingEval sm = smoothing_eval(p, x, y, s, r, rho);
  SbalEval ev = eval_sbal(p, x, y, s, r, rho);
  CJac cj = jac_C(p, x, y, s, r, rho);

  for (std::size_t j = 0; j < p.dims.l; ++j)
    CHECK(sm.phi[j] == doctest::Approx(ev.grad_y[j]).epsilon(1e-14));
  for (std::size_t i = 0; i < p.dims.m; ++i) {
    CHECK(sm.psi[i] == doctest::Approx(ev.grad_s[i]).epsilon(1e-14));
    CHECK(sm.w[i] >= 0.0);
    CHECK(sm.w[i] <= 1.0);
  }
  CHECK(rel_gap(sm.jac_ys, cj.jac_ys) == 0.0);
  // upper-left l x l block of Btilde is symmetric by construction
  for (std::size_t i = 0; i < p.dims.l; ++i)
    for (std::size_t j = 0; j < p.dims.l; ++j)
      CHECK(std::fabs(sm.Btilde(i, j) - sm.Btilde(j, i)) <= 1e-10);
}

TEST_CASE("sensitivity solves its own linear system") {
  NormalRng rng(13);
  for (const std::string& name : corpus_names()) {
    const BilevelProblem& p = corpus_get(name);
    if (p.dims.m == 0) continue;
    for (int t = 0; t < 3; ++t) {
      Vector x = box_point(p.box.x_lo, p.box.x_hi, rng);
      Vector y = box_point(p.box.y_lo, p.box.y_hi, rng);
      Vector s(p.dims.m);
      for (double& v : s) v = 0.1 + rng.uniform();
      const double r = 0.05 + rng.uniform() * 0.3;
      const double rho = 1.0 + rng.uniform();
      Sensitivity sv;
      try {
        sv = sensitivity(p, x, y, s, r, rho);
      } catch (const SingularSensitivity&) {
        continue;  // random points may hit genuinely singular geometry
      }
      // residual of btilde + Btilde * Vtilde
      double worst = 0.0, bscale = 0.0;
      for (std::size_t i = 0; i < sv.btilde.rows(); ++i)
        for (std::size_t j = 0; j < sv.btilde.cols(); ++j) {
          double acc = sv.btilde(i, j);
          for (std::size_t kk = 0; kk < sv.Btilde.cols(); ++kk)
            acc += sv.Btilde(i, kk) * sv.Vtilde(kk, j);
          worst = std::max(worst, std::fabs(acc));
          bscale = std::max(bscale, std::fabs(sv.btilde(i, j)));
        }
      INFO(name);
      CHECK(worst <= 1e-8 * (1.0 + bscale));
      for (double wi : sv.w) {
        CHECK(wi >= 0.0);
        CHECK(wi <= 1.0);
      }
    }
  }
}

TEST_CASE("sensitivity matches differences of the solved path") {
  const BilevelProblem& p = corpus_get("qp_kink");
  const double r = 1e-4, rho = 2.0;
  auto path_y = [&](double x) {
    KktResult kr = solve_smoothed_kkt(p, {x}, p.y0, {1.0}, r, rho, 1e-13);
    REQUIRE(kr.status == InnerStatus::Converged);
    return kr;
  };
  for (double x : {-1.0, 0.5, 2.0}) {
    KktResult kr = path_y(x);
    Sensitivity sv = sensitivity(p, {x}, kr.y, kr.s, r, rho);
    const double h = 1e-5;
    double fd = (path_y(x + h).y[0] - path_y(x - h).y[0]) / (2.0 * h);
    CHECK(std::fabs(sv.V(0, 0) - fd) <= 1e-4 * std::max(1e-4, std::fabs(fd)));
  }
}

TEST_CASE("limit systems reproduce the two branch slopes") {
  const BilevelProblem& p = corpus_get("qp_kink");

  // inactive branch: y(x) = x, slope 1, weight choice w = 1
  {
    LimitJacobians lj = limit_jacobians(p, {2.0}, {2.0}, {0.0}, {1.0});
    DenseMatrix rhs(lj.a.rows(), lj.a.cols());
    for (std::size_t i = 0; i < rhs.rows(); ++i)
      for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(i, j) = -lj.a(i, j);
    DenseMatrix sol = solve_dense(lj.A, rhs);
    CHECK(sol(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // active branch: y(x) = 0, slope 0, weight choice w = 0; multiplier
  // u(x) = -x moves with slope -1
  {
    LimitJacobians lj = limit_jacobians(p, {-1.0}, {0.0}, {1.0}, {0.0});
    DenseMatrix rhs(lj.a.rows(), lj.a.cols());
    for (std::size_t i = 0; i < rhs.rows(); ++i)
      for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(i, j) = -lj.a(i, j);
    DenseMatrix sol = solve_dense(lj.A, rhs);
    CHECK(sol(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sol(1, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  }
}

TEST_CASE("interpolated weights stay between the branch slopes") {
  const BilevelProblem& p = corpus_get("qp_kink");
  // at the kink the smoothed slope must live in [0, 1] for any admissible w
  for (double w : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    LimitJacobians lj = limit_jacobians(p, {0.0}, {0.0}, {0.5}, {w});
    DenseMatrix rhs(lj.a.rows(), lj.a.cols());
    for (std::size_t i = 0; i < rhs.rows(); ++i)
      for (std::size_t j = 0; j < rhs.cols(); ++j) rhs(i, j) = -lj.a(i, j);
    DenseMatrix sol = solve_dense(lj.A, rhs);
    CHECK(sol(0, 0) >= -1e-12);
    CHECK(sol(0, 0) <= 1.0 + 1e-12);
  }
}
