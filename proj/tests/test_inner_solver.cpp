#include <cmath>

#include "doctest.h"
#include "ebsa/corpus.hpp"
#include "ebsa/errors.hpp"
#include "ebsa/inner_solver.hpp"
#include "ebsa/problem.hpp"
#include "ebsa/smoothing.hpp"

using namespace ebsa;

namespace {

// min_y 1/2 (y - 3)^2, no lower constraints: Newton lands in one step.
BilevelProblem pure_quadratic() {
  PolyProblemSpec s;
  s.name = "pure_quadratic";
  s.dims = {1, 1, 0, 0, 0};
  s.box = {{-5.0}, {5.0}, {-5.0}, {5.0}};
  s.x0 = {0.0};
  s.y0 = {0.0};
  Poly y = Poly::var(2, 1);
  s.F = y;  // unused by the inner solve
  s.f = 0.5 * (y - 3.0) * (y - 3.0);
  return make_poly_problem(s);
}

}  // namespace

TEST_CASE("inactive-branch response is recovered") {
  const BilevelProblem& p = corpus_get("qp_kink");
  InnerResult res = minimize_y(p, {2.0}, {0.5}, {1.0}, 1e-4, 1.0, 1e-8);
  CHECK(res.status == InnerStatus::Converged);
  CHECK(res.phi_norm <= 1e-8);
  CHECK(std::fabs(res.y[0] - 2.0) <= 1e-3);
}

TEST_CASE("a pure quadratic needs exactly one Newton step") {
  BilevelProblem p = pure_quadratic();
  InnerResult res = minimize_y(p, {0.0}, {0.0}, {}, 1e-3, 1.0, 1e-10);
  CHECK(res.status == InnerStatus::Converged);
  CHECK(res.iterations == 1);
  CHECK(res.levenberg_shifts == 0);
  CHECK(res.y[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(res.f_tilde == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("a start already below tolerance returns immediately") {
  const BilevelProblem& p = corpus_get("qp_kink");
  SbalEval ev = eval_sbal(p, {0.5}, {0.5}, {1.0}, 0.5, 2.0);
  const double loose = 2.0 * norm2(ev.grad_y);
  InnerResult res = minimize_y(p, {0.5}, {0.5}, {1.0}, 0.5, 2.0, loose);
  CHECK(res.status == InnerStatus::Converged);
  CHECK(res.iterations == 0);
  CHECK(res.y[0] == 0.5);
}

TEST_CASE("objective decreases along the iterate sequence") {
  const BilevelProblem& p = corpus_get("nonquad_lower");
  InnerOptions opts;
  double prev = eval_sbal(p, {1.0}, {0.5}, {1.0}, 0.5, 2.0).value;
  int converged_at = -1;
  for (int cap = 1; cap <= 12; ++cap) {
    opts.max_iterations = cap;
    InnerResult res = minimize_y(p, {1.0}, {0.5}, {1.0}, 0.5, 2.0, 1e-12, opts);
    CHECK(res.f_tilde <= prev + 1e-14 * std::max(1.0, std::fabs(prev)));
    prev = res.f_tilde;
    if (res.status == InnerStatus::Converged && converged_at < 0)
      converged_at = cap;
  }
  CHECK(converged_at > 0);
}

TEST_CASE("identical calls produce identical iterates") {
  const BilevelProblem& p = corpus_get("quad_2d2d");
  InnerResult a =
      minimize_y(p, {0.3, 0.6}, {0.4, 0.5}, {1.0, 1.0}, 0.8, 1.9, 1e-10);
  InnerResult b =
      minimize_y(p, {0.3, 0.6}, {0.4, 0.5}, {1.0, 1.0}, 0.8, 1.9, 1e-10);
  CHECK(a.iterations == b.iterations);
  CHECK(a.phi_norm == b.phi_norm);
  CHECK(a.f_tilde == b.f_tilde);
  REQUIRE(a.y.size() == b.y.size());
  for (std::size_t i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);
}

TEST_CASE("default schedule parameter pairs all converge on the corpus") {
  // (r, rho) pairs as visited by the outer schedule: feasible shrinks by
  // delta1, failed cycles shrink both by delta2.
  const double pairs[][2] = {{1.0, 2.0}, {0.8, 2.0},    {0.512, 1.9},
                             {0.1, 2.0}, {1e-3, 1.715}, {1e-6, 2.0},
                             {1e-9, 1.2}};
  for (const std::string& name : corpus_names()) {
    const BilevelProblem& p = corpus_get(name);
    for (auto& pr : pairs) {
      Vector s(p.dims.m, 1.0);
      InnerResult res = minimize_y(p, p.x0, p.y0, s, pr[0], pr[1], 1e-9);
      INFO(name, " r=", pr[0], " rho=", pr[1]);
      CHECK(res.status == InnerStatus::Converged);
      CHECK(res.phi_norm <= 1e-9);
    }
  }
}

TEST_CASE("iteration cap reports rather than loops") {
  const BilevelProblem& p = corpus_get("nonquad_lower");
  InnerOptions opts;
  opts.max_iterations = 1;
  InnerResult res = minimize_y(p, {2.5}, {-0.9}, {1.0}, 0.5, 2.0, 1e-14, opts);
  CHECK(res.status == InnerStatus::MaxIterations);
  CHECK(res.iterations == 1);
}

TEST_CASE("negative tolerance is rejected") {
  const BilevelProblem& p = corpus_get("qp_kink");
  CHECK_THROWS_AS(minimize_y(p, {0.5}, {0.5}, {1.0}, 0.5, 2.0, -1.0),
                  InvalidParameter);
  CHECK_THROWS_AS(
      solve_smoothed_kkt(p, {0.5}, {0.5}, {1.0}, 0.5, 2.0, -1.0),
      InvalidParameter);
}

TEST_CASE("step diagnostics expose curvature and step size") {
  const BilevelProblem& p = corpus_get("qp_kink");

  InnerStepDiagnostics at_min = inner_step_diagnostics(p, {2.0}, {2.0001}, {5e-5}, 1e-4, 1.0);
  CHECK(at_min.hessian_min_eig_estimate > 0.0);
  CHECK(at_min.step_norm < 1e-3);

  // shrinking r at a boundary point stiffens the barrier curvature
  double prev = 0.0;
  for (double r : {1e-2, 1e-4, 1e-6}) {
    InnerStepDiagnostics d = inner_step_diagnostics(p, {-1.0}, {1e-4}, {1.0}, r, 1.0);
    CHECK(d.hessian_min_eig_estimate > prev);
    prev = d.hessian_min_eig_estimate;
  }
}

TEST_CASE("joint slack system solves to tolerance") {
  const BilevelProblem& p = corpus_get("qp_kink");
  for (double x : {-1.0, 0.5, 2.0}) {
    KktResult kr = solve_smoothed_kkt(p, {x}, p.y0, {1.0}, 1e-6, 2.0, 1e-12);
    REQUIRE(kr.status == InnerStatus::Converged);
    CHECK(kr.residual_norm <= 1e-12);
    Vector c = eval_C(p, {x}, kr.y, kr.s, 1e-6, 2.0);
    CHECK(norm2(c) <= 1e-12);
  }
  // active branch: the slack estimate recovers the exact multiplier u = -x
  KktResult act = solve_smoothed_kkt(p, {-1.0}, p.y0, {1.0}, 1e-8, 2.0, 1e-12);
  CHECK(std::fabs(act.s[0] - 1.0) <= 1e-3);
  // inactive branch: multiplier vanishes with r
  KktResult ina = solve_smoothed_kkt(p, {2.0}, p.y0, {1.0}, 1e-8, 2.0, 1e-12);
  CHECK(std::fabs(ina.s[0]) <= 1e-3);
}
