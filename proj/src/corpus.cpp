#include "ebsa/corpus.hpp"

#include <map>
#include <memory>

namespace ebsa {

namespace {

// Shorthand builders over k = d + l polynomial variables.
struct Vars {
  std::size_t d, l;
  Poly x(std::size_t i) const { return Poly::var(d + l, i); }
  Poly y(std::size_t j) const { return Poly::var(d + l, d + j); }
  Poly c(double v) const { return Poly::constant(d + l, v); }
};

Poly sq(const Poly& p) { return p * p; }

// The registry is a function so static init order never matters.
//
// Every entry carries box bounds, a start inside the box and a reference
// solution worked out by hand; the grid oracle cross-checks the references
// in the metrics test suite.
std::map<std::string, BilevelProblem> build_corpus() {
  std::map<std::string, BilevelProblem> reg;
  auto add = [&reg](const PolyProblemSpec& spec) { reg[spec.name] = make_poly_problem(spec); };

  {
    // min (x-1)^2 + (y-1)^2  with lower level  min 1/2 y^2 - x y  s.t. y >= 0.
    // Lower solution y(x) = max(x, 0) has a kink at x = 0; the bilevel
    // optimum (1, 1) sits on the smooth branch with the constraint inactive.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "qp_kink";
    s.dims = {1, 1, 1, 0, 0};
    s.box = {{-2.0}, {2.0}, {-2.0}, {2.0}};
    s.x0 = {0.5};
    s.y0 = {0.5};
    s.F = sq(v.x(0) - 1.0) + sq(v.y(0) - 1.0);
    s.f = 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {-v.y(0)};
    s.reference = Reference{{1.0}, {1.0}, 0.0, -0.5};
    add(s);
  }
  {
    // qp_kink plus the upper bound x <= 0.75, which is active at the optimum.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "lin_upper_con";
    s.dims = {1, 1, 1, 1, 0};
    s.box = {{-2.0}, {2.0}, {-2.0}, {2.0}};
    s.x0 = {0.5};
    s.y0 = {0.5};
    s.F = sq(v.x(0) - 1.0) + sq(v.y(0) - 1.0);
    s.G = {v.x(0) - 0.75};
    s.f = 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {-v.y(0)};
    s.reference = Reference{{0.75}, {0.75}, 0.125, -0.28125};
    add(s);
  }
  {
    // qp_kink restricted to the line x + y = 2; the unconstrained optimum
    // (1, 1) already satisfies it.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "eq_coupled";
    s.dims = {1, 1, 1, 0, 1};
    s.box = {{-2.0}, {2.0}, {-2.0}, {2.0}};
    s.x0 = {0.5};
    s.y0 = {0.5};
    s.F = sq(v.x(0) - 1.0) + sq(v.y(0) - 1.0);
    s.H = {v.x(0) + v.y(0) - 2.0};
    s.f = 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {-v.y(0)};
    s.reference = Reference{{1.0}, {1.0}, 0.0, -0.5};
    add(s);
  }
  {
    // Optimum at (-1, 0) on the branch where y >= 0 is active with
    // multiplier u = 1, so strict complementarity holds.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "active_lower";
    s.dims = {1, 1, 1, 0, 0};
    s.box = {{-2.0}, {2.0}, {-2.0}, {2.0}};
    s.x0 = {-0.25};
    s.y0 = {0.5};
    s.F = sq(v.x(0) + 1.0) + sq(v.y(0));
    s.f = 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {-v.y(0)};
    s.reference = Reference{{-1.0}, {0.0}, 0.0, 0.0};
    add(s);
  }
  {
    // The bound y <= 10 never binds inside the box, so the lower solution
    // y(x) = x is smooth everywhere the solver looks.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "inactive_lower";
    s.dims = {1, 1, 1, 0, 0};
    s.box = {{-1.0}, {4.0}, {-1.0}, {4.0}};
    s.x0 = {0.5};
    s.y0 = {2.0};
    s.F = sq(v.x(0) - 2.0) + sq(v.y(0) - 1.0);
    s.f = 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {v.y(0) - 10.0};
    s.reference = Reference{{1.5}, {1.5}, 0.5, -1.125};
    add(s);
  }
  {
    // Two lower bounds clamp y to [0, 1]; at the optimum (2, 1) the upper
    // bound is active with multiplier 1.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "two_ineq";
    s.dims = {1, 1, 2, 0, 0};
    s.box = {{-1.0}, {4.0}, {-1.0}, {2.0}};
    s.x0 = {0.5};
    s.y0 = {0.5};
    s.F = sq(v.x(0) - 2.0) + sq(v.y(0) - 2.0);
    s.f = 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {-v.y(0), v.y(0) - 1.0};
    s.reference = Reference{{2.0}, {1.0}, 1.0, -1.5};
    add(s);
  }
  {
    // Two upper-level variables feeding one lower-level variable.
    Vars v{2, 1};
    PolyProblemSpec s;
    s.name = "d2_l1";
    s.dims = {2, 1, 1, 0, 0};
    s.box = {{-1.5, -1.5}, {1.5, 1.5}, {-1.5}, {1.5}};
    s.x0 = {0.1, 0.8};
    s.y0 = {0.5};
    s.F = sq(v.x(0) - 0.5) + sq(v.x(1) - 0.5) + sq(v.y(0) - 1.0);
    s.f = 0.5 * sq(v.y(0)) - (v.x(0) + v.x(1)) * v.y(0);
    s.g = {-v.y(0)};
    s.reference = Reference{{0.5, 0.5}, {1.0}, 0.0, -0.5};
    add(s);
  }
  {
    // One upper-level variable, two lower-level variables, one bound.
    Vars v{1, 2};
    PolyProblemSpec s;
    s.name = "l2_quad";
    s.dims = {1, 2, 1, 0, 0};
    s.box = {{-2.0}, {2.0}, {-2.0, -2.0}, {2.0, 2.0}};
    s.x0 = {0.4};
    s.y0 = {0.2, 0.8};
    s.F = sq(v.x(0) - 1.0) + sq(v.y(0) - 1.0) + sq(v.y(1) - 1.0);
    s.f = 0.5 * (sq(v.y(0)) + sq(v.y(1))) - v.x(0) * (v.y(0) + v.y(1));
    s.g = {-v.y(0)};
    s.reference = Reference{{1.0}, {1.0, 1.0}, 0.0, -1.0};
    add(s);
  }
  {
    // Inequality and equality upper constraints together; the equality
    // pins x = 0.7 and the inequality stays slack.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "mixed_con";
    s.dims = {1, 1, 1, 1, 1};
    s.box = {{-2.0}, {2.0}, {-2.0}, {2.0}};
    s.x0 = {0.45};
    s.y0 = {0.55};
    s.F = sq(v.x(0) - 1.0) + sq(v.y(0) - 1.0);
    s.G = {v.x(0) - 0.75};
    s.H = {v.x(0) + v.y(0) - 1.4};
    s.f = 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {-v.y(0)};
    s.reference = Reference{{0.7}, {0.7}, 0.18, -0.245};
    add(s);
  }
  {
    // Quartic lower objective; for x >= 0 the response solves y^3 + y = x,
    // so the optimum is at x = 2, y = 1.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "nonquad_lower";
    s.dims = {1, 1, 1, 0, 0};
    s.box = {{-1.0}, {3.0}, {-1.0}, {2.0}};
    s.x0 = {1.0};
    s.y0 = {0.5};
    s.F = sq(v.x(0) - 2.0) + sq(v.y(0) - 1.0);
    s.f = 0.25 * sq(sq(v.y(0))) + 0.5 * sq(v.y(0)) - v.x(0) * v.y(0);
    s.g = {-v.y(0)};
    s.reference = Reference{{2.0}, {1.0}, 0.0, -1.25};
    add(s);
  }
  {
    // The lower constraint x - y <= 0 depends on x, exercising the
    // cross-derivative path; active at the optimum with u = 1.5.
    Vars v{1, 1};
    PolyProblemSpec s;
    s.name = "g_dep_x";
    s.dims = {1, 1, 1, 0, 0};
    s.box = {{-2.0}, {3.0}, {-2.0}, {3.0}};
    s.x0 = {0.5};
    s.y0 = {1.0};
    s.F = sq(v.x(0) - 1.0) + sq(v.y(0) - 2.0);
    s.f = 0.5 * sq(v.y(0));
    s.g = {v.x(0) - v.y(0)};
    s.reference = Reference{{1.5}, {1.5}, 0.5, 1.125};
    add(s);
  }
  {
    // Separable two-by-two instance with a coupling upper bound
    // x1 + x2 <= 1.5 that is active at the optimum.
    Vars v{2, 2};
    PolyProblemSpec s;
    s.name = "quad_2d2d";
    s.dims = {2, 2, 2, 1, 0};
    s.box = {{-1.0, -1.0}, {2.0, 2.0}, {-1.0, -1.0}, {2.0, 2.0}};
    s.x0 = {0.3, 0.6};
    s.y0 = {0.4, 0.5};
    s.F = sq(v.x(0) - 1.0) + sq(v.x(1) - 1.0) + sq(v.y(0) - 1.0) + sq(v.y(1) - 1.0);
    s.G = {v.x(0) + v.x(1) - 1.5};
    s.f = 0.5 * (sq(v.y(0)) + sq(v.y(1))) - v.x(0) * v.y(0) - v.x(1) * v.y(1);
    s.g = {-v.y(0), -v.y(1)};
    s.reference = Reference{{0.75, 0.75}, {0.75, 0.75}, 0.25, -0.5625};
    add(s);
  }
  return reg;
}

const std::map<std::string, BilevelProblem>& registry() {
  static const std::map<std::string, BilevelProblem> reg = build_corpus();
  return reg;
}

}  // namespace

std::vector<std::string> corpus_names() {
  std::vector<std::string> names;
  for (const auto& [name, prob] : registry()) names.push_back(name);
  return names;
}

const BilevelProblem& corpus_get(const std::string& name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw UnknownProblem("corpus_get: no problem named '" + name + "'");
  return it->second;
}

}  // namespace ebsa
