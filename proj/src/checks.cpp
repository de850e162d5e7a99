#include "ebsa/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ebsa/corpus.hpp"
#include "ebsa/rng.hpp"
#include "ebsa/smoothing.hpp"

namespace ebsa {

namespace {

// Worst normalized violation of the slack-pair identities at random box
// points and random (s, r, rho) draws.
double identity_sweep(const BilevelProblem& prob, std::uint64_t seed,
                      int samples) {
  NormalRng rng(splitmix64(seed ^ fnv1a64(prob.name) ^ 0x1DE57711ULL));
  double worst = 0.0;
  Vector x(prob.dims.d), y(prob.dims.l), s(prob.dims.m);
  for (int n = 0; n < samples; ++n) {
    for (std::size_t a = 0; a < x.size(); ++a)
      x[a] = prob.box.x_lo[a] +
             (prob.box.x_hi[a] - prob.box.x_lo[a]) * rng.uniform();
    for (std::size_t b = 0; b < y.size(); ++b)
      y[b] = prob.box.y_lo[b] +
             (prob.box.y_hi[b] - prob.box.y_lo[b]) * rng.uniform();
    for (double& si : s) si = 10.0 * rng.uniform();
    const double r = (n % 7 == 0) ? 0.0 : std::pow(10.0, -8.0 * rng.uniform() + 1.0);
    const double rho = std::pow(10.0, -8.0 * rng.uniform() + 1.0);

    const Vector g = prob.g(x, y);
    ZKPair zk = eval_zk(g, s, r, rho);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double z = zk.z[i];
      const double k = zk.k[i];
      if (z < 0.0) worst = std::max(worst, -z);
      if (k < 0.0) worst = std::max(worst, -k);
      worst = std::max(worst,
                       std::abs(z * k - r * rho) / std::max(1.0, r * rho));
      const double scale = std::max(
          {1.0, std::abs(z), std::abs(k), std::abs(g[i]), rho * s[i]});
      worst = std::max(worst, std::abs((z + g[i]) - (k - rho * s[i])) / scale);
    }
  }
  return worst;
}

}  // namespace

CheckSuiteResult run_problem_checks(
    const std::vector<const BilevelProblem*>& problems, double tol,
    std::uint64_t seed, int points) {
  CheckSuiteResult result;
  for (const BilevelProblem* prob : problems) {
    DerivativeReport rep = validate_derivatives(*prob, points, tol, seed);
    for (const DerivativeCheck& c : rep.checks) {
      CheckEntry e;
      e.problem = prob->name;
      e.what = c.field;
      e.max_err = c.max_rel_err;
      e.tol = tol;
      e.pass = c.pass;
      result.entries.push_back(e);
      result.all_pass = result.all_pass && c.pass;
    }
    if (prob->dims.m > 0) {
      CheckEntry e;
      e.problem = prob->name;
      e.what = "slack_identity";
      e.max_err = identity_sweep(*prob, seed, std::max(points, 25) * 4);
      e.tol = tol;
      e.pass = e.max_err <= tol;
      result.entries.push_back(e);
      result.all_pass = result.all_pass && e.pass;
    }
  }
  return result;
}

CheckSuiteResult run_corpus_checks(double tol, std::uint64_t seed,
                                   int points) {
  std::vector<const BilevelProblem*> problems;
  for (const std::string& name : corpus_names())
    problems.push_back(&corpus_get(name));
  return run_problem_checks(problems, tol, seed, points);
}

std::string format_check_table(const CheckSuiteResult& result,
                               bool failures_only) {
  std::ostringstream os;
  std::size_t name_w = 8, what_w = 4;
  for (const CheckEntry& e : result.entries) {
    if (failures_only && e.pass) continue;
    name_w = std::max(name_w, e.problem.size());
    what_w = std::max(what_w, e.what.size());
  }
  for (const CheckEntry& e : result.entries) {
    if (failures_only && e.pass) continue;
    os << (e.pass ? "  ok   " : "  FAIL ");
    os << e.problem;
    os << std::string(name_w + 2 - e.problem.size(), ' ');
    os << e.what;
    os << std::string(what_w + 2 - e.what.size(), ' ');
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max_err=%.3e tol=%.1e", e.max_err, e.tol);
    os << buf << "\n";
  }
  return os.str();
}

}  // namespace ebsa
