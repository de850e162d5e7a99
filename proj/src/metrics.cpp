#include "ebsa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ebsa/ebsa.hpp"
#include "ebsa/errors.hpp"
#include "ebsa/numkit.hpp"
#include "ebsa/rng.hpp"
#include "ebsa/smoothing.hpp"

namespace ebsa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One multistart candidate: drive the smoothed system to a small slack
// residual while shrinking the smoothing parameter, then report f.
bool value_candidate(const BilevelProblem& prob, const Vector& x,
                     const Vector& y_start, const ValueFunctionOptions& opts,
                     double* f_out) {
  const std::size_t m = prob.dims.m;
  Vector y = y_start;

  if (m == 0) {
    InnerResult ir =
        minimize_y(prob, x, y, Vector{}, 1e-8, 2.0, 1e-10, opts.inner);
    if (ir.status != InnerStatus::Converged) return false;
    *f_out = prob.f(x, ir.y);
    return true;
  }

  Vector s(m, 1.0);
  double r = 1.0, rho = 2.0, gamma = 0.1;
  for (int cycle = 0; cycle < opts.max_cycles; ++cycle) {
    InnerResult ir = minimize_y(prob, x, y, s, r, rho,
                                std::max(gamma, 1e-11), opts.inner);
    y = ir.y;
    const Vector g = prob.g(x, y);
    ZKPair zk = eval_zk(g, s, r, rho);
    double psi2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double psi = zk.z[i] + g[i];
      psi2 += psi * psi;
    }
    const double psin = std::sqrt(psi2);

    if (ir.status == InnerStatus::Converged && psin <= opts.psi_tol &&
        r <= opts.r_floor) {
      *f_out = prob.f(x, y);
      return true;
    }

    const Vector s_tilde = update_s_feasible(s, rho, zk.z, g);
    if (psin <= gamma) {
      s = s_tilde;
      gamma = std::max(0.5 * gamma, 1e-12);
      r *= 0.5;
    } else {
      InfeasibleUpdate upd =
          update_s_infeasible(s_tilde, g, r, rho, 1e-9, 0.95, 1e-7);
      s = upd.s_next;
      r = upd.r_next;
      rho = upd.rho_next;
    }
  }
  return false;
}

void decode_point(std::size_t idx, const std::vector<Vector>& axes,
                  Vector* pt) {
  for (std::size_t a = axes.size(); a-- > 0;) {
    const std::size_t n = axes[a].size();
    (*pt)[a] = axes[a][idx % n];
    idx /= n;
  }
}

std::size_t grid_size(const std::vector<Vector>& axes) {
  std::size_t total = 1;
  for (const Vector& ax : axes) total *= ax.size();
  return total;
}

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Candidate for one x-slice: the feasible lower minimum, screened against the
// upper constraints.  found=false when the slice contributes nothing.
bool slice_candidate(const BilevelProblem& prob, const Vector& x,
                     const std::vector<Vector>& y_axes, double tol,
                     ScanBest* out) {
  const std::size_t ny = grid_size(y_axes);
  Vector y(y_axes.size());
  Vector y_best;
  double f_best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t j = 0; j < ny; ++j) {
    decode_point(j, y_axes, &y);
    const Vector g = prob.g(x, y);
    bool ok = true;
    for (double gi : g)
      if (gi > tol) {
        ok = false;
        break;
      }
    if (!ok) continue;
    const double f = prob.f(x, y);
    if (f < f_best) {
      f_best = f;
      y_best = y;
      found = true;
    }
  }
  if (!found) return false;

  const Vector G = prob.G(x, y_best);
  for (double Gi : G)
    if (Gi > tol) return false;
  const Vector H = prob.H(x, y_best);
  for (double Hj : H)
    if (std::abs(Hj) > tol) return false;

  out->found = true;
  out->x = x;
  out->y = y_best;
  out->F_val = prob.F(x, y_best);
  out->f_val = f_best;
  return true;
}

bool scan_better(const ScanBest& cand, const ScanBest& incumbent) {
  if (!incumbent.found) return true;
  if (cand.F_val != incumbent.F_val) return cand.F_val < incumbent.F_val;
  return lex_less(cand.x, incumbent.x);
}

}  // namespace

double value_function(const BilevelProblem& prob, const Vector& x,
                      const ValueFunctionOptions& opts) {
  if (x.size() != prob.dims.d)
    throw ShapeMismatch("value_function: x size does not match problem");
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int start = 0; start < opts.starts; ++start) {
    Vector y0 = prob.y0;
    if (start > 0) {
      NormalRng rng(splitmix64(opts.seed +
                               0x9E3779B97F4A7C15ULL *
                                   static_cast<std::uint64_t>(start)));
      for (double& v : y0) v += opts.perturb * rng.next();
    }
    double f = 0.0;
    if (value_candidate(prob, x, y0, opts, &f)) {
      any = true;
      best = std::min(best, f);
    }
  }
  if (!any)
    throw ValueFunctionFailure("value_function: no start converged at x");
  return best;
}

InfeaseBreakdown infeasibility(const BilevelProblem& prob, const Vector& x,
                               const Vector& y,
                               const ValueFunctionOptions& opts) {
  InfeaseBreakdown out;
  UpperEval ue = eval_upper(prob, x, y);
  for (double Gi : ue.G) out.upper_ineq = std::max(out.upper_ineq, Gi);
  out.upper_ineq = std::max(out.upper_ineq, 0.0);
  for (double Hj : ue.H) out.upper_eq = std::max(out.upper_eq, std::abs(Hj));
  const Vector g = prob.g(x, y);
  for (double gi : g) out.lower_ineq = std::max(out.lower_ineq, gi);
  out.lower_ineq = std::max(out.lower_ineq, 0.0);

  try {
    const double V = value_function(prob, x, opts);
    out.optimality_gap = prob.f(x, y) - V;
    out.gap_valid = true;
  } catch (const ValueFunctionFailure&) {
    out.optimality_gap = kNaN;
    out.gap_valid = false;
  }
  out.total =
      out.upper_ineq + out.upper_eq + out.lower_ineq + out.optimality_gap;
  out.applicable =
      out.gap_valid &&
      (out.upper_ineq + out.upper_eq + out.lower_ineq +
       std::max(out.optimality_gap, 0.0)) < 0.1;
  return out;
}

Ratios ratios(double F_val, double f_val, double F_star, double f_star) {
  Ratios out;
  out.R_F = (F_val - F_star) / (1.0 + std::abs(F_star));
  out.R_f = (f_val - f_star) / (1.0 + std::abs(f_star));
  return out;
}

GridAxes make_axes(const Box& box, double resolution) {
  if (resolution <= 0.0)
    throw InvalidParameter("make_axes: resolution must be positive");
  GridAxes axes;
  auto build = [resolution](double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
      throw InvalidParameter("make_axes: box must be finite with lo < hi");
    const std::size_t n = std::max<std::size_t>(
        2, static_cast<std::size_t>(
               std::ceil((hi - lo) / resolution - 1e-9)) +
               1);
    Vector pts(n);
    const double spacing = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i)
      pts[i] = lo + spacing * static_cast<double>(i);
    pts[n - 1] = hi;
    return pts;
  };
  for (std::size_t a = 0; a < box.x_lo.size(); ++a)
    axes.x_axes.push_back(build(box.x_lo[a], box.x_hi[a]));
  for (std::size_t b = 0; b < box.y_lo.size(); ++b)
    axes.y_axes.push_back(build(box.y_lo[b], box.y_hi[b]));
  return axes;
}

ScanBest scan_grid_serial(const BilevelProblem& prob, const GridAxes& axes,
                          double tol) {
  const std::size_t nx = grid_size(axes.x_axes);
  ScanBest best;
  Vector x(axes.x_axes.size());
  for (std::size_t i = 0; i < nx; ++i) {
    decode_point(i, axes.x_axes, &x);
    ScanBest cand;
    if (slice_candidate(prob, x, axes.y_axes, tol, &cand) &&
        scan_better(cand, best))
      best = cand;
  }
  return best;
}

ScanBest scan_grid_openmp(const BilevelProblem& prob, const GridAxes& axes,
                          double tol) {
  const std::size_t nx = grid_size(axes.x_axes);
  ScanBest best;
#pragma omp parallel
  {
    ScanBest local;
    Vector x(axes.x_axes.size());
#pragma omp for schedule(static) nowait
    for (long long i = 0; i < static_cast<long long>(nx); ++i) {
      decode_point(static_cast<std::size_t>(i), axes.x_axes, &x);
      ScanBest cand;
      if (slice_candidate(prob, x, axes.y_axes, tol, &cand) &&
          scan_better(cand, local))
        local = cand;
    }
#pragma omp critical
    {
      if (local.found && scan_better(local, best)) best = local;
    }
  }
  return best;
}

OracleSolution grid_oracle(const BilevelProblem& prob, double resolution) {
  if (resolution <= 0.0)
    throw InvalidParameter("grid_oracle: resolution must be positive");
  const std::size_t dim = prob.dims.d + prob.dims.l;
  if (dim > 4)
    throw IntractableDimension("grid_oracle: d+l above 4 is intractable");

  auto to_solution = [&](const ScanBest& best, const Box& box) {
    OracleSolution sol;
    sol.x = best.x;
    sol.y = best.y;
    sol.F_val = best.F_val;
    sol.f_val = best.f_val;
    sol.resolution = resolution;
    sol.box = box;
    return sol;
  };

  if (dim <= 2) {
    GridAxes axes = make_axes(prob.box, resolution);
    ScanBest best = scan_grid_openmp(prob, axes, resolution);
    if (!best.found)
      throw NoFeasiblePoint("grid_oracle: no feasible grid point");
    return to_solution(best, prob.box);
  }

  // Nested refinement: coarse nodes per axis, box shrunk around the incumbent
  // until the spacing reaches the requested resolution.
  const std::size_t nodes = (dim == 3) ? 61 : 41;
  Box cur = prob.box;
  for (int level = 0; level < 64; ++level) {
    GridAxes axes;
    double max_spacing = 0.0;
    std::vector<double> spacings;
    auto build = [&](double lo, double hi) {
      std::size_t n = nodes;
      double spacing = (hi - lo) / static_cast<double>(n - 1);
      if (spacing < resolution) {
        n = std::max<std::size_t>(
            2, static_cast<std::size_t>(
                   std::ceil((hi - lo) / resolution - 1e-9)) +
                   1);
        spacing = (hi - lo) / static_cast<double>(n - 1);
      }
      Vector pts(n);
      for (std::size_t i = 0; i < n; ++i)
        pts[i] = lo + spacing * static_cast<double>(i);
      pts[n - 1] = hi;
      spacings.push_back(spacing);
      max_spacing = std::max(max_spacing, spacing);
      return pts;
    };
    for (std::size_t a = 0; a < cur.x_lo.size(); ++a)
      axes.x_axes.push_back(build(cur.x_lo[a], cur.x_hi[a]));
    for (std::size_t b = 0; b < cur.y_lo.size(); ++b)
      axes.y_axes.push_back(build(cur.y_lo[b], cur.y_hi[b]));

    const double tol = std::max(resolution, max_spacing);
    ScanBest best = scan_grid_openmp(prob, axes, tol);
    if (!best.found)
      throw NoFeasiblePoint("grid_oracle: no feasible grid point at level");
    if (max_spacing <= resolution) return to_solution(best, cur);

    Box next = cur;
    auto shrink = [&](double center, double spacing, double orig_lo,
                      double orig_hi, double* lo, double* hi) {
      const double hw = 2.5 * spacing;
      *lo = std::max(orig_lo, center - hw);
      *hi = std::min(orig_hi, center + hw);
    };
    std::size_t axis = 0;
    for (std::size_t a = 0; a < cur.x_lo.size(); ++a, ++axis)
      shrink(best.x[a], spacings[axis], prob.box.x_lo[a], prob.box.x_hi[a],
             &next.x_lo[a], &next.x_hi[a]);
    for (std::size_t b = 0; b < cur.y_lo.size(); ++b, ++axis)
      shrink(best.y[b], spacings[axis], prob.box.y_lo[b], prob.box.y_hi[b],
             &next.y_lo[b], &next.y_hi[b]);
    cur = next;
  }
  throw NoFeasiblePoint("grid_oracle: refinement did not reach resolution");
}

double lower_grid_min(const BilevelProblem& prob, const Vector& x,
                      double resolution) {
  if (x.size() != prob.dims.d)
    throw ShapeMismatch("lower_grid_min: x size does not match problem");
  GridAxes axes = make_axes(prob.box, resolution);
  const std::size_t ny = grid_size(axes.y_axes);
  Vector y(axes.y_axes.size());
  double f_best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t j = 0; j < ny; ++j) {
    decode_point(j, axes.y_axes, &y);
    const Vector g = prob.g(x, y);
    bool ok = true;
    for (double gi : g)
      if (gi > resolution) {
        ok = false;
        break;
      }
    if (!ok) continue;
    const double f = prob.f(x, y);
    if (f < f_best) {
      f_best = f;
      found = true;
    }
  }
  if (!found)
    throw NoFeasiblePoint("lower_grid_min: no feasible grid y at this x");
  return f_best;
}

LicqReport check_licq(const BilevelProblem& prob, const Vector& x,
                      const Vector& y, double tol) {
  if (tol <= 0.0) throw InvalidParameter("check_licq: tol must be positive");
  LicqReport rep;
  const Vector g = prob.g(x, y);
  const DenseMatrix jy = prob.jac_y_g(x, y);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] >= -tol) active.push_back(i);
  rep.active_count = active.size();
  if (active.empty()) {
    rep.rank = 0;
    rep.holds = true;
    return rep;
  }

  const std::size_t a = active.size();
  DenseMatrix gram(a, a, 0.0);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < prob.dims.l; ++b)
        acc += jy(active[i], b) * jy(active[j], b);
      gram(i, j) = acc;
      gram(j, i) = acc;
    }
  Vector eigs = sym_eigenvalues(gram);
  const double sig_max = std::sqrt(std::max(0.0, eigs.back()));
  rep.rank = 0;
  if (sig_max > 0.0) {
    const double cutoff = 1e-8 * sig_max;
    for (double e : eigs)
      if (std::sqrt(std::max(0.0, e)) > cutoff) ++rep.rank;
  }
  rep.holds = (rep.rank == rep.active_count);
  return rep;
}

}  // namespace ebsa
