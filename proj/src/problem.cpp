#include "ebsa/problem.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "ebsa/rng.hpp"

namespace ebsa {

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NonFiniteEvaluation(std::string(what) + ": non-finite value");
}

void check_vec(const Vector& v, std::size_t n, const char* what) {
  if (v.size() != n)
    throw ShapeMismatch(std::string(what) + ": size " + std::to_string(v.size()) +
                        ", expected " + std::to_string(n));
  for (double e : v) check_finite(e, what);
}

void check_mat(const DenseMatrix& m, std::size_t rows, std::size_t cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeMismatch(std::string(what) + ": shape " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                        std::to_string(cols));
  for (double e : m.data()) check_finite(e, what);
}

void check_symmetric(const DenseMatrix& m, const char* what) {
  double scale = 1.0;
  for (double e : m.data()) scale = std::max(scale, std::abs(e));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-12 * scale)
        throw InvalidParameter(std::string(what) + ": Hessian asymmetry exceeds tolerance");
}

}  // namespace

UpperEval eval_upper(const BilevelProblem& prob, const Vector& x, const Vector& y) {
  const auto& dm = prob.dims;
  check_vec(x, dm.d, "eval_upper: x");
  check_vec(y, dm.l, "eval_upper: y");

  UpperEval out;
  out.F = prob.F(x, y);
  check_finite(out.F, "eval_upper: F");
  out.grad_x_F = prob.grad_x_F(x, y);
  check_vec(out.grad_x_F, dm.d, "eval_upper: grad_x_F");
  out.grad_y_F = prob.grad_y_F(x, y);
  check_vec(out.grad_y_F, dm.l, "eval_upper: grad_y_F");

  out.G = dm.p ? prob.G(x, y) : Vector{};
  check_vec(out.G, dm.p, "eval_upper: G");
  out.jac_x_G = dm.p ? prob.jac_x_G(x, y) : DenseMatrix(0, dm.d);
  check_mat(out.jac_x_G, dm.p, dm.d, "eval_upper: jac_x_G");
  out.jac_y_G = dm.p ? prob.jac_y_G(x, y) : DenseMatrix(0, dm.l);
  check_mat(out.jac_y_G, dm.p, dm.l, "eval_upper: jac_y_G");

  out.H = dm.q ? prob.H(x, y) : Vector{};
  check_vec(out.H, dm.q, "eval_upper: H");
  out.jac_x_H = dm.q ? prob.jac_x_H(x, y) : DenseMatrix(0, dm.d);
  check_mat(out.jac_x_H, dm.q, dm.d, "eval_upper: jac_x_H");
  out.jac_y_H = dm.q ? prob.jac_y_H(x, y) : DenseMatrix(0, dm.l);
  check_mat(out.jac_y_H, dm.q, dm.l, "eval_upper: jac_y_H");
  return out;
}

LowerDerivs eval_lower_derivs(const BilevelProblem& prob, const Vector& x, const Vector& y) {
  const auto& dm = prob.dims;
  check_vec(x, dm.d, "eval_lower_derivs: x");
  check_vec(y, dm.l, "eval_lower_derivs: y");

  LowerDerivs out;
  out.f = prob.f(x, y);
  check_finite(out.f, "eval_lower_derivs: f");
  out.grad_y_f = prob.grad_y_f(x, y);
  check_vec(out.grad_y_f, dm.l, "eval_lower_derivs: grad_y_f");
  out.hess_yy_f = prob.hess_yy_f(x, y);
  check_mat(out.hess_yy_f, dm.l, dm.l, "eval_lower_derivs: hess_yy_f");
  check_symmetric(out.hess_yy_f, "eval_lower_derivs: hess_yy_f");
  out.hess_xy_f = prob.hess_xy_f(x, y);
  check_mat(out.hess_xy_f, dm.l, dm.d, "eval_lower_derivs: hess_xy_f");

  out.g = dm.m ? prob.g(x, y) : Vector{};
  check_vec(out.g, dm.m, "eval_lower_derivs: g");
  out.jac_x_g = dm.m ? prob.jac_x_g(x, y) : DenseMatrix(0, dm.d);
  check_mat(out.jac_x_g, dm.m, dm.d, "eval_lower_derivs: jac_x_g");
  out.jac_y_g = dm.m ? prob.jac_y_g(x, y) : DenseMatrix(0, dm.l);
  check_mat(out.jac_y_g, dm.m, dm.l, "eval_lower_derivs: jac_y_g");

  out.hess_yy_g.reserve(dm.m);
  out.hess_xy_g.reserve(dm.m);
  for (std::size_t i = 0; i < dm.m; ++i) {
    DenseMatrix hyy = prob.hess_yy_g(x, y, i);
    check_mat(hyy, dm.l, dm.l, "eval_lower_derivs: hess_yy_g");
    check_symmetric(hyy, "eval_lower_derivs: hess_yy_g");
    out.hess_yy_g.push_back(std::move(hyy));
    DenseMatrix hxy = prob.hess_xy_g(x, y, i);
    check_mat(hxy, dm.l, dm.d, "eval_lower_derivs: hess_xy_g");
    out.hess_xy_g.push_back(std::move(hxy));
  }
  return out;
}

LagrangianEval lagrangian(const BilevelProblem& prob, const Vector& x, const Vector& y,
                          const Vector& u) {
  const auto& dm = prob.dims;
  check_vec(u, dm.m, "lagrangian: u");
  LowerDerivs lo = eval_lower_derivs(prob, x, y);
  LagrangianEval out;
  out.value = lo.f;
  out.grad_y = lo.grad_y_f;
  for (std::size_t i = 0; i < dm.m; ++i) {
    out.value += u[i] * lo.g[i];
    for (std::size_t j = 0; j < dm.l; ++j) out.grad_y[j] += u[i] * lo.jac_y_g(i, j);
  }
  return out;
}

namespace {

double rel_err(const DenseMatrix& analytic, const DenseMatrix& fd) {
  double num = 0.0, den = 1.0;
  for (std::size_t i = 0; i < analytic.rows(); ++i)
    for (std::size_t j = 0; j < analytic.cols(); ++j) {
      num = std::max(num, std::abs(analytic(i, j) - fd(i, j)));
      den = std::max(den, std::abs(analytic(i, j)));
    }
  return num / den;
}

DenseMatrix row_matrix(const Vector& v) {
  DenseMatrix m(1, v.size());
  for (std::size_t j = 0; j < v.size(); ++j) m(0, j) = v[j];
  return m;
}

struct CheckAccum {
  DerivativeReport* report;
  double tol;

  void add(const std::string& field, double err) {
    for (auto& c : report->checks)
      if (c.field == field) {
        c.max_rel_err = std::max(c.max_rel_err, err);
        c.pass = c.pass && err <= tol;
        report->pass = report->pass && c.pass;
        return;
      }
    report->checks.push_back({field, err, err <= tol});
    report->pass = report->pass && err <= tol;
  }
};

}  // namespace

DerivativeReport validate_derivatives(const BilevelProblem& prob, int points, double tol,
                                      std::uint64_t seed) {
  if (points <= 0 || !(tol > 0.0)) throw InvalidParameter("validate_derivatives: bad arguments");
  const auto& dm = prob.dims;
  DerivativeReport report;
  report.points = points;
  report.tol = tol;
  CheckAccum acc{&report, tol};
  NormalRng rng(splitmix64(seed ^ fnv1a64(prob.name)));

  auto sample = [&](const Vector& lo, const Vector& hi) {
    Vector v(lo.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    return v;
  };

  for (int pt = 0; pt < points; ++pt) {
    const Vector x = sample(prob.box.x_lo, prob.box.x_hi);
    const Vector y = sample(prob.box.y_lo, prob.box.y_hi);

    auto wrt_x = [&](const std::function<Vector(const Vector&, const Vector&)>& fn) {
      return central_diff_jacobian([&](const Vector& xv) { return fn(xv, y); }, x);
    };
    auto wrt_y = [&](const std::function<Vector(const Vector&, const Vector&)>& fn) {
      return central_diff_jacobian([&](const Vector& yv) { return fn(x, yv); }, y);
    };

    auto Fv = [&](const Vector& xv, const Vector& yv) { return Vector{prob.F(xv, yv)}; };
    auto fv = [&](const Vector& xv, const Vector& yv) { return Vector{prob.f(xv, yv)}; };

    acc.add("grad_x_F", rel_err(row_matrix(prob.grad_x_F(x, y)), wrt_x(Fv)));
    acc.add("grad_y_F", rel_err(row_matrix(prob.grad_y_F(x, y)), wrt_y(Fv)));
    acc.add("grad_y_f", rel_err(row_matrix(prob.grad_y_f(x, y)), wrt_y(fv)));

    if (dm.p) {
      acc.add("jac_x_G", rel_err(prob.jac_x_G(x, y), wrt_x(prob.G)));
      acc.add("jac_y_G", rel_err(prob.jac_y_G(x, y), wrt_y(prob.G)));
    }
    if (dm.q) {
      acc.add("jac_x_H", rel_err(prob.jac_x_H(x, y), wrt_x(prob.H)));
      acc.add("jac_y_H", rel_err(prob.jac_y_H(x, y), wrt_y(prob.H)));
    }
    if (dm.m) {
      acc.add("jac_x_g", rel_err(prob.jac_x_g(x, y), wrt_x(prob.g)));
      acc.add("jac_y_g", rel_err(prob.jac_y_g(x, y), wrt_y(prob.g)));
    }

    acc.add("hess_yy_f", rel_err(prob.hess_yy_f(x, y), wrt_y(prob.grad_y_f)));
    acc.add("hess_xy_f", rel_err(prob.hess_xy_f(x, y), wrt_x(prob.grad_y_f)));

    for (std::size_t i = 0; i < dm.m; ++i) {
      auto grad_y_gi = [&](const Vector& xv, const Vector& yv) {
        DenseMatrix jy = prob.jac_y_g(xv, yv);
        Vector row(dm.l);
        for (std::size_t j = 0; j < dm.l; ++j) row[j] = jy(i, j);
        return row;
      };
      acc.add("hess_yy_g", rel_err(prob.hess_yy_g(x, y, i), wrt_y(grad_y_gi)));
      acc.add("hess_xy_g", rel_err(prob.hess_xy_g(x, y, i), wrt_x(grad_y_gi)));
    }

    // symmetry is part of the contract even when the FD comparison passes
    double asym = 0.0;
    DenseMatrix hf = prob.hess_yy_f(x, y);
    for (std::size_t i = 0; i < dm.l; ++i)
      for (std::size_t j = 0; j < dm.l; ++j) asym = std::max(asym, std::abs(hf(i, j) - hf(j, i)));
    for (std::size_t c = 0; c < dm.m; ++c) {
      DenseMatrix hg = prob.hess_yy_g(x, y, c);
      for (std::size_t i = 0; i < dm.l; ++i)
        for (std::size_t j = 0; j < dm.l; ++j)
          asym = std::max(asym, std::abs(hg(i, j) - hg(j, i)));
    }
    acc.add("hessian_symmetry", asym <= 1e-12 ? 0.0 : asym);
  }
  return report;
}

namespace {

Vector fd_gradient(const std::function<double(const Vector&)>& fn, const Vector& at,
                   double scale) {
  Vector g(at.size());
  Vector p = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double h = scale * std::max(1.0, std::abs(at[i]));
    p[i] = at[i] + h;
    const double up = fn(p);
    p[i] = at[i] - h;
    const double dn = fn(p);
    p[i] = at[i];
    if (!std::isfinite(up) || !std::isfinite(dn))
      throw NonFiniteEvaluation("lift_value_only: non-finite value");
    g[i] = (up - dn) / (2.0 * h);
  }
  return g;
}

}  // namespace

BilevelProblem lift_value_only(const ValueOnlyProblem& src) {
  BilevelProblem prob;
  prob.name = src.name;
  prob.dims = src.dims;
  prob.box = src.box;
  prob.x0 = src.x0;
  prob.y0 = src.y0;
  prob.reference = src.reference;
  prob.F = src.F;
  prob.f = src.f;
  const std::size_t d = src.dims.d, l = src.dims.l, m = src.dims.m;
  prob.G = src.G ? src.G : [](const Vector&, const Vector&) { return Vector{}; };
  prob.H = src.H ? src.H : [](const Vector&, const Vector&) { return Vector{}; };
  prob.g = src.g ? src.g : [](const Vector&, const Vector&) { return Vector{}; };

  auto grad_x_of = [](BilevelProblem::Scalar fn) {
    return [fn](const Vector& x, const Vector& y) {
      return fd_gradient([&](const Vector& xv) { return fn(xv, y); }, x, 1e-6);
    };
  };
  auto grad_y_of = [](BilevelProblem::Scalar fn) {
    return [fn](const Vector& x, const Vector& y) {
      return fd_gradient([&](const Vector& yv) { return fn(x, yv); }, y, 1e-6);
    };
  };
  prob.grad_x_F = grad_x_of(src.F);
  prob.grad_y_F = grad_y_of(src.F);
  prob.grad_y_f = grad_y_of(src.f);

  auto jac_wrt_x = [](BilevelProblem::Vec fn) {
    return [fn](const Vector& x, const Vector& y) {
      return central_diff_jacobian([&](const Vector& xv) { return fn(xv, y); }, x);
    };
  };
  auto jac_wrt_y = [](BilevelProblem::Vec fn) {
    return [fn](const Vector& x, const Vector& y) {
      return central_diff_jacobian([&](const Vector& yv) { return fn(x, yv); }, y);
    };
  };
  prob.jac_x_G = jac_wrt_x(prob.G);
  prob.jac_y_G = jac_wrt_y(prob.G);
  prob.jac_x_H = jac_wrt_x(prob.H);
  prob.jac_y_H = jac_wrt_y(prob.H);
  prob.jac_x_g = jac_wrt_x(prob.g);
  prob.jac_y_g = jac_wrt_y(prob.g);

  // second derivatives difference the first differences with a wider step
  auto grad_y_vec = [fn = src.f](const Vector& x, const Vector& y) {
    return fd_gradient([&](const Vector& yv) { return fn(x, yv); }, y, 1e-6);
  };
  prob.hess_yy_f = [grad_y_vec, l](const Vector& x, const Vector& y) {
    DenseMatrix h(l, l);
    Vector py = y;
    for (std::size_t j = 0; j < l; ++j) {
      const double step = 1e-4 * std::max(1.0, std::abs(y[j]));
      py[j] = y[j] + step;
      Vector up = grad_y_vec(x, py);
      py[j] = y[j] - step;
      Vector dn = grad_y_vec(x, py);
      py[j] = y[j];
      for (std::size_t i = 0; i < l; ++i) h(i, j) = (up[i] - dn[i]) / (2.0 * step);
    }
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = i + 1; j < l; ++j) {
        const double avg = 0.5 * (h(i, j) + h(j, i));
        h(i, j) = h(j, i) = avg;
      }
    return h;
  };
  prob.hess_xy_f = [grad_y_vec, d, l](const Vector& x, const Vector& y) {
    DenseMatrix h(l, d);
    Vector px = x;
    for (std::size_t j = 0; j < d; ++j) {
      const double step = 1e-4 * std::max(1.0, std::abs(x[j]));
      px[j] = x[j] + step;
      Vector up = grad_y_vec(px, y);
      px[j] = x[j] - step;
      Vector dn = grad_y_vec(px, y);
      px[j] = x[j];
      for (std::size_t i = 0; i < l; ++i) h(i, j) = (up[i] - dn[i]) / (2.0 * step);
    }
    return h;
  };

  auto g_fn = prob.g;
  auto grad_y_gi = [g_fn, l](const Vector& x, const Vector& y, std::size_t i) {
    Vector out(l);
    Vector py = y;
    for (std::size_t j = 0; j < l; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(y[j]));
      py[j] = y[j] + h;
      const double up = g_fn(x, py)[i];
      py[j] = y[j] - h;
      const double dn = g_fn(x, py)[i];
      py[j] = y[j];
      out[j] = (up - dn) / (2.0 * h);
    }
    return out;
  };
  prob.hess_yy_g = [grad_y_gi, l, m](const Vector& x, const Vector& y, std::size_t i) {
    if (i >= m) throw InvalidParameter("hess_yy_g: constraint index out of range");
    DenseMatrix h(l, l);
    Vector py = y;
    for (std::size_t j = 0; j < l; ++j) {
      const double step = 1e-4 * std::max(1.0, std::abs(y[j]));
      py[j] = y[j] + step;
      Vector up = grad_y_gi(x, py, i);
      py[j] = y[j] - step;
      Vector dn = grad_y_gi(x, py, i);
      py[j] = y[j];
      for (std::size_t r = 0; r < l; ++r) h(r, j) = (up[r] - dn[r]) / (2.0 * step);
    }
    for (std::size_t r = 0; r < l; ++r)
      for (std::size_t c = r + 1; c < l; ++c) {
        const double avg = 0.5 * (h(r, c) + h(c, r));
        h(r, c) = h(c, r) = avg;
      }
    return h;
  };
  prob.hess_xy_g = [grad_y_gi, d, l, m](const Vector& x, const Vector& y, std::size_t i) {
    if (i >= m) throw InvalidParameter("hess_xy_g: constraint index out of range");
    DenseMatrix h(l, d);
    Vector px = x;
    for (std::size_t j = 0; j < d; ++j) {
      const double step = 1e-4 * std::max(1.0, std::abs(x[j]));
      px[j] = x[j] + step;
      Vector up = grad_y_gi(px, y, i);
      px[j] = x[j] - step;
      Vector dn = grad_y_gi(px, y, i);
      px[j] = x[j];
      for (std::size_t r = 0; r < l; ++r) h(r, j) = (up[r] - dn[r]) / (2.0 * step);
    }
    return h;
  };
  return prob;
}

BilevelProblem make_poly_problem(const PolyProblemSpec& spec) {
  const std::size_t d = spec.dims.d, l = spec.dims.l;
  const std::size_t nv = d + l;
  if (spec.F.nvars() != nv || spec.f.nvars() != nv)
    throw InvalidParameter("make_poly_problem: objective variable count mismatch");
  if (spec.G.size() != spec.dims.p || spec.H.size() != spec.dims.q ||
      spec.g.size() != spec.dims.m)
    throw InvalidParameter("make_poly_problem: constraint count mismatch");

  struct Tables {
    Poly F, f;
    std::vector<Poly> G, H, g;
    std::vector<Poly> dF;               // nv entries
    std::vector<Poly> df;               // y entries only, size l
    std::vector<std::vector<Poly>> dG, dH, dg;  // per row, nv entries
    std::vector<Poly> hess_f;           // l*(d+l) entries: rows y, cols all vars
    std::vector<std::vector<Poly>> hess_g;
  };
  auto t = std::make_shared<Tables>();
  t->F = spec.F;
  t->f = spec.f;
  t->G = spec.G;
  t->H = spec.H;
  t->g = spec.g;
  for (std::size_t v = 0; v < nv; ++v) t->dF.push_back(spec.F.derivative(v));
  for (std::size_t j = 0; j < l; ++j) t->df.push_back(spec.f.derivative(d + j));
  auto all_derivs = [nv](const Poly& poly) {
    std::vector<Poly> out;
    out.reserve(nv);
    for (std::size_t v = 0; v < nv; ++v) out.push_back(poly.derivative(v));
    return out;
  };
  for (const Poly& poly : spec.G) t->dG.push_back(all_derivs(poly));
  for (const Poly& poly : spec.H) t->dH.push_back(all_derivs(poly));
  for (const Poly& poly : spec.g) t->dg.push_back(all_derivs(poly));
  for (std::size_t j = 0; j < l; ++j)
    for (std::size_t v = 0; v < nv; ++v) t->hess_f.push_back(t->df[j].derivative(v));
  for (std::size_t i = 0; i < spec.g.size(); ++i) {
    std::vector<Poly> h;
    for (std::size_t j = 0; j < l; ++j)
      for (std::size_t v = 0; v < nv; ++v) h.push_back(t->dg[i][d + j].derivative(v));
    t->hess_g.push_back(std::move(h));
  }

  BilevelProblem prob;
  prob.name = spec.name;
  prob.dims = spec.dims;
  prob.box = spec.box;
  prob.x0 = spec.x0;
  prob.y0 = spec.y0;
  prob.reference = spec.reference;

  prob.F = [t](const Vector& x, const Vector& y) { return t->F.eval_xy(x, y); };
  prob.f = [t](const Vector& x, const Vector& y) { return t->f.eval_xy(x, y); };

  prob.grad_x_F = [t, d](const Vector& x, const Vector& y) {
    Vector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = t->dF[i].eval_xy(x, y);
    return v;
  };
  prob.grad_y_F = [t, d, l](const Vector& x, const Vector& y) {
    Vector v(l);
    for (std::size_t i = 0; i < l; ++i) v[i] = t->dF[d + i].eval_xy(x, y);
    return v;
  };
  prob.grad_y_f = [t, l](const Vector& x, const Vector& y) {
    Vector v(l);
    for (std::size_t i = 0; i < l; ++i) v[i] = t->df[i].eval_xy(x, y);
    return v;
  };

  prob.G = [t](const Vector& x, const Vector& y) {
    Vector v(t->G.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = t->G[i].eval_xy(x, y);
    return v;
  };
  prob.H = [t](const Vector& x, const Vector& y) {
    Vector v(t->H.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = t->H[i].eval_xy(x, y);
    return v;
  };
  prob.g = [t](const Vector& x, const Vector& y) {
    Vector v(t->g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = t->g[i].eval_xy(x, y);
    return v;
  };

  auto jac_block = [t](const std::vector<std::vector<Poly>>* rows, std::size_t offset,
                       std::size_t width) {
    return [t, rows, offset, width](const Vector& x, const Vector& y) {
      DenseMatrix m(rows->size(), width);
      for (std::size_t i = 0; i < rows->size(); ++i)
        for (std::size_t j = 0; j < width; ++j) m(i, j) = (*rows)[i][offset + j].eval_xy(x, y);
      return m;
    };
  };
  prob.jac_x_G = jac_block(&t->dG, 0, d);
  prob.jac_y_G = jac_block(&t->dG, d, l);
  prob.jac_x_H = jac_block(&t->dH, 0, d);
  prob.jac_y_H = jac_block(&t->dH, d, l);
  prob.jac_x_g = jac_block(&t->dg, 0, d);
  prob.jac_y_g = jac_block(&t->dg, d, l);

  prob.hess_yy_f = [t, d, l](const Vector& x, const Vector& y) {
    DenseMatrix h(l, l);
    const std::size_t nvars = d + l;
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < l; ++j) h(i, j) = t->hess_f[i * nvars + d + j].eval_xy(x, y);
    return h;
  };
  prob.hess_xy_f = [t, d, l](const Vector& x, const Vector& y) {
    DenseMatrix h(l, d);
    const std::size_t nvars = d + l;
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < d; ++j) h(i, j) = t->hess_f[i * nvars + j].eval_xy(x, y);
    return h;
  };
  prob.hess_yy_g = [t, d, l](const Vector& x, const Vector& y, std::size_t c) {
    if (c >= t->hess_g.size()) throw InvalidParameter("hess_yy_g: constraint index out of range");
    DenseMatrix h(l, l);
    const std::size_t nvars = d + l;
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < l; ++j) h(i, j) = t->hess_g[c][i * nvars + d + j].eval_xy(x, y);
    return h;
  };
  prob.hess_xy_g = [t, d, l](const Vector& x, const Vector& y, std::size_t c) {
    if (c >= t->hess_g.size()) throw InvalidParameter("hess_xy_g: constraint index out of range");
    DenseMatrix h(l, d);
    const std::size_t nvars = d + l;
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < d; ++j) h(i, j) = t->hess_g[c][i * nvars + j].eval_xy(x, y);
    return h;
  };
  return prob;
}

}  // namespace ebsa
