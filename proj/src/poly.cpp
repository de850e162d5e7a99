#include "ebsa/poly.hpp"

#include <algorithm>
#include <map>

namespace ebsa {

Poly Poly::constant(std::size_t nvars, double c) {
  Poly p(nvars);
  if (c != 0.0) p.terms_.push_back({c, std::vector<int>(nvars, 0)});
  return p;
}

Poly Poly::var(std::size_t nvars, std::size_t index) {
  if (index >= nvars) throw InvalidParameter("Poly::var: index out of range");
  Poly p(nvars);
  Term t{1.0, std::vector<int>(nvars, 0)};
  t.exps[index] = 1;
  p.terms_.push_back(std::move(t));
  return p;
}

double Poly::eval(const Vector& v) const {
  if (v.size() != nvars_) throw ShapeMismatch("Poly::eval: wrong variable count");
  double acc = 0.0;
  for (const Term& t : terms_) {
    double m = t.coeff;
    for (std::size_t i = 0; i < nvars_; ++i) {
      const int e = t.exps[i];
      if (e == 0) continue;
      double b = v[i];
      double pw = 1.0;
      int k = e;
      while (k > 0) {  // exponents are tiny, but keep the square-and-multiply habit
        if (k & 1) pw *= b;
        b *= b;
        k >>= 1;
      }
      m *= pw;
    }
    acc += m;
  }
  return acc;
}

double Poly::eval_xy(const Vector& x, const Vector& y) const {
  if (x.size() + y.size() != nvars_) throw ShapeMismatch("Poly::eval_xy: wrong variable count");
  const std::size_t d = x.size();
  double acc = 0.0;
  for (const Term& t : terms_) {
    double m = t.coeff;
    for (std::size_t i = 0; i < nvars_; ++i) {
      const int e = t.exps[i];
      if (e == 0) continue;
      double b = i < d ? x[i] : y[i - d];
      for (int k = 0; k < e; ++k) m *= b;
    }
    acc += m;
  }
  return acc;
}

Poly Poly::derivative(std::size_t index) const {
  if (index >= nvars_) throw InvalidParameter("Poly::derivative: index out of range");
  Poly out(nvars_);
  for (const Term& t : terms_) {
    const int e = t.exps[index];
    if (e == 0) continue;
    Term dt = t;
    dt.coeff *= static_cast<double>(e);
    dt.exps[index] = e - 1;
    out.terms_.push_back(std::move(dt));
  }
  out.normalize();
  return out;
}

Poly Poly::operator-() const {
  Poly out = *this;
  for (Term& t : out.terms_) t.coeff = -t.coeff;
  return out;
}

Poly& Poly::operator+=(const Poly& o) {
  if (o.nvars_ != nvars_) throw ShapeMismatch("Poly: mixing variable counts");
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  normalize();
  return *this;
}

Poly& Poly::operator-=(const Poly& o) { return *this += -o; }

Poly Poly::operator+(const Poly& o) const {
  Poly out = *this;
  out += o;
  return out;
}

Poly Poly::operator-(const Poly& o) const {
  Poly out = *this;
  out -= o;
  return out;
}

Poly Poly::operator*(const Poly& o) const {
  if (o.nvars_ != nvars_) throw ShapeMismatch("Poly: mixing variable counts");
  Poly out(nvars_);
  for (const Term& a : terms_)
    for (const Term& b : o.terms_) {
      Term t{a.coeff * b.coeff, a.exps};
      for (std::size_t i = 0; i < nvars_; ++i) t.exps[i] += b.exps[i];
      out.terms_.push_back(std::move(t));
    }
  out.normalize();
  return out;
}

Poly Poly::operator*(double c) const {
  Poly out = *this;
  for (Term& t : out.terms_) t.coeff *= c;
  out.normalize();
  return out;
}

Poly Poly::operator+(double c) const { return *this + Poly::constant(nvars_, c); }
Poly Poly::operator-(double c) const { return *this + Poly::constant(nvars_, -c); }

Poly Poly::pow(int k) const {
  if (k < 0) throw InvalidParameter("Poly::pow: negative exponent");
  Poly out = Poly::constant(nvars_, 1.0);
  for (int i = 0; i < k; ++i) out = out * *this;
  return out;
}

void Poly::normalize() {
  std::map<std::vector<int>, double> merged;
  for (const Term& t : terms_) merged[t.exps] += t.coeff;
  terms_.clear();
  for (auto& [exps, coeff] : merged)
    if (coeff != 0.0) terms_.push_back({coeff, exps});
}

}  // namespace ebsa
