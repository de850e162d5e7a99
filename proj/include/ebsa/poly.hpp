#pragma once

#include <cstddef>
#include <vector>

#include "ebsa/numkit.hpp"

namespace ebsa {

/// Multivariate polynomial stored as a sum of coefficient * monomial terms.
/// Variables are indexed 0..nvars-1; in bilevel problems the first d indices
/// are upper-level variables and the remaining l are lower-level ones.
/// Derivatives are exact, which makes these the preferred building block for
/// test problems.
class Poly {
 public:
  struct Term {
    double coeff = 0.0;
    std::vector<int> exps;  // one exponent per variable
  };

  explicit Poly(std::size_t nvars = 0) : nvars_(nvars) {}

  static Poly constant(std::size_t nvars, double c);
  static Poly var(std::size_t nvars, std::size_t index);

  std::size_t nvars() const { return nvars_; }
  const std::vector<Term>& terms() const { return terms_; }

  double eval(const Vector& v) const;
  /// Evaluates with the variable vector split as (x, y).
  double eval_xy(const Vector& x, const Vector& y) const;

  Poly derivative(std::size_t index) const;

  Poly operator-() const;
  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double c) const;
  Poly operator+(double c) const;
  Poly operator-(double c) const;
  Poly pow(int k) const;

  /// Merges duplicate monomials and drops zero terms.
  void normalize();

 private:
  std::size_t nvars_;
  std::vector<Term> terms_;
};

inline Poly operator*(double c, const Poly& p) { return p * c; }

}  // namespace ebsa
