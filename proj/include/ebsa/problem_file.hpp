#pragma once

#include <string>

#include "ebsa/problem.hpp"

namespace ebsa {

/// Loads a bilevel problem from a declarative text file.
///
/// The format is line oriented; '#' starts a comment.  Keys:
///   name <identifier>
///   dims <d> <l> <m> <p> <q>
///   box <var> <lo> <hi>       one line per variable (x1..xd, y1..yl)
///   start <d+l numbers>       x values then y values
///   F <poly>   f <poly>       objectives
///   g <poly>                  repeated m times, in order; likewise G, H
///   ref_x / ref_y / ref_F / ref_f   optional reference solution
///
/// Polynomials are sums of coefficient*monomial terms over x1..xd, y1..yl,
/// e.g.  0.5*y1^2 - x1*y1 + 2.  No parentheses; exponents are non-negative
/// integers.  Derivatives are exact.
BilevelProblem load_problem_file(const std::string& path);

/// Parses a polynomial expression in the grammar above; exposed for tests.
Poly parse_poly(const std::string& text, std::size_t d, std::size_t l);

}  // namespace ebsa
