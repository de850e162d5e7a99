#pragma once

#include <stdexcept>
#include <string>

namespace ebsa {

// Base class for every typed error thrown by the library.  Solver
// non-convergence is reported through status enums, not exceptions.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct SingularMatrix : Error {
  explicit SingularMatrix(const std::string& what) : Error(what) {}
};

struct NonFiniteEvaluation : Error {
  explicit NonFiniteEvaluation(const std::string& what) : Error(what) {}
};

struct ShapeMismatch : Error {
  explicit ShapeMismatch(const std::string& what) : Error(what) {}
};

struct InvalidParameter : Error {
  explicit InvalidParameter(const std::string& what) : Error(what) {}
};

struct UnknownProblem : Error {
  explicit UnknownProblem(const std::string& what) : Error(what) {}
};

struct SingularSensitivity : Error {
  explicit SingularSensitivity(const std::string& what) : Error(what) {}
};

struct ValueFunctionFailure : Error {
  explicit ValueFunctionFailure(const std::string& what) : Error(what) {}
};

struct IntractableDimension : Error {
  explicit IntractableDimension(const std::string& what) : Error(what) {}
};

struct NoFeasiblePoint : Error {
  explicit NoFeasiblePoint(const std::string& what) : Error(what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(what) {}
};

}  // namespace ebsa
