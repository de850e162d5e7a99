#pragma once

#include <string>
#include <vector>

#include "ebsa/problem.hpp"

namespace ebsa {

/// Names of the built-in test problems, in registry order.
std::vector<std::string> corpus_names();

/// Returns the immutable definition of a built-in problem.
/// Throws UnknownProblem for names not in corpus_names().
const BilevelProblem& corpus_get(const std::string& name);

}  // namespace ebsa
