#pragma once

#include <cstddef>
#include <functional>
#include <limits>

#include "akd/graph.hpp"

namespace akd {

// Builds a scalar (1x1) node from the variable under test. Anything else the
// function needs (other parameters, constants) is captured by the closure.
using ScalarFn = std::function<Var(Graph&, Var)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t entries = 0;
};

inline constexpr std::size_t kUnlimitedEntries = std::numeric_limits<std::size_t>::max();

// Compares reverse-mode gradients of f at x with central differences.
// Per entry the error is |analytic - numeric| / max(1, |analytic|); the
// maximum over entries is returned. x itself is left untouched.
//
// Throws ParameterError for eps outside [1e-7, 1e-3] or when x has more than
// max_entries entries; ContractError when f does not return a 1x1 node.
GradCheckResult grad_check(const ScalarFn& f, const Tensor& x, double eps = 1e-5,
                           std::size_t max_entries = kUnlimitedEntries);

}  // namespace akd
