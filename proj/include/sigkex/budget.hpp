#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sigkex {

// Thrown when a computation would exceed a configured resource budget.
// The CLI maps this to exit code 3.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Resource limits, overridable through environment variables:
//   SIGKEX_MAX_TENSOR_ELEMENTS   dense tensor scalars per signature
//   SIGKEX_MAX_WALKS             enumerated walks per graph query
//   SIGKEX_MAX_RETAINED_GRIDS    PDE grids kept for batch retrieval
//   SIGKEX_MAX_PERMUTATIONS      multiset permutations per anagram sum
namespace budgets {

std::size_t max_tensor_elements();
std::size_t max_walks();
std::size_t max_retained_grids();
std::size_t max_permutations();

void check(std::size_t requested, std::size_t limit, const std::string& what);

}  // namespace budgets

}  // namespace sigkex
