#include "sigkex/budget.hpp"

#include <cstdlib>

namespace sigkex::budgets {

namespace {

std::size_t from_env(const char* name, std::size_t fallback) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(raw, &end, 10);
  if (end == raw || *end != '\0') return fallback;
  return static_cast<std::size_t>(v);
}

}  // namespace

std::size_t max_tensor_elements() {
  return from_env("SIGKEX_MAX_TENSOR_ELEMENTS", 100'000'000);
}

std::size_t max_walks() { return from_env("SIGKEX_MAX_WALKS", 1'000'000); }

std::size_t max_retained_grids() {
  return from_env("SIGKEX_MAX_RETAINED_GRIDS", 16'384);
}

std::size_t max_permutations() {
  return from_env("SIGKEX_MAX_PERMUTATIONS", 1'000'000);
}

void check(std::size_t requested, std::size_t limit, const std::string& what) {
  if (requested > limit) {
    throw BudgetError(what + " needs " + std::to_string(requested) +
                      " units, budget is " + std::to_string(limit));
  }
}

}  // namespace sigkex::budgets
