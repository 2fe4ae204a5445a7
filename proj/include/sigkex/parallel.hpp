#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <span>
#include <thread>
#include <vector>

namespace sigkex {

unsigned hardware_threads();

// Runs fn(i) for i in [0, count) on up to `threads` workers pulling from a
// shared index. Tasks must not share mutable state; under that contract the
// result is independent of the schedule.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

// Fixed-shape binary-tree summation. The association depends only on the
// length, so reductions are reproducible across thread counts.
double pairwise_sum(std::span<const double> values);

}  // namespace sigkex
