#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sigkex/extract.hpp"

namespace sigkex {

struct BenchRow {
  std::size_t depth = 0;  // coefficient depth n
  std::string mode;       // serial | parallel | chen
  std::size_t kernel_count = 0;
  unsigned threads = 1;
  double median_seconds = 0.0;
  std::size_t repeats = 0;
};

struct BenchConfig {
  std::vector<std::size_t> depths{1, 2, 3, 4, 5, 6, 7, 8};
  std::size_t length = 10'000;
  std::size_t repeats = 3;
  std::size_t depth_M = 1;
  int gamma = 1;
  std::vector<std::string> modes{"serial", "parallel", "chen"};
  std::uint64_t seed = 42;
  unsigned threads = 0;  // 0 = hardware
};

// Runtime of one coefficient extraction per depth and mode. serial solves
// the (M+1)*2^n kernels one at a time; parallel dispatches them as an
// independent work queue; chen runs the direct recursion.
std::vector<BenchRow> run_bench(const BenchConfig& config);

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows);

}  // namespace sigkex
