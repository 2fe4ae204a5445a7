#include "sigkex/bench.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "sigkex/chen.hpp"
#include "sigkex/io.hpp"
#include "sigkex/parallel.hpp"
#include "sigkex/pde.hpp"

namespace sigkex {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double time_once(const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  const std::chrono::duration<double> dt =
      std::chrono::steady_clock::now() - start;
  return dt.count();
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& config) {
  if (config.repeats == 0)
    throw std::invalid_argument("bench needs at least one repeat");
  std::vector<BenchRow> rows;
  const unsigned pool =
      config.threads == 0 ? hardware_threads() : config.threads;

  for (std::size_t n : config.depths) {
    const PiecewiseLinearPath x = generate_path(
        PathKind::random_uniform, config.length, n,
        config.seed + static_cast<std::uint64_t>(n));
    MultiIndex index;
    for (std::size_t k = 1; k <= n; ++k)
      index.entries.push_back(static_cast<int>(k));
    const PiecewiseLinearPath xI = restrict_channels(x, index);
    const auto fd = FiniteDifferenceOperator::central_difference(n, 1.0);
    const auto betas =
        beta_schedule(BetaSchedule::nth_root_uniform, n, config.depth_M);
    const auto vs = vandermonde_weights(n, config.depth_M, betas);
    const DyadicGrid grid{config.gamma, config.gamma};
    const std::size_t kernel_count = betas.size() * fd.nodes.size();

    for (const std::string& mode : config.modes) {
      std::vector<double> samples;
      volatile double sink = 0.0;
      for (std::size_t rep = 0; rep < config.repeats; ++rep) {
        if (mode == "chen") {
          samples.push_back(time_once([&] {
            sink = sink + coefficient_chen(x, index);
          }));
        } else if (mode == "serial" || mode == "parallel") {
          const unsigned workers = mode == "serial" ? 1 : pool;
          samples.push_back(time_once([&] {
            std::vector<double> finals(kernel_count);
            parallel_for(kernel_count, workers, [&](std::size_t lane) {
              const std::size_t bi = lane / fd.nodes.size();
              const std::size_t ni = lane % fd.nodes.size();
              finals[lane] = solve_goursat_axis(xI, fd.nodes[ni],
                                                vs.betas[bi], grid)
                                 .final_value;
            });
            double total = 0.0;
            for (std::size_t bi = 0; bi < vs.betas.size(); ++bi) {
              double inner = 0.0;
              for (std::size_t ni = 0; ni < fd.nodes.size(); ++ni)
                inner +=
                    fd.weights[ni] * (finals[bi * fd.nodes.size() + ni] - 1.0);
              total += vs.alphas[bi] * inner;
            }
            sink = sink + total;
          }));
        } else {
          throw std::invalid_argument("unknown bench mode '" + mode + "'");
        }
      }
      rows.push_back({n, mode, mode == "chen" ? 0 : kernel_count,
                      mode == "parallel" ? pool : 1, median(samples),
                      config.repeats});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows) {
  out << "n,mode,kernel_count,threads,median_seconds,repeats\n";
  for (const auto& r : rows) {
    out << r.depth << ',' << r.mode << ',' << r.kernel_count << ','
        << r.threads << ',' << r.median_seconds << ',' << r.repeats << '\n';
  }
}

}  // namespace sigkex
