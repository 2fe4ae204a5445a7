#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "sigkex/path.hpp"
#include "sigkex/pde.hpp"

namespace sigkex {

enum class FdKind { forward, central, custom };

// Cross-difference operator D f = sum_{node} C_node f(node) approximating
// d^n f / (dl_1 ... dl_n) at 0. Forward and central variants are exact on
// the multilinear monomial l_1...l_n and kill every other monomial of total
// degree <= n.
struct FiniteDifferenceOperator {
  FdKind kind = FdKind::central;
  std::size_t order = 0;
  double h = 1.0;
  std::vector<std::vector<double>> nodes;
  std::vector<double> weights;

  static FiniteDifferenceOperator forward_difference(std::size_t n, double h);
  static FiniteDifferenceOperator central_difference(std::size_t n, double h);
  static FiniteDifferenceOperator custom(std::vector<std::vector<double>> nodes,
                                         std::vector<double> weights, double h);
};

double apply_fd(const FiniteDifferenceOperator& fd,
                const std::function<double(std::span<const double>)>& evaluate);

enum class BetaSchedule { uniform, nth_root_uniform };

// uniform: beta_i = (i+1)/(M+1); nth-root-uniform: ((i+1)/(M+1))^(1/n).
std::vector<double> beta_schedule(BetaSchedule kind, std::size_t n,
                                  std::size_t M);

// Scaling system cancelling signature levels n+1..n+M:
// sum_i alpha_i beta_i^m = 1 if m == n, 0 for n < m <= n+M.
struct VandermondeScaling {
  std::size_t order = 0;  // n
  std::size_t depth = 0;  // M
  BetaSchedule schedule = BetaSchedule::nth_root_uniform;
  std::vector<double> betas;
  std::vector<double> alphas;
  // The alphas grow like (2^(1/n)-1)^-M, past 1e7 at (n,M) = (8,6), where
  // double rounding alone leaves cancellation residuals near 1e-9. The
  // extended-precision copies let the cancellation identities be verified
  // below that floor.
  std::vector<long double> alphas_ext;
};

// Closed-form alphas, alpha_i = ((-1)^M / beta_i^n) prod_{j!=i}
// beta_j/(beta_i - beta_j). Betas must be distinct and positive.
VandermondeScaling vandermonde_weights(std::size_t n, std::size_t M,
                                       std::vector<double> betas);

struct ErrorBoundParams {
  double A = 0.0;
  double B = 0.0;
  double ell_max = 0.0;
  double c_max = 0.0;
  std::size_t node_count = 0;
  double value = 0.0;
};

// Analytic tail bound A (M+1)^2 B^M var^(n+M) / ((n+M)!)^2 for the scaled
// kernel approximation; requires the nth-root-uniform schedule. Optional
// block lengths describe a block filter (default: axis filter).
ErrorBoundParams error_bound_params(
    std::size_t n, std::size_t M, double var_xI,
    const FiniteDifferenceOperator& fd, BetaSchedule schedule,
    std::span<const std::size_t> block_lengths = {});

double error_bound(std::size_t n, std::size_t M, double var_xI,
                   const FiniteDifferenceOperator& fd, BetaSchedule schedule,
                   std::span<const std::size_t> block_lengths = {});

// Numeric configuration for one extraction. The target multi-index or block
// partition is supplied per call.
struct ExtractionPlan {
  FdKind scheme = FdKind::central;
  double h = 1.0;
  std::size_t depth_M = 3;
  BetaSchedule schedule = BetaSchedule::nth_root_uniform;
  std::vector<double> betas;  // explicit betas override the schedule
  DyadicGrid grid{};
  bool subtract_one = true;
  bool exact_truncated = false;  // Chen-backed truncated-kernel backend
  Retention retention = Retention::none;
  bool retain_reversed = false;  // also solve reversed grids (suffix retrieval)
  unsigned threads = 1;
};

struct KernelEvaluation {
  double beta = 1.0;
  std::vector<double> lambda;
  double value = 0.0;
};

struct ExtractionResult {
  double value = 0.0;
  double bound = 0.0;  // NaN when no analytic bound applies
  MultiIndex index;    // flattened target
  std::vector<std::size_t> block_lengths;
  double prefactor = 1.0;  // l_1! ... l_m!
  bool exact_backend = false;
  bool subtract_one = true;
  FiniteDifferenceOperator fd;
  VandermondeScaling scaling;
  DyadicGrid grid;
  std::vector<KernelEvaluation> kernels;  // per lane diagnostics
  std::vector<KernelGrid> grids;          // retained, lane = b*nodes + node
  std::vector<KernelGrid> reversed_grids;
};

// S(x)^I through the axis filter (singleton blocks).
ExtractionResult coefficient(const PiecewiseLinearPath& x,
                             const MultiIndex& index,
                             const ExtractionPlan& plan);

// Anagram-class sum S(x)^{P(I)} through the all-channel linear filter.
ExtractionResult anagram_class(const PiecewiseLinearPath& x,
                               const MultiIndex& index,
                               const ExtractionPlan& plan);

// Semi-ordered block sum S(x)^{P(I_1)*...*P(I_m)} through the block filter
// (rescaled by l_1!...l_m!).
ExtractionResult semiordered(const PiecewiseLinearPath& x,
                             const BlockPartition& partition,
                             const ExtractionPlan& plan);

// Sub-coefficient S(x)^J over [0, t] recombined from the retained grids of a
// coefficient() result; no new kernel solves. Central difference: J must be
// a prefix of I. Forward difference with h = 1: J may be any sub-multi-index
// (zero-masked nodes). t must be a refined grid node.
double batch_retrieve(const ExtractionResult& result, const MultiIndex& sub,
                      double t = 1.0);

// Suffix sub-coefficient S(x)^J over [t, 1] from the reversed grids.
double batch_retrieve_suffix(const ExtractionResult& result,
                             const MultiIndex& sub, double t = 0.0);

// Evaluation keys (lane and grid node) a prefix/subset retrieval reads;
// exposed so the containment of sub-problems in stored grids is testable.
struct GridKey {
  std::size_t beta_index = 0;
  std::size_t node_mask = 0;
  std::size_t row = 0;
  std::size_t col = 0;
};

std::vector<GridKey> retrieval_keys(const ExtractionResult& result,
                                    const MultiIndex& sub, double t = 1.0);

bool key_available(const ExtractionResult& result, const GridKey& key);

}  // namespace sigkex
