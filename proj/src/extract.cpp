#include "sigkex/extract.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "sigkex/chen.hpp"
#include "sigkex/parallel.hpp"

namespace sigkex {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

// sum_{k>=1} u^k / (k!)^2  ==  I0(2 sqrt(u)) - 1 for u >= 0.
double bessel_tail(double u) {
  double term = u, acc = 0.0;
  for (std::size_t k = 1; k < 100000; ++k) {
    acc += term;
    if (!std::isfinite(acc)) return acc;
    term *= u / (static_cast<double>(k + 1) * static_cast<double>(k + 1));
    if (term < 1e-18 * std::max(acc, 1.0)) break;
  }
  return acc;
}

FiniteDifferenceOperator make_grid_operator(FdKind kind, std::size_t n,
                                            double h) {
  if (n == 0) throw std::invalid_argument("operator order must be >= 1");
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  if (n >= 8 * sizeof(std::size_t) - 1)
    throw std::invalid_argument("operator order too large");
  FiniteDifferenceOperator op;
  op.kind = kind;
  op.order = n;
  op.h = h;
  const std::size_t count = std::size_t{1} << n;
  const double low = kind == FdKind::central ? -h : 0.0;
  const double denom =
      std::pow(kind == FdKind::central ? 2.0 * h : h, static_cast<double>(n));
  op.nodes.resize(count);
  op.weights.resize(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    auto& node = op.nodes[mask];
    node.resize(n);
    for (std::size_t k = 0; k < n; ++k)
      node[k] = (mask >> k) & 1 ? h : low;
    const std::size_t sgn = n - std::popcount(mask);
    op.weights[mask] = (sgn % 2 == 0 ? 1.0 : -1.0) / denom;
  }
  return op;
}

double block_one_variation(std::span<const double> node,
                           std::span<const std::size_t> lengths) {
  double total = 0.0;
  std::size_t c = 0;
  for (std::size_t l : lengths) {
    double sq = 0.0;
    for (std::size_t k = 0; k < l; ++k, ++c) sq += node[c] * node[c];
    total += std::sqrt(sq);
  }
  return total;
}

// Fixed-shape reduction of lane values (beta-major, node-minor). Every code
// path that turns kernel values into a coefficient goes through here, so
// recombined retrievals match fresh computations bitwise.
double recombine(std::span<const double> lane_values, std::size_t node_count,
                 std::span<const double> alphas,
                 std::span<const double> weights, bool subtract_one,
                 double prefactor) {
  std::vector<double> per_node(node_count);
  std::vector<double> per_beta(alphas.size());
  for (std::size_t bi = 0; bi < alphas.size(); ++bi) {
    const double* v = lane_values.data() + bi * node_count;
    for (std::size_t nd = 0; nd < node_count; ++nd)
      per_node[nd] = weights[nd] * (subtract_one ? v[nd] - 1.0 : v[nd]);
    per_beta[bi] = alphas[bi] * pairwise_sum(per_node);
  }
  return prefactor * pairwise_sum(per_beta);
}

std::vector<double> resolve_betas(const ExtractionPlan& plan, std::size_t n) {
  if (plan.betas.empty())
    return beta_schedule(plan.schedule, n, plan.depth_M);
  return plan.betas;
}

// Node row index for a time t on the refined grid.
std::size_t grid_row(double t, std::size_t rows) {
  const double cells = static_cast<double>(rows - 1);
  const double u = t * cells;
  const double r = std::round(u);
  if (r < 0.0 || r > cells || std::abs(u - r) > 1e-9 * std::max(1.0, cells))
    throw std::invalid_argument("t is not a node of the refined grid");
  return static_cast<std::size_t>(r);
}

// Leftmost embedding of `sub` as a subsequence of `index`.
std::vector<std::size_t> subsequence_positions(const MultiIndex& index,
                                               const MultiIndex& sub) {
  std::vector<std::size_t> pos;
  pos.reserve(sub.size());
  std::size_t at = 0;
  for (int want : sub.entries) {
    while (at < index.size() && index[at] != want) ++at;
    if (at == index.size())
      throw std::invalid_argument("J is not a sub-multi-index of I");
    pos.push_back(at++);
  }
  return pos;
}

struct RetrievalTarget {
  std::size_t col = 0;
  std::vector<std::size_t> parent_masks;  // per sub-operator node mask
};

RetrievalTarget plan_retrieval(const ExtractionResult& result,
                               const MultiIndex& sub) {
  const std::size_t n = result.index.size();
  const std::size_t m = sub.size();
  if (m == 0 || m > n)
    throw std::invalid_argument("sub-multi-index length out of range");
  for (std::size_t l : result.block_lengths)
    if (l != 1)
      throw std::invalid_argument(
          "batch retrieval requires an axis-filter extraction");
  RetrievalTarget target;
  const std::size_t sub_count = std::size_t{1} << m;
  target.parent_masks.resize(sub_count);
  if (result.fd.kind == FdKind::central) {
    if (sub != result.index.prefix(m))
      throw std::invalid_argument(
          "central-difference retrieval needs J to be a prefix of I");
    const std::size_t pad = ((std::size_t{1} << n) - 1) ^
                            ((std::size_t{1} << m) - 1);
    for (std::size_t mask = 0; mask < sub_count; ++mask)
      target.parent_masks[mask] = mask | pad;
    target.col = m << result.grid.gamma2;
  } else if (result.fd.kind == FdKind::forward) {
    if (result.fd.h != 1.0)
      throw std::invalid_argument(
          "forward-difference retrieval requires step size h = 1");
    auto positions = subsequence_positions(result.index, sub);
    for (std::size_t mask = 0; mask < sub_count; ++mask) {
      std::size_t parent = 0;
      for (std::size_t k = 0; k < m; ++k)
        if ((mask >> k) & 1) parent |= std::size_t{1} << positions[k];
      target.parent_masks[mask] = parent;
    }
    target.col = n << result.grid.gamma2;
  } else {
    throw std::invalid_argument(
        "batch retrieval is defined for forward and central differences");
  }
  return target;
}

double retrieve_from(const std::vector<KernelGrid>& grids,
                     const ExtractionResult& result, const MultiIndex& sub,
                     std::size_t row) {
  const RetrievalTarget target = plan_retrieval(result, sub);
  const std::size_t m = sub.size();
  const std::size_t sub_count = std::size_t{1} << m;
  const std::size_t parent_count = result.fd.nodes.size();
  FiniteDifferenceOperator sub_fd =
      make_grid_operator(result.fd.kind, m, result.fd.h);
  VandermondeScaling sub_vs =
      vandermonde_weights(m, result.scaling.depth, result.scaling.betas);

  std::vector<double> lane_values(sub_vs.alphas.size() * sub_count);
  for (std::size_t bi = 0; bi < sub_vs.alphas.size(); ++bi)
    for (std::size_t mask = 0; mask < sub_count; ++mask)
      lane_values[bi * sub_count + mask] =
          grids[bi * parent_count + target.parent_masks[mask]].value_at(
              row, target.col);
  return recombine(lane_values, sub_count, sub_vs.alphas, sub_fd.weights,
                   result.subtract_one, 1.0);
}

}  // namespace

FiniteDifferenceOperator FiniteDifferenceOperator::forward_difference(
    std::size_t n, double h) {
  return make_grid_operator(FdKind::forward, n, h);
}

FiniteDifferenceOperator FiniteDifferenceOperator::central_difference(
    std::size_t n, double h) {
  return make_grid_operator(FdKind::central, n, h);
}

FiniteDifferenceOperator FiniteDifferenceOperator::custom(
    std::vector<std::vector<double>> nodes, std::vector<double> weights,
    double h) {
  if (nodes.empty() || nodes.size() != weights.size())
    throw std::invalid_argument("custom operator needs matching nodes/weights");
  FiniteDifferenceOperator op;
  op.kind = FdKind::custom;
  op.order = nodes.front().size();
  op.h = h;
  op.nodes = std::move(nodes);
  op.weights = std::move(weights);
  for (const auto& node : op.nodes)
    if (node.size() != op.order)
      throw std::invalid_argument("custom operator node dimension mismatch");
  return op;
}

double apply_fd(
    const FiniteDifferenceOperator& fd,
    const std::function<double(std::span<const double>)>& evaluate) {
  std::vector<double> terms(fd.nodes.size());
  for (std::size_t i = 0; i < fd.nodes.size(); ++i)
    terms[i] = fd.weights[i] * evaluate(fd.nodes[i]);
  return pairwise_sum(terms);
}

std::vector<double> beta_schedule(BetaSchedule kind, std::size_t n,
                                  std::size_t M) {
  if (n == 0) throw std::invalid_argument("schedule needs n >= 1");
  std::vector<double> betas(M + 1);
  for (std::size_t i = 0; i <= M; ++i) {
    const double u =
        static_cast<double>(i + 1) / static_cast<double>(M + 1);
    betas[i] = kind == BetaSchedule::uniform
                   ? u
                   : std::pow(u, 1.0 / static_cast<double>(n));
  }
  return betas;
}

VandermondeScaling vandermonde_weights(std::size_t n, std::size_t M,
                                       std::vector<double> betas) {
  if (betas.size() != M + 1)
    throw std::invalid_argument("expected M+1 betas");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0))
      throw std::invalid_argument("betas must be positive");
    for (std::size_t j = i + 1; j < betas.size(); ++j)
      if (betas[i] == betas[j])
        throw std::invalid_argument("betas must be distinct");
  }
  VandermondeScaling vs;
  vs.order = n;
  vs.depth = M;
  vs.betas = std::move(betas);
  vs.alphas.resize(M + 1);
  vs.alphas_ext.resize(M + 1);
  for (std::size_t i = 0; i <= M; ++i) {
    long double acc = (M % 2 == 0) ? 1.0L : -1.0L;
    const long double bi = vs.betas[i];
    acc /= std::pow(bi, static_cast<long double>(n));
    for (std::size_t j = 0; j <= M; ++j) {
      if (j == i) continue;
      const long double bj = vs.betas[j];
      acc *= bj / (bi - bj);
    }
    vs.alphas_ext[i] = acc;
    vs.alphas[i] = static_cast<double>(acc);
  }
  return vs;
}

ErrorBoundParams error_bound_params(std::size_t n, std::size_t M,
                                    double var_xI,
                                    const FiniteDifferenceOperator& fd,
                                    BetaSchedule schedule,
                                    std::span<const std::size_t> block_lengths) {
  if (schedule != BetaSchedule::nth_root_uniform)
    throw std::invalid_argument(
        "the tail bound assumes the nth-root-uniform schedule");
  if (fd.order != n) throw std::invalid_argument("operator order mismatch");
  std::vector<std::size_t> singles;
  if (block_lengths.empty()) {
    singles.assign(n, 1);
    block_lengths = singles;
  }
  ErrorBoundParams p;
  p.node_count = fd.nodes.size();
  for (const auto& node : fd.nodes)
    p.ell_max = std::max(p.ell_max, block_one_variation(node, block_lengths));
  for (double w : fd.weights) p.c_max = std::max(p.c_max, std::abs(w));
  const double u = var_xI * p.ell_max;
  p.A = factorial(n) * p.c_max * static_cast<double>(p.node_count) *
        std::pow(u, static_cast<double>(n)) * bessel_tail(u);
  p.B = p.ell_max / (std::pow(2.0, 1.0 / static_cast<double>(n)) - 1.0);
  const double m1 = static_cast<double>(M + 1);
  p.value = p.A * m1 * m1 * std::pow(p.B, static_cast<double>(M)) *
            std::pow(var_xI, static_cast<double>(n + M)) /
            (factorial(n + M) * factorial(n + M));
  return p;
}

double error_bound(std::size_t n, std::size_t M, double var_xI,
                   const FiniteDifferenceOperator& fd, BetaSchedule schedule,
                   std::span<const std::size_t> block_lengths) {
  return error_bound_params(n, M, var_xI, fd, schedule, block_lengths).value;
}

namespace {

ExtractionResult extract_partition(const PiecewiseLinearPath& x,
                                   const BlockPartition& partition,
                                   const ExtractionPlan& plan) {
  const MultiIndex index = partition.flattened();
  index.validate(x.dim());
  const std::size_t n = index.size();
  const auto lengths = partition.lengths();

  ExtractionResult result;
  result.index = index;
  result.block_lengths = lengths;
  result.fd = make_grid_operator(plan.scheme, n, plan.h);
  result.grid = plan.grid;
  result.subtract_one = plan.subtract_one;
  // The kernel derivative sums over label permutations; each distinct
  // anagram of a block appears once per rearrangement of its repeated
  // channels, so the set-valued sum needs the distinct-permutation count
  // l_r!/(multiplicities!) rather than l_r! itself.
  result.prefactor = 1.0;
  for (const auto& block : partition.blocks)
    result.prefactor *= multiset_permutation_count(block);

  const PiecewiseLinearPath xI = restrict_channels(x, index);

  if (plan.exact_truncated) {
    result.exact_backend = true;
    result.bound = 0.0;  // truncation at level n makes the identity exact
    const PiecewiseLinearPath filter = block_axis_path(
        std::span<const std::size_t>(lengths));
    const std::size_t count = result.fd.nodes.size();
    const TruncatedSignature sig_x = truncated_signature(xI, n);
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      // truncated kernel with the data signature shared across nodes
      const TruncatedSignature sig_f =
          truncated_signature(scale(filter, result.fd.nodes[i]), n);
      double total = 0.0;
      for (std::size_t k = 0; k <= n; ++k) {
        double dot = 0.0;
        for (std::size_t j = 0; j < sig_x.levels[k].size(); ++j)
          dot += sig_x.levels[k][j] * sig_f.levels[k][j];
        total += dot;
      }
      values[i] = total;
      result.kernels.push_back({1.0, result.fd.nodes[i], values[i]});
    }
    const std::vector<double> one{1.0};
    result.value = recombine(values, count, one, result.fd.weights,
                             plan.subtract_one, result.prefactor);
    return result;
  }

  std::vector<double> betas = resolve_betas(plan, n);
  result.scaling = vandermonde_weights(n, betas.size() - 1, betas);
  result.bound = (plan.betas.empty() &&
                  plan.schedule == BetaSchedule::nth_root_uniform)
                     ? error_bound(n, result.scaling.depth, one_variation(xI),
                                   result.fd, plan.schedule,
                                   std::span<const std::size_t>(lengths))
                     : kNaN;

  SolveOptions solve_opts;
  solve_opts.traversal = Traversal::rows;
  solve_opts.threads = plan.threads;
  solve_opts.retention = plan.retention;
  KernelFamily family = solve_block_family(
      xI, lengths, result.fd.nodes, result.scaling.betas, plan.grid,
      solve_opts);

  result.value = recombine(family.finals, result.fd.nodes.size(),
                           result.scaling.alphas, result.fd.weights,
                           plan.subtract_one, result.prefactor);
  for (std::size_t bi = 0; bi < result.scaling.betas.size(); ++bi)
    for (std::size_t ni = 0; ni < result.fd.nodes.size(); ++ni)
      result.kernels.push_back(
          {result.scaling.betas[bi], result.fd.nodes[ni],
           family.finals[bi * result.fd.nodes.size() + ni]});
  result.grids = std::move(family.grids);

  if (plan.retain_reversed) {
    if (plan.retention == Retention::none)
      throw std::invalid_argument(
          "reversed grids require a retention mode");
    const PiecewiseLinearPath rev =
        restrict_channels(reverse(x), index.reversed());
    KernelFamily rfam = solve_block_family(
        rev, lengths, result.fd.nodes, result.scaling.betas, plan.grid,
        solve_opts);
    result.reversed_grids = std::move(rfam.grids);
  }
  return result;
}

}  // namespace

ExtractionResult coefficient(const PiecewiseLinearPath& x,
                             const MultiIndex& index,
                             const ExtractionPlan& plan) {
  return extract_partition(x, BlockPartition::singletons(index), plan);
}

ExtractionResult anagram_class(const PiecewiseLinearPath& x,
                               const MultiIndex& index,
                               const ExtractionPlan& plan) {
  return extract_partition(x, BlockPartition::whole(index), plan);
}

ExtractionResult semiordered(const PiecewiseLinearPath& x,
                             const BlockPartition& partition,
                             const ExtractionPlan& plan) {
  partition.validate_against(partition.flattened());
  return extract_partition(x, partition, plan);
}

double batch_retrieve(const ExtractionResult& result, const MultiIndex& sub,
                      double t) {
  if (result.exact_backend || result.grids.empty())
    throw std::invalid_argument("no retained kernel grids to retrieve from");
  const std::size_t row = grid_row(t, result.grids.front().rows);
  return retrieve_from(result.grids, result, sub, row);
}

double batch_retrieve_suffix(const ExtractionResult& result,
                             const MultiIndex& sub, double t) {
  if (result.reversed_grids.empty())
    throw std::invalid_argument("no reversed grids were retained");
  const std::size_t m = sub.size();
  const std::size_t n = result.index.size();
  if (m == 0 || m > n)
    throw std::invalid_argument("sub-multi-index length out of range");
  if (result.fd.kind != FdKind::central)
    throw std::invalid_argument(
        "suffix retrieval is defined for the central difference");
  const MultiIndex rev_index = result.index.reversed();
  const MultiIndex rev_sub = sub.reversed();
  if (rev_sub != rev_index.prefix(m))
    throw std::invalid_argument("J is not a suffix of I");

  // View the reversed family as a prefix problem for reversed(I).
  ExtractionResult view;
  view.index = rev_index;
  view.block_lengths = result.block_lengths;
  view.fd = result.fd;
  view.scaling = result.scaling;
  view.grid = result.grid;
  view.subtract_one = result.subtract_one;
  const std::size_t row =
      grid_row(1.0 - t, result.reversed_grids.front().rows);
  const double value = retrieve_from(result.reversed_grids, view, rev_sub, row);
  return m % 2 == 1 ? -value : value;
}

std::vector<GridKey> retrieval_keys(const ExtractionResult& result,
                                    const MultiIndex& sub, double t) {
  if (result.grids.empty())
    throw std::invalid_argument("no retained kernel grids");
  const RetrievalTarget target = plan_retrieval(result, sub);
  const std::size_t row = grid_row(t, result.grids.front().rows);
  std::vector<GridKey> keys;
  for (std::size_t bi = 0; bi < result.scaling.betas.size(); ++bi)
    for (std::size_t mask : target.parent_masks)
      keys.push_back({bi, mask, row, target.col});
  return keys;
}

bool key_available(const ExtractionResult& result, const GridKey& key) {
  const std::size_t parent_count = result.fd.nodes.size();
  const std::size_t lane = key.beta_index * parent_count + key.node_mask;
  if (lane >= result.grids.size()) return false;
  try {
    (void)result.grids[lane].value_at(key.row, key.col);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

}  // namespace sigkex
