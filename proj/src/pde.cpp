#include "sigkex/pde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sigkex/parallel.hpp"

namespace sigkex {

namespace {

// Cell factors per (x-segment, filter-segment, lane). A zero coupling is
// flagged so the update degenerates to an exact copy along s; the continuous
// solution is constant there and the copy keeps retrieved sub-grids bitwise
// identical to freshly solved ones.
struct StencilTables {
  std::size_t xsegs = 0;
  std::size_t blocks = 0;
  std::size_t lanes = 0;
  std::vector<double> A;
  std::vector<double> B;
  std::vector<unsigned char> zero;      // per (xseg, block, lane)
  std::vector<unsigned char> any_zero;  // per (xseg, block)

  void allocate() {
    const std::size_t cells = xsegs * blocks * lanes;
    A.assign(cells, 1.0);
    B.assign(cells, 1.0);
    zero.assign(cells, 0);
    any_zero.assign(xsegs * blocks, 0);
  }

  void fill_cell(std::size_t xseg, std::size_t block, std::size_t lane,
                 double delta) {
    const std::size_t at = (xseg * blocks + block) * lanes + lane;
    const double q = delta * delta * (1.0 / 12.0);
    A[at] = 1.0 + 0.5 * delta + q;
    B[at] = 1.0 - q;
    if (delta == 0.0) {
      zero[at] = 1;
      any_zero[xseg * blocks + block] = 1;
    }
  }
};

inline void update_lanes(double* __restrict out, const double* __restrict left,
                         const double* __restrict up1,
                         const double* __restrict up0,
                         const double* __restrict a,
                         const double* __restrict b, std::size_t lanes) {
  for (std::size_t l = 0; l < lanes; ++l)
    out[l] = (left[l] + up1[l]) * a[l] - up0[l] * b[l];
}

inline void update_lanes_masked(double* __restrict out,
                                const double* __restrict left,
                                const double* __restrict up1,
                                const double* __restrict up0,
                                const double* __restrict a,
                                const double* __restrict b,
                                const unsigned char* __restrict zero,
                                std::size_t lanes) {
  for (std::size_t l = 0; l < lanes; ++l) {
    const double v = (left[l] + up1[l]) * a[l] - up0[l] * b[l];
    out[l] = zero[l] ? left[l] : v;
  }
}

struct LaneMeta {
  std::vector<double> lambda;
  double beta = 1.0;
};

KernelFamily init_family(const StencilTables& st, DyadicGrid g,
                         const std::vector<LaneMeta>& meta,
                         Retention retention) {
  KernelFamily fam;
  fam.lanes = st.lanes;
  fam.rows = (st.xsegs << g.gamma1) + 1;
  fam.cols = (st.blocks << g.gamma2) + 1;
  fam.finals.assign(st.lanes, 1.0);
  if (retention != Retention::none) {
    fam.grids.resize(st.lanes);
    for (std::size_t l = 0; l < st.lanes; ++l) {
      auto& kg = fam.grids[l];
      kg.dyadic = g;
      kg.rows = fam.rows;
      kg.cols = fam.cols;
      kg.retention = retention;
      kg.lambda = meta[l].lambda;
      kg.beta = meta[l].beta;
      if (retention == Retention::full)
        kg.values.assign(fam.rows * fam.cols, 1.0);
      else {
        kg.last_row.assign(fam.cols, 1.0);
        kg.last_col.assign(fam.rows, 1.0);
      }
    }
  }
  return fam;
}

// Row-major traversal of the lanes [l0, l1). Lanes are independent, so any
// partition of the lane range yields identical bits.
void run_rows_range(const StencilTables& st, DyadicGrid g, Retention retention,
                    KernelFamily& fam, std::size_t l0, std::size_t l1) {
  const std::size_t K = l1 - l0;
  const std::size_t Kall = st.lanes;
  const std::size_t R = fam.rows - 1;
  const std::size_t C = fam.cols - 1;

  std::vector<double> prev((C + 1) * K, 1.0), cur((C + 1) * K, 1.0);
  for (std::size_t r = 0; r < R; ++r) {
    const std::size_t sx = r >> g.gamma1;
    for (std::size_t l = 0; l < K; ++l) cur[l] = 1.0;
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t cell = sx * st.blocks + (c >> g.gamma2);
      const double* a = st.A.data() + cell * Kall + l0;
      const double* b = st.B.data() + cell * Kall + l0;
      double* out = cur.data() + (c + 1) * K;
      const double* left = cur.data() + c * K;
      const double* up1 = prev.data() + (c + 1) * K;
      const double* up0 = prev.data() + c * K;
      if (st.any_zero[cell])
        update_lanes_masked(out, left, up1, up0, a, b,
                            st.zero.data() + cell * Kall + l0, K);
      else
        update_lanes(out, left, up1, up0, a, b, K);
    }
    if (retention == Retention::full) {
      for (std::size_t j = 0; j <= C; ++j)
        for (std::size_t l = 0; l < K; ++l)
          fam.grids[l0 + l].values[(r + 1) * fam.cols + j] = cur[j * K + l];
    } else if (retention == Retention::edges) {
      for (std::size_t l = 0; l < K; ++l)
        fam.grids[l0 + l].last_col[r + 1] = cur[C * K + l];
      if (r + 1 == R)
        for (std::size_t j = 0; j <= C; ++j)
          for (std::size_t l = 0; l < K; ++l)
            fam.grids[l0 + l].last_row[j] = cur[j * K + l];
    }
    std::swap(prev, cur);
  }
  for (std::size_t l = 0; l < K; ++l) fam.finals[l0 + l] = prev[C * K + l];
}

// Anti-diagonal traversal: every node on diagonal i+j = s depends only on
// diagonals s-1 and s-2, so the nodes of one diagonal are independent and
// may be computed concurrently.
void run_wavefront(const StencilTables& st, DyadicGrid g, Retention retention,
                   unsigned threads, KernelFamily& fam) {
  const std::size_t K = st.lanes;
  const std::size_t R = fam.rows - 1;
  const std::size_t C = fam.cols - 1;

  // Rolling diagonals indexed by the absolute node row i.
  std::vector<double> d0((R + 1) * K, 1.0);  // diagonal s-2
  std::vector<double> d1((R + 1) * K, 1.0);  // diagonal s-1
  std::vector<double> d2((R + 1) * K, 1.0);  // diagonal s

  auto record = [&](std::size_t i, std::size_t j, const double* lanes) {
    if (retention == Retention::full) {
      for (std::size_t l = 0; l < K; ++l)
        fam.grids[l].values[i * fam.cols + j] = lanes[l];
    } else if (retention == Retention::edges) {
      if (j == C)
        for (std::size_t l = 0; l < K; ++l) fam.grids[l].last_col[i] = lanes[l];
      if (i == R)
        for (std::size_t l = 0; l < K; ++l) fam.grids[l].last_row[j] = lanes[l];
    }
  };

  for (std::size_t s = 2; s <= R + C; ++s) {
    const std::size_t ilo = s > C ? std::max<std::size_t>(1, s - C) : 1;
    const std::size_t ihi = std::min(s - 1, R);
    if (ilo <= ihi) {
      parallel_for(ihi - ilo + 1, threads, [&](std::size_t q) {
        const std::size_t i = ilo + q;
        const std::size_t j = s - i;
        const std::size_t cell =
            ((i - 1) >> g.gamma1) * st.blocks + ((j - 1) >> g.gamma2);
        double* out = d2.data() + i * K;
        const double* left = d1.data() + i * K;       // (i, j-1)
        const double* up1 = d1.data() + (i - 1) * K;  // (i-1, j)
        const double* up0 = d0.data() + (i - 1) * K;  // (i-1, j-1)
        if (st.any_zero[cell])
          update_lanes_masked(out, left, up1, up0, st.A.data() + cell * K,
                              st.B.data() + cell * K,
                              st.zero.data() + cell * K, K);
        else
          update_lanes(out, left, up1, up0, st.A.data() + cell * K,
                       st.B.data() + cell * K, K);
        if (retention != Retention::none) record(i, j, out);
      });
    }
    if (s <= C) {
      for (std::size_t l = 0; l < K; ++l) d2[l] = 1.0;
      if (retention != Retention::none) record(0, s, d2.data());
    }
    if (s <= R) {
      for (std::size_t l = 0; l < K; ++l) d2[s * K + l] = 1.0;
      if (retention != Retention::none) record(s, 0, d2.data() + s * K);
    }
    if (s == R + C)
      for (std::size_t l = 0; l < K; ++l) fam.finals[l] = d2[R * K + l];
    std::swap(d0, d1);
    std::swap(d1, d2);
  }
}

KernelFamily run(const StencilTables& st, DyadicGrid g,
                 const std::vector<LaneMeta>& meta, SolveOptions opts) {
  if (g.gamma1 < 0 || g.gamma2 < 0)
    throw std::invalid_argument("dyadic orders must be >= 0");
  KernelFamily fam = init_family(st, g, meta, opts.retention);
  if (opts.traversal == Traversal::wavefront) {
    run_wavefront(st, g, opts.retention, opts.threads, fam);
  } else {
    const unsigned want = opts.threads == 0 ? hardware_threads() : opts.threads;
    const std::size_t chunks =
        std::max<std::size_t>(1, std::min<std::size_t>(want, st.lanes));
    parallel_for(chunks, static_cast<unsigned>(chunks), [&](std::size_t c) {
      const std::size_t l0 = st.lanes * c / chunks;
      const std::size_t l1 = st.lanes * (c + 1) / chunks;
      if (l0 < l1) run_rows_range(st, g, opts.retention, fam, l0, l1);
    });
  }
  if (!fam.grids.empty())
    for (std::size_t l = 0; l < st.lanes; ++l)
      fam.grids[l].final_value = fam.finals[l];
  return fam;
}

}  // namespace

double KernelGrid::value_at(std::size_t ti, std::size_t sj) const {
  if (ti >= rows || sj >= cols)
    throw std::out_of_range("grid node outside the solved grid");
  if (ti == 0 || sj == 0) return 1.0;
  switch (retention) {
    case Retention::full:
      return values[ti * cols + sj];
    case Retention::edges:
      if (ti == rows - 1) return last_row[sj];
      if (sj == cols - 1) return last_col[ti];
      break;
    case Retention::none:
      if (ti == rows - 1 && sj == cols - 1) return final_value;
      break;
  }
  throw std::logic_error("grid node was not retained");
}

double grid_value(const KernelGrid& grid, std::size_t t_node,
                  std::size_t s_node) {
  return grid.value_at(t_node, s_node);
}

KernelGrid solve_goursat_general(const PiecewiseLinearPath& x,
                                 const PiecewiseLinearPath& y, DyadicGrid grid,
                                 SolveOptions options) {
  if (x.dim() != y.dim())
    throw std::invalid_argument("kernel paths must share a dimension");
  StencilTables st;
  st.xsegs = x.num_segments();
  st.blocks = y.num_segments();
  st.lanes = 1;
  st.allocate();
  const double unit = std::ldexp(1.0, -(grid.gamma1 + grid.gamma2));
  for (std::size_t sx = 0; sx < st.xsegs; ++sx) {
    for (std::size_t sy = 0; sy < st.blocks; ++sy) {
      double dot = 0.0;
      for (std::size_t c = 0; c < x.dim(); ++c)
        dot += x.increment(sx, c) * y.increment(sy, c);
      st.fill_cell(sx, sy, 0, dot * unit);
    }
  }
  std::vector<LaneMeta> meta(1);
  KernelFamily fam = run(st, grid, meta, options);
  if (!fam.grids.empty()) return std::move(fam.grids[0]);
  KernelGrid out;
  out.dyadic = grid;
  out.rows = fam.rows;
  out.cols = fam.cols;
  out.final_value = fam.finals[0];
  return out;
}

KernelFamily solve_block_family(const PiecewiseLinearPath& xI,
                                std::span<const std::size_t> block_lengths,
                                const std::vector<std::vector<double>>& nodes,
                                std::span<const double> betas, DyadicGrid grid,
                                SolveOptions options) {
  std::size_t total = 0;
  for (std::size_t l : block_lengths) total += l;
  if (total != xI.dim())
    throw std::invalid_argument("block lengths must cover the path dimension");
  const std::size_t n = xI.dim();
  for (const auto& node : nodes)
    if (node.size() != n)
      throw std::invalid_argument("node dimension mismatch");

  StencilTables st;
  st.xsegs = xI.num_segments();
  st.blocks = block_lengths.size();
  st.lanes = betas.size() * nodes.size();
  st.allocate();
  const double unit = std::ldexp(1.0, -(grid.gamma1 + grid.gamma2));

  std::vector<std::size_t> offsets(st.blocks + 1, 0);
  for (std::size_t r = 0; r < st.blocks; ++r)
    offsets[r + 1] = offsets[r] + block_lengths[r];

  std::vector<LaneMeta> meta(st.lanes);
  for (std::size_t bi = 0; bi < betas.size(); ++bi)
    for (std::size_t ni = 0; ni < nodes.size(); ++ni) {
      const std::size_t lane = bi * nodes.size() + ni;
      meta[lane].beta = betas[bi];
      meta[lane].lambda = nodes[ni];
    }

  for (std::size_t sx = 0; sx < st.xsegs; ++sx)
    for (std::size_t blk = 0; blk < st.blocks; ++blk)
      for (std::size_t lane = 0; lane < st.lanes; ++lane) {
        const auto& lam = meta[lane].lambda;
        double wsum = 0.0;
        for (std::size_t c = offsets[blk]; c < offsets[blk + 1]; ++c)
          wsum += lam[c] * xI.increment(sx, c);
        st.fill_cell(sx, blk, lane, (meta[lane].beta * wsum) * unit);
      }

  return run(st, grid, meta, options);
}

KernelGrid solve_goursat_blocks(const PiecewiseLinearPath& xI,
                                std::span<const std::size_t> block_lengths,
                                std::span<const double> lambda, double beta,
                                DyadicGrid grid, SolveOptions options) {
  std::vector<std::vector<double>> nodes{
      std::vector<double>(lambda.begin(), lambda.end())};
  std::vector<double> betas{beta};
  KernelFamily fam =
      solve_block_family(xI, block_lengths, nodes, betas, grid, options);
  if (!fam.grids.empty()) return std::move(fam.grids[0]);
  KernelGrid out;
  out.dyadic = grid;
  out.rows = fam.rows;
  out.cols = fam.cols;
  out.final_value = fam.finals[0];
  out.lambda.assign(lambda.begin(), lambda.end());
  out.beta = beta;
  return out;
}

KernelGrid solve_goursat_axis(const PiecewiseLinearPath& xI,
                              std::span<const double> lambda, double beta,
                              DyadicGrid grid, SolveOptions options) {
  const std::vector<std::size_t> blocks(xI.dim(), 1);
  return solve_goursat_blocks(xI, blocks, lambda, beta, grid, options);
}

}  // namespace sigkex
