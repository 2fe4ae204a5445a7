#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sigkex/path.hpp"

namespace sigkex {

// Dyadic refinement orders: every data-path segment is split into 2^gamma1
// grid cells along t, every filter segment into 2^gamma2 cells along s.
struct DyadicGrid {
  int gamma1 = 3;
  int gamma2 = 3;
};

enum class Traversal { rows, wavefront };

enum class Retention {
  none,   // final value only
  edges,  // last row and last column
  full    // every grid node
};

struct SolveOptions {
  Traversal traversal = Traversal::rows;
  unsigned threads = 1;  // wavefront diagonals only
  Retention retention = Retention::none;
};

// Solved kernel grid over the refined nodes (t_i, s_j). Boundary rows and
// columns are identically 1.
struct KernelGrid {
  DyadicGrid dyadic{};
  std::size_t rows = 0;  // node count along t
  std::size_t cols = 0;  // node count along s
  Retention retention = Retention::none;
  double final_value = 1.0;
  std::vector<double> values;    // full: rows*cols, row-major
  std::vector<double> last_row;  // edges: cols entries
  std::vector<double> last_col;  // edges: rows entries

  // Filter metadata for retrieval and diagnostics.
  std::vector<double> lambda;
  double beta = 1.0;

  // Stored value at node (ti, sj); throws std::out_of_range outside the
  // grid and std::logic_error if the node was not retained.
  double value_at(std::size_t ti, std::size_t sj) const;
};

double grid_value(const KernelGrid& grid, std::size_t t_node,
                  std::size_t s_node);

// All kernels of one extraction target solved together, one lane per
// (beta index, finite-difference node): lane = b * num_nodes + node.
struct KernelFamily {
  std::size_t lanes = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> finals;     // per lane
  std::vector<KernelGrid> grids;  // per lane, empty unless retained
};

// Goursat solver for an arbitrary pair of paths: second-order update
//   k(i+1,j+1) = (k(i+1,j) + k(i,j+1)) A - k(i,j) B,
//   A = 1 + D/2 + D^2/12,  B = 1 - D^2/12,
// with D the inner product of the refined increments on the cell.
KernelGrid solve_goursat_general(const PiecewiseLinearPath& x,
                                 const PiecewiseLinearPath& y, DyadicGrid grid,
                                 SolveOptions options = {});

// Specialised solver for the axis filter scaled by beta * lambda: on the
// s-block of axis m the cell factor is beta * lambda_m * (refined increment
// of channel m of x). The scaling is applied to increments only.
KernelGrid solve_goursat_axis(const PiecewiseLinearPath& xI,
                              std::span<const double> lambda, double beta,
                              DyadicGrid grid, SolveOptions options = {});

// Same with a block filter: s-block r couples to the channels of block r.
KernelGrid solve_goursat_blocks(const PiecewiseLinearPath& xI,
                                std::span<const std::size_t> block_lengths,
                                std::span<const double> lambda, double beta,
                                DyadicGrid grid, SolveOptions options = {});

// Lane-batched block solve over all (beta, node) pairs.
KernelFamily solve_block_family(const PiecewiseLinearPath& xI,
                                std::span<const std::size_t> block_lengths,
                                const std::vector<std::vector<double>>& nodes,
                                std::span<const double> betas, DyadicGrid grid,
                                SolveOptions options = {});

}  // namespace sigkex
