#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sigkex/extract.hpp"
#include "sigkex/path.hpp"

namespace sigkex {

// Directed edge of a linear-CDE graph: mass flows source -> target, driven
// by one path channel. Nodes are 0-based, channels 1-based.
struct CdeEdge {
  std::size_t source = 0;
  std::size_t target = 0;
  int channel = 0;
};

class GraphValidationError : public std::invalid_argument {
 public:
  enum class Kind { sparsity, disjointness, binarity };
  GraphValidationError(Kind kind, const std::string& message)
      : std::invalid_argument(message), kind(kind) {}
  Kind kind;
};

// Graph of a maximally sparse linear CDE: every channel drives exactly one
// edge, at most one channel per ordered node pair, unit weights. Loops are
// allowed.
struct CdeGraph {
  std::size_t num_nodes = 0;
  std::vector<CdeEdge> edges;  // edges[c-1] carries channel c
  std::vector<std::vector<std::size_t>> out;  // node -> edge indices

  std::size_t num_channels() const { return edges.size(); }
  std::size_t max_out_degree() const;
  // Channel of the edge source -> target; throws if absent.
  int channel_of(std::size_t source, std::size_t target) const;
};

using BinaryMatrix = std::vector<std::vector<int>>;

// Graph of dy = sum_i A^i y dx^i from the per-channel adjacency matrices
// A^i (A^i_{j,k} = 1 puts the edge j -> k on channel i). Violations of
// maximal sparsity, disjointness or binarity raise GraphValidationError
// with the matching kind.
CdeGraph build_graph(const std::vector<BinaryMatrix>& adjacency);

CdeGraph graph_from_edges(std::size_t num_nodes, std::vector<CdeEdge> edges);

// Walk as a node sequence; the empty walk has no nodes. length() counts
// edges.
struct Walk {
  std::vector<std::size_t> nodes;
  bool is_empty() const { return nodes.empty(); }
  std::size_t length() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

// All walks with 1..N edges plus the empty walk, in deterministic order
// (empty first, then by length and enumeration order). Budget-guarded.
std::vector<Walk> walks(const CdeGraph& graph, std::size_t N);

// Channel word read along the edges of a nonempty walk.
MultiIndex flow(const CdeGraph& graph, const Walk& walk);

// (d-1)/(d^(N+1)-1) * |walks(G, N)|, the fraction of the dense truncated
// signature an N-step Euler scheme actually reads. Requires d >= 2.
double sparsity(const CdeGraph& graph, std::size_t N);

enum class LatticeKind { birth_only, birth_death };

// Lattice CDE on {1..m}^D: every coordinate receives an edge from each of
// its predecessors (one coordinate decremented); birth_death adds one loop
// per node.
CdeGraph lattice_cde(std::size_t D, std::size_t m, LatticeKind kind);

struct EulerState {
  std::vector<double> y;
  double t = 0.0;
};

enum class EulerBackend { chen_oracle, kernel_extraction };

struct EulerOptions {
  std::size_t order_N = 5;
  EulerBackend backend = EulerBackend::chen_oracle;
  ExtractionPlan plan{};  // kernel backend configuration
  unsigned threads = 1;   // concurrent coefficient fetches
};

// One N-step Euler update over [state.t, t_next]:
//   y[target(w)] += S(x)^{flow(w)} * y[source(w)]
// summed over nonempty walks. Coefficients come from the chosen backend;
// walks sharing a prefix reuse one computation (Chen prefix table, or grid
// retrieval under the central difference).
EulerState euler_step(const CdeGraph& graph, const PiecewiseLinearPath& x,
                      const EulerState& state, double t_next,
                      const EulerOptions& options);

std::vector<EulerState> euler_run(const CdeGraph& graph,
                                  const PiecewiseLinearPath& x,
                                  std::span<const double> y0,
                                  std::span<const double> partition,
                                  const EulerOptions& options);

// Seasonal birth / epidemic death rates for the generational chain model,
// all evaluated at generations k = 1..n+1 (k = n+1 is the overflow node).
struct GenerationalParams {
  std::size_t generations = 13;  // n
  double epidemic_time = 0.5;    // t_ep
  std::function<double(std::size_t)> a, b, c, d, f;

  // a = 1, b = f = 10, c(k) = k/(n+1), d(k) = (n+1-k)/(n+1).
  static GenerationalParams defaults(std::size_t n, double t_ep);
};

struct GenerationalResult {
  CdeGraph graph;
  PiecewiseLinearPath driver{{0.0}, {0.0}};
  std::vector<EulerState> trajectory;
  double scheme_sparsity = 0.0;
};

// Birth-death chain with an overflow node, driven by piecewise-linear
// samples of the sigmoidal rates (death channels carry -mu so the graph
// keeps unit weights). y starts at 1 for every node.
GenerationalResult generational_model(const GenerationalParams& params,
                                      std::span<const double> partition,
                                      const EulerOptions& options,
                                      std::size_t driver_segments_per_step = 1);

}  // namespace sigkex
