#include "sigkex/cde.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "sigkex/budget.hpp"
#include "sigkex/chen.hpp"
#include "sigkex/parallel.hpp"

namespace sigkex {

namespace {

void rebuild_adjacency(CdeGraph& g) {
  g.out.assign(g.num_nodes, {});
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    g.out[g.edges[e].source].push_back(e);
}

void validate_graph(const CdeGraph& g) {
  std::map<std::pair<std::size_t, std::size_t>, int> seen;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& edge = g.edges[e];
    if (edge.source >= g.num_nodes || edge.target >= g.num_nodes)
      throw std::invalid_argument("edge endpoint outside the node set");
    if (edge.channel != static_cast<int>(e) + 1)
      throw GraphValidationError(
          GraphValidationError::Kind::sparsity,
          "channels must label the edges 1..d in order");
    auto [it, inserted] = seen.emplace(
        std::make_pair(edge.source, edge.target), edge.channel);
    if (!inserted)
      throw GraphValidationError(
          GraphValidationError::Kind::disjointness,
          "two channels drive the node pair " +
              std::to_string(edge.source) + " -> " +
              std::to_string(edge.target));
  }
}

}  // namespace

std::size_t CdeGraph::max_out_degree() const {
  std::size_t best = 0;
  for (const auto& o : out) best = std::max(best, o.size());
  return best;
}

int CdeGraph::channel_of(std::size_t source, std::size_t target) const {
  for (std::size_t e : out[source])
    if (edges[e].target == target) return edges[e].channel;
  throw std::invalid_argument("no edge " + std::to_string(source) + " -> " +
                              std::to_string(target));
}

CdeGraph build_graph(const std::vector<BinaryMatrix>& adjacency) {
  if (adjacency.empty())
    throw std::invalid_argument("at least one adjacency matrix is required");
  const std::size_t m = adjacency.front().size();
  CdeGraph g;
  g.num_nodes = m;
  for (std::size_t i = 0; i < adjacency.size(); ++i) {
    const auto& A = adjacency[i];
    if (A.size() != m)
      throw std::invalid_argument("adjacency matrices must share a shape");
    std::size_t hits = 0;
    CdeEdge edge;
    for (std::size_t r = 0; r < m; ++r) {
      if (A[r].size() != m)
        throw std::invalid_argument("adjacency matrix is not square");
      for (std::size_t c = 0; c < m; ++c) {
        if (A[r][c] == 0) continue;
        if (A[r][c] != 1)
          throw GraphValidationError(
              GraphValidationError::Kind::binarity,
              "matrix for channel " + std::to_string(i + 1) +
                  " has a non-binary entry");
        edge = {r, c, static_cast<int>(i + 1)};
        ++hits;
      }
    }
    if (hits != 1)
      throw GraphValidationError(
          GraphValidationError::Kind::sparsity,
          "channel " + std::to_string(i + 1) + " drives " +
              std::to_string(hits) + " edges, expected exactly one");
    g.edges.push_back(edge);
  }
  rebuild_adjacency(g);
  validate_graph(g);
  return g;
}

CdeGraph graph_from_edges(std::size_t num_nodes, std::vector<CdeEdge> edges) {
  CdeGraph g;
  g.num_nodes = num_nodes;
  g.edges = std::move(edges);
  rebuild_adjacency(g);
  validate_graph(g);
  return g;
}

std::vector<Walk> walks(const CdeGraph& graph, std::size_t N) {
  if (N == 0) throw std::invalid_argument("walk horizon N must be >= 1");
  std::vector<Walk> out;
  out.push_back(Walk{});  // empty walk
  std::vector<Walk> frontier;
  for (std::size_t node = 0; node < graph.num_nodes; ++node)
    for (std::size_t e : graph.out[node]) {
      frontier.push_back(Walk{{node, graph.edges[e].target}});
    }
  for (std::size_t len = 1; len <= N && !frontier.empty(); ++len) {
    budgets::check(out.size() + frontier.size(), budgets::max_walks(),
                   "walk enumeration");
    out.insert(out.end(), frontier.begin(), frontier.end());
    if (len == N) break;
    std::vector<Walk> next;
    for (const Walk& w : frontier)
      for (std::size_t e : graph.out[w.nodes.back()]) {
        Walk ext = w;
        ext.nodes.push_back(graph.edges[e].target);
        next.push_back(std::move(ext));
      }
    frontier = std::move(next);
  }
  return out;
}

MultiIndex flow(const CdeGraph& graph, const Walk& walk) {
  if (walk.is_empty())
    throw std::invalid_argument("the empty walk has no flow");
  MultiIndex f;
  f.entries.reserve(walk.length());
  for (std::size_t k = 0; k + 1 < walk.nodes.size(); ++k)
    f.entries.push_back(graph.channel_of(walk.nodes[k], walk.nodes[k + 1]));
  return f;
}

double sparsity(const CdeGraph& graph, std::size_t N) {
  const std::size_t d = graph.num_channels();
  if (d < 2) throw std::invalid_argument("sparsity needs at least two channels");
  const double count = static_cast<double>(walks(graph, N).size());
  const double dd = static_cast<double>(d);
  return (dd - 1.0) * count / (std::pow(dd, static_cast<double>(N + 1)) - 1.0);
}

CdeGraph lattice_cde(std::size_t D, std::size_t m, LatticeKind kind) {
  if (D == 0 || m == 0)
    throw std::invalid_argument("lattice sizes must be >= 1");
  double nodes_d = 1.0;
  for (std::size_t k = 0; k < D; ++k) nodes_d *= static_cast<double>(m);
  budgets::check(static_cast<std::size_t>(nodes_d), budgets::max_walks(),
                 "lattice node count");
  std::size_t num_nodes = 1;
  for (std::size_t k = 0; k < D; ++k) num_nodes *= m;

  // coordinate c_k of node index j: (j / m^k) % m, zero-based
  std::vector<CdeEdge> edges;
  int channel = 1;
  for (std::size_t j = 0; j < num_nodes; ++j) {
    std::size_t stride = 1;
    for (std::size_t k = 0; k < D; ++k) {
      const std::size_t coord = (j / stride) % m;
      if (coord > 0)
        edges.push_back({j - stride, j, channel++});
      stride *= m;
    }
  }
  if (kind == LatticeKind::birth_death)
    for (std::size_t j = 0; j < num_nodes; ++j)
      edges.push_back({j, j, channel++});
  return graph_from_edges(num_nodes, std::move(edges));
}

namespace {

// Coefficient values for every needed flow over one step, fetched
// longest-walk-first so shorter flows resolve from shared prefixes.
std::map<std::vector<int>, double> fetch_coefficients(
    const PiecewiseLinearPath& segment, const std::vector<MultiIndex>& flows,
    const EulerOptions& options) {
  // maximal flows: those that are not a proper prefix of another flow
  std::vector<std::vector<int>> sorted;
  sorted.reserve(flows.size());
  for (const auto& f : flows) sorted.push_back(f.entries);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::vector<int>> maximal;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& cur = sorted[i];
    bool is_prefix = false;
    if (i + 1 < sorted.size()) {
      const auto& nxt = sorted[i + 1];
      is_prefix = nxt.size() > cur.size() &&
                  std::equal(cur.begin(), cur.end(), nxt.begin());
    }
    if (!is_prefix) maximal.push_back(cur);
  }

  std::map<std::vector<int>, double> values;
  if (options.backend == EulerBackend::chen_oracle) {
    std::vector<std::vector<double>> prefix_values(maximal.size());
    parallel_for(maximal.size(), options.threads, [&](std::size_t i) {
      prefix_values[i] =
          coefficient_chen_prefixes(segment, MultiIndex{maximal[i]});
    });
    for (std::size_t i = 0; i < maximal.size(); ++i)
      for (std::size_t k = 1; k <= maximal[i].size(); ++k)
        values.emplace(std::vector<int>(maximal[i].begin(),
                                        maximal[i].begin() + k),
                       prefix_values[i][k]);
    return values;
  }

  // Kernel backend. Prefix reuse needs the central difference; otherwise
  // every flow is computed independently.
  const bool reuse = options.plan.scheme == FdKind::central;
  const auto& targets = reuse ? maximal : sorted;
  ExtractionPlan plan = options.plan;
  plan.threads = 1;
  if (reuse && plan.retention == Retention::none)
    plan.retention = Retention::edges;
  std::vector<std::vector<std::pair<std::vector<int>, double>>> partial(
      targets.size());
  parallel_for(targets.size(), options.threads, [&](std::size_t i) {
    const MultiIndex target{targets[i]};
    ExtractionResult res = coefficient(segment, target, plan);
    auto& mine = partial[i];
    mine.emplace_back(targets[i], res.value);
    if (reuse)
      for (std::size_t k = 1; k < target.size(); ++k)
        mine.emplace_back(
            std::vector<int>(targets[i].begin(), targets[i].begin() + k),
            batch_retrieve(res, target.prefix(k)));
  });
  for (const auto& chunk : partial)
    for (const auto& [key, value] : chunk) values.emplace(key, value);
  return values;
}

void validate_partition(std::span<const double> partition) {
  if (partition.size() < 2)
    throw std::invalid_argument("partition needs at least two nodes");
  for (std::size_t i = 0; i + 1 < partition.size(); ++i)
    if (!(partition[i] < partition[i + 1]))
      throw std::invalid_argument("partition must be strictly increasing");
  if (partition.front() < 0.0 || partition.back() > 1.0)
    throw std::invalid_argument("partition must lie inside [0, 1]");
}

}  // namespace

EulerState euler_step(const CdeGraph& graph, const PiecewiseLinearPath& x,
                      const EulerState& state, double t_next,
                      const EulerOptions& options) {
  if (!(t_next > state.t))
    throw std::invalid_argument("t_next must exceed the current time");
  if (state.y.size() != graph.num_nodes)
    throw std::invalid_argument("state dimension does not match the graph");
  const PiecewiseLinearPath segment = subpath(x, state.t, t_next);

  const std::vector<Walk> all = walks(graph, options.order_N);
  std::vector<MultiIndex> flows;
  flows.reserve(all.size());
  for (const auto& w : all)
    if (!w.is_empty()) flows.push_back(flow(graph, w));
  const auto values = fetch_coefficients(segment, flows, options);

  EulerState next{state.y, t_next};
  std::size_t fi = 0;
  for (const auto& w : all) {
    if (w.is_empty()) continue;
    const auto& f = flows[fi++];
    next.y[w.nodes.back()] += values.at(f.entries) * state.y[w.nodes.front()];
  }
  return next;
}

std::vector<EulerState> euler_run(const CdeGraph& graph,
                                  const PiecewiseLinearPath& x,
                                  std::span<const double> y0,
                                  std::span<const double> partition,
                                  const EulerOptions& options) {
  validate_partition(partition);
  if (y0.size() != graph.num_nodes)
    throw std::invalid_argument("initial state dimension mismatch");
  std::vector<EulerState> trajectory;
  trajectory.push_back(
      EulerState{{y0.begin(), y0.end()}, partition.front()});
  for (std::size_t i = 1; i < partition.size(); ++i)
    trajectory.push_back(
        euler_step(graph, x, trajectory.back(), partition[i], options));
  return trajectory;
}

GenerationalParams GenerationalParams::defaults(std::size_t n, double t_ep) {
  GenerationalParams p;
  p.generations = n;
  p.epidemic_time = t_ep;
  const double scale = static_cast<double>(n + 1);
  p.a = [](std::size_t) { return 1.0; };
  p.b = [](std::size_t) { return 10.0; };
  p.f = [](std::size_t) { return 10.0; };
  p.c = [scale](std::size_t k) { return static_cast<double>(k) / scale; };
  p.d = [scale](std::size_t k) {
    return (scale - static_cast<double>(k)) / scale;
  };
  return p;
}

GenerationalResult generational_model(const GenerationalParams& params,
                                      std::span<const double> partition,
                                      const EulerOptions& options,
                                      std::size_t driver_segments_per_step) {
  validate_partition(partition);
  if (params.generations == 0)
    throw std::invalid_argument("model needs at least one generation");
  if (driver_segments_per_step == 0)
    throw std::invalid_argument("driver needs at least one segment per step");
  const std::size_t n = params.generations;
  const std::size_t nodes = n + 1;  // generations 1..n plus the >n node

  std::vector<CdeEdge> edges;
  int channel = 1;
  for (std::size_t k = 0; k + 1 < nodes; ++k)
    edges.push_back({k, k + 1, channel++});  // births k -> k+1 on lambda_k
  for (std::size_t k = 0; k < nodes; ++k)
    edges.push_back({k, k, channel++});  // deaths on -mu_k

  GenerationalResult result;
  result.graph = graph_from_edges(nodes, std::move(edges));

  const std::size_t d = result.graph.num_channels();
  auto lambda = [&](std::size_t k, double t) {
    return params.a(k) / (1.0 + std::exp(-params.b(k) * (t - params.c(k))));
  };
  auto mu = [&](std::size_t k, double t) {
    return params.d(k) /
           (1.0 + std::exp(-params.f(k) * (t - params.epidemic_time)));
  };

  std::vector<double> times;
  for (std::size_t i = 0; i + 1 < partition.size(); ++i)
    for (std::size_t s = 0; s < driver_segments_per_step; ++s)
      times.push_back(partition[i] +
                      (partition[i + 1] - partition[i]) *
                          static_cast<double>(s) /
                          static_cast<double>(driver_segments_per_step));
  times.push_back(partition.back());

  std::vector<double> points(times.size() * d, 0.0);
  for (std::size_t p = 0; p < times.size(); ++p) {
    const double t = times[p];
    for (std::size_t k = 1; k <= n; ++k)
      points[p * d + (k - 1)] = lambda(k, t);
    for (std::size_t k = 1; k <= nodes; ++k)
      points[p * d + n + (k - 1)] = -mu(k, t);
  }
  result.driver = PiecewiseLinearPath(std::move(points), d);

  const std::vector<double> y0(nodes, 1.0);
  // The driver is parameterised uniformly over its own samples, so step i
  // covers the node fraction [i/steps, (i+1)/steps] on the driver's clock.
  const std::size_t steps = partition.size() - 1;
  std::vector<double> scaled(partition.size());
  for (std::size_t i = 0; i <= steps; ++i)
    scaled[i] = static_cast<double>(i) / static_cast<double>(steps);
  result.trajectory =
      euler_run(result.graph, result.driver, y0, scaled, options);
  for (std::size_t i = 0; i < result.trajectory.size(); ++i)
    result.trajectory[i].t = partition[i];
  result.scheme_sparsity = sparsity(result.graph, options.order_N);
  return result;
}

}  // namespace sigkex
