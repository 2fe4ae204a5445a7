#include "sigkex/path.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sigkex {

void MultiIndex::validate(std::size_t dim) const {
  if (entries.empty())
    throw std::invalid_argument("multi-index must be nonempty");
  for (int e : entries) {
    if (e < 1 || static_cast<std::size_t>(e) > dim) {
      throw std::invalid_argument("multi-index entry " + std::to_string(e) +
                                  " outside channels 1.." + std::to_string(dim));
    }
  }
}

MultiIndex MultiIndex::prefix(std::size_t len) const {
  return MultiIndex{
      std::vector<int>(entries.begin(), entries.begin() + len)};
}

MultiIndex MultiIndex::reversed() const {
  return MultiIndex{std::vector<int>(entries.rbegin(), entries.rend())};
}

BlockPartition BlockPartition::singletons(const MultiIndex& target) {
  BlockPartition p;
  p.blocks.reserve(target.size());
  for (int e : target.entries) p.blocks.push_back(MultiIndex{e});
  return p;
}

BlockPartition BlockPartition::whole(const MultiIndex& target) {
  return BlockPartition{{target}};
}

std::size_t BlockPartition::total_length() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.size();
  return n;
}

std::vector<std::size_t> BlockPartition::lengths() const {
  std::vector<std::size_t> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back(b.size());
  return out;
}

MultiIndex BlockPartition::flattened() const {
  MultiIndex out;
  out.entries.reserve(total_length());
  for (const auto& b : blocks)
    out.entries.insert(out.entries.end(), b.entries.begin(), b.entries.end());
  return out;
}

void BlockPartition::validate_against(const MultiIndex& target) const {
  if (blocks.empty()) throw std::invalid_argument("partition has no blocks");
  for (const auto& b : blocks)
    if (b.entries.empty())
      throw std::invalid_argument("partition block must be nonempty");
  if (flattened() != target)
    throw std::invalid_argument(
        "partition blocks do not concatenate to the target multi-index");
}

PiecewiseLinearPath::PiecewiseLinearPath(std::vector<double> points,
                                         std::size_t dim)
    : points_(std::move(points)), dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("path dimension must be >= 1");
  if (points_.size() % dim_ != 0)
    throw std::invalid_argument("point data not a multiple of the dimension");
  if (points_.size() / dim_ < 2)
    throw std::invalid_argument("path needs at least two points");
  for (double v : points_)
    if (!std::isfinite(v))
      throw std::invalid_argument("path coordinates must be finite");
}

PiecewiseLinearPath::PiecewiseLinearPath(
    std::initializer_list<std::initializer_list<double>> points)
    : dim_(points.size() == 0 ? 0 : points.begin()->size()) {
  for (const auto& p : points) {
    if (p.size() != dim_)
      throw std::invalid_argument("inconsistent point dimensions");
    points_.insert(points_.end(), p.begin(), p.end());
  }
  *this = PiecewiseLinearPath(std::move(points_), dim_);
}

std::vector<double> PiecewiseLinearPath::eval(double t) const {
  const std::size_t L = num_segments();
  double u = t * static_cast<double>(L);
  if (u <= 0.0) return {point(0).begin(), point(0).end()};
  if (u >= static_cast<double>(L)) return {point(L).begin(), point(L).end()};
  std::size_t k = static_cast<std::size_t>(u);
  double frac = u - static_cast<double>(k);
  std::vector<double> out(dim_);
  for (std::size_t c = 0; c < dim_; ++c)
    out[c] = at(k, c) + frac * (at(k + 1, c) - at(k, c));
  return out;
}

PiecewiseLinearPath restrict_channels(const PiecewiseLinearPath& x,
                                      const MultiIndex& index) {
  index.validate(x.dim());
  const std::size_t n = index.size();
  std::vector<double> pts(x.num_points() * n);
  for (std::size_t p = 0; p < x.num_points(); ++p)
    for (std::size_t k = 0; k < n; ++k)
      pts[p * n + k] = x.at(p, static_cast<std::size_t>(index[k]) - 1);
  return {std::move(pts), n};
}

PiecewiseLinearPath scale(const PiecewiseLinearPath& x,
                          std::span<const double> factors) {
  if (factors.size() != x.dim())
    throw std::invalid_argument("scaling dimension mismatch");
  std::vector<double> pts(x.raw().begin(), x.raw().end());
  const std::size_t d = x.dim();
  for (std::size_t p = 0; p < x.num_points(); ++p)
    for (std::size_t c = 0; c < d; ++c) pts[p * d + c] *= factors[c];
  return {std::move(pts), d};
}

PiecewiseLinearPath axis_path(std::size_t n) {
  if (n == 0) throw std::invalid_argument("axis path needs n >= 1");
  std::vector<double> pts((n + 1) * n, 0.0);
  for (std::size_t p = 1; p <= n; ++p)
    for (std::size_t c = 0; c < p; ++c) pts[p * n + c] = 1.0;
  return {std::move(pts), n};
}

PiecewiseLinearPath block_axis_path(std::span<const std::size_t> lengths) {
  if (lengths.empty())
    throw std::invalid_argument("block path needs at least one block");
  std::size_t n = 0;
  for (std::size_t l : lengths) {
    if (l == 0) throw std::invalid_argument("block lengths must be >= 1");
    n += l;
  }
  const std::size_t m = lengths.size();
  std::vector<double> pts((m + 1) * n, 0.0);
  std::size_t offset = 0;
  for (std::size_t r = 0; r < m; ++r) {
    offset += lengths[r];
    // node r+1 = e_1 + ... + e_{offset}
    for (std::size_t c = 0; c < offset; ++c) pts[(r + 1) * n + c] = 1.0;
  }
  return {std::move(pts), n};
}

PiecewiseLinearPath block_axis_path(const BlockPartition& partition) {
  auto lens = partition.lengths();
  return block_axis_path(std::span<const std::size_t>(lens));
}

double one_variation(const PiecewiseLinearPath& x) {
  double total = 0.0;
  for (std::size_t s = 0; s < x.num_segments(); ++s) {
    double sq = 0.0;
    for (std::size_t c = 0; c < x.dim(); ++c) {
      double d = x.increment(s, c);
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total;
}

PiecewiseLinearPath reverse(const PiecewiseLinearPath& x) {
  const std::size_t d = x.dim();
  const std::size_t P = x.num_points();
  std::vector<double> pts(P * d);
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t c = 0; c < d; ++c) pts[p * d + c] = x.at(P - 1 - p, c);
  return {std::move(pts), d};
}

PiecewiseLinearPath subpath(const PiecewiseLinearPath& x, double t0,
                            double t1) {
  if (!(t0 < t1) || t0 < 0.0 || t1 > 1.0)
    throw std::invalid_argument("subpath needs 0 <= t0 < t1 <= 1");
  const std::size_t L = x.num_segments();
  const double u0 = t0 * static_cast<double>(L);
  const double u1 = t1 * static_cast<double>(L);
  std::vector<double> pts;
  auto push = [&](const std::vector<double>& p) {
    pts.insert(pts.end(), p.begin(), p.end());
  };
  push(x.eval(t0));
  // interior nodes strictly between u0 and u1
  for (std::size_t k = static_cast<std::size_t>(std::floor(u0)) + 1;
       static_cast<double>(k) < u1; ++k) {
    if (static_cast<double>(k) > u0)
      pts.insert(pts.end(), x.point(k).begin(), x.point(k).end());
  }
  push(x.eval(t1));
  return {std::move(pts), x.dim()};
}

}  // namespace sigkex
