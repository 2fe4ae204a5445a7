#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace sigkex {

// Multi-index over path channels, entries in {1,...,d}. Identifies the
// signature coefficient S(x)^I.
struct MultiIndex {
  std::vector<int> entries;

  MultiIndex() = default;
  MultiIndex(std::initializer_list<int> init) : entries(init) {}
  explicit MultiIndex(std::vector<int> e) : entries(std::move(e)) {}

  std::size_t size() const { return entries.size(); }
  int operator[](std::size_t i) const { return entries[i]; }
  bool operator==(const MultiIndex&) const = default;

  // Throws std::invalid_argument if any entry lies outside {1,...,dim}.
  void validate(std::size_t dim) const;

  MultiIndex prefix(std::size_t len) const;
  MultiIndex reversed() const;
};

// Ordered split of a multi-index into contiguous blocks I_1 * ... * I_m.
struct BlockPartition {
  std::vector<MultiIndex> blocks;

  BlockPartition() = default;
  BlockPartition(std::initializer_list<MultiIndex> init) : blocks(init) {}
  explicit BlockPartition(std::vector<MultiIndex> b) : blocks(std::move(b)) {}

  static BlockPartition singletons(const MultiIndex& target);
  static BlockPartition whole(const MultiIndex& target);

  std::size_t num_blocks() const { return blocks.size(); }
  std::size_t total_length() const;
  std::vector<std::size_t> lengths() const;
  MultiIndex flattened() const;  // I_1 * ... * I_m

  // Throws unless all blocks are nonempty and the concatenation is `target`.
  void validate_against(const MultiIndex& target) const;
};

// Piecewise linear path through L+1 points in R^d, parameterised uniformly
// on [0,1]: node k sits at t = k/L. Immutable after construction.
class PiecewiseLinearPath {
 public:
  PiecewiseLinearPath(std::vector<double> points, std::size_t dim);
  PiecewiseLinearPath(
      std::initializer_list<std::initializer_list<double>> points);

  std::size_t dim() const { return dim_; }
  std::size_t num_points() const { return points_.size() / dim_; }
  std::size_t num_segments() const { return num_points() - 1; }

  double at(std::size_t point, std::size_t channel) const {
    return points_[point * dim_ + channel];
  }
  std::span<const double> point(std::size_t i) const {
    return {points_.data() + i * dim_, dim_};
  }
  double increment(std::size_t segment, std::size_t channel) const {
    return at(segment + 1, channel) - at(segment, channel);
  }
  std::span<const double> raw() const { return points_; }

  // Value at time t in [0,1], linearly interpolated.
  std::vector<double> eval(double t) const;

 private:
  std::vector<double> points_;  // row-major, (L+1) x d
  std::size_t dim_;
};

// Path whose channel k is channel i_k of x. Repeated entries duplicate
// channels; the number of points is preserved.
PiecewiseLinearPath restrict_channels(const PiecewiseLinearPath& x,
                                      const MultiIndex& index);

// Component-wise scaling: channel i multiplied by factors[i].
PiecewiseLinearPath scale(const PiecewiseLinearPath& x,
                          std::span<const double> factors);

// e_1 * e_2 * ... * e_n: n+1 points in n dimensions, node k = e_1+...+e_k.
PiecewiseLinearPath axis_path(std::size_t n);

// One segment per block, segment r moving simultaneously along the axes
// covered by block r. Singleton blocks reduce to axis_path.
PiecewiseLinearPath block_axis_path(const BlockPartition& partition);
PiecewiseLinearPath block_axis_path(std::span<const std::size_t> lengths);

// Sum of Euclidean segment lengths.
double one_variation(const PiecewiseLinearPath& x);

PiecewiseLinearPath reverse(const PiecewiseLinearPath& x);

// Restriction of x to [t0, t1], reparameterised to [0,1]. Endpoints inside a
// segment are linearly interpolated.
PiecewiseLinearPath subpath(const PiecewiseLinearPath& x, double t0, double t1);

}  // namespace sigkex
