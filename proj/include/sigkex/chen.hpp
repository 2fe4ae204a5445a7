#pragma once

#include <cstddef>
#include <vector>

#include "sigkex/path.hpp"

namespace sigkex {

// Dense truncated signature: levels 0..N, level k stored flat in row-major
// multi-index order with shape d^k. Level 0 is the scalar 1.
struct TruncatedSignature {
  std::size_t dim = 0;
  std::vector<std::vector<double>> levels;

  std::size_t truncation_level() const { return levels.size() - 1; }

  // Entry S(x)^I; |I| must not exceed the truncation level.
  double coefficient(const MultiIndex& index) const;
};

std::size_t level_size(std::size_t dim, std::size_t level);

// Truncated tensor product of two truncated signatures of equal dimension
// and depth: (a (x) b)_k = sum_{i+j=k} a_i (x) b_j.
TruncatedSignature tensor_product(const TruncatedSignature& a,
                                  const TruncatedSignature& b);

// Signature of a linear segment: tensor exponential of the increment.
TruncatedSignature segment_exponential(std::span<const double> increment,
                                       std::size_t level);

// Dense signature of x up to `level`, as the product of the segment
// exponentials. O(L d^N); guarded by the tensor element budget.
TruncatedSignature truncated_signature(const PiecewiseLinearPath& x,
                                       std::size_t level);

// Single coefficient S(x)^I over [0, t_end] by the prefix recursion over
// segments, O(L n^2). t_end must be a segment endpoint (default 1).
double coefficient_chen(const PiecewiseLinearPath& x, const MultiIndex& index,
                        double t_end = 1.0);

// Prefix coefficients S(x)^{(i_1..i_k)} over [0, t_end] for k = 0..n.
std::vector<double> coefficient_chen_prefixes(const PiecewiseLinearPath& x,
                                              const MultiIndex& index,
                                              double t_end = 1.0);

// Full sub-coefficient table: rows[s][k] = S(x)^{(i_1..i_k)} over [0, s/L].
std::vector<std::vector<double>> coefficient_chen_table(
    const PiecewiseLinearPath& x, const MultiIndex& index);

// <S(x), S(y)> truncated at level n, from two dense signatures.
double truncated_kernel(const PiecewiseLinearPath& x,
                        const PiecewiseLinearPath& y, std::size_t level);

// Distinct permutations of the entries of `index`, lexicographic order.
std::vector<MultiIndex> multiset_permutations(const MultiIndex& index);

// Number of distinct permutations, n!/(m_1!...m_r)!, as a double.
double multiset_permutation_count(const MultiIndex& index);

// Sum of S(x)^J over the anagram class of I, by direct enumeration.
double anagram_sum_oracle(const PiecewiseLinearPath& x,
                          const MultiIndex& index);

}  // namespace sigkex
