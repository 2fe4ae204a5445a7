#include "sigkex/chen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sigkex/budget.hpp"

namespace sigkex {

namespace {

std::size_t total_elements(std::size_t dim, std::size_t level) {
  std::size_t total = 0, sz = 1;
  for (std::size_t k = 0; k <= level; ++k) {
    total += sz;
    if (k < level) {
      if (sz > budgets::max_tensor_elements() / dim) return SIZE_MAX;
      sz *= dim;
    }
  }
  return total;
}

void check_tensor_budget(std::size_t dim, std::size_t level) {
  budgets::check(total_elements(dim, level), budgets::max_tensor_elements(),
                 "dense signature of dimension " + std::to_string(dim) +
                     " at level " + std::to_string(level));
}

// Segment endpoint index for t in [0,1]; throws if t is not a node.
std::size_t segment_endpoint(const PiecewiseLinearPath& x, double t) {
  const double L = static_cast<double>(x.num_segments());
  const double u = t * L;
  const double k = std::round(u);
  if (k < 0.0 || k > L || std::abs(u - k) > 1e-9 * std::max(1.0, L))
    throw std::invalid_argument("t_end is not a segment endpoint");
  return static_cast<std::size_t>(k);
}

}  // namespace

std::size_t level_size(std::size_t dim, std::size_t level) {
  std::size_t sz = 1;
  for (std::size_t k = 0; k < level; ++k) sz *= dim;
  return sz;
}

double TruncatedSignature::coefficient(const MultiIndex& index) const {
  index.validate(dim);
  if (index.size() > truncation_level())
    throw std::invalid_argument("coefficient level exceeds truncation");
  std::size_t flat = 0;
  for (int e : index.entries)
    flat = flat * dim + (static_cast<std::size_t>(e) - 1);
  return levels[index.size()][flat];
}

TruncatedSignature tensor_product(const TruncatedSignature& a,
                                  const TruncatedSignature& b) {
  if (a.dim != b.dim || a.levels.size() != b.levels.size())
    throw std::invalid_argument("tensor product shape mismatch");
  const std::size_t N = a.truncation_level();
  TruncatedSignature out;
  out.dim = a.dim;
  out.levels.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) {
    auto& lvl = out.levels[k];
    lvl.assign(level_size(a.dim, k), 0.0);
    for (std::size_t i = 0; i <= k; ++i) {
      const auto& ai = a.levels[i];
      const auto& bj = b.levels[k - i];
      std::size_t pos = 0;
      for (double av : ai)
        for (double bv : bj) lvl[pos++] += av * bv;
    }
  }
  return out;
}

TruncatedSignature segment_exponential(std::span<const double> increment,
                                       std::size_t level) {
  TruncatedSignature out;
  out.dim = increment.size();
  out.levels.resize(level + 1);
  out.levels[0] = {1.0};
  for (std::size_t k = 1; k <= level; ++k) {
    const auto& prev = out.levels[k - 1];
    auto& cur = out.levels[k];
    cur.resize(prev.size() * out.dim);
    const double inv = 1.0 / static_cast<double>(k);
    std::size_t pos = 0;
    for (double p : prev)
      for (double v : increment) cur[pos++] = p * v * inv;
  }
  return out;
}

TruncatedSignature truncated_signature(const PiecewiseLinearPath& x,
                                       std::size_t level) {
  check_tensor_budget(x.dim(), level);
  const std::size_t d = x.dim();
  TruncatedSignature sig;
  sig.dim = d;
  sig.levels.resize(level + 1);
  sig.levels[0] = {1.0};
  for (std::size_t k = 1; k <= level; ++k)
    sig.levels[k].assign(level_size(d, k), 0.0);

  std::vector<double> inc(d);
  for (std::size_t s = 0; s < x.num_segments(); ++s) {
    for (std::size_t c = 0; c < d; ++c) inc[c] = x.increment(s, c);
    TruncatedSignature seg = segment_exponential(inc, level);
    // In-place product sig <- sig (x) seg, filling levels top-down so that
    // lower levels are still the previous value when read.
    for (std::size_t k = level; k >= 1; --k) {
      auto& lvl = sig.levels[k];
      for (std::size_t i = 0; i < k; ++i) {
        const auto& lo = sig.levels[i];
        const auto& hi = seg.levels[k - i];
        if (i == 0) {
          // lo is the scalar 1
          for (std::size_t j = 0; j < lvl.size(); ++j) lvl[j] += hi[j];
        } else {
          std::size_t pos = 0;
          for (double lv : lo)
            for (double hv : hi) lvl[pos++] += lv * hv;
        }
      }
    }
  }
  return sig;
}

std::vector<std::vector<double>> coefficient_chen_table(
    const PiecewiseLinearPath& x, const MultiIndex& index) {
  index.validate(x.dim());
  const std::size_t n = index.size();
  const std::size_t L = x.num_segments();
  std::vector<double> invfact(n + 1, 1.0);
  for (std::size_t r = 2; r <= n; ++r)
    invfact[r] = invfact[r - 1] / static_cast<double>(r);

  std::vector<std::vector<double>> table;
  table.reserve(L + 1);
  std::vector<double> c(n + 1, 0.0), next(n + 1, 0.0);
  c[0] = 1.0;
  table.push_back(c);
  std::vector<double> v(n);
  for (std::size_t s = 0; s < L; ++s) {
    for (std::size_t k = 0; k < n; ++k)
      v[k] = x.increment(s, static_cast<std::size_t>(index[k]) - 1);
    next[0] = 1.0;
    for (std::size_t m = 1; m <= n; ++m) {
      // c[k] * v_{i_{k+1}} ... v_{i_m} / (m-k)! summed over k = 0..m
      double acc = c[m];
      double prod = 1.0;
      for (std::size_t k = m; k-- > 0;) {
        prod *= v[k];
        acc += c[k] * prod * invfact[m - k];
      }
      next[m] = acc;
    }
    std::swap(c, next);
    table.push_back(c);
  }
  return table;
}

std::vector<double> coefficient_chen_prefixes(const PiecewiseLinearPath& x,
                                              const MultiIndex& index,
                                              double t_end) {
  index.validate(x.dim());
  const std::size_t stop = segment_endpoint(x, t_end);
  const std::size_t n = index.size();
  std::vector<double> invfact(n + 1, 1.0);
  for (std::size_t r = 2; r <= n; ++r)
    invfact[r] = invfact[r - 1] / static_cast<double>(r);

  std::vector<double> c(n + 1, 0.0), next(n + 1, 0.0), v(n);
  c[0] = 1.0;
  for (std::size_t s = 0; s < stop; ++s) {
    for (std::size_t k = 0; k < n; ++k)
      v[k] = x.increment(s, static_cast<std::size_t>(index[k]) - 1);
    next[0] = 1.0;
    for (std::size_t m = 1; m <= n; ++m) {
      double acc = c[m];
      double prod = 1.0;
      for (std::size_t k = m; k-- > 0;) {
        prod *= v[k];
        acc += c[k] * prod * invfact[m - k];
      }
      next[m] = acc;
    }
    std::swap(c, next);
  }
  return c;
}

double coefficient_chen(const PiecewiseLinearPath& x, const MultiIndex& index,
                        double t_end) {
  return coefficient_chen_prefixes(x, index, t_end).back();
}

double truncated_kernel(const PiecewiseLinearPath& x,
                        const PiecewiseLinearPath& y, std::size_t level) {
  if (x.dim() != y.dim())
    throw std::invalid_argument("kernel paths must share a dimension");
  TruncatedSignature sx = truncated_signature(x, level);
  TruncatedSignature sy = truncated_signature(y, level);
  double total = 0.0;
  for (std::size_t k = 0; k <= level; ++k) {
    double dot = 0.0;
    const auto& a = sx.levels[k];
    const auto& b = sy.levels[k];
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    total += dot;
  }
  return total;
}

double multiset_permutation_count(const MultiIndex& index) {
  std::vector<int> sorted = index.entries;
  std::sort(sorted.begin(), sorted.end());
  double count = 1.0;
  for (std::size_t k = 2; k <= sorted.size(); ++k)
    count *= static_cast<double>(k);
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      for (std::size_t k = 2; k <= run; ++k)
        count /= static_cast<double>(k);
      run = 1;
    }
  }
  return count;
}

std::vector<MultiIndex> multiset_permutations(const MultiIndex& index) {
  const double count = multiset_permutation_count(index);
  if (count > static_cast<double>(budgets::max_permutations()))
    throw BudgetError("anagram class of size " + std::to_string(count) +
                      " exceeds the permutation budget");
  std::vector<int> sorted = index.entries;
  std::sort(sorted.begin(), sorted.end());
  std::vector<MultiIndex> out;
  do {
    out.push_back(MultiIndex{sorted});
  } while (std::next_permutation(sorted.begin(), sorted.end()));
  return out;
}

double anagram_sum_oracle(const PiecewiseLinearPath& x,
                          const MultiIndex& index) {
  index.validate(x.dim());
  double total = 0.0;
  for (const auto& perm : multiset_permutations(index))
    total += coefficient_chen(x, perm);
  return total;
}

}  // namespace sigkex
