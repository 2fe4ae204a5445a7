#include "doctest.h"
#include "sigkex/chen.hpp"
#include "sigkex/path.hpp"
#include "testutil.hpp"

using namespace sigkex;

TEST_SUITE_BEGIN("path");

TEST_CASE("restrict permutes, duplicates and preserves length") {
  PiecewiseLinearPath x{{0.0, 1.0}, {2.0, 3.0}, {4.0, 7.0}};
  auto swapped = restrict_channels(x, MultiIndex{2, 1});
  CHECK(swapped.dim() == 2);
  CHECK(swapped.at(1, 0) == 3.0);
  CHECK(swapped.at(1, 1) == 2.0);

  auto doubled = restrict_channels(x, MultiIndex{1, 1});
  CHECK(doubled.at(2, 0) == 4.0);
  CHECK(doubled.at(2, 1) == 4.0);

  auto y = testutil::random_path(5, 3, 1);
  auto r = restrict_channels(y, MultiIndex{3, 1, 3});
  CHECK(r.dim() == 3);
  CHECK(r.num_segments() == 5);
  CHECK_THROWS_AS(restrict_channels(x, MultiIndex{3}), std::invalid_argument);
}

TEST_CASE("scale acts channel-wise") {
  PiecewiseLinearPath x{{0.0, 0.0}, {1.0, 2.0}};
  const std::vector<double> ones{1.0, 1.0};
  auto same = scale(x, ones);
  CHECK(same.at(1, 0) == 1.0);
  CHECK(same.at(1, 1) == 2.0);

  const std::vector<double> zero{0.0, 0.0};
  auto flat = scale(x, zero);
  CHECK(flat.increment(0, 0) == 0.0);
  CHECK(flat.increment(0, 1) == 0.0);

  const std::vector<double> mixed{3.0, -1.0};
  auto m = scale(x, mixed);
  CHECK(m.increment(0, 0) == 3.0);
  CHECK(m.increment(0, 1) == -2.0);

  const std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(scale(x, wrong), std::invalid_argument);
}

TEST_CASE("axis path moves along successive axes") {
  auto z1 = axis_path(1);
  CHECK(z1.num_points() == 2);
  CHECK(z1.at(0, 0) == 0.0);
  CHECK(z1.at(1, 0) == 1.0);

  auto z2 = axis_path(2);
  CHECK(z2.at(1, 0) == 1.0);
  CHECK(z2.at(1, 1) == 0.0);
  CHECK(z2.at(2, 0) == 1.0);
  CHECK(z2.at(2, 1) == 1.0);

  auto z3 = axis_path(3);
  CHECK(coefficient_chen(z3, MultiIndex{1, 2, 3}) == doctest::Approx(1.0));
  CHECK(coefficient_chen(z3, MultiIndex{2, 1, 3}) == doctest::Approx(0.0));
}

TEST_CASE("block axis path merges blocks into simultaneous moves") {
  BlockPartition singles{MultiIndex{1}, MultiIndex{2}, MultiIndex{3}};
  auto z = block_axis_path(singles);
  auto axis = axis_path(3);
  CHECK(z.raw().size() == axis.raw().size());
  for (std::size_t i = 0; i < z.raw().size(); ++i)
    CHECK(z.raw()[i] == axis.raw()[i]);

  BlockPartition two{MultiIndex{1, 2}, MultiIndex{3}};
  auto zb = block_axis_path(two);
  CHECK(zb.num_segments() == 2);
  CHECK(zb.increment(0, 0) == 1.0);
  CHECK(zb.increment(0, 1) == 1.0);
  CHECK(zb.increment(0, 2) == 0.0);
  CHECK(zb.increment(1, 2) == 1.0);
  CHECK(coefficient_chen(zb, MultiIndex{1, 2, 3}) == doctest::Approx(0.5));
  CHECK(coefficient_chen(zb, MultiIndex{2, 1, 3}) == doctest::Approx(0.5));
  CHECK(coefficient_chen(zb, MultiIndex{1, 3, 2}) == doctest::Approx(0.0));

  BlockPartition whole{MultiIndex{1, 2, 3}};
  auto zw = block_axis_path(whole);
  CHECK(zw.num_segments() == 1);
  for (const auto& J : multiset_permutations(MultiIndex{1, 2, 3}))
    CHECK(coefficient_chen(zw, J) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("one variation") {
  PiecewiseLinearPath seg{{0.0, 0.0}, {3.0, 4.0}};
  CHECK(one_variation(seg) == doctest::Approx(5.0));
  PiecewiseLinearPath flat{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
  CHECK(one_variation(flat) == 0.0);
  CHECK(one_variation(axis_path(3)) == doctest::Approx(3.0));
}

TEST_CASE("reverse") {
  auto x = testutil::random_path(7, 2, 3);
  auto rr = reverse(reverse(x));
  for (std::size_t i = 0; i < x.raw().size(); ++i)
    CHECK(rr.raw()[i] == x.raw()[i]);

  auto z = reverse(axis_path(2));
  CHECK(z.at(0, 0) == 1.0);
  CHECK(z.at(0, 1) == 1.0);
  CHECK(z.at(1, 0) == 1.0);
  CHECK(z.at(1, 1) == 0.0);
  CHECK(z.at(2, 0) == 0.0);

  CHECK(one_variation(reverse(x)) == doctest::Approx(one_variation(x)));
}

TEST_CASE("restrict and scale commute") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto x = testutil::random_path(6, 3, seed);
    const std::vector<double> factors{0.5, -2.0, 3.0};
    MultiIndex I{2, 1, 2};
    auto a = restrict_channels(scale(x, factors), I);
    const std::vector<double> restricted_factors{factors[1], factors[0],
                                                 factors[1]};
    auto b = scale(restrict_channels(x, I), restricted_factors);
    REQUIRE(a.raw().size() == b.raw().size());
    for (std::size_t i = 0; i < a.raw().size(); ++i)
      CHECK(a.raw()[i] == doctest::Approx(b.raw()[i]));
  }
}

TEST_CASE("scaling bounds the 1-variation") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto x = testutil::random_path(10, 3, seed + 100);
    const std::vector<double> factors{-0.8, 0.5, 1.5};
    CHECK(one_variation(scale(x, factors)) <=
          1.5 * one_variation(x) + 1e-12);
  }
}

TEST_CASE("axis path 1-variation is n; singleton blocks equal axis") {
  for (std::size_t n = 1; n <= 6; ++n) {
    CHECK(one_variation(axis_path(n)) == doctest::Approx(double(n)));
    std::vector<std::size_t> lens(n, 1);
    auto z = block_axis_path(lens);
    auto a = axis_path(n);
    for (std::size_t i = 0; i < a.raw().size(); ++i)
      CHECK(z.raw()[i] == a.raw()[i]);
  }
}

TEST_CASE("subpath slices and interpolates") {
  PiecewiseLinearPath x{{0.0}, {1.0}, {3.0}, {2.0}};
  auto mid = subpath(x, 1.0 / 3.0, 2.0 / 3.0);
  CHECK(mid.num_segments() == 1);
  CHECK(mid.at(0, 0) == doctest::Approx(1.0));
  CHECK(mid.at(1, 0) == doctest::Approx(3.0));

  auto cut = subpath(x, 0.5, 1.0);
  CHECK(cut.at(0, 0) == doctest::Approx(2.0));
  CHECK(cut.num_segments() == 2);
  CHECK_THROWS_AS(subpath(x, 0.5, 0.5), std::invalid_argument);
}

TEST_CASE("invalid paths are rejected") {
  CHECK_THROWS_AS(PiecewiseLinearPath(std::vector<double>{1.0}, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseLinearPath({{1.0}, {std::nan("")}}),
                  std::invalid_argument);
}

TEST_SUITE_END();
