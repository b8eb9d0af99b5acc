#include <doctest.h>

#include <cmath>

#include "fphist/error.hpp"
#include "fphist/estimator.hpp"
#include "oracles.hpp"

using namespace fphist;

namespace {

DensityEstimate line_example() {
  return DensityEstimate(build_gessaman(SampleSet(1, {0, 1, 2, 3}), 1));
}

}  // namespace

TEST_CASE("single leaf estimate is identically zero") {
  const DensityEstimate e(build_btc(oracle::random_cloud(2, 16, 1), 16));
  CHECK(e.values().size() == 1);
  CHECK(e.value(0) == 0.0);
  CHECK(e.evaluate(std::vector<double>{0.3, 0.1}) == 0.0);
  CHECK(e.self_integral() == 0.0);
  CHECK(e.tail_mass() == 1.0);
  CHECK(e.unbounded_leaf_count() == 1);
}

TEST_CASE("one-dimensional hand example") {
  const auto e = line_example();
  REQUIRE(e.values().size() == 4);
  CHECK(e.value(0) == 0.0);
  CHECK(e.value(1) == 0.25);
  CHECK(e.value(2) == 0.25);
  CHECK(e.value(3) == 0.0);
  CHECK(e.evaluate(std::vector<double>{1.0}) == 0.25);
  CHECK(e.evaluate(std::vector<double>{-7.0}) == 0.0);
  CHECK(e.self_integral() == 0.5);
  CHECK(e.tail_mass() == 0.5);
}

TEST_CASE("estimate is constant inside a bounded leaf") {
  const auto s = oracle::random_cloud(2, 36 * 4, 3);
  const DensityEstimate e(build_gessaman(s, 4));
  for (std::size_t r = 0; r < e.tree().leaf_count(); ++r) {
    const auto& cell = e.tree().leaves()[r].cell;
    if (!cell.bounded()) {
      CHECK(e.value(r) == 0.0);
      continue;
    }
    CHECK(e.value(r) == doctest::Approx(4.0 / (144.0 * cell.volume())));
    StreamRng rng(5, r);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x{rng.uniform(cell.lower(0), cell.upper(0)),
                            rng.uniform(cell.lower(1), cell.upper(1))};
      REQUIRE(e.evaluate(x) == e.value(r));
    }
  }
}

TEST_CASE("gessaman self integral counts interior cells") {
  const std::size_t N = 12, k = 5, M = k * N * N;
  const DensityEstimate e(build_gessaman(oracle::random_cloud(2, M, 8), k));
  const double expected = static_cast<double>((N - 2) * (N - 2) * k) / static_cast<double>(M);
  CHECK(e.self_integral() == doctest::Approx(expected).epsilon(1e-13));
  CHECK(e.unbounded_leaf_count() == N * N - (N - 2) * (N - 2));
}

TEST_CASE("mass identity") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed)
    for (std::size_t d : {1u, 2u, 3u}) {
      const auto s = oracle::random_cloud(d, 1024, seed);
      for (SplitRule rule : {SplitRule::gessaman, SplitRule::btc}) {
        const std::size_t k = rule == SplitRule::gessaman && d == 3 ? 128 : 16;
        const DensityEstimate e(build_partition(s, k, rule));
        CHECK(e.bounded_sample_count() + e.unbounded_leaf_count() * k == 1024);
        CHECK(e.self_integral() + static_cast<double>(e.unbounded_leaf_count() * k) / 1024.0 ==
              doctest::Approx(1.0).epsilon(1e-12));
        for (double v : e.values()) CHECK(v >= 0.0);
      }
    }
}

TEST_CASE("rebuilding gives identical values") {
  const auto s = oracle::random_cloud(3, 512, 4);
  const DensityEstimate a(build_btc(s, 8)), b(build_btc(s, 8));
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST_CASE("zero-volume bounded leaves are rejected") {
  // Cells of edge 1e-200 have a volume that underflows to zero.
  std::vector<double> c;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      c.push_back(i * 1e-200);
      c.push_back(j * 1e-200);
    }
  auto tree = build_gessaman(SampleSet(2, c), 1);
  CHECK_THROWS_AS(DensityEstimate(std::move(tree)), ZeroVolumeError);
}

TEST_CASE("slices") {
  const DensityEstimate zero(build_btc(oracle::random_cloud(2, 8, 1), 8));
  const std::vector<std::size_t> axes{0, 1};
  const std::vector<double> anchor{0, 0};
  auto s = slice(zero, axes, anchor, {linspace(-1, 1, 5), linspace(-2, 2, 3)});
  CHECK(s.values == std::vector<double>(15, 0.0));

  const auto four = DensityEstimate(build_gessaman(SampleSet(2, {1, 1, 2, 4, 3, 2, 4, 3}), 1));
  const auto gx = linspace(0, 5, 11), gy = linspace(0, 5, 7);
  s = slice(four, axes, anchor, {gx, gy});
  REQUIRE(s.values.size() == gx.size() * gy.size());
  for (std::size_t i = 0; i < gx.size(); ++i)
    for (std::size_t j = 0; j < gy.size(); ++j)
      CHECK(s.values[i * gy.size() + j] == four.evaluate(std::vector<double>{gx[i], gy[j]}));

  const std::vector<std::size_t> one{1};
  const std::vector<double> at{2.4, 0};
  s = slice(four, one, at, {gy});
  for (std::size_t j = 0; j < gy.size(); ++j)
    CHECK(s.values[j] == four.evaluate(std::vector<double>{2.4, gy[j]}));

  const std::vector<std::size_t> bad{2};
  CHECK_THROWS_AS(slice(four, bad, anchor, {gx}), ConfigError);
  const std::vector<std::size_t> same{0, 0};
  CHECK_THROWS_AS(slice(four, same, anchor, {gx, gx}), ConfigError);
  CHECK_THROWS_AS(slice(four, one, anchor, {{1.0, 0.0}}), ConfigError);
  const std::vector<double> short_anchor{0};
  CHECK_THROWS_AS(slice(four, one, short_anchor, {gx}), ConfigError);
}

TEST_CASE("linspace") {
  CHECK(linspace(0, 1, 5) == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(linspace(2, 3, 1) == std::vector<double>{2});
  CHECK(linspace(2, 3, 0).empty());
}
