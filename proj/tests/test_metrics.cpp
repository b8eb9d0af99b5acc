#include <doctest.h>

#include <cmath>

#include "fphist/error.hpp"
#include "fphist/metrics.hpp"
#include "oracles.hpp"

using namespace fphist;

namespace {

// Leaves (-inf,0.5) [0.5,1.5) [1.5,2.5) [2.5,inf), value 0.25 on the bounded two.
DensityEstimate line_example() {
  return DensityEstimate(build_gessaman(SampleSet(1, {0, 1, 2, 3}), 1));
}

double zero_fn(std::span<const double>) { return 0.0; }

}  // namespace

TEST_CASE("l1 distance of a function to itself is zero") {
  const DensityEstimate e(build_btc(oracle::random_cloud(2, 1024, 1), 32));
  const DensityFn f = [&](std::span<const double> x) { return e.evaluate(x); };
  const DensityFn g = [](std::span<const double> x) { return std::exp(-x[0] * x[0] - x[1] * x[1]); };
  CHECK(mc_l1_distance(e.tree(), f, f, 16, 0) == 0.0);
  CHECK(mc_l1_distance(e.tree(), g, g, 16, 0) == 0.0);
}

TEST_CASE("one-dimensional l1 hand values") {
  const auto e = line_example();
  const DensityFn bump = [](std::span<const double> x) {
    return x[0] >= 0.5 && x[0] < 1.5 ? 0.25 : 0.0;
  };
  CHECK(mc_l1_distance(e.tree(), bump, zero_fn, 16, 3) == doctest::Approx(0.25).epsilon(1e-15));

  const L1Error err = mc_l1_error(e, zero_fn, 1, 7);
  CHECK(err.bounded == 0.5);
  CHECK(err.ref_bounded_mass == 0.0);
  CHECK(err.ref_tail_mass() == 1.0);
  CHECK(err.total() == 1.5);
}

TEST_CASE("piecewise-constant pairs are exact with one point per leaf") {
  const auto s = oracle::random_cloud(2, 36 * 4, 3);
  const DensityEstimate a(build_gessaman(s, 4));
  const DensityFn f = [&](std::span<const double> x) { return a.evaluate(x); };
  const DensityFn twice = [&](std::span<const double> x) { return 2.0 * a.evaluate(x); };
  double expected = 0.0;
  for (std::size_t r = 0; r < a.tree().leaf_count(); ++r)
    if (a.tree().leaves()[r].cell.bounded())
      expected += a.value(r) * a.tree().leaves()[r].cell.volume();
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    CHECK(mc_l1_distance(a.tree(), f, twice, 1, seed) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(mc_l1_distance(a.tree(), f, zero_fn, 1, seed) ==
          doctest::Approx(a.self_integral()).epsilon(1e-13));
  }
}

TEST_CASE("l1 distance is symmetric and satisfies the triangle inequality") {
  const DensityEstimate e(build_btc(oracle::random_cloud(2, 2048, 4), 16));
  const DensityFn f = [](std::span<const double> x) { return std::exp(-x[0] * x[0]); };
  const DensityFn g = [](std::span<const double> x) { return 0.1 * std::abs(x[1]); };
  const DensityFn h = [](std::span<const double> x) { return std::sin(x[0] + x[1]) + 1.0; };
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(mc_l1_distance(e.tree(), f, g, 8, seed) == mc_l1_distance(e.tree(), g, f, 8, seed));
    const double fh = mc_l1_distance(e.tree(), f, h, 8, seed);
    const double fg = mc_l1_distance(e.tree(), f, g, 8, seed);
    const double gh = mc_l1_distance(e.tree(), g, h, 8, seed);
    CHECK(fh <= fg + gh + 1e-12);
  }
}

TEST_CASE("l1 estimates are seed-deterministic") {
  const DensityEstimate e(build_btc(oracle::random_cloud(3, 1024, 5), 16));
  const DensityFn ref = [](std::span<const double> x) { return ou_solution(0.5, 1.0, 3, 0.5, x); };
  CHECK(mc_l1_error(e, ref, 16, 11).bounded == mc_l1_error(e, ref, 16, 11).bounded);
  CHECK(mc_l1_error(e, ref, 16, 11).bounded != mc_l1_error(e, ref, 16, 12).bounded);
  CHECK_THROWS_AS(mc_l1_error(e, ref, 0, 11), ConfigError);
}

TEST_CASE("linf error") {
  // Zero estimate everywhere: linf is the largest reference value seen.
  const DensityEstimate zero(build_btc(oracle::random_cloud(2, 64, 1), 64));
  const HyperRect box({0, 0}, {1, 1});
  const DensityFn three = [](std::span<const double>) { return 3.0; };
  CHECK(mc_linf_error(zero, three, 4, box, 0) == 3.0);
  const DensityFn sum = [](std::span<const double> x) { return x[0] + x[1]; };
  const double sup = mc_linf_error(zero, sum, 20000, box, 0);
  CHECK(sup < 2.0);
  CHECK(sup > 1.95);

  const auto e = line_example();
  CHECK(mc_linf_error(e, zero_fn, 8, HyperRect({-10}, {10}), 0) == 0.25);
  // Box inside the left unbounded leaf: only the zero value is seen.
  CHECK(mc_linf_error(e, zero_fn, 8, HyperRect({-10}, {0.4}), 0) == 0.0);
  // A box touching the bounded leaves only on a face has no positive-volume overlap.
  CHECK(mc_linf_error(e, zero_fn, 8, HyperRect({-10}, {0.5}), 0) == 0.0);

  CHECK_THROWS_AS(mc_linf_error(e, zero_fn, 8, box, 0), ConfigError);
  constexpr double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(mc_linf_error(e, zero_fn, 8, HyperRect({-inf}, {1}), 0), ConfigError);
}

TEST_CASE("evaluate_errors reports tail mass from the estimate") {
  const std::size_t M = 1024;
  const auto s = oracle::random_cloud(2, M, 6);
  for (SplitRule rule : {SplitRule::gessaman, SplitRule::btc}) {
    const DensityEstimate e(build_partition(s, 16, rule));
    const DensityFn ref = [](std::span<const double> x) { return ou_solution(0.5, 1.0, 2, 0.5, x); };
    const auto box = default_evaluation_box(e, s, 0.5);
    const auto rep = evaluate_errors(e, ref, box, 16, 3);
    CHECK(rep.tail_mass ==
          doctest::Approx(static_cast<double>(e.unbounded_leaf_count() * 16) / M).epsilon(1e-12));
    CHECK(rep.l1_total == doctest::Approx(rep.l1 + rep.ref_tail_mass));
    CHECK(rep.l1 == mc_l1_error(e, ref, 16, 3).bounded);
    CHECK(rep.linf == mc_linf_error(e, ref, 16, box, 3));
    CHECK(rep.n_eval == 16);
    CHECK(rep.seed == 3);
  }
}

TEST_CASE("default evaluation box") {
  const auto e = line_example();
  const auto box = default_evaluation_box(e, SampleSet(1, {0, 1, 2, 3}), 0.25);
  CHECK(box.lower(0) == 0.25);
  CHECK(box.upper(0) == 2.75);

  // No bounded leaf: the sample bounding box, degenerate axes widened.
  const SampleSet pts(2, {0, 5, 2, 5, 1, 5, 0.5, 5});
  const DensityEstimate one(build_btc(pts, 4));
  const auto fb = default_evaluation_box(one, pts);
  CHECK(fb.lower(0) == 0.0);
  CHECK(fb.upper(0) == 2.0);
  CHECK(fb.lower(1) == 4.5);
  CHECK(fb.upper(1) == 5.5);
}

TEST_CASE("large cell fraction") {
  const auto e = line_example();
  const HyperRect box({-4}, {6});
  // Clipped lengths: 4.5, 1, 1, 3.5.
  CHECK(large_cell_fraction(e.tree(), box, 1.0) == 0.5);
  CHECK(large_cell_fraction(e.tree(), box, 0.5) == 1.0);
  CHECK(large_cell_fraction(e.tree(), box, 4.0) == 0.25);
  CHECK(large_cell_fraction(e.tree(), box, 5.0) == 0.0);
}

TEST_CASE("gessaman cell ratio") {
  CHECK(gessaman_cell_ratio(144, 4, 2) == doctest::Approx(36.0 / 144));
  CHECK(gessaman_cell_ratio(145, 4, 2) == doctest::Approx(49.0 / 145));
  CHECK(gessaman_cell_ratio(1 << 16, 1 << 8, 2) == doctest::Approx(256.0 / 65536));
  // Along k = sqrt(M) the ratio decreases strictly for d = 2.
  double prev = 2.0;
  for (int e = 4; e <= 30; e += 2) {
    const double M = std::ldexp(1.0, e);
    const double r = gessaman_cell_ratio(M, std::sqrt(M), 2);
    CHECK(r < prev);
    prev = r;
  }
  CHECK_THROWS_AS(gessaman_cell_ratio(0, 1, 2), ConfigError);
  CHECK_THROWS_AS(gessaman_cell_ratio(4, 1, 0), ConfigError);
}

TEST_CASE("consistency diagnostics") {
  const auto problem = make_problem("example1a");
  const HyperRect box({-4, -4}, {6, 6});
  const auto rows = consistency_diagnostics({{1024, 32}}, SplitRule::btc, problem, box, 1.0);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].samples == 1024);
  CHECK(rows[0].cell_count == 32);
  CHECK(rows[0].leaf_count == 32);
  CHECK(rows[0].leaves_per_sample == doctest::Approx(32.0 / 1024));
  CHECK(rows[0].l1.has_value());
  CHECK(*rows[0].l1_total >= *rows[0].l1);
  CHECK(rows[0].large_cell_fraction >= 0.0);
  CHECK(rows[0].large_cell_fraction <= 1.0);

  const auto two = consistency_diagnostics({{256, 16}, {1024, 32}}, SplitRule::gessaman, problem,
                                           box, 1.0, DiagnosticsOptions{10, 1, 4, 1, {true}});
  CHECK(two.size() == 2);

  CHECK_THROWS_AS(
      consistency_diagnostics({{1024, 32}, {1024, 64}}, SplitRule::btc, problem, box, 1.0),
      ScheduleError);
  CHECK_THROWS_AS(
      consistency_diagnostics({{1024, 32}, {4096, 32}}, SplitRule::btc, problem, box, 1.0),
      ScheduleError);
  CHECK_THROWS_AS(consistency_diagnostics({{1024, 32}}, SplitRule::btc, problem, box, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(consistency_diagnostics({{1024, 32}}, SplitRule::btc, problem,
                                          HyperRect({0}, {1}), 1.0),
                  ConfigError);
  // 1000 is not 8 * N^2 for any N.
  CHECK_THROWS_AS(consistency_diagnostics({{1000, 8}}, SplitRule::gessaman, problem, box, 1.0),
                  DivisibilityError);
}

TEST_CASE("steps_for_tau") {
  CHECK(steps_for_tau(0.5, 0.01) == 50);
  CHECK(steps_for_tau(1.0, 0.1) == 10);
  CHECK(steps_for_tau(0.2, 0.2) == 1);
  CHECK_THROWS_AS(steps_for_tau(1.0, 0.3), ConfigError);
  CHECK_THROWS_AS(steps_for_tau(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(steps_for_tau(1.0, 2.0), ConfigError);
}

TEST_CASE("tau convergence probe") {
  const auto problem = make_problem("example1a");
  const auto single = tau_convergence_probe(problem, 1024, 32, SplitRule::btc, {0.1}, 0);
  REQUIRE(single.rows.size() == 1);
  CHECK(single.rows[0].steps == 5);
  CHECK_FALSE(single.plateau_tau.has_value());

  const auto probe = tau_convergence_probe(problem, 1024, 32, SplitRule::btc, {0.1, 0.05}, 0);
  REQUIRE(probe.rows.size() == 2);
  CHECK(probe.rows[1].steps == 10);
  if (probe.rows[1].l1_total >= probe.rows[0].l1_total)
    CHECK(probe.plateau_tau == 0.1);
  else
    CHECK_FALSE(probe.plateau_tau.has_value());

  CHECK_THROWS_AS(tau_convergence_probe(problem, 1024, 32, SplitRule::btc, {0.05, 0.1}, 0),
                  ConfigError);
  CHECK_THROWS_AS(tau_convergence_probe(problem, 1024, 32, SplitRule::btc, {0.3}, 0), ConfigError);
  CHECK_THROWS_AS(
      tau_convergence_probe(make_problem("example3"), 1024, 32, SplitRule::btc, {0.1}, 0),
      ConfigError);
}

TEST_CASE("euler flow errors on x' = -x") {
  SdeProblem p;
  p.id = "decay";
  p.dim = 2;
  p.horizon = 1.0;
  p.drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = -x[0];
    out[1] = -x[1];
  };
  p.diffusion = [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  p.initial = InitialDensity::point_mass({1.0, 2.0});
  const auto exact = [](std::span<const double> x) {
    return std::vector<double>{x[0] * std::exp(-1.0), x[1] * std::exp(-1.0)};
  };
  const auto rows = euler_flow_errors(p, exact, {0.1, 0.05}, 8, 0);
  REQUIRE(rows.size() == 2);
  // Euler gives (1 - tau)^J x0.
  const double r5 = std::sqrt(5.0);
  CHECK(rows[0].error == doctest::Approx(r5 * std::abs(std::pow(0.9, 10) - std::exp(-1.0))));
  CHECK(rows[1].error == doctest::Approx(r5 * std::abs(std::pow(0.95, 20) - std::exp(-1.0))));
  CHECK(rows[0].error / r5 == doctest::Approx(0.0192).epsilon(1e-3));
  CHECK(rows[1].error / r5 == doctest::Approx(0.00939).epsilon(1e-3));
  CHECK_FALSE(rows[0].ratio.has_value());
  CHECK(*rows[1].ratio == doctest::Approx(2.045).epsilon(1e-3));
}
