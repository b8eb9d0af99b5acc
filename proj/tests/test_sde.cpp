#include <doctest.h>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fphist/error.hpp"
#include "fphist/sde.hpp"

using namespace fphist;

namespace {

SdeProblem linear_problem(std::size_t d, double beta, double sigma, InitialDensity p0,
                          double T = 1.0) {
  SdeProblem p;
  p.id = "linear";
  p.dim = d;
  p.horizon = T;
  p.drift = [beta](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = beta - x[i];
  };
  p.diffusion = [d, sigma](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = sigma;
  };
  p.initial = std::move(p0);
  return p;
}

SdeProblem constant_problem(std::vector<double> b, double sigma, InitialDensity p0) {
  const std::size_t d = b.size();
  SdeProblem p;
  p.id = "constant";
  p.dim = d;
  p.horizon = 1.0;
  p.drift = [b](std::span<const double>, std::span<double> out) {
    std::copy(b.begin(), b.end(), out.begin());
  };
  p.diffusion = [d, sigma](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < d; ++i) out[i * d + i] = sigma;
  };
  p.initial = std::move(p0);
  return p;
}

}  // namespace

TEST_CASE("euler_step examples") {
  auto zero = constant_problem({0.0, 0.0}, 0.0, InitialDensity::point_mass({0, 0}));
  CHECK(euler_step(std::vector<double>{1, 2}, 0.1, zero, std::vector<double>{5, 5}) ==
        std::vector<double>{1, 2});

  auto drift = constant_problem({3.0}, 0.0, InitialDensity::point_mass({0}));
  CHECK(euler_step(std::vector<double>{0}, 0.25, drift, std::vector<double>{0})[0] == 0.75);

  auto decay = linear_problem(1, 0.0, 0.0, InitialDensity::point_mass({1}));
  auto y = euler_step(std::vector<double>{1.0}, 0.5, decay, std::vector<double>{0});
  y = euler_step(y, 0.5, decay, std::vector<double>{0});
  CHECK(y[0] == 0.25);
}

TEST_CASE("euler_step applies the full diffusion matrix") {
  SdeProblem p = constant_problem({1.0, -1.0}, 0.0, InitialDensity::point_mass({0, 0}));
  p.diffusion = [](std::span<const double>, std::span<double> out) {
    out[0] = 1.0;
    out[1] = 2.0;
    out[2] = 0.0;
    out[3] = 3.0;
  };
  const auto y = euler_step(std::vector<double>{1, 1}, 0.5, p, std::vector<double>{0.1, 0.2});
  CHECK(y[0] == doctest::Approx(1 + 0.5 + 0.1 + 0.4));
  CHECK(y[1] == doctest::Approx(1 - 0.5 + 0.6));
}

TEST_CASE("euler_step reports the offending point on blow-up") {
  SdeProblem p = constant_problem({0.0}, 0.0, InitialDensity::point_mass({0}));
  p.drift = [](std::span<const double> x, std::span<double> out) { out[0] = std::log(x[0]); };
  CHECK_THROWS_AS(euler_step(std::vector<double>{-1.5}, 0.1, p, std::vector<double>{0}),
                  NumericalBlowup);
  try {
    euler_step(std::vector<double>{-1.5}, 0.1, p, std::vector<double>{0});
  } catch (const NumericalBlowup& e) {
    CHECK(std::string(e.what()).find("-1.5") != std::string::npos);
    CHECK(e.kind() == "NumericalBlowup");
  }
}

TEST_CASE("simulate propagates blow-up with the trajectory index") {
  // Finite on the support of p_0, so only the time stepping reaches the NaN region.
  auto p = linear_problem(1, 0.0, 0.0, InitialDensity::uniform_hypercube({0.0}, {1.0}));
  p.drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] > 1.5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  try {
    simulate_terminal(p, EulerConfig{4, 200, 1});
    FAIL("expected NumericalBlowup");
  } catch (const NumericalBlowup& e) {
    CHECK(std::string(e.what()).find("trajectory") != std::string::npos);
  }
}

TEST_CASE("degenerate point mass with zero dynamics stays put") {
  auto p = constant_problem({0, 0, 0}, 0.0, InitialDensity::gaussian({1, -2, 3}, std::vector<double>(9, 0.0)));
  const auto s = simulate_terminal(p, EulerConfig{10, 50, 3});
  REQUIRE(s.size() == 50);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.coord(i, 0) == 1.0);
    CHECK(s.coord(i, 1) == -2.0);
    CHECK(s.coord(i, 2) == 3.0);
  }
  CHECK(s.provenance().seed == 3);
  CHECK(s.provenance().steps == 10);
  CHECK(s.provenance().problem == "constant");
}

TEST_CASE("constant diffusion from a point mass has covariance T s^2") {
  const double s = 0.7, T = 1.0;
  const std::size_t M = 40000;
  auto p = constant_problem({0, 0}, s, InitialDensity::point_mass({0, 0}));
  const auto out = simulate_terminal(p, EulerConfig{8, M, 11});
  const auto cov = out.covariance();
  const double var = T * s * s;
  const double se = var * std::sqrt(2.0 / static_cast<double>(M));
  CHECK(std::abs(cov[0] - var) < 5 * se);
  CHECK(std::abs(cov[3] - var) < 5 * se);
  CHECK(std::abs(cov[1]) < 5 * var / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("linear problem matches the exact law of the Euler chain") {
  // Independent oracle: affine recursion for mean and variance of
  // Y <- (1 - tau) Y + tau beta + sqrt(2) eps dW.
  const double alpha = 0.5, eps = 1.0, beta = 1.0, T = 0.5;
  const std::size_t J = 50, M = 20000;
  auto p = linear_problem(2, beta, std::sqrt(2.0) * eps,
                          InitialDensity::isotropic_gaussian(2, alpha), T);
  const double tau = T / J;
  double m = 0.0, c = alpha;
  for (std::size_t j = 0; j < J; ++j) {
    m = (1 - tau) * m + tau * beta;
    c = (1 - tau) * (1 - tau) * c + 2 * eps * eps * tau;
  }
  const auto s = simulate_terminal(p, EulerConfig{J, M, 5});
  const auto mean = s.mean();
  const auto cov = s.covariance();
  for (std::size_t a = 0; a < 2; ++a) {
    CHECK(std::abs(mean[a] - m) < 5 * std::sqrt(c / M));
    CHECK(std::abs(cov[a * 2 + a] - c) < 5 * c * std::sqrt(2.0 / M));
  }
}

TEST_CASE("sigma = 0 reproduces the explicit Euler recursion exactly") {
  const double beta = 1.0, T = 1.0;
  const std::size_t J = 20, M = 64;
  auto p = linear_problem(2, beta, 0.0, InitialDensity::isotropic_gaussian(2, 0.3), T);
  const auto start = sample_initial(p.initial, M, 9);
  const auto end = simulate_terminal(p, EulerConfig{J, M, 9});
  const double tau = T / J;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t a = 0; a < 2; ++a) {
      double y = start.coord(i, a);
      for (std::size_t j = 0; j < J; ++j) y = y + tau * (beta - y);
      CHECK(end.coord(i, a) == doctest::Approx(y).epsilon(1e-14));
    }
}

TEST_CASE("simulation is bit-identical across worker counts") {
  auto p = linear_problem(3, 1.0, 0.5, InitialDensity::isotropic_gaussian(3, 0.5));
  const EulerConfig cfg{17, 1001, 123};
  const auto a = simulate_terminal(p, cfg, 1);
  const auto b = simulate_terminal(p, cfg, 3);
  const auto c = simulate_terminal(p, cfg, 8);
  CHECK(std::equal(a.coords().begin(), a.coords().end(), b.coords().begin()));
  CHECK(std::equal(a.coords().begin(), a.coords().end(), c.coords().begin()));
  const auto other = simulate_terminal(p, EulerConfig{17, 1001, 124});
  CHECK_FALSE(std::equal(a.coords().begin(), a.coords().end(), other.coords().begin()));
}

TEST_CASE("snapshots retain intermediate steps") {
  auto p = linear_problem(2, 1.0, 0.4, InitialDensity::isotropic_gaussian(2, 0.5));
  const EulerConfig cfg{10, 300, 4};
  const auto sim = simulate(p, cfg, SimulationOptions{2, {10, 0, 5}});
  REQUIRE(sim.snapshots.size() == 3);
  const auto start = sample_initial(p.initial, 300, 4);
  const auto& s0 = sim.snapshots.at(0);
  CHECK(std::equal(s0.coords().begin(), s0.coords().end(), start.coords().begin()));
  const auto& sJ = sim.snapshots.at(10);
  CHECK(std::equal(sJ.coords().begin(), sJ.coords().end(), sim.terminal.coords().begin()));
  CHECK_THROWS_AS(simulate(p, cfg, SimulationOptions{1, {11}}), ConfigError);
}

TEST_CASE("wiener increments have variance tau") {
  const double tau = 0.02;
  const std::size_t d = 3, trajectories = 200, steps = 100;
  double s2 = 0.0;
  std::size_t n = 0;
  std::vector<double> dw(d);
  for (std::size_t m = 0; m < trajectories; ++m) {
    TrajectoryNoise noise(77, m);
    for (std::size_t j = 0; j < steps; ++j) {
      noise.increment(tau, dw);
      for (double v : dw) s2 += v * v;
      n += d;
    }
  }
  const double var = s2 / static_cast<double>(n);
  CHECK(std::abs(var - tau) < 5 * tau * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST_CASE("sample_initial examples") {
  const std::size_t m = 100000;
  const auto g = sample_initial(InitialDensity::gaussian({0, 0}, {1, 0, 0, 1}), m, 1);
  for (double v : g.mean()) CHECK(std::abs(v) < 5.0 / std::sqrt(static_cast<double>(m)));

  const auto u = sample_initial(
      InitialDensity::uniform_hypercube(std::vector<double>(8, -0.5), std::vector<double>(8, 0.5)),
      5000, 2);
  for (double v : u.coords()) {
    CHECK(v >= -0.5);
    CHECK(v <= 0.5);
  }

  const auto a = sample_initial(InitialDensity::isotropic_gaussian(2, 0.5), m, 3);
  const auto cov = a.covariance();
  const double se = 0.5 * std::sqrt(2.0 / static_cast<double>(m));
  CHECK(std::abs(cov[0] - 0.5) < 5 * se);
  CHECK(std::abs(cov[3] - 0.5) < 5 * se);

  const auto again = sample_initial(InitialDensity::isotropic_gaussian(2, 0.5), m, 3);
  CHECK(std::equal(a.coords().begin(), a.coords().end(), again.coords().begin()));
}

TEST_CASE("correlated gaussian initial law") {
  const std::vector<double> cov{2.0, 0.6, 0.6, 0.5};
  const auto s = sample_initial(InitialDensity::gaussian({1.0, -1.0}, cov), 100000, 8);
  const auto c = s.covariance();
  CHECK(c[0] == doctest::Approx(2.0).epsilon(0.03));
  CHECK(c[1] == doctest::Approx(0.6).epsilon(0.05));
  CHECK(c[3] == doctest::Approx(0.5).epsilon(0.03));
  CHECK(s.mean()[0] == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("initial density pdfs") {
  const auto g = InitialDensity::isotropic_gaussian(2, 0.5);
  CHECK(g.pdf(std::vector<double>{0, 0}) == doctest::Approx(1.0 / M_PI));
  const auto u = InitialDensity::uniform_hypercube({0, 0}, {2, 0.5});
  CHECK(u.pdf(std::vector<double>{1, 0.25}) == doctest::Approx(1.0));
  CHECK(u.pdf(std::vector<double>{3, 0.25}) == 0.0);
  const auto pm = InitialDensity::point_mass({1.0});
  CHECK_FALSE(pm.has_pdf());
  CHECK_THROWS_AS(pm.pdf(std::vector<double>{1.0}), ConfigError);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(InitialDensity::gaussian({0, 0}, {1, 0.5, 0, 1}), ConfigError);
  CHECK_THROWS_AS(InitialDensity::gaussian({0, 0}, {1, 2, 2, 1}), ConfigError);
  CHECK_THROWS_AS(InitialDensity::gaussian({0, 0}, {1, 0, 0}), ConfigError);
  CHECK_THROWS_AS(InitialDensity::uniform_hypercube({0, 1}, {1, 1}), ConfigError);
  CHECK_THROWS_AS(InitialDensity::isotropic_gaussian(2, -1.0), ConfigError);
  CHECK_THROWS_AS((EulerConfig{0, 10, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((EulerConfig{10, 0, 0}.validate()), ConfigError);
  CHECK_THROWS_AS(SampleSet(2, {1.0, std::nan("")}), ConfigError);
  CHECK_THROWS_AS(SampleSet(2, {1.0, 2.0, 3.0}), ConfigError);

  auto p = linear_problem(2, 1.0, 1.0, InitialDensity::isotropic_gaussian(3, 1.0));
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.initial = InitialDensity::isotropic_gaussian(2, 1.0);
  p.horizon = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.horizon = 1.0;
  CHECK_NOTHROW(p.validate());
  p.diffusion = [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), std::numeric_limits<double>::infinity());
  };
  CHECK_THROWS_AS(p.validate(), NumericalBlowup);
}

TEST_CASE("tau is derived from T and J") {
  CHECK(EulerConfig{50, 1, 0}.tau(0.5) == doctest::Approx(0.01));
}
