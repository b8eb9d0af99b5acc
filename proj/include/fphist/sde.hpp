#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fphist/rng.hpp"

namespace fphist {

/// Drift b: R^d -> R^d, written into `out` (length d).
using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Diffusion sigma: R^d -> R^{d x d}, written row-major into `out` (length d*d).
using DiffusionFn = std::function<void(std::span<const double> x, std::span<double> out)>;

struct GaussianInitial {
  std::vector<double> mean;
  std::vector<double> covariance;  // row-major d x d, symmetric PSD
};

struct UniformHypercubeInitial {
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Initial law p_0 of the SDE. Gaussian covariances may be singular
/// (a zero covariance is a point mass); such densities can be sampled but
/// have no pdf.
class InitialDensity {
 public:
  using Kind = std::variant<GaussianInitial, UniformHypercubeInitial>;

  /// Empty law of dimension 0; only useful as a placeholder before assignment.
  InitialDensity() = default;

  static InitialDensity gaussian(std::vector<double> mean, std::vector<double> covariance);
  static InitialDensity isotropic_gaussian(std::size_t dim, double variance);
  static InitialDensity point_mass(std::vector<double> location);
  static InitialDensity uniform_hypercube(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const noexcept { return dim_; }
  const Kind& kind() const noexcept { return kind_; }
  bool has_pdf() const noexcept { return has_pdf_; }

  /// Throws ConfigError for a singular Gaussian.
  double pdf(std::span<const double> x) const;

  void sample(StreamRng& rng, std::span<double> out) const;

 private:
  Kind kind_;
  std::size_t dim_ = 0;
  std::vector<double> factor_;     // S with S S^T = C, row-major
  std::vector<double> precision_;  // C^{-1}, row-major (regular case only)
  double log_normalizer_ = 0.0;
  bool has_pdf_ = false;
};

/// dX = b(X) dt + sigma(X) dW on [0, T], X_0 ~ p_0.
struct SdeProblem {
  std::string id;
  std::size_t dim = 0;
  double horizon = 0.0;
  DriftFn drift;
  DiffusionFn diffusion;
  InitialDensity initial;

  /// Checks dim/horizon, the initial law's dimension, and finiteness of
  /// drift and diffusion on a handful of points drawn from p_0.
  void validate(std::uint64_t probe_seed = 0) const;
};

/// Euler discretisation knobs. The step size is always T / steps.
struct EulerConfig {
  std::size_t steps = 1;
  std::size_t samples = 1;
  std::uint64_t seed = 0;

  double tau(double horizon) const noexcept { return horizon / static_cast<double>(steps); }
  void validate() const;
};

struct Provenance {
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::string problem;
};

/// Immutable set of points in R^d, stored row-major.
class SampleSet {
 public:
  SampleSet() = default;
  /// Throws ConfigError if `coords` is not a whole number of finite rows.
  SampleSet(std::size_t dim, std::vector<double> coords, Provenance provenance = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  double coord(std::size_t i, std::size_t axis) const noexcept {
    return coords_[i * dim_ + axis];
  }
  std::span<const double> coords() const noexcept { return coords_; }
  const Provenance& provenance() const noexcept { return provenance_; }

  std::vector<double> mean() const;
  /// Unbiased sample covariance, row-major d x d.
  std::vector<double> covariance() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  Provenance provenance_;
};

/// Scratch buffers for the hot loop so stepping does not allocate.
struct StepWorkspace {
  explicit StepWorkspace(std::size_t dim) : drift(dim), diffusion(dim * dim) {}
  std::vector<double> drift;
  std::vector<double> diffusion;
};

/// One explicit Euler step: out = y + tau * b(y) + sigma(y) * dw.
/// `out` may alias `y`. Throws NumericalBlowup on non-finite drift/diffusion.
void euler_step(std::span<const double> y, double tau, const SdeProblem& problem,
                std::span<const double> dw, StepWorkspace& work, std::span<double> out);

std::vector<double> euler_step(std::span<const double> y, double tau, const SdeProblem& problem,
                               std::span<const double> dw);

/// Per-trajectory random source: trajectory m of seed s draws its initial
/// point first and then its Wiener increments, all from stream (s, m).
class TrajectoryNoise {
 public:
  TrajectoryNoise(std::uint64_t seed, std::uint64_t trajectory) : rng_(seed, trajectory) {}

  void initial(const InitialDensity& density, std::span<double> out) { density.sample(rng_, out); }

  /// Fills `dw` with independent N(0, tau) entries.
  void increment(double tau, std::span<double> dw);

 private:
  StreamRng rng_;
};

/// m i.i.d. draws from p_0; draw i comes from stream (seed, i), so it equals
/// the starting point of trajectory i in `simulate` with the same seed.
SampleSet sample_initial(const InitialDensity& density, std::size_t m, std::uint64_t seed);

struct SimulationOptions {
  unsigned workers = 1;
  /// Step indices j in [0, J] whose intermediate points are retained.
  std::vector<std::size_t> snapshot_steps;
};

struct Simulation {
  SampleSet terminal;
  std::map<std::size_t, SampleSet> snapshots;
};

/// Runs M independent Euler trajectories to t_J = T. Output is bit-identical
/// for a given (problem, config) regardless of `workers`.
Simulation simulate(const SdeProblem& problem, const EulerConfig& config,
                    const SimulationOptions& options = {});

SampleSet simulate_terminal(const SdeProblem& problem, const EulerConfig& config,
                            unsigned workers = 1);

}  // namespace fphist
