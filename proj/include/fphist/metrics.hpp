#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fphist/estimator.hpp"
#include "fphist/reference.hpp"

namespace fphist {

using DensityFn = std::function<double(std::span<const double>)>;

/// Monte-Carlo L1 distance between f and g over the bounded leaves of
/// `cells`: sum_r vol(R_r) * mean_i |f(x_i) - g(x_i)|, with `n_eval`
/// uniform points per leaf drawn from stream (seed, r).
double mc_l1_distance(const PartitionTree& cells, const DensityFn& f, const DensityFn& g,
                      std::size_t n_eval, std::uint64_t seed);

struct L1Error {
  /// Integral of |est - ref| over bounded leaves.
  double bounded = 0.0;
  /// MC estimate of the reference mass inside bounded leaves.
  double ref_bounded_mass = 0.0;

  /// Reference mass in unbounded leaves, where the estimate is zero.
  double ref_tail_mass() const noexcept { return std::max(0.0, 1.0 - ref_bounded_mass); }
  /// Whole-space L1 error: bounded part plus the reference tail.
  double total() const noexcept { return bounded + ref_tail_mass(); }
};

L1Error mc_l1_error(const DensityEstimate& estimate, const DensityFn& reference,
                    std::size_t n_eval, std::uint64_t seed);

/// max over leaves meeting `box` of max_i |est(x_i) - ref(x_i)|, with
/// `n_eval` uniform points drawn in each leaf ∩ box.
double mc_linf_error(const DensityEstimate& estimate, const DensityFn& reference,
                     std::size_t n_eval, const HyperRect& box, std::uint64_t seed);

/// Bounding box of the bounded leaves, widened by `margin` on every side.
/// Falls back to the bounding box of `fallback` when no leaf is bounded.
HyperRect default_evaluation_box(const DensityEstimate& estimate, const SampleSet& fallback,
                                 double margin = 0.0);

/// Fraction of the M samples lying in leaves whose box-clipped diameter
/// exceeds gamma.
double large_cell_fraction(const PartitionTree& tree, const HyperRect& box, double gamma);

struct ErrorReport {
  double l1 = 0.0;           // bounded leaves only
  double l1_total = 0.0;     // l1 + ref_tail_mass
  double ref_tail_mass = 0.0;
  double linf = 0.0;
  HyperRect box;
  std::size_t n_eval = 16;
  /// Sample mass in unbounded leaves (1 - self_integral).
  double tail_mass = 0.0;
  std::uint64_t seed = 0;
};

ErrorReport evaluate_errors(const DensityEstimate& estimate, const DensityFn& reference,
                            const HyperRect& box, std::size_t n_eval, std::uint64_t seed);

/// ceil((M/k)^(1/d))^d / M, the cells-per-sample ratio of Gessaman's rule.
/// `cell_count` may be fractional (e.g. sqrt(M)).
double gessaman_cell_ratio(double samples, double cell_count, std::size_t dim);

struct DiagnosticsRow {
  std::size_t samples = 0;
  std::size_t cell_count = 0;
  std::size_t leaf_count = 0;
  double leaves_per_sample = 0.0;
  double large_cell_fraction = 0.0;
  std::optional<double> l1;
  std::optional<double> l1_total;
  std::optional<double> linf;
};

struct DiagnosticsOptions {
  std::size_t steps = 50;
  std::uint64_t seed = 0;
  std::size_t n_eval = 16;
  unsigned workers = 1;
  GessamanOptions gessaman;
};

/// One row per (M, k) entry. Throws ScheduleError unless both M and k are
/// strictly increasing along the schedule.
std::vector<DiagnosticsRow> consistency_diagnostics(
    const std::vector<std::pair<std::size_t, std::size_t>>& schedule, SplitRule rule,
    const BenchmarkProblem& problem, const HyperRect& box, double gamma,
    const DiagnosticsOptions& options = {});

struct TauRow {
  double tau = 0.0;
  std::size_t steps = 0;
  double l1 = 0.0;
  double l1_total = 0.0;
};

struct TauProbe {
  std::vector<TauRow> rows;
  /// Smallest tau before the total error stops decreasing, if it does.
  std::optional<double> plateau_tau;
};

/// Total L1 error at a fixed (M, k) for each step size. Each tau must divide T.
TauProbe tau_convergence_probe(const BenchmarkProblem& problem, std::size_t samples,
                               std::size_t cell_count, SplitRule rule,
                               const std::vector<double>& taus, std::uint64_t seed,
                               std::size_t n_eval = 16, GessamanOptions gessaman = {});

struct FlowRow {
  double tau = 0.0;
  std::size_t steps = 0;
  double error = 0.0;
  /// error(previous tau) / error(this tau); absent on the first row.
  std::optional<double> ratio;
};

/// Terminal error of the Euler chain against an exact flow for a problem
/// with sigma = 0: mean over trajectories of |Y^J - exact(Y^0)|.
std::vector<FlowRow> euler_flow_errors(
    const SdeProblem& problem,
    const std::function<std::vector<double>(std::span<const double>)>& exact_terminal,
    const std::vector<double>& taus, std::size_t samples, std::uint64_t seed);

/// J = T / tau, requiring tau to divide T up to rounding.
std::size_t steps_for_tau(double horizon, double tau);

}  // namespace fphist
