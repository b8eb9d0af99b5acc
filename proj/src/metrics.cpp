#include "fphist/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fphist/detail/parallel.hpp"
#include "fphist/error.hpp"

namespace fphist {

namespace {

void draw_in(StreamRng& rng, const HyperRect& cell, std::span<double> x) {
  for (std::size_t a = 0; a < cell.dim(); ++a) x[a] = rng.uniform(cell.lower(a), cell.upper(a));
}

void require_n_eval(std::size_t n_eval) {
  if (n_eval == 0) throw ConfigError("n_eval must be >= 1");
}

}  // namespace

double mc_l1_distance(const PartitionTree& cells, const DensityFn& f, const DensityFn& g,
                      std::size_t n_eval, std::uint64_t seed) {
  require_n_eval(n_eval);
  const auto& leaves = cells.leaves();
  std::vector<double> x(cells.dim());
  double total = 0.0;
  for (std::size_t r = 0; r < leaves.size(); ++r) {
    const auto& cell = leaves[r].cell;
    if (!cell.bounded()) continue;
    StreamRng rng(seed, r);
    double sum = 0.0;
    for (std::size_t i = 0; i < n_eval; ++i) {
      draw_in(rng, cell, x);
      sum += std::abs(f(x) - g(x));
    }
    total += cell.volume() * sum / static_cast<double>(n_eval);
  }
  return total;
}

L1Error mc_l1_error(const DensityEstimate& estimate, const DensityFn& reference,
                    std::size_t n_eval, std::uint64_t seed) {
  require_n_eval(n_eval);
  const auto& leaves = estimate.tree().leaves();
  std::vector<double> x(estimate.dim());
  L1Error out;
  for (std::size_t r = 0; r < leaves.size(); ++r) {
    const auto& cell = leaves[r].cell;
    if (!cell.bounded()) continue;
    StreamRng rng(seed, r);
    const double value = estimate.value(r);
    double diff = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < n_eval; ++i) {
      draw_in(rng, cell, x);
      const double ref = reference(x);
      diff += std::abs(value - ref);
      mass += ref;
    }
    const double scale = cell.volume() / static_cast<double>(n_eval);
    out.bounded += scale * diff;
    out.ref_bounded_mass += scale * mass;
  }
  return out;
}

double mc_linf_error(const DensityEstimate& estimate, const DensityFn& reference,
                     std::size_t n_eval, const HyperRect& box, std::uint64_t seed) {
  require_n_eval(n_eval);
  if (box.dim() != estimate.dim()) throw ConfigError("mc_linf_error: box dimension mismatch");
  if (!box.bounded()) throw ConfigError("mc_linf_error: box must be finite");
  const auto& leaves = estimate.tree().leaves();
  std::vector<double> x(estimate.dim());
  double worst = 0.0;
  for (std::size_t r = 0; r < leaves.size(); ++r) {
    const auto clipped = leaves[r].cell.intersection(box);
    if (!clipped) continue;
    StreamRng rng(seed, r);
    const double value = estimate.value(r);
    for (std::size_t i = 0; i < n_eval; ++i) {
      draw_in(rng, *clipped, x);
      worst = std::max(worst, std::abs(value - reference(x)));
    }
  }
  return worst;
}

HyperRect default_evaluation_box(const DensityEstimate& estimate, const SampleSet& fallback,
                                 double margin) {
  const std::size_t d = estimate.dim();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(d, inf), hi(d, -inf);
  bool any = false;
  for (const auto& leaf : estimate.tree().leaves()) {
    if (!leaf.cell.bounded()) continue;
    any = true;
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], leaf.cell.lower(a));
      hi[a] = std::max(hi[a], leaf.cell.upper(a));
    }
  }
  if (!any) {
    if (fallback.empty() || fallback.dim() != d)
      throw ConfigError("no bounded leaves and no samples to derive an evaluation box");
    for (std::size_t i = 0; i < fallback.size(); ++i)
      for (std::size_t a = 0; a < d; ++a) {
        lo[a] = std::min(lo[a], fallback.coord(i, a));
        hi[a] = std::max(hi[a], fallback.coord(i, a));
      }
  }
  for (std::size_t a = 0; a < d; ++a) {
    lo[a] -= margin;
    hi[a] += margin;
    if (!(lo[a] < hi[a])) {
      lo[a] -= 0.5;
      hi[a] += 0.5;
    }
  }
  return HyperRect(std::move(lo), std::move(hi));
}

double large_cell_fraction(const PartitionTree& tree, const HyperRect& box, double gamma) {
  std::size_t count = 0;
  for (const auto& leaf : tree.leaves()) {
    const auto clipped = leaf.cell.intersection(box);
    if (clipped && clipped->diameter() > gamma) count += leaf.count;
  }
  return static_cast<double>(count) / static_cast<double>(tree.sample_count());
}

ErrorReport evaluate_errors(const DensityEstimate& estimate, const DensityFn& reference,
                            const HyperRect& box, std::size_t n_eval, std::uint64_t seed) {
  const L1Error l1 = mc_l1_error(estimate, reference, n_eval, seed);
  ErrorReport report;
  report.l1 = l1.bounded;
  report.ref_tail_mass = l1.ref_tail_mass();
  report.l1_total = l1.total();
  report.linf = mc_linf_error(estimate, reference, n_eval, box, seed);
  report.box = box;
  report.n_eval = n_eval;
  report.tail_mass = estimate.tail_mass();
  report.seed = seed;
  return report;
}

double gessaman_cell_ratio(double samples, double cell_count, std::size_t dim) {
  if (!(samples > 0.0) || !(cell_count > 0.0) || dim == 0)
    throw ConfigError("gessaman_cell_ratio: M, k and d must be positive");
  const long double target = static_cast<long double>(samples) / cell_count;
  long double n = std::floor(std::pow(target, 1.0L / static_cast<long double>(dim)));
  n = std::max(n - 1.0L, 1.0L);
  while (std::pow(n, static_cast<long double>(dim)) < target) n += 1.0L;
  return static_cast<double>(std::pow(n, static_cast<long double>(dim)) / samples);
}

std::vector<DiagnosticsRow> consistency_diagnostics(
    const std::vector<std::pair<std::size_t, std::size_t>>& schedule, SplitRule rule,
    const BenchmarkProblem& problem, const HyperRect& box, double gamma,
    const DiagnosticsOptions& options) {
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i].first <= schedule[i - 1].first)
      throw ScheduleError("schedule M must be strictly increasing");
    if (schedule[i].second <= schedule[i - 1].second)
      throw ScheduleError("schedule k_M must be strictly increasing");
  }
  if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (box.dim() != problem.sde.dim || !box.bounded())
    throw ConfigError("diagnostics box must be finite and match the problem dimension");

  std::vector<DiagnosticsRow> rows;
  for (const auto& [M, k] : schedule) {
    check_partition_preconditions(M, k, problem.sde.dim, rule, options.gessaman);
    const EulerConfig euler{options.steps, M, options.seed};
    const SampleSet samples = simulate_terminal(problem.sde, euler, options.workers);
    const DensityEstimate est(build_partition(samples, k, rule, options.gessaman), options.seed);

    DiagnosticsRow row;
    row.samples = M;
    row.cell_count = k;
    row.leaf_count = est.tree().leaf_count();
    row.leaves_per_sample = static_cast<double>(row.leaf_count) / static_cast<double>(M);
    row.large_cell_fraction = large_cell_fraction(est.tree(), box, gamma);
    if (problem.solution) {
      const auto& sol = *problem.solution;
      const double T = problem.sde.horizon;
      const DensityFn ref = [&sol, T](std::span<const double> x) { return sol.density(T, x); };
      const L1Error l1 = mc_l1_error(est, ref, options.n_eval, options.seed);
      row.l1 = l1.bounded;
      row.l1_total = l1.total();
      row.linf = mc_linf_error(est, ref, options.n_eval, box, options.seed);
    }
    rows.push_back(row);
  }
  return rows;
}

std::size_t steps_for_tau(double horizon, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  const double ratio = horizon / tau;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps == 0 || std::abs(static_cast<double>(steps) * tau - horizon) >
                        1e-9 * std::max(1.0, horizon))
    throw ConfigError("tau = " + std::to_string(tau) + " does not divide T = " +
                      std::to_string(horizon));
  return steps;
}

TauProbe tau_convergence_probe(const BenchmarkProblem& problem, std::size_t samples,
                               std::size_t cell_count, SplitRule rule,
                               const std::vector<double>& taus, std::uint64_t seed,
                               std::size_t n_eval, GessamanOptions gessaman) {
  if (!problem.solution) throw ConfigError("tau probe needs a problem with an analytic solution");
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] < taus[i - 1])) throw ConfigError("tau values must be decreasing");
  check_partition_preconditions(samples, cell_count, problem.sde.dim, rule, gessaman);

  const auto& sol = *problem.solution;
  const double T = problem.sde.horizon;
  const DensityFn ref = [&sol, T](std::span<const double> x) { return sol.density(T, x); };

  TauProbe probe;
  for (double tau : taus) {
    const std::size_t J = steps_for_tau(T, tau);
    const SampleSet pts = simulate_terminal(problem.sde, EulerConfig{J, samples, seed});
    const DensityEstimate est(build_partition(pts, cell_count, rule, gessaman), seed);
    const L1Error l1 = mc_l1_error(est, ref, n_eval, seed);
    probe.rows.push_back(TauRow{tau, J, l1.bounded, l1.total()});
  }
  for (std::size_t i = 1; i < probe.rows.size(); ++i)
    if (probe.rows[i].l1_total >= probe.rows[i - 1].l1_total) {
      probe.plateau_tau = probe.rows[i - 1].tau;
      break;
    }
  return probe;
}

std::vector<FlowRow> euler_flow_errors(
    const SdeProblem& problem,
    const std::function<std::vector<double>(std::span<const double>)>& exact_terminal,
    const std::vector<double>& taus, std::size_t samples, std::uint64_t seed) {
  const SampleSet start = sample_initial(problem.initial, samples, seed);
  std::vector<FlowRow> rows;
  for (double tau : taus) {
    const std::size_t J = steps_for_tau(problem.horizon, tau);
    const SampleSet end = simulate_terminal(problem, EulerConfig{J, samples, seed});
    double total = 0.0;
    for (std::size_t m = 0; m < samples; ++m) {
      const auto exact = exact_terminal(start.point(m));
      double sq = 0.0;
      for (std::size_t a = 0; a < problem.dim; ++a) {
        const double e = end.coord(m, a) - exact[a];
        sq += e * e;
      }
      total += std::sqrt(sq);
    }
    FlowRow row{tau, J, total / static_cast<double>(samples), std::nullopt};
    if (!rows.empty()) row.ratio = rows.back().error / row.error;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fphist
