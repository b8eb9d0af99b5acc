#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fphist/serialize.hpp"

namespace fphist {

struct SliceSpec {
  std::vector<std::size_t> axes;  // 1-based
  std::size_t points = 101;
  /// Fixed coordinates for the non-free axes; defaults to the sample mean.
  std::optional<std::vector<double>> anchor;
};

struct MetricOptions {
  std::optional<HyperRect> box;
  /// Widening of the default evaluation box on every side.
  double box_margin = 0.0;
  std::size_t n_eval = 16;
  double gamma = 1.0;
  /// Defaults to the run seed.
  std::optional<std::uint64_t> seed;
};

struct ExperimentConfig {
  std::string problem = "example1a";
  ProblemParams params;
  SplitRule rule = SplitRule::gessaman;
  bool gessaman_uneven = false;
  std::size_t samples = 4096;
  std::size_t cells = 64;
  std::optional<std::size_t> steps;
  std::optional<double> tau;
  std::uint64_t seed = 0;
  MetricOptions metrics;
  std::vector<std::size_t> snapshots;
  std::vector<SliceSpec> slices;

  // Execution only; not part of the report.
  std::string output_dir = "fphist_out";
  std::optional<std::string> ledger;
  unsigned workers = 1;
};

/// Strict reader: unknown keys and wrongly typed values raise ConfigError.
ExperimentConfig config_from_json(const Json& j);
/// Full config, execution fields included.
Json config_to_json(const ExperimentConfig& config);

struct ResolvedConfig {
  ExperimentConfig config;
  BenchmarkProblem problem;
  std::size_t steps = 0;
  double tau = 0.0;
  std::uint64_t metrics_seed = 0;
  /// Slices with defaults filled in (axes [1,2], or [1] when d = 1).
  std::vector<SliceSpec> slices;
};

/// Checks every precondition without simulating. Throws the matching Error.
ResolvedConfig resolve(const ExperimentConfig& config);

/// The report's embedded config: every field that affects results, with
/// J, tau and the metrics seed made explicit.
Json resolved_config_json(const ResolvedConfig& resolved);

struct RunResult {
  Json report;
  LedgerRow ledger_row;
  std::string output_dir;
};

/// Simulates, partitions, estimates and evaluates; writes estimate.json,
/// partition.json, slices/*.csv, report.json and snapshots/ under
/// output_dir, then appends the ledger row. Nothing is written if
/// validation fails.
RunResult run_experiment(const ExperimentConfig& config);

enum class SweepAxis { samples, cells, tau, alpha };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis) noexcept;

struct SweepOptions {
  SweepAxis axis = SweepAxis::samples;
  std::vector<double> values;
  /// For an M sweep: k = round(M^k_exponent) when set, else k stays fixed.
  std::optional<double> k_exponent;
  /// Runs executed concurrently; each run still uses config.workers.
  unsigned parallel = 1;
};

struct SweepRow {
  double value = 0.0;
  std::optional<LedgerRow> result;
  std::string error_kind;
  std::string error_message;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::string summary_path;
};

/// One run per value in `<output_dir>/run_<i>`, all with the base seed.
/// Failed runs are recorded in the summary and do not stop the sweep.
/// Writes summary.csv and summary.json under output_dir.
SweepResult run_sweep(const ExperimentConfig& base, const SweepOptions& options);

/// The config instantiated for one sweep value (before validation).
ExperimentConfig sweep_instance(const ExperimentConfig& base, const SweepOptions& options,
                                std::size_t index);

}  // namespace fphist
