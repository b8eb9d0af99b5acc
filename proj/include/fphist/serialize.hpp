#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fphist/estimator.hpp"
#include "fphist/metrics.hpp"

namespace fphist {

using Json = nlohmann::json;

/// Bounds as {"lower": [...], "upper": [...]}; infinite bounds become null.
Json rect_to_json(const HyperRect& rect);
/// Inverse of rect_to_json. A null lower bound reads as -inf, a null upper as +inf.
HyperRect rect_from_json(const Json& j);

/// Rule tag, node cuts, and per-leaf bounds and counts.
Json partition_to_json(const PartitionTree& tree);
/// Leaf bounds, counts and values plus the estimator's mass summary.
Json estimate_to_json(const DensityEstimate& estimate);
Json error_report_to_json(const ErrorReport& report);

/// Long format: one column per free axis ("x<axis+1>") and "density".
void write_slice_csv(std::ostream& out, const Slice& slice);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Dumps with 2-space indent and a trailing newline.
void write_json_file(const std::string& path, const Json& j);
Json read_json_file(const std::string& path);

inline constexpr int kLedgerSchemaVersion = 1;

struct LedgerRow {
  std::string problem;
  std::string rule;
  std::size_t samples = 0;
  std::size_t cell_count = 0;
  double tau = 0.0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::optional<double> l1;
  std::optional<double> linf;
  double tail_mass = 0.0;
  double wall_time_s = 0.0;
};

std::string ledger_header();
std::string ledger_line(const LedgerRow& row);
/// Appends one row, writing the header first when the file is new or empty.
/// Throws ConfigError if an existing file has a different header.
void append_ledger_row(const std::string& path, const LedgerRow& row);

}  // namespace fphist
