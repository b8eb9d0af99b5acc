#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fphist/sde.hpp"

namespace fphist {

enum class SplitRule { gessaman, btc };

std::string_view to_string(SplitRule rule) noexcept;
/// Accepts "gessaman" or "btc"; throws ConfigError otherwise.
SplitRule parse_split_rule(std::string_view name);

/// Axis-aligned cell prod_i [lower_i, upper_i). Bounds may be -inf / +inf.
class HyperRect {
 public:
  /// The whole space R^d.
  explicit HyperRect(std::size_t dim = 0);
  /// Throws ConfigError unless lower_i < upper_i on every axis.
  HyperRect(std::vector<double> lower, std::vector<double> upper);

  std::size_t dim() const noexcept { return lower_.size(); }
  double lower(std::size_t axis) const noexcept { return lower_[axis]; }
  double upper(std::size_t axis) const noexcept { return upper_[axis]; }
  std::span<const double> lower() const noexcept { return lower_; }
  std::span<const double> upper() const noexcept { return upper_; }

  /// upper - lower, +inf for an unbounded axis.
  double edge(std::size_t axis) const noexcept { return upper_[axis] - lower_[axis]; }
  bool bounded() const noexcept;
  /// Product of edges; +inf if any edge is unbounded.
  double volume() const noexcept;
  /// Euclidean length of the edge vector; +inf if any edge is unbounded.
  double diameter() const noexcept;

  /// Half-open membership test.
  bool contains(std::span<const double> x) const noexcept;

  /// Overlap with positive volume, or nullopt when the overlap is empty or
  /// degenerate (touching faces only).
  std::optional<HyperRect> intersection(const HyperRect& other) const;

  HyperRect with_lower(std::size_t axis, double value) const;
  HyperRect with_upper(std::size_t axis, double value) const;

  friend bool operator==(const HyperRect&, const HyperRect&) = default;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
};

struct PartitionNode {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::size_t axis = 0;
  /// Increasing cut positions; child c covers [cuts[c-1], cuts[c]) on `axis`.
  std::vector<double> cuts;
  /// Children are stored contiguously starting here (internal nodes).
  std::size_t first_child = 0;
  /// Leaf index for terminal nodes, npos for internal nodes.
  std::size_t leaf = npos;

  bool is_leaf() const noexcept { return leaf != npos; }
  std::size_t child_count() const noexcept { return cuts.size() + 1; }
};

struct Leaf {
  HyperRect cell;
  std::size_t count = 0;
};

/// Data-dependent partition of R^d. Node 0 is the root (the whole space).
/// Leaves are numbered in depth-first order, so the children of cell j on
/// one level are N*j + l on the next.
class PartitionTree {
 public:
  SplitRule rule() const noexcept { return rule_; }
  std::size_t dim() const noexcept { return dim_; }
  /// Number of samples M the tree was built from.
  std::size_t sample_count() const noexcept { return sample_count_; }
  /// Requested samples per cell k_M.
  std::size_t cell_count() const noexcept { return cell_count_; }
  std::size_t height() const noexcept { return height_; }

  const std::vector<PartitionNode>& nodes() const noexcept { return nodes_; }
  const std::vector<Leaf>& leaves() const noexcept { return leaves_; }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }

  /// Index of the unique leaf whose half-open cell contains x.
  std::size_t locate(std::span<const double> x) const;

 private:
  friend class PartitionBuilder;

  SplitRule rule_ = SplitRule::gessaman;
  std::size_t dim_ = 0;
  std::size_t sample_count_ = 0;
  std::size_t cell_count_ = 0;
  std::size_t height_ = 0;
  std::vector<PartitionNode> nodes_;
  std::vector<Leaf> leaves_;
};

/// N = ceil((M / k)^(1/d)), computed in exact integer arithmetic.
std::size_t gessaman_strips(std::size_t samples, std::size_t cell_count, std::size_t dim);

struct GessamanOptions {
  /// Accept M != k * N^d and spread the remainder so sibling cells differ by
  /// at most one sample. Off by default: then every leaf holds exactly k.
  bool allow_uneven = false;
};

/// Gessaman's rule: d rounds of equal-count slab splits, axis i in round i.
PartitionTree build_gessaman(const SampleSet& samples, std::size_t cell_count,
                             GessamanOptions options = {});

/// BTC rule: kappa = log2(M / k) levels of median splits perpendicular to a
/// longest cell edge (unbounded edges count as infinite, ties go to the
/// lowest axis).
PartitionTree build_btc(const SampleSet& samples, std::size_t cell_count);

PartitionTree build_partition(const SampleSet& samples, std::size_t cell_count, SplitRule rule,
                              GessamanOptions options = {});

/// Checks the rule's size preconditions without building anything.
void check_partition_preconditions(std::size_t samples, std::size_t cell_count,
                                   std::size_t dim, SplitRule rule,
                                   GessamanOptions options = {});

struct PartitionStats {
  std::size_t leaf_count = 0;
  std::size_t bounded_leaf_count = 0;
  std::size_t intersecting_leaf_count = 0;
  /// Over leaves intersecting the box, diameters of (leaf ∩ box).
  double max_diameter = 0.0;
  double mean_diameter = 0.0;
  /// samples-per-leaf -> number of leaves with that count (all leaves).
  std::map<std::size_t, std::size_t> count_histogram;
};

/// Throws ConfigError if `box` is not finite.
PartitionStats partition_stats(const PartitionTree& tree, const HyperRect& box);

}  // namespace fphist
