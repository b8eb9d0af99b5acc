#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fphist/partition.hpp"

namespace fphist {

/// Piecewise-constant histogram density over the leaves of a partition:
/// value(r) = n_r / (M * vol(R_r)), with n_r the samples in leaf r (= k_M
/// for equal-count partitions) and value 0 on leaves of infinite volume.
class DensityEstimate {
 public:
  /// Throws ZeroVolumeError if a bounded leaf has zero volume.
  explicit DensityEstimate(PartitionTree tree, std::uint64_t seed = 0);

  const PartitionTree& tree() const noexcept { return tree_; }
  std::span<const double> values() const noexcept { return values_; }
  double value(std::size_t leaf) const noexcept { return values_[leaf]; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dim() const noexcept { return tree_.dim(); }

  double evaluate(std::span<const double> x) const { return values_[tree_.locate(x)]; }

  /// Sum of value * volume over bounded leaves.
  double self_integral() const noexcept;

  std::size_t unbounded_leaf_count() const noexcept { return unbounded_leaves_; }
  /// Samples in bounded / unbounded leaves; they add up to M exactly.
  std::size_t bounded_sample_count() const noexcept { return bounded_samples_; }
  std::size_t unbounded_sample_count() const noexcept {
    return tree_.sample_count() - bounded_samples_;
  }
  /// Sample mass in unbounded leaves, where the estimate is zero.
  double tail_mass() const noexcept;

 private:
  PartitionTree tree_;
  std::vector<double> values_;
  std::uint64_t seed_ = 0;
  std::size_t unbounded_leaves_ = 0;
  std::size_t bounded_samples_ = 0;
};

DensityEstimate build_estimate(PartitionTree tree, std::uint64_t seed = 0);

/// Estimate restricted to a line or plane through `anchor`.
struct Slice {
  std::vector<std::size_t> axes;                // 0-based, size 1 or 2
  std::vector<std::vector<double>> breakpoints;  // one list per free axis
  /// Row-major: values[i * breakpoints[1].size() + j] for 2 axes.
  std::vector<double> values;
};

/// Evaluates the estimate at every grid point; non-free coordinates are
/// taken from `anchor`. Throws ConfigError for bad axes or grids.
Slice slice(const DensityEstimate& estimate, std::span<const std::size_t> axes,
            std::span<const double> anchor, const std::vector<std::vector<double>>& grid);

/// `count` equally spaced points covering [lo, hi].
std::vector<double> linspace(double lo, double hi, std::size_t count);

}  // namespace fphist
