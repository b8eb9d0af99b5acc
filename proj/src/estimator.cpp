#include "fphist/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fphist/error.hpp"

namespace fphist {

DensityEstimate::DensityEstimate(PartitionTree tree, std::uint64_t seed)
    : tree_(std::move(tree)), values_(tree_.leaf_count(), 0.0), seed_(seed) {
  const auto M = static_cast<double>(tree_.sample_count());
  const auto& leaves = tree_.leaves();
  for (std::size_t r = 0; r < leaves.size(); ++r) {
    const auto& leaf = leaves[r];
    if (!leaf.cell.bounded()) {
      ++unbounded_leaves_;
      continue;  // k / (M * inf) = 0
    }
    const double vol = leaf.cell.volume();
    if (!(vol > 0.0))
      throw ZeroVolumeError("bounded leaf " + std::to_string(r) + " has zero volume");
    values_[r] = static_cast<double>(leaf.count) / (M * vol);
    bounded_samples_ += leaf.count;
  }
}

double DensityEstimate::self_integral() const noexcept {
  double total = 0.0;
  const auto& leaves = tree_.leaves();
  for (std::size_t r = 0; r < leaves.size(); ++r)
    if (leaves[r].cell.bounded()) total += values_[r] * leaves[r].cell.volume();
  return total;
}

double DensityEstimate::tail_mass() const noexcept {
  return static_cast<double>(unbounded_sample_count()) /
         static_cast<double>(tree_.sample_count());
}

DensityEstimate build_estimate(PartitionTree tree, std::uint64_t seed) {
  return DensityEstimate(std::move(tree), seed);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = hi;
  return out;
}

Slice slice(const DensityEstimate& estimate, std::span<const std::size_t> axes,
            std::span<const double> anchor, const std::vector<std::vector<double>>& grid) {
  const std::size_t d = estimate.dim();
  if (axes.empty() || axes.size() > 2) throw ConfigError("slice needs one or two free axes");
  if (grid.size() != axes.size()) throw ConfigError("slice needs one grid per free axis");
  if (anchor.size() != d) throw ConfigError("slice anchor dimension mismatch");
  if (axes.size() == 2 && axes[0] == axes[1]) throw ConfigError("slice axes must differ");
  for (std::size_t a : axes)
    if (a >= d) throw ConfigError("slice axis " + std::to_string(a + 1) + " out of range");
  for (double v : anchor)
    if (!std::isfinite(v)) throw ConfigError("slice anchor must be finite");
  for (const auto& g : grid) {
    if (g.empty()) throw ConfigError("slice grid must be non-empty");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) throw ConfigError("slice grid must be finite");
      if (i > 0 && !(g[i] > g[i - 1])) throw ConfigError("slice grid must be increasing");
    }
  }

  Slice out;
  out.axes.assign(axes.begin(), axes.end());
  out.breakpoints = grid;
  std::vector<double> x(anchor.begin(), anchor.end());
  if (axes.size() == 1) {
    out.values.reserve(grid[0].size());
    for (double v : grid[0]) {
      x[axes[0]] = v;
      out.values.push_back(estimate.evaluate(x));
    }
  } else {
    out.values.reserve(grid[0].size() * grid[1].size());
    for (double u : grid[0]) {
      x[axes[0]] = u;
      for (double v : grid[1]) {
        x[axes[1]] = v;
        out.values.push_back(estimate.evaluate(x));
      }
    }
  }
  return out;
}

}  // namespace fphist
