#include "fphist/partition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "fphist/error.hpp"

namespace fphist {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::string_view to_string(SplitRule rule) noexcept {
  return rule == SplitRule::gessaman ? "gessaman" : "btc";
}

SplitRule parse_split_rule(std::string_view name) {
  if (name == "gessaman") return SplitRule::gessaman;
  if (name == "btc") return SplitRule::btc;
  throw ConfigError("unknown split rule '" + std::string(name) + "' (expected gessaman or btc)");
}

// ---------------------------------------------------------------------------
// HyperRect

HyperRect::HyperRect(std::size_t dim) : lower_(dim, -kInf), upper_(dim, kInf) {}

HyperRect::HyperRect(std::vector<double> lower, std::vector<double> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) throw ConfigError("HyperRect bounds differ in length");
  for (std::size_t i = 0; i < lower_.size(); ++i)
    if (!(lower_[i] < upper_[i]))
      throw ConfigError("HyperRect needs lower < upper on axis " + std::to_string(i));
}

bool HyperRect::bounded() const noexcept {
  for (std::size_t i = 0; i < dim(); ++i)
    if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i])) return false;
  return true;
}

double HyperRect::volume() const noexcept {
  if (!bounded()) return kInf;
  double v = 1.0;
  for (std::size_t i = 0; i < dim(); ++i) v *= edge(i);
  return v;
}

double HyperRect::diameter() const noexcept {
  if (!bounded()) return kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < dim(); ++i) s += edge(i) * edge(i);
  return std::sqrt(s);
}

bool HyperRect::contains(std::span<const double> x) const noexcept {
  for (std::size_t i = 0; i < dim(); ++i)
    if (!(x[i] >= lower_[i] && x[i] < upper_[i])) return false;
  return true;
}

std::optional<HyperRect> HyperRect::intersection(const HyperRect& other) const {
  if (other.dim() != dim()) throw ConfigError("HyperRect intersection: dimension mismatch");
  std::vector<double> lo(dim()), hi(dim());
  for (std::size_t i = 0; i < dim(); ++i) {
    lo[i] = std::max(lower_[i], other.lower_[i]);
    hi[i] = std::min(upper_[i], other.upper_[i]);
    if (!(lo[i] < hi[i])) return std::nullopt;
  }
  return HyperRect(std::move(lo), std::move(hi));
}

HyperRect HyperRect::with_lower(std::size_t axis, double value) const {
  HyperRect r = *this;
  r.lower_[axis] = value;
  return r;
}

HyperRect HyperRect::with_upper(std::size_t axis, double value) const {
  HyperRect r = *this;
  r.upper_[axis] = value;
  return r;
}

// ---------------------------------------------------------------------------
// PartitionTree

std::size_t PartitionTree::locate(std::span<const double> x) const {
  if (x.size() != dim_) throw ConfigError("locate: point dimension mismatch");
  std::size_t node = 0;
  while (!nodes_[node].is_leaf()) {
    const auto& n = nodes_[node];
    // Points on a cut belong to the upper cell.
    const auto it = std::upper_bound(n.cuts.begin(), n.cuts.end(), x[n.axis]);
    node = n.first_child + static_cast<std::size_t>(it - n.cuts.begin());
  }
  return nodes_[node].leaf;
}

// ---------------------------------------------------------------------------
// Builders

std::size_t gessaman_strips(std::size_t samples, std::size_t cell_count, std::size_t dim) {
  if (dim == 0 || cell_count == 0 || samples == 0)
    throw ConfigError("gessaman_strips: M, k and d must be positive");
  // Smallest N with N^d * k >= M.
  auto reaches = [&](std::size_t n) {
    long double p = static_cast<long double>(cell_count);
    for (std::size_t i = 0; i < dim; ++i) {
      p *= static_cast<long double>(n);
      if (p >= static_cast<long double>(samples)) return true;
    }
    return p >= static_cast<long double>(samples);
  };
  std::size_t n = 1;
  while (!reaches(n)) ++n;
  return n;
}

namespace {

std::size_t integer_power(std::size_t base, std::size_t exp) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::size_t>::max() / base)
      return std::numeric_limits<std::size_t>::max();
    r *= base;
  }
  return r;
}

double cut_between(double below, double above, std::size_t axis) {
  if (!(below < above))
    throw DegenerateDataError("equal coordinates " + std::to_string(below) +
                              " straddle a cut on axis " + std::to_string(axis + 1));
  double cut = below + 0.5 * (above - below);
  if (!(cut > below)) cut = above;
  return cut;
}

}  // namespace

void check_partition_preconditions(std::size_t samples, std::size_t cell_count,
                                   std::size_t dim, SplitRule rule, GessamanOptions options) {
  if (dim == 0) throw ConfigError("dimension must be >= 1");
  if (samples == 0) throw ConfigError("sample count M must be >= 1");
  if (cell_count == 0) throw ConfigError("cell sample count k must be >= 1");
  if (cell_count > samples)
    throw ConfigError("cell sample count k = " + std::to_string(cell_count) +
                      " exceeds M = " + std::to_string(samples));
  if (rule == SplitRule::gessaman) {
    const std::size_t n = gessaman_strips(samples, cell_count, dim);
    const std::size_t cells = integer_power(n, dim);
    if (options.allow_uneven) {
      if (cells > samples)
        throw DivisibilityError("N^d = " + std::to_string(n) + "^" + std::to_string(dim) +
                                " cells exceed M = " + std::to_string(samples));
    } else if (cells == std::numeric_limits<std::size_t>::max() ||
               cells * cell_count != samples) {
      throw DivisibilityError("Gessaman rule needs M = k * N^d; got M = " +
                              std::to_string(samples) + ", k = " + std::to_string(cell_count) +
                              ", N = " + std::to_string(n) + ", d = " + std::to_string(dim));
    }
  } else {
    if (!std::has_single_bit(samples))
      throw PowerOfTwoError("BTC rule needs M to be a power of two; got " +
                            std::to_string(samples));
    if (!std::has_single_bit(cell_count))
      throw PowerOfTwoError("BTC rule needs k to be a power of two; got " +
                            std::to_string(cell_count));
  }
}

class PartitionBuilder {
 public:
  PartitionBuilder(const SampleSet& samples, SplitRule rule, std::size_t cell_count)
      : samples_(samples), index_(samples.size()) {
    std::iota(index_.begin(), index_.end(), std::size_t{0});
    tree_.rule_ = rule;
    tree_.dim_ = samples.dim();
    tree_.sample_count_ = samples.size();
    tree_.cell_count_ = cell_count;
    tree_.nodes_.emplace_back();
  }

  PartitionTree gessaman(std::size_t strips, bool uneven) {
    strips_ = strips;
    uneven_ = uneven;
    if (strips_ == 1) {
      make_leaf(0, HyperRect(tree_.dim_), index_.size());
      tree_.height_ = 0;
    } else {
      gessaman_node(0, 0, HyperRect(tree_.dim_), index_);
      tree_.height_ = tree_.dim_;
    }
    return std::move(tree_);
  }

  PartitionTree btc(std::size_t levels) {
    btc_node(0, 0, levels, HyperRect(tree_.dim_), index_);
    tree_.height_ = levels;
    return std::move(tree_);
  }

 private:
  // Lexicographic on (coordinate, sample index) for deterministic ties.
  auto by_axis(std::size_t axis) const {
    return [this, axis](std::size_t a, std::size_t b) {
      const double xa = samples_.coord(a, axis);
      const double xb = samples_.coord(b, axis);
      return xa < xb || (xa == xb && a < b);
    };
  }

  void make_leaf(std::size_t node, HyperRect cell, std::size_t count) {
    tree_.nodes_[node].leaf = tree_.leaves_.size();
    tree_.leaves_.push_back(Leaf{std::move(cell), count});
  }

  std::size_t add_children(std::size_t node, std::size_t axis, std::vector<double> cuts) {
    const std::size_t first = tree_.nodes_.size();
    tree_.nodes_.resize(first + cuts.size() + 1);
    auto& parent = tree_.nodes_[node];
    parent.axis = axis;
    parent.cuts = std::move(cuts);
    parent.first_child = first;
    return first;
  }

  void gessaman_node(std::size_t node, std::size_t level, const HyperRect& cell,
                     std::span<std::size_t> idx) {
    if (level == tree_.dim_) {
      make_leaf(node, cell, idx.size());
      return;
    }
    const std::size_t axis = level;
    const std::size_t n = idx.size();
    std::sort(idx.begin(), idx.end(), by_axis(axis));

    std::vector<std::size_t> offsets(strips_ + 1);
    for (std::size_t c = 0; c <= strips_; ++c) offsets[c] = uneven_ ? c * n / strips_ : c * (n / strips_);
    for (std::size_t c = 0; c < strips_; ++c)
      if (offsets[c + 1] == offsets[c])
        throw DegenerateDataError("cell with " + std::to_string(n) +
                                  " samples cannot be split into " + std::to_string(strips_) +
                                  " non-empty strips");

    std::vector<double> cuts(strips_ - 1);
    for (std::size_t c = 1; c < strips_; ++c)
      cuts[c - 1] = cut_between(samples_.coord(idx[offsets[c] - 1], axis),
                                samples_.coord(idx[offsets[c]], axis), axis);

    const std::size_t first = add_children(node, axis, cuts);
    for (std::size_t c = 0; c < strips_; ++c) {
      HyperRect child = cell;
      if (c > 0) child = child.with_lower(axis, cuts[c - 1]);
      if (c + 1 < strips_) child = child.with_upper(axis, cuts[c]);
      gessaman_node(first + c, level + 1, child,
                    idx.subspan(offsets[c], offsets[c + 1] - offsets[c]));
    }
  }

  void btc_node(std::size_t node, std::size_t depth, std::size_t levels, const HyperRect& cell,
                std::span<std::size_t> idx) {
    if (depth == levels) {
      make_leaf(node, cell, idx.size());
      return;
    }
    std::size_t axis = 0;
    for (std::size_t a = 1; a < tree_.dim_; ++a)
      if (cell.edge(a) > cell.edge(axis)) axis = a;

    const std::size_t half = idx.size() / 2;
    const auto less = by_axis(axis);
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half), idx.end(),
                     less);
    const std::size_t above = idx[half];
    const std::size_t below =
        *std::max_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(half), less);
    const double cut =
        cut_between(samples_.coord(below, axis), samples_.coord(above, axis), axis);

    const std::size_t first = add_children(node, axis, {cut});
    btc_node(first, depth + 1, levels, cell.with_upper(axis, cut), idx.first(half));
    btc_node(first + 1, depth + 1, levels, cell.with_lower(axis, cut), idx.subspan(half));
  }

  const SampleSet& samples_;
  std::vector<std::size_t> index_;
  PartitionTree tree_;
  std::size_t strips_ = 1;
  bool uneven_ = false;
};

PartitionTree build_gessaman(const SampleSet& samples, std::size_t cell_count,
                             GessamanOptions options) {
  check_partition_preconditions(samples.size(), cell_count, samples.dim(), SplitRule::gessaman,
                                options);
  const std::size_t strips = gessaman_strips(samples.size(), cell_count, samples.dim());
  return PartitionBuilder(samples, SplitRule::gessaman, cell_count)
      .gessaman(strips, options.allow_uneven);
}

PartitionTree build_btc(const SampleSet& samples, std::size_t cell_count) {
  check_partition_preconditions(samples.size(), cell_count, samples.dim(), SplitRule::btc);
  const auto levels = static_cast<std::size_t>(std::countr_zero(samples.size()) -
                                               std::countr_zero(cell_count));
  return PartitionBuilder(samples, SplitRule::btc, cell_count).btc(levels);
}

PartitionTree build_partition(const SampleSet& samples, std::size_t cell_count, SplitRule rule,
                              GessamanOptions options) {
  return rule == SplitRule::gessaman ? build_gessaman(samples, cell_count, options)
                                     : build_btc(samples, cell_count);
}

PartitionStats partition_stats(const PartitionTree& tree, const HyperRect& box) {
  if (box.dim() != tree.dim()) throw ConfigError("partition_stats: box dimension mismatch");
  if (!box.bounded()) throw ConfigError("partition_stats: box must be finite");
  PartitionStats stats;
  stats.leaf_count = tree.leaf_count();
  double diameter_sum = 0.0;
  for (const auto& leaf : tree.leaves()) {
    if (leaf.cell.bounded()) ++stats.bounded_leaf_count;
    ++stats.count_histogram[leaf.count];
    if (const auto clipped = leaf.cell.intersection(box)) {
      ++stats.intersecting_leaf_count;
      const double diam = clipped->diameter();
      stats.max_diameter = std::max(stats.max_diameter, diam);
      diameter_sum += diam;
    }
  }
  if (stats.intersecting_leaf_count > 0)
    stats.mean_diameter = diameter_sum / static_cast<double>(stats.intersecting_leaf_count);
  return stats;
}

}  // namespace fphist
