#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smartboost/data.hpp"

namespace smartboost {

struct TreeConfig {
  int max_leaves = 8;
  int min_samples_leaf = 1;
  double min_hessian_leaf = 0.0;
  double lambda_reg = 0.0;  // added to every Hessian sum in gains and leaf values

  void validate() const;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  BinIndex split_bin = 0;     // go left iff bin <= split_bin
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;         // leaf output
  std::int32_t leaf_id = -1;  // 0..n_leaves-1 for leaves

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class RegressionTree {
 public:
  // Single leaf with value 0.
  RegressionTree();

  // Takes ownership of a node array rooted at index 0. Throws TreeError on a
  // malformed structure (dangling or shared children, cycles, bad leaf ids).
  explicit RegressionTree(std::vector<TreeNode> nodes);

  static RegressionTree single_leaf(double value);

  double predict(const BinnedDataset& data, std::size_t instance) const {
    return nodes_[leaf_node(data, instance)].value;
  }

  std::size_t leaf_index(const BinnedDataset& data, std::size_t instance) const {
    return static_cast<std::size_t>(nodes_[leaf_node(data, instance)].leaf_id);
  }

  std::span<const TreeNode> nodes() const noexcept { return nodes_; }
  std::size_t n_leaves() const noexcept { return n_leaves_; }

  // Leaf outputs indexed by leaf id.
  std::vector<double> leaf_values() const;

  // Largest feature index used by a split, or -1 for a stump.
  std::int32_t max_feature() const noexcept;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::size_t leaf_node(const BinnedDataset& data, std::size_t instance) const {
    std::size_t node = 0;
    while (!nodes_[node].is_leaf()) {
      const auto& n = nodes_[node];
      node = static_cast<std::size_t>(data.bin(static_cast<std::size_t>(n.feature), instance) <=
                                              n.split_bin
                                          ? n.left
                                          : n.right);
    }
    return node;
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_leaves_ = 1;
};

// Per-instance leaf id under `tree`, for every instance of `data`.
std::vector<std::uint32_t> leaf_assignments(const RegressionTree& tree, const BinnedDataset& data,
                                            int threads = 1);

struct HistogramBin {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t count = 0;
};

// Concatenated per-feature bin ranges.
class HistogramLayout {
 public:
  HistogramLayout() = default;
  explicit HistogramLayout(const BinnedDataset& data);
  HistogramLayout(std::vector<std::size_t> bins_per_feature);

  std::size_t n_features() const noexcept { return offsets_.size() - 1; }
  std::size_t offset(std::size_t feature) const noexcept { return offsets_[feature]; }
  std::size_t n_bins(std::size_t feature) const noexcept {
    return offsets_[feature + 1] - offsets_[feature];
  }
  std::size_t total_bins() const noexcept { return offsets_.back(); }

 private:
  std::vector<std::size_t> offsets_{0};
};

using Histogram = std::vector<HistogramBin>;

// Accumulates (g, h, count) of `rows` into per-feature bins.
Histogram build_histogram(const BinnedDataset& data, const HistogramLayout& layout,
                          std::span<const std::uint32_t> rows, std::span<const double> g,
                          std::span<const double> h, int threads = 1);

// parent - sibling, bin by bin.
Histogram subtract_histogram(const Histogram& parent, const Histogram& sibling);

struct NodeTotals {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

struct SplitCandidate {
  std::size_t feature = 0;
  BinIndex bin = 0;
  double gain = 0.0;
  double g_left = 0.0;
  double h_left = 0.0;
  double g_right = 0.0;
  double h_right = 0.0;
  std::size_t count_left = 0;
  std::size_t count_right = 0;
};

// G^2/(H + lambda) of one side; the gain of a split is left + right - parent.
double split_score(double g, double h, double lambda);

// Best (feature, bin) by second-order gain, honoring the leaf minimums. Ties go
// to the lower feature, then the lower bin. nullopt when no gain is positive.
std::optional<SplitCandidate> find_best_split(const Histogram& histogram,
                                              const HistogramLayout& layout,
                                              const NodeTotals& totals, const TreeConfig& config);

// Leaf-wise tree on the active rows. g and h are the already weighted
// derivatives indexed by instance; instances outside `active` are ignored.
RegressionTree build_tree(const BinnedDataset& data, std::span<const double> g,
                          std::span<const double> h, std::span<const std::uint32_t> active,
                          const TreeConfig& config, int threads = 1);

}  // namespace smartboost
