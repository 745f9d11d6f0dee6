#include "smartboost/tree.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "smartboost/error.hpp"
#include "smartboost/parallel.hpp"

namespace smartboost {

void TreeConfig::validate() const {
  if (max_leaves < 2) throw ConfigError("max_leaves must be >= 2");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
  if (!(min_hessian_leaf >= 0.0)) throw ConfigError("min_hessian_leaf must be >= 0");
  if (!(lambda_reg >= 0.0)) throw ConfigError("lambda_reg must be >= 0");
}

RegressionTree::RegressionTree() : nodes_(1) { nodes_[0].leaf_id = 0; }

RegressionTree RegressionTree::single_leaf(double value) {
  RegressionTree tree;
  tree.nodes_[0].value = value;
  return tree;
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  const auto n = nodes_.size();
  if (n == 0) throw TreeError("tree has no nodes");
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::uint8_t> leaf_seen;
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t leaves = 0;
  while (!stack.empty()) {
    const auto& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.is_leaf()) {
      ++leaves;
      if (!std::isfinite(node.value)) throw TreeError("non-finite leaf value");
      continue;
    }
    for (auto child : {node.left, node.right}) {
      if (child < 0 || static_cast<std::size_t>(child) >= n) {
        throw TreeError("dangling child index " + std::to_string(child));
      }
      if (seen[static_cast<std::size_t>(child)]) {
        throw TreeError("node " + std::to_string(child) + " reached twice");
      }
      seen[static_cast<std::size_t>(child)] = 1;
      stack.push_back(static_cast<std::size_t>(child));
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw TreeError("unreachable nodes in tree");
  }
  leaf_seen.assign(leaves, 0);
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) continue;
    if (node.leaf_id < 0 || static_cast<std::size_t>(node.leaf_id) >= leaves ||
        leaf_seen[static_cast<std::size_t>(node.leaf_id)]) {
      throw TreeError("leaf ids must enumerate 0..n_leaves-1");
    }
    leaf_seen[static_cast<std::size_t>(node.leaf_id)] = 1;
  }
  n_leaves_ = leaves;
}

std::vector<double> RegressionTree::leaf_values() const {
  std::vector<double> out(n_leaves_);
  for (const auto& node : nodes_) {
    if (node.is_leaf()) out[static_cast<std::size_t>(node.leaf_id)] = node.value;
  }
  return out;
}

std::int32_t RegressionTree::max_feature() const noexcept {
  std::int32_t best = -1;
  for (const auto& node : nodes_) best = std::max(best, node.feature);
  return best;
}

std::vector<std::uint32_t> leaf_assignments(const RegressionTree& tree, const BinnedDataset& data,
                                            int threads) {
  std::vector<std::uint32_t> out(data.n_instances);
  parallel_for(data.n_instances, threads, [&](std::size_t i) {
    out[i] = static_cast<std::uint32_t>(tree.leaf_index(data, i));
  });
  return out;
}

HistogramLayout::HistogramLayout(const BinnedDataset& data) {
  offsets_.reserve(data.n_features + 1);
  for (const auto& fb : data.feature_bins) offsets_.push_back(offsets_.back() + fb.n_bins());
}

HistogramLayout::HistogramLayout(std::vector<std::size_t> bins_per_feature) {
  for (auto b : bins_per_feature) offsets_.push_back(offsets_.back() + b);
}

Histogram build_histogram(const BinnedDataset& data, const HistogramLayout& layout,
                          std::span<const std::uint32_t> rows, std::span<const double> g,
                          std::span<const double> h, int threads) {
  Histogram out(layout.total_bins());
  std::vector<double> node_g(rows.size());
  std::vector<double> node_h(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    node_g[k] = g[rows[k]];
    node_h[k] = h[rows[k]];
  }
  parallel_for(layout.n_features(), threads, [&](std::size_t f) {
    const auto& column = data.bins[f];
    HistogramBin* bins = out.data() + layout.offset(f);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto& bin = bins[column[rows[k]]];
      bin.g += node_g[k];
      bin.h += node_h[k];
      ++bin.count;
    }
  });
  return out;
}

Histogram subtract_histogram(const Histogram& parent, const Histogram& sibling) {
  Histogram out(parent.size());
  for (std::size_t b = 0; b < parent.size(); ++b) {
    out[b].g = parent[b].g - sibling[b].g;
    out[b].h = parent[b].h - sibling[b].h;
    out[b].count = parent[b].count - sibling[b].count;
  }
  return out;
}

double split_score(double g, double h, double lambda) { return g * g / (h + lambda); }

std::optional<SplitCandidate> find_best_split(const Histogram& histogram,
                                              const HistogramLayout& layout,
                                              const NodeTotals& totals, const TreeConfig& config) {
  const double lambda = config.lambda_reg;
  if (!(totals.h + lambda > 0.0)) return std::nullopt;
  const double parent_score = split_score(totals.g, totals.h, lambda);
  const auto min_count = static_cast<std::size_t>(config.min_samples_leaf);

  std::optional<SplitCandidate> best;
  for (std::size_t f = 0; f < layout.n_features(); ++f) {
    const HistogramBin* bins = histogram.data() + layout.offset(f);
    const auto n_bins = layout.n_bins(f);
    double g_left = 0.0;
    double h_left = 0.0;
    std::size_t count_left = 0;
    for (std::size_t b = 0; b + 1 < n_bins; ++b) {
      g_left += bins[b].g;
      h_left += bins[b].h;
      count_left += bins[b].count;
      const std::size_t count_right = totals.count - count_left;
      if (count_left < min_count || count_right < min_count) continue;
      const double g_right = totals.g - g_left;
      const double h_right = totals.h - h_left;
      if (h_left < config.min_hessian_leaf || h_right < config.min_hessian_leaf) continue;
      if (!(h_left + lambda > 0.0) || !(h_right + lambda > 0.0)) continue;
      const double gain = split_score(g_left, h_left, lambda) +
                          split_score(g_right, h_right, lambda) - parent_score;
      if (!(gain > 0.0) || (best && !(gain > best->gain))) continue;
      best = SplitCandidate{f,      static_cast<BinIndex>(b), gain,       g_left,     h_left,
                            g_right, h_right,                 count_left, count_right};
    }
  }
  return best;
}

namespace {

struct OpenLeaf {
  std::int32_t node;
  std::vector<std::uint32_t> rows;
  Histogram histogram;
  NodeTotals totals;
  std::optional<SplitCandidate> best;
};

double leaf_output(const NodeTotals& totals, double lambda) {
  const double denom = totals.h + lambda;
  return denom > 0.0 ? -totals.g / denom : 0.0;
}

}  // namespace

RegressionTree build_tree(const BinnedDataset& data, std::span<const double> g,
                          std::span<const double> h, std::span<const std::uint32_t> active,
                          const TreeConfig& config, int threads) {
  config.validate();
  if (active.empty()) throw TreeError("no active instances to fit");
  if (g.size() != data.n_instances || h.size() != data.n_instances) {
    throw TreeError("gradient length does not match the dataset");
  }

  const HistogramLayout layout(data);
  std::vector<TreeNode> nodes(1);
  std::vector<OpenLeaf> leaves;

  OpenLeaf root{0, {active.begin(), active.end()}, {}, {}, std::nullopt};
  for (auto r : root.rows) {
    root.totals.g += g[r];
    root.totals.h += h[r];
  }
  root.totals.count = root.rows.size();
  if (!(root.totals.h + config.lambda_reg > 0.0)) return RegressionTree::single_leaf(0.0);
  root.histogram = build_histogram(data, layout, root.rows, g, h, threads);
  root.best = find_best_split(root.histogram, layout, root.totals, config);
  leaves.push_back(std::move(root));

  while (leaves.size() < static_cast<std::size_t>(config.max_leaves)) {
    std::size_t pick = leaves.size();
    for (std::size_t k = 0; k < leaves.size(); ++k) {
      if (!leaves[k].best) continue;
      if (pick == leaves.size() || leaves[k].best->gain > leaves[pick].best->gain ||
          (leaves[k].best->gain == leaves[pick].best->gain && leaves[k].node < leaves[pick].node)) {
        pick = k;
      }
    }
    if (pick == leaves.size()) break;

    OpenLeaf parent = std::move(leaves[pick]);
    leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
    const SplitCandidate split = *parent.best;

    const auto& column = data.bins[split.feature];
    OpenLeaf left{static_cast<std::int32_t>(nodes.size()), {}, {}, {split.g_left, split.h_left, split.count_left}, {}};
    OpenLeaf right{static_cast<std::int32_t>(nodes.size() + 1), {}, {}, {split.g_right, split.h_right, split.count_right}, {}};
    left.rows.reserve(split.count_left);
    right.rows.reserve(split.count_right);
    for (auto r : parent.rows) (column[r] <= split.bin ? left.rows : right.rows).push_back(r);

    OpenLeaf& small = left.rows.size() <= right.rows.size() ? left : right;
    OpenLeaf& large = left.rows.size() <= right.rows.size() ? right : left;
    small.histogram = build_histogram(data, layout, small.rows, g, h, threads);
    large.histogram = subtract_histogram(parent.histogram, small.histogram);

    auto& node = nodes[static_cast<std::size_t>(parent.node)];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.split_bin = split.bin;
    node.left = left.node;
    node.right = right.node;
    nodes.emplace_back();
    nodes.emplace_back();

    left.best = find_best_split(left.histogram, layout, left.totals, config);
    right.best = find_best_split(right.histogram, layout, right.totals, config);
    leaves.push_back(std::move(left));
    leaves.push_back(std::move(right));
  }

  for (const auto& leaf : leaves) {
    nodes[static_cast<std::size_t>(leaf.node)].value = leaf_output(leaf.totals, config.lambda_reg);
  }
  std::int32_t next_id = 0;
  for (auto& node : nodes) {
    if (node.is_leaf()) node.leaf_id = next_id++;
  }
  return RegressionTree(std::move(nodes));
}

}  // namespace smartboost
