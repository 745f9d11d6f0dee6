#pragma once

// Slow reference implementations used by the unit and acceptance tests. None
// of these call into the library code they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "smartboost/data.hpp"

namespace smartboost::oracle {

// Exhaustive best-first tree. bins[f][i] is the bin of instance i on feature f.
struct BruteTree {
  std::vector<std::pair<int, int>> splits;  // (feature, bin) of the internal nodes, by node id
  std::vector<double> value;                // per instance; NaN when not active
  int n_leaves = 1;
};

inline BruteTree brute_force_tree(const std::vector<std::vector<int>>& bins,
                                  const std::vector<int>& n_bins, const std::vector<double>& g,
                                  const std::vector<double>& h, const std::vector<int>& active,
                                  int max_leaves, double lambda) {
  struct Leaf {
    int id;
    std::vector<int> members;
  };
  struct Best {
    bool found = false;
    int feature = 0;
    int bin = 0;
    double gain = 0.0;
  };
  auto sums = [&](const std::vector<int>& members) {
    double sg = 0.0;
    double sh = 0.0;
    for (int i : members) {
      sg += g[static_cast<std::size_t>(i)];
      sh += h[static_cast<std::size_t>(i)];
    }
    return std::pair{sg, sh};
  };
  auto score = [&](double sg, double sh) { return sg * sg / (sh + lambda); };
  auto best_split = [&](const std::vector<int>& members) {
    Best best;
    const auto [pg, ph] = sums(members);
    if (!(ph + lambda > 0.0)) return best;
    for (int f = 0; f < static_cast<int>(bins.size()); ++f) {
      for (int b = 0; b + 1 < n_bins[static_cast<std::size_t>(f)]; ++b) {
        std::vector<int> left;
        std::vector<int> right;
        for (int i : members) {
          (bins[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)] <= b ? left : right)
              .push_back(i);
        }
        if (left.empty() || right.empty()) continue;
        const auto [lg, lh] = sums(left);
        const auto [rg, rh] = sums(right);
        if (!(lh + lambda > 0.0) || !(rh + lambda > 0.0)) continue;
        const double gain = score(lg, lh) + score(rg, rh) - score(pg, ph);
        if (gain > 0.0 && (!best.found || gain > best.gain)) best = {true, f, b, gain};
      }
    }
    return best;
  };

  std::vector<Leaf> leaves{{0, active}};
  int next_id = 1;
  BruteTree out;
  std::vector<std::pair<int, std::pair<int, int>>> by_node;
  while (static_cast<int>(leaves.size()) < max_leaves) {
    int pick = -1;
    Best pick_best;
    for (int k = 0; k < static_cast<int>(leaves.size()); ++k) {
      const Best b = best_split(leaves[static_cast<std::size_t>(k)].members);
      if (!b.found) continue;
      if (pick < 0 || b.gain > pick_best.gain ||
          (b.gain == pick_best.gain &&
           leaves[static_cast<std::size_t>(k)].id < leaves[static_cast<std::size_t>(pick)].id)) {
        pick = k;
        pick_best = b;
      }
    }
    if (pick < 0) break;
    Leaf parent = leaves[static_cast<std::size_t>(pick)];
    leaves.erase(leaves.begin() + pick);
    Leaf left{next_id++, {}};
    Leaf right{next_id++, {}};
    for (int i : parent.members) {
      (bins[static_cast<std::size_t>(pick_best.feature)][static_cast<std::size_t>(i)] <=
               pick_best.bin
           ? left
           : right)
          .members.push_back(i);
    }
    by_node.push_back({parent.id, {pick_best.feature, pick_best.bin}});
    leaves.push_back(std::move(left));
    leaves.push_back(std::move(right));
  }

  std::sort(by_node.begin(), by_node.end());
  for (const auto& entry : by_node) out.splits.push_back(entry.second);
  out.value.assign(g.size(), std::nan(""));
  for (const auto& leaf : leaves) {
    const auto [sg, sh] = sums(leaf.members);
    const double v = sh + lambda > 0.0 ? -sg / (sh + lambda) : 0.0;
    for (int i : leaf.members) out.value[static_cast<std::size_t>(i)] = v;
  }
  out.n_leaves = static_cast<int>(leaves.size());
  return out;
}

// Dataset whose bins are given directly: feature values are the bin numbers,
// with every bin value present so binning keeps them apart.
inline RawDataset raw_from_bins(const std::vector<std::vector<int>>& bins,
                                const std::vector<int>& n_bins) {
  RawDataset raw;
  const std::size_t n = bins.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<FeatureValue> row;
    for (std::size_t f = 0; f < bins.size(); ++f) {
      if (bins[f][i] != 0) row.push_back({static_cast<std::uint32_t>(f + 1), double(bins[f][i])});
    }
    raw.append_row(0.0, row);
  }
  // Pad rows so every bin value of every feature is observed at least once.
  for (std::size_t f = 0; f < bins.size(); ++f) {
    for (int b = 0; b < n_bins[f]; ++b) {
      std::vector<FeatureValue> row;
      if (b != 0) row.push_back({static_cast<std::uint32_t>(f + 1), double(b)});
      raw.append_row(0.0, row);
    }
  }
  return raw;
}

// DCG of relevances listed in rank order, k-truncated.
inline double dcg(const std::vector<double>& ranked, int k) {
  double s = 0.0;
  for (std::size_t r = 0; r < ranked.size() && static_cast<int>(r) < k; ++r) {
    s += (std::pow(2.0, ranked[r]) - 1.0) / std::log2(static_cast<double>(r) + 2.0);
  }
  return s;
}

// Best DCG over every ordering of the documents.
inline double ideal_dcg_by_enumeration(std::vector<double> rels, int k) {
  std::sort(rels.begin(), rels.end());
  double best = 0.0;
  do {
    best = std::max(best, dcg(rels, k));
  } while (std::next_permutation(rels.begin(), rels.end()));
  return best;
}

// Orders documents by descending score with ties kept in input order.
inline std::vector<double> ranked_relevances(const std::vector<double>& scores,
                                             const std::vector<double>& rels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> out;
  for (auto i : order) out.push_back(rels[i]);
  return out;
}

inline double ndcg_full(const std::vector<double>& scores, const std::vector<double>& rels, int k) {
  const double ideal = ideal_dcg_by_enumeration(rels, k);
  if (ideal == 0.0) return 1.0;
  return dcg(ranked_relevances(scores, rels), k) / ideal;
}

// |NDCG after exchanging the positions of i and j - NDCG before|, recomputed
// from the full ranked list.
inline double delta_ndcg_by_swap(const std::vector<double>& scores, const std::vector<double>& rels,
                                 std::size_t i, std::size_t j, int k) {
  const double ideal = ideal_dcg_by_enumeration(rels, k);
  if (ideal == 0.0) return 0.0;
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> before;
  for (auto d : order) before.push_back(rels[d]);
  auto swapped = order;
  auto pi = std::find(swapped.begin(), swapped.end(), i);
  auto pj = std::find(swapped.begin(), swapped.end(), j);
  std::iter_swap(pi, pj);
  std::vector<double> after;
  for (auto d : swapped) after.push_back(rels[d]);
  return std::abs(dcg(after, k) - dcg(before, k)) / ideal;
}

// Linearly separable two-class points in the plane; the boundary is
// oblique so axis-aligned trees need many splits to carve it.
inline RawDataset separable_problem(std::size_t n, std::uint64_t seed, double margin = 0.05) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RawDataset raw;
  while (raw.n_instances() < n) {
    const double x = u(rng);
    const double y = u(rng);
    const double side = 0.6 * x + 0.8 * y;
    if (std::abs(side) < margin) continue;
    std::vector<FeatureValue> row{{1, x}, {2, y}};
    raw.append_row(side > 0.0 ? 1.0 : 0.0, row);
  }
  return raw;
}

// Noisy binary problem with a handful of dense features.
inline RawDataset noisy_problem(std::size_t n, std::size_t n_features, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RawDataset raw;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<FeatureValue> row;
    double margin = 0.0;
    for (std::size_t f = 0; f < n_features; ++f) {
      const double v = z(rng);
      margin += (f % 2 == 0 ? 1.0 : -0.5) * v / static_cast<double>(f + 1);
      row.push_back({static_cast<std::uint32_t>(f + 1), v});
    }
    const double p = 1.0 / (1.0 + std::exp(-2.0 * margin));
    raw.append_row(u(rng) < p ? 1.0 : 0.0, row);
  }
  return raw;
}

}  // namespace smartboost::oracle
