#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "smartboost/data.hpp"

namespace smartboost {

enum class ObjectiveKind { logistic, lambdarank };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(std::string_view name);

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::logistic;
  double sigma = 1.0;            // steepness of the pairwise logistic in LambdaMART
  int ndcg_truncation = 10;      // k of NDCG@k
  double prob_clamp_eps = 1e-6;  // psi is clamped into [eps, 1 - eps]

  void validate() const;
};

// Floor applied to second derivatives before they divide or weight anything.
inline constexpr double kHessianFloor = 1e-9;

struct Gradients {
  std::vector<double> g;
  std::vector<double> h;
};

// psi = e^y / (e^y + e^-y) = 1 / (1 + e^{-2y}), clamped into [eps, 1 - eps].
double sigmoid_prob(double y_hat, double eps);

// Per-instance logistic loss y ln(1/psi) + (1-y) ln(1/(1-psi)).
double logistic_loss_single(double label, double y_hat, double eps);

// g = 2(psi - y), h = 4 psi (1 - psi). Labels must be 0 or 1.
Gradients logistic_gradients(std::span<const double> labels, std::span<const double> predictions,
                             const ObjectiveConfig& config, int threads = 1);

// Mean per-instance loss.
double logistic_loss(std::span<const double> labels, std::span<const double> predictions,
                     const ObjectiveConfig& config);

// Gain 2^rel - 1, discount 1 / log2(rank + 1), truncated at k.
double dcg_at_k(std::span<const double> relevances_in_rank_order, int k);

// Rank (0-based) of every document of one query under descending score,
// ties broken by position within the query.
std::vector<std::size_t> rank_positions(std::span<const double> scores);

// NDCG@k of one query. Queries whose ideal DCG is 0 score 1.
double ndcg_at_k(std::span<const double> scores, std::span<const double> relevances,
                 QueryGroup group, int k);

// Unweighted mean of per-query NDCG@k.
double mean_ndcg(std::span<const double> scores, std::span<const double> relevances,
                 std::span<const QueryGroup> groups, int k);

double ideal_dcg(std::span<const double> relevances, int k);

// |NDCG change| from swapping the ranked positions of documents i and j
// (indices local to the query). O(1) given ranks and the ideal DCG.
double delta_ndcg(std::span<const double> relevances, std::span<const std::size_t> ranks,
                  std::size_t i, std::size_t j, double ideal, int k);

// LambdaMART first/second derivatives. h is returned without the floor.
Gradients lambdarank_gradients(std::span<const double> labels, std::span<const double> scores,
                               std::span<const QueryGroup> groups, const ObjectiveConfig& config,
                               int threads = 1);

// Pairwise loss sum |dNDCG_ij| log(1 + e^{-sigma (s_i - s_j)}) with the
// dNDCG factors taken from the ranking induced by `frozen_scores`.
double lambdarank_loss(std::span<const double> labels, std::span<const double> scores,
                       std::span<const double> frozen_scores, std::span<const QueryGroup> groups,
                       const ObjectiveConfig& config);

// Dispatch on config.kind; ranking needs groups.
Gradients compute_gradients(const ObjectiveConfig& config, std::span<const double> labels,
                            std::span<const double> predictions, std::span<const QueryGroup> groups,
                            int threads = 1);

// Logistic: mean log-loss (lower is better). Ranking: mean NDCG@k (higher is better).
double evaluate_metric(const ObjectiveConfig& config, std::span<const double> labels,
                       std::span<const double> predictions, std::span<const QueryGroup> groups);

bool metric_higher_is_better(ObjectiveKind kind);

}  // namespace smartboost
