#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "smartboost/data.hpp"
#include "smartboost/objective.hpp"
#include "smartboost/sampling.hpp"
#include "smartboost/tree.hpp"

namespace smartboost {

struct BoostingConfig {
  int n_iterations = 100;
  double shrinkage = 0.1;
  // Weight of the leaf-mean gradient term in the grad2 correction.
  double eta = 1.0;
  // grad2 only: replace g by g - l'(y~) + eta * leafmean(l'(y~)) from the
  // third iteration on. Off reduces grad2 to plain Hessian-proportional sampling.
  bool diagonal_correction = true;
  SamplingConfig sampling;
  TreeConfig tree;
  ObjectiveConfig objective;
  int threads = 1;

  void validate() const;
};

struct IterationReport {
  int iteration = 0;  // 1-based
  double train_metric = 0.0;
  std::optional<double> valid_metric;
  double sampled_fraction = 0.0;
  double elapsed_seconds = 0.0;  // cumulative training time, metrics excluded
  double max_abs_update = 0.0;   // max_i |nu f(x_i)| of this iteration's tree
  double weak_learnability = 0.0;
};

// Mean sampled fraction over the given iterations.
double asri(std::span<const IterationReport> reports);

struct Ensemble {
  std::vector<RegressionTree> trees;
  double shrinkage = 0.1;
  double base_score = 0.0;
  ObjectiveKind objective = ObjectiveKind::logistic;
  std::vector<FeatureBins> feature_bins;

  std::size_t n_features() const noexcept { return feature_bins.size(); }
  friend bool operator==(const Ensemble&, const Ensemble&) = default;
};

struct TrainResult {
  Ensemble model;
  std::vector<IterationReport> reports;
};

// Runs config.n_iterations boosting rounds with the configured sampling
// strategy. `valid`, when given, must be binned with the training thresholds.
TrainResult train(const BinnedDataset& data, const BinnedDataset* valid,
                  const BoostingConfig& config);

// (q/p)(g_i - l'(y~_i) + eta * mean_{k in I_j(i)} l'(y~_k)) where I_j(i) is the
// leaf of the previous tree that holds instance i. `tilde_grad` is l'(y~).
std::vector<double> regularized_gradients(std::span<const double> g,
                                          std::span<const double> weight,
                                          std::span<const std::uint32_t> prev_leaf,
                                          std::size_t n_prev_leaves,
                                          std::span<const double> tilde_grad, double eta);

// base_score + nu * sum_t tree_t(x), trees applied in order.
std::vector<double> predict_ensemble(const Ensemble& model, const BinnedDataset& data,
                                     int threads = 1);

// Adds nu * tree(x) to every prediction.
void add_tree_predictions(const RegressionTree& tree, double shrinkage, const BinnedDataset& data,
                          std::span<double> predictions, int threads = 1);

}  // namespace smartboost
