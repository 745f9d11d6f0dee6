#include "smartboost/boosting.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include "smartboost/diagnostics.hpp"
#include "smartboost/error.hpp"
#include "smartboost/parallel.hpp"

namespace smartboost {

void BoostingConfig::validate() const {
  if (n_iterations < 1) throw ConfigError("number of iterations must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) throw ConfigError("shrinkage must be in (0, 1]");
  if (!(eta >= 0.0)) throw ConfigError("eta must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  sampling.validate();
  tree.validate();
  objective.validate();
}

double asri(std::span<const IterationReport> reports) {
  if (reports.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : reports) total += r.sampled_fraction;
  return total / static_cast<double>(reports.size());
}

std::vector<double> regularized_gradients(std::span<const double> g,
                                          std::span<const double> weight,
                                          std::span<const std::uint32_t> prev_leaf,
                                          std::size_t n_prev_leaves,
                                          std::span<const double> tilde_grad, double eta) {
  const auto n = g.size();
  if (weight.size() != n || prev_leaf.size() != n || tilde_grad.size() != n) {
    throw TrainingError("regularized gradient inputs differ in length");
  }
  std::vector<double> leaf_sum(n_prev_leaves, 0.0);
  std::vector<std::size_t> leaf_count(n_prev_leaves, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (prev_leaf[i] >= n_prev_leaves) throw TrainingError("leaf index out of range");
    leaf_sum[prev_leaf[i]] += tilde_grad[i];
    ++leaf_count[prev_leaf[i]];
  }
  std::vector<double> leaf_mean(n_prev_leaves, 0.0);
  for (std::size_t j = 0; j < n_prev_leaves; ++j) {
    if (leaf_count[j] > 0) leaf_mean[j] = leaf_sum[j] / static_cast<double>(leaf_count[j]);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = weight[i] == 0.0
                 ? 0.0
                 : weight[i] * (g[i] - tilde_grad[i] + eta * leaf_mean[prev_leaf[i]]);
  }
  return out;
}

void add_tree_predictions(const RegressionTree& tree, double shrinkage, const BinnedDataset& data,
                          std::span<double> predictions, int threads) {
  parallel_for(data.n_instances, threads,
               [&](std::size_t i) { predictions[i] += shrinkage * tree.predict(data, i); });
}

std::vector<double> predict_ensemble(const Ensemble& model, const BinnedDataset& data,
                                     int threads) {
  if (data.n_features != model.n_features()) {
    throw ModelError("model expects " + std::to_string(model.n_features()) +
                     " features, data has " + std::to_string(data.n_features));
  }
  std::vector<double> out(data.n_instances, model.base_score);
  for (const auto& tree : model.trees) {
    if (tree.max_feature() >= static_cast<std::int32_t>(data.n_features)) {
      throw ModelError("tree splits on a feature the data does not have");
    }
    add_tree_predictions(tree, model.shrinkage, data, out, threads);
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

SamplingDecision decide(const BoostingConfig& config, double target_rate, const Gradients& grad,
                        std::size_t n, std::uint64_t iteration) {
  SamplingConfig sampling = config.sampling;
  sampling.target_rate = target_rate;
  switch (sampling.strategy) {
    case Strategy::full:
      return full_decision(n);
    case Strategy::uniform:
      return sample_uniform(n, sampling, iteration, config.threads);
    case Strategy::trimming:
      return trim_weights(grad.h, sampling.trim_alpha);
    case Strategy::grad1:
      return sample_grad1(grad.g, sampling, iteration, config.threads);
    case Strategy::grad2:
      return sample_grad2(grad.h, sampling, iteration, config.threads);
  }
  throw ConfigError("unknown sampling strategy");
}

void check_training_data(const BinnedDataset& data, const BoostingConfig& config) {
  if (data.n_instances == 0) throw TrainingError("training set is empty");
  if (config.objective.kind == ObjectiveKind::lambdarank && !data.has_groups()) {
    throw TrainingError("ranking objective requires query groups");
  }
}

}  // namespace

TrainResult train(const BinnedDataset& data, const BinnedDataset* valid,
                  const BoostingConfig& config) {
  config.validate();
  check_training_data(data, config);
  if (valid && valid->n_features != data.n_features) {
    throw TrainingError("validation data has a different feature count");
  }
  if (valid && config.objective.kind == ObjectiveKind::lambdarank && !valid->has_groups()) {
    throw TrainingError("ranking validation data requires query groups");
  }

  const auto n = data.n_instances;
  const int threads = config.threads;
  const bool corrected =
      config.sampling.strategy == Strategy::grad2 && config.diagonal_correction;

  TrainResult result;
  auto& model = result.model;
  model.shrinkage = config.shrinkage;
  model.objective = config.objective.kind;
  model.feature_bins = data.feature_bins;

  std::vector<double> predictions(n, model.base_score);
  std::vector<double> valid_predictions(valid ? valid->n_instances : 0, model.base_score);
  // Gradients of the last two iterations; the older one is l'(y~) with
  // y~ the predictions two iterations back.
  std::vector<double> grad_prev;
  std::vector<double> grad_prev2;
  std::vector<std::uint32_t> prev_leaf;
  std::size_t prev_n_leaves = 0;

  double elapsed = 0.0;
  for (int t = 0; t < config.n_iterations; ++t) {
    const auto start = Clock::now();
    const auto iteration = static_cast<std::uint64_t>(t);

    Gradients grad =
        compute_gradients(config.objective, data.labels, predictions, data.groups, threads);
    for (auto& v : grad.h) v = std::max(v, kHessianFloor);

    double rate = config.sampling.target_rate;
    SamplingDecision decision = decide(config, rate, grad, n, iteration);
    if (decision.sampled_fraction == 0.0) {
      rate = std::min(1.0, 2.0 * rate);
      decision = decide(config, rate, grad, n, iteration);
      if (decision.sampled_fraction == 0.0) {
        throw TrainingError("iteration " + std::to_string(t + 1) + " sampled no instances");
      }
    }

    std::vector<double> g_weighted;
    if (corrected && !grad_prev2.empty()) {
      g_weighted = regularized_gradients(grad.g, decision.weight, prev_leaf, prev_n_leaves,
                                         grad_prev2, config.eta);
    } else {
      g_weighted.resize(n);
      for (std::size_t i = 0; i < n; ++i) g_weighted[i] = decision.weight[i] * grad.g[i];
    }
    std::vector<double> h_weighted(n);
    for (std::size_t i = 0; i < n; ++i) h_weighted[i] = decision.weight[i] * grad.h[i];

    const auto active = decision.active();
    RegressionTree tree = build_tree(data, g_weighted, h_weighted, active, config.tree, threads);
    if (corrected) {
      // One traversal serves both the update and the next iteration's leaf sets.
      auto leaf = leaf_assignments(tree, data, threads);
      const auto values = tree.leaf_values();
      for (std::size_t i = 0; i < n; ++i) predictions[i] += config.shrinkage * values[leaf[i]];
      prev_leaf = std::move(leaf);
      prev_n_leaves = tree.n_leaves();
    } else {
      add_tree_predictions(tree, config.shrinkage, data, predictions, threads);
    }
    elapsed += std::chrono::duration<double>(Clock::now() - start).count();

    IterationReport report;
    report.iteration = t + 1;
    report.sampled_fraction = decision.sampled_fraction;
    report.elapsed_seconds = elapsed;
    for (double v : tree.leaf_values()) {
      report.max_abs_update = std::max(report.max_abs_update, std::abs(config.shrinkage * v));
    }
    {
      std::vector<std::uint32_t> active_leaf(active.size());
      std::vector<double> active_g(active.size());
      for (std::size_t k = 0; k < active.size(); ++k) {
        active_leaf[k] = static_cast<std::uint32_t>(tree.leaf_index(data, active[k]));
        active_g[k] = g_weighted[active[k]];
      }
      report.weak_learnability = measure_weak_learnability(active_g, active_leaf, tree.n_leaves());
    }
    report.train_metric = evaluate_metric(config.objective, data.labels, predictions, data.groups);
    if (valid) {
      add_tree_predictions(tree, config.shrinkage, *valid, valid_predictions, threads);
      report.valid_metric =
          evaluate_metric(config.objective, valid->labels, valid_predictions, valid->groups);
    }
    result.reports.push_back(report);

    if (corrected) {
      grad_prev2 = std::move(grad_prev);
      grad_prev = std::move(grad.g);
    }
    model.trees.push_back(std::move(tree));
  }
  return result;
}

}  // namespace smartboost
