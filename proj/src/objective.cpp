#include "smartboost/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smartboost/error.hpp"
#include "smartboost/parallel.hpp"

namespace smartboost {

std::string_view to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::logistic:
      return "logistic";
    case ObjectiveKind::lambdarank:
      return "lambdarank";
  }
  return "unknown";
}

ObjectiveKind parse_objective_kind(std::string_view name) {
  if (name == "logistic") return ObjectiveKind::logistic;
  if (name == "lambdarank") return ObjectiveKind::lambdarank;
  throw ConfigError("unknown objective '" + std::string(name) + "'");
}

void ObjectiveConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (ndcg_truncation < 1) throw ConfigError("NDCG truncation k must be >= 1");
  if (!(prob_clamp_eps > 0.0 && prob_clamp_eps < 0.5)) {
    throw ConfigError("probability clamp must be in (0, 0.5)");
  }
}

bool metric_higher_is_better(ObjectiveKind kind) { return kind == ObjectiveKind::lambdarank; }

double sigmoid_prob(double y_hat, double eps) {
  const double psi = 1.0 / (1.0 + std::exp(-2.0 * y_hat));
  return std::clamp(psi, eps, 1.0 - eps);
}

double logistic_loss_single(double label, double y_hat, double eps) {
  const double psi = sigmoid_prob(y_hat, eps);
  return -label * std::log(psi) - (1.0 - label) * std::log(1.0 - psi);
}

namespace {

void check_binary(double y) {
  if (y != 0.0 && y != 1.0) {
    throw ObjectiveError("logistic objective needs labels in {0,1}, got " + std::to_string(y));
  }
}

void check_sizes(std::size_t a, std::size_t b) {
  if (a != b) {
    throw ObjectiveError("length mismatch: " + std::to_string(a) + " labels vs " +
                         std::to_string(b) + " predictions");
  }
}

double gain(double relevance) { return std::exp2(relevance) - 1.0; }

double discount(std::size_t rank, int k) {
  return rank < static_cast<std::size_t>(k) ? 1.0 / std::log2(static_cast<double>(rank) + 2.0)
                                             : 0.0;
}

// log(1 + e^{-x}) without overflow.
double softplus_neg(double x) { return std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

Gradients logistic_gradients(std::span<const double> labels, std::span<const double> predictions,
                             const ObjectiveConfig& config, int threads) {
  check_sizes(labels.size(), predictions.size());
  for (double y : labels) check_binary(y);
  Gradients out{std::vector<double>(labels.size()), std::vector<double>(labels.size())};
  parallel_for(labels.size(), threads, [&](std::size_t i) {
    const double psi = sigmoid_prob(predictions[i], config.prob_clamp_eps);
    out.g[i] = 2.0 * (psi - labels[i]);
    out.h[i] = 4.0 * psi * (1.0 - psi);
  });
  return out;
}

double logistic_loss(std::span<const double> labels, std::span<const double> predictions,
                     const ObjectiveConfig& config) {
  check_sizes(labels.size(), predictions.size());
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check_binary(labels[i]);
    total += logistic_loss_single(labels[i], predictions[i], config.prob_clamp_eps);
  }
  return total / static_cast<double>(labels.size());
}

double dcg_at_k(std::span<const double> relevances_in_rank_order, int k) {
  if (k < 1) throw ConfigError("NDCG truncation k must be >= 1");
  const auto depth = std::min(relevances_in_rank_order.size(), static_cast<std::size_t>(k));
  double dcg = 0.0;
  for (std::size_t r = 0; r < depth; ++r) dcg += gain(relevances_in_rank_order[r]) * discount(r, k);
  return dcg;
}

std::vector<std::size_t> rank_positions(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> ranks(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) ranks[order[r]] = r;
  return ranks;
}

double ideal_dcg(std::span<const double> relevances, int k) {
  std::vector<double> sorted(relevances.begin(), relevances.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return dcg_at_k(sorted, k);
}

double ndcg_at_k(std::span<const double> scores, std::span<const double> relevances,
                 QueryGroup group, int k) {
  check_sizes(relevances.size(), scores.size());
  if (group.size() == 0 || group.end > scores.size()) throw ObjectiveError("invalid query group");
  auto s = scores.subspan(group.begin, group.size());
  auto rel = relevances.subspan(group.begin, group.size());
  const double ideal = ideal_dcg(rel, k);
  if (ideal == 0.0) return 1.0;
  const auto ranks = rank_positions(s);
  std::vector<double> ranked(rel.size());
  for (std::size_t i = 0; i < rel.size(); ++i) ranked[ranks[i]] = rel[i];
  return dcg_at_k(ranked, k) / ideal;
}

double mean_ndcg(std::span<const double> scores, std::span<const double> relevances,
                 std::span<const QueryGroup> groups, int k) {
  if (groups.empty()) throw ObjectiveError("NDCG needs query groups");
  double total = 0.0;
  for (const auto& group : groups) total += ndcg_at_k(scores, relevances, group, k);
  return total / static_cast<double>(groups.size());
}

double delta_ndcg(std::span<const double> relevances, std::span<const std::size_t> ranks,
                  std::size_t i, std::size_t j, double ideal, int k) {
  if (ideal == 0.0) return 0.0;
  const double dg = gain(relevances[i]) - gain(relevances[j]);
  const double dd = discount(ranks[i], k) - discount(ranks[j], k);
  return std::abs(dg * dd) / ideal;
}

Gradients lambdarank_gradients(std::span<const double> labels, std::span<const double> scores,
                               std::span<const QueryGroup> groups, const ObjectiveConfig& config,
                               int threads) {
  check_sizes(labels.size(), scores.size());
  Gradients out{std::vector<double>(labels.size(), 0.0), std::vector<double>(labels.size(), 0.0)};
  const double sigma = config.sigma;
  const int k = config.ndcg_truncation;
  parallel_for(groups.size(), threads, [&](std::size_t q) {
    const auto group = groups[q];
    auto rel = labels.subspan(group.begin, group.size());
    auto s = scores.subspan(group.begin, group.size());
    const double ideal = ideal_dcg(rel, k);
    if (ideal == 0.0) return;
    const auto ranks = rank_positions(s);
    double* g = out.g.data() + group.begin;
    double* h = out.h.data() + group.begin;
    for (std::size_t a = 0; a < rel.size(); ++a) {
      for (std::size_t b = 0; b < rel.size(); ++b) {
        if (!(rel[a] > rel[b])) continue;
        const double delta = delta_ndcg(rel, ranks, a, b, ideal, k);
        // rho = 1 / (1 + e^{sigma (s_a - s_b)}); e^x / (1 + e^x)^2 = rho (1 - rho)
        const double rho = 1.0 / (1.0 + std::exp(sigma * (s[a] - s[b])));
        const double lambda = sigma * delta * rho;
        const double curvature = sigma * sigma * delta * rho * (1.0 - rho);
        g[a] -= lambda;
        g[b] += lambda;
        h[a] += curvature;
        h[b] += curvature;
      }
    }
  });
  return out;
}

double lambdarank_loss(std::span<const double> labels, std::span<const double> scores,
                       std::span<const double> frozen_scores, std::span<const QueryGroup> groups,
                       const ObjectiveConfig& config) {
  check_sizes(labels.size(), scores.size());
  check_sizes(labels.size(), frozen_scores.size());
  double total = 0.0;
  for (const auto& group : groups) {
    auto rel = labels.subspan(group.begin, group.size());
    auto s = scores.subspan(group.begin, group.size());
    const double ideal = ideal_dcg(rel, config.ndcg_truncation);
    const auto ranks = rank_positions(frozen_scores.subspan(group.begin, group.size()));
    for (std::size_t a = 0; a < rel.size(); ++a) {
      for (std::size_t b = 0; b < rel.size(); ++b) {
        if (!(rel[a] > rel[b])) continue;
        const double delta = delta_ndcg(rel, ranks, a, b, ideal, config.ndcg_truncation);
        total += delta * softplus_neg(config.sigma * (s[a] - s[b]));
      }
    }
  }
  return total;
}

Gradients compute_gradients(const ObjectiveConfig& config, std::span<const double> labels,
                            std::span<const double> predictions, std::span<const QueryGroup> groups,
                            int threads) {
  switch (config.kind) {
    case ObjectiveKind::logistic:
      return logistic_gradients(labels, predictions, config, threads);
    case ObjectiveKind::lambdarank:
      if (groups.empty()) throw ObjectiveError("ranking objective needs query groups");
      return lambdarank_gradients(labels, predictions, groups, config, threads);
  }
  throw ObjectiveError("unknown objective");
}

double evaluate_metric(const ObjectiveConfig& config, std::span<const double> labels,
                       std::span<const double> predictions, std::span<const QueryGroup> groups) {
  if (config.kind == ObjectiveKind::logistic) return logistic_loss(labels, predictions, config);
  return mean_ndcg(predictions, labels, groups, config.ndcg_truncation);
}

}  // namespace smartboost
