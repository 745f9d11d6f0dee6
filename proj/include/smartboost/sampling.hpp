#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace smartboost {

enum class Strategy { full, uniform, trimming, grad1, grad2 };

std::string_view to_string(Strategy strategy);
Strategy parse_strategy(std::string_view name);

struct SamplingConfig {
  Strategy strategy = Strategy::full;
  double target_rate = 1.0;  // expected fraction of instances per iteration
  double trim_alpha = 0.10;  // fraction of Hessian mass dropped by trimming
  std::uint64_t seed = 0;
  bool uniform_reweight = true;  // false gives the unweighted Friedman subsample

  void validate() const;
};

// One iteration's instance selection.
struct SamplingDecision {
  std::vector<double> p;             // inclusion probability
  std::vector<std::uint8_t> q;       // 1 if the instance is used this iteration
  std::vector<double> weight;        // q / p, 0 when q = 0
  double sampled_fraction = 0.0;     // sum(q) / n

  std::size_t size() const noexcept { return p.size(); }
  std::vector<std::uint32_t> active() const;
};

// Returned by calibrate_rho when even rho -> inf cannot reach the target:
// every positive-importance instance is then included with p = 1.
inline constexpr double kRhoSaturated = std::numeric_limits<double>::infinity();

// rho with mean(min(1, rho * importance_i)) == target_rate, by bisection.
// The returned rho never undershoots the target.
double calibrate_rho(std::span<const double> importance, double target_rate);

// Every instance with p = 1.
SamplingDecision full_decision(std::size_t n);

// p_i = min(1, rho * importance_i), q_i ~ Bernoulli(p_i) keyed by (seed, iteration, i).
SamplingDecision sample_proportional(std::span<const double> importance, double target_rate,
                                     std::uint64_t seed, std::uint64_t iteration, int threads = 1);

SamplingDecision sample_grad1(std::span<const double> g, const SamplingConfig& config,
                              std::uint64_t iteration, int threads = 1);

// Importance is max(h_i, kHessianFloor).
SamplingDecision sample_grad2(std::span<const double> h, const SamplingConfig& config,
                              std::uint64_t iteration, int threads = 1);

SamplingDecision sample_uniform(std::size_t n, const SamplingConfig& config,
                                std::uint64_t iteration, int threads = 1);

// Keeps the smallest set of largest-h instances whose h-sum reaches
// (1 - trim_alpha) of the total. Deterministic, p = 1 for kept instances.
SamplingDecision trim_weights(std::span<const double> h, double trim_alpha);

// Exact variance of sum_i (q_i / p_i) g_i under independent Bernoulli q:
// sum_i g_i^2 (1 - p_i) / p_i.
double estimator_variance(std::span<const double> g, std::span<const double> p);

}  // namespace smartboost
