#include "smartboost/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "smartboost/error.hpp"
#include "smartboost/objective.hpp"
#include "smartboost/parallel.hpp"
#include "smartboost/rng.hpp"

namespace smartboost {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::full:
      return "full";
    case Strategy::uniform:
      return "uniform";
    case Strategy::trimming:
      return "trimming";
    case Strategy::grad1:
      return "grad1";
    case Strategy::grad2:
      return "grad2";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::full, Strategy::uniform, Strategy::trimming, Strategy::grad1,
                 Strategy::grad2}) {
    if (name == to_string(s)) return s;
  }
  throw ConfigError("unknown sampling strategy '" + std::string(name) + "'");
}

void SamplingConfig::validate() const {
  if (!(target_rate > 0.0 && target_rate <= 1.0)) {
    throw ConfigError("target rate must be in (0, 1]");
  }
  if (!(trim_alpha >= 0.0 && trim_alpha < 1.0)) throw ConfigError("trim alpha must be in [0, 1)");
}

std::vector<std::uint32_t> SamplingDecision::active() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i]) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

namespace {

double expected_count(std::span<const double> importance, double rho) {
  double total = 0.0;
  for (double a : importance) total += std::min(1.0, rho * a);
  return total;
}

void finish(SamplingDecision& d) {
  std::size_t used = 0;
  for (auto v : d.q) used += v;
  d.sampled_fraction = d.q.empty() ? 0.0 : static_cast<double>(used) / d.q.size();
}

}  // namespace

double calibrate_rho(std::span<const double> importance, double target_rate) {
  if (!(target_rate > 0.0 && target_rate <= 1.0)) {
    throw ConfigError("target rate must be in (0, 1]");
  }
  std::size_t positive = 0;
  double total = 0.0;
  for (double a : importance) {
    if (a < 0.0 || !std::isfinite(a)) throw SamplingError("importance must be finite and >= 0");
    if (a > 0.0) {
      ++positive;
      total += a;
    }
  }
  if (positive == 0) throw SamplingError("all importances are zero; iteration has no signal");

  const double target = target_rate * static_cast<double>(importance.size());
  if (target >= static_cast<double>(positive)) return kRhoSaturated;

  // Uncapped solution is a lower bound since capping only removes mass.
  double lo = target / total;
  if (expected_count(importance, lo) >= target) return lo;
  double hi = 2.0 * lo;
  while (expected_count(importance, hi) < target) {
    lo = hi;
    hi *= 2.0;
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    const double mid = lo + (hi - lo) / 2.0;
    if (expected_count(importance, mid) >= target) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

SamplingDecision full_decision(std::size_t n) {
  SamplingDecision d;
  d.p.assign(n, 1.0);
  d.q.assign(n, 1);
  d.weight.assign(n, 1.0);
  d.sampled_fraction = n == 0 ? 0.0 : 1.0;
  return d;
}

SamplingDecision sample_proportional(std::span<const double> importance, double target_rate,
                                     std::uint64_t seed, std::uint64_t iteration, int threads) {
  const double rho = calibrate_rho(importance, target_rate);
  const bool saturated = rho == kRhoSaturated;
  const CounterRng rng(seed);
  const auto n = importance.size();
  SamplingDecision d;
  d.p.resize(n);
  d.q.resize(n);
  d.weight.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const double a = importance[i];
    const double p = a > 0.0 ? (saturated ? 1.0 : std::min(1.0, rho * a)) : 0.0;
    const bool take = p > 0.0 && rng.bernoulli(p, iteration, i);
    d.p[i] = p;
    d.q[i] = take ? 1 : 0;
    d.weight[i] = take ? 1.0 / p : 0.0;
  });
  finish(d);
  return d;
}

SamplingDecision sample_grad1(std::span<const double> g, const SamplingConfig& config,
                              std::uint64_t iteration, int threads) {
  std::vector<double> importance(g.size());
  std::transform(g.begin(), g.end(), importance.begin(), [](double v) { return std::abs(v); });
  return sample_proportional(importance, config.target_rate, config.seed, iteration, threads);
}

SamplingDecision sample_grad2(std::span<const double> h, const SamplingConfig& config,
                              std::uint64_t iteration, int threads) {
  std::vector<double> importance(h.size());
  std::transform(h.begin(), h.end(), importance.begin(),
                 [](double v) { return std::max(v, kHessianFloor); });
  return sample_proportional(importance, config.target_rate, config.seed, iteration, threads);
}

SamplingDecision sample_uniform(std::size_t n, const SamplingConfig& config,
                                std::uint64_t iteration, int threads) {
  if (n == 0) throw SamplingError("cannot sample from an empty dataset");
  if (!(config.target_rate > 0.0 && config.target_rate <= 1.0)) {
    throw ConfigError("target rate must be in (0, 1]");
  }
  const double p = config.target_rate;
  const double kept_weight = config.uniform_reweight ? 1.0 / p : 1.0;
  const CounterRng rng(config.seed);
  SamplingDecision d;
  d.p.assign(n, p);
  d.q.resize(n);
  d.weight.resize(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const bool take = rng.bernoulli(p, iteration, i);
    d.q[i] = take ? 1 : 0;
    d.weight[i] = take ? kept_weight : 0.0;
  });
  finish(d);
  return d;
}

SamplingDecision trim_weights(std::span<const double> h, double trim_alpha) {
  if (!(trim_alpha >= 0.0 && trim_alpha < 1.0)) throw ConfigError("trim alpha must be in [0, 1)");
  const auto n = h.size();
  if (trim_alpha == 0.0) return full_decision(n);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return h[a] > h[b]; });
  double total = 0.0;
  for (auto i : order) total += h[i];
  const double threshold = (1.0 - trim_alpha) * total;

  // Trimmed instances get p = 0 so that p = 1 always implies q = 1.
  SamplingDecision d;
  d.p.assign(n, 0.0);
  d.q.assign(n, 0);
  d.weight.assign(n, 0.0);
  double kept = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto i = order[r];
    d.p[i] = 1.0;
    d.q[i] = 1;
    d.weight[i] = 1.0;
    kept += h[i];
    if (kept >= threshold) break;
  }
  finish(d);
  return d;
}

double estimator_variance(std::span<const double> g, std::span<const double> p) {
  if (g.size() != p.size()) throw SamplingError("gradient/probability length mismatch");
  double variance = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0) continue;
    if (!(p[i] > 0.0)) {
      throw SamplingError("instance " + std::to_string(i) + " has a gradient but zero probability");
    }
    variance += g[i] * g[i] * (1.0 - p[i]) / p[i];
  }
  return variance;
}

}  // namespace smartboost
