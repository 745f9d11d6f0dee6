#include "smartboost/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smartboost/error.hpp"
#include "smartboost/objective.hpp"
#include "smartboost/rng.hpp"
#include "smartboost/sampling.hpp"

namespace smartboost {

namespace {

constexpr double kSlack = 1e-12;

// 4 psi (1 - psi) without the probability clamp.
double logistic_curvature(double y) {
  const double psi = 1.0 / (1.0 + std::exp(-2.0 * y));
  return 4.0 * psi * (1.0 - psi);
}

void record(InequalityCheck& check, double margin) {
  ++check.samples;
  if (check.samples == 1 || margin < check.worst_margin) check.worst_margin = margin;
  if (margin < -kSlack) ++check.violations;
}

}  // namespace

InequalityCheck check_hessian_ratio(std::size_t n_samples, double range, std::uint64_t seed) {
  const CounterRng rng(seed);
  InequalityCheck out;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double xi = range * (2.0 * rng.uniform(0, s) - 1.0);
    const double y = range * (2.0 * rng.uniform(1, s) - 1.0);
    const double ratio = logistic_curvature(xi) / logistic_curvature(y);
    record(out, std::exp(2.0 * std::abs(xi - y)) - ratio);
  }
  return out;
}

InequalityCheck check_loss_bound(std::size_t n_samples, double range, std::uint64_t seed,
                                 double prob_clamp_eps) {
  const CounterRng rng(seed);
  ObjectiveConfig config;
  config.prob_clamp_eps = prob_clamp_eps;
  InequalityCheck out;
  for (std::size_t s = 0; s < n_samples; ++s) {
    const double label = rng.bernoulli(0.5, 0, s) ? 1.0 : 0.0;
    const double y_hat = range * (2.0 * rng.uniform(1, s) - 1.0);
    const double lbl[] = {label};
    const double pred[] = {y_hat};
    const auto grad = logistic_gradients(lbl, pred, config);
    const double lhs = logistic_loss_single(label, y_hat, prob_clamp_eps);
    record(out, grad.g[0] * grad.g[0] / grad.h[0] - lhs);
  }
  return out;
}

ConvergenceReport check_contraction(std::span<const double> losses) {
  if (losses.size() < 3) throw DiagnosticsError("contraction check needs at least 3 losses");
  ConvergenceReport out;
  out.losses.assign(losses.begin(), losses.end());
  for (double l : losses) {
    if (!(l > 0.0) || !std::isfinite(l)) throw DiagnosticsError("losses must be positive and finite");
  }
  out.contracting = true;
  out.max_ratio = 0.0;
  for (std::size_t t = 0; t + 1 < losses.size(); ++t) {
    const double r = losses[t + 1] / losses[t];
    out.ratios.push_back(r);
    out.max_ratio = std::max(out.max_ratio, r);
    if (!(r < 1.0)) out.contracting = false;
  }
  const auto m = static_cast<double>(losses.size());
  out.gamma_hat = std::pow(losses.back() / losses.front(), 1.0 / (m - 1.0));

  // Least squares of log L on t.
  double mean_t = (m - 1.0) / 2.0;
  double mean_y = 0.0;
  for (double l : losses) mean_y += std::log(l);
  mean_y /= m;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t t = 0; t < losses.size(); ++t) {
    const double dx = static_cast<double>(t) - mean_t;
    const double dy = std::log(losses[t]) - mean_y;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  out.slope = sxy / sxx;
  out.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return out;
}

ConvergenceReport check_contraction(std::span<const IterationReport> reports, int first,
                                    int last) {
  if (first < 1 || last < first || static_cast<std::size_t>(last) > reports.size()) {
    throw DiagnosticsError("contraction window outside the trace");
  }
  std::vector<double> losses;
  for (int t = first; t <= last; ++t) {
    losses.push_back(reports[static_cast<std::size_t>(t - 1)].train_metric);
  }
  auto out = check_contraction(losses);
  double max_step = 0.0;
  for (int t = first; t <= last; ++t) {
    const auto& r = reports[static_cast<std::size_t>(t - 1)];
    max_step = std::max(max_step, r.max_abs_update);
    out.delta_hat.push_back(r.weak_learnability);
  }
  out.mu_hat = std::exp(2.0 * max_step);
  return out;
}

double measure_weak_learnability(std::span<const double> weighted_g,
                                 std::span<const std::uint32_t> leaf, std::size_t n_leaves) {
  if (weighted_g.size() != leaf.size()) {
    throw DiagnosticsError("gradient/leaf length mismatch");
  }
  std::vector<double> sum(n_leaves, 0.0);
  std::vector<double> sum_sq(n_leaves, 0.0);
  for (std::size_t i = 0; i < leaf.size(); ++i) {
    if (leaf[i] >= n_leaves) throw DiagnosticsError("leaf index out of range");
    sum[leaf[i]] += weighted_g[i];
    sum_sq[leaf[i]] += weighted_g[i] * weighted_g[i];
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n_leaves; ++j) {
    if (sum_sq[j] == 0.0) continue;
    best = std::min(best, 0.5 * std::abs(sum[j]) / std::sqrt(sum_sq[j]));
  }
  return std::isinf(best) ? 0.0 : best;
}

VarianceComparison compare_estimator_variance(std::span<const double> g, double budget) {
  if (!(budget > 0.0 && budget <= 1.0)) throw ConfigError("budget must be in (0, 1]");
  std::vector<double> importance(g.size());
  std::transform(g.begin(), g.end(), importance.begin(), [](double v) { return std::abs(v); });
  VarianceComparison out;
  std::vector<double> p(g.size(), budget);
  out.uniform = estimator_variance(g, p);
  if (std::all_of(importance.begin(), importance.end(), [](double a) { return a == 0.0; })) {
    out.proportional = 0.0;
    return out;
  }
  const double rho = calibrate_rho(importance, budget);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = importance[i];
    p[i] = a > 0.0 ? (rho == kRhoSaturated ? 1.0 : std::min(1.0, rho * a)) : 0.0;
  }
  out.proportional = estimator_variance(g, p);
  return out;
}

std::vector<double> heavy_tailed_gradients(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  const CounterRng rng(seed);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t counter = index * n + i;
    const double u = 1.0 - rng.uniform(2 * index, counter);  // (0, 1]
    const double magnitude = std::pow(u, -1.0 / 1.5);         // Pareto, tail index 1.5
    g[i] = rng.bernoulli(0.5, 2 * index + 1, counter) ? magnitude : -magnitude;
  }
  return g;
}

VarianceSweep variance_sweep(std::size_t n_vectors, std::size_t length, std::uint64_t seed) {
  const CounterRng budgets(seed ^ 0xb5ad4eceda1ce2a9ULL);
  VarianceSweep out;
  for (std::size_t v = 0; v < n_vectors; ++v) {
    const auto g = heavy_tailed_gradients(length, seed, v);
    const double budget = 0.05 + 0.95 * budgets.uniform(0, v);
    const auto cmp = compare_estimator_variance(g, budget);
    const double margin = cmp.uniform - cmp.proportional;
    if (v == 0 || margin < out.worst_margin) out.worst_margin = margin;
    if (cmp.proportional > cmp.uniform + 1e-9) ++out.counterexamples;
    ++out.vectors;
  }
  return out;
}

std::string format_key_values(std::span<const std::pair<std::string, std::string>> entries) {
  std::string out;
  for (const auto& [key, value] : entries) {
    out += key;
    out += '=';
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace smartboost
