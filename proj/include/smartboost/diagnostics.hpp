#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smartboost/boosting.hpp"

namespace smartboost {

// Outcome of a randomized inequality check. `worst_margin` is the smallest
// (rhs - lhs) seen; negative beyond the slack means a violation.
struct InequalityCheck {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;
};

// l''(xi) / l''(y) <= e^{2|xi - y|} for the logistic loss, on pairs drawn
// uniformly from [-range, range]^2.
InequalityCheck check_hessian_ratio(std::size_t n_samples, double range, std::uint64_t seed = 1);

// g^2 / h >= l(y_hat) per instance for the logistic loss, labels in {0,1}
// and y_hat uniform in [-range, range].
InequalityCheck check_loss_bound(std::size_t n_samples, double range, std::uint64_t seed = 2,
                                 double prob_clamp_eps = 1e-6);

struct ConvergenceReport {
  std::vector<double> losses;
  std::vector<double> ratios;  // L_{t+1} / L_t
  double gamma_hat = 0.0;      // geometric mean of the ratios
  double max_ratio = 0.0;
  double slope = 0.0;          // of log L against iteration
  double r_squared = 0.0;      // of the same fit
  bool contracting = false;    // every ratio < 1
  double mu_hat = 1.0;         // max_t e^{2 max_i |nu f_t(x_i)|}
  std::vector<double> delta_hat;
};

// Fits the whole span; callers slice the window they care about.
ConvergenceReport check_contraction(std::span<const double> losses);

// Uses train_metric as the loss, restricted to iterations [first, last] (1-based, inclusive).
ConvergenceReport check_contraction(std::span<const IterationReport> reports, int first, int last);

// min over non-empty leaves of |sum w g| / (2 sqrt(sum (w g)^2)).
double measure_weak_learnability(std::span<const double> weighted_g,
                                 std::span<const std::uint32_t> leaf, std::size_t n_leaves);

struct VarianceComparison {
  double proportional = 0.0;
  double uniform = 0.0;
};

// Both schemes at an expected sample count of budget * n.
VarianceComparison compare_estimator_variance(std::span<const double> g, double budget);

// Heavy-tailed (Pareto, random sign) gradient vector for sweeps.
std::vector<double> heavy_tailed_gradients(std::size_t n, std::uint64_t seed, std::uint64_t index);

struct VarianceSweep {
  std::size_t vectors = 0;
  std::size_t counterexamples = 0;
  double worst_margin = 0.0;  // min over vectors of (uniform - proportional)
};

VarianceSweep variance_sweep(std::size_t n_vectors, std::size_t length, std::uint64_t seed = 3);

// key=value lines, one per entry.
std::string format_key_values(std::span<const std::pair<std::string, std::string>> entries);

}  // namespace smartboost
