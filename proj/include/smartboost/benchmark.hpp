#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smartboost/boosting.hpp"

namespace smartboost {

enum class TargetStatus { reached, not_reached, failed };

std::string_view to_string(TargetStatus status);

// One row of a strategy comparison table.
struct BenchmarkRow {
  Strategy strategy = Strategy::full;
  double rate = 1.0;
  TargetStatus status = TargetStatus::not_reached;
  double metric = 0.0;   // at the first iteration reaching the target, else the last
  int iterations = 0;    // that iteration (1-based), else the total run
  double asri = 0.0;     // mean sampled fraction over those iterations
  double time_s = 0.0;   // cumulative training time at that iteration
  std::string error;     // for failed rows
};

struct StrategyRun {
  Strategy strategy = Strategy::full;
  double rate = 1.0;
};

// The metric a run is judged by: validation when present, training otherwise.
double judged_metric(const IterationReport& report);

BenchmarkRow summarize_run(Strategy strategy, double rate,
                           std::span<const IterationReport> reports, double target,
                           bool higher_is_better);

struct BenchmarkResult {
  std::vector<BenchmarkRow> rows;
  std::vector<std::vector<IterationReport>> curves;  // parallel to rows; empty when failed

  bool all_succeeded() const;
};

// Trains once per requested strategy with otherwise identical settings.
BenchmarkResult run_benchmark(const BinnedDataset& data, const BinnedDataset* valid,
                              const BoostingConfig& base, std::span<const StrategyRun> runs,
                              double target);

// strategy,status,rate,metric,iterations,asri,time_s
void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRow> rows);

// iteration,train_metric,valid_metric,sampled_fraction,elapsed_s
void write_report_csv(std::ostream& out, std::span<const IterationReport> reports);
std::vector<IterationReport> read_report_csv(std::istream& in);

}  // namespace smartboost
