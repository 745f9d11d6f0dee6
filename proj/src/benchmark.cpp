#include "smartboost/benchmark.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "smartboost/error.hpp"

namespace smartboost {

std::string_view to_string(TargetStatus status) {
  switch (status) {
    case TargetStatus::reached:
      return "reached";
    case TargetStatus::not_reached:
      return "not_reached";
    case TargetStatus::failed:
      return "failed";
  }
  return "unknown";
}

double judged_metric(const IterationReport& report) {
  return report.valid_metric.value_or(report.train_metric);
}

BenchmarkRow summarize_run(Strategy strategy, double rate,
                           std::span<const IterationReport> reports, double target,
                           bool higher_is_better) {
  BenchmarkRow row;
  row.strategy = strategy;
  row.rate = rate;
  if (reports.empty()) {
    row.status = TargetStatus::failed;
    row.error = "no iterations";
    return row;
  }
  std::size_t stop = reports.size() - 1;
  row.status = TargetStatus::not_reached;
  for (std::size_t t = 0; t < reports.size(); ++t) {
    const double m = judged_metric(reports[t]);
    if (higher_is_better ? m >= target : m <= target) {
      stop = t;
      row.status = TargetStatus::reached;
      break;
    }
  }
  row.metric = judged_metric(reports[stop]);
  row.iterations = reports[stop].iteration;
  row.asri = asri(reports.first(stop + 1));
  row.time_s = reports[stop].elapsed_seconds;
  return row;
}

bool BenchmarkResult::all_succeeded() const {
  for (const auto& row : rows) {
    if (row.status == TargetStatus::failed) return false;
  }
  return true;
}

BenchmarkResult run_benchmark(const BinnedDataset& data, const BinnedDataset* valid,
                              const BoostingConfig& base, std::span<const StrategyRun> runs,
                              double target) {
  BenchmarkResult out;
  const bool higher = metric_higher_is_better(base.objective.kind);
  for (const auto& run : runs) {
    BoostingConfig config = base;
    config.sampling.strategy = run.strategy;
    config.sampling.target_rate = run.rate;
    try {
      auto trained = train(data, valid, config);
      out.rows.push_back(summarize_run(run.strategy, run.rate, trained.reports, target, higher));
      out.curves.push_back(std::move(trained.reports));
    } catch (const Error& e) {
      BenchmarkRow row;
      row.strategy = run.strategy;
      row.rate = run.rate;
      row.status = TargetStatus::failed;
      row.error = e.what();
      out.rows.push_back(std::move(row));
      out.curves.emplace_back();
    }
  }
  return out;
}

void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRow> rows) {
  out << "strategy,status,rate,metric,iterations,asri,time_s\n";
  for (const auto& row : rows) {
    if (row.status == TargetStatus::failed) {
      fmt::print(out, "{},{},{},,,,\n", to_string(row.strategy), to_string(row.status), row.rate);
      continue;
    }
    fmt::print(out, "{},{},{},{},{},{},{}\n", to_string(row.strategy), to_string(row.status),
               row.rate, row.metric, row.iterations, row.asri, row.time_s);
  }
}

void write_report_csv(std::ostream& out, std::span<const IterationReport> reports) {
  out << "iteration,train_metric,valid_metric,sampled_fraction,elapsed_s\n";
  for (const auto& r : reports) {
    fmt::print(out, "{},{},{},{},{}\n", r.iteration, r.train_metric,
               r.valid_metric ? fmt::format("{}", *r.valid_metric) : std::string(),
               r.sampled_fraction, r.elapsed_seconds);
  }
}

namespace {

double csv_real(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(line, "bad number '" + std::string(s) + "' in report CSV");
  }
  return v;
}

}  // namespace

std::vector<IterationReport> read_report_csv(std::istream& in) {
  std::vector<IterationReport> out;
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line)) return out;
  ++number;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 5) throw ParseError(number, "report CSV rows need 5 fields");
    IterationReport r;
    r.iteration = static_cast<int>(csv_real(fields[0], number));
    r.train_metric = csv_real(fields[1], number);
    if (!fields[2].empty()) r.valid_metric = csv_real(fields[2], number);
    r.sampled_fraction = csv_real(fields[3], number);
    r.elapsed_seconds = csv_real(fields[4], number);
    out.push_back(r);
  }
  return out;
}

}  // namespace smartboost
