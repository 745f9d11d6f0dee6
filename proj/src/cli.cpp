#include "smartboost/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "smartboost/benchmark.hpp"
#include "smartboost/boosting.hpp"
#include "smartboost/diagnostics.hpp"
#include "smartboost/error.hpp"
#include "smartboost/model_io.hpp"

namespace smartboost {

DataFormat parse_data_format(std::string_view name) {
  if (name == "libsvm") return DataFormat::libsvm;
  if (name == "letor") return DataFormat::letor;
  throw ConfigError("unknown data format '" + std::string(name) + "'");
}

RawDataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file " + path.string());
  try {
    return format == DataFormat::libsvm ? parse_libsvm(in) : parse_letor(in);
  } catch (const ParseError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

MetricSpec parse_metric(std::string_view name) {
  if (name == "logloss") return {ObjectiveKind::logistic, 10};
  if (name.starts_with("ndcg@")) {
    int k = 0;
    auto digits = name.substr(5);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc{} && ptr == digits.data() + digits.size() && k >= 1) {
      return {ObjectiveKind::lambdarank, k};
    }
  }
  throw ConfigError("unknown metric '" + std::string(name) + "' (use logloss or ndcg@<k>)");
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("SMARTBOOST_THREADS")) {
    int v = 0;
    std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size() && v > 0) return v;
    throw ConfigError("SMARTBOOST_THREADS must be a positive integer");
  }
  return 1;
}

namespace {

struct TrainingOptions {
  std::string data;
  std::string format = "libsvm";
  std::string valid;
  std::string objective = "logistic";
  std::string strategy = "full";
  double rate = 1.0;
  double trim_alpha = 0.10;
  double eta = 1.0;
  double sigma = 1.0;
  int trees = 100;
  int leaves = 8;
  double shrinkage = 0.1;
  int bins = kDefaultBins;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string metric;
  bool no_correction = false;
  bool no_uniform_reweight = false;
};

void add_training_options(CLI::App* cmd, TrainingOptions& o) {
  cmd->add_option("--data", o.data, "Training data file")->required();
  cmd->add_option("--format", o.format, "Data format: libsvm or letor")->capture_default_str();
  cmd->add_option("--valid", o.valid, "Validation data file (same format)");
  cmd->add_option("--objective", o.objective, "logistic or lambdarank")->capture_default_str();
  cmd->add_option("--strategy", o.strategy, "full, uniform, trimming, grad1 or grad2")
      ->capture_default_str();
  cmd->add_option("--rate", o.rate, "Expected sampled fraction per iteration")
      ->capture_default_str();
  cmd->add_option("--trim-alpha", o.trim_alpha, "Hessian mass dropped by trimming")
      ->capture_default_str();
  cmd->add_option("--eta", o.eta, "Leaf-mean weight of the grad2 correction")
      ->capture_default_str();
  cmd->add_option("--sigma", o.sigma, "LambdaMART sigma")->capture_default_str();
  cmd->add_option("--trees", o.trees, "Boosting iterations")->capture_default_str();
  cmd->add_option("--leaves", o.leaves, "Maximum leaves per tree")->capture_default_str();
  cmd->add_option("--shrinkage", o.shrinkage, "Learning rate nu")->capture_default_str();
  cmd->add_option("--bins", o.bins, "Histogram bins per feature")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (default: SMARTBOOST_THREADS or 1)");
  cmd->add_option("--metric", o.metric, "logloss or ndcg@<k> (default follows the objective)");
  cmd->add_flag("--no-correction", o.no_correction, "Disable the grad2 gradient correction");
  cmd->add_flag("--no-uniform-reweight", o.no_uniform_reweight,
                "Uniform strategy without 1/p weights");
}

BoostingConfig boosting_config(const TrainingOptions& o) {
  BoostingConfig config;
  config.n_iterations = o.trees;
  config.shrinkage = o.shrinkage;
  config.eta = o.eta;
  config.diagonal_correction = !o.no_correction;
  config.sampling.strategy = parse_strategy(o.strategy);
  config.sampling.target_rate = o.rate;
  config.sampling.trim_alpha = o.trim_alpha;
  config.sampling.seed = o.seed;
  config.sampling.uniform_reweight = !o.no_uniform_reweight;
  config.tree.max_leaves = o.leaves;
  config.objective.kind = parse_objective_kind(o.objective);
  config.objective.sigma = o.sigma;
  if (!o.metric.empty()) {
    const auto metric = parse_metric(o.metric);
    if (metric.objective != config.objective.kind) {
      throw ConfigError("metric " + o.metric + " does not fit objective " + o.objective);
    }
    config.objective.ndcg_truncation = metric.k;
  }
  config.threads = resolve_threads(o.threads);
  config.validate();
  return config;
}

void prepare_labels(RawDataset& raw, ObjectiveKind kind) {
  if (kind != ObjectiveKind::logistic) return;
  try {
    normalize_binary_labels(raw.labels);
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
}

struct LoadedData {
  BinnedDataset train;
  std::optional<BinnedDataset> valid;
};

LoadedData load_training_data(const TrainingOptions& o, const BoostingConfig& config) {
  const auto format = parse_data_format(o.format);
  if (o.bins < 2 || o.bins > kMaxBins) throw ConfigError("--bins out of range");
  auto raw = load_dataset(o.data, format);
  prepare_labels(raw, config.objective.kind);
  std::optional<RawDataset> raw_valid;
  std::size_t n_features = raw.max_feature_index();
  if (!o.valid.empty()) {
    raw_valid = load_dataset(o.valid, format);
    prepare_labels(*raw_valid, config.objective.kind);
    n_features = std::max<std::size_t>(n_features, raw_valid->max_feature_index());
  }
  LoadedData out{bin_features(raw, o.bins, config.threads, n_features), std::nullopt};
  if (raw_valid) out.valid = apply_bins(*raw_valid, out.train.feature_bins, config.threads);
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write " + path.string());
  out << content;
  if (!out) throw ModelError("failed writing " + path.string());
}

int cmd_train(const TrainingOptions& o, const std::string& model_out, const std::string& report_out,
              std::ostream& out) {
  const auto config = boosting_config(o);
  const auto data = load_training_data(o, config);
  auto result = train(data.train, data.valid ? &*data.valid : nullptr, config);
  if (!report_out.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, result.reports);
    write_text_file(report_out, csv.str());
  }
  if (!model_out.empty()) save_model(model_out, result.model);
  const auto& last = result.reports.back();
  fmt::print(out, "iterations={}\ntrain_metric={:.6f}\n", last.iteration, last.train_metric);
  if (last.valid_metric) fmt::print(out, "valid_metric={:.6f}\n", *last.valid_metric);
  fmt::print(out, "asri={:.6f}\nelapsed_s={:.6f}\n", asri(result.reports), last.elapsed_seconds);
  return 0;
}

BinnedDataset load_for_model(const Ensemble& model, const std::string& path,
                             const std::string& format_name, int threads) {
  auto raw = load_dataset(path, parse_data_format(format_name));
  prepare_labels(raw, model.objective);
  return apply_bins(raw, model.feature_bins, threads);
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& format, const std::string& metric_name, int threads_flag,
             std::ostream& out) {
  const int threads = resolve_threads(threads_flag);
  const auto model = load_model(model_path);
  ObjectiveConfig objective;
  objective.kind = model.objective;
  if (!metric_name.empty()) {
    const auto metric = parse_metric(metric_name);
    if (metric.objective != model.objective) {
      throw ConfigError("metric " + metric_name + " does not fit a " +
                        std::string(to_string(model.objective)) + " model");
    }
    objective.ndcg_truncation = metric.k;
  }
  const auto data = load_for_model(model, data_path, format, threads);
  if (model.objective == ObjectiveKind::lambdarank && !data.has_groups()) {
    throw DataError("NDCG needs query ids in the data");
  }
  const auto predictions = predict_ensemble(model, data, threads);
  fmt::print(out, "metric={:.6f}\n", evaluate_metric(objective, data.labels, predictions, data.groups));
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& format, const std::string& out_path, int threads_flag,
                std::ostream& out) {
  const int threads = resolve_threads(threads_flag);
  const auto model = load_model(model_path);
  auto raw = load_dataset(data_path, parse_data_format(format));
  const auto data = apply_bins(raw, model.feature_bins, threads);
  const auto predictions = predict_ensemble(model, data, threads);
  std::string text;
  for (double p : predictions) text += fmt::format("{}\n", p);
  if (out_path.empty()) {
    out << text;
  } else {
    write_text_file(out_path, text);
  }
  return 0;
}

std::vector<StrategyRun> benchmark_runs(const std::vector<std::string>& strategies,
                                        const std::vector<std::string>& rates, double default_rate) {
  std::map<Strategy, double> overrides;
  for (const auto& entry : rates) {
    auto eq = entry.find('=');
    if (eq == std::string::npos) throw ConfigError("--rates entries look like grad2=0.3");
    double rate = 0.0;
    auto value = std::string_view(entry).substr(eq + 1);
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), rate);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
      throw ConfigError("bad rate in '" + entry + "'");
    }
    overrides[parse_strategy(entry.substr(0, eq))] = rate;
  }
  std::vector<StrategyRun> runs;
  for (const auto& name : strategies) {
    const auto s = parse_strategy(name);
    const auto it = overrides.find(s);
    double rate = it != overrides.end() ? it->second : default_rate;
    if (s == Strategy::full || s == Strategy::trimming) rate = 1.0;
    runs.push_back({s, rate});
  }
  return runs;
}

int cmd_benchmark(const TrainingOptions& o, const std::vector<std::string>& strategies,
                  const std::vector<std::string>& rates, double target,
                  const std::string& table_out, const std::string& curves_dir, std::ostream& out,
                  std::ostream& err) {
  const auto config = boosting_config(o);
  const auto runs = benchmark_runs(strategies, rates, o.rate);
  const auto data = load_training_data(o, config);
  const auto result =
      run_benchmark(data.train, data.valid ? &*data.valid : nullptr, config, runs, target);

  std::ostringstream table;
  write_benchmark_csv(table, result.rows);
  if (table_out.empty()) {
    out << table.str();
  } else {
    write_text_file(table_out, table.str());
  }
  if (!curves_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(curves_dir, ec);
    for (std::size_t k = 0; k < result.rows.size(); ++k) {
      if (result.curves[k].empty()) continue;
      std::ostringstream csv;
      write_report_csv(csv, result.curves[k]);
      write_text_file(std::filesystem::path(curves_dir) /
                          (std::string(to_string(result.rows[k].strategy)) + ".csv"),
                      csv.str());
    }
  }
  for (const auto& row : result.rows) {
    if (row.status == TargetStatus::failed) {
      fmt::print(err, "strategy {} failed: {}\n", to_string(row.strategy), row.error);
    }
  }
  return result.all_succeeded() ? 0 : static_cast<int>(ExitCode::training);
}

struct DiagnoseOptions {
  std::size_t samples = 100000;
  double range = 6.0;
  std::uint64_t seed = 1;
  std::size_t vectors = 1000;
  std::size_t length = 100;
  std::string report_in;
  int first = 10;
  int last = 150;
};

int cmd_diagnose(const DiagnoseOptions& o, std::ostream& out) {
  using Entry = std::pair<std::string, std::string>;
  std::vector<Entry> entries;
  const auto hessian = check_hessian_ratio(o.samples, o.range, o.seed);
  entries.emplace_back("hessian_ratio.samples", fmt::format("{}", hessian.samples));
  entries.emplace_back("hessian_ratio.violations", fmt::format("{}", hessian.violations));
  entries.emplace_back("hessian_ratio.worst_margin", fmt::format("{}", hessian.worst_margin));
  const auto bound = check_loss_bound(o.samples, o.range, o.seed + 1);
  entries.emplace_back("loss_bound.samples", fmt::format("{}", bound.samples));
  entries.emplace_back("loss_bound.violations", fmt::format("{}", bound.violations));
  entries.emplace_back("loss_bound.worst_margin", fmt::format("{}", bound.worst_margin));
  const auto sweep = variance_sweep(o.vectors, o.length, o.seed + 2);
  entries.emplace_back("variance.vectors", fmt::format("{}", sweep.vectors));
  entries.emplace_back("variance.counterexamples", fmt::format("{}", sweep.counterexamples));
  entries.emplace_back("variance.worst_margin", fmt::format("{}", sweep.worst_margin));
  bool ok = hessian.violations == 0 && bound.violations == 0 && sweep.counterexamples == 0;

  if (!o.report_in.empty()) {
    std::ifstream in(o.report_in);
    if (!in) throw DataError("cannot open report " + o.report_in);
    const auto reports = read_report_csv(in);
    const auto last = std::min<int>(o.last, static_cast<int>(reports.size()));
    const auto conv = check_contraction(reports, o.first, last);
    entries.emplace_back("contraction.first", fmt::format("{}", o.first));
    entries.emplace_back("contraction.last", fmt::format("{}", last));
    entries.emplace_back("contraction.gamma_hat", fmt::format("{}", conv.gamma_hat));
    entries.emplace_back("contraction.max_ratio", fmt::format("{}", conv.max_ratio));
    entries.emplace_back("contraction.r_squared", fmt::format("{}", conv.r_squared));
    entries.emplace_back("contraction.slope", fmt::format("{}", conv.slope));
    entries.emplace_back("contraction.contracting", conv.contracting ? "true" : "false");
  }
  entries.emplace_back("status", ok ? "ok" : "violations");
  out << format_key_values(entries);
  return ok ? 0 : static_cast<int>(ExitCode::training);
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient tree boosting with gradient-proportional importance sampling"};
  app.name("smartboost");
  app.require_subcommand(1);

  TrainingOptions train_opts;
  std::string model_out;
  std::string report_out;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a per-iteration report");
  add_training_options(train_cmd, train_opts);
  train_cmd->add_option("--model-out", model_out, "Model file to write");
  train_cmd->add_option("--report-out", report_out, "Per-iteration report CSV");

  std::string model_path;
  std::string data_path;
  std::string format = "libsvm";
  std::string metric;
  std::string predictions_out;
  int threads = 0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a model on a data file");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  eval_cmd->add_option("--data", data_path, "Data file")->required();
  eval_cmd->add_option("--format", format, "libsvm or letor")->capture_default_str();
  eval_cmd->add_option("--metric", metric, "logloss or ndcg@<k>");
  eval_cmd->add_option("--threads", threads, "Worker threads");

  auto* predict_cmd = app.add_subcommand("predict", "Write raw model scores, one per line");
  predict_cmd->add_option("--model", model_path, "Model file")->required();
  predict_cmd->add_option("--data", data_path, "Data file")->required();
  predict_cmd->add_option("--format", format, "libsvm or letor")->capture_default_str();
  predict_cmd->add_option("--out", predictions_out, "Output file (default: stdout)");
  predict_cmd->add_option("--threads", threads, "Worker threads");

  TrainingOptions bench_opts;
  std::vector<std::string> strategies{"full", "uniform", "trimming", "grad1", "grad2"};
  std::vector<std::string> rates;
  double target = 0.0;
  std::string table_out;
  std::string curves_dir;
  auto* bench_cmd = app.add_subcommand("benchmark", "Compare sampling strategies against a target");
  add_training_options(bench_cmd, bench_opts);
  bench_cmd->add_option("--strategies", strategies, "Strategies to run")->delimiter(',');
  bench_cmd->add_option("--rates", rates, "Per-strategy rates, e.g. grad2=0.3,uniform=0.4")
      ->delimiter(',');
  bench_cmd->add_option("--target", target, "Metric target (loss <= or NDCG >=)")->required();
  bench_cmd->add_option("--table-out", table_out, "Table CSV (default: stdout)");
  bench_cmd->add_option("--curves-dir", curves_dir, "Directory for per-strategy curve CSVs");

  DiagnoseOptions diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "Check the convergence lemmas numerically");
  diag_cmd->add_option("--samples", diag.samples, "Random samples per lemma")->capture_default_str();
  diag_cmd->add_option("--range", diag.range, "Sampling range for predictions")->capture_default_str();
  diag_cmd->add_option("--seed", diag.seed, "Seed")->capture_default_str();
  diag_cmd->add_option("--vectors", diag.vectors, "Gradient vectors in the variance sweep")
      ->capture_default_str();
  diag_cmd->add_option("--length", diag.length, "Length of each swept vector")->capture_default_str();
  diag_cmd->add_option("--report-in", diag.report_in, "Report CSV for the contraction check");
  diag_cmd->add_option("--first", diag.first, "First iteration of the fit window")->capture_default_str();
  diag_cmd->add_option("--last", diag.last, "Last iteration of the fit window")->capture_default_str();

  std::vector<std::string> argv_storage{"smartboost"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : static_cast<int>(ExitCode::usage);
  }

  try {
    if (*train_cmd) return cmd_train(train_opts, model_out, report_out, out);
    if (*eval_cmd) return cmd_eval(model_path, data_path, format, metric, threads, out);
    if (*predict_cmd) return cmd_predict(model_path, data_path, format, predictions_out, threads, out);
    if (*bench_cmd) {
      return cmd_benchmark(bench_opts, strategies, rates, target, table_out, curves_dir, out, err);
    }
    if (*diag_cmd) return cmd_diagnose(diag, out);
  } catch (const ConfigError& e) {
    fmt::print(err, "config error: {}\n", e.what());
    return static_cast<int>(ExitCode::usage);
  } catch (const DataError& e) {
    fmt::print(err, "data error: {}\n", e.what());
    return static_cast<int>(ExitCode::data);
  } catch (const ModelError& e) {
    fmt::print(err, "model error: {}\n", e.what());
    return static_cast<int>(ExitCode::model_io);
  } catch (const Error& e) {
    fmt::print(err, "training error: {}\n", e.what());
    return static_cast<int>(ExitCode::training);
  }
  return static_cast<int>(ExitCode::usage);
}

}  // namespace smartboost
