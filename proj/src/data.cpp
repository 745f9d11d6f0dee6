#include "smartboost/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>

#include "smartboost/error.hpp"
#include "smartboost/parallel.hpp"

namespace smartboost {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

// Whitespace tokenizer over one line; stops at a '#' comment.
class Tokens {
 public:
  explicit Tokens(std::string_view line) : rest_(line) {
    if (auto hash = rest_.find('#'); hash != std::string_view::npos) rest_ = rest_.substr(0, hash);
  }

  std::optional<std::string_view> next() {
    std::size_t i = 0;
    while (i < rest_.size() && is_space(rest_[i])) ++i;
    if (i == rest_.size()) return std::nullopt;
    std::size_t j = i;
    while (j < rest_.size() && !is_space(rest_[j])) ++j;
    auto token = rest_.substr(i, j - i);
    rest_ = rest_.substr(j);
    return token;
  }

 private:
  std::string_view rest_;
};

double parse_real(std::string_view s, std::size_t line, const char* what) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw ParseError(line, std::string("malformed ") + what + " '" + std::string(s) + "'");
  }
  return value;
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t line, const char* what) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError(line, std::string("malformed ") + what + " '" + std::string(s) + "'");
  }
  return value;
}

FeatureValue parse_feature(std::string_view token, std::size_t line) {
  auto colon = token.find(':');
  if (colon == std::string_view::npos) {
    throw ParseError(line, "expected <index>:<value>, got '" + std::string(token) + "'");
  }
  auto index = parse_int<std::uint32_t>(token.substr(0, colon), line, "feature index");
  if (index < 1) throw ParseError(line, "feature index must be >= 1");
  return {index, parse_real(token.substr(colon + 1), line, "feature value")};
}

void check_increasing(std::span<const FeatureValue> features, std::size_t line) {
  for (std::size_t k = 1; k < features.size(); ++k) {
    if (features[k].index <= features[k - 1].index) {
      throw ParseError(line, "feature indices not strictly increasing at index " +
                                 std::to_string(features[k].index));
    }
  }
}

template <typename LineHandler>
void for_each_line(std::istream& in, LineHandler&& handle) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    handle(std::string_view(line), number);
  }
}

}  // namespace

std::uint32_t RawDataset::max_feature_index() const noexcept {
  std::uint32_t best = 0;
  for (const auto& e : entries) best = std::max(best, e.index);
  return best;
}

void RawDataset::append_row(double label, std::span<const FeatureValue> features) {
  labels.push_back(label);
  entries.insert(entries.end(), features.begin(), features.end());
  row_offsets.push_back(entries.size());
}

RawDataset parse_libsvm(std::istream& in) {
  RawDataset out;
  std::vector<FeatureValue> row;
  for_each_line(in, [&](std::string_view line, std::size_t number) {
    Tokens tokens(line);
    auto label = tokens.next();
    if (!label) return;
    row.clear();
    while (auto token = tokens.next()) row.push_back(parse_feature(*token, number));
    check_increasing(row, number);
    out.append_row(parse_real(*label, number, "label"), row);
  });
  return out;
}

RawDataset parse_libsvm(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in);
}

RawDataset parse_letor(std::istream& in) {
  RawDataset file_order;
  std::vector<std::int64_t> qids;
  std::vector<FeatureValue> row;
  for_each_line(in, [&](std::string_view line, std::size_t number) {
    Tokens tokens(line);
    auto label = tokens.next();
    if (!label) return;
    auto qid = tokens.next();
    if (!qid || !qid->starts_with("qid:")) throw ParseError(number, "missing qid token");
    qids.push_back(parse_int<std::int64_t>(qid->substr(4), number, "qid"));
    row.clear();
    while (auto token = tokens.next()) row.push_back(parse_feature(*token, number));
    check_increasing(row, number);
    file_order.append_row(parse_real(*label, number, "label"), row);
  });

  // Stable regroup by first appearance of each qid.
  std::unordered_map<std::int64_t, std::size_t> group_of;
  std::vector<std::int64_t> group_qid;
  std::vector<std::size_t> group_index(qids.size());
  for (std::size_t i = 0; i < qids.size(); ++i) {
    auto [it, inserted] = group_of.try_emplace(qids[i], group_qid.size());
    if (inserted) group_qid.push_back(qids[i]);
    group_index[i] = it->second;
  }
  std::vector<std::size_t> order(qids.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return group_index[a] < group_index[b]; });

  RawDataset out;
  out.query_ids.emplace();
  out.labels.reserve(qids.size());
  out.entries.reserve(file_order.entries.size());
  for (auto i : order) {
    out.append_row(file_order.labels[i], file_order.row(i));
    out.query_ids->push_back(qids[i]);
  }
  return out;
}

RawDataset parse_letor(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_letor(in);
}

std::vector<QueryGroup> query_groups(const RawDataset& raw) {
  std::vector<QueryGroup> groups;
  if (!raw.query_ids) return groups;
  const auto& ids = *raw.query_ids;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= ids.size(); ++i) {
    if (i == ids.size() || ids[i] != ids[begin]) {
      groups.push_back({begin, i});
      begin = i;
    }
  }
  return groups;
}

void normalize_binary_labels(std::vector<double>& labels) {
  for (auto& y : labels) {
    if (y == -1.0 || y == 0.0) {
      y = 0.0;
    } else if (y != 1.0) {
      throw ConfigError("binary objective needs labels in {-1,+1} or {0,1}, got " +
                        std::to_string(y));
    }
  }
}

BinIndex FeatureBins::bin(double value) const noexcept {
  auto it = std::lower_bound(upper_bounds.begin(), upper_bounds.end(), value);
  auto idx = static_cast<std::size_t>(it - upper_bounds.begin());
  return static_cast<BinIndex>(std::min(idx, upper_bounds.size() - 1));
}

namespace {

double split_point(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  return (mid >= lo && mid < hi) ? mid : lo;
}

}  // namespace

FeatureBins make_feature_bins(std::vector<double> values, int n_bins) {
  if (n_bins < 2 || n_bins > kMaxBins) {
    throw ConfigError("n_bins must be in [2, " + std::to_string(kMaxBins) + "], got " +
                      std::to_string(n_bins));
  }
  FeatureBins out;
  std::sort(values.begin(), values.end());

  std::vector<double> distinct;
  std::vector<std::size_t> cumulative;  // count of values <= distinct[k]
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (distinct.empty() || values[i] != distinct.back()) {
      distinct.push_back(values[i]);
      cumulative.push_back(0);
    }
    cumulative.back() = i + 1;
  }

  const auto n_distinct = distinct.size();
  if (n_distinct <= static_cast<std::size_t>(n_bins)) {
    for (std::size_t k = 0; k + 1 < n_distinct; ++k) {
      out.upper_bounds.push_back(split_point(distinct[k], distinct[k + 1]));
    }
  } else {
    const double total = static_cast<double>(values.size());
    std::size_t last_cut = 0;
    bool have_cut = false;
    for (int q = 1; q < n_bins; ++q) {
      const double target = total * q / n_bins;
      auto it = std::lower_bound(cumulative.begin(), cumulative.end(), target,
                                 [](std::size_t c, double t) { return static_cast<double>(c) < t; });
      auto k = static_cast<std::size_t>(it - cumulative.begin());
      if (k + 1 >= n_distinct) break;
      if (have_cut && k <= last_cut) continue;
      out.upper_bounds.push_back(split_point(distinct[k], distinct[k + 1]));
      last_cut = k;
      have_cut = true;
    }
  }
  out.upper_bounds.push_back(std::numeric_limits<double>::infinity());
  return out;
}

namespace {

struct ColumnEntry {
  std::uint32_t instance;
  double value;
};

std::vector<std::vector<ColumnEntry>> to_columns(const RawDataset& raw, std::size_t n_features) {
  std::vector<std::vector<ColumnEntry>> columns(n_features);
  for (std::size_t i = 0; i < raw.n_instances(); ++i) {
    for (const auto& fv : raw.row(i)) {
      columns[fv.index - 1].push_back({static_cast<std::uint32_t>(i), fv.value});
    }
  }
  return columns;
}

BinnedDataset binned_shell(const RawDataset& raw, std::size_t n_features) {
  BinnedDataset out;
  out.n_instances = raw.n_instances();
  out.n_features = n_features;
  out.labels = raw.labels;
  out.groups = query_groups(raw);
  out.bins.resize(n_features);
  out.feature_bins.resize(n_features);
  return out;
}

void fill_column(std::vector<BinIndex>& column, const FeatureBins& fb,
                 std::span<const ColumnEntry> entries, std::size_t n) {
  column.assign(n, fb.bin(0.0));
  for (const auto& e : entries) column[e.instance] = fb.bin(e.value);
}

}  // namespace

BinnedDataset bin_features(const RawDataset& raw, int n_bins, int threads,
                           std::optional<std::size_t> n_features) {
  if (n_bins < 2 || n_bins > kMaxBins) {
    throw ConfigError("n_bins must be in [2, " + std::to_string(kMaxBins) + "], got " +
                      std::to_string(n_bins));
  }
  const std::size_t n_feat = n_features.value_or(raw.max_feature_index());
  if (raw.max_feature_index() > n_feat) {
    throw ConfigError("dataset references feature " + std::to_string(raw.max_feature_index()) +
                      " beyond declared count " + std::to_string(n_feat));
  }
  auto out = binned_shell(raw, n_feat);
  const auto columns = to_columns(raw, n_feat);
  const auto n = raw.n_instances();
  parallel_for(n_feat, threads, [&](std::size_t f) {
    std::vector<double> values;
    values.reserve(n);
    for (const auto& e : columns[f]) values.push_back(e.value);
    values.resize(n, 0.0);  // absent entries are zeros
    out.feature_bins[f] = make_feature_bins(std::move(values), n_bins);
    fill_column(out.bins[f], out.feature_bins[f], columns[f], n);
  });
  return out;
}

BinnedDataset apply_bins(const RawDataset& raw, std::span<const FeatureBins> feature_bins,
                         int threads) {
  const auto n_feat = feature_bins.size();
  if (raw.max_feature_index() > n_feat) {
    throw ModelError("data references feature " + std::to_string(raw.max_feature_index()) +
                     " but the model knows " + std::to_string(n_feat));
  }
  auto out = binned_shell(raw, n_feat);
  out.feature_bins.assign(feature_bins.begin(), feature_bins.end());
  const auto columns = to_columns(raw, n_feat);
  parallel_for(n_feat, threads, [&](std::size_t f) {
    fill_column(out.bins[f], out.feature_bins[f], columns[f], raw.n_instances());
  });
  return out;
}

}  // namespace smartboost
