#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace smartboost {

struct FeatureValue {
  std::uint32_t index;  // 1-based, as in the text formats
  double value;

  friend bool operator==(const FeatureValue&, const FeatureValue&) = default;
};

// Parsed text data in CSR layout. Features absent from a row are 0.0.
struct RawDataset {
  std::vector<double> labels;
  std::vector<std::size_t> row_offsets{0};
  std::vector<FeatureValue> entries;
  std::optional<std::vector<std::int64_t>> query_ids;

  std::size_t n_instances() const noexcept { return labels.size(); }
  std::span<const FeatureValue> row(std::size_t i) const {
    return {entries.data() + row_offsets[i], row_offsets[i + 1] - row_offsets[i]};
  }
  std::uint32_t max_feature_index() const noexcept;

  void append_row(double label, std::span<const FeatureValue> features);

  friend bool operator==(const RawDataset&, const RawDataset&) = default;
};

// Half-open instance range [begin, end) sharing one query id.
struct QueryGroup {
  std::size_t begin;
  std::size_t end;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const QueryGroup&, const QueryGroup&) = default;
};

RawDataset parse_libsvm(std::istream& in);
RawDataset parse_libsvm(std::string_view text);

// Rows are stably regrouped so that equal qids are contiguous, in order of
// first appearance.
RawDataset parse_letor(std::istream& in);
RawDataset parse_letor(std::string_view text);

// Splits contiguous runs of equal query ids. Empty when the dataset has none.
std::vector<QueryGroup> query_groups(const RawDataset& raw);

// Maps {-1,+1} or {0,1} labels onto {0,1}. Throws ConfigError on anything else.
void normalize_binary_labels(std::vector<double>& labels);

using BinIndex = std::uint16_t;
inline constexpr int kMaxBins = 65536;

// Bin b holds values in (upper_bounds[b-1], upper_bounds[b]]; the last bound
// is +inf so unseen large values land in the top bin.
struct FeatureBins {
  std::vector<double> upper_bounds;

  std::size_t n_bins() const noexcept { return upper_bounds.size(); }
  BinIndex bin(double value) const noexcept;

  friend bool operator==(const FeatureBins&, const FeatureBins&) = default;
};

// Quantile thresholds from the sorted values of one feature (zeros included).
FeatureBins make_feature_bins(std::vector<double> values, int n_bins);

struct BinnedDataset {
  std::size_t n_instances = 0;
  std::size_t n_features = 0;
  std::vector<std::vector<BinIndex>> bins;  // bins[feature][instance]
  std::vector<FeatureBins> feature_bins;
  std::vector<double> labels;
  std::vector<QueryGroup> groups;

  BinIndex bin(std::size_t feature, std::size_t instance) const noexcept {
    return bins[feature][instance];
  }
  bool has_groups() const noexcept { return !groups.empty(); }
};

inline constexpr int kDefaultBins = 256;

// Learns per-feature thresholds from `raw`. n_features defaults to the largest
// feature index present.
BinnedDataset bin_features(const RawDataset& raw, int n_bins, int threads = 1,
                           std::optional<std::size_t> n_features = std::nullopt);

// Bins `raw` with thresholds learned elsewhere (validation data, prediction).
// Throws ModelError if `raw` references a feature beyond the thresholds.
BinnedDataset apply_bins(const RawDataset& raw, std::span<const FeatureBins> feature_bins,
                         int threads = 1);

}  // namespace smartboost
