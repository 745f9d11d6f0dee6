#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "smartboost/data.hpp"
#include "smartboost/objective.hpp"

namespace smartboost {

enum class ExitCode : int { success = 0, usage = 1, data = 2, training = 3, model_io = 4 };

enum class DataFormat { libsvm, letor };

DataFormat parse_data_format(std::string_view name);

// Throws DataError when the file cannot be opened or parsed.
RawDataset load_dataset(const std::filesystem::path& path, DataFormat format);

// "logloss" or "ndcg@<k>".
struct MetricSpec {
  ObjectiveKind objective = ObjectiveKind::logistic;
  int k = 10;
};
MetricSpec parse_metric(std::string_view name);

// Thread count from the flag if given, else SMARTBOOST_THREADS, else 1.
int resolve_threads(int flag_value);

// Entry point shared by the executable and the tests. args excludes argv[0].
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace smartboost
