#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "smartboost/boosting.hpp"

namespace smartboost {

inline constexpr std::string_view kModelMagic = "smartboost-model";
inline constexpr int kModelVersion = 1;

// Line-oriented text. Reals are written as hex floats, so a round trip is exact.
void write_model(std::ostream& out, const Ensemble& model);
std::string serialize_model(const Ensemble& model);

// Throws ModelFormatError on a bad header, version mismatch or truncation.
Ensemble read_model(std::istream& in);
Ensemble deserialize_model(std::string_view text);

// Writes through a temporary file and renames, so a failed save leaves no model behind.
void save_model(const std::filesystem::path& path, const Ensemble& model);
Ensemble load_model(const std::filesystem::path& path);

}  // namespace smartboost
