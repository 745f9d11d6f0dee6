#include "smartboost/model_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "smartboost/error.hpp"

namespace smartboost {

namespace {

std::string hex(double v) { return fmt::format("{:a}", v); }

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line split on spaces; `keyword` must be its first token.
  std::vector<std::string> expect(std::string_view keyword) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw ModelFormatError("model truncated: expected '" + std::string(keyword) + "'");
    }
    ++number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> tokens;
    std::istringstream ss(line);
    for (std::string tok; ss >> tok;) tokens.push_back(tok);
    if (tokens.empty() || tokens.front() != keyword) {
      throw ModelFormatError(fmt::format("model line {}: expected '{}'", number_, keyword));
    }
    return tokens;
  }

  double real(const std::string& s) const {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || std::isnan(v)) {
      throw ModelFormatError(fmt::format("model line {}: bad number '{}'", number_, s));
    }
    return v;
  }

  long long integer(const std::string& s) const {
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE) {
      throw ModelFormatError(fmt::format("model line {}: bad integer '{}'", number_, s));
    }
    return v;
  }

  void arity(const std::vector<std::string>& tokens, std::size_t n) const {
    if (tokens.size() != n) {
      throw ModelFormatError(fmt::format("model line {}: expected {} fields, got {}", number_, n,
                                         tokens.size()));
    }
  }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

}  // namespace

void write_model(std::ostream& out, const Ensemble& model) {
  fmt::print(out, "{} {}\n", kModelMagic, kModelVersion);
  fmt::print(out, "objective {}\n", to_string(model.objective));
  fmt::print(out, "shrinkage {}\n", hex(model.shrinkage));
  fmt::print(out, "base_score {}\n", hex(model.base_score));
  fmt::print(out, "features {}\n", model.feature_bins.size());
  for (const auto& fb : model.feature_bins) {
    fmt::print(out, "bins {}", fb.upper_bounds.size());
    for (double b : fb.upper_bounds) fmt::print(out, " {}", hex(b));
    out << '\n';
  }
  fmt::print(out, "trees {}\n", model.trees.size());
  for (const auto& tree : model.trees) {
    fmt::print(out, "tree {}\n", tree.nodes().size());
    for (const auto& node : tree.nodes()) {
      fmt::print(out, "node {} {} {} {} {} {}\n", node.feature, node.split_bin, node.left,
                 node.right, node.leaf_id, hex(node.value));
    }
  }
  out << "end\n";
}

std::string serialize_model(const Ensemble& model) {
  std::ostringstream out;
  write_model(out, model);
  return out.str();
}

Ensemble read_model(std::istream& in) {
  LineReader reader(in);
  const auto header = reader.expect(kModelMagic);
  reader.arity(header, 2);
  if (reader.integer(header[1]) != kModelVersion) {
    throw ModelFormatError("unsupported model version " + header[1]);
  }

  Ensemble model;
  auto objective = reader.expect("objective");
  reader.arity(objective, 2);
  try {
    model.objective = parse_objective_kind(objective[1]);
  } catch (const ConfigError& e) {
    throw ModelFormatError(e.what());
  }
  auto shrinkage = reader.expect("shrinkage");
  reader.arity(shrinkage, 2);
  model.shrinkage = reader.real(shrinkage[1]);
  auto base = reader.expect("base_score");
  reader.arity(base, 2);
  model.base_score = reader.real(base[1]);

  auto features = reader.expect("features");
  reader.arity(features, 2);
  const auto n_features = reader.integer(features[1]);
  if (n_features < 0) throw ModelFormatError("negative feature count");
  for (long long f = 0; f < n_features; ++f) {
    auto bins = reader.expect("bins");
    if (bins.size() < 2) reader.arity(bins, 2);
    const auto n_bounds = reader.integer(bins[1]);
    if (n_bounds < 1 || n_bounds > kMaxBins) throw ModelFormatError("bad bin count");
    reader.arity(bins, static_cast<std::size_t>(n_bounds) + 2);
    FeatureBins fb;
    for (long long b = 0; b < n_bounds; ++b) {
      fb.upper_bounds.push_back(reader.real(bins[static_cast<std::size_t>(b) + 2]));
    }
    model.feature_bins.push_back(std::move(fb));
  }

  auto trees = reader.expect("trees");
  reader.arity(trees, 2);
  const auto n_trees = reader.integer(trees[1]);
  if (n_trees < 0) throw ModelFormatError("negative tree count");
  for (long long t = 0; t < n_trees; ++t) {
    auto tree = reader.expect("tree");
    reader.arity(tree, 2);
    const auto n_nodes = reader.integer(tree[1]);
    if (n_nodes < 1) throw ModelFormatError("tree without nodes");
    std::vector<TreeNode> nodes;
    for (long long k = 0; k < n_nodes; ++k) {
      auto fields = reader.expect("node");
      reader.arity(fields, 7);
      TreeNode node;
      node.feature = static_cast<std::int32_t>(reader.integer(fields[1]));
      const auto bin = reader.integer(fields[2]);
      if (bin < 0 || bin >= kMaxBins) throw ModelFormatError("split bin out of range");
      node.split_bin = static_cast<BinIndex>(bin);
      node.left = static_cast<std::int32_t>(reader.integer(fields[3]));
      node.right = static_cast<std::int32_t>(reader.integer(fields[4]));
      node.leaf_id = static_cast<std::int32_t>(reader.integer(fields[5]));
      node.value = reader.real(fields[6]);
      if (node.feature >= n_features) throw ModelFormatError("split on unknown feature");
      nodes.push_back(node);
    }
    try {
      model.trees.emplace_back(std::move(nodes));
    } catch (const TreeError& e) {
      throw ModelFormatError(std::string("corrupt tree: ") + e.what());
    }
  }
  reader.expect("end");
  return model;
}

Ensemble deserialize_model(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_model(in);
}

void save_model(const std::filesystem::path& path, const Ensemble& model) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelError("cannot open " + tmp.string() + " for writing");
    write_model(out, model);
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw ModelError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ModelError("cannot move model into place at " + path.string());
  }
}

Ensemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open model " + path.string());
  return read_model(in);
}

}  // namespace smartboost
