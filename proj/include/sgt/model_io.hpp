#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgt/induce.hpp"

namespace sgt {

inline constexpr const char* kModelFormat = "sgt-model";
inline constexpr int kModelVersion = 1;

/// Raised when a model document cannot be read back.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string serialize(const SgtModel& m);
SgtModel deserialize(const std::string& text);
void save_model(const SgtModel& m, const std::filesystem::path& path);
SgtModel load_model(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string exact_text(double v);
double parse_exact(const std::string& text);

struct ModelStats {
  std::size_t internal = 0;
  std::size_t leaves = 0;
  int depth = 0;
  std::map<int, std::size_t> arity_histogram;  // arity -> internal nodes
  std::vector<std::size_t> features_used;      // sorted schema indices
  std::size_t univariate = 0;
  std::size_t bivariate = 0;
  std::size_t threshold = 0;  // plain CART cuts
};

ModelStats stats(const SgtModel& m);

/// Graphviz rendering. Univariate nodes list their interval (or level) to
/// branch map, bivariate nodes the inner tree's rules.
std::string to_dot(const SgtModel& m);

}  // namespace sgt
