#pragma once

#include <cstdint>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include "sgt/data.hpp"
#include "sgt/rng.hpp"
#include "sgt/sample_set.hpp"

namespace sgt::testing {

/// Owns the row ids behind a SampleSet over a whole dataset.
struct FullView {
  EncodedMatrix X;
  std::vector<std::size_t> rows;
  std::vector<double> targets;
  SampleSet samples;

  explicit FullView(const Dataset& ds)
      : X(one_hot_view(ds)), rows(ds.rows()), targets(ds.targets) {
    std::iota(rows.begin(), rows.end(), 0);
    samples.X = &X;
    samples.rows = rows;
    samples.targets = targets;
    samples.task = ds.task;
    samples.num_classes = ds.num_classes();
  }
  FullView(const FullView&) = delete;
};

inline Dataset numeric_dataset(std::vector<std::vector<double>> columns,
                               std::vector<double> targets, Task task = Task::classification,
                               int classes = 2) {
  std::vector<FeatureSpec> specs;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    specs.push_back({"x" + std::to_string(j + 1), FeatureKind::numeric, {}});
  }
  Dataset ds;
  ds.schema = FeatureSchema(std::move(specs));
  ds.task = task;
  if (task == Task::classification) {
    for (int c = 0; c < classes; ++c) ds.class_labels.push_back(std::to_string(c));
  }
  ds.columns = std::move(columns);
  ds.targets = std::move(targets);
  return ds;
}

/// Uniform features on [0,1) with labels from a noisy rule on the first two.
inline Dataset random_dataset(std::size_t n, std::size_t d, int classes, std::uint64_t seed,
                              Task task = Task::classification) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols(d, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) cols[j][i] = std::floor(rng.uniform() * 20.0) / 20.0;
    const double s = cols[0][i] + (d > 1 ? 0.5 * cols[1 % d][i] : 0.0);
    if (task == Task::regression) {
      y[i] = s * s + 0.1 * rng.normal();
    } else {
      int c = static_cast<int>(s * classes / 1.5) % classes;
      if (rng.uniform() < 0.15) c = static_cast<int>(rng.index(static_cast<std::size_t>(classes)));
      y[i] = c;
    }
  }
  return numeric_dataset(std::move(cols), std::move(y), task, classes);
}

/// XOR on [-1,1]^2 plus a third useless feature.
inline Dataset xor_dataset(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols(3, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : cols) c[i] = rng.uniform(-1.0, 1.0);
    y[i] = (cols[0][i] > 0) != (cols[1][i] > 0) ? 1 : 0;
  }
  return numeric_dataset(std::move(cols), std::move(y));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("sgt_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sgt::testing
