#pragma once

#include <cstddef>
#include <span>

#include "sgt/data.hpp"
#include "sgt/impurity.hpp"

namespace sgt {

/// Non-owning view of the samples reaching a node: row ids into an encoded
/// matrix with their targets. Rows may repeat (integer multiplicity).
struct SampleSet {
  const EncodedMatrix* X = nullptr;
  std::span<const std::size_t> rows;
  std::span<const double> targets;  // aligned with rows
  Task task = Task::classification;
  int num_classes = 0;

  std::size_t size() const { return rows.size(); }
  double value(std::size_t pos, std::size_t col) const {
    return (*X)(rows[pos], col);
  }

  TargetStats empty_stats() const {
    return task == Task::classification
               ? TargetStats::classification(num_classes)
               : TargetStats::regression();
  }

  TargetStats stats() const {
    auto s = empty_stats();
    for (double t : targets) s.add(t);
    return s;
  }
};

/// `a` is better than `b` by more than the tie tolerance.
inline bool strictly_less(double a, double b) {
  const double scale = b < 0 ? -b : b;
  return a < b - 1e-12 * (scale > 1.0 ? scale : 1.0);
}

}  // namespace sgt
