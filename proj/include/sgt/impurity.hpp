#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgt/data.hpp"

namespace sgt {

enum class Criterion { gini, entropy, mse };

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& text);
bool criterion_matches(Criterion c, Task task);

/// Sufficient statistics of a set of targets. Classification keeps exact
/// integer class counts; regression keeps count, sum and sum of squares.
class TargetStats {
 public:
  TargetStats() = default;

  static TargetStats classification(int num_classes);
  static TargetStats regression();
  /// Regression stats restored from stored moments.
  static TargetStats regression(std::int64_t count, double sum, double sum_sq);

  bool is_classification() const { return !counts_.empty(); }
  int num_classes() const { return static_cast<int>(counts_.size()); }

  void add(double target, std::int64_t multiplicity = 1);

  /// Total weight: the sample count.
  double weight() const { return static_cast<double>(count_); }
  std::int64_t count() const { return count_; }
  std::span<const std::int64_t> counts() const { return counts_; }
  double sum() const { return sum_; }
  double sum_sq() const { return sum_sq_; }

  /// Class id with the most samples (lowest id on ties), or the mean.
  double prediction() const;
  double mean() const { return count_ > 0 ? sum_ / static_cast<double>(count_) : 0.0; }
  /// Normalized class distribution.
  std::vector<double> distribution() const;

  TargetStats& merge(const TargetStats& delta);
  /// Throws std::domain_error when the result would hold negative counts.
  TargetStats& remove(const TargetStats& delta);

  friend bool operator==(const TargetStats&, const TargetStats&) = default;

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t count_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
};

TargetStats stats_merge(TargetStats s, const TargetStats& delta);
TargetStats stats_remove(TargetStats s, const TargetStats& delta);

/// Per-sample impurity. gini = 1 - sum p^2, entropy in bits, mse the
/// per-sample variance. Throws std::domain_error on empty stats.
double impurity(const TargetStats& s, Criterion c);

/// weight * impurity, and 0 for empty stats.
double weighted_term(const TargetStats& s, Criterion c);

/// Sum over parts of W * H(part), not normalized by the total weight.
double weighted_impurity(std::span<const TargetStats> parts, Criterion c);

}  // namespace sgt
