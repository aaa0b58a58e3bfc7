#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "sgt/data.hpp"
#include "sgt/impurity.hpp"
#include "sgt/split.hpp"

namespace sgt {

/// Axis-aligned cut: encoded column <= threshold goes to branch 0.
struct ThresholdRule {
  std::size_t column = 0;
  double threshold = 0.0;
};

using NodeSplit = std::variant<ThresholdRule, ShapeFunction>;

struct TreeNode {
  int depth = 0;
  std::optional<NodeSplit> split;  // empty for leaves
  std::vector<int> children;
  TargetStats stats;        // training targets that reached the node
  double prediction = 0.0;  // majority class id or mean target
  std::vector<std::pair<std::size_t, std::size_t>> considered_pairs;

  bool is_leaf() const { return !split.has_value(); }
  int arity() const { return static_cast<int>(children.size()); }
  /// Branch taken by an encoded row at an internal node.
  int branch(std::span<const double> encoded_row) const;
  int branch(const EncodedMatrix& X, std::size_t row) const;
};

struct Hyperparams {
  int max_arity = 2;  // K
  int max_depth = 6;
  /// Compared against the split's impurity improvement divided by the
  /// training-set size.
  double min_impurity_decrease = 0.0;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  Criterion criterion = Criterion::gini;
  int inner_max_leaf_nodes = 16;
  double inner_min_samples_leaf = 1.0;
  double branching_penalty = 0.0;  // lambda
  double pairwise_penalty = 0.0;   // gamma
  int pairwise_limit = 0;          // P
  int sweeps = 10;                 // R
  int kmeans_iters = 100;
  int directions = 8;              // H
  std::uint64_t seed = 0;
  std::size_t max_internal_nodes = std::numeric_limits<std::size_t>::max();
  int threads = 1;

  SplitParams split_params() const;
  void validate(Task task) const;
};

/// A fitted tree: an arena of nodes rooted at index 0.
class SgtModel {
 public:
  FeatureSchema schema;
  Task task = Task::classification;
  std::vector<std::string> class_labels;
  Criterion criterion = Criterion::gini;
  int max_arity = 2;
  std::vector<TreeNode> nodes;

  int num_classes() const { return static_cast<int>(class_labels.size()); }

  /// Leaf reached by an encoded row.
  int leaf_of(std::span<const double> encoded_row) const;
  int leaf_of(const EncodedMatrix& X, std::size_t row) const;

  /// Prediction for a raw row (categorical cells as level indices).
  double predict(std::span<const double> raw_row) const;
  std::vector<double> predict(const Dataset& ds) const;
  /// Class distribution of the leaf reached by a raw row.
  std::vector<double> predict_proba(std::span<const double> raw_row) const;

  /// Throws std::invalid_argument when the arena is not a well-formed tree.
  void validate() const;
};

/// Greedy best-first induction with shape-function splits.
SgtModel fit(const Dataset& train, const Hyperparams& hp);
/// Same driver restricted to single-threshold binary cuts on encoded columns.
SgtModel fit_cart(const Dataset& train, const Hyperparams& hp);
/// Replaces every threshold node by an equivalent two-bin shape function.
SgtModel from_cart(const SgtModel& cart);

double predict(const SgtModel& m, std::span<const double> raw_row);

/// Fraction of correctly classified rows.
double accuracy(const SgtModel& m, const Dataset& ds);
/// Mean squared error of the predictions.
double mean_squared_error(const SgtModel& m, const Dataset& ds);
/// Sum of squared errors of the predictions.
double sum_squared_error(const SgtModel& m, const Dataset& ds);

/// Recomputes every node's stats and prediction from the routed rows. Nodes
/// reached by no row keep their previous prediction.
void refresh_node_stats(SgtModel& m, const EncodedMatrix& X,
                        std::span<const double> targets);

}  // namespace sgt
