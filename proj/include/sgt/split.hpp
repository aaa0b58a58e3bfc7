#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sgt/assign.hpp"
#include "sgt/inner_tree.hpp"
#include "sgt/sample_set.hpp"

namespace sgt {

enum class ShapeKind { univariate, bivariate };

/// Routing function of an internal node: an inner binning tree composed with
/// a bin-to-branch lookup.
struct ShapeFunction {
  ShapeKind kind = ShapeKind::univariate;
  std::vector<std::size_t> features;  // schema feature indices (1 or 2)
  InnerTree tree;
  std::vector<int> bin_branch;
  int arity = 2;

  int branch(std::span<const double> encoded_row) const {
    return bin_branch[static_cast<std::size_t>(tree.bin(encoded_row))];
  }
  int branch(const EncodedMatrix& X, std::size_t row) const {
    return bin_branch[static_cast<std::size_t>(tree.bin(X, row))];
  }
};

struct SplitParams {
  int max_arity = 2;              // K
  int pairwise_limit = 0;         // P; 0 disables bivariate candidates
  double pairwise_penalty = 0.0;  // gamma
  Criterion criterion = Criterion::gini;
  InnerTreeParams inner;
  AssignParams assign;
  int directions = 8;             // H
  int threads = 1;

  void validate() const;
};

/// A feature group, or a pair of numeric feature groups.
struct FeatureTarget {
  std::size_t first = 0;
  std::optional<std::size_t> second;
};

struct ShapeFit {
  double objective = 0.0;  // unpenalized weighted impurity of the branches
  ShapeFunction fn;
  std::vector<int> sample_branch;  // per sample position
  std::vector<TargetStats> branches;
};

/// Fits the inner tree, extracts bin stats and selects the assignment.
/// Empty branches are dropped, so the arity counts populated branches only.
/// Returns nullopt when no admissible split exists (constant feature).
std::optional<ShapeFit> fit_shape_function(const SampleSet& samples,
                                           const FeatureTarget& target,
                                           const SplitParams& params,
                                           std::uint64_t seed);

/// Pairwise heuristic: min(L(d1), L(d2)) minus the weighted impurity of the
/// intersections of the two branch partitions.
double score_pair(std::span<const int> branches_d1, int arity_d1,
                  std::span<const int> branches_d2, int arity_d2,
                  const SampleSet& samples, Criterion c);

struct SplitResult {
  std::optional<ShapeFunction> fn;  // nullopt: no admissible split
  std::vector<std::vector<std::size_t>> partitions;  // sample positions per branch
  double objective = 0.0;    // penalized (gamma added for bivariate)
  double unpenalized = 0.0;
  double node_impurity = 0.0;  // weighted impurity of the unsplit node
  std::vector<std::pair<std::size_t, std::size_t>> considered_pairs;
};

/// Node-level outer problem: best univariate shape function over all feature
/// groups, then the top-P numeric pairs by the pairwise heuristic with the
/// bivariate penalty added. Ties go to univariate, then lower feature index.
SplitResult select_split(const SampleSet& samples, const SplitParams& params,
                         std::uint64_t seed);

}  // namespace sgt
