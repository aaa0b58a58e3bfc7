#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sgt/impurity.hpp"
#include "sgt/sample_set.hpp"

namespace sgt {

struct InnerTreeParams {
  int max_leaf_nodes = 16;
  /// Absolute count when >= 1, else a fraction of the fitted sample count.
  double min_samples_leaf = 1.0;
  Criterion criterion = Criterion::gini;

  std::size_t min_leaf_count(std::size_t n) const;
  void validate() const;
};

/// Axis-aligned binary tree mapping a sample to one of L bins.
///
/// Univariate trees split on the encoded columns of one feature group.
/// Bivariate trees see `2 + directions` local features: the two source
/// columns followed by their projections onto angles h*pi/directions.
class InnerTree {
 public:
  struct Node {
    int feature = -1;  // local feature index; -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int bin = -1;  // leaves only
    bool is_leaf() const { return feature < 0; }
  };

  InnerTree() = default;
  InnerTree(std::vector<std::size_t> columns, int directions,
            std::vector<Node> nodes);

  const std::vector<std::size_t>& columns() const { return columns_; }
  int directions() const { return directions_; }
  bool bivariate() const { return directions_ > 0; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int num_bins() const { return num_bins_; }
  int num_local_features() const;

  /// cos/sin of the h-th projection angle, snapped so axis directions are
  /// exact.
  std::pair<double, double> direction(int h) const;

  template <class Get>
  double local_value(int feature, Get&& get) const {
    if (!bivariate() || feature < 2) return get(columns_[static_cast<std::size_t>(feature)]);
    const auto [c, s] = direction(feature - 2);
    return c * get(columns_[0]) + s * get(columns_[1]);
  }

  template <class Get>
  int route(Get&& get) const {
    int id = 0;
    while (!nodes_[static_cast<std::size_t>(id)].is_leaf()) {
      const auto& n = nodes_[static_cast<std::size_t>(id)];
      id = local_value(n.feature, get) <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(id)].bin;
  }

  int bin(std::span<const double> encoded_row) const;
  int bin(const EncodedMatrix& X, std::size_t row) const;

  /// Leaf node ids indexed by bin.
  std::vector<int> leaves_by_bin() const;

 private:
  void validate();

  std::vector<std::size_t> columns_;
  int directions_ = 0;
  std::vector<Node> nodes_;
  int num_bins_ = 0;
};

using BinTable = std::vector<TargetStats>;

/// CART grown best-first on the given encoded columns until
/// `max_leaf_nodes` leaves or no split strictly reduces weighted impurity.
InnerTree fit_univariate(const SampleSet& samples,
                         std::span<const std::size_t> columns,
                         const InnerTreeParams& params);

/// CART over the two columns plus `directions` rotated projections.
/// Throws std::invalid_argument for categorical columns or directions < 2.
InnerTree fit_bivariate(const SampleSet& samples, std::size_t col1,
                        std::size_t col2, int directions,
                        const InnerTreeParams& params);

BinTable extract_bin_stats(const InnerTree& tree, const SampleSet& samples);

/// Branch 0 for bins under the root's left child, 1 otherwise. Throws
/// std::invalid_argument for a single-leaf tree.
std::vector<int> root_assignment(const InnerTree& tree);

/// Best single threshold split over the given value columns, used by the
/// inner trees and by the CART baseline.
struct ThresholdSplit {
  int feature = -1;
  double threshold = 0.0;
  double decrease = 0.0;  // weighted impurity reduction
  double objective = 0.0; // weighted impurity after the split
};

/// `values[f][p]` is local feature f of sample position p; only positions in
/// `subset` participate. Returns feature -1 when no split is admissible.
ThresholdSplit best_threshold_split(
    const std::vector<std::vector<double>>& values,
    std::span<const double> targets, std::span<const std::size_t> subset,
    const TargetStats& empty, Criterion criterion, std::size_t min_leaf);

}  // namespace sgt
