#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgt/induce.hpp"

namespace sgt {

struct TaoParams {
  int passes = 5;
  double reg = 0.0;  // penalty per leaf added to the training loss
  std::uint64_t seed = 0;

  void validate() const;
};

/// Samples used to refit one internal node. Each distinct row keeps the
/// branches whose subtree predicts it best; rows where every branch (or, for
/// classification, no branch) is correct are left out. The duplicated view
/// holds one copy of a row per valid branch, labelled with that branch.
struct CareSet {
  std::vector<std::size_t> rows;
  std::vector<std::vector<int>> valid;
  std::vector<std::size_t> dup_rows;
  std::vector<double> dup_labels;

  bool empty() const { return rows.empty(); }
};

CareSet build_care_set(const SgtModel& m, int node, const EncodedMatrix& X,
                       std::span<const double> targets,
                       std::span<const std::size_t> reaching);

/// Fraction of distinct care rows the split sends to one of their valid
/// branches; 1.0 for an empty care set.
double pseudolabel_accuracy(const TreeNode& node, const NodeSplit& split,
                            const CareSet& care, const EncodedMatrix& X);

/// Training loss (error rate or mean squared error) plus reg * leaf count.
double tao_objective(const SgtModel& m, const Dataset& train, double reg);

struct TaoTrace {
  std::vector<double> objective;  // before the first pass, then after each pass
  std::vector<int> changes;       // accepted refits + prunes per pass
};

/// Alternating refinement: refit internal nodes deepest first on their care
/// sets, accepting only strict improvements of the training loss, then prune
/// nodes whose removal does not increase loss + reg * leaves.
SgtModel tao_refine(const SgtModel& m, const Dataset& train, const TaoParams& tp,
                    const Hyperparams& hp, TaoTrace* trace = nullptr);

}  // namespace sgt
