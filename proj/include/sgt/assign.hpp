#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sgt/impurity.hpp"
#include "sgt/inner_tree.hpp"

namespace sgt {

/// Bin-to-branch map with the weighted impurity of the induced branches.
struct Assignment {
  std::vector<int> branch;  // one entry per bin, each < arity
  int arity = 2;
  double objective = 0.0;
};

struct AssignParams {
  int sweeps = 10;          // coordinate-descent passes (R)
  int kmeans_iters = 100;   // Lloyd iterations (T)
  double branching_penalty = 0.0;  // lambda, charged per branch beyond two
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-branch stats of an assignment.
std::vector<TargetStats> branch_stats(const BinTable& bins,
                                      const std::vector<int>& branch, int arity);
double assignment_objective(const BinTable& bins, const std::vector<int>& branch,
                            int arity, Criterion c);

/// Weighted Lloyd clustering of the bins' class distributions (bin means for
/// regression) with k-means++ seeding. When fewer than k bins are nonempty
/// each nonempty bin gets its own branch and the rest stay unused.
Assignment weighted_kmeans(const BinTable& bins, int k, int iters,
                           std::uint64_t seed, Criterion c);

/// R sweeps of single-bin moves in a seed-derived random order. A move is
/// committed only when it strictly lowers the objective.
Assignment coord_descent(const Assignment& init, const BinTable& bins,
                         Criterion c, int sweeps, std::uint64_t seed);

/// Runs k-means + coordinate descent for k = 2..max_arity and returns the
/// assignment minimizing objective + penalty * (k - 2). At k = 2 the
/// root-split assignment seeds the descent when it beats k-means.
Assignment select_arity(const BinTable& bins,
                        const std::optional<Assignment>& root_init,
                        int max_arity, Criterion c, const AssignParams& params);

/// Zero-weight bins take the branch of the nearest nonempty bin in leaf
/// order (lower index on ties).
void assign_empty_bins(const BinTable& bins, std::vector<int>& branch);

}  // namespace sgt
