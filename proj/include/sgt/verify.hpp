#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "sgt/induce.hpp"

namespace sgt {

struct Theorem2Result {
  std::size_t sgt_nodes = 0;
  std::size_t cart_nodes = 0;
  double sgt_accuracy = 0.0;
  double cart_accuracy = 0.0;
};

/// Fits a depth-1 SGT and an unbounded CART on the omega-bars data and counts
/// their internal nodes. Requires hp.inner_max_leaf_nodes >= omega + 2.
Theorem2Result theorem2_gap(int omega, const Hyperparams& hp);

/// Random classification data for the root-gain comparison.
struct Lemma1Spec {
  std::size_t n = 200;
  std::size_t d = 5;
  int classes = 2;
  Criterion criterion = Criterion::gini;
};

struct Lemma1Report {
  std::size_t trials = 0;
  double max_violation = 0.0;  // max of (threshold gain - shape gain)
  double mean_threshold_gain = 0.0;
  double mean_shape_gain = 0.0;
};

/// Best root threshold gain by exhaustive scan over every column and every
/// cut between distinct values, recomputing both sides from scratch.
double naive_threshold_gain(const Dataset& ds, Criterion c);

Dataset lemma1_dataset(const Lemma1Spec& spec, std::uint64_t seed);

Lemma1Report lemma1_harness(std::size_t trials, const Lemma1Spec& spec,
                            std::uint64_t seed);

struct AssignmentOracleReport {
  std::size_t trials = 0;
  std::size_t not_local_optimum = 0;  // an improving single-bin move remains
  std::size_t worse_than_init = 0;
  std::size_t global_matches = 0;     // within 1e-9 of the exhaustive optimum
};

/// Random bin tables with at most 10 bins and k <= 3. Coordinate descent runs
/// from the k-means and the split-point initializations and is checked
/// against exhaustive enumeration of all k^L assignments.
AssignmentOracleReport assignment_oracle(std::size_t trials, std::uint64_t seed);

struct ComplexityReport {
  double base_seconds = 0.0;  // median root split time at (N, D)
  double n_ratio = 0.0;       // (factor*N, D) over (N, D)
  double d_ratio = 0.0;       // (N, factor*D) over (N, D)
  double k_ratio = 0.0;       // K=3 over K=2 with four bins
};

ComplexityReport complexity_smoke(std::size_t n, std::size_t d, double factor,
                                  int repeats = 5, std::uint64_t seed = 0);

/// One-line text summaries.
std::string to_string(const Theorem2Result& r);
std::string to_string(const Lemma1Report& r);
std::string to_string(const AssignmentOracleReport& r);
std::string to_string(const ComplexityReport& r);

}  // namespace sgt
