#include "sgt/split.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "sgt/parallel.hpp"
#include "sgt/rng.hpp"

namespace sgt {

void SplitParams::validate() const {
  if (max_arity < 2) throw std::invalid_argument("branching factor K must be >= 2");
  if (pairwise_limit < 0) throw std::invalid_argument("pairwise limit P must be >= 0");
  if (pairwise_penalty < 0) throw std::invalid_argument("pairwise penalty must be >= 0");
  if (directions < 2) throw std::invalid_argument("direction count H must be >= 2");
  inner.validate();
  assign.validate();
}

std::optional<ShapeFit> fit_shape_function(const SampleSet& samples,
                                           const FeatureTarget& target,
                                           const SplitParams& params,
                                           std::uint64_t seed) {
  if (samples.size() < 2) return std::nullopt;
  InnerTreeParams inner = params.inner;
  inner.criterion = params.criterion;

  const auto& X = *samples.X;
  ShapeFunction fn;
  if (target.second) {
    const auto& g1 = X.groups.at(target.first);
    const auto& g2 = X.groups.at(*target.second);
    fn.kind = ShapeKind::bivariate;
    fn.features = {g1.feature, g2.feature};
    fn.tree = fit_bivariate(samples, g1.first_column, g2.first_column,
                            params.directions, inner);
  } else {
    const auto& g = X.groups.at(target.first);
    std::vector<std::size_t> cols(g.width);
    for (std::size_t j = 0; j < g.width; ++j) cols[j] = g.first_column + j;
    fn.kind = ShapeKind::univariate;
    fn.features = {g.feature};
    fn.tree = fit_univariate(samples, cols, inner);
  }
  if (fn.tree.num_bins() < 2) return std::nullopt;

  const BinTable bins = extract_bin_stats(fn.tree, samples);
  Assignment root;
  root.branch = root_assignment(fn.tree);
  root.arity = 2;
  root.objective = assignment_objective(bins, root.branch, 2, params.criterion);

  AssignParams ap = params.assign;
  ap.seed = seed;
  Assignment chosen = select_arity(bins, root, params.max_arity, params.criterion, ap);

  // Drop branches that received no training bins.
  std::vector<std::int64_t> mass(static_cast<std::size_t>(chosen.arity), 0);
  for (std::size_t l = 0; l < bins.size(); ++l) {
    mass[static_cast<std::size_t>(chosen.branch[l])] += bins[l].count();
  }
  std::vector<int> remap(mass.size(), -1);
  int arity = 0;
  for (std::size_t b = 0; b < mass.size(); ++b) {
    if (mass[b] > 0) remap[b] = arity++;
  }
  if (arity < 2) return std::nullopt;
  for (auto& b : chosen.branch) {
    b = remap[static_cast<std::size_t>(b)];
    if (b < 0) b = 0;  // unreachable: only zero-weight bins map to empty branches
  }
  assign_empty_bins(bins, chosen.branch);

  fn.bin_branch = chosen.branch;
  fn.arity = arity;

  ShapeFit fit;
  fit.sample_branch.resize(samples.size());
  fit.branches.assign(static_cast<std::size_t>(arity), samples.empty_stats());
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const int b = fn.branch(X, samples.rows[p]);
    fit.sample_branch[p] = b;
    fit.branches[static_cast<std::size_t>(b)].add(samples.targets[p]);
  }
  fit.objective = weighted_impurity(fit.branches, params.criterion);
  fit.fn = std::move(fn);
  return fit;
}

double score_pair(std::span<const int> branches_d1, int arity_d1,
                  std::span<const int> branches_d2, int arity_d2,
                  const SampleSet& samples, Criterion c) {
  if (branches_d1.size() != samples.size() || branches_d2.size() != samples.size()) {
    throw std::invalid_argument("score_pair: partitions do not cover the samples");
  }
  const auto k1 = static_cast<std::size_t>(arity_d1);
  const auto k2 = static_cast<std::size_t>(arity_d2);
  std::vector<TargetStats> s1(k1, samples.empty_stats());
  std::vector<TargetStats> s2(k2, samples.empty_stats());
  std::vector<TargetStats> both(k1 * k2, samples.empty_stats());
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const auto a = static_cast<std::size_t>(branches_d1[p]);
    const auto b = static_cast<std::size_t>(branches_d2[p]);
    const double t = samples.targets[p];
    s1[a].add(t);
    s2[b].add(t);
    both[a * k2 + b].add(t);
  }
  return std::min(weighted_impurity(s1, c), weighted_impurity(s2, c)) -
         weighted_impurity(both, c);
}

namespace {

bool is_pure(const TargetStats& s) {
  if (s.is_classification()) {
    int nonzero = 0;
    for (auto n : s.counts()) nonzero += n > 0;
    return nonzero <= 1;
  }
  return impurity(s, Criterion::mse) <= 0.0;
}

}  // namespace

SplitResult select_split(const SampleSet& samples, const SplitParams& params,
                         std::uint64_t seed) {
  params.validate();
  SplitResult result;
  if (samples.size() == 0) throw std::invalid_argument("select_split: no samples");
  const TargetStats node = samples.stats();
  result.node_impurity = weighted_term(node, params.criterion);
  result.objective = result.node_impurity;
  result.unpenalized = result.node_impurity;
  if (samples.size() < 2 || is_pure(node)) return result;

  const auto& X = *samples.X;
  const std::size_t D = X.groups.size();
  std::vector<std::optional<ShapeFit>> uni(D);
  parallel_for(D, params.threads, [&](std::size_t d) {
    uni[d] = fit_shape_function(samples, {d, std::nullopt}, params, hash_combine(seed, d));
  });

  std::optional<ShapeFit> best;
  double best_objective = 0.0;
  for (std::size_t d = 0; d < D; ++d) {
    if (!uni[d]) continue;
    if (!best || strictly_less(uni[d]->objective, best_objective)) {
      best_objective = uni[d]->objective;
      best = uni[d];
    }
  }
  double best_unpenalized = best ? best->objective : result.node_impurity;

  if (params.pairwise_limit > 0) {
    std::vector<std::size_t> numeric;
    for (std::size_t d = 0; d < D; ++d) {
      if (X.groups[d].kind == FeatureKind::numeric) numeric.push_back(d);
    }
    const std::vector<int> unsplit(samples.size(), 0);
    auto labels = [&](std::size_t d) -> std::pair<std::span<const int>, int> {
      if (uni[d]) return {uni[d]->sample_branch, uni[d]->fn.arity};
      return {unsplit, 1};
    };
    struct Scored {
      double delta;
      std::size_t d1, d2;
    };
    std::vector<Scored> scored;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      for (std::size_t j = i + 1; j < numeric.size(); ++j) {
        const auto [l1, k1] = labels(numeric[i]);
        const auto [l2, k2] = labels(numeric[j]);
        scored.push_back({score_pair(l1, k1, l2, k2, samples, params.criterion),
                          numeric[i], numeric[j]});
      }
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.delta > b.delta; });
    const auto limit = std::min(scored.size(), static_cast<std::size_t>(params.pairwise_limit));
    for (std::size_t i = 0; i < limit; ++i) {
      // A pair whose refinement gains nothing cannot beat the univariate best.
      if (!(scored[i].delta > 1e-12 * std::max(1.0, result.node_impurity))) continue;
      result.considered_pairs.emplace_back(scored[i].d1, scored[i].d2);
    }
    std::vector<std::optional<ShapeFit>> bi(result.considered_pairs.size());
    parallel_for(bi.size(), params.threads, [&](std::size_t i) {
      const auto [d1, d2] = result.considered_pairs[i];
      bi[i] = fit_shape_function(samples, {d1, d2}, params,
                                 hash_combine(seed, (1ULL << 32) + d1 * D + d2));
    });
    for (auto& fit : bi) {
      if (!fit) continue;
      const double penalized = fit->objective + params.pairwise_penalty;
      if (!best || strictly_less(penalized, best_objective)) {
        best_objective = penalized;
        best_unpenalized = fit->objective;
        best = std::move(fit);
      }
    }
  }

  if (!best) return result;
  result.objective = best_objective;
  result.unpenalized = best_unpenalized;
  result.partitions.assign(static_cast<std::size_t>(best->fn.arity), {});
  for (std::size_t p = 0; p < samples.size(); ++p) {
    result.partitions[static_cast<std::size_t>(best->sample_branch[p])].push_back(p);
  }
  result.fn = std::move(best->fn);
  return result;
}

}  // namespace sgt
