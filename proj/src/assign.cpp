#include "sgt/assign.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "sgt/rng.hpp"
#include "sgt/sample_set.hpp"

namespace sgt {
namespace {

std::vector<std::size_t> nonempty_bins(const BinTable& bins) {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < bins.size(); ++l) {
    if (bins[l].count() > 0) out.push_back(l);
  }
  return out;
}

// Points clustered by k-means: class distributions, or the scalar mean.
std::vector<double> embed(const TargetStats& s) {
  if (s.is_classification()) return s.distribution();
  return {s.mean()};
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

std::size_t weighted_pick(Rng& rng, const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return weights.size();
  const double r = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (r < acc) return i;
  }
  return last;
}

}  // namespace

void AssignParams::validate() const {
  if (sweeps < 1) throw std::invalid_argument("coordinate-descent sweeps must be >= 1");
  if (kmeans_iters < 1) throw std::invalid_argument("k-means iterations must be >= 1");
  if (branching_penalty < 0) throw std::invalid_argument("branching penalty must be >= 0");
}

std::vector<TargetStats> branch_stats(const BinTable& bins,
                                      const std::vector<int>& branch, int arity) {
  if (bins.empty()) return {};
  TargetStats empty = bins.front();
  empty.remove(bins.front());
  std::vector<TargetStats> out(static_cast<std::size_t>(arity), empty);
  for (std::size_t l = 0; l < bins.size(); ++l) {
    out[static_cast<std::size_t>(branch[l])].merge(bins[l]);
  }
  return out;
}

double assignment_objective(const BinTable& bins, const std::vector<int>& branch,
                            int arity, Criterion c) {
  const auto stats = branch_stats(bins, branch, arity);
  return weighted_impurity(stats, c);
}

void assign_empty_bins(const BinTable& bins, std::vector<int>& branch) {
  const auto filled = nonempty_bins(bins);
  if (filled.empty()) return;
  for (std::size_t l = 0; l < bins.size(); ++l) {
    if (bins[l].count() > 0) continue;
    std::size_t best = filled.front();
    std::size_t best_gap = std::numeric_limits<std::size_t>::max();
    for (auto f : filled) {
      const std::size_t gap = f > l ? f - l : l - f;
      if (gap < best_gap) {
        best_gap = gap;
        best = f;
      }
    }
    branch[l] = branch[best];
  }
}

Assignment weighted_kmeans(const BinTable& bins, int k, int iters,
                           std::uint64_t seed, Criterion c) {
  if (k < 2) throw std::invalid_argument("weighted_kmeans: k must be >= 2");
  if (iters < 1) throw std::invalid_argument("weighted_kmeans: iters must be >= 1");
  Assignment out;
  out.arity = k;
  out.branch.assign(bins.size(), 0);
  const auto filled = nonempty_bins(bins);
  const std::size_t m = filled.size();
  const auto kk = static_cast<std::size_t>(k);

  if (m <= kk) {
    for (std::size_t i = 0; i < m; ++i) out.branch[filled[i]] = static_cast<int>(i);
    assign_empty_bins(bins, out.branch);
    out.objective = assignment_objective(bins, out.branch, k, c);
    return out;
  }

  std::vector<std::vector<double>> points;
  std::vector<double> weights;
  for (auto l : filled) {
    points.push_back(embed(bins[l]));
    weights.push_back(bins[l].weight());
  }

  // k-means++ seeding on weighted points.
  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  std::vector<bool> chosen(m, false);
  std::size_t first = weighted_pick(rng, weights);
  centers.push_back(points[first]);
  chosen[first] = true;
  std::vector<double> d2(m);
  while (centers.size() < kk) {
    for (std::size_t i = 0; i < m; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& ctr : centers) best = std::min(best, sq_dist(points[i], ctr));
      d2[i] = chosen[i] ? 0.0 : weights[i] * best;
    }
    std::size_t next = weighted_pick(rng, d2);
    if (next == m) {
      // Remaining points coincide with centers; take the lowest unused index.
      next = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    centers.push_back(points[next]);
    chosen[next] = true;
  }

  std::vector<int> label(m, -1);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < m; ++i) {
      int best = 0;
      double best_d = sq_dist(points[i], centers[0]);
      for (std::size_t j = 1; j < kk; ++j) {
        const double d = sq_dist(points[i], centers[j]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    // Repair empty clusters by stealing the point farthest from its centroid.
    for (std::size_t j = 0; j < kk; ++j) {
      std::vector<std::size_t> sizes(kk, 0);
      for (int l : label) ++sizes[static_cast<std::size_t>(l)];
      if (sizes[j] > 0) continue;
      std::size_t victim = m;
      double far = -1.0;
      for (std::size_t i = 0; i < m; ++i) {
        const auto cl = static_cast<std::size_t>(label[i]);
        if (sizes[cl] < 2) continue;
        const double d = sq_dist(points[i], centers[cl]);
        if (d > far) {
          far = d;
          victim = i;
        }
      }
      if (victim == m) break;
      label[victim] = static_cast<int>(j);
      centers[j] = points[victim];
      changed = true;
    }
    if (!changed && it > 0) break;
    for (std::size_t j = 0; j < kk; ++j) {
      std::vector<double> acc(points[0].size(), 0.0);
      double w = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (static_cast<std::size_t>(label[i]) != j) continue;
        for (std::size_t q = 0; q < acc.size(); ++q) acc[q] += weights[i] * points[i][q];
        w += weights[i];
      }
      if (w > 0.0) {
        for (auto& v : acc) v /= w;
        centers[j] = std::move(acc);
      }
    }
  }

  for (std::size_t i = 0; i < m; ++i) out.branch[filled[i]] = label[i];
  assign_empty_bins(bins, out.branch);
  out.objective = assignment_objective(bins, out.branch, k, c);
  return out;
}

Assignment coord_descent(const Assignment& init, const BinTable& bins,
                         Criterion c, int sweeps, std::uint64_t seed) {
  if (init.branch.size() != bins.size()) {
    throw std::invalid_argument("coord_descent: assignment does not match bins");
  }
  for (int b : init.branch) {
    if (b < 0 || b >= init.arity) throw std::invalid_argument("coord_descent: branch out of range");
  }
  Assignment a = init;
  const auto k = static_cast<std::size_t>(a.arity);
  auto stats = branch_stats(bins, a.branch, a.arity);
  std::vector<double> terms(k);
  for (std::size_t j = 0; j < k; ++j) terms[j] = weighted_term(stats[j], c);

  auto order = nonempty_bins(bins);
  Rng rng(seed);
  for (int r = 0; r < sweeps; ++r) {
    rng.shuffle(std::span<std::size_t>(order));
    bool changed = false;
    for (auto l : order) {
      const auto cur = static_cast<std::size_t>(a.branch[l]);
      double current = 0.0;
      for (double t : terms) current += t;
      const double without = weighted_term(stats_remove(stats[cur], bins[l]), c);
      std::size_t best = cur;
      double best_value = current;
      for (std::size_t b = 0; b < k; ++b) {
        if (b == cur) continue;
        const double moved = current - terms[cur] + without - terms[b] +
                             weighted_term(stats_merge(stats[b], bins[l]), c);
        if (strictly_less(moved, best_value)) {
          best_value = moved;
          best = b;
        }
      }
      if (best == cur) continue;
      a.branch[l] = static_cast<int>(best);
      stats = branch_stats(bins, a.branch, a.arity);
      for (std::size_t j = 0; j < k; ++j) terms[j] = weighted_term(stats[j], c);
      changed = true;
    }
    if (!changed) break;
  }
  a.objective = weighted_impurity(stats, c);
  return a;
}

Assignment select_arity(const BinTable& bins,
                        const std::optional<Assignment>& root_init,
                        int max_arity, Criterion c, const AssignParams& params) {
  if (max_arity < 2) throw std::invalid_argument("select_arity: K must be >= 2");
  params.validate();
  const std::size_t filled = nonempty_bins(bins).size();
  if (filled < 2) {
    Assignment trivial;
    trivial.branch.assign(bins.size(), 0);
    trivial.arity = 2;
    trivial.objective = assignment_objective(bins, trivial.branch, 2, c);
    return trivial;
  }
  std::optional<Assignment> best;
  double best_penalized = 0.0;
  for (int k = 2; k <= max_arity; ++k) {
    if (static_cast<std::size_t>(k) > filled) break;
    const auto ku = static_cast<std::uint64_t>(k);
    Assignment init = weighted_kmeans(bins, k, params.kmeans_iters,
                                      hash_combine(params.seed, ku), c);
    if (k == 2 && root_init && root_init->objective < init.objective) init = *root_init;
    Assignment refined = coord_descent(init, bins, c, params.sweeps,
                                       hash_combine(params.seed, 1000 + ku));
    const double penalized = refined.objective + params.branching_penalty * (k - 2);
    if (!best || strictly_less(penalized, best_penalized)) {
      best = std::move(refined);
      best_penalized = penalized;
    }
  }
  return *best;
}

}  // namespace sgt
