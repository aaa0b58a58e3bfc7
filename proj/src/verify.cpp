#include "sgt/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sgt/assign.hpp"
#include "sgt/model_io.hpp"
#include "sgt/rng.hpp"
#include "sgt/split.hpp"

namespace sgt {

Theorem2Result theorem2_gap(int omega, const Hyperparams& hp) {
  if (omega < 1) throw std::invalid_argument("theorem2_gap: omega must be >= 1");
  if (hp.inner_max_leaf_nodes < omega + 2) {
    throw std::invalid_argument("theorem2_gap: inner_max_leaf_nodes must be >= omega + 2");
  }
  const std::size_t n = std::max<std::size_t>(200, 20 * static_cast<std::size_t>(omega + 2));
  const Dataset ds = gen_bars(omega, n, hp.seed);

  Hyperparams shallow = hp;
  shallow.max_depth = 1;
  const SgtModel sgt = fit(ds, shallow);

  Hyperparams deep = hp;
  deep.max_depth = std::numeric_limits<int>::max() / 2;
  const SgtModel cart = fit_cart(ds, deep);

  Theorem2Result r;
  r.sgt_nodes = stats(sgt).internal;
  r.cart_nodes = stats(cart).internal;
  r.sgt_accuracy = accuracy(sgt, ds);
  r.cart_accuracy = accuracy(cart, ds);
  return r;
}

double naive_threshold_gain(const Dataset& ds, Criterion c) {
  const EncodedMatrix X = one_hot_view(ds);
  auto empty = [&] {
    return ds.task == Task::classification ? TargetStats::classification(ds.num_classes())
                                           : TargetStats::regression();
  };
  TargetStats all = empty();
  for (double t : ds.targets) all.add(t);
  const double parent = weighted_term(all, c);
  double best = 0.0;
  for (std::size_t col = 0; col < X.cols(); ++col) {
    std::vector<double> values = X.columns[col];
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double cut = values[i] + (values[i + 1] - values[i]) / 2.0;
      TargetStats left = empty();
      TargetStats right = empty();
      for (std::size_t r = 0; r < X.rows; ++r) {
        (X(r, col) <= cut ? left : right).add(ds.targets[r]);
      }
      best = std::max(best, parent - weighted_term(left, c) - weighted_term(right, c));
    }
  }
  return best;
}

Dataset lemma1_dataset(const Lemma1Spec& spec, std::uint64_t seed) {
  if (spec.classes < 2 || spec.d < 1 || spec.n < 2) {
    throw std::invalid_argument("lemma1_dataset: need n >= 2, d >= 1, classes >= 2");
  }
  Rng rng(seed);
  std::vector<FeatureSpec> features;
  for (std::size_t j = 0; j < spec.d; ++j) {
    features.push_back({"x" + std::to_string(j), FeatureKind::numeric, {}});
  }
  Dataset ds;
  ds.schema = FeatureSchema(std::move(features));
  ds.task = Task::classification;
  for (int c = 0; c < spec.classes; ++c) ds.class_labels.push_back(std::to_string(c));
  ds.columns.assign(spec.d, std::vector<double>(spec.n));
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t j = 0; j < spec.d; ++j) {
      // Odd columns are coarse so that duplicate values occur.
      const double u = rng.uniform();
      ds.columns[j][i] = j % 2 ? std::floor(u * 8.0) : u;
    }
    const double signal = std::sin(6.0 * ds.columns[0][i]) + 0.3 * ds.columns[1 % spec.d][i];
    int label = static_cast<int>(std::floor((signal + 1.0) * spec.classes / 4.0));
    label = std::clamp(label, 0, spec.classes - 1);
    if (rng.uniform() < 0.25) label = static_cast<int>(rng.index(static_cast<std::size_t>(spec.classes)));
    ds.targets.push_back(label);
  }
  return ds;
}

Lemma1Report lemma1_harness(std::size_t trials, const Lemma1Spec& spec,
                            std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("lemma1_harness: trials must be >= 1");
  Lemma1Report rep;
  rep.trials = trials;
  SplitParams params;
  params.criterion = spec.criterion;
  for (std::size_t t = 0; t < trials; ++t) {
    const Dataset ds = lemma1_dataset(spec, hash_combine(seed, t));
    const EncodedMatrix X = one_hot_view(ds);
    std::vector<std::size_t> rows(ds.rows());
    std::iota(rows.begin(), rows.end(), 0);
    SampleSet s;
    s.X = &X;
    s.rows = rows;
    s.targets = ds.targets;
    s.task = ds.task;
    s.num_classes = ds.num_classes();
    const SplitResult r = select_split(s, params, hash_combine(seed, t));
    const double shape_gain = r.node_impurity - r.unpenalized;
    const double cut_gain = naive_threshold_gain(ds, spec.criterion);
    rep.max_violation = std::max(rep.max_violation, cut_gain - shape_gain);
    rep.mean_threshold_gain += cut_gain / static_cast<double>(trials);
    rep.mean_shape_gain += shape_gain / static_cast<double>(trials);
  }
  return rep;
}

namespace {

bool is_local_optimum(const BinTable& bins, const Assignment& a, Criterion c) {
  for (std::size_t l = 0; l < bins.size(); ++l) {
    if (bins[l].count() == 0) continue;
    for (int b = 0; b < a.arity; ++b) {
      if (b == a.branch[l]) continue;
      auto moved = a.branch;
      moved[l] = b;
      if (strictly_less(assignment_objective(bins, moved, a.arity, c), a.objective)) {
        return false;
      }
    }
  }
  return true;
}

double exhaustive_optimum(const BinTable& bins, int k, Criterion c) {
  const std::size_t L = bins.size();
  std::vector<int> a(L, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best = std::min(best, assignment_objective(bins, a, k, c));
    std::size_t i = 0;
    while (i < L && ++a[i] == k) a[i++] = 0;
    if (i == L) break;
  }
  return best;
}

}  // namespace

AssignmentOracleReport assignment_oracle(std::size_t trials, std::uint64_t seed) {
  AssignmentOracleReport rep;
  rep.trials = trials;
  Rng rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto L = 2 + rng.index(9);  // 2..10
    const int k = 2 + static_cast<int>(rng.index(2));
    const int classes = 2 + static_cast<int>(rng.index(2));
    const Criterion c = t % 2 ? Criterion::entropy : Criterion::gini;
    BinTable bins(L, TargetStats::classification(classes));
    for (auto& b : bins) {
      if (rng.uniform() < 0.1) continue;  // occasional empty bin
      for (int cl = 0; cl < classes; ++cl) {
        const auto n = static_cast<std::int64_t>(rng.index(20));
        if (n > 0) b.add(cl, n);
      }
    }
    const std::uint64_t s = hash_combine(seed, t);
    const Assignment km = weighted_kmeans(bins, k, 100, s, c);
    Assignment cut;
    cut.arity = k;
    const std::size_t at = 1 + rng.index(L - 1);
    for (std::size_t l = 0; l < L; ++l) cut.branch.push_back(l < at ? 0 : 1);
    cut.objective = assignment_objective(bins, cut.branch, k, c);

    double best = std::numeric_limits<double>::infinity();
    bool local = true;
    bool monotone = true;
    for (const Assignment* init : {&km, static_cast<const Assignment*>(&cut)}) {
      const double start = assignment_objective(bins, init->branch, init->arity, c);
      const Assignment out = coord_descent(*init, bins, c, 10, hash_combine(s, 7));
      local = local && is_local_optimum(bins, out, c);
      monotone = monotone && !(out.objective > start);
      best = std::min(best, out.objective);
    }
    rep.not_local_optimum += !local;
    rep.worse_than_init += !monotone;
    rep.global_matches += std::abs(best - exhaustive_optimum(bins, k, c)) <= 1e-9;
  }
  return rep;
}

namespace {

Dataset timing_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureSpec> features;
  for (std::size_t j = 0; j < d; ++j) {
    features.push_back({"x" + std::to_string(j), FeatureKind::numeric, {}});
  }
  Dataset ds;
  ds.schema = FeatureSchema(std::move(features));
  ds.task = Task::classification;
  ds.class_labels = {"0", "1"};
  ds.columns.assign(d, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.columns[j][i] = rng.uniform();
    const bool inside = std::abs(ds.columns[0][i] - 0.5) < 0.2;
    ds.targets.push_back(rng.uniform() < 0.1 ? !inside : inside);
  }
  return ds;
}

double median_split_seconds(const Dataset& ds, const SplitParams& params, int repeats) {
  const EncodedMatrix X = one_hot_view(ds);
  std::vector<std::size_t> rows(ds.rows());
  std::iota(rows.begin(), rows.end(), 0);
  SampleSet s;
  s.X = &X;
  s.rows = rows;
  s.targets = ds.targets;
  s.task = ds.task;
  s.num_classes = ds.num_classes();
  std::vector<double> times;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const SplitResult res = select_split(s, params, 0);
    const auto t1 = std::chrono::steady_clock::now();
    if (!res.fn) throw std::runtime_error("complexity_smoke: no split found");
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::nth_element(times.begin(), times.begin() + repeats / 2, times.end());
  return times[static_cast<std::size_t>(repeats / 2)];
}

}  // namespace

ComplexityReport complexity_smoke(std::size_t n, std::size_t d, double factor,
                                  int repeats, std::uint64_t seed) {
  if (factor <= 1.0 || repeats < 1 || n < 2 || d < 1) {
    throw std::invalid_argument("complexity_smoke: need factor > 1, repeats >= 1");
  }
  SplitParams params;
  const auto scaled = [&](std::size_t v) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(v) * factor));
  };
  ComplexityReport r;
  r.base_seconds = median_split_seconds(timing_dataset(n, d, seed), params, repeats);
  r.n_ratio = median_split_seconds(timing_dataset(scaled(n), d, seed), params, repeats) /
              r.base_seconds;
  r.d_ratio = median_split_seconds(timing_dataset(n, scaled(d), seed), params, repeats) /
              r.base_seconds;

  SplitParams small = params;
  small.inner.max_leaf_nodes = 4;
  const Dataset base = timing_dataset(n, d, seed);
  const double k2 = median_split_seconds(base, small, repeats);
  small.max_arity = 3;
  r.k_ratio = median_split_seconds(base, small, repeats) / k2;
  return r;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string to_string(const Theorem2Result& r) {
  return "sgt_nodes=" + std::to_string(r.sgt_nodes) +
         " cart_nodes=" + std::to_string(r.cart_nodes) +
         " sgt_acc=" + fmt("%.4f", r.sgt_accuracy) +
         " cart_acc=" + fmt("%.4f", r.cart_accuracy);
}

std::string to_string(const Lemma1Report& r) {
  return "trials=" + std::to_string(r.trials) +
         " max violation " + fmt("%.1e", r.max_violation) +
         " mean_cut_gain=" + fmt("%.4f", r.mean_threshold_gain) +
         " mean_shape_gain=" + fmt("%.4f", r.mean_shape_gain);
}

std::string to_string(const AssignmentOracleReport& r) {
  return "trials=" + std::to_string(r.trials) +
         " not_local=" + std::to_string(r.not_local_optimum) +
         " worse_than_init=" + std::to_string(r.worse_than_init) +
         " global_matches=" + std::to_string(r.global_matches);
}

std::string to_string(const ComplexityReport& r) {
  return "base=" + fmt("%.4fs", r.base_seconds) + " n_ratio=" + fmt("%.2f", r.n_ratio) +
         " d_ratio=" + fmt("%.2f", r.d_ratio) + " k_ratio=" + fmt("%.2f", r.k_ratio);
}

}  // namespace sgt
