#include <algorithm>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "sgt/inner_tree.hpp"

using namespace sgt;
using testing::FullView;

namespace {

InnerTreeParams params(int leaves) {
  InnerTreeParams p;
  p.max_leaf_nodes = leaves;
  return p;
}

InnerTree balanced_four() {
  using N = InnerTree::Node;
  std::vector<N> nodes(7);
  nodes[0] = {0, 0.5, 1, 2, -1};
  nodes[1] = {0, 0.25, 3, 4, -1};
  nodes[2] = {0, 0.75, 5, 6, -1};
  for (int i = 3; i < 7; ++i) nodes[static_cast<std::size_t>(i)].bin = i - 3;
  return InnerTree({0}, 0, nodes);
}

// Exhaustive best decrease over local features of a bivariate tree.
double best_decrease(const InnerTree& probe, const SampleSet& s, Criterion c) {
  const auto parent = weighted_term(s.stats(), c);
  double best = 0.0;
  for (int f = 0; f < probe.num_local_features(); ++f) {
    std::vector<double> v(s.size());
    for (std::size_t p = 0; p < s.size(); ++p) {
      v[p] = probe.local_value(f, [&](std::size_t col) { return s.value(p, col); });
    }
    std::vector<double> cuts = v;
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double t = (cuts[i] + cuts[i + 1]) / 2.0;
      auto l = s.empty_stats(), r = s.empty_stats();
      for (std::size_t p = 0; p < s.size(); ++p) (v[p] <= t ? l : r).add(s.targets[p]);
      best = std::max(best, parent - weighted_term(l, c) - weighted_term(r, c));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("constant feature gives a single leaf") {
  const Dataset ds = testing::numeric_dataset({{1, 1, 1, 1}}, {0, 1, 0, 1});
  FullView v(ds);
  const std::size_t cols[] = {0};
  const InnerTree t = fit_univariate(v.samples, cols, params(8));
  CHECK(t.num_bins() == 1);
  const BinTable bins = extract_bin_stats(t, v.samples);
  REQUIRE(bins.size() == 1);
  CHECK(bins[0] == v.samples.stats());
  CHECK_THROWS_AS(root_assignment(t), std::invalid_argument);
}

TEST_CASE("bars omega=5 with eight leaves yields seven pure bins") {
  const Dataset ds = gen_bars(5, 210, 4);
  FullView v(ds);
  const std::size_t cols[] = {0};
  const InnerTree t = fit_univariate(v.samples, cols, params(8));
  CHECK(t.num_bins() == 7);
  const BinTable bins = extract_bin_stats(t, v.samples);
  for (const auto& b : bins) {
    CHECK(b.count() > 0);
    CHECK(std::min(b.counts()[0], b.counts()[1]) == 0);
  }
  // Oracle: each interior sign change j/7 lies between the largest sample below
  // it and the smallest sample above it; some threshold must sit in that gap.
  std::vector<double> thresholds;
  for (const auto& n : t.nodes()) {
    if (!n.is_leaf()) thresholds.push_back(n.threshold);
  }
  for (int j = 1; j < 7; ++j) {
    const double b = j / 7.0;
    double below = -1.0, above = 2.0;
    for (double x : ds.columns[0]) {
      if (x < b) below = std::max(below, x);
      if (x >= b) above = std::min(above, x);
    }
    const bool bracketed = std::any_of(thresholds.begin(), thresholds.end(),
                                       [&](double t) { return t >= below && t < above; });
    CHECK(bracketed);
  }
  // Bins are numbered left to right and alternate labels.
  for (std::size_t l = 0; l < bins.size(); ++l) {
    CHECK(bins[l].prediction() == static_cast<double>(l % 2));
  }
}

TEST_CASE("binary indicator column splits at 0.5") {
  const Dataset ds = testing::numeric_dataset({{0, 1, 0, 1, 1, 0}}, {0, 1, 0, 1, 0, 0});
  FullView v(ds);
  const std::size_t cols[] = {0};
  const InnerTree t = fit_univariate(v.samples, cols, params(8));
  CHECK(t.num_bins() <= 2);
  REQUIRE(t.num_bins() == 2);
  CHECK(t.nodes()[0].threshold == 0.5);
}

TEST_CASE("min_samples_leaf as a fraction of the node") {
  InnerTreeParams p;
  p.min_samples_leaf = 0.25;
  CHECK(p.min_leaf_count(10) == 3);
  p.min_samples_leaf = 4;
  CHECK(p.min_leaf_count(10) == 4);
  p.max_leaf_nodes = 1;
  CHECK_THROWS(p.validate());
}

TEST_CASE("root assignment follows the root split") {
  const InnerTree t = balanced_four();
  CHECK(t.num_bins() == 4);
  CHECK(root_assignment(t) == std::vector<int>{0, 0, 1, 1});
  using N = InnerTree::Node;
  const InnerTree stump({0}, 0, {N{0, 0.0, 1, 2, -1}, N{-1, 0, -1, -1, 0}, N{-1, 0, -1, -1, 1}});
  CHECK(root_assignment(stump) == std::vector<int>{0, 1});
}

TEST_CASE("root assignment reproduces the CART root split impurity") {
  const Dataset ds = testing::random_dataset(300, 1, 3, 5);
  FullView v(ds);
  const std::size_t cols[] = {0};
  const InnerTree t = fit_univariate(v.samples, cols, params(12));
  const BinTable bins = extract_bin_stats(t, v.samples);
  const auto a = root_assignment(t);
  std::vector<TargetStats> branches(2, v.samples.empty_stats());
  for (std::size_t l = 0; l < bins.size(); ++l) branches[static_cast<std::size_t>(a[l])].merge(bins[l]);
  std::vector<std::vector<double>> values = {ds.columns[0]};
  std::vector<std::size_t> subset(ds.rows());
  std::iota(subset.begin(), subset.end(), 0);
  const auto cut = best_threshold_split(values, ds.targets, subset, v.samples.empty_stats(),
                                        Criterion::gini, 1);
  CHECK(weighted_impurity(branches, Criterion::gini) == doctest::Approx(cut.objective));
}

TEST_CASE("malformed trees are rejected") {
  using N = InnerTree::Node;
  CHECK_THROWS(InnerTree({0}, 0, {N{0, 0.5, 1, 1, -1}, N{-1, 0, -1, -1, 0}}));
  CHECK_THROWS(InnerTree({0}, 0, {N{-1, 0, -1, -1, 3}}));
  CHECK_THROWS(InnerTree({0}, 0, {N{0, std::nan(""), 1, 2, -1}, N{-1, 0, -1, -1, 0},
                                  N{-1, 0, -1, -1, 1}}));
}

TEST_CASE("bivariate with two directions behaves like axis-aligned CART") {
  const Dataset ds = testing::random_dataset(250, 2, 2, 8);
  FullView v(ds);
  const InnerTree bi = fit_bivariate(v.samples, 0, 1, 2, params(10));
  CHECK(bi.direction(0) == std::pair<double, double>{1.0, 0.0});
  CHECK(bi.direction(1) == std::pair<double, double>{0.0, 1.0});
  const std::size_t cols[] = {0, 1};
  const InnerTree uni = fit_univariate(v.samples, cols, params(10));
  REQUIRE(bi.num_bins() == uni.num_bins());
  Rng rng(2);
  for (int i = 0; i < 2000; ++i) {
    const double row[] = {rng.uniform(), rng.uniform()};
    CHECK(bi.bin(row) == uni.bin(row));
  }
}

TEST_CASE("diagonal boundary picks the 45 degree projection") {
  Rng rng(4);
  std::vector<std::vector<double>> cols(2, std::vector<double>(400));
  std::vector<double> y(400);
  for (std::size_t i = 0; i < 400; ++i) {
    cols[0][i] = rng.uniform();
    cols[1][i] = rng.uniform();
    y[i] = cols[0][i] + cols[1][i] > 1.0 ? 1 : 0;
  }
  const Dataset ds = testing::numeric_dataset(cols, y);
  FullView v(ds);
  const InnerTree t = fit_bivariate(v.samples, 0, 1, 4, params(2));
  REQUIRE(t.num_bins() == 2);
  CHECK(t.nodes()[0].feature == 3);  // 2 + h with h*pi/4 = 45 degrees
  CHECK(best_decrease(t, v.samples, Criterion::gini) ==
        doctest::Approx(weighted_term(v.samples.stats(), Criterion::gini)));
  CHECK(extract_bin_stats(t, v.samples)[0].counts()[1] == 0);
  const Dataset cat = [] {
    Dataset d;
    d.schema = FeatureSchema({{"c", FeatureKind::categorical, {"a", "b"}}, {"x", FeatureKind::numeric, {}}});
    d.task = Task::classification;
    d.class_labels = {"0", "1"};
    d.columns = {{0, 1, 0}, {0.1, 0.2, 0.3}};
    d.targets = {0, 1, 0};
    return d;
  }();
  FullView cv(cat);
  CHECK_THROWS_AS(fit_bivariate(cv.samples, 0, 2, 4, params(4)), std::invalid_argument);
  CHECK_THROWS_AS(fit_bivariate(v.samples, 0, 1, 1, params(4)), std::invalid_argument);
}

TEST_CASE("property: growth, routing and tiling on random data") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Dataset ds = testing::random_dataset(120, 1, 3, seed);
    FullView v(ds);
    const int L = 2 + static_cast<int>(seed % 12);
    const std::size_t cols[] = {0};
    const InnerTree t = fit_univariate(v.samples, cols, params(L));
    CHECK(t.num_bins() <= L);

    // Every split strictly lowers the weighted impurity of the rows it sees.
    std::vector<TargetStats> at(t.nodes().size(), v.samples.empty_stats());
    for (std::size_t p = 0; p < v.samples.size(); ++p) {
      int id = 0;
      while (true) {
        at[static_cast<std::size_t>(id)].add(v.samples.targets[p]);
        const auto& n = t.nodes()[static_cast<std::size_t>(id)];
        if (n.is_leaf()) break;
        id = v.samples.value(p, 0) <= n.threshold ? n.left : n.right;
      }
    }
    for (const auto& n : t.nodes()) {
      if (n.is_leaf()) continue;
      const auto& self = at[static_cast<std::size_t>(&n - t.nodes().data())];
      CHECK(weighted_term(at[static_cast<std::size_t>(n.left)], Criterion::gini) +
                weighted_term(at[static_cast<std::size_t>(n.right)], Criterion::gini) <
            weighted_term(self, Criterion::gini));
    }

    // Bins are intervals tiling the line, numbered left to right.
    std::vector<double> cuts;
    for (const auto& n : t.nodes()) {
      if (!n.is_leaf()) cuts.push_back(n.threshold);
    }
    std::sort(cuts.begin(), cuts.end());
    CHECK(cuts.size() + 1 == static_cast<std::size_t>(t.num_bins()));
    int last = -1;
    for (std::size_t i = 0; i <= cuts.size(); ++i) {
      const double probe = i < cuts.size() ? cuts[i] : std::nextafter(cuts.empty() ? 0.0 : cuts.back(), 10.0);
      const double row[] = {probe};
      const int b = t.bin(row);
      CHECK(b == last + 1);
      last = b;
    }

    // Bin stats partition the node.
    auto total = v.samples.empty_stats();
    for (const auto& b : extract_bin_stats(t, v.samples)) total.merge(b);
    CHECK(total == v.samples.stats());
  }
}
