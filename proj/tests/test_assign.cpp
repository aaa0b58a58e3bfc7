#include <limits>

#include "doctest.h"
#include "sgt/assign.hpp"
#include "sgt/rng.hpp"
#include "sgt/sample_set.hpp"

using namespace sgt;

namespace {

TargetStats cls(std::initializer_list<std::int64_t> cs) {
  auto s = TargetStats::classification(static_cast<int>(cs.size()));
  int c = 0;
  for (auto n : cs) {
    if (n > 0) s.add(c, n);
    ++c;
  }
  return s;
}

TargetStats reg(std::initializer_list<double> vs) {
  auto s = TargetStats::regression();
  for (double v : vs) s.add(v);
  return s;
}

// Minimum over every map of L bins into k labels.
double brute_force(const BinTable& bins, int k, Criterion c) {
  std::vector<int> a(bins.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    best = std::min(best, assignment_objective(bins, a, k, c));
    std::size_t i = 0;
    while (i < a.size() && ++a[i] == k) a[i++] = 0;
    if (i == a.size()) return best;
  }
}

bool local_optimum(const BinTable& bins, const Assignment& a, Criterion c) {
  for (std::size_t l = 0; l < bins.size(); ++l) {
    for (int b = 0; b < a.arity; ++b) {
      auto moved = a.branch;
      moved[l] = b;
      if (assignment_objective(bins, moved, a.arity, c) < a.objective - 1e-12 * std::max(1.0, a.objective)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("k-means separates two pure groups") {
  const BinTable bins = {cls({1, 0}), cls({1, 0}), cls({0, 1}), cls({0, 1})};
  const Assignment a = weighted_kmeans(bins, 2, 100, 3, Criterion::gini);
  CHECK(a.objective == 0.0);
  CHECK(a.branch[0] == a.branch[1]);
  CHECK(a.branch[2] == a.branch[3]);
  CHECK(a.branch[0] != a.branch[2]);
}

TEST_CASE("k equal to the number of distinct distributions isolates each") {
  const BinTable bins = {cls({2, 1}), cls({0, 3}), cls({4, 2}), cls({3, 3})};
  const Assignment a = weighted_kmeans(bins, 3, 100, 1, Criterion::gini);
  const TargetStats grouped[] = {stats_merge(bins[0], bins[2]), bins[1], bins[3]};
  CHECK(a.objective == doctest::Approx(weighted_impurity(grouped, Criterion::gini)));
}

TEST_CASE("k-means on means {0,1,10} keeps 0 and 1 together") {
  const BinTable bins = {reg({0}), reg({1}), reg({10})};
  const Assignment a = weighted_kmeans(bins, 2, 100, 5, Criterion::mse);
  CHECK(a.branch[0] == a.branch[1]);
  CHECK(a.branch[2] != a.branch[0]);
  // Among the three nontrivial bipartitions {0,1}|{10} has the least weighted mse.
  const double keep = assignment_objective(bins, {0, 0, 1}, 2, Criterion::mse);
  CHECK(keep < assignment_objective(bins, {0, 1, 1}, 2, Criterion::mse));
  CHECK(keep < assignment_objective(bins, {0, 1, 0}, 2, Criterion::mse));
  CHECK(a.objective == doctest::Approx(keep));
}

TEST_CASE("coordinate descent from the worst start reaches zero") {
  const BinTable bins = {cls({1, 0}), cls({0, 1}), cls({1, 0}), cls({0, 1})};
  CHECK(brute_force(bins, 2, Criterion::gini) == 0.0);
  Assignment init;
  init.branch = {1, 1, 0, 0};
  init.arity = 2;
  init.objective = assignment_objective(bins, init.branch, 2, Criterion::gini);
  const Assignment out = coord_descent(init, bins, Criterion::gini, 10, 0);
  CHECK(out.objective == 0.0);
}

TEST_CASE("coordinate descent leaves a local optimum unchanged") {
  // Moving the mixed bin ties but never strictly improves.
  const BinTable bins = {cls({3, 0}), cls({0, 3}), cls({1, 1})};
  Assignment init;
  init.branch = {0, 1, 0};
  init.arity = 2;
  init.objective = assignment_objective(bins, init.branch, 2, Criterion::gini);
  REQUIRE(local_optimum(bins, init, Criterion::gini));
  const Assignment out = coord_descent(init, bins, Criterion::gini, 10, 9);
  CHECK(out.branch == init.branch);
  CHECK_THROWS_AS(coord_descent(Assignment{{0}, 2, 0.0}, bins, Criterion::gini, 10, 0),
                  std::invalid_argument);
}

TEST_CASE("arity selection") {
  const BinTable bins = {cls({4, 0, 0}), cls({0, 3, 0}), cls({0, 0, 5}), cls({2, 0, 0}),
                         cls({0, 0, 1}), cls({0, 6, 0})};
  AssignParams p;
  const Assignment two = select_arity(bins, std::nullopt, 2, Criterion::gini, p);
  CHECK(two.arity == 2);
  const Assignment three = select_arity(bins, std::nullopt, 3, Criterion::gini, p);
  CHECK(brute_force(bins, 3, Criterion::gini) == 0.0);
  CHECK(three.arity == 3);
  CHECK(three.objective == 0.0);
  p.branching_penalty = two.objective + 1.0;
  const Assignment penalized = select_arity(bins, std::nullopt, 3, Criterion::gini, p);
  CHECK(penalized.arity == 2);
}

TEST_CASE("root initialization is never beaten downward") {
  const BinTable bins = {cls({5, 1}), cls({1, 5}), cls({4, 2}), cls({2, 4})};
  Assignment root;
  root.branch = {0, 0, 1, 1};
  root.arity = 2;
  root.objective = assignment_objective(bins, root.branch, 2, Criterion::entropy);
  const Assignment a = select_arity(bins, root, 2, Criterion::entropy, AssignParams{});
  CHECK(a.objective <= root.objective + 1e-12);
}

TEST_CASE("empty bins copy their nearest nonempty neighbour") {
  const BinTable bins = {cls({1, 0}), cls({0, 0}), cls({0, 0}), cls({0, 1}), cls({0, 0})};
  std::vector<int> branch = {0, 1, 1, 1, 0};
  assign_empty_bins(bins, branch);
  CHECK(branch == std::vector<int>{0, 0, 1, 1, 1});
}

TEST_CASE("property: descent is monotone, locally optimal and deterministic") {
  Rng rng(21);
  for (int trial = 0; trial < 150; ++trial) {
    const auto L = 2 + rng.index(9);
    const int k = 2 + static_cast<int>(rng.index(2));
    const Criterion c = trial % 3 == 0 ? Criterion::entropy : Criterion::gini;
    BinTable bins(L, TargetStats::classification(3));
    for (auto& b : bins) {
      for (int cl = 0; cl < 3; ++cl) b.add(cl, 1 + static_cast<std::int64_t>(rng.index(9)));
    }
    Assignment init;
    init.arity = k;
    for (std::size_t l = 0; l < L; ++l) init.branch.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(k))));
    init.objective = assignment_objective(bins, init.branch, k, c);
    const Assignment out = coord_descent(init, bins, c, 50, static_cast<std::uint64_t>(trial));
    CHECK(out.objective <= init.objective);
    CHECK(local_optimum(bins, out, c));
    CHECK(out.objective >= brute_force(bins, k, c) - 1e-9);
    const Assignment again = coord_descent(init, bins, c, 50, static_cast<std::uint64_t>(trial));
    CHECK(again.branch == out.branch);
  }
}
