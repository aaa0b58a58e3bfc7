#include "sgt/inner_tree.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace sgt {

std::size_t InnerTreeParams::min_leaf_count(std::size_t n) const {
  if (min_samples_leaf >= 1.0) return static_cast<std::size_t>(min_samples_leaf);
  const auto c = static_cast<std::size_t>(std::ceil(min_samples_leaf * static_cast<double>(n)));
  return std::max<std::size_t>(1, c);
}

void InnerTreeParams::validate() const {
  if (max_leaf_nodes < 2) throw std::invalid_argument("inner max_leaf_nodes must be >= 2");
  if (!(min_samples_leaf > 0.0) ||
      (min_samples_leaf > 1.0 && min_samples_leaf != std::floor(min_samples_leaf))) {
    throw std::invalid_argument(
        "inner min_samples_leaf must be a fraction in (0,1] or an integer count");
  }
}

InnerTree::InnerTree(std::vector<std::size_t> columns, int directions,
                     std::vector<Node> nodes)
    : columns_(std::move(columns)), directions_(directions), nodes_(std::move(nodes)) {
  validate();
}

void InnerTree::validate() {
  if (nodes_.empty()) throw std::invalid_argument("inner tree without nodes");
  if (columns_.empty()) throw std::invalid_argument("inner tree without columns");
  if (directions_ < 0 || (directions_ > 0 && columns_.size() != 2)) {
    throw std::invalid_argument("bivariate inner tree needs exactly two columns");
  }
  const int n = static_cast<int>(nodes_.size());
  std::vector<int> seen(nodes_.size(), 0);
  std::vector<int> stack{0};
  int bins = 0;
  std::vector<int> bin_seen;
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)]++) {
      throw std::invalid_argument("inner tree is not a tree");
    }
    const auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      ++bins;
      bin_seen.push_back(node.bin);
      continue;
    }
    if (node.feature >= num_local_features() || !std::isfinite(node.threshold)) {
      throw std::invalid_argument("inner tree node has an invalid split");
    }
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw std::invalid_argument("inner tree has unreachable nodes");
  }
  std::sort(bin_seen.begin(), bin_seen.end());
  for (int b = 0; b < bins; ++b) {
    if (bin_seen[static_cast<std::size_t>(b)] != b) {
      throw std::invalid_argument("inner tree bins are not numbered 0..L-1");
    }
  }
  num_bins_ = bins;
}

int InnerTree::num_local_features() const {
  return bivariate() ? 2 + directions_ : static_cast<int>(columns_.size());
}

std::pair<double, double> InnerTree::direction(int h) const {
  const double phi = static_cast<double>(h) * std::numbers::pi / static_cast<double>(directions_);
  auto snap = [](double v) {
    if (std::abs(v) < 1e-12) return 0.0;
    if (std::abs(v - 1.0) < 1e-12) return 1.0;
    if (std::abs(v + 1.0) < 1e-12) return -1.0;
    return v;
  };
  return {snap(std::cos(phi)), snap(std::sin(phi))};
}

int InnerTree::bin(std::span<const double> encoded_row) const {
  return route([&](std::size_t col) { return encoded_row[col]; });
}

int InnerTree::bin(const EncodedMatrix& X, std::size_t row) const {
  return route([&](std::size_t col) { return X(row, col); });
}

std::vector<int> InnerTree::leaves_by_bin() const {
  std::vector<int> out(static_cast<std::size_t>(num_bins_), -1);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_leaf()) out[static_cast<std::size_t>(nodes_[i].bin)] = static_cast<int>(i);
  }
  return out;
}

ThresholdSplit best_threshold_split(
    const std::vector<std::vector<double>>& values,
    std::span<const double> targets, std::span<const std::size_t> subset,
    const TargetStats& empty, Criterion criterion, std::size_t min_leaf) {
  ThresholdSplit best;
  const std::size_t n = subset.size();
  if (n < 2 * std::max<std::size_t>(min_leaf, 1)) return best;

  TargetStats parent = empty;
  for (auto p : subset) parent.add(targets[p]);
  const double parent_weighted = weighted_term(parent, criterion);
  const double tol = 1e-12 * std::max(1.0, parent_weighted);
  best.objective = parent_weighted;

  std::vector<std::size_t> order(subset.begin(), subset.end());
  for (std::size_t f = 0; f < values.size(); ++f) {
    const auto& v = values[f];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    TargetStats left = empty;
    TargetStats right = parent;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double t = targets[order[i]];
      left.add(t);
      right.add(t, -1);
      const double lo = v[order[i]];
      const double hi = v[order[i + 1]];
      if (!(lo < hi)) continue;
      if (i + 1 < min_leaf || n - i - 1 < min_leaf) continue;
      const double objective = weighted_term(left, criterion) + weighted_term(right, criterion);
      const double decrease = parent_weighted - objective;
      if (decrease <= tol) continue;
      if (best.feature < 0 || decrease > best.decrease + tol) {
        best.feature = static_cast<int>(f);
        best.threshold = lo + (hi - lo) / 2.0;
        // Midpoints of adjacent doubles can round onto `hi`.
        if (!(best.threshold < hi)) best.threshold = lo;
        best.decrease = decrease;
        best.objective = objective;
      }
    }
    order.assign(subset.begin(), subset.end());
  }
  return best;
}

namespace {

struct Frontier {
  int node = 0;
  std::vector<std::size_t> positions;
  ThresholdSplit split;
  int order = 0;
};

struct FrontierLess {
  bool operator()(const Frontier* a, const Frontier* b) const {
    if (a->split.decrease != b->split.decrease) return a->split.decrease < b->split.decrease;
    return a->order > b->order;
  }
};

InnerTree grow(const SampleSet& samples, std::vector<std::size_t> columns,
               int directions, const InnerTreeParams& params,
               const std::vector<std::vector<double>>& values) {
  params.validate();
  const std::size_t min_leaf = params.min_leaf_count(samples.size());
  const TargetStats empty = samples.empty_stats();

  std::vector<InnerTree::Node> nodes(1);
  std::vector<std::unique_ptr<Frontier>> frontier;
  std::priority_queue<Frontier*, std::vector<Frontier*>, FrontierLess> queue;
  int order = 0;

  auto push = [&](int node, std::vector<std::size_t> positions) {
    auto f = std::make_unique<Frontier>();
    f->node = node;
    f->positions = std::move(positions);
    f->split = best_threshold_split(values, samples.targets, f->positions, empty,
                                    params.criterion, min_leaf);
    f->order = order++;
    if (f->split.feature >= 0) queue.push(f.get());
    frontier.push_back(std::move(f));
  };

  std::vector<std::size_t> all(samples.size());
  for (std::size_t p = 0; p < all.size(); ++p) all[p] = p;
  push(0, std::move(all));

  int leaves = 1;
  while (leaves < params.max_leaf_nodes && !queue.empty()) {
    Frontier* f = queue.top();
    queue.pop();
    const auto& s = f->split;
    const auto& v = values[static_cast<std::size_t>(s.feature)];
    std::vector<std::size_t> lpos, rpos;
    for (auto p : f->positions) (v[p] <= s.threshold ? lpos : rpos).push_back(p);
    const int l = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes.emplace_back();
    auto& parent = nodes[static_cast<std::size_t>(f->node)];
    parent.feature = s.feature;
    parent.threshold = s.threshold;
    parent.left = l;
    parent.right = l + 1;
    f->positions.clear();
    f->positions.shrink_to_fit();
    push(l, std::move(lpos));
    push(l + 1, std::move(rpos));
    ++leaves;
  }

  // Bins are numbered by in-order (left-to-right) leaf order.
  int next_bin = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    auto& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      node.bin = next_bin++;
    } else {
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  return InnerTree(std::move(columns), directions, std::move(nodes));
}

}  // namespace

InnerTree fit_univariate(const SampleSet& samples,
                         std::span<const std::size_t> columns,
                         const InnerTreeParams& params) {
  if (samples.size() == 0) throw std::invalid_argument("fit_univariate: no samples");
  if (columns.empty()) throw std::invalid_argument("fit_univariate: no columns");
  std::vector<std::vector<double>> values(columns.size(), std::vector<double>(samples.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    for (std::size_t p = 0; p < samples.size(); ++p) values[j][p] = samples.value(p, columns[j]);
  }
  return grow(samples, {columns.begin(), columns.end()}, 0, params, values);
}

InnerTree fit_bivariate(const SampleSet& samples, std::size_t col1,
                        std::size_t col2, int directions,
                        const InnerTreeParams& params) {
  if (samples.size() == 0) throw std::invalid_argument("fit_bivariate: no samples");
  if (directions < 2) throw std::invalid_argument("fit_bivariate: directions must be >= 2");
  for (auto col : {col1, col2}) {
    const auto g = samples.X->group_of_column(col);
    if (samples.X->groups[g].kind != FeatureKind::numeric) {
      throw std::invalid_argument("fit_bivariate: categorical column supplied");
    }
  }
  // A throwaway tree gives access to the snapped projection directions.
  InnerTree::Node leaf;
  leaf.bin = 0;
  const InnerTree probe({col1, col2}, directions, {leaf});
  const int local = probe.num_local_features();
  std::vector<std::vector<double>> values(static_cast<std::size_t>(local),
                                          std::vector<double>(samples.size()));
  for (std::size_t p = 0; p < samples.size(); ++p) {
    auto get = [&](std::size_t col) { return samples.value(p, col); };
    for (int f = 0; f < local; ++f) {
      values[static_cast<std::size_t>(f)][p] = probe.local_value(f, get);
    }
  }
  return grow(samples, {col1, col2}, directions, params, values);
}

BinTable extract_bin_stats(const InnerTree& tree, const SampleSet& samples) {
  BinTable bins(static_cast<std::size_t>(tree.num_bins()), samples.empty_stats());
  for (std::size_t p = 0; p < samples.size(); ++p) {
    bins[static_cast<std::size_t>(tree.bin(*samples.X, samples.rows[p]))].add(samples.targets[p]);
  }
  return bins;
}

std::vector<int> root_assignment(const InnerTree& tree) {
  const auto& nodes = tree.nodes();
  if (nodes[0].is_leaf()) {
    throw std::invalid_argument("root_assignment: single-leaf inner tree");
  }
  std::vector<int> out(static_cast<std::size_t>(tree.num_bins()), 0);
  std::vector<int> stack{nodes[0].right};
  while (!stack.empty()) {
    const auto& n = nodes[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (n.is_leaf()) {
      out[static_cast<std::size_t>(n.bin)] = 1;
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  return out;
}

}  // namespace sgt
