#include "sgt/induce.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <queue>
#include <stdexcept>

#include "sgt/rng.hpp"

namespace sgt {

int TreeNode::branch(std::span<const double> encoded_row) const {
  return std::visit(
      [&](const auto& s) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ThresholdRule>) {
          return encoded_row[s.column] <= s.threshold ? 0 : 1;
        } else {
          return s.branch(encoded_row);
        }
      },
      *split);
}

int TreeNode::branch(const EncodedMatrix& X, std::size_t row) const {
  return std::visit(
      [&](const auto& s) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, ThresholdRule>) {
          return X(row, s.column) <= s.threshold ? 0 : 1;
        } else {
          return s.branch(X, row);
        }
      },
      *split);
}

SplitParams Hyperparams::split_params() const {
  SplitParams p;
  p.max_arity = max_arity;
  p.pairwise_limit = pairwise_limit;
  p.pairwise_penalty = pairwise_penalty;
  p.criterion = criterion;
  p.inner.max_leaf_nodes = inner_max_leaf_nodes;
  p.inner.min_samples_leaf = inner_min_samples_leaf;
  p.inner.criterion = criterion;
  p.assign.sweeps = sweeps;
  p.assign.kmeans_iters = kmeans_iters;
  p.assign.branching_penalty = branching_penalty;
  p.directions = directions;
  p.threads = threads;
  return p;
}

void Hyperparams::validate(Task task) const {
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw std::invalid_argument("min_samples_leaf must be >= 1");
  if (min_impurity_decrease < 0) throw std::invalid_argument("min_impurity_decrease must be >= 0");
  if (!criterion_matches(criterion, task)) {
    throw std::invalid_argument("criterion '" + to_string(criterion) +
                                "' is incompatible with the " + to_string(task) + " task");
  }
  split_params().validate();
}

int SgtModel::leaf_of(std::span<const double> encoded_row) const {
  int id = 0;
  while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    id = n.children[static_cast<std::size_t>(n.branch(encoded_row))];
  }
  return id;
}

int SgtModel::leaf_of(const EncodedMatrix& X, std::size_t row) const {
  int id = 0;
  while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    id = n.children[static_cast<std::size_t>(n.branch(X, row))];
  }
  return id;
}

double SgtModel::predict(std::span<const double> raw_row) const {
  const auto encoded = encode_row(schema, raw_row);
  return nodes[static_cast<std::size_t>(leaf_of(encoded))].prediction;
}

std::vector<double> SgtModel::predict(const Dataset& ds) const {
  if (!(ds.schema == schema)) throw DataError("dataset schema does not match the model");
  const auto X = one_hot_view(ds);
  std::vector<double> out(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    out[i] = nodes[static_cast<std::size_t>(leaf_of(X, i))].prediction;
  }
  return out;
}

std::vector<double> SgtModel::predict_proba(std::span<const double> raw_row) const {
  const auto encoded = encode_row(schema, raw_row);
  return nodes[static_cast<std::size_t>(leaf_of(encoded))].stats.distribution();
}

void SgtModel::validate() const {
  if (nodes.empty()) throw std::invalid_argument("model has no nodes");
  std::vector<int> parents(nodes.size(), 0);
  const auto groups = encoding_groups(schema);
  const std::size_t encoded_cols =
      groups.empty() ? 0 : groups.back().first_column + groups.back().width;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) {
      if (!n.children.empty()) throw std::invalid_argument("leaf with children");
      continue;
    }
    int arity = 2;
    if (const auto* t = std::get_if<ThresholdRule>(&*n.split)) {
      if (t->column >= encoded_cols) throw std::invalid_argument("threshold column out of range");
    } else {
      const auto& fn = std::get<ShapeFunction>(*n.split);
      arity = fn.arity;
      if (fn.bin_branch.size() != static_cast<std::size_t>(fn.tree.num_bins())) {
        throw std::invalid_argument("assignment length does not match bin count");
      }
      for (int b : fn.bin_branch) {
        if (b < 0 || b >= arity) throw std::invalid_argument("assignment branch out of range");
      }
      for (auto c : fn.tree.columns()) {
        if (c >= encoded_cols) throw std::invalid_argument("inner tree column out of range");
      }
    }
    if (arity < 2 || n.arity() != arity) {
      throw std::invalid_argument("node arity does not match its child count");
    }
    for (int c : n.children) {
      if (c <= 0 || static_cast<std::size_t>(c) >= nodes.size()) {
        throw std::invalid_argument("child id out of range");
      }
      if (++parents[static_cast<std::size_t>(c)] > 1) {
        throw std::invalid_argument("node with several parents");
      }
      if (nodes[static_cast<std::size_t>(c)].depth != n.depth + 1) {
        throw std::invalid_argument("inconsistent node depth");
      }
    }
  }
  if (nodes[0].depth != 0) throw std::invalid_argument("root depth must be 0");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (parents[i] != 1) throw std::invalid_argument("orphan node in model");
  }
}

namespace {

struct Candidate {
  std::optional<NodeSplit> split;
  std::vector<std::vector<std::size_t>> partitions;  // positions
  double objective = 0.0;
  double node_impurity = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> considered_pairs;
};

using Selector = std::function<Candidate(const SampleSet&, std::uint64_t)>;

SgtModel grow(const Dataset& train, const Hyperparams& hp, const Selector& select) {
  if (train.rows() == 0) throw DataError("empty training set");
  train.validate();
  hp.validate(train.task);

  SgtModel model;
  model.schema = train.schema;
  model.task = train.task;
  model.class_labels = train.class_labels;
  model.criterion = hp.criterion;
  model.max_arity = hp.max_arity;

  const EncodedMatrix X = one_hot_view(train);
  const double n_root = static_cast<double>(train.rows());

  struct Work {
    int node = 0;
    std::vector<std::size_t> rows;
    std::vector<double> targets;
    std::uint64_t seed = 0;
    std::optional<Candidate> candidate;
    double improvement = 0.0;
    std::size_t order = 0;
  };
  std::vector<std::unique_ptr<Work>> work;
  auto cmp = [](const Work* a, const Work* b) {
    if (a->improvement != b->improvement) return a->improvement < b->improvement;
    return a->order > b->order;
  };
  std::priority_queue<Work*, std::vector<Work*>, decltype(cmp)> queue(cmp);

  auto sample_set = [&](const Work& w) {
    SampleSet s;
    s.X = &X;
    s.rows = w.rows;
    s.targets = w.targets;
    s.task = train.task;
    s.num_classes = train.num_classes();
    return s;
  };

  auto enqueue = [&](int node, std::vector<std::size_t> rows, std::uint64_t seed) {
    auto w = std::make_unique<Work>();
    w->node = node;
    w->rows = std::move(rows);
    w->targets.reserve(w->rows.size());
    for (auto r : w->rows) w->targets.push_back(train.targets[r]);
    w->seed = seed;
    w->order = work.size();
    const auto s = sample_set(*w);
    auto& tn = model.nodes[static_cast<std::size_t>(node)];
    tn.stats = s.stats();
    tn.prediction = tn.stats.prediction();
    // Nodes that can never split are not worth a split search.
    const bool splittable = tn.depth < hp.max_depth &&
                            w->rows.size() >= static_cast<std::size_t>(hp.min_samples_split);
    if (splittable) {
      w->candidate = select(s, seed);
      w->improvement = w->candidate->node_impurity - w->candidate->objective;
    } else {
      w->improvement = -std::numeric_limits<double>::infinity();
    }
    queue.push(w.get());
    work.push_back(std::move(w));
  };

  model.nodes.emplace_back();
  std::vector<std::size_t> all(train.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  enqueue(0, std::move(all), hash_combine(hp.seed, 0));

  std::size_t internal = 0;
  while (!queue.empty()) {
    Work* w = queue.top();
    queue.pop();
    auto& cand = w->candidate;
    const int depth = model.nodes[static_cast<std::size_t>(w->node)].depth;
    if (!cand || !cand->split) continue;
    if (w->improvement / n_root < hp.min_impurity_decrease) continue;
    if (depth >= hp.max_depth) continue;
    if (w->rows.size() < static_cast<std::size_t>(hp.min_samples_split)) continue;
    if (std::any_of(cand->partitions.begin(), cand->partitions.end(), [&](const auto& p) {
          return p.size() < static_cast<std::size_t>(hp.min_samples_leaf);
        })) {
      continue;
    }
    if (internal >= hp.max_internal_nodes) continue;

    ++internal;
    const std::size_t k = cand->partitions.size();
    std::vector<int> children;
    for (std::size_t j = 0; j < k; ++j) {
      children.push_back(static_cast<int>(model.nodes.size()));
      model.nodes.emplace_back();
      model.nodes.back().depth = depth + 1;
    }
    {
      auto& tn = model.nodes[static_cast<std::size_t>(w->node)];
      tn.split = std::move(cand->split);
      tn.children = children;
      tn.considered_pairs = std::move(cand->considered_pairs);
    }
    for (std::size_t j = 0; j < k; ++j) {
      std::vector<std::size_t> rows;
      rows.reserve(cand->partitions[j].size());
      for (auto p : cand->partitions[j]) rows.push_back(w->rows[p]);
      enqueue(children[j], std::move(rows), hash_combine(w->seed, j + 1));
    }
    w->rows.clear();
    w->targets.clear();
    cand.reset();
  }
  model.validate();
  return model;
}

}  // namespace

SgtModel fit(const Dataset& train, const Hyperparams& hp) {
  const SplitParams params = hp.split_params();
  return grow(train, hp, [&](const SampleSet& s, std::uint64_t seed) {
    SplitResult r = select_split(s, params, seed);
    Candidate c;
    c.node_impurity = r.node_impurity;
    c.objective = r.objective;
    c.considered_pairs = std::move(r.considered_pairs);
    if (r.fn) {
      c.split = std::move(*r.fn);
      c.partitions = std::move(r.partitions);
    }
    return c;
  });
}

SgtModel fit_cart(const Dataset& train, const Hyperparams& hp) {
  return grow(train, hp, [&](const SampleSet& s, std::uint64_t) {
    Candidate c;
    const TargetStats node = s.stats();
    c.node_impurity = weighted_term(node, hp.criterion);
    c.objective = c.node_impurity;
    std::vector<std::vector<double>> values(s.X->cols(), std::vector<double>(s.size()));
    for (std::size_t col = 0; col < s.X->cols(); ++col) {
      for (std::size_t p = 0; p < s.size(); ++p) values[col][p] = s.value(p, col);
    }
    std::vector<std::size_t> positions(s.size());
    for (std::size_t p = 0; p < s.size(); ++p) positions[p] = p;
    const auto best = best_threshold_split(values, s.targets, positions, s.empty_stats(),
                                           hp.criterion, 1);
    if (best.feature < 0) return c;
    const auto col = static_cast<std::size_t>(best.feature);
    c.split = ThresholdRule{col, best.threshold};
    c.objective = best.objective;
    c.partitions.assign(2, {});
    for (std::size_t p = 0; p < s.size(); ++p) {
      c.partitions[values[col][p] <= best.threshold ? 0 : 1].push_back(p);
    }
    return c;
  });
}

SgtModel from_cart(const SgtModel& cart) {
  SgtModel out = cart;
  const auto groups = encoding_groups(cart.schema);
  for (auto& n : out.nodes) {
    if (n.is_leaf()) continue;
    const auto* rule = std::get_if<ThresholdRule>(&*n.split);
    if (!rule) continue;
    std::size_t feature = 0;
    for (const auto& g : groups) {
      if (rule->column >= g.first_column && rule->column < g.first_column + g.width) {
        feature = g.feature;
      }
    }
    std::vector<InnerTree::Node> tn(3);
    tn[0].feature = 0;
    tn[0].threshold = rule->threshold;
    tn[0].left = 1;
    tn[0].right = 2;
    tn[1].bin = 0;
    tn[2].bin = 1;
    ShapeFunction fn;
    fn.kind = ShapeKind::univariate;
    fn.features = {feature};
    fn.tree = InnerTree({rule->column}, 0, std::move(tn));
    fn.bin_branch = {0, 1};
    fn.arity = 2;
    n.split = std::move(fn);
  }
  return out;
}

double predict(const SgtModel& m, std::span<const double> raw_row) {
  return m.predict(raw_row);
}

double accuracy(const SgtModel& m, const Dataset& ds) {
  if (ds.rows() == 0) return 0.0;
  const auto pred = m.predict(ds);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) correct += pred[i] == ds.targets[i];
  return static_cast<double>(correct) / static_cast<double>(ds.rows());
}

double sum_squared_error(const SgtModel& m, const Dataset& ds) {
  const auto pred = m.predict(ds);
  double sse = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const double e = pred[i] - ds.targets[i];
    sse += e * e;
  }
  return sse;
}

double mean_squared_error(const SgtModel& m, const Dataset& ds) {
  if (ds.rows() == 0) return 0.0;
  return sum_squared_error(m, ds) / static_cast<double>(ds.rows());
}

void refresh_node_stats(SgtModel& m, const EncodedMatrix& X,
                        std::span<const double> targets) {
  const TargetStats empty = m.task == Task::classification
                                ? TargetStats::classification(m.num_classes())
                                : TargetStats::regression();
  std::vector<TargetStats> fresh(m.nodes.size(), empty);
  for (std::size_t i = 0; i < X.rows; ++i) {
    int id = 0;
    while (true) {
      auto& n = m.nodes[static_cast<std::size_t>(id)];
      fresh[static_cast<std::size_t>(id)].add(targets[i]);
      if (n.is_leaf()) break;
      id = n.children[static_cast<std::size_t>(n.branch(X, i))];
    }
  }
  for (std::size_t id = 0; id < m.nodes.size(); ++id) {
    auto& n = m.nodes[id];
    n.stats = fresh[id];
    if (n.stats.count() > 0) n.prediction = n.stats.prediction();
  }
}

}  // namespace sgt
