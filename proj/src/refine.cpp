#include "sgt/refine.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "sgt/sample_set.hpp"

namespace sgt {
namespace {

double subtree_prediction(const SgtModel& m, int node, const EncodedMatrix& X,
                          std::size_t row) {
  int id = node;
  while (!m.nodes[static_cast<std::size_t>(id)].is_leaf()) {
    const auto& n = m.nodes[static_cast<std::size_t>(id)];
    id = n.children[static_cast<std::size_t>(n.branch(X, row))];
  }
  return m.nodes[static_cast<std::size_t>(id)].prediction;
}

double sample_loss(Task task, double prediction, double target) {
  if (task == Task::classification) return prediction == target ? 0.0 : 1.0;
  const double e = prediction - target;
  return e * e;
}

std::vector<std::vector<std::size_t>> rows_per_node(const SgtModel& m,
                                                    const EncodedMatrix& X) {
  std::vector<std::vector<std::size_t>> out(m.nodes.size());
  for (std::size_t i = 0; i < X.rows; ++i) {
    int id = 0;
    while (true) {
      const auto& n = m.nodes[static_cast<std::size_t>(id)];
      out[static_cast<std::size_t>(id)].push_back(i);
      if (n.is_leaf()) break;
      id = n.children[static_cast<std::size_t>(n.branch(X, i))];
    }
  }
  return out;
}

std::size_t count_leaves(const SgtModel& m, int node) {
  std::size_t leaves = 0;
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const auto& n = m.nodes[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (n.is_leaf()) {
      ++leaves;
    } else {
      stack.insert(stack.end(), n.children.begin(), n.children.end());
    }
  }
  return leaves;
}

double node_loss(const SgtModel& m, int node, const EncodedMatrix& X,
                 std::span<const double> y, std::span<const std::size_t> rows) {
  double loss = 0.0;
  for (auto r : rows) loss += sample_loss(m.task, subtree_prediction(m, node, X, r), y[r]);
  return loss;
}

// Every leaf below `node` must receive at least `min_leaf` of `rows`.
bool leaves_supported(const SgtModel& m, int node, const EncodedMatrix& X,
                      std::span<const std::size_t> rows, std::size_t min_leaf) {
  std::vector<std::size_t> hits(m.nodes.size(), 0);
  for (auto r : rows) {
    int id = node;
    while (!m.nodes[static_cast<std::size_t>(id)].is_leaf()) {
      const auto& n = m.nodes[static_cast<std::size_t>(id)];
      id = n.children[static_cast<std::size_t>(n.branch(X, r))];
    }
    ++hits[static_cast<std::size_t>(id)];
  }
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const auto& n = m.nodes[static_cast<std::size_t>(stack.back())];
    const auto id = static_cast<std::size_t>(stack.back());
    stack.pop_back();
    if (n.is_leaf()) {
      if (hits[id] < min_leaf) return false;
    } else {
      stack.insert(stack.end(), n.children.begin(), n.children.end());
    }
  }
  return true;
}

// Drops unreachable nodes and renumbers the arena breadth-first.
void compact(SgtModel& m) {
  std::vector<TreeNode> out;
  std::vector<int> queue{0};
  std::vector<int> new_id(m.nodes.size(), -1);
  new_id[0] = 0;
  out.push_back(m.nodes[0]);
  out[0].depth = 0;
  for (std::size_t head = 0; head < out.size(); ++head) {
    auto children = out[head].children;
    for (auto& c : children) {
      const int nid = static_cast<int>(out.size());
      TreeNode child = m.nodes[static_cast<std::size_t>(c)];
      child.depth = out[head].depth + 1;
      out.push_back(std::move(child));
      c = nid;
    }
    out[head].children = std::move(children);
  }
  m.nodes = std::move(out);
}

std::optional<ShapeFunction> refit_candidate(const SampleSet& care_view,
                                             const FeatureTarget& target,
                                             const InnerTreeParams& inner,
                                             int directions, int arity) {
  const auto& X = *care_view.X;
  ShapeFunction fn;
  if (target.second) {
    const auto& g1 = X.groups.at(target.first);
    const auto& g2 = X.groups.at(*target.second);
    fn.kind = ShapeKind::bivariate;
    fn.features = {g1.feature, g2.feature};
    fn.tree = fit_bivariate(care_view, g1.first_column, g2.first_column, directions, inner);
  } else {
    const auto& g = X.groups.at(target.first);
    std::vector<std::size_t> cols(g.width);
    for (std::size_t j = 0; j < g.width; ++j) cols[j] = g.first_column + j;
    fn.kind = ShapeKind::univariate;
    fn.features = {g.feature};
    fn.tree = fit_univariate(care_view, cols, inner);
  }
  if (fn.tree.num_bins() < 2) return std::nullopt;
  const BinTable bins = extract_bin_stats(fn.tree, care_view);
  fn.bin_branch.resize(bins.size());
  for (std::size_t l = 0; l < bins.size(); ++l) {
    fn.bin_branch[l] = static_cast<int>(bins[l].prediction());
  }
  assign_empty_bins(bins, fn.bin_branch);
  fn.arity = arity;
  return fn;
}

}  // namespace

void TaoParams::validate() const {
  if (passes < 1) throw std::invalid_argument("TAO passes must be >= 1");
  if (reg < 0) throw std::invalid_argument("TAO regularization must be >= 0");
}

CareSet build_care_set(const SgtModel& m, int node, const EncodedMatrix& X,
                       std::span<const double> targets,
                       std::span<const std::size_t> reaching) {
  const auto& n = m.nodes[static_cast<std::size_t>(node)];
  CareSet care;
  if (n.is_leaf()) return care;
  const std::size_t k = n.children.size();
  std::vector<double> loss(k);
  for (auto r : reaching) {
    for (std::size_t b = 0; b < k; ++b) {
      loss[b] = sample_loss(m.task, subtree_prediction(m, n.children[b], X, r), targets[r]);
    }
    const double best = *std::min_element(loss.begin(), loss.end());
    if (m.task == Task::classification && best > 0.0) continue;  // no branch helps
    std::vector<int> valid;
    const double tol = 1e-12 * std::max(1.0, best);
    for (std::size_t b = 0; b < k; ++b) {
      if (loss[b] <= best + tol) valid.push_back(static_cast<int>(b));
    }
    if (valid.size() == k) continue;  // indifferent
    for (int b : valid) {
      care.dup_rows.push_back(r);
      care.dup_labels.push_back(b);
    }
    care.rows.push_back(r);
    care.valid.push_back(std::move(valid));
  }
  return care;
}

double pseudolabel_accuracy(const TreeNode& node, const NodeSplit& split,
                            const CareSet& care, const EncodedMatrix& X) {
  if (care.empty()) return 1.0;
  TreeNode probe;
  probe.split = split;
  probe.children = node.children;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < care.rows.size(); ++i) {
    const int b = probe.branch(X, care.rows[i]);
    const auto& v = care.valid[i];
    hits += std::find(v.begin(), v.end(), b) != v.end();
  }
  return static_cast<double>(hits) / static_cast<double>(care.rows.size());
}

double tao_objective(const SgtModel& m, const Dataset& train, double reg) {
  const double loss = m.task == Task::classification ? 1.0 - accuracy(m, train)
                                                     : mean_squared_error(m, train);
  return loss + reg * static_cast<double>(count_leaves(m, 0));
}

SgtModel tao_refine(const SgtModel& m, const Dataset& train, const TaoParams& tp,
                    const Hyperparams& hp, TaoTrace* trace) {
  tp.validate();
  if (!(train.schema == m.schema)) throw DataError("training data does not match the model schema");
  SgtModel model = m;
  model.validate();
  const EncodedMatrix X = one_hot_view(train);
  const std::span<const double> y = train.targets;
  const double n_rows = static_cast<double>(std::max<std::size_t>(1, train.rows()));
  const auto min_leaf = static_cast<std::size_t>(hp.min_samples_leaf);

  InnerTreeParams inner;
  inner.max_leaf_nodes = hp.inner_max_leaf_nodes;
  inner.min_samples_leaf = hp.inner_min_samples_leaf;
  inner.criterion = Criterion::gini;

  if (trace) trace->objective.push_back(tao_objective(model, train, tp.reg));
  refresh_node_stats(model, X, y);

  for (int pass = 0; pass < tp.passes; ++pass) {
    int changes = 0;
    const auto reaching = rows_per_node(model, X);

    std::vector<int> order;
    for (std::size_t i = 0; i < model.nodes.size(); ++i) {
      if (!model.nodes[i].is_leaf()) order.push_back(static_cast<int>(i));
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return model.nodes[static_cast<std::size_t>(a)].depth >
             model.nodes[static_cast<std::size_t>(b)].depth;
    });

    // Node refits. Routing above a node is untouched by refits below it, so
    // the rows reaching each node stay valid for the whole sweep.
    for (int id : order) {
      auto& node = model.nodes[static_cast<std::size_t>(id)];
      const auto& rows = reaching[static_cast<std::size_t>(id)];
      const CareSet care = build_care_set(model, id, X, y, rows);
      if (care.empty()) continue;
      SampleSet care_view;
      care_view.X = &X;
      care_view.rows = care.dup_rows;
      care_view.targets = care.dup_labels;
      care_view.task = Task::classification;
      care_view.num_classes = node.arity();

      std::vector<FeatureTarget> candidates;
      for (std::size_t g = 0; g < X.groups.size(); ++g) candidates.push_back({g, std::nullopt});
      for (const auto& [a, b] : node.considered_pairs) candidates.push_back({a, b});

      const double current = node_loss(model, id, X, y, rows);
      double best_loss = current;
      std::optional<NodeSplit> best;
      const NodeSplit original = *node.split;
      const double base_acc = pseudolabel_accuracy(node, original, care, X);
      for (const auto& cand : candidates) {
        auto fn = refit_candidate(care_view, cand, inner, hp.directions, node.arity());
        if (!fn) continue;
        model.nodes[static_cast<std::size_t>(id)].split = *fn;
        const double loss = node_loss(model, id, X, y, rows);
        if (strictly_less(loss, best_loss) &&
            pseudolabel_accuracy(node, *fn, care, X) >= base_acc &&
            leaves_supported(model, id, X, rows, min_leaf)) {
          best_loss = loss;
          best = std::move(*fn);
        }
        model.nodes[static_cast<std::size_t>(id)].split = original;
      }
      if (best) {
        model.nodes[static_cast<std::size_t>(id)].split = std::move(best);
        ++changes;
      }
    }
    refresh_node_stats(model, X, y);

    // Pruning, deepest first: collapse to a leaf or hoist the busiest child
    // when loss + reg * leaves does not increase.
    const auto routed = rows_per_node(model, X);
    for (int id : order) {
      auto& node = model.nodes[static_cast<std::size_t>(id)];
      if (node.is_leaf()) continue;
      const auto& rows = routed[static_cast<std::size_t>(id)];
      const double current = node_loss(model, id, X, y, rows) / n_rows +
                             tp.reg * static_cast<double>(count_leaves(model, id));

      TargetStats stats = node.stats;
      double leaf_loss = 0.0;
      for (auto r : rows) leaf_loss += sample_loss(model.task, stats.prediction(), y[r]);
      const double as_leaf = leaf_loss / n_rows + tp.reg;

      std::size_t busiest = 0;
      std::size_t most = 0;
      for (std::size_t b = 0; b < node.children.size(); ++b) {
        const auto c = static_cast<std::size_t>(node.children[b]);
        if (routed[c].size() > most) {
          most = routed[c].size();
          busiest = b;
        }
      }
      const int child = node.children[busiest];
      const double as_child = node_loss(model, child, X, y, rows) / n_rows +
                              tp.reg * static_cast<double>(count_leaves(model, child));

      const double tol = 1e-12 * std::max(1.0, current);
      if (as_leaf <= current + tol && as_leaf <= as_child + tol) {
        node.split.reset();
        node.children.clear();
        node.prediction = stats.prediction();
        ++changes;
      } else if (as_child <= current + tol) {
        const int depth = node.depth;
        TreeNode hoisted = model.nodes[static_cast<std::size_t>(child)];
        hoisted.depth = depth;
        model.nodes[static_cast<std::size_t>(id)] = std::move(hoisted);
        ++changes;
      }
    }
    compact(model);
    refresh_node_stats(model, X, y);
    model.validate();

    if (trace) {
      trace->objective.push_back(tao_objective(model, train, tp.reg));
      trace->changes.push_back(changes);
    }
    if (changes == 0) break;
  }
  return model;
}

}  // namespace sgt
