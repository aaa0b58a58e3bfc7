#include "sgt/model_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sgt {

using nlohmann::json;

std::string exact_text(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

double parse_exact(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [end, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || end != last) {
    throw ModelFormatError("bad number '" + text + "'");
  }
  return v;
}

namespace {

json stats_to_json(const TargetStats& s) {
  if (s.is_classification()) return json{{"counts", s.counts()}};
  return json{{"count", s.count()},
              {"sum", exact_text(s.sum())},
              {"sum_sq", exact_text(s.sum_sq())}};
}

TargetStats stats_from_json(const json& j, const SgtModel& m) {
  if (m.task == Task::classification) {
    const auto counts = j.at("counts").get<std::vector<std::int64_t>>();
    if (counts.size() != static_cast<std::size_t>(m.num_classes())) {
      throw ModelFormatError("leaf counts do not match the class count");
    }
    auto s = TargetStats::classification(m.num_classes());
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] < 0) throw ModelFormatError("negative class count");
      if (counts[c] > 0) s.add(static_cast<double>(c), counts[c]);
    }
    return s;
  }
  return TargetStats::regression(j.at("count").get<std::int64_t>(),
                                 parse_exact(j.at("sum").get<std::string>()),
                                 parse_exact(j.at("sum_sq").get<std::string>()));
}

json inner_to_json(const InnerTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes()) {
    if (n.is_leaf()) {
      nodes.push_back({{"bin", n.bin}});
    } else {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", exact_text(n.threshold)},
                       {"left", n.left},
                       {"right", n.right}});
    }
  }
  return json{{"columns", t.columns()}, {"directions", t.directions()}, {"nodes", nodes}};
}

InnerTree inner_from_json(const json& j) {
  std::vector<InnerTree::Node> nodes;
  for (const auto& jn : j.at("nodes")) {
    InnerTree::Node n;
    if (jn.contains("bin")) {
      n.bin = jn.at("bin").get<int>();
    } else {
      n.feature = jn.at("feature").get<int>();
      n.threshold = parse_exact(jn.at("threshold").get<std::string>());
      n.left = jn.at("left").get<int>();
      n.right = jn.at("right").get<int>();
    }
    nodes.push_back(n);
  }
  return InnerTree(j.at("columns").get<std::vector<std::size_t>>(),
                   j.at("directions").get<int>(), std::move(nodes));
}

json split_to_json(const NodeSplit& split) {
  if (const auto* t = std::get_if<ThresholdRule>(&split)) {
    return json{{"type", "threshold"}, {"column", t->column},
                {"threshold", exact_text(t->threshold)}};
  }
  const auto& fn = std::get<ShapeFunction>(split);
  return json{{"type", "shape"},
              {"kind", fn.kind == ShapeKind::univariate ? "univariate" : "bivariate"},
              {"features", fn.features},
              {"arity", fn.arity},
              {"bin_branch", fn.bin_branch},
              {"inner", inner_to_json(fn.tree)}};
}

NodeSplit split_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "threshold") {
    return ThresholdRule{j.at("column").get<std::size_t>(),
                         parse_exact(j.at("threshold").get<std::string>())};
  }
  if (type != "shape") throw ModelFormatError("unknown split type '" + type + "'");
  ShapeFunction fn;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "univariate") {
    fn.kind = ShapeKind::univariate;
  } else if (kind == "bivariate") {
    fn.kind = ShapeKind::bivariate;
  } else {
    throw ModelFormatError("unknown shape kind '" + kind + "'");
  }
  fn.features = j.at("features").get<std::vector<std::size_t>>();
  fn.arity = j.at("arity").get<int>();
  fn.bin_branch = j.at("bin_branch").get<std::vector<int>>();
  fn.tree = inner_from_json(j.at("inner"));
  if (fn.features.size() != (fn.kind == ShapeKind::univariate ? 1U : 2U) ||
      fn.tree.bivariate() != (fn.kind == ShapeKind::bivariate)) {
    throw ModelFormatError("shape kind does not match its features");
  }
  return fn;
}

}  // namespace

std::string serialize(const SgtModel& m) {
  json schema = json::array();
  for (const auto& f : m.schema.features()) {
    json jf{{"name", f.name},
            {"kind", f.kind == FeatureKind::numeric ? "numeric" : "categorical"}};
    if (f.kind == FeatureKind::categorical) jf["levels"] = f.levels;
    schema.push_back(std::move(jf));
  }
  json nodes = json::array();
  for (const auto& n : m.nodes) {
    json jn{{"depth", n.depth},
            {"prediction", exact_text(n.prediction)},
            {"stats", stats_to_json(n.stats)}};
    if (!n.is_leaf()) {
      jn["split"] = split_to_json(*n.split);
      jn["children"] = n.children;
    }
    if (!n.considered_pairs.empty()) jn["considered_pairs"] = n.considered_pairs;
    nodes.push_back(std::move(jn));
  }
  json doc{{"format", kModelFormat},
           {"version", kModelVersion},
           {"task", to_string(m.task)},
           {"criterion", to_string(m.criterion)},
           {"max_arity", m.max_arity},
           {"schema", schema},
           {"class_labels", m.class_labels},
           {"nodes", nodes}};
  return doc.dump(1) + "\n";
}

SgtModel deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelFormatError(std::string("malformed model document: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", std::string{}) != kModelFormat) {
      throw ModelFormatError("not an sgt-model document");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) {
      throw ModelFormatError("unsupported model version " + std::to_string(version) +
                             " (expected " + std::to_string(kModelVersion) + ")");
    }
    SgtModel m;
    m.task = parse_task(doc.at("task").get<std::string>());
    m.criterion = parse_criterion(doc.at("criterion").get<std::string>());
    m.max_arity = doc.at("max_arity").get<int>();
    std::vector<FeatureSpec> specs;
    for (const auto& jf : doc.at("schema")) {
      FeatureSpec f;
      f.name = jf.at("name").get<std::string>();
      const auto kind = jf.at("kind").get<std::string>();
      if (kind == "categorical") {
        f.kind = FeatureKind::categorical;
        f.levels = jf.at("levels").get<std::vector<std::string>>();
      } else if (kind != "numeric") {
        throw ModelFormatError("unknown feature kind '" + kind + "'");
      }
      specs.push_back(std::move(f));
    }
    m.schema = FeatureSchema(std::move(specs));
    m.class_labels = doc.at("class_labels").get<std::vector<std::string>>();
    if ((m.task == Task::classification) == m.class_labels.empty()) {
      throw ModelFormatError("class labels do not match the task");
    }
    for (const auto& jn : doc.at("nodes")) {
      TreeNode n;
      n.depth = jn.at("depth").get<int>();
      n.prediction = parse_exact(jn.at("prediction").get<std::string>());
      n.stats = stats_from_json(jn.at("stats"), m);
      if (jn.contains("split")) {
        n.split = split_from_json(jn.at("split"));
        n.children = jn.at("children").get<std::vector<int>>();
      }
      if (jn.contains("considered_pairs")) {
        n.considered_pairs =
            jn.at("considered_pairs").get<std::vector<std::pair<std::size_t, std::size_t>>>();
      }
      m.nodes.push_back(std::move(n));
    }
    if (m.task == Task::classification) {
      for (const auto& n : m.nodes) {
        if (n.prediction < 0 || n.prediction >= m.num_classes() ||
            n.prediction != std::floor(n.prediction)) {
          throw ModelFormatError("leaf prediction is not a class id");
        }
      }
    }
    m.validate();
    return m;
  } catch (const ModelFormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("invalid model document: ") + e.what());
  } catch (const std::exception& e) {
    throw ModelFormatError(std::string("invalid model: ") + e.what());
  }
}

void save_model(const SgtModel& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize(m);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

SgtModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

ModelStats stats(const SgtModel& m) {
  ModelStats s;
  const auto groups = encoding_groups(m.schema);
  std::set<std::size_t> used;
  for (const auto& n : m.nodes) {
    s.depth = std::max(s.depth, n.depth);
    if (n.is_leaf()) {
      ++s.leaves;
      continue;
    }
    ++s.internal;
    ++s.arity_histogram[n.arity()];
    if (const auto* t = std::get_if<ThresholdRule>(&*n.split)) {
      ++s.threshold;
      for (const auto& g : groups) {
        if (t->column >= g.first_column && t->column < g.first_column + g.width) {
          used.insert(g.feature);
        }
      }
    } else {
      const auto& fn = std::get<ShapeFunction>(*n.split);
      ++(fn.kind == ShapeKind::univariate ? s.univariate : s.bivariate);
      used.insert(fn.features.begin(), fn.features.end());
    }
  }
  s.features_used.assign(used.begin(), used.end());
  return s;
}

namespace {

std::string fmt4(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::vector<std::string> column_names(const FeatureSchema& schema) {
  std::vector<std::string> names;
  for (const auto& f : schema.features()) {
    if (f.kind == FeatureKind::numeric) {
      names.push_back(f.name);
    } else {
      for (const auto& lv : f.levels) names.push_back(f.name + "=" + lv);
    }
  }
  return names;
}

std::vector<std::string> numeric_segments(const ShapeFunction& fn) {
  std::vector<double> cuts;
  for (const auto& n : fn.tree.nodes()) {
    if (!n.is_leaf()) cuts.push_back(n.threshold);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const std::size_t col = fn.tree.columns()[0];
  auto branch_at = [&](double x) {
    return fn.bin_branch[static_cast<std::size_t>(
        fn.tree.route([&](std::size_t c) { return c == col ? x : 0.0; }))];
  };
  struct Segment {
    double lo, hi;
    int branch;
  };
  std::vector<Segment> segs;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    const double lo = i == 0 ? -inf : cuts[i - 1];
    const double hi = i == cuts.size() ? inf : cuts[i];
    const double probe = i == cuts.size() ? std::nextafter(lo, inf) : hi;
    const int b = cuts.empty() ? branch_at(0.0) : branch_at(probe);
    if (!segs.empty() && segs.back().branch == b) {
      segs.back().hi = hi;
    } else {
      segs.push_back({lo, hi, b});
    }
  }
  std::vector<std::string> out;
  for (const auto& s : segs) {
    out.push_back("(" + fmt4(s.lo) + ", " + fmt4(s.hi) + (std::isinf(s.hi) ? ")" : "]") +
                  " -> " + std::to_string(s.branch));
  }
  return out;
}

std::vector<std::string> categorical_segments(const ShapeFunction& fn,
                                              const FeatureSpec& spec) {
  const std::size_t first = fn.tree.columns()[0];
  std::map<int, std::vector<std::string>> by_branch;
  for (std::size_t lv = 0; lv < spec.levels.size(); ++lv) {
    const int bin = fn.tree.route([&](std::size_t c) { return c == first + lv ? 1.0 : 0.0; });
    by_branch[fn.bin_branch[static_cast<std::size_t>(bin)]].push_back(spec.levels[lv]);
  }
  std::vector<std::string> out;
  for (const auto& [b, levels] : by_branch) {
    std::string s = "{";
    for (std::size_t i = 0; i < levels.size(); ++i) s += (i ? "," : "") + levels[i];
    out.push_back(s + "} -> " + std::to_string(b));
  }
  return out;
}

std::vector<std::string> bivariate_rules(const ShapeFunction& fn, const std::string& a,
                                         const std::string& b) {
  auto local_name = [&](int f) {
    if (f == 0) return a;
    if (f == 1) return b;
    const auto [c, s] = fn.tree.direction(f - 2);
    return fmt4(c) + "*" + a + " + " + fmt4(s) + "*" + b;
  };
  std::vector<std::string> out;
  std::function<void(int, std::string)> walk = [&](int id, std::string path) {
    const auto& n = fn.tree.nodes()[static_cast<std::size_t>(id)];
    if (n.is_leaf()) {
      out.push_back((path.empty() ? std::string("always") : path) + " -> " +
                    std::to_string(fn.bin_branch[static_cast<std::size_t>(n.bin)]));
      return;
    }
    const std::string sep = path.empty() ? "" : " and ";
    const std::string lhs = local_name(n.feature);
    walk(n.left, path + sep + lhs + " <= " + fmt4(n.threshold));
    walk(n.right, path + sep + lhs + " > " + fmt4(n.threshold));
  };
  walk(0, "");
  return out;
}

}  // namespace

std::string to_dot(const SgtModel& m) {
  const auto names = column_names(m.schema);
  std::ostringstream out;
  out << "digraph sgt {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const auto& n = m.nodes[i];
    std::vector<std::string> lines;
    if (n.is_leaf()) {
      const std::string pred =
          m.task == Task::classification
              ? m.class_labels.at(static_cast<std::size_t>(n.prediction))
              : fmt4(n.prediction);
      lines = {"predict " + pred, "n = " + std::to_string(n.stats.count())};
    } else if (const auto* t = std::get_if<ThresholdRule>(&*n.split)) {
      lines = {names.at(t->column) + " <= " + fmt4(t->threshold)};
    } else {
      const auto& fn = std::get<ShapeFunction>(*n.split);
      const auto& f1 = m.schema[fn.features[0]];
      if (fn.kind == ShapeKind::bivariate) {
        const auto& f2 = m.schema[fn.features[1]];
        lines = {f1.name + ", " + f2.name};
        for (auto& r : bivariate_rules(fn, f1.name, f2.name)) lines.push_back(std::move(r));
      } else {
        lines = {f1.name};
        auto segs = f1.kind == FeatureKind::numeric ? numeric_segments(fn)
                                                    : categorical_segments(fn, f1);
        for (auto& s : segs) lines.push_back(std::move(s));
      }
    }
    std::string label;
    for (std::size_t l = 0; l < lines.size(); ++l) {
      label += (l ? "\\n" : "") + dot_escape(lines[l]);
    }
    out << "  n" << i << " [label=\"" << label << "\"";
    if (n.is_leaf()) out << ", style=rounded";
    out << "];\n";
  }
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const auto& ch = m.nodes[i].children;
    for (std::size_t b = 0; b < ch.size(); ++b) {
      out << "  n" << i << " -> n" << ch[b] << " [label=\"" << b << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

}  // namespace sgt
