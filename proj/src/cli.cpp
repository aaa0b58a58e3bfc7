#include "sgt/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "sgt/data.hpp"
#include "sgt/induce.hpp"
#include "sgt/model_io.hpp"
#include "sgt/parallel.hpp"
#include "sgt/refine.hpp"
#include "sgt/rng.hpp"
#include "sgt/verify.hpp"

namespace sgt {
namespace {

/// Verification harness reported a failed property.
struct VerifyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw DataError("cannot write " + path);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

bool is_number(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc{} && p == end && !s.empty();
}

FeatureSchema schema_for(const std::string& schema_path, const std::string& csv_text) {
  if (!schema_path.empty()) return FeatureSchema::load(schema_path);
  return FeatureSchema::parse(infer_schema_text(csv_text));
}

Dataset load_data(const std::string& path, const std::string& schema_path,
                  const std::string& task, bool standardize) {
  const std::string text = read_file(path);
  Dataset ds = parse_csv(text, schema_for(schema_path, text), parse_task(task));
  if (standardize) {
    if (ds.task != Task::regression) throw std::invalid_argument("--standardize needs a regression task");
    standardize_targets(ds);
  }
  return ds;
}

/// Reads a CSV whose target column may be missing (prediction input).
Dataset load_features(const std::string& path, const SgtModel& m) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::string header;
  while (std::getline(in, header) && split_line(header).empty()) {}
  if (split_line(header).size() != m.schema.size()) {
    return parse_csv(text, m.schema, m.task);
  }
  // No target column: append a placeholder so the regular reader applies.
  const std::string filler = m.task == Task::classification ? m.class_labels.front() : "0";
  std::string patched = header + ",target\n";
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    patched += line + "," + filler + "\n";
  }
  return parse_csv(patched, m.schema, m.task);
}

struct TrainOptions {
  std::string data, schema, out, task = "classification", variant = "sgt";
  std::string criterion;  // empty: gini or mse by task
  int max_depth = 6;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  double min_impurity_decrease = 0.0;
  int inner_max_leaf_nodes = 16;
  double inner_min_samples_leaf = 1.0;
  double branching_penalty = 0.0;
  double pairwise_penalty = 0.0;
  int pairwise_limit = -1;  // -1: variant default
  int h_directions = 8;
  int sweeps = 10;
  int kmeans_iters = 100;
  std::uint64_t seed = 0;
  int tao_passes = 0;
  double tao_reg = 0.0;
  int threads = 0;
  bool standardize = false;
};

void add_hyper_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--task", o.task, "classification or regression")
      ->check(CLI::IsMember({"classification", "regression"}))
      ->capture_default_str();
  cmd->add_option("--criterion", o.criterion, "gini, entropy or mse (default by task)");
  cmd->add_option("--min-samples-split", o.min_samples_split)->capture_default_str();
  cmd->add_option("--min-samples-leaf", o.min_samples_leaf)->capture_default_str();
  cmd->add_option("--min-impurity-decrease", o.min_impurity_decrease)->capture_default_str();
  cmd->add_option("--inner-max-leaf-nodes", o.inner_max_leaf_nodes, "bins per shape function (L)")
      ->capture_default_str();
  cmd->add_option("--inner-min-samples-leaf", o.inner_min_samples_leaf,
                  "absolute count, or a fraction of the node when < 1")
      ->capture_default_str();
  cmd->add_option("--branching-penalty", o.branching_penalty, "lambda, per branch beyond two")
      ->capture_default_str();
  cmd->add_option("--pairwise-penalty", o.pairwise_penalty, "gamma, added to bivariate splits")
      ->capture_default_str();
  cmd->add_option("--pairwise-limit", o.pairwise_limit,
                  "P, feature pairs fitted per node (default 5 for s2gt variants)");
  cmd->add_option("--h-directions", o.h_directions, "projection angles H for bivariate bins")
      ->capture_default_str();
  cmd->add_option("--sweeps", o.sweeps, "coordinate-descent sweeps R")->capture_default_str();
  cmd->add_option("--kmeans-iters", o.kmeans_iters, "k-means iterations T")->capture_default_str();
  cmd->add_option("--seed", o.seed)->capture_default_str();
  cmd->add_option("--tao-passes", o.tao_passes, "TAO refinement passes (0 disables)")
      ->capture_default_str();
  cmd->add_option("--tao-reg", o.tao_reg, "TAO penalty per leaf")->capture_default_str();
  cmd->add_option("--threads", o.threads, "worker threads (0: all cores)")->capture_default_str();
  cmd->add_flag("--standardize", o.standardize, "scale regression targets to zero mean, unit variance");
}

Hyperparams hyperparams_for(const TrainOptions& o, const std::string& variant, Task task) {
  Hyperparams hp;
  hp.max_depth = o.max_depth;
  hp.min_samples_split = o.min_samples_split;
  hp.min_samples_leaf = o.min_samples_leaf;
  hp.min_impurity_decrease = o.min_impurity_decrease;
  hp.criterion = o.criterion.empty()
                     ? (task == Task::classification ? Criterion::gini : Criterion::mse)
                     : parse_criterion(o.criterion);
  hp.inner_max_leaf_nodes = o.inner_max_leaf_nodes;
  hp.inner_min_samples_leaf = o.inner_min_samples_leaf;
  hp.branching_penalty = o.branching_penalty;
  hp.pairwise_penalty = o.pairwise_penalty;
  hp.directions = o.h_directions;
  hp.sweeps = o.sweeps;
  hp.kmeans_iters = o.kmeans_iters;
  hp.seed = o.seed;
  hp.threads = resolve_threads(o.threads);
  if (variant == "cart" || variant == "sgt") {
    hp.max_arity = 2;
    hp.pairwise_limit = 0;
  } else if (variant == "sgt3") {
    hp.max_arity = 3;
    hp.pairwise_limit = 0;
  } else if (variant == "s2gt" || variant == "s2gt3") {
    hp.max_arity = variant == "s2gt" ? 2 : 3;
    hp.pairwise_limit = o.pairwise_limit < 0 ? 5 : o.pairwise_limit;
    if (hp.pairwise_limit == 0) throw std::invalid_argument(variant + " needs --pairwise-limit > 0");
  } else {
    throw std::invalid_argument("unknown variant '" + variant + "'");
  }
  if (variant != "s2gt" && variant != "s2gt3" && o.pairwise_limit > 0) {
    throw std::invalid_argument("--pairwise-limit applies to the s2gt variants only");
  }
  hp.validate(task);
  return hp;
}

SgtModel train_model(const Dataset& ds, const TrainOptions& o, const std::string& variant) {
  const Hyperparams hp = hyperparams_for(o, variant, ds.task);
  SgtModel m = variant == "cart" ? fit_cart(ds, hp) : fit(ds, hp);
  if (o.tao_passes > 0) {
    TaoParams tp;
    tp.passes = o.tao_passes;
    tp.reg = o.tao_reg;
    tp.seed = o.seed;
    m = tao_refine(m, ds, tp, hp);
  }
  return m;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string eval_report(const SgtModel& m, const Dataset& ds) {
  const ModelStats s = stats(m);
  std::ostringstream out;
  const bool cls = m.task == Task::classification;
  const double score = cls ? accuracy(m, ds) : mean_squared_error(m, ds);
  out << (cls ? "accuracy " : "mse ") << fixed(score, cls ? 3 : 6) << " | internal "
      << s.internal << " | leaves " << s.leaves << " | depth " << s.depth << "\n";
  out << "task=" << to_string(m.task) << "\n";
  out << "samples=" << ds.rows() << "\n";
  out << (cls ? "accuracy=" : "mse=") << fixed(score, 6) << "\n";
  out << "internal_nodes=" << s.internal << "\n";
  out << "leaves=" << s.leaves << "\n";
  out << "depth=" << s.depth << "\n";
  out << "univariate_nodes=" << s.univariate << "\n";
  out << "bivariate_nodes=" << s.bivariate << "\n";
  out << "threshold_nodes=" << s.threshold << "\n";
  for (const auto& [arity, count] : s.arity_histogram) {
    out << "arity_" << arity << "=" << count << "\n";
  }
  out << "features_used=";
  for (std::size_t i = 0; i < s.features_used.size(); ++i) {
    out << (i ? "," : "") << m.schema[s.features_used[i]].name;
  }
  out << "\n";
  return out.str();
}

std::vector<int> parse_depths(const std::string& text) {
  std::vector<int> depths;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (lo < 1 || hi < lo) throw std::invalid_argument("bad depth range '" + text + "'");
    for (int d = lo; d <= hi; ++d) depths.push_back(d);
    return depths;
  }
  for (const auto& cell : split_line(text)) depths.push_back(std::stoi(cell));
  if (depths.empty()) throw std::invalid_argument("no depths given");
  return depths;
}

}  // namespace

std::string infer_schema_text(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) header = split_line(line);
  if (header.size() < 2) throw DataError("cannot infer a schema: need features and a target");
  const std::size_t d = header.size() - 1;
  std::vector<bool> numeric(d, true);
  std::vector<std::set<std::string>> levels(d);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    const auto cells = split_line(line);
    if (cells.empty() || (cells.size() == 1 && cells[0].empty())) continue;
    ++row;
    if (cells.size() != header.size()) {
      throw DataError("row has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()), row);
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (numeric[j] && !is_number(cells[j])) numeric[j] = false;
      levels[j].insert(cells[j]);
    }
  }
  std::string out;
  for (std::size_t j = 0; j < d; ++j) {
    out += header[j] + ",";
    if (numeric[j]) {
      out += "numeric\n";
      continue;
    }
    out += "categorical,";
    bool first = true;
    for (const auto& lv : levels[j]) {
      out += (first ? "" : "|") + lv;
      first = false;
    }
    out += "\n";
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shape generalized trees: train, inspect and verify"};
  app.name(args.empty() ? "sgt" : args[0]);
  app.require_subcommand(1);

  // train
  TrainOptions to;
  auto* train = app.add_subcommand("train", "fit a tree and write the model file");
  train->add_option("--data", to.data, "training CSV")->required();
  train->add_option("--schema", to.schema, "schema file (inferred from the CSV when omitted)");
  train->add_option("--variant", to.variant)
      ->check(CLI::IsMember({"cart", "sgt", "sgt3", "s2gt", "s2gt3"}))
      ->capture_default_str();
  train->add_option("--max-depth", to.max_depth)->capture_default_str();
  train->add_option("--out", to.out, "model file")->required();
  add_hyper_flags(train, to);

  // eval
  std::string eval_model, eval_data;
  bool eval_standardize = false;
  auto* eval = app.add_subcommand("eval", "score a model on a labelled CSV");
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_flag("--standardize", eval_standardize);

  // predict
  std::string pred_model, pred_data, pred_out;
  auto* predict_cmd = app.add_subcommand("predict", "write one prediction per row");
  predict_cmd->add_option("--model", pred_model)->required();
  predict_cmd->add_option("--data", pred_data)->required();
  predict_cmd->add_option("--out", pred_out, "output CSV (standard output when omitted)");

  // viz
  std::string viz_model, viz_out;
  auto* viz = app.add_subcommand("viz", "export the tree as Graphviz DOT");
  viz->add_option("--model", viz_model)->required();
  viz->add_option("--out", viz_out, "DOT file (standard output when omitted)");

  // convert
  std::string conv_model, conv_out;
  auto* convert = app.add_subcommand("convert", "turn a CART model into an equivalent SGT");
  convert->add_option("--cart-model", conv_model)->required();
  convert->add_option("--out", conv_out)->required();

  // synth
  std::string synth_kind = "plus", synth_out, synth_schema_out, synth_task = "classification";
  int synth_omega = 5;
  std::size_t synth_n = 441;
  double synth_noise = 0.1;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--kind", synth_kind)->check(CLI::IsMember({"plus", "bars"}))->capture_default_str();
  synth->add_option("--omega", synth_omega, "bars frequency")->capture_default_str();
  synth->add_option("--n", synth_n, "minimum number of rows")->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--task", synth_task, "bars only: regression gives cos targets")
      ->check(CLI::IsMember({"classification", "regression"}))
      ->capture_default_str();
  synth->add_option("--noise", synth_noise, "regression noise standard deviation")->capture_default_str();
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--schema-out", synth_schema_out, "also write the schema file");

  // verify
  std::string suite;
  std::size_t verify_trials = 200;
  std::uint64_t verify_seed = 0;
  bool assert_timing = false;
  auto* verify = app.add_subcommand("verify", "run a verification harness");
  verify->add_option("--suite", suite)
      ->check(CLI::IsMember({"lemma1", "theorem2", "oracle", "complexity"}))
      ->required();
  verify->add_option("--trials", verify_trials)->capture_default_str();
  verify->add_option("--seed", verify_seed)->capture_default_str();
  verify->add_flag("--assert-timing", assert_timing, "fail when complexity ratios exceed 2.5");

  // bench
  TrainOptions bo;
  std::string depths_text = "2..6", variants_text = "cart,sgt";
  double test_fraction = 0.0;
  auto* bench = app.add_subcommand("bench", "accuracy per depth and variant");
  bench->add_option("--data", bo.data)->required();
  bench->add_option("--schema", bo.schema);
  bench->add_option("--depths", depths_text, "range lo..hi or a comma list")->capture_default_str();
  bench->add_option("--variants", variants_text)->capture_default_str();
  bench->add_option("--test-fraction", test_fraction, "held-out share; 0 scores the training data")
      ->capture_default_str();
  add_hyper_flags(bench, bo);

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*train) {
      const Dataset ds = load_data(to.data, to.schema, to.task, to.standardize);
      const SgtModel m = train_model(ds, to, to.variant);
      save_model(m, to.out);
      const ModelStats s = stats(m);
      out << "trained " << to.variant << ": internal " << s.internal << ", leaves " << s.leaves
          << ", depth " << s.depth << "\n";
    } else if (*eval) {
      const SgtModel m = load_model(eval_model);
      Dataset ds = parse_csv(read_file(eval_data), m.schema, m.task);
      if (eval_standardize) standardize_targets(ds);
      out << eval_report(m, ds);
    } else if (*predict_cmd) {
      const SgtModel m = load_model(pred_model);
      const Dataset ds = load_features(pred_data, m);
      std::string text = "prediction\n";
      for (double p : m.predict(ds)) {
        text += m.task == Task::classification
                    ? m.class_labels[static_cast<std::size_t>(p)]
                    : exact_text(p);
        text += "\n";
      }
      write_output(pred_out, text, out);
    } else if (*viz) {
      write_output(viz_out, to_dot(load_model(viz_model)), out);
    } else if (*convert) {
      const SgtModel m = load_model(conv_model);
      for (const auto& n : m.nodes) {
        if (n.split && !std::holds_alternative<ThresholdRule>(*n.split)) {
          throw std::invalid_argument("convert expects a CART model");
        }
      }
      save_model(from_cart(m), conv_out);
    } else if (*synth) {
      Dataset ds;
      if (synth_kind == "plus") {
        if (synth_task != "classification") throw std::invalid_argument("plus data is classification only");
        std::size_t per = 1;
        while (9 * per * per < synth_n) ++per;
        ds = gen_plus_sign(per, synth_seed);
      } else if (synth_task == "regression") {
        ds = gen_bars_regression(synth_omega, synth_n, synth_noise, synth_seed);
      } else {
        ds = gen_bars(synth_omega, synth_n, synth_seed);
      }
      save_csv(ds, synth_out);
      if (!synth_schema_out.empty()) write_output(synth_schema_out, ds.schema.to_text(), out);
      out << "wrote " << ds.rows() << " rows to " << synth_out << "\n";
    } else if (*verify) {
      bool ok = true;
      if (suite == "lemma1") {
        double worst = 0.0;
        for (int c : {2, 3}) {
          for (Criterion crit : {Criterion::gini, Criterion::entropy}) {
            Lemma1Spec spec;
            spec.classes = c;
            spec.criterion = crit;
            const auto r = lemma1_harness(verify_trials, spec, verify_seed);
            out << "classes=" << c << " criterion=" << to_string(crit) << " " << to_string(r) << "\n";
            worst = std::max(worst, r.max_violation);
          }
        }
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1e", worst);
        out << "max violation " << buf << "\n";
        ok = worst <= 1e-9;
      } else if (suite == "theorem2") {
        for (int omega : {1, 3, 5, 8}) {
          Hyperparams hp;
          hp.seed = verify_seed;
          const auto r = theorem2_gap(omega, hp);
          out << "omega=" << omega << " " << to_string(r) << "\n";
          ok = ok && r.sgt_nodes == 1 && r.cart_nodes >= static_cast<std::size_t>(omega + 1) &&
               r.sgt_accuracy == 1.0 && r.cart_accuracy == 1.0;
        }
      } else if (suite == "oracle") {
        const auto r = assignment_oracle(verify_trials, verify_seed);
        out << to_string(r) << "\n";
        ok = r.not_local_optimum == 0 && r.worse_than_init == 0 &&
             r.global_matches * 10 >= r.trials * 9;
      } else {
        const auto r = complexity_smoke(10000, 10, 2.0, 5, verify_seed);
        out << to_string(r) << "\n";
        if (assert_timing) ok = r.n_ratio <= 2.5 && r.d_ratio <= 2.5;
      }
      out << (ok ? "PASS" : "FAIL") << "\n";
      if (!ok) throw VerifyFailure("verification failed: " + suite);
    } else if (*bench) {
      const Dataset ds = load_data(bo.data, bo.schema, bo.task, bo.standardize);
      Dataset train_set = ds;
      Dataset test_set;
      if (test_fraction > 0.0) {
        const std::size_t n = ds.rows();
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
        if (n_test == 0 || n_test >= n) throw std::invalid_argument("--test-fraction leaves an empty side");
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        Rng rng(bo.seed);
        rng.shuffle(std::span<std::size_t>(order));
        std::vector<std::size_t> test_idx(order.begin(), order.begin() + n_test);
        std::vector<std::size_t> train_idx(order.begin() + n_test, order.end());
        std::sort(test_idx.begin(), test_idx.end());
        std::sort(train_idx.begin(), train_idx.end());
        train_set = ds.subset(train_idx);
        test_set = ds.subset(test_idx);
      }
      std::vector<std::string> variants = split_line(variants_text);
      const bool cls = ds.task == Task::classification;
      out << "depth,variant," << (cls ? "train_accuracy" : "train_mse")
          << (test_fraction > 0 ? (cls ? ",test_accuracy" : ",test_mse") : "")
          << ",internal,leaves\n";
      for (int depth : parse_depths(depths_text)) {
        for (const auto& v : variants) {
          TrainOptions o = bo;
          o.max_depth = depth;
          const SgtModel m = train_model(train_set, o, v);
          auto score = [&](const Dataset& d) {
            return cls ? accuracy(m, d) : mean_squared_error(m, d);
          };
          const ModelStats s = stats(m);
          out << depth << "," << v << "," << fixed(score(train_set), 6);
          if (test_fraction > 0) out << "," << fixed(score(test_set), 6);
          out << "," << s.internal << "," << s.leaves << "\n";
        }
      }
    }
  } catch (const VerifyFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitVerify;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const ModelFormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace sgt
