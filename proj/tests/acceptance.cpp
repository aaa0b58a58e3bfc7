// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1). Timing criteria are reported but
// only asserted with --assert-timing or SGT_ASSERT_TIMING=1.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "sgt/cli.hpp"
#include "sgt/model_io.hpp"
#include "sgt/refine.hpp"
#include "sgt/verify.hpp"

using namespace sgt;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Every model fitted below, with the data it was fitted on, for A9.
std::vector<std::pair<SgtModel, Dataset>> g_fitted;

void keep(const SgtModel& m, const Dataset& ds) { g_fitted.emplace_back(m, ds); }

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "sgt");
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "  sgt %s: %s", args[1].c_str(), e.str().c_str());
  return code;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::filesystem::path& workdir() {
  static const auto dir = testing::temp_dir("acceptance");
  return dir;
}

// Accuracy and internal-node count of a model file on a CSV, via the CLI.
std::pair<double, int> cli_eval(const std::string& model, const std::string& data) {
  std::string out;
  if (cli({"eval", "--model", model, "--data", data}, &out) != 0) return {-1.0, -1};
  double acc = -1.0;
  int internal = -1;
  std::sscanf(out.c_str(), "accuracy %lf | internal %d", &acc, &internal);
  return {acc, internal};
}

Outcome a1() {
  const auto t0 = Clock::now();
  const std::string data = (workdir() / "plus.csv").string();
  if (cli({"synth", "--kind", "plus", "--n", "441", "--seed", "0", "--out", data}) != 0) {
    return {false, "synth failed"};
  }
  auto train = [&](const std::string& variant, int depth) {
    const std::string model = (workdir() / (variant + std::to_string(depth) + ".json")).string();
    if (cli({"train", "--data", data, "--variant", variant, "--max-depth", std::to_string(depth),
             "--out", model}) != 0) {
      return std::pair<double, int>{-1.0, -1};
    }
    return cli_eval(model, data);
  };
  const auto sgt = train("sgt", 2);
  const auto cart4 = train("cart", 4);
  bool shallow_fails = true;
  std::string shallow;
  for (int d = 1; d <= 3; ++d) {
    const auto c = train("cart", d);
    shallow_fails = shallow_fails && c.first >= 0.0 && c.first < 1.0;
    shallow += fmt(" %.3f", c.first);
  }
  const double elapsed = seconds_since(t0);
  const bool ok = sgt.first == 1.0 && sgt.second == 2 && cart4.first == 1.0 && cart4.second >= 6 &&
                  shallow_fails && elapsed < 2.0;
  for (const char* f : {"sgt2.json", "cart4.json"}) {
    const Dataset ds = load_csv(data, load_model(workdir() / f).schema, Task::classification);
    keep(load_model(workdir() / f), ds);
  }
  return {ok, "sgt d2 acc " + fmt("%.3f", sgt.first) + " internal " + std::to_string(sgt.second) +
                  "; cart d4 acc " + fmt("%.3f", cart4.first) + " internal " +
                  std::to_string(cart4.second) + "; cart d1-3 acc" + shallow + "; " +
                  fmt("%.2fs", elapsed)};
}

Outcome a2() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (int omega : {1, 3, 5, 8}) {
    const Theorem2Result r = theorem2_gap(omega, Hyperparams{});
    ok = ok && r.sgt_nodes == 1 && r.cart_nodes >= static_cast<std::size_t>(omega + 1) &&
         r.sgt_accuracy == 1.0 && r.cart_accuracy == 1.0;
    detail += "w=" + std::to_string(omega) + ":" + std::to_string(r.sgt_nodes) + "/" +
              std::to_string(r.cart_nodes) + " ";
  }
  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 5.0;
  return {ok, detail + "(sgt/cart nodes); " + fmt("%.2fs", elapsed)};
}

Outcome a3() {
  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = testing::random_dataset(300, 2, 2 + static_cast<int>(seed % 3), seed);
    Hyperparams hp;
    hp.max_depth = 8;
    const SgtModel cart = fit_cart(ds, hp);
    const SgtModel conv = from_cart(cart);
    keep(cart, ds);
    keep(conv, ds);
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        const double row[] = {-0.05 + i * 0.011, -0.05 + j * 0.011};
        mismatches += conv.predict(row) != cart.predict(row);
      }
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches on 20 x 10^4 grid points"};
}

Outcome a4() {
  double worst = 0.0;
  for (int classes : {2, 3}) {
    for (Criterion c : {Criterion::gini, Criterion::entropy}) {
      Lemma1Spec spec;
      spec.classes = classes;
      spec.criterion = c;
      worst = std::max(worst, lemma1_harness(200, spec, 1).max_violation);
    }
  }
  return {worst <= 1e-9, "max violation " + fmt("%.1e", worst) + " over 4 x 200 trials"};
}

Outcome a5() {
  const AssignmentOracleReport r = assignment_oracle(200, 5);
  const bool ok = r.not_local_optimum == 0 && r.worse_than_init == 0 &&
                  r.global_matches * 10 >= r.trials * 9;
  return {ok, to_string(r)};
}

Outcome a6() {
  const Dataset ds = testing::xor_dataset(1000, 3);
  testing::FullView v(ds);
  const SplitParams sp = Hyperparams{}.split_params();

  // Pairwise scores for every pair, from each feature's own best shape fit.
  std::vector<ShapeFit> fits;
  for (std::size_t g = 0; g < 3; ++g) fits.push_back(*fit_shape_function(v.samples, {g, std::nullopt}, sp, 0));
  std::map<std::pair<int, int>, double> delta;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      delta[{a, b}] = score_pair(fits[a].sample_branch, fits[a].fn.arity, fits[b].sample_branch,
                                 fits[b].fn.arity, v.samples, Criterion::gini);
    }
  }
  bool true_pair_max = true;
  for (const auto& [pair, d] : delta) {
    if (pair != std::pair{0, 1}) true_pair_max = true_pair_max && delta[{0, 1}] > d;
  }

  const double uni_objective = select_split(v.samples, sp, 0).unpenalized;
  const std::string data = (workdir() / "xor.csv").string();
  save_csv(ds, data);
  auto train = [&](const std::string& variant, const std::vector<std::string>& extra) {
    const std::string model = (workdir() / ("xor_" + variant + ".json")).string();
    std::vector<std::string> args = {"train", "--data", data, "--variant", variant, "--max-depth", "1", "--out", model};
    args.insert(args.end(), extra.begin(), extra.end());
    if (cli(args) != 0) return -1.0;
    keep(load_model(model), ds);
    return cli_eval(model, data).first;
  };
  const double bi = train("s2gt", {"--pairwise-penalty", fmt("%.6f", 0.5 * uni_objective)});
  double worst_uni = 0.0;
  for (const char* v2 : {"cart", "sgt", "sgt3"}) worst_uni = std::max(worst_uni, train(v2, {}));
  const bool ok = true_pair_max && bi >= 0.99 && worst_uni <= 0.80;
  std::string d;
  for (const auto& [pair, s] : delta) d += fmt("%.2f ", s);
  return {ok, "delta (01 02 12) " + d + "; s2gt d1 acc " + fmt("%.3f", bi) +
                  "; best univariate d1 acc " + fmt("%.3f", worst_uni)};
}

Outcome a7() {
  bool monotone = true;
  std::size_t runs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = testing::random_dataset(200, 3, 2 + static_cast<int>(seed % 2), 100 + seed);
    Hyperparams hp;
    hp.max_depth = 5;
    hp.max_arity = seed % 3 == 0 ? 3 : 2;
    hp.seed = seed;
    const SgtModel m = fit(ds, hp);
    for (double reg : {0.0, 1e-3}) {
      TaoParams tp;
      tp.reg = reg;
      TaoTrace trace;
      const SgtModel r = tao_refine(m, ds, tp, hp, &trace);
      keep(r, ds);
      ++runs;
      for (std::size_t i = 1; i < trace.objective.size(); ++i) {
        monotone = monotone && trace.objective[i] <= trace.objective[i - 1];
      }
    }
  }
  // Redundant fixture: an extra cut whose two leaves agree.
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    x.push_back((i + 0.5) / 40.0);
    y.push_back(x.back() > 0.5 ? 1 : 0);
  }
  const Dataset step = testing::numeric_dataset({x}, y);
  SgtModel fixture;
  fixture.schema = step.schema;
  fixture.class_labels = step.class_labels;
  auto node = [](int depth, std::optional<double> cut, std::vector<int> children) {
    TreeNode n;
    n.depth = depth;
    if (cut) n.split = ThresholdRule{0, *cut};
    n.children = std::move(children);
    return n;
  };
  fixture.nodes = {node(0, 0.5, {1, 2}), node(1, {}, {}), node(1, 0.75, {3, 4}), node(2, {}, {}),
                   node(2, {}, {})};
  refresh_node_stats(fixture, one_hot_view(step), step.targets);
  TaoParams big;
  big.reg = 0.5;
  const SgtModel pruned = tao_refine(fixture, step, big, Hyperparams{});
  keep(pruned, step);
  const std::size_t before = stats(fixture).leaves, after = stats(pruned).leaves;
  return {monotone && after < before,
          std::to_string(runs) + " runs non-increasing: " + (monotone ? "yes" : "no") +
              "; fixture leaves " + std::to_string(before) + " -> " + std::to_string(after)};
}

Outcome a8() {
  double worst = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset ds = gen_bars_regression(3, 300, 0.1, seed);
    Hyperparams hp;
    hp.max_depth = 1;
    hp.criterion = Criterion::mse;
    hp.seed = seed;
    const SgtModel s = fit(ds, hp);
    const SgtModel c = fit_cart(ds, hp);
    keep(s, ds);
    const double gap = sum_squared_error(s, ds) - sum_squared_error(c, ds);
    worst = std::max(worst, gap);
    ok = ok && gap <= 1e-9;
  }
  return {ok, "max (sgt - cart) SSE " + fmt("%.3g", worst) + " over 50 seeds"};
}

Outcome a9() {
  std::size_t mismatches = 0;
  for (const auto& [m, ds] : g_fitted) {
    const SgtModel back = deserialize(serialize(m));
    const auto a = m.predict(ds);
    const auto b = back.predict(ds);
    mismatches += a != b;
  }
  return {mismatches == 0 && !g_fitted.empty(),
          std::to_string(g_fitted.size()) + " models, " + std::to_string(mismatches) + " differ"};
}

Outcome a10() {
  const std::string plus = (workdir() / "bench_plus.csv").string();
  const std::string bars = (workdir() / "bench_bars.csv").string();
  if (cli({"synth", "--kind", "plus", "--n", "441", "--seed", "2", "--out", plus}) != 0 ||
      cli({"synth", "--kind", "bars", "--omega", "5", "--n", "400", "--seed", "2", "--out", bars}) != 0) {
    return {false, "synth failed"};
  }
  bool ok = true;
  std::string detail;
  for (const auto& data : {plus, bars}) {
    std::string out;
    if (cli({"bench", "--data", data, "--depths", "2..6", "--variants", "cart,sgt"}, &out) != 0) {
      return {false, "bench failed"};
    }
    std::map<int, std::map<std::string, double>> acc;
    std::istringstream in(out);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      int depth = 0;
      char variant[16] = {};
      double a = 0.0;
      if (std::sscanf(line.c_str(), "%d,%15[^,],%lf", &depth, variant, &a) == 3) acc[depth][variant] = a;
    }
    ok = ok && acc.size() == 5;
    for (const auto& [depth, row] : acc) {
      ok = ok && row.count("sgt") && row.count("cart") && row.at("sgt") >= row.at("cart");
    }
    detail += std::filesystem::path(data).stem().string() + " sgt-cart at d2: " +
              fmt("%+.3f", acc[2]["sgt"] - acc[2]["cart"]) + "; ";
  }
  return {ok, detail + "depths 2-6 train accuracy"};
}

Outcome a11(bool assert_timing) {
  const ComplexityReport r = complexity_smoke(10000, 10, 2.0, 5, 0);
  const bool within = r.n_ratio <= 2.5 && r.d_ratio <= 2.5;
  return {within || !assert_timing,
          to_string(r) + (assert_timing ? "" : " (report-only") +
              (assert_timing ? "" : std::string(within ? ", within 2.5)" : ", above 2.5)"))};
}

}  // namespace

int main(int argc, char** argv) {
  bool assert_timing = false;
  if (const char* env = std::getenv("SGT_ASSERT_TIMING")) assert_timing = std::string(env) == "1";
  for (int i = 1; i < argc; ++i) assert_timing = assert_timing || std::string(argv[i]) == "--assert-timing";

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5}, {"A6", a6},
      {"A7", a7}, {"A8", a8}, {"A9", a9}, {"A10", a10},
      {"A11", [&] { return a11(assert_timing); }},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%-4s %s  %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
