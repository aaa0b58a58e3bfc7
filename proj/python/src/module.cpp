#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>
#include <sstream>

#include "sgt/cli.hpp"
#include "sgt/model_io.hpp"
#include "sgt/refine.hpp"
#include "sgt/verify.hpp"

namespace py = pybind11;
using namespace sgt;

namespace {

// Rows-major input, as numpy and plain lists hand it over.
Dataset from_rows(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                  const std::string& task, std::vector<std::string> names) {
  Dataset ds;
  ds.task = parse_task(task);
  const std::size_t d = X.empty() ? names.size() : X[0].size();
  if (names.empty()) {
    for (std::size_t j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  }
  if (names.size() != d) throw std::invalid_argument("feature_names length does not match X");
  std::vector<FeatureSpec> specs;
  for (auto& n : names) specs.push_back({n, FeatureKind::numeric, {}});
  ds.schema = FeatureSchema(std::move(specs));
  ds.columns.assign(d, std::vector<double>(X.size()));
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (X[i].size() != d) throw std::invalid_argument("ragged X");
    for (std::size_t j = 0; j < d; ++j) ds.columns[j][i] = X[i][j];
  }
  if (y.size() != X.size()) throw std::invalid_argument("X and y differ in length");
  if (ds.task == Task::classification) {
    // Class ids are the sorted distinct labels.
    std::vector<double> levels(y);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double v : levels) {
      std::ostringstream s;
      s << v;
      ds.class_labels.push_back(s.str());
    }
    for (double v : y) {
      ds.targets.push_back(static_cast<double>(std::lower_bound(levels.begin(), levels.end(), v) - levels.begin()));
    }
  } else {
    ds.targets = y;
  }
  ds.validate();
  return ds;
}

Dataset read_csv(const std::filesystem::path& path, const std::optional<std::filesystem::path>& schema,
                 const std::string& task) {
  if (schema) return load_csv(path, FeatureSchema::load(*schema), parse_task(task));
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_csv(text.str(), FeatureSchema::parse(infer_schema_text(text.str())), parse_task(task));
}

py::dict stats_dict(const SgtModel& m) {
  const ModelStats s = stats(m);
  py::dict d;
  d["internal"] = s.internal;
  d["leaves"] = s.leaves;
  d["depth"] = s.depth;
  d["arity_histogram"] = s.arity_histogram;
  d["features_used"] = s.features_used;
  d["univariate"] = s.univariate;
  d["bivariate"] = s.bivariate;
  d["threshold"] = s.threshold;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shape generalized trees";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ModelFormatError>(m, "ModelFormatError", PyExc_ValueError);

  py::class_<Dataset>(m, "Dataset")
      .def_static("from_arrays", &from_rows, py::arg("X"), py::arg("y"),
                  py::arg("task") = "classification",
                  py::arg("feature_names") = std::vector<std::string>{})
      .def_static("from_csv", &read_csv, py::arg("path"), py::arg("schema") = py::none(),
                  py::arg("task") = "classification")
      .def("to_csv", [](const Dataset& ds) { return to_csv(ds); })
      .def_property_readonly("rows", &Dataset::rows)
      .def_property_readonly("features", &Dataset::features)
      .def_property_readonly("feature_names", [](const Dataset& ds) {
        std::vector<std::string> names;
        for (const auto& f : ds.schema.features()) names.push_back(f.name);
        return names;
      })
      .def_readonly("targets", &Dataset::targets)
      .def_readonly("class_labels", &Dataset::class_labels)
      .def("row", &Dataset::row)
      .def("__len__", &Dataset::rows);

  py::class_<Hyperparams>(m, "Hyperparams")
      .def(py::init<>())
      .def_readwrite("max_arity", &Hyperparams::max_arity)
      .def_readwrite("max_depth", &Hyperparams::max_depth)
      .def_readwrite("min_impurity_decrease", &Hyperparams::min_impurity_decrease)
      .def_readwrite("min_samples_split", &Hyperparams::min_samples_split)
      .def_readwrite("min_samples_leaf", &Hyperparams::min_samples_leaf)
      .def_property(
          "criterion", [](const Hyperparams& h) { return to_string(h.criterion); },
          [](Hyperparams& h, const std::string& c) { h.criterion = parse_criterion(c); })
      .def_readwrite("inner_max_leaf_nodes", &Hyperparams::inner_max_leaf_nodes)
      .def_readwrite("inner_min_samples_leaf", &Hyperparams::inner_min_samples_leaf)
      .def_readwrite("branching_penalty", &Hyperparams::branching_penalty)
      .def_readwrite("pairwise_penalty", &Hyperparams::pairwise_penalty)
      .def_readwrite("pairwise_limit", &Hyperparams::pairwise_limit)
      .def_readwrite("sweeps", &Hyperparams::sweeps)
      .def_readwrite("kmeans_iters", &Hyperparams::kmeans_iters)
      .def_readwrite("directions", &Hyperparams::directions)
      .def_readwrite("seed", &Hyperparams::seed)
      .def_readwrite("max_internal_nodes", &Hyperparams::max_internal_nodes)
      .def_readwrite("threads", &Hyperparams::threads);

  py::class_<SgtModel>(m, "Model")
      .def("predict", py::overload_cast<const Dataset&>(&SgtModel::predict, py::const_))
      .def("predict_row", [](const SgtModel& self, const std::vector<double>& row) {
        return self.predict(row);
      })
      .def("predict_proba", [](const SgtModel& self, const std::vector<double>& row) {
        return self.predict_proba(row);
      })
      .def("accuracy", [](const SgtModel& self, const Dataset& ds) { return accuracy(self, ds); })
      .def("mse", [](const SgtModel& self, const Dataset& ds) { return mean_squared_error(self, ds); })
      .def("stats", &stats_dict)
      .def("to_dot", [](const SgtModel& self) { return to_dot(self); })
      .def("to_json", [](const SgtModel& self) { return serialize(self); })
      .def_static("from_json", &deserialize)
      .def("save", [](const SgtModel& self, const std::filesystem::path& p) { save_model(self, p); })
      .def_static("load", &load_model)
      .def_readonly("class_labels", &SgtModel::class_labels);

  m.def("fit", &fit, py::arg("data"), py::arg("params") = Hyperparams{},
        py::call_guard<py::gil_scoped_release>());
  m.def("fit_cart", &fit_cart, py::arg("data"), py::arg("params") = Hyperparams{},
        py::call_guard<py::gil_scoped_release>());
  m.def("from_cart", &from_cart);
  m.def(
      "tao_refine",
      [](const SgtModel& model, const Dataset& data, int passes, double reg, const Hyperparams& hp) {
        TaoParams tp;
        tp.passes = passes;
        tp.reg = reg;
        TaoTrace trace;
        SgtModel out = tao_refine(model, data, tp, hp, &trace);
        return py::make_tuple(std::move(out), trace.objective);
      },
      py::arg("model"), py::arg("data"), py::arg("passes") = 5, py::arg("reg") = 0.0,
      py::arg("params") = Hyperparams{});

  m.def("gen_plus_sign", &gen_plus_sign, py::arg("n_per_arm"), py::arg("seed") = 0);
  m.def("gen_bars", &gen_bars, py::arg("omega"), py::arg("n"), py::arg("seed") = 0);
  m.def("gen_bars_regression", &gen_bars_regression, py::arg("omega"), py::arg("n"),
        py::arg("noise") = 0.1, py::arg("seed") = 0);

  m.def(
      "theorem2_gap",
      [](int omega) {
        const Theorem2Result r = theorem2_gap(omega, Hyperparams{});
        return py::dict(py::arg("sgt_nodes") = r.sgt_nodes, py::arg("cart_nodes") = r.cart_nodes,
                        py::arg("sgt_accuracy") = r.sgt_accuracy,
                        py::arg("cart_accuracy") = r.cart_accuracy);
      },
      py::arg("omega"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "sgt");
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
