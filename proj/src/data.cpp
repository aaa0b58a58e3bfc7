#include "sgt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "sgt/rng.hpp"

namespace sgt {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      break;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size() &&
         std::isfinite(out);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string to_string(Task task) {
  return task == Task::classification ? "classification" : "regression";
}

Task parse_task(const std::string& text) {
  if (text == "classification") return Task::classification;
  if (text == "regression") return Task::regression;
  throw DataError("unknown task '" + text + "'");
}

DataError::DataError(const std::string& what, std::size_t row,
                     std::string column)
    : std::runtime_error(what), row_(row), column_(std::move(column)) {}

std::size_t FeatureSpec::level_index(const std::string& level) const {
  const auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) {
    throw DataError("unknown level '" + level + "' for feature '" + name + "'");
  }
  return static_cast<std::size_t>(it - levels.begin());
}

FeatureSchema::FeatureSchema(std::vector<FeatureSpec> features)
    : features_(std::move(features)) {
  validate();
}

void FeatureSchema::validate() const {
  std::set<std::string> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw DataError("schema: empty feature name");
    if (!names.insert(f.name).second) {
      throw DataError("schema: duplicate feature name '" + f.name + "'");
    }
    if (f.kind == FeatureKind::categorical) {
      if (f.levels.empty()) {
        throw DataError("schema: categorical feature '" + f.name +
                        "' has no levels");
      }
      std::set<std::string> lv(f.levels.begin(), f.levels.end());
      if (lv.size() != f.levels.size()) {
        throw DataError("schema: duplicate level in feature '" + f.name + "'");
      }
    }
  }
}

FeatureSchema FeatureSchema::parse(const std::string& text) {
  std::vector<FeatureSpec> features;
  for (const auto& raw : lines_of(text)) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto parts = split_on(line, ',');
    if (parts.size() < 2) throw DataError("schema: malformed line '" + line + "'");
    FeatureSpec spec;
    spec.name = parts[0];
    if (parts[1] == "numeric") {
      spec.kind = FeatureKind::numeric;
      if (parts.size() != 2) {
        throw DataError("schema: numeric feature '" + spec.name +
                        "' cannot list levels");
      }
    } else if (parts[1] == "categorical") {
      spec.kind = FeatureKind::categorical;
      if (parts.size() != 3) {
        throw DataError("schema: categorical feature '" + spec.name +
                        "' needs a level list");
      }
      spec.levels = split_on(parts[2], '|');
    } else {
      throw DataError("schema: unknown kind '" + parts[1] + "'");
    }
    features.push_back(std::move(spec));
  }
  return FeatureSchema(std::move(features));
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::string FeatureSchema::to_text() const {
  std::string out;
  for (const auto& f : features_) {
    out += f.name;
    if (f.kind == FeatureKind::numeric) {
      out += ",numeric\n";
    } else {
      out += ",categorical,";
      for (std::size_t i = 0; i < f.levels.size(); ++i) {
        if (i) out += '|';
        out += f.levels[i];
      }
      out += '\n';
    }
  }
  return out;
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  throw DataError("schema has no feature '" + name + "'");
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::vector<double> out(columns.size());
  for (std::size_t d = 0; d < columns.size(); ++d) out[d] = columns[d][i];
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.schema = schema;
  out.task = task;
  out.class_labels = class_labels;
  out.columns.resize(columns.size());
  for (std::size_t d = 0; d < columns.size(); ++d) {
    out.columns[d].reserve(indices.size());
    for (auto i : indices) out.columns[d].push_back(columns[d][i]);
  }
  out.targets.reserve(indices.size());
  for (auto i : indices) out.targets.push_back(targets[i]);
  return out;
}

void Dataset::validate() const {
  if (rows() == 0) throw DataError("empty dataset");
  if (columns.size() != schema.size()) {
    throw DataError("dataset column count does not match schema");
  }
  for (std::size_t d = 0; d < columns.size(); ++d) {
    if (columns[d].size() != rows()) {
      throw DataError("ragged column '" + schema[d].name + "'");
    }
    const auto& spec = schema[d];
    for (std::size_t i = 0; i < rows(); ++i) {
      const double v = columns[d][i];
      if (!std::isfinite(v)) {
        throw DataError("non-finite value", i + 1, spec.name);
      }
      if (spec.kind == FeatureKind::categorical &&
          (v < 0 || v >= static_cast<double>(spec.levels.size()) ||
           v != std::floor(v))) {
        throw DataError("invalid level index", i + 1, spec.name);
      }
    }
  }
  if (task == Task::classification) {
    if (class_labels.empty()) throw DataError("classification without labels");
    for (std::size_t i = 0; i < rows(); ++i) {
      const double t = targets[i];
      if (t < 0 || t >= num_classes() || t != std::floor(t)) {
        throw DataError("class id out of range", i + 1, "target");
      }
    }
  }
}

Dataset parse_csv(const std::string& text, const FeatureSchema& schema,
                  Task task) {
  const auto lines = lines_of(text);
  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) {
    ++header_line;
  }
  if (header_line == lines.size()) throw DataError("empty file");
  const auto header = split_on(lines[header_line], ',');
  if (header.size() != schema.size() + 1) {
    throw DataError("header has " + std::to_string(header.size()) +
                    " columns, schema expects " +
                    std::to_string(schema.size()) + " features + target");
  }
  for (std::size_t d = 0; d < schema.size(); ++d) {
    if (header[d] != schema[d].name) {
      throw DataError("header column '" + header[d] + "' does not match schema '" +
                      schema[d].name + "'");
    }
  }
  const std::string target_name = header.back();

  Dataset ds;
  ds.schema = schema;
  ds.task = task;
  ds.columns.resize(schema.size());
  std::vector<std::string> raw_labels;

  std::size_t row = 0;
  for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    ++row;
    const auto cells = split_on(lines[li], ',');
    if (cells.size() != schema.size() + 1) {
      throw DataError("expected " + std::to_string(schema.size() + 1) +
                          " cells, found " + std::to_string(cells.size()),
                      row);
    }
    for (std::size_t d = 0; d < schema.size(); ++d) {
      const auto& spec = schema[d];
      const auto& cell = cells[d];
      if (cell.empty()) throw DataError("missing value", row, spec.name);
      if (spec.kind == FeatureKind::numeric) {
        double v = 0;
        if (!parse_double(cell, v)) {
          throw DataError("non-numeric cell '" + cell + "'", row, spec.name);
        }
        ds.columns[d].push_back(v);
      } else {
        const auto it = std::find(spec.levels.begin(), spec.levels.end(), cell);
        if (it == spec.levels.end()) {
          throw DataError("unknown categorical level '" + cell + "'", row,
                          spec.name);
        }
        ds.columns[d].push_back(static_cast<double>(it - spec.levels.begin()));
      }
    }
    const auto& target = cells.back();
    if (target.empty()) throw DataError("missing target", row, target_name);
    if (task == Task::regression) {
      double v = 0;
      if (!parse_double(target, v)) {
        throw DataError("non-numeric target '" + target + "'", row, target_name);
      }
      ds.targets.push_back(v);
    } else {
      raw_labels.push_back(target);
    }
  }
  if (row == 0) throw DataError("empty dataset");

  if (task == Task::classification) {
    std::vector<std::string> labels(raw_labels.begin(), raw_labels.end());
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    const bool numeric = std::all_of(labels.begin(), labels.end(), [](auto& s) {
      double v;
      return parse_double(s, v);
    });
    if (numeric) {
      std::stable_sort(labels.begin(), labels.end(), [](auto& a, auto& b) {
        double x = 0, y = 0;
        parse_double(a, x);
        parse_double(b, y);
        return x < y;
      });
    }
    std::map<std::string, int> ids;
    for (std::size_t c = 0; c < labels.size(); ++c) {
      ids[labels[c]] = static_cast<int>(c);
    }
    ds.class_labels = labels;
    for (const auto& l : raw_labels) ds.targets.push_back(ids.at(l));
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                 Task task) {
  return parse_csv(read_file(path), schema, task);
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  for (std::size_t d = 0; d < ds.features(); ++d) {
    out += ds.schema[d].name;
    out += ',';
  }
  out += "target\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (std::size_t d = 0; d < ds.features(); ++d) {
      const auto& spec = ds.schema[d];
      const double v = ds.columns[d][i];
      if (spec.kind == FeatureKind::numeric) {
        out += format_number(v);
      } else {
        out += spec.levels[static_cast<std::size_t>(v)];
      }
      out += ',';
    }
    if (ds.task == Task::classification) {
      out += ds.class_labels[static_cast<std::size_t>(ds.targets[i])];
    } else {
      out += format_number(ds.targets[i]);
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file '" + path.string() + "'");
  out << to_csv(ds);
}

std::size_t EncodedMatrix::group_of_column(std::size_t col) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& grp = groups[g];
    if (col >= grp.first_column && col < grp.first_column + grp.width) return g;
  }
  throw std::out_of_range("encoded column out of range");
}

std::vector<FeatureGroup> encoding_groups(const FeatureSchema& schema) {
  std::vector<FeatureGroup> groups;
  std::size_t col = 0;
  for (std::size_t d = 0; d < schema.size(); ++d) {
    FeatureGroup g;
    g.feature = d;
    g.first_column = col;
    g.kind = schema[d].kind;
    g.width = g.kind == FeatureKind::numeric ? 1 : schema[d].levels.size();
    col += g.width;
    groups.push_back(g);
  }
  return groups;
}

EncodedMatrix one_hot_view(const Dataset& ds) {
  EncodedMatrix m;
  m.rows = ds.rows();
  m.groups = encoding_groups(ds.schema);
  for (const auto& g : m.groups) {
    const auto& spec = ds.schema[g.feature];
    const auto& src = ds.columns[g.feature];
    if (g.kind == FeatureKind::numeric) {
      m.columns.push_back(src);
      m.column_names.push_back(spec.name);
      continue;
    }
    for (std::size_t lv = 0; lv < g.width; ++lv) {
      std::vector<double> col(m.rows);
      for (std::size_t i = 0; i < m.rows; ++i) {
        col[i] = static_cast<std::size_t>(src[i]) == lv ? 1.0 : 0.0;
      }
      m.columns.push_back(std::move(col));
      m.column_names.push_back(spec.name + "=" + spec.levels[lv]);
    }
  }
  return m;
}

std::vector<double> encode_row(const FeatureSchema& schema,
                               std::span<const double> raw) {
  if (raw.size() != schema.size()) {
    throw DataError("row has " + std::to_string(raw.size()) +
                    " values, schema expects " + std::to_string(schema.size()));
  }
  std::vector<double> out;
  for (std::size_t d = 0; d < schema.size(); ++d) {
    const auto& spec = schema[d];
    if (spec.kind == FeatureKind::numeric) {
      out.push_back(raw[d]);
      continue;
    }
    const double v = raw[d];
    if (v < 0 || v >= static_cast<double>(spec.levels.size()) ||
        v != std::floor(v)) {
      throw DataError("invalid level index for feature '" + spec.name + "'");
    }
    for (std::size_t lv = 0; lv < spec.levels.size(); ++lv) {
      out.push_back(static_cast<std::size_t>(v) == lv ? 1.0 : 0.0);
    }
  }
  return out;
}

std::vector<double> decode_row(const FeatureSchema& schema,
                               std::span<const double> encoded) {
  std::vector<double> out;
  std::size_t col = 0;
  for (std::size_t d = 0; d < schema.size(); ++d) {
    const auto& spec = schema[d];
    if (spec.kind == FeatureKind::numeric) {
      out.push_back(encoded[col++]);
      continue;
    }
    std::size_t hot = spec.levels.size();
    for (std::size_t lv = 0; lv < spec.levels.size(); ++lv) {
      if (encoded[col + lv] == 1.0) hot = lv;
    }
    if (hot == spec.levels.size()) {
      throw DataError("no active indicator for feature '" + spec.name + "'");
    }
    out.push_back(static_cast<double>(hot));
    col += spec.levels.size();
  }
  return out;
}

DataSplit split(const Dataset& ds, const SplitSpec& spec) {
  if (spec.train <= 0 || spec.valid <= 0 || spec.test <= 0) {
    throw DataError("split fractions must be positive");
  }
  if (std::abs(spec.train + spec.valid + spec.test - 1.0) > 1e-9) {
    throw DataError("split fractions must sum to 1");
  }
  const std::size_t n = ds.rows();
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train * n));
  const auto n_valid = static_cast<std::size_t>(std::llround(spec.valid * n));
  if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n) {
    throw DataError("split of " + std::to_string(n) +
                    " rows leaves an empty partition");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  DataSplit out;
  out.train_idx.assign(order.begin(), order.begin() + n_train);
  out.valid_idx.assign(order.begin() + n_train, order.begin() + n_train + n_valid);
  out.test_idx.assign(order.begin() + n_train + n_valid, order.end());
  std::sort(out.train_idx.begin(), out.train_idx.end());
  std::sort(out.valid_idx.begin(), out.valid_idx.end());
  std::sort(out.test_idx.begin(), out.test_idx.end());
  out.train = ds.subset(out.train_idx);
  out.valid = ds.subset(out.valid_idx);
  out.test = ds.subset(out.test_idx);
  return out;
}

int plus_sign_label(double x1, double x2) {
  constexpr double half_width = 1.0 / 3.0;
  return (std::abs(x1) <= half_width || std::abs(x2) <= half_width) ? 1 : 0;
}

Dataset gen_plus_sign(std::size_t n_per_arm, std::uint64_t seed) {
  if (n_per_arm == 0) throw DataError("gen_plus_sign: n_per_arm must be >= 1");
  Dataset ds;
  ds.schema = FeatureSchema({{"x1", FeatureKind::numeric, {}},
                             {"x2", FeatureKind::numeric, {}}});
  ds.task = Task::classification;
  ds.class_labels = {"0", "1"};
  ds.columns.resize(2);
  Rng rng(seed);
  constexpr double edges[4] = {-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0};
  // Product design: every x1 coordinate is paired with every x2 coordinate,
  // so each column of the grid sees the same class mix.
  std::vector<double> axis[2];
  for (auto& a : axis) {
    for (int third = 0; third < 3; ++third) {
      for (std::size_t i = 0; i < n_per_arm; ++i) {
        a.push_back(rng.uniform(edges[third], edges[third + 1]));
      }
    }
  }
  for (double x1 : axis[0]) {
    for (double x2 : axis[1]) {
      ds.columns[0].push_back(x1);
      ds.columns[1].push_back(x2);
      ds.targets.push_back(plus_sign_label(x1, x2));
    }
  }
  return ds;
}

int bars_label(int omega, double x) {
  const int runs = omega + 2;
  auto run = static_cast<int>(std::floor(x * runs));
  run = std::clamp(run, 0, runs - 1);
  return run % 2;
}

Dataset gen_bars(int omega, std::size_t n, std::uint64_t seed) {
  if (omega < 1) throw DataError("gen_bars: omega must be >= 1");
  const auto runs = static_cast<std::size_t>(omega + 2);
  if (n < 10 * runs) {
    throw DataError("gen_bars: n must be at least 10*(omega+2)");
  }
  Dataset ds;
  ds.schema = FeatureSchema({{"x", FeatureKind::numeric, {}}});
  ds.task = Task::classification;
  ds.class_labels = {"0", "1"};
  ds.columns.resize(1);
  const double width = 1.0 / static_cast<double>(runs);
  std::vector<double> xs;
  // Three anchored samples per run (both edges and the center) so every run
  // is populated.
  for (std::size_t r = 0; r < runs; ++r) {
    const double lo = static_cast<double>(r) * width;
    xs.push_back(lo + 0.02 * width);
    xs.push_back(lo + 0.5 * width);
    xs.push_back(lo + 0.98 * width);
  }
  Rng rng(seed);
  while (xs.size() < n) xs.push_back(rng.uniform());
  for (double x : xs) {
    ds.columns[0].push_back(x);
    ds.targets.push_back(bars_label(omega, x));
  }
  return ds;
}

Dataset gen_bars_regression(int omega, std::size_t n, double noise,
                            std::uint64_t seed) {
  if (omega < 1) throw DataError("gen_bars_regression: omega must be >= 1");
  if (n == 0) throw DataError("gen_bars_regression: n must be >= 1");
  Dataset ds;
  ds.schema = FeatureSchema({{"x", FeatureKind::numeric, {}}});
  ds.task = Task::regression;
  ds.columns.resize(1);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    ds.columns[0].push_back(x);
    ds.targets.push_back(std::cos(2.0 * std::numbers::pi * omega * x) +
                         noise * rng.normal());
  }
  return ds;
}

void standardize_targets(Dataset& ds) {
  if (ds.task != Task::regression) {
    throw DataError("target standardization requires a regression task");
  }
  const double n = static_cast<double>(ds.rows());
  double mean = 0;
  for (double t : ds.targets) mean += t;
  mean /= n;
  double var = 0;
  for (double t : ds.targets) var += (t - mean) * (t - mean);
  const double sd = std::sqrt(var / n);
  for (double& t : ds.targets) t = sd > 0 ? (t - mean) / sd : t - mean;
}

}  // namespace sgt
