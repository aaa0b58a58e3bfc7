#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgt {

enum class Task { classification, regression };
enum class FeatureKind { numeric, categorical };

std::string to_string(Task task);
Task parse_task(const std::string& text);

/// Raised for malformed input data. Carries the 1-based data row and the
/// column name when the error can be located.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::size_t row = 0,
                     std::string column = {});

  std::size_t row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::vector<std::string> levels;  // categorical only

  std::size_t level_index(const std::string& level) const;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  /// Parses the schema file format: one line per feature column,
  /// `name,kind[,level1|level2|...]`. Blank lines and `#` comments are
  /// skipped.
  static FeatureSchema parse(const std::string& text);
  static FeatureSchema load(const std::filesystem::path& path);
  std::string to_text() const;

  std::size_t size() const { return features_.size(); }
  const FeatureSpec& operator[](std::size_t i) const { return features_[i]; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  std::size_t index_of(const std::string& name) const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  void validate() const;
  std::vector<FeatureSpec> features_;
};

/// Column-major tabular data. Categorical cells hold the level index.
struct Dataset {
  FeatureSchema schema;
  Task task = Task::classification;
  std::vector<std::vector<double>> columns;  // [feature][row]
  std::vector<double> targets;               // class id or real value
  std::vector<std::string> class_labels;     // classification only

  std::size_t rows() const { return targets.size(); }
  std::size_t features() const { return schema.size(); }
  int num_classes() const { return static_cast<int>(class_labels.size()); }

  std::vector<double> row(std::size_t i) const;
  Dataset subset(std::span<const std::size_t> indices) const;
  void validate() const;
};

/// Reads a CSV whose header lists the schema columns followed by one target
/// column. Classification labels are mapped to ids in sorted label order
/// (numeric labels sort numerically).
Dataset load_csv(const std::filesystem::path& path, const FeatureSchema& schema,
                 Task task);
Dataset parse_csv(const std::string& text, const FeatureSchema& schema,
                  Task task);
std::string to_csv(const Dataset& ds);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

struct FeatureGroup {
  std::size_t feature = 0;       // index into the schema
  std::size_t first_column = 0;  // first encoded column
  std::size_t width = 1;         // encoded columns owned by this feature
  FeatureKind kind = FeatureKind::numeric;
};

/// One-hot encoded, column-major feature matrix.
struct EncodedMatrix {
  std::size_t rows = 0;
  std::vector<std::vector<double>> columns;
  std::vector<FeatureGroup> groups;
  std::vector<std::string> column_names;

  double operator()(std::size_t row, std::size_t col) const {
    return columns[col][row];
  }
  std::size_t cols() const { return columns.size(); }
  std::size_t group_of_column(std::size_t col) const;
};

std::vector<FeatureGroup> encoding_groups(const FeatureSchema& schema);
EncodedMatrix one_hot_view(const Dataset& ds);
/// Encodes a single raw row (categorical cells as level indices).
std::vector<double> encode_row(const FeatureSchema& schema,
                               std::span<const double> raw);
/// Recovers raw feature values from an encoded row.
std::vector<double> decode_row(const FeatureSchema& schema,
                               std::span<const double> encoded);

struct SplitSpec {
  double train = 0.7;
  double valid = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;
};

struct DataSplit {
  Dataset train, valid, test;
  std::vector<std::size_t> train_idx, valid_idx, test_idx;
};

DataSplit split(const Dataset& ds, const SplitSpec& spec);

/// Plus-sign classification data on [-1,1]^2. Class 1 inside the central
/// cross |x1| <= 1/3 or |x2| <= 1/3. Each axis gets `n_per_arm` uniform
/// coordinates in each of its thirds and the rows are all (x1, x2) pairs,
/// 9 * n_per_arm^2 in total.
Dataset gen_plus_sign(std::size_t n_per_arm, std::uint64_t seed);
int plus_sign_label(double x1, double x2);

/// Bars classification data on [0,1]: omega+2 equal-width alternating runs,
/// label 0 on the first run.
Dataset gen_bars(int omega, std::size_t n, std::uint64_t seed);
int bars_label(int omega, double x);

/// Regression variant: y = cos(2*pi*omega*x) + N(0, noise^2).
Dataset gen_bars_regression(int omega, std::size_t n, double noise,
                            std::uint64_t seed);

/// Standardizes regression targets to zero mean and unit variance in place.
void standardize_targets(Dataset& ds);

}  // namespace sgt
