#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rfc/matrix.hpp"

namespace rfc {

/// Numeric feature table with class labels. Rows are instances; the label of
/// row i is labels[i], an index into class_names. A dataset read without a
/// label column has an empty labels vector (see labeled()).
struct Dataset {
  std::vector<std::string> feature_names;
  Matrix instances;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;

  std::size_t n_instances() const { return instances.rows(); }
  std::size_t n_features() const { return feature_names.size(); }
  std::size_t n_classes() const { return class_names.size(); }
  bool labeled() const { return !labels.empty() || n_instances() == 0; }
  std::span<const double> row(std::size_t i) const { return instances.row(i); }

  /// Throws DataError if any invariant is violated.
  void validate() const;
};

struct CsvOptions {
  std::string label_column;
  /// Class index order. Empty means first-appearance order in the file.
  std::vector<std::string> class_order;
  /// Columns removed before the dataset is built.
  std::vector<std::string> drop_columns;
  /// Accept files without the label column (instances to score).
  bool label_optional = false;
};

Dataset read_csv(std::istream& in, const CsvOptions& options, const std::string& source = "<stream>");
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);

/// Writes features followed by the label column, doubles in shortest
/// round-trip form.
void write_csv(std::ostream& out, const Dataset& ds, const std::string& label_column);

/// Keeps only the named features, in the given order.
Dataset select_features(const Dataset& ds, std::span<const std::string> names);

struct SplitSpec {
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 7;
};

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// max(1, min(n - 1, round(fraction * n))).
std::size_t train_size(std::size_t n, double fraction);

/// Seeded shuffle of the given indices; both halves are returned sorted.
Partition split_indices(std::span<const std::size_t> indices, const SplitSpec& spec);
Partition split(const Dataset& ds, const SplitSpec& spec);

/// The ten Iris records (versicolor = 0, virginica = 1) used for the
/// hand-worked contribution example.
Dataset fixture_iris_toy();

}  // namespace rfc
