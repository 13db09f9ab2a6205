#include "rfc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rfc/errors.hpp"
#include "rfc/rng.hpp"

namespace rfc {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string_view rest(line);
  while (true) {
    const auto comma = rest.find(',');
    fields.push_back(trim(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return fields;
}

std::optional<double> parse_real(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  const char* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

}  // namespace

void Dataset::validate() const {
  if (instances.rows() > 0 && instances.cols() != feature_names.size()) {
    throw DataError("instance width " + std::to_string(instances.cols()) + " does not match " +
                    std::to_string(feature_names.size()) + " feature names");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : feature_names) {
    if (!seen.insert(name).second) throw DataError("duplicate feature name '" + name + "'");
  }
  if (class_names.size() < 2) throw DataError("fewer than 2 classes");
  if (!labels.empty() && labels.size() != n_instances()) {
    throw DataError("label count does not match instance count");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_names.size()) {
      throw DataError("label index out of range at row " + std::to_string(i));
    }
  }
  for (double v : instances.data()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

Dataset read_csv(std::istream& in, const CsvOptions& options, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (!t.empty() && t.front() != '#') {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw DataError(source + ": missing header row");

  const auto header = split_fields(line);
  {
    std::unordered_set<std::string> names;
    for (const auto& h : header) {
      if (h.empty()) throw DataError(source + ": empty column name in header");
      if (!names.insert(h).second) throw DataError(source + ": duplicate column '" + h + "'");
    }
  }

  std::optional<std::size_t> label_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) label_col = c;
  }
  if (!label_col && !options.label_optional) {
    throw DataError(source + ": label column '" + options.label_column + "' not found");
  }
  for (const auto& d : options.drop_columns) {
    if (std::find(header.begin(), header.end(), d) == header.end()) {
      throw DataError(source + ": column to drop '" + d + "' not found");
    }
    if (label_col && d == header[*label_col]) throw DataError(source + ": cannot drop the label column");
  }

  std::vector<std::size_t> feature_cols;
  Dataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (label_col && c == *label_col) continue;
    if (std::find(options.drop_columns.begin(), options.drop_columns.end(), header[c]) !=
        options.drop_columns.end())
      continue;
    feature_cols.push_back(c);
    ds.feature_names.push_back(header[c]);
  }

  std::unordered_map<std::string, std::size_t> class_index;
  for (std::size_t k = 0; k < options.class_order.size(); ++k) {
    if (!class_index.emplace(options.class_order[k], k).second) {
      throw DataError(source + ": duplicate class '" + options.class_order[k] + "' in class order");
    }
    ds.class_names.push_back(options.class_order[k]);
  }

  std::vector<double> values(feature_cols.size());
  std::size_t n_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const auto& cell = fields[feature_cols[j]];
      const auto v = parse_real(cell);
      if (!v) {
        throw DataError(source + ":" + std::to_string(line_no) + ": column '" + header[feature_cols[j]] +
                        "': cannot parse '" + cell + "' as a finite number");
      }
      values[j] = *v;
    }
    if (label_col) {
      const auto& cls = fields[*label_col];
      auto it = class_index.find(cls);
      if (it == class_index.end()) {
        if (!options.class_order.empty()) {
          throw DataError(source + ":" + std::to_string(line_no) + ": class '" + cls +
                          "' is not in the class order");
        }
        it = class_index.emplace(cls, ds.class_names.size()).first;
        ds.class_names.push_back(cls);
      }
      ds.labels.push_back(it->second);
    }
    if (feature_cols.empty()) {
      ++n_rows;
    } else {
      ds.instances.append_row(values);
    }
  }
  if (feature_cols.empty() && n_rows > 0) throw DataError(source + ": no feature columns");
  if (ds.instances.cols() == 0) ds.instances = Matrix(0, feature_cols.size());

  if (ds.class_names.size() < 2) {
    throw DataError(source + ": fewer than 2 classes");
  }
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, options, path.string());
}

void write_csv(std::ostream& out, const Dataset& ds, const std::string& label_column) {
  for (const auto& name : ds.feature_names) out << name << ',';
  out << label_column << '\n';
  char buf[64];
  for (std::size_t i = 0; i < ds.n_instances(); ++i) {
    for (double v : ds.row(i)) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, ptr - buf);
      out << ',';
    }
    out << (ds.labels.empty() ? std::string() : ds.class_names[ds.labels[i]]) << '\n';
  }
}

Dataset select_features(const Dataset& ds, std::span<const std::string> names) {
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    const auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    if (it == ds.feature_names.end()) throw DataError("feature '" + name + "' not present in data");
    cols.push_back(static_cast<std::size_t>(it - ds.feature_names.begin()));
  }
  Dataset out;
  out.feature_names.assign(names.begin(), names.end());
  out.labels = ds.labels;
  out.class_names = ds.class_names;
  out.instances = Matrix(ds.n_instances(), cols.size());
  for (std::size_t i = 0; i < ds.n_instances(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) out.instances(i, j) = ds.instances(i, cols[j]);
  }
  return out;
}

std::size_t train_size(std::size_t n, double fraction) {
  if (n < 2) throw DataError("at least 2 instances are needed to split");
  if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("train fraction must lie in (0, 1)");
  const auto rounded = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::max<std::size_t>(1, std::min(n - 1, rounded));
}

Partition split_indices(std::span<const std::size_t> indices, const SplitSpec& spec) {
  if (indices.empty()) throw DataError("cannot split an empty dataset");
  const std::size_t n_train = train_size(indices.size(), spec.train_fraction);
  std::vector<std::size_t> order(indices.begin(), indices.end());
  Rng rng(mix_seed(spec.seed, 0x5171u));
  rng.shuffle(std::span<std::size_t>(order));
  Partition p;
  p.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  p.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(p.train.begin(), p.train.end());
  std::sort(p.test.begin(), p.test.end());
  return p;
}

Partition split(const Dataset& ds, const SplitSpec& spec) {
  std::vector<std::size_t> all(ds.n_instances());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return split_indices(all, spec);
}

}  // namespace rfc
