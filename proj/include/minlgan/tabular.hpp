#pragma once

#include "minlgan/data.hpp"
#include "minlgan/error.hpp"
#include "minlgan/hash.hpp"

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace minlgan {

// Which label values map to a class. `rest` matches every value not claimed by the
// other set (e.g. all KDD attack types).
struct LabelSet {
  std::vector<std::string> values;
  bool rest = false;

  bool contains(const std::string& v) const {
    return std::find(values.begin(), values.end(), v) != values.end();
  }
};

// Header mapping for delimiter-separated files.
struct TabularFormat {
  // 0 splits on runs of whitespace.
  char delimiter = ',';
  bool has_header = true;
  // Names for headerless files; defaults to "0", "1", ... when empty.
  std::vector<std::string> column_names;
  std::string label_column;
  // One-hot encoded even if every value parses as a number.
  std::vector<std::string> categorical_columns;
  std::vector<std::string> drop_columns;

  std::string describe() const {
    std::ostringstream os;
    os << "delim=" << static_cast<int>(delimiter) << ";header=" << has_header << ";label=" << label_column
       << ";names=";
    for (const auto& c : column_names) os << c << ',';
    os << ";cat=";
    for (const auto& c : categorical_columns) os << c << ',';
    os << ";drop=";
    for (const auto& c : drop_columns) os << c << ',';
    return os.str();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> tokenize(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  if (delimiter == 0) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
      out.emplace_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// Reads one or more delimiter-separated files sharing a layout. Rows whose label is in
// neither set are dropped; non-numeric (or forced) columns are one-hot encoded with
// categories in lexicographic order. `classes` keeps the raw label of each row.
inline Dataset load_tabular(const std::vector<std::filesystem::path>& paths, const TabularFormat& format,
                            const LabelSet& normal_labels, const LabelSet& anomaly_labels) {
  if (paths.empty()) throw InvalidArgument("load_tabular: no input files");
  if (normal_labels.rest && anomaly_labels.rest)
    throw InvalidArgument("load_tabular: only one label set may claim the rest");
  for (const auto& v : normal_labels.values)
    if (anomaly_labels.contains(v)) throw InvalidArgument("label '" + v + "' is both normal and anomaly");

  std::vector<std::string> names = format.column_names;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> labels;
  std::vector<Label> row_labels;
  std::vector<std::size_t> ids;
  std::size_t label_idx = 0;
  std::size_t row_counter = 0;
  bool layout_known = false;

  for (const auto& path : paths) {
    const std::string text = detail::read_file(path);
    std::istringstream in(text);
    std::string line;
    bool header_pending = format.has_header;
    while (std::getline(in, line)) {
      if (detail::trim(line).empty()) continue;
      auto toks = detail::tokenize(line, format.delimiter);
      if (header_pending) {
        header_pending = false;
        if (!layout_known) {
          if (!format.column_names.empty()) throw SchemaError("column_names given for a file with a header");
          names = toks;
        } else if (toks != names) {
          throw SchemaError(path.string() + ": header differs from the first file");
        }
        continue;
      }
      if (!layout_known) {
        if (names.empty())
          for (std::size_t j = 0; j < toks.size(); ++j) names.push_back(std::to_string(j));
        const auto it = std::find(names.begin(), names.end(), format.label_column);
        if (it == names.end()) throw SchemaError("label column '" + format.label_column + "' not found");
        label_idx = static_cast<std::size_t>(it - names.begin());
        layout_known = true;
      }
      if (toks.size() != names.size())
        throw SchemaError(path.string() + ": row " + std::to_string(row_counter) + " has " +
                          std::to_string(toks.size()) + " fields, expected " + std::to_string(names.size()));
      const std::string& lab = toks[label_idx];
      const bool is_normal = normal_labels.contains(lab) || (normal_labels.rest && !anomaly_labels.contains(lab));
      const bool is_anomaly = anomaly_labels.contains(lab) || (anomaly_labels.rest && !normal_labels.contains(lab));
      if (is_normal || is_anomaly) {
        row_labels.push_back(is_normal ? Label::normal : Label::anomaly);
        labels.push_back(lab);
        ids.push_back(row_counter);
        rows.push_back(std::move(toks));
      }
      ++row_counter;
    }
    if (!layout_known && format.has_header && !names.empty()) {
      const auto it = std::find(names.begin(), names.end(), format.label_column);
      if (it == names.end()) throw SchemaError("label column '" + format.label_column + "' not found");
    }
  }
  if (!layout_known && names.empty()) throw SchemaError("input files contain no rows");

  const std::size_t n = rows.size();
  if (std::count(row_labels.begin(), row_labels.end(), Label::normal) == 0)
    throw EmptyClassError("no rows carry a normal label");

  // Per output column: either a numeric source column or (source, category).
  struct OutColumn {
    std::size_t source;
    std::optional<std::string> category;
  };
  std::vector<OutColumn> out_cols;
  std::vector<std::string> out_names;
  auto listed = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j == label_idx || listed(format.drop_columns, names[j])) continue;
    bool numeric = !listed(format.categorical_columns, names[j]);
    double tmp = 0.0;
    for (std::size_t i = 0; numeric && i < n; ++i) numeric = detail::parse_double(rows[i][j], tmp);
    if (numeric) {
      out_cols.push_back({j, std::nullopt});
      out_names.push_back(names[j]);
    } else {
      std::set<std::string> cats;
      for (std::size_t i = 0; i < n; ++i) cats.insert(rows[i][j]);
      for (const auto& c : cats) {
        out_cols.push_back({j, c});
        out_names.push_back(names[j] + "=" + c);
      }
    }
  }

  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(out_cols.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < out_cols.size(); ++c) {
      const auto& col = out_cols[c];
      const std::string& cell = rows[i][col.source];
      double v = 0.0;
      if (col.category) {
        v = cell == *col.category ? 1.0 : 0.0;
      } else {
        detail::parse_double(cell, v);
      }
      ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
    }
  }
  ds.labels = std::move(row_labels);
  ds.ids = std::move(ids);
  ds.classes = std::move(labels);
  ds.column_names = std::move(out_names);
  ds.normalization = Normalization::identity(ds.dim());
  return ds;
}

inline Dataset load_tabular(const std::filesystem::path& path, const TabularFormat& format,
                            const LabelSet& normal_labels, const LabelSet& anomaly_labels) {
  return load_tabular(std::vector<std::filesystem::path>{path}, format, normal_labels, anomaly_labels);
}

// Binary columnar cache. Layout (little-endian host order):
//   "MLGC" u32 version | u64 rows | u64 cols | names | labels u8[rows] | ids u64[rows]
//   | u8 has_classes [classes] | shift f64[cols] | scale f64[cols] | columns f64[cols][rows]
// Strings are u32 length + bytes.
namespace cache {

inline constexpr std::uint32_t kVersion = 1;

namespace detail {

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw IoError("dataset cache truncated");
  return v;
}

inline void put_string(std::ostream& os, const std::string& s) {
  put(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
  const auto len = get<std::uint32_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw IoError("dataset cache truncated");
  return s;
}

}  // namespace detail

inline void save(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write("MLGC", 4);
  detail::put(os, kVersion);
  detail::put(os, static_cast<std::uint64_t>(ds.size()));
  detail::put(os, static_cast<std::uint64_t>(ds.dim()));
  for (Eigen::Index j = 0; j < ds.dim(); ++j)
    detail::put_string(os, static_cast<std::size_t>(j) < ds.column_names.size() ? ds.column_names[j] : "");
  for (auto l : ds.labels) detail::put(os, static_cast<std::uint8_t>(l));
  for (auto id : ds.ids) detail::put(os, static_cast<std::uint64_t>(id));
  detail::put(os, static_cast<std::uint8_t>(ds.classes.empty() ? 0 : 1));
  for (const auto& c : ds.classes) detail::put_string(os, c);
  for (Eigen::Index j = 0; j < ds.dim(); ++j) detail::put(os, ds.normalization.shift(j));
  for (Eigen::Index j = 0; j < ds.dim(); ++j) detail::put(os, ds.normalization.scale(j));
  for (Eigen::Index j = 0; j < ds.dim(); ++j)
    for (Eigen::Index i = 0; i < ds.size(); ++i) detail::put(os, ds.features(i, j));
  if (!os) throw IoError("failed writing " + path.string());
}

inline Dataset load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "MLGC", 4) != 0) throw SchemaError(path.string() + " is not a dataset cache");
  if (detail::get<std::uint32_t>(is) != kVersion) throw SchemaError("unsupported dataset cache version");
  const auto rows = static_cast<Eigen::Index>(detail::get<std::uint64_t>(is));
  const auto cols = static_cast<Eigen::Index>(detail::get<std::uint64_t>(is));
  Dataset ds;
  for (Eigen::Index j = 0; j < cols; ++j) ds.column_names.push_back(detail::get_string(is));
  for (Eigen::Index i = 0; i < rows; ++i) ds.labels.push_back(static_cast<Label>(detail::get<std::uint8_t>(is)));
  for (Eigen::Index i = 0; i < rows; ++i) ds.ids.push_back(static_cast<std::size_t>(detail::get<std::uint64_t>(is)));
  if (detail::get<std::uint8_t>(is) != 0)
    for (Eigen::Index i = 0; i < rows; ++i) ds.classes.push_back(detail::get_string(is));
  ds.normalization.shift.resize(cols);
  ds.normalization.scale.resize(cols);
  for (Eigen::Index j = 0; j < cols; ++j) ds.normalization.shift(j) = detail::get<double>(is);
  for (Eigen::Index j = 0; j < cols; ++j) ds.normalization.scale(j) = detail::get<double>(is);
  ds.features.resize(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) ds.features(i, j) = detail::get<double>(is);
  ds.validate();
  return ds;
}

// Cache key: content of every input file plus the layout and label mapping.
inline std::string key(const std::vector<std::filesystem::path>& paths, const TabularFormat& format,
                       const LabelSet& normal_labels, const LabelSet& anomaly_labels) {
  Fnv1a h;
  for (const auto& p : paths) h.update(minlgan::detail::read_file(p)).update("\x1f");
  h.update(format.describe());
  for (const auto& set : {normal_labels, anomaly_labels}) {
    h.update(set.rest ? "|rest" : "|");
    for (const auto& v : set.values) h.update(v).update(",");
  }
  return h.hex();
}

}  // namespace cache

// load_tabular through an on-disk cache directory (created on demand).
inline Dataset load_tabular_cached(const std::vector<std::filesystem::path>& paths, const TabularFormat& format,
                                   const LabelSet& normal_labels, const LabelSet& anomaly_labels,
                                   const std::filesystem::path& cache_dir) {
  for (const auto& p : paths)
    if (!std::filesystem::exists(p)) throw IoError("missing data file " + p.string());
  const auto file = cache_dir / (cache::key(paths, format, normal_labels, anomaly_labels) + ".mlgc");
  if (std::filesystem::exists(file)) return cache::load(file);
  auto ds = load_tabular(paths, format, normal_labels, anomaly_labels);
  std::filesystem::create_directories(cache_dir);
  const auto tmp = file.string() + ".tmp";
  cache::save(ds, tmp);
  std::filesystem::rename(tmp, file);
  return ds;
}

}  // namespace minlgan
