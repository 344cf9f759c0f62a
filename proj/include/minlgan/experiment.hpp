#pragma once

// Declarative experiment runner: a JSON config names a dataset, a method and its
// hyperparameters; run_experiment trains every restart and ensemble member, persists
// scores, and derives all metrics from the persisted score files.

#include "minlgan/checkpoint.hpp"
#include "minlgan/data.hpp"
#include "minlgan/error.hpp"
#include "minlgan/eval.hpp"
#include "minlgan/hash.hpp"
#include "minlgan/score.hpp"
#include "minlgan/svg.hpp"
#include "minlgan/tabular.hpp"
#include "minlgan/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace minlgan {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kSchemaVersion = 1;
// Ensemble member j trains with seed base + kMemberSeedOffset + j, so members never
// share a seed with a restart and do not depend on the restart count.
inline constexpr std::uint64_t kMemberSeedOffset = 1'000'000;

struct ToyAnomalies {
  long n = 100;
  double low = -1.5;
  double high = 1.5;
};

struct DatasetConfig {
  std::string kind = "circle";  // circle | moons | tabular
  // Toy generators.
  long n = 1000;
  double noise = 0.05;
  std::uint64_t seed = 0;
  ToyAnomalies anomalies;
  // Tabular files, relative paths resolved against the data root.
  std::vector<std::string> files;
  TabularFormat format;
  LabelSet normal_labels;
  LabelSet anomaly_labels;
  std::size_t subsample_normals = 0;  // 0 keeps every normal row
  std::string cache_dir;              // empty disables the parsed-data cache
};

struct ExperimentConfig {
  std::string name;
  DatasetConfig dataset;
  SplitSpec split;
  Method method = Method::minlgan;
  TrainConfig train;
  long restarts = 1;
  long ensemble_n = 0;
  std::string output_dir = "runs";

  void validate() const {
    if (restarts < 1) throw ConfigError("restarts must be at least 1");
    if (ensemble_n < 0) throw ConfigError("ensemble_n must be non-negative");
    if (ensemble_n > 0 && !is_adversarial(method)) throw ConfigError("ensembles need method gan or minlgan");
    if (dataset.kind != "circle" && dataset.kind != "moons" && dataset.kind != "tabular")
      throw ConfigError("dataset.kind must be circle, moons or tabular");
    if (dataset.kind == "tabular") {
      if (dataset.files.empty()) throw ConfigError("tabular dataset needs at least one file");
      if (dataset.format.label_column.empty()) throw ConfigError("tabular dataset needs format.label_column");
    }
    try {
      split.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    train.validate();
  }
};

// ---------------------------------------------------------------------------
// Config (de)serialization. Every object rejects keys it does not know.

namespace config_detail {

class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  const json& take(const char* key) {
    if (!j_.contains(key)) throw ConfigError("missing required key " + path(key));
    seen_.insert(key);
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError("unknown key " + path(item.key()));
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline LabelSet label_set(const json& j, const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "rest") return {{}, true};
  if (!j.is_array()) throw ConfigError(where + " must be a list of labels or \"rest\"");
  LabelSet s;
  for (const auto& v : j) {
    if (v.is_string()) s.values.push_back(v.get<std::string>());
    else if (v.is_number_integer()) s.values.push_back(std::to_string(v.get<long long>()));
    else throw ConfigError(where + " entries must be strings or integers");
  }
  return s;
}

inline json label_set_json(const LabelSet& s) { return s.rest ? json("rest") : json(s.values); }

inline char delimiter_from(const std::string& s) {
  if (s == "whitespace") return 0;
  if (s == "tab" || s == "\t") return '\t';
  if (s.size() == 1) return s[0];
  throw ConfigError("delimiter must be a single character, \"tab\" or \"whitespace\"");
}

inline std::string delimiter_name(char c) {
  if (c == 0) return "whitespace";
  if (c == '\t') return "tab";
  return std::string(1, c);
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const json& j) {
  using config_detail::Fields;
  ExperimentConfig c;
  Fields top(j, "config");
  int version = 0;
  top.get("schema_version", version);
  if (version != kSchemaVersion)
    throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
  top.get("name", c.name);
  top.get("restarts", c.restarts);
  top.get("ensemble_n", c.ensemble_n);
  top.get("output_dir", c.output_dir);
  try {
    c.method = parse_method(top.take("method").get<std::string>());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config.method: ") + e.what());
  }

  {
    Fields d(top.take("dataset"), "dataset");
    auto& ds = c.dataset;
    d.get("kind", ds.kind);
    d.get("n", ds.n);
    d.get("noise", ds.noise);
    d.get("seed", ds.seed);
    d.get("files", ds.files);
    d.get("subsample_normals", ds.subsample_normals);
    d.get("cache_dir", ds.cache_dir);
    if (d.has("anomalies")) {
      Fields a(d.take("anomalies"), "dataset.anomalies");
      a.get("n", ds.anomalies.n);
      a.get("low", ds.anomalies.low);
      a.get("high", ds.anomalies.high);
      a.finish();
    }
    if (d.has("normal_labels")) ds.normal_labels = config_detail::label_set(d.take("normal_labels"), "dataset.normal_labels");
    if (d.has("anomaly_labels"))
      ds.anomaly_labels = config_detail::label_set(d.take("anomaly_labels"), "dataset.anomaly_labels");
    if (d.has("format")) {
      Fields f(d.take("format"), "dataset.format");
      std::string delim = config_detail::delimiter_name(ds.format.delimiter);
      f.get("delimiter", delim);
      ds.format.delimiter = config_detail::delimiter_from(delim);
      f.get("header", ds.format.has_header);
      f.get("column_names", ds.format.column_names);
      f.get("label_column", ds.format.label_column);
      f.get("categorical_columns", ds.format.categorical_columns);
      f.get("drop_columns", ds.format.drop_columns);
      f.finish();
    }
    d.finish();
  }

  if (top.has("split")) {
    Fields s(top.take("split"), "split");
    s.get("train_fraction", c.split.train_fraction);
    s.get("holdout_fraction", c.split.holdout_fraction);
    s.get("seed", c.split.seed);
    if (s.has("holdout_anomalies")) {
      const json& h = s.take("holdout_anomalies");
      if (h.is_string() && h.get<std::string>() == "mirror") c.split.holdout_anomaly_fraction = std::nullopt;
      else if (h.is_number()) c.split.holdout_anomaly_fraction = h.get<double>();
      else throw ConfigError("split.holdout_anomalies must be \"mirror\" or a fraction");
    }
    s.finish();
  }

  if (top.has("train")) {
    Fields t(top.take("train"), "train");
    auto& tc = c.train;
    t.get("a", tc.a);
    t.get("learning_rate", tc.learning_rate);
    t.get("beta1", tc.beta1);
    t.get("beta2", tc.beta2);
    t.get("batch_size", tc.batch_size);
    t.get("max_steps", tc.max_steps);
    t.get("eval_every", tc.eval_every);
    t.get("seed", tc.seed);
    t.get("clip_norm", tc.clip_norm);
    t.get("latent_dim", tc.latent_dim);
    t.get("hidden", tc.hidden);
    t.get("ae_latent_dim", tc.ae_latent_dim);
    t.get("vae_samples", tc.vae_samples);
    if (t.has("noise")) {
      Fields n(t.take("noise"), "train.noise");
      std::string family(to_string(tc.noise.family));
      n.get("family", family);
      try {
        tc.noise.family = parse_noise_family(family);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      n.get("sigma", tc.noise.sigma);
      n.finish();
    }
    t.finish();
  }
  top.finish();
  if (c.name.empty()) c.name = c.dataset.kind;
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  try {
    return parse_config(json::parse(text));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Canonical tree with every default spelled out.
inline json to_json(const ExperimentConfig& c) {
  const auto& ds = c.dataset;
  json dataset = {{"kind", ds.kind}};
  if (ds.kind == "tabular") {
    dataset["files"] = ds.files;
    dataset["format"] = {{"delimiter", config_detail::delimiter_name(ds.format.delimiter)},
                         {"header", ds.format.has_header},
                         {"column_names", ds.format.column_names},
                         {"label_column", ds.format.label_column},
                         {"categorical_columns", ds.format.categorical_columns},
                         {"drop_columns", ds.format.drop_columns}};
    dataset["normal_labels"] = config_detail::label_set_json(ds.normal_labels);
    dataset["anomaly_labels"] = config_detail::label_set_json(ds.anomaly_labels);
    dataset["subsample_normals"] = ds.subsample_normals;
    dataset["cache_dir"] = ds.cache_dir;
  } else {
    dataset["n"] = ds.n;
    dataset["noise"] = ds.noise;
    dataset["seed"] = ds.seed;
    dataset["anomalies"] = {{"n", ds.anomalies.n}, {"low", ds.anomalies.low}, {"high", ds.anomalies.high}};
  }
  const auto& t = c.train;
  json split = {{"train_fraction", c.split.train_fraction},
                {"holdout_fraction", c.split.holdout_fraction},
                {"seed", c.split.seed}};
  if (c.split.holdout_anomaly_fraction) split["holdout_anomalies"] = *c.split.holdout_anomaly_fraction;
  else split["holdout_anomalies"] = "mirror";
  return {{"schema_version", kSchemaVersion},
          {"name", c.name},
          {"method", std::string(to_string(c.method))},
          {"dataset", dataset},
          {"split", split},
          {"train",
           {{"a", t.a},
            {"learning_rate", t.learning_rate},
            {"beta1", t.beta1},
            {"beta2", t.beta2},
            {"batch_size", t.batch_size},
            {"max_steps", t.max_steps},
            {"eval_every", t.eval_every},
            {"seed", t.seed},
            {"clip_norm", t.clip_norm},
            {"latent_dim", t.latent_dim},
            {"hidden", t.hidden},
            {"ae_latent_dim", t.ae_latent_dim},
            {"vae_samples", t.vae_samples},
            {"noise", {{"family", std::string(to_string(t.noise.family))}, {"sigma", t.noise.sigma}}}}},
          {"restarts", c.restarts},
          {"ensemble_n", c.ensemble_n},
          {"output_dir", c.output_dir}};
}

// Content hash over everything that determines results (the output location does not).
inline std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  return Fnv1a().update(j.dump()).hex();
}

// ---------------------------------------------------------------------------
// Data

inline fs::path data_root_from_env() {
  const char* env = std::getenv("MINLGAN_DATA_ROOT");
  return env && *env ? fs::path(env) : fs::current_path();
}

inline Dataset load_dataset(const DatasetConfig& dc, const fs::path& data_root) {
  if (dc.kind == "circle" || dc.kind == "moons") {
    Dataset normals = dc.kind == "circle" ? make_circle(dc.n, dc.noise, dc.seed) : make_moons(dc.n, dc.noise, dc.seed);
    return concat(normals, make_uniform_box(dc.anomalies.n, 2, dc.anomalies.low, dc.anomalies.high,
                                            derive_seed(dc.seed, 1)));
  }
  std::vector<fs::path> paths;
  for (const auto& f : dc.files) paths.push_back(fs::path(f).is_absolute() ? fs::path(f) : data_root / f);
  Dataset ds = dc.cache_dir.empty()
                   ? load_tabular(paths, dc.format, dc.normal_labels, dc.anomaly_labels)
                   : load_tabular_cached(paths, dc.format, dc.normal_labels, dc.anomaly_labels,
                                         fs::path(dc.cache_dir).is_absolute() ? fs::path(dc.cache_dir)
                                                                              : data_root / dc.cache_dir);
  if (dc.subsample_normals > 0) ds = subsample(ds, Label::normal, dc.subsample_normals, derive_seed(dc.seed, 2));
  return ds;
}

// ---------------------------------------------------------------------------
// Delimiter-separated artifacts. Every file has a one-line header; doubles use %.17g so
// that reading a file back reproduces the values exactly.

namespace io {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rows of tab-separated fields, header skipped.
inline std::vector<std::vector<std::string>> read_tsv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1)
      fields.push_back(line.substr(start, tab - start));
    fields.push_back(line.substr(start));
    rows.push_back(std::move(fields));
  }
  return rows;
}

inline double to_double(const std::string& s, const fs::path& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw SchemaError("malformed number '" + s + "' in " + where.string());
  return v;
}

// One record per sample: id, label, method, score.
inline void write_scores(const fs::path& path, const Dataset& rows, const std::string& method, const Vector& scores) {
  std::string text = "id\tlabel\tmethod\tscore\n";
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    text += std::to_string(rows.ids[k]) + "\t" + (rows.labels[k] == Label::normal ? "normal" : "anomaly") + "\t" +
            method + "\t" + fmt(scores(i)) + "\n";
  }
  write_text(path, text);
}

inline Vector read_scores(const fs::path& path, const std::vector<std::size_t>& expected_ids) {
  const auto rows = read_tsv(path);
  if (rows.size() != expected_ids.size()) throw SchemaError("unexpected row count in " + path.string());
  Vector s(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 4 || rows[i][0] != std::to_string(expected_ids[i]))
      throw SchemaError("score rows out of order in " + path.string());
    s(static_cast<Eigen::Index>(i)) = to_double(rows[i][3], path);
  }
  return s;
}

inline void write_roc(const fs::path& path, const RocResult& r) {
  std::string text = "fpr\ttpr\n";
  for (const auto& p : r.points) text += fmt(p.fpr) + "\t" + fmt(p.tpr) + "\n";
  write_text(path, text);
}

inline std::vector<RocPoint> read_roc(const fs::path& path) {
  std::vector<RocPoint> pts;
  for (const auto& row : read_tsv(path)) pts.push_back({to_double(row.at(0), path), to_double(row.at(1), path)});
  return pts;
}

inline void write_history(const fs::path& dir, const History& h) {
  std::string losses = "step\tname\tvalue\n";
  for (const auto& l : h.losses) losses += std::to_string(l.step) + "\t" + l.name + "\t" + fmt(l.value) + "\n";
  write_text(dir / "history.tsv", losses);
  std::string evals = "step\tholdout_auc\n";
  for (const auto& e : h.evals) evals += std::to_string(e.step) + "\t" + fmt(e.holdout_auc) + "\n";
  write_text(dir / "evals.tsv", evals);
}

}  // namespace io

// ---------------------------------------------------------------------------
// Run records

struct RunSummary {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string status = "pending";  // completed | failed
  std::string error;
  double best_holdout_auc = std::numeric_limits<double>::quiet_NaN();
  std::int64_t best_step = 0;
  std::string checkpoint;  // relative to the run directory
  double test_auc = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct RunRecord {
  std::string name;
  std::string config_hash;
  Method method = Method::minlgan;
  std::uint64_t seed = 0;
  std::string status = "completed";
  std::string error;
  fs::path dir;
  std::vector<RunSummary> restarts;
  std::vector<RunSummary> members;
  // single (restart mean), single_std, ensemble (EMinLGAN-1), scaled_ensemble (EMinLGAN-2).
  std::map<std::string, double> test_auc;
  double wall_seconds = 0.0;
};

namespace record_detail {

inline json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double num_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline json summary_json(const RunSummary& s) {
  return {{"index", s.index},
          {"seed", s.seed},
          {"status", s.status},
          {"error", s.error},
          {"best_holdout_auc", num_or_null(s.best_holdout_auc)},
          {"best_step", s.best_step},
          {"checkpoint", s.checkpoint},
          {"test_auc", num_or_null(s.test_auc)},
          {"wall_seconds", s.wall_seconds}};
}

inline RunSummary summary_from(const json& j) {
  RunSummary s;
  s.index = j.at("index").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.status = j.at("status").get<std::string>();
  s.error = j.at("error").get<std::string>();
  s.best_holdout_auc = num_from(j.at("best_holdout_auc"));
  s.best_step = j.at("best_step").get<std::int64_t>();
  s.checkpoint = j.at("checkpoint").get<std::string>();
  s.test_auc = num_from(j.at("test_auc"));
  s.wall_seconds = j.at("wall_seconds").get<double>();
  return s;
}

}  // namespace record_detail

inline json to_json(const RunRecord& r) {
  json j = {{"name", r.name},          {"config_hash", r.config_hash}, {"method", std::string(to_string(r.method))},
            {"seed", r.seed},          {"status", r.status},           {"error", r.error},
            {"wall_seconds", r.wall_seconds}};
  j["restarts"] = json::array();
  for (const auto& s : r.restarts) j["restarts"].push_back(record_detail::summary_json(s));
  j["members"] = json::array();
  for (const auto& s : r.members) j["members"].push_back(record_detail::summary_json(s));
  j["test_auc"] = json::object();
  for (const auto& [k, v] : r.test_auc) j["test_auc"][k] = record_detail::num_or_null(v);
  return j;
}

inline RunRecord load_record(const fs::path& dir) {
  try {
    const json j = json::parse(io::read_text(dir / "record.json"));
    RunRecord r;
    r.name = j.at("name").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.method = parse_method(j.at("method").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.status = j.at("status").get<std::string>();
    r.error = j.at("error").get<std::string>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    for (const auto& s : j.at("restarts")) r.restarts.push_back(record_detail::summary_from(s));
    for (const auto& s : j.at("members")) r.members.push_back(record_detail::summary_from(s));
    for (const auto& [k, v] : j.at("test_auc").items()) r.test_auc[k] = record_detail::num_from(v);
    r.dir = dir;
    return r;
  } catch (const json::exception& e) {
    throw SchemaError("malformed run record in " + dir.string() + ": " + e.what());
  }
}

// Labels for the report rows: the single model, then the two ensemble scores.
inline std::string mode_label(Method m, const std::string& mode) {
  const std::string base(to_string(m));
  if (mode == "ensemble") return "e" + base + "-1";
  if (mode == "scaled_ensemble") return "e" + base + "-2";
  return base;
}

// ---------------------------------------------------------------------------
// Runner

struct RunOptions {
  std::optional<fs::path> data_root;  // defaults to $MINLGAN_DATA_ROOT, then the working directory
  unsigned workers = 0;               // 0 uses the hardware concurrency
  std::ostream* log = nullptr;
};

namespace run_detail {

struct Job {
  bool member = false;
  std::size_t index = 0;
  std::uint64_t seed = 0;
  fs::path dir;
};

inline void write_normalization(const fs::path& path, const Dataset& train) {
  const json j = {{"shift", std::vector<double>(train.normalization.shift.data(),
                                                train.normalization.shift.data() + train.normalization.shift.size())},
                  {"scale", std::vector<double>(train.normalization.scale.data(),
                                                train.normalization.scale.data() + train.normalization.scale.size())},
                  {"columns", train.column_names}};
  io::write_text(path, j.dump(1) + "\n");
}

inline std::string label_name(Label l) { return l == Label::normal ? "normal" : "anomaly"; }

// Groups for boxplots: the raw class when known, otherwise the binary label.
inline std::vector<std::string> score_groups(const Dataset& test) {
  std::vector<std::string> groups;
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    groups.push_back(k < test.classes.size() && !test.classes[k].empty() ? test.classes[k]
                                                                          : label_name(test.labels[k]));
  }
  return groups;
}

inline void write_test_set(const fs::path& path, const Dataset& test) {
  std::string text = "id\tlabel\tgroup\n";
  const auto groups = score_groups(test);
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    text += std::to_string(test.ids[k]) + "\t" + label_name(test.labels[k]) + "\t" + groups[k] + "\n";
  }
  io::write_text(path, text);
}

// Trains one model and persists checkpoint, history and holdout/test scores.
// Test labels are not consulted here.
inline RunSummary run_job(const Job& job, Method method, const Splits& splits, TrainConfig cfg) {
  RunSummary s;
  s.index = job.index;
  s.seed = job.seed;
  cfg.seed = job.seed;
  const auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(job.dir);
  try {
    TrainResult r = train(method, splits, cfg);
    io::write_history(job.dir, r.history);
    checkpoint::save({method, r.best.model, cfg.noise, job.seed, r.best.step}, job.dir / "checkpoint.json");
    const std::uint64_t score_seed = derive_seed(job.seed, 20);
    const std::string name(to_string(method));
    io::write_scores(job.dir / "scores.tsv", splits.test, name,
                     score_model(r.best.model, cfg.noise, splits.test.features, cfg.vae_samples, score_seed).scores);
    io::write_scores(
        job.dir / "holdout_scores.tsv", splits.holdout, name,
        score_model(r.best.model, cfg.noise, splits.holdout.features, cfg.vae_samples, score_seed).scores);
    s.status = "completed";
    s.best_holdout_auc = r.best.holdout_auc;
    s.best_step = r.best.step;
    s.checkpoint = (job.member ? fs::path("ensemble") / std::to_string(job.index) : fs::path(std::to_string(job.index))) /
                   "checkpoint.json";
  } catch (const TrainingDiverged& e) {
    io::write_history(job.dir, e.partial_history());
    s.status = "failed";
    s.error = e.what();
  } catch (const std::exception& e) {
    s.status = "failed";
    s.error = e.what();
  }
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::write_text(job.dir / "summary.tsv", "best_holdout_auc\tbest_step\twall_seconds\tstatus\n" +
                                              io::fmt(s.best_holdout_auc) + "\t" + std::to_string(s.best_step) +
                                              "\t" + io::fmt(s.wall_seconds) + "\t" + s.status + "\n");
  return s;
}

inline std::vector<RunSummary> run_parallel(const std::vector<Job>& jobs, Method method, const Splits& splits,
                                            const TrainConfig& cfg, unsigned workers, std::ostream* log) {
  std::vector<RunSummary> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      out[i] = run_job(jobs[i], method, splits, cfg);
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << (jobs[i].member ? "member " : "restart ") << jobs[i].index << " (seed " << jobs[i].seed
             << "): " << out[i].status;
        if (out[i].status == "completed") *log << ", best holdout AUC " << out[i].best_holdout_auc;
        else *log << ": " << out[i].error;
        *log << " [" << out[i].wall_seconds << " s]\n";
      }
    }
  };
  if (workers <= 1 || jobs.size() <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(workers, jobs.size()); ++w) pool.emplace_back(work);
  }
  return out;
}

}  // namespace run_detail

// record.json inside the run directory, plus one appended line in the output directory's
// registry.tsv. Only the thread driving run_experiment writes either file.
inline void save_record(const RunRecord& r) {
  io::write_text(r.dir / "record.json", to_json(r).dump(1) + "\n");
  const fs::path registry = r.dir.parent_path() / "registry.tsv";
  const bool fresh = !fs::exists(registry);
  std::ofstream out(registry, std::ios::app);
  if (!out) throw IoError("cannot append to " + registry.string());
  if (fresh) out << "config_hash\tname\tmethod\tseed\tstatus\tsingle\tensemble\tscaled_ensemble\twall_seconds\n";
  auto auc = [&](const char* mode) {
    auto it = r.test_auc.find(mode);
    return it == r.test_auc.end() ? std::string("-") : io::fmt(it->second);
  };
  out << r.config_hash << '\t' << r.name << '\t' << to_string(r.method) << '\t' << r.seed << '\t' << r.status << '\t'
      << auc("single") << '\t' << auc("ensemble") << '\t' << auc("scaled_ensemble") << '\t' << io::fmt(r.wall_seconds)
      << '\n';
}

// Trains `restarts` models and, for gan/minlgan, `ensemble_n` further members; then
// scores the test split once per mode from the persisted score files. A run whose data
// cannot be loaded is recorded as failed and the error rethrown; a run in which some
// model diverged is returned with status "failed" and its partial artifacts on disk.
inline RunRecord run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.name = cfg.name.empty() ? cfg.dataset.kind : cfg.name;
  rec.config_hash = config_hash(cfg);
  rec.method = cfg.method;
  rec.seed = cfg.train.seed;
  rec.dir = fs::path(cfg.output_dir) / rec.config_hash;
  fs::create_directories(rec.dir);
  io::write_text(rec.dir / "config.json", to_json(cfg).dump(1) + "\n");

  Splits splits;
  try {
    splits = split(load_dataset(cfg.dataset, opt.data_root.value_or(data_root_from_env())), cfg.split);
  } catch (const std::exception& e) {
    rec.status = "failed";
    rec.error = e.what();
    save_record(rec);
    throw;
  }
  run_detail::write_normalization(rec.dir / "normalization.json", splits.train);
  run_detail::write_test_set(rec.dir / "test_set.tsv", splits.test);
  if (opt.log)
    *opt.log << rec.name << " [" << rec.config_hash << "]: train " << splits.train.size() << ", holdout "
             << splits.holdout.size() << " (" << splits.holdout.count(Label::anomaly) << " anomalies), test "
             << splits.test.size() << " (" << splits.test.count(Label::anomaly) << " anomalies), dim "
             << splits.train.dim() << "\n";

  std::vector<run_detail::Job> jobs;
  for (long i = 0; i < cfg.restarts; ++i)
    jobs.push_back({false, static_cast<std::size_t>(i), cfg.train.seed + static_cast<std::uint64_t>(i),
                    rec.dir / std::to_string(i)});
  for (long j = 0; j < cfg.ensemble_n; ++j)
    jobs.push_back({true, static_cast<std::size_t>(j), cfg.train.seed + kMemberSeedOffset + static_cast<std::uint64_t>(j),
                    rec.dir / "ensemble" / std::to_string(j)});
  const unsigned workers = opt.workers ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
  auto results = run_detail::run_parallel(jobs, cfg.method, splits, cfg.train, workers, opt.log);
  rec.restarts.assign(results.begin(), results.begin() + cfg.restarts);
  rec.members.assign(results.begin() + cfg.restarts, results.end());

  for (const auto& s : results)
    if (s.status != "completed") {
      rec.status = "failed";
      rec.error = s.error;
    }

  if (rec.status == "completed") {
    // Metrics come from the persisted score files only.
    const auto labels = splits.test.label_ints();
    std::string metrics = "mode\ttest_auc\n";
    std::vector<double> singles;
    for (auto& s : rec.restarts) {
      const fs::path dir = rec.dir / std::to_string(s.index);
      const RocResult r = roc(io::read_scores(dir / "scores.tsv", splits.test.ids), labels);
      io::write_roc(dir / "roc.tsv", r);
      io::write_text(dir / "metrics.tsv", "mode\ttest_auc\nsingle\t" + io::fmt(r.auc) + "\n");
      s.test_auc = r.auc;
      singles.push_back(r.auc);
      metrics += "restart/" + std::to_string(s.index) + "\t" + io::fmt(r.auc) + "\n";
    }
    const double mean = std::accumulate(singles.begin(), singles.end(), 0.0) / static_cast<double>(singles.size());
    double var = 0.0;
    for (double a : singles) var += (a - mean) * (a - mean);
    rec.test_auc["single"] = mean;
    rec.test_auc["single_std"] = std::sqrt(var / static_cast<double>(singles.size()));

    if (!rec.members.empty()) {
      std::vector<Vector> test_logits, hold_logits;
      for (auto& s : rec.members) {
        const fs::path dir = rec.dir / "ensemble" / std::to_string(s.index);
        test_logits.push_back(-io::read_scores(dir / "scores.tsv", splits.test.ids));
        hold_logits.push_back(-io::read_scores(dir / "holdout_scores.tsv", splits.holdout.ids));
        s.test_auc = roc(Vector(-test_logits.back()), labels).auc;
        metrics += "member/" + std::to_string(s.index) + "\t" + io::fmt(s.test_auc) + "\n";
      }
      const EnsembleCalibration cal = ensemble::calibrate(hold_logits);
      std::string cal_text = "member\tmax\tmin\n";
      for (std::size_t i = 0; i < cal.members.size(); ++i)
        cal_text += std::to_string(i) + "\t" + io::fmt(cal.members[i].max) + "\t" + io::fmt(cal.members[i].min) + "\n";
      io::write_text(rec.dir / "ensemble" / "calibration.tsv", cal_text);
      const Vector plain = ensemble::plain(test_logits);
      const Vector scaled = ensemble::scaled(test_logits, cal, opt.log);
      io::write_scores(rec.dir / "ensemble" / "scores_plain.tsv", splits.test, mode_label(rec.method, "ensemble"),
                       plain);
      io::write_scores(rec.dir / "ensemble" / "scores_scaled.tsv", splits.test,
                       mode_label(rec.method, "scaled_ensemble"), scaled);
      const RocResult rp = roc(io::read_scores(rec.dir / "ensemble" / "scores_plain.tsv", splits.test.ids), labels);
      const RocResult rs = roc(io::read_scores(rec.dir / "ensemble" / "scores_scaled.tsv", splits.test.ids), labels);
      io::write_roc(rec.dir / "ensemble" / "roc_plain.tsv", rp);
      io::write_roc(rec.dir / "ensemble" / "roc_scaled.tsv", rs);
      rec.test_auc["ensemble"] = rp.auc;
      rec.test_auc["scaled_ensemble"] = rs.auc;
    }
    for (const char* mode : {"single", "single_std", "ensemble", "scaled_ensemble"})
      if (rec.test_auc.count(mode)) metrics += std::string(mode) + "\t" + io::fmt(rec.test_auc[mode]) + "\n";
    io::write_text(rec.dir / "metrics.tsv", metrics);

    std::vector<svg::Curve> curves;
    for (const auto& r : rec.restarts)
      curves.push_back({"restart " + std::to_string(r.index), io::read_roc(rec.dir / std::to_string(r.index) / "roc.tsv")});
    if (!rec.members.empty()) {
      curves.push_back({mode_label(rec.method, "ensemble"), io::read_roc(rec.dir / "ensemble" / "roc_plain.tsv")});
      curves.push_back(
          {mode_label(rec.method, "scaled_ensemble"), io::read_roc(rec.dir / "ensemble" / "roc_scaled.tsv")});
    }
    svg::roc_overlay("ROC: " + rec.name + " (" + std::string(to_string(rec.method)) + ")", curves)
        .save(rec.dir / "roc.svg");
  }

  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_record(rec);
  if (opt.log) {
    *opt.log << rec.name << ": " << rec.status;
    for (const auto& [k, v] : rec.test_auc) *opt.log << "  " << k << "=" << v;
    *opt.log << "  (" << rec.wall_seconds << " s)\n";
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Report

// Cross-method AUC table (rows: methods, columns: experiments) plus ROC overlays and
// per-class score boxplots for every record. Returns the files written.
inline std::vector<fs::path> emit_report(const std::vector<RunRecord>& records, const fs::path& out_dir) {
  std::vector<const RunRecord*> done;
  for (const auto& r : records)
    if (r.status == "completed") done.push_back(&r);
  if (done.empty()) throw InvalidArgument("report needs at least one completed run");
  fs::create_directories(out_dir);
  std::vector<fs::path> written;

  static const std::vector<std::string> row_order = {"minlgan", "eminlgan-1", "eminlgan-2", "gan",
                                                     "egan-1",  "egan-2",     "ae",         "vae"};
  std::vector<std::string> columns;
  std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
  for (const auto* r : done) {
    if (std::find(columns.begin(), columns.end(), r->name) == columns.end()) columns.push_back(r->name);
    for (const char* mode : {"single", "ensemble", "scaled_ensemble"})
      if (auto it = r->test_auc.find(mode); it != r->test_auc.end())
        cells[{mode_label(r->method, mode), r->name}].push_back(it->second);
  }
  auto cell = [&](const std::string& row, const std::string& col) -> std::string {
    auto it = cells.find({row, col});
    if (it == cells.end()) return "-";
    const double mean = std::accumulate(it->second.begin(), it->second.end(), 0.0) / it->second.size();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", mean);
    return buf;
  };
  std::string tsv = "method", md = "| method |", rule = "|---|";
  for (const auto& c : columns) {
    tsv += "\t" + c;
    md += " " + c + " |";
    rule += "---|";
  }
  tsv += "\n";
  md += "\n" + rule + "\n";
  for (const auto& row : row_order) {
    bool any = false;
    for (const auto& c : columns) any = any || cells.count({row, c});
    if (!any) continue;
    tsv += row;
    md += "| " + row + " |";
    for (const auto& c : columns) {
      tsv += "\t" + cell(row, c);
      md += " " + cell(row, c) + " |";
    }
    tsv += "\n";
    md += "\n";
  }
  io::write_text(out_dir / "table.tsv", tsv);
  io::write_text(out_dir / "table.md", md);
  written.push_back(out_dir / "table.tsv");
  written.push_back(out_dir / "table.md");

  for (const auto* r : done) {
    const std::string stem = r->name + "_" + std::string(to_string(r->method)) + "_" + r->config_hash.substr(0, 8);
    std::vector<svg::Curve> curves;
    curves.push_back({mode_label(r->method, "single") + " (restart 0)", io::read_roc(r->dir / "0" / "roc.tsv")});
    if (!r->members.empty()) {
      curves.push_back({mode_label(r->method, "ensemble"), io::read_roc(r->dir / "ensemble" / "roc_plain.tsv")});
      curves.push_back({mode_label(r->method, "scaled_ensemble"), io::read_roc(r->dir / "ensemble" / "roc_scaled.tsv")});
    }
    const fs::path roc_path = out_dir / ("roc_" + stem + ".svg");
    svg::roc_overlay("ROC: " + r->name, curves).save(roc_path);
    written.push_back(roc_path);

    // Per-class scores of restart 0.
    const auto test_rows = io::read_tsv(r->dir / "test_set.tsv");
    std::vector<std::size_t> ids;
    std::vector<std::string> groups;
    for (const auto& row : test_rows) {
      ids.push_back(static_cast<std::size_t>(std::stoull(row.at(0))));
      groups.push_back(row.at(2));
    }
    const Vector scores = io::read_scores(r->dir / "0" / "scores.tsv", ids);
    const auto boxes = boxstats(scores, groups);
    std::string box_text = "group\tcount\tmin\tq1\tmedian\tq3\tmax\n";
    for (const auto& b : boxes)
      box_text += b.group + "\t" + std::to_string(b.count) + "\t" + io::fmt(b.min) + "\t" + io::fmt(b.q1) + "\t" +
                  io::fmt(b.median) + "\t" + io::fmt(b.q3) + "\t" + io::fmt(b.max) + "\n";
    io::write_text(out_dir / ("boxstats_" + stem + ".tsv"), box_text);
    const fs::path box_path = out_dir / ("box_" + stem + ".svg");
    svg::boxplot("Scores by class: " + r->name + " (" + std::string(to_string(r->method)) + ")", boxes).save(box_path);
    written.push_back(out_dir / ("boxstats_" + stem + ".tsv"));
    written.push_back(box_path);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Stability of the ensemble AUC in the number of members.

struct StabilityCurves {
  std::vector<StabilityPoint> plain;
  std::vector<StabilityPoint> scaled;
};

inline StabilityCurves emit_stability(const RunRecord& r, std::size_t trials, std::uint64_t seed,
                                      const fs::path& out_dir) {
  if (r.members.empty()) throw InvalidArgument("stability needs a run with ensemble members");
  const auto test_rows = io::read_tsv(r.dir / "test_set.tsv");
  std::vector<std::size_t> ids;
  std::vector<int> labels;
  for (const auto& row : test_rows) {
    ids.push_back(static_cast<std::size_t>(std::stoull(row.at(0))));
    labels.push_back(row.at(1) == "anomaly");
  }
  std::vector<ScoreVector> members;
  std::vector<Vector> hold_logits;
  for (const auto& m : r.members) {
    const fs::path dir = r.dir / "ensemble" / std::to_string(m.index);
    members.push_back({io::read_scores(dir / "scores.tsv", ids), std::string(to_string(r.method))});
    const auto hold_rows = io::read_tsv(dir / "holdout_scores.tsv");
    Vector h(static_cast<Eigen::Index>(hold_rows.size()));
    for (std::size_t i = 0; i < hold_rows.size(); ++i)
      h(static_cast<Eigen::Index>(i)) = -io::to_double(hold_rows[i].at(3), dir / "holdout_scores.tsv");
    hold_logits.push_back(h);
  }
  StabilityCurves c;
  c.plain = stability_curve(members, labels, EnsembleMode::plain, std::nullopt, trials, seed);
  c.scaled = stability_curve(members, labels, EnsembleMode::scaled, ensemble::calibrate(hold_logits), trials, seed);
  fs::create_directories(out_dir);
  for (const auto& [name, curve] : {std::pair{"plain", &c.plain}, std::pair{"scaled", &c.scaled}}) {
    std::string text = "k\tmean_auc\tstd_auc\tsubsets\n";
    for (const auto& p : *curve)
      text += std::to_string(p.k) + "\t" + io::fmt(p.mean_auc) + "\t" + io::fmt(p.std_auc) + "\t" +
              std::to_string(p.subsets) + "\n";
    io::write_text(out_dir / (std::string("stability_") + name + ".tsv"), text);
  }
  svg::stability_plot("Ensemble AUC vs members: " + r.name,
                      {mode_label(r.method, "ensemble"), mode_label(r.method, "scaled_ensemble")},
                      {c.plain, c.scaled})
      .save(out_dir / "stability.svg");
  return c;
}

// ---------------------------------------------------------------------------
// Toy figure: training data with generator samples, and the discriminator logit field.

inline Normalization load_normalization(const fs::path& run_dir) {
  try {
    const json j = json::parse(io::read_text(run_dir / "normalization.json"));
    const auto shift = j.at("shift").get<std::vector<double>>();
    const auto scale = j.at("scale").get<std::vector<double>>();
    if (shift.size() != scale.size()) throw SchemaError("normalization shift/scale size mismatch");
    return {Eigen::Map<const Vector>(shift.data(), static_cast<Eigen::Index>(shift.size())),
            Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size()))};
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed normalization.json: ") + e.what());
  }
}

inline fs::path emit_toy_figure(const RunRecord& r, int grid, const fs::path& out_path,
                                const std::optional<fs::path>& data_root = std::nullopt) {
  const Normalization norm = load_normalization(r.dir);
  if (norm.shift.size() != 2)
    throw InvalidArgument("toy figure needs 2-D data; this run has " + std::to_string(norm.shift.size()) +
                          " features");
  if (!is_adversarial(r.method)) throw InvalidArgument("toy figure needs a gan or minlgan run");
  if (grid < 2) throw InvalidArgument("toy figure grid must be at least 2");
  if (r.restarts.empty() || r.restarts.front().status != "completed")
    throw InvalidArgument("toy figure needs a completed restart 0");
  const ExperimentConfig cfg = load_config(r.dir / "config.json");
  const Splits splits = split(load_dataset(cfg.dataset, data_root.value_or(data_root_from_env())), cfg.split);
  const Checkpoint ck = checkpoint::load(r.dir / r.restarts.front().checkpoint);
  const auto& nets = std::get<AdversarialNets>(ck.model);

  const Matrix real = norm.invert(splits.train.features);
  Rng rng(derive_seed(r.seed, 30));
  const Matrix fake = norm.invert(generate(nets.g, sample_prior(500, nets.g.latent_dim(), rng)));
  double x0 = real.col(0).minCoeff(), x1 = real.col(0).maxCoeff();
  double y0 = real.col(1).minCoeff(), y1 = real.col(1).maxCoeff();
  const double pad = 0.5;
  x0 -= pad, x1 += pad, y0 -= pad, y1 += pad;

  svg::Document doc(980, 490);
  svg::Axes left(doc, 50, 40, 400, 400, x0, x1, y0, y1);
  left.frame("normal data and generator samples", "x1", "x2");
  for (Eigen::Index i = 0; i < real.rows(); ++i) {
    const double x = real(i, 0), y = real(i, 1);
    if (x >= x0 && x <= x1 && y >= y0 && y <= y1) doc.circle(left.px(x), left.py(y), 1.6, "#2ca02c", 0.6);
  }
  for (Eigen::Index i = 0; i < fake.rows(); ++i) {
    const double x = fake(i, 0), y = fake(i, 1);
    if (x >= x0 && x <= x1 && y >= y0 && y <= y1) doc.circle(left.px(x), left.py(y), 1.6, "#1f3fb4", 0.7);
  }

  doc.circle(left.px(x0) + 12, left.py(y1) + 14, 3, "#2ca02c");
  doc.text(left.px(x0) + 20, left.py(y1) + 18, "normal data", 11);
  doc.circle(left.px(x0) + 12, left.py(y1) + 30, 3, "#1f3fb4");
  doc.text(left.px(x0) + 20, left.py(y1) + 34, "generator samples", 11);

  svg::Axes right(doc, 530, 40, 400, 400, x0, x1, y0, y1);
  Matrix cells(static_cast<Eigen::Index>(grid) * grid, 2);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j)
      cells.row(i * grid + j) << x0 + (x1 - x0) * (j + 0.5) / grid, y0 + (y1 - y0) * (i + 0.5) / grid;
  const Vector field = logits(nets.d, norm.apply(cells));
  const double lo = field.minCoeff(), hi = std::max(field.maxCoeff(), lo + 1e-12);
  const double cw = 400.0 / grid;
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const double v = field(i * grid + j);
      const double t = (v - lo) / (hi - lo);
      char color[16];
      std::snprintf(color, sizeof color, "#%02x%02x%02x", static_cast<int>(255 * t), static_cast<int>(80 + 100 * t),
                    static_cast<int>(255 * (1 - t)));
      doc.rect(right.px(x0) + j * cw, right.py(y0) - (i + 1) * cw, cw + 0.3, cw + 0.3, color);
      // Zero-logit contour: mark cells whose right or upper neighbour changes sign.
      const bool cross = (j + 1 < grid && (v > 0) != (field(i * grid + j + 1) > 0)) ||
                         (i + 1 < grid && (v > 0) != (field((i + 1) * grid + j) > 0));
      if (cross) doc.rect(right.px(x0) + j * cw, right.py(y0) - (i + 1) * cw, cw, cw, "black");
    }
  right.frame("discriminator logit (black: logit 0)", "x1", "x2");
  fs::create_directories(out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path());
  doc.save(out_path);
  return out_path;
}

// ---------------------------------------------------------------------------
// Applying saved models to new data.

// Whitespace-, comma- or tab-separated numeric rows in the model's feature space (after
// categorical encoding, before normalization). A non-numeric first line is a header.
inline Matrix read_feature_file(const fs::path& path, Eigen::Index dim) {
  std::istringstream in(io::read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    for (char& c : line)
      if (c == ',' || c == '\t' || c == ';') c = ' ';
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    bool numeric = true;
    while (ls >> tok) {
      double v;
      if (!detail::parse_double(tok, v)) numeric = false;
      row.push_back(v);
    }
    if (row.empty()) continue;
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw SchemaError("non-numeric row in " + path.string() + ": " + line);
    }
    first = false;
    if (static_cast<Eigen::Index>(row.size()) != dim)
      throw SchemaError("expected " + std::to_string(dim) + " columns in " + path.string() + ", got " +
                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  Matrix x(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  return x;
}

// Scores of every row of `input` under restart `restart` and, when present, both ensemble
// modes. Writes a TSV with one column per mode and returns the path.
inline fs::path score_file(const RunRecord& r, const fs::path& input, const fs::path& out_path, std::size_t restart = 0) {
  const Normalization norm = load_normalization(r.dir);
  const Matrix x = norm.apply(read_feature_file(input, norm.shift.size()));
  if (restart >= r.restarts.size() || r.restarts[restart].status != "completed")
    throw InvalidArgument("restart " + std::to_string(restart) + " has no completed checkpoint");
  const ExperimentConfig cfg = load_config(r.dir / "config.json");
  const Checkpoint ck = checkpoint::load(r.dir / r.restarts[restart].checkpoint);
  std::vector<std::pair<std::string, Vector>> columns;
  columns.emplace_back(mode_label(r.method, "single"),
                       score_model(ck.model, ck.noise, x, cfg.train.vae_samples, derive_seed(ck.seed, 20)).scores);
  if (!r.members.empty()) {
    std::vector<Discriminator> members;
    for (const auto& m : r.members)
      members.push_back(std::get<AdversarialNets>(checkpoint::load(r.dir / m.checkpoint).model).d);
    std::vector<Vector> hold;
    const auto cal_rows = io::read_tsv(r.dir / "ensemble" / "calibration.tsv");
    EnsembleCalibration cal;
    for (const auto& row : cal_rows)
      cal.members.push_back({io::to_double(row.at(1), "calibration.tsv"), io::to_double(row.at(2), "calibration.tsv")});
    columns.emplace_back(mode_label(r.method, "ensemble"), score_ensemble(members, x).scores);
    columns.emplace_back(mode_label(r.method, "scaled_ensemble"), score_scaled_ensemble(members, cal, x).scores);
  }
  std::string text = "row";
  for (const auto& [name, _] : columns) text += "\t" + name;
  text += "\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    text += std::to_string(i);
    for (const auto& [_, v] : columns) text += "\t" + io::fmt(v(i));
    text += "\n";
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  io::write_text(out_path, text);
  return out_path;
}

}  // namespace minlgan
