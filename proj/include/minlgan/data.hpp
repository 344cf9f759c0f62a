#pragma once

#include "minlgan/error.hpp"
#include "minlgan/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace minlgan {

// Anomalies are the positive class throughout.
enum class Label : std::uint8_t { normal = 0, anomaly = 1 };

struct Sample {
  Vector features;
  Label label = Label::normal;
};

// Per-feature affine map x' = (x - shift) / scale.
struct Normalization {
  Vector shift;
  Vector scale;

  static Normalization identity(Eigen::Index dim) {
    return {Vector::Zero(dim), Vector::Ones(dim)};
  }

  // z-scoring statistics of the rows of `x`; constant columns keep scale 1.
  static Normalization fit(const Matrix& x) {
    if (x.rows() == 0) throw InvalidArgument("cannot fit normalization on zero rows");
    Normalization n;
    n.shift = x.colwise().mean().transpose();
    n.scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double var = (x.col(j).array() - n.shift(j)).square().mean();
      const double sd = std::sqrt(var);
      n.scale(j) = (sd > 1e-12 * std::max(1.0, std::abs(n.shift(j)))) ? sd : 1.0;
    }
    return n;
  }

  Matrix apply(const Matrix& x) const {
    return (x.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
  }

  Matrix invert(const Matrix& x) const {
    return (x.array().rowwise() * scale.transpose().array()).matrix().rowwise() + shift.transpose();
  }

  // Composition: first `inner`, then this.
  Normalization after(const Normalization& inner) const {
    return {inner.shift + (shift.array() * inner.scale.array()).matrix(),
            (inner.scale.array() * scale.array()).matrix()};
  }
};

// Feature matrix with one row per sample. Immutable by convention once built.
struct Dataset {
  Matrix features;
  std::vector<Label> labels;
  // Original row index in the source the sample came from; used as sample id.
  std::vector<std::size_t> ids;
  // Source class tag per row (e.g. "4" for covertype class 4). May be empty.
  std::vector<std::string> classes;
  std::vector<std::string> column_names;
  // Transform already applied to `features`; identity for raw data.
  Normalization normalization;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), l));
  }

  Sample sample(Eigen::Index i) const {
    return {features.row(i).transpose(), labels[static_cast<std::size_t>(i)]};
  }

  std::vector<int> label_ints() const {
    std::vector<int> out(labels.size());
    std::transform(labels.begin(), labels.end(), out.begin(),
                   [](Label l) { return l == Label::anomaly ? 1 : 0; });
    return out;
  }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()), dim());
    out.labels.reserve(rows.size());
    out.ids.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      out.features.row(static_cast<Eigen::Index>(k)) = features.row(static_cast<Eigen::Index>(rows[k]));
      out.labels.push_back(labels[rows[k]]);
      out.ids.push_back(ids[rows[k]]);
      if (!classes.empty()) out.classes.push_back(classes[rows[k]]);
    }
    out.column_names = column_names;
    out.normalization = normalization;
    return out;
  }

  // Rows with the given label, in order.
  std::vector<std::size_t> rows_with(Label l) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == l) out.push_back(i);
    return out;
  }

  void validate() const {
    const auto n = static_cast<std::size_t>(size());
    if (labels.size() != n || ids.size() != n || (!classes.empty() && classes.size() != n))
      throw ShapeError("dataset columns disagree on the number of rows");
    if (normalization.scale.size() != dim() || normalization.shift.size() != dim())
      throw ShapeError("normalization dimension does not match the data");
    if ((normalization.scale.array() <= 0.0).any())
      throw InvalidArgument("normalization scale must be strictly positive");
  }
};

namespace detail {

inline Dataset make_dataset(Matrix x, Label label) {
  Dataset ds;
  const auto n = static_cast<std::size_t>(x.rows());
  ds.normalization = Normalization::identity(x.cols());
  ds.features = std::move(x);
  ds.labels.assign(n, label);
  ds.ids.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.ids[i] = i;
  return ds;
}

inline void check_noise(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("noise_sigma must be a finite non-negative number");
}

}  // namespace detail

// n points on the unit circle plus isotropic Gaussian noise.
inline Dataset make_circle(long n, double noise_sigma, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("make_circle needs n >= 1");
  detail::check_noise(noise_sigma);
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, 2);
  for (long i = 0; i < n; ++i) {
    const double t = angle(rng);
    x(i, 0) = std::cos(t);
    x(i, 1) = std::sin(t);
  }
  if (noise_sigma > 0.0)
    for (long i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) x(i, j) += noise_sigma * noise(rng);
  auto ds = detail::make_dataset(std::move(x), Label::normal);
  ds.column_names = {"x", "y"};
  return ds;
}

// Two interleaving half circles: the upper arc centred at the origin and the lower arc
// centred at (1, 0.5). The first ceil(n/2) rows lie on the upper arc.
inline Dataset make_moons(long n, double noise_sigma, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("make_moons needs n >= 2");
  detail::check_noise(noise_sigma);
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  const long upper = n - n / 2;
  Matrix x(n, 2);
  for (long i = 0; i < n; ++i) {
    const double t = angle(rng);
    if (i < upper) {
      x(i, 0) = std::cos(t);
      x(i, 1) = std::sin(t);
    } else {
      x(i, 0) = 1.0 - std::cos(t);
      x(i, 1) = 0.5 - std::sin(t);
    }
  }
  if (noise_sigma > 0.0)
    for (long i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) x(i, j) += noise_sigma * noise(rng);
  auto ds = detail::make_dataset(std::move(x), Label::normal);
  ds.column_names = {"x", "y"};
  return ds;
}

// Uniform points in [low, high]^dim, all labelled anomaly.
inline Dataset make_uniform_box(long n, Eigen::Index dim, double low, double high,
                                std::uint64_t seed) {
  if (n < 1 || dim < 1 || !(high > low))
    throw InvalidArgument("make_uniform_box needs n >= 1, dim >= 1 and high > low");
  Rng rng(seed);
  return detail::make_dataset(uniform(n, dim, low, high, rng), Label::anomaly);
}

// Row-wise concatenation; ids of `b` are offset past those of `a`.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw ShapeError("concat: dimension mismatch");
  Dataset out;
  out.features.resize(a.size() + b.size(), a.dim());
  out.features << a.features, b.features;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  std::size_t offset = 0;
  for (auto id : a.ids) offset = std::max(offset, id + 1);
  out.ids = a.ids;
  for (auto id : b.ids) out.ids.push_back(id + offset);
  if (!a.classes.empty() || !b.classes.empty()) {
    auto tags = [](const Dataset& d) {
      if (!d.classes.empty()) return d.classes;
      std::vector<std::string> t;
      for (auto l : d.labels) t.push_back(l == Label::anomaly ? "anomaly" : "normal");
      return t;
    };
    out.classes = tags(a);
    auto tb = tags(b);
    out.classes.insert(out.classes.end(), tb.begin(), tb.end());
  }
  out.column_names = a.column_names;
  out.normalization = a.normalization;
  return out;
}

// Keep at most `max_rows` rows of class `label` (seeded choice, original order kept).
inline Dataset subsample(const Dataset& ds, Label label, std::size_t max_rows, std::uint64_t seed) {
  auto rows = ds.rows_with(label);
  if (rows.size() <= max_rows) return ds;
  Rng rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(max_rows);
  std::vector<bool> keep(static_cast<std::size_t>(ds.size()), true);
  for (auto r : ds.rows_with(label)) keep[r] = false;
  for (auto r : rows) keep[r] = true;
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (keep[i]) selected.push_back(i);
  return ds.subset(selected);
}

struct SplitSpec {
  double train_fraction = 0.8;
  double holdout_fraction = 0.1;
  // Share of anomalies moved from test into holdout. nullopt (the default) mirrors the
  // test contamination rate in the holdout. 0 keeps the holdout purely normal.
  std::optional<double> holdout_anomaly_fraction = std::nullopt;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
      throw InvalidArgument("train_fraction must lie in (0, 1]");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
      throw InvalidArgument("holdout_fraction must lie in (0, 1)");
    if (train_fraction + holdout_fraction > 1.0 + 1e-12)
      throw InvalidArgument("train_fraction + holdout_fraction must not exceed 1");
    if (holdout_anomaly_fraction && !(*holdout_anomaly_fraction >= 0.0 && *holdout_anomaly_fraction < 1.0))
      throw InvalidArgument("holdout_anomaly_fraction must lie in [0, 1)");
  }
};

struct Splits {
  Dataset train;
  Dataset holdout;
  Dataset test;
};

// Normal-only train and holdout drawn by a seeded shuffle; test gets the remaining
// normals and every anomaly not moved to the holdout. Normalization is fit on train.
inline Splits split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  ds.validate();
  auto normals = ds.rows_with(Label::normal);
  auto anomalies = ds.rows_with(Label::anomaly);
  if (normals.empty()) throw EmptyClassError("split: dataset has no normal samples");
  if (anomalies.empty()) throw EmptyClassError("split: dataset has no anomalies; test AUC undefined");

  Rng rng(spec.seed);
  std::shuffle(normals.begin(), normals.end(), rng);
  std::shuffle(anomalies.begin(), anomalies.end(), rng);

  const auto n = static_cast<long long>(normals.size());
  const long long n_train = std::clamp<long long>(std::llround(spec.train_fraction * static_cast<double>(n)), 1, n);
  const long long n_hold = std::min(std::llround(spec.holdout_fraction * static_cast<double>(n)), n - n_train);
  const long long n_rest = n - n_train - n_hold;

  const auto a = static_cast<long long>(anomalies.size());
  long long k = 0;
  if (spec.holdout_anomaly_fraction) {
    k = std::llround(*spec.holdout_anomaly_fraction * static_cast<double>(a));
  } else if (n_hold > 0) {
    k = std::llround(static_cast<double>(a) * static_cast<double>(n_hold) /
                     static_cast<double>(n_hold + n_rest));
    if (a >= 2) k = std::max<long long>(k, 1);
  }
  k = std::clamp<long long>(k, 0, a - 1);

  auto take = [](const std::vector<std::size_t>& v, long long from, long long to) {
    std::vector<std::size_t> out(v.begin() + from, v.begin() + to);
    std::sort(out.begin(), out.end());
    return out;
  };
  auto train_rows = take(normals, 0, n_train);
  auto hold_rows = take(normals, n_train, n_train + n_hold);
  auto test_rows = take(normals, n_train + n_hold, n);
  auto hold_anoms = take(anomalies, 0, k);
  auto test_anoms = take(anomalies, k, a);
  hold_rows.insert(hold_rows.end(), hold_anoms.begin(), hold_anoms.end());
  test_rows.insert(test_rows.end(), test_anoms.begin(), test_anoms.end());
  std::sort(hold_rows.begin(), hold_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  Splits s{ds.subset(train_rows), ds.subset(hold_rows), ds.subset(test_rows)};
  const Normalization norm = Normalization::fit(s.train.features);
  for (Dataset* part : {&s.train, &s.holdout, &s.test}) {
    part->features = norm.apply(part->features);
    part->normalization = norm.after(ds.normalization);
  }
  return s;
}

}  // namespace minlgan
