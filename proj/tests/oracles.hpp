#pragma once

// Reference computations used by the tests. None of these call into the code paths
// they are used to check.

#include "minlgan/nets.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

using minlgan::LayerParams;
using minlgan::Vector;

// Central differences of f over the flattened parameters.
inline Vector numeric_gradient(const std::function<double(const LayerParams&)>& f, const LayerParams& at,
                               double h = 1e-5) {
  Vector flat = minlgan::flatten(at);
  Vector grad(flat.size());
  LayerParams probe = at;
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double orig = flat(i);
    flat(i) = orig + h;
    minlgan::unflatten(flat, probe);
    const double up = f(probe);
    flat(i) = orig - h;
    minlgan::unflatten(flat, probe);
    const double down = f(probe);
    flat(i) = orig;
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

// ||a - b|| / max(||a||, ||b||)
inline double relative_error(const Vector& a, const Vector& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

// Mann-Whitney statistic by brute force over all (anomaly, normal) pairs.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Composite Simpson rule on [a, b] with n (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double normal_pdf(double x, double mean, double sd) {
  const double u = (x - mean) / sd;
  return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

// Distance from p to the upper moon arc (unit half circle, y >= 0).
inline double upper_arc_distance(double x, double y) {
  if (y >= 0.0) return std::abs(std::hypot(x, y) - 1.0);
  return std::min(std::hypot(x - 1.0, y), std::hypot(x + 1.0, y));
}

// Distance from p to the lower moon arc (unit half circle centred (1, 0.5), y <= 0.5).
inline double lower_arc_distance(double x, double y) {
  if (y <= 0.5) return std::abs(std::hypot(x - 1.0, y - 0.5) - 1.0);
  return std::min(std::hypot(x, y - 0.5), std::hypot(x - 2.0, y - 0.5));
}

// Linear-interpolation quantile by explicit sort and index.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t i = static_cast<std::size_t>(pos);
  if (i + 1 >= v.size()) return v.back();
  return v[i] * (1.0 - (pos - static_cast<double>(i))) + v[i + 1] * (pos - static_cast<double>(i));
}

}  // namespace oracle
