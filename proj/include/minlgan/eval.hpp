#pragma once

#include "minlgan/error.hpp"
#include "minlgan/random.hpp"
#include "minlgan/score.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace minlgan {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

// Threshold sweep over distinct scores in descending order; tied scores form one step.
// labels: 1 = anomaly (positive), 0 = normal.
inline RocResult roc(const Vector& scores, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) throw ShapeError("roc: scores and labels differ in length");
  if (!scores.allFinite()) throw InvalidArgument("roc: scores must be finite");
  const auto positives = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto negatives = static_cast<double>(labels.size()) - positives;
  if (positives == 0.0 || negatives == 0.0) throw EmptyClassError("roc needs at least one anomaly and one normal");

  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores(a) > scores(b); });

  RocResult r;
  r.points.push_back({0.0, 0.0});
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores(order[i]);
    for (; i < order.size() && scores(order[i]) == s; ++i) (labels[order[i]] == 1 ? tp : fp) += 1.0;
    r.points.push_back({fp / negatives, tp / positives});
  }
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    const auto& a = r.points[i - 1];
    const auto& b = r.points[i];
    r.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return r;
}

inline RocResult roc(const ScoreVector& scores, const std::vector<int>& labels) { return roc(scores.scores, labels); }

struct BoxStats {
  std::string group;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Quantile of sorted data by linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Five-number summary of the scores of each requested group.
inline std::vector<BoxStats> boxstats(const Vector& scores, const std::vector<std::string>& group_labels,
                                      const std::vector<std::string>& groups) {
  if (static_cast<std::size_t>(scores.size()) != group_labels.size())
    throw ShapeError("boxstats: scores and group labels differ in length");
  std::vector<BoxStats> out;
  for (const auto& g : groups) {
    std::vector<double> v;
    for (std::size_t i = 0; i < group_labels.size(); ++i)
      if (group_labels[i] == g) v.push_back(scores(static_cast<Eigen::Index>(i)));
    if (v.empty()) throw InvalidArgument("boxstats: group '" + g + "' is empty");
    std::sort(v.begin(), v.end());
    out.push_back({g, v.front(), quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75),
                   v.back(), v.size()});
  }
  return out;
}

// Every group present in `group_labels`, in lexicographic order.
inline std::vector<BoxStats> boxstats(const Vector& scores, const std::vector<std::string>& group_labels) {
  std::vector<std::string> groups(group_labels);
  std::sort(groups.begin(), groups.end());
  groups.erase(std::unique(groups.begin(), groups.end()), groups.end());
  return boxstats(scores, group_labels, groups);
}

enum class EnsembleMode { plain, scaled };

struct StabilityPoint {
  std::size_t k = 0;
  double mean_auc = 0.0;
  double std_auc = 0.0;
  std::size_t subsets = 0;
};

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

// All k-subsets of {0..n-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> c(k);
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    out.push_back(c);
    std::size_t i = k;
    while (i > 0 && c[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++c[i - 1];
    for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

}  // namespace detail

// AUC of k-member sub-ensembles for k = 1..N. When C(N, k) <= trials every subset is
// evaluated once; otherwise `trials` random subsets are drawn. Member scores are the
// single-member anomaly scores (negated logits). std is the population deviation.
inline std::vector<StabilityPoint> stability_curve(const std::vector<ScoreVector>& member_scores,
                                                   const std::vector<int>& labels, EnsembleMode mode,
                                                   const std::optional<EnsembleCalibration>& calibration,
                                                   std::size_t trials, std::uint64_t seed) {
  if (trials < 1) throw InvalidArgument("stability_curve needs trials >= 1");
  if (member_scores.empty()) throw InvalidArgument("stability_curve needs at least one member");
  if (mode == EnsembleMode::scaled && (!calibration || calibration->members.size() != member_scores.size()))
    throw InvalidArgument("scaled stability curve needs a calibration for every member");
  std::vector<Vector> logits;
  for (const auto& s : member_scores) logits.push_back(-s.scores);
  const std::size_t n = logits.size();

  Rng rng(seed);
  std::vector<StabilityPoint> out;
  for (std::size_t k = 1; k <= n; ++k) {
    std::vector<std::vector<std::size_t>> subsets;
    if (detail::binomial(n, k) <= static_cast<double>(trials)) {
      subsets = detail::combinations(n, k);
    } else {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < k; ++i) {
          std::uniform_int_distribution<std::size_t> pick(i, n - 1);
          std::swap(idx[i], idx[pick(rng)]);
        }
        subsets.emplace_back(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
      }
    }
    std::vector<double> aucs;
    for (const auto& sub : subsets) {
      std::vector<Vector> chosen;
      for (auto i : sub) chosen.push_back(logits[i]);
      Vector s;
      if (mode == EnsembleMode::plain) {
        s = ensemble::plain(chosen);
      } else {
        EnsembleCalibration cal;
        for (auto i : sub) cal.members.push_back(calibration->members[i]);
        s = ensemble::scaled(chosen, cal, nullptr);
      }
      aucs.push_back(roc(s, labels).auc);
    }
    const double mean = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
    double var = 0.0;
    for (double a : aucs) var += (a - mean) * (a - mean);
    out.push_back({k, mean, std::sqrt(var / static_cast<double>(aucs.size())), aucs.size()});
  }
  return out;
}

}  // namespace minlgan
