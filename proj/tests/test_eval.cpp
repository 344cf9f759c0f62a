#include "minlgan/eval.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace minlgan;

namespace {

struct Instance {
  Vector scores;
  std::vector<int> labels;
};

// Random instance with both classes present; coarse rounding forces ties.
Instance random_instance(Rng& rng) {
  std::uniform_int_distribution<int> size(2, 200);
  std::uniform_int_distribution<int> levels(2, 12);
  const int n = size(rng);
  const int lv = levels(rng);
  Instance in{Vector(n), std::vector<int>(n)};
  std::bernoulli_distribution coin(0.3);
  std::uniform_int_distribution<int> level(0, lv);
  for (int i = 0; i < n; ++i) {
    in.scores(i) = (rng() % 2) ? level(rng) * 0.5 : std::normal_distribution<double>(0, 1)(rng);
    in.labels[static_cast<std::size_t>(i)] = coin(rng);
  }
  in.labels[0] = 1;
  in.labels[1] = 0;
  return in;
}

}  // namespace

TEST(Roc, PerfectSeparationGivesOne) {
  Vector s(6);
  s << 0.1, 0.2, 0.3, 5, 6, 7;
  const RocResult r = roc(s, {0, 0, 0, 1, 1, 1});
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.points.front().fpr, 0.0);
  EXPECT_EQ(r.points.back().tpr, 1.0);
}

TEST(Roc, AllTiedScoresGiveHalf) {
  const RocResult r = roc(Vector::Constant(9, 3.0), {1, 0, 0, 1, 0, 1, 1, 0, 0});
  EXPECT_EQ(r.auc, 0.5);
  ASSERT_EQ(r.points.size(), 2u);
}

TEST(Roc, SingleClassIsAnError) {
  EXPECT_THROW(roc(Vector::Ones(3), {1, 1, 1}), EmptyClassError);
  EXPECT_THROW(roc(Vector::Ones(3), {0, 0, 0}), EmptyClassError);
  EXPECT_THROW(roc(Vector::Ones(3), {0, 1}), ShapeError);
}

TEST(Roc, MatchesPairwiseOracle) {
  Rng rng(2024);
  for (int t = 0; t < 300; ++t) {
    const Instance in = random_instance(rng);
    const std::vector<double> s(in.scores.data(), in.scores.data() + in.scores.size());
    EXPECT_NEAR(roc(in.scores, in.labels).auc, oracle::pairwise_auc(s, in.labels), 1e-12);
  }
}

TEST(Roc, CurveInvariants) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    const RocResult r = roc(in.scores, in.labels);
    EXPECT_EQ(r.points.front().fpr, 0.0);
    EXPECT_EQ(r.points.front().tpr, 0.0);
    EXPECT_EQ(r.points.back().fpr, 1.0);
    EXPECT_EQ(r.points.back().tpr, 1.0);
    double area = 0.0;
    for (std::size_t i = 1; i < r.points.size(); ++i) {
      EXPECT_GE(r.points[i].fpr, r.points[i - 1].fpr);
      EXPECT_GE(r.points[i].tpr, r.points[i - 1].tpr);
      area += (r.points[i].fpr - r.points[i - 1].fpr) * (r.points[i].tpr + r.points[i - 1].tpr) / 2;
    }
    EXPECT_NEAR(area, r.auc, 1e-12);
  }
}

TEST(Roc, InvariantUnderIncreasingTransforms) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    const double auc = roc(in.scores, in.labels).auc;
    // Scalar std::exp: Eigen's packet exp can map equal inputs to different outputs.
    const Vector warped = in.scores.unaryExpr([](double v) { return 3.0 * std::exp(0.5 * v) + 1.0; });
    EXPECT_EQ(roc(warped, in.labels).auc, auc);
  }
}

TEST(Roc, NegatingScoresAndSwappingLabelsPreservesAuc) {
  Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    const Instance in = random_instance(rng);
    std::vector<int> swapped(in.labels);
    for (auto& l : swapped) l = 1 - l;
    EXPECT_NEAR(roc(Vector(-in.scores), swapped).auc, roc(in.scores, in.labels).auc, 1e-15);
  }
}

TEST(BoxStats, FivePointSet) {
  Vector s(5);
  s << 3, 1, 5, 2, 4;
  const auto b = boxstats(s, std::vector<std::string>(5, "g"));
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].min, 1);
  EXPECT_EQ(b[0].q1, 2);
  EXPECT_EQ(b[0].median, 3);
  EXPECT_EQ(b[0].q3, 4);
  EXPECT_EQ(b[0].max, 5);
}

TEST(BoxStats, Singleton) {
  const auto b = boxstats(Vector::Constant(1, 7.0), {"only"});
  EXPECT_EQ(b[0].min, 7);
  EXPECT_EQ(b[0].q1, 7);
  EXPECT_EQ(b[0].median, 7);
  EXPECT_EQ(b[0].q3, 7);
  EXPECT_EQ(b[0].max, 7);
}

TEST(BoxStats, MatchesSortAndIndexOracle) {
  Rng rng(10);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + static_cast<int>(rng() % 60);
    const Matrix s = standard_normal(n, 1, rng);
    std::vector<std::string> groups(static_cast<std::size_t>(n));
    std::vector<double> a, b;
    for (int i = 0; i < n; ++i) {
      groups[static_cast<std::size_t>(i)] = (i % 3 == 0) ? "a" : "b";
      (i % 3 == 0 ? a : b).push_back(s(i, 0));
    }
    const auto stats = boxstats(s.col(0), groups);
    ASSERT_EQ(stats[0].group, "a");
    for (const auto& [st, v] : {std::pair{stats[0], a}, std::pair{stats.back(), b}}) {
      if (v.empty()) continue;
      EXPECT_NEAR(st.q1, oracle::quantile(v, 0.25), 1e-12);
      EXPECT_NEAR(st.median, oracle::quantile(v, 0.5), 1e-12);
      EXPECT_NEAR(st.q3, oracle::quantile(v, 0.75), 1e-12);
      EXPECT_LE(st.min, st.q1);
      EXPECT_LE(st.q1, st.median);
      EXPECT_LE(st.median, st.q3);
      EXPECT_LE(st.q3, st.max);
    }
  }
}

TEST(BoxStats, EmptyRequestedGroupThrows) {
  EXPECT_THROW(boxstats(Vector::Ones(2), {"a", "a"}, {"a", "b"}), InvalidArgument);
}

namespace {

std::vector<ScoreVector> random_members(std::size_t n, const std::vector<int>& labels, Rng& rng) {
  std::vector<ScoreVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector s = standard_normal(static_cast<Eigen::Index>(labels.size()), 1, rng).col(0);
    for (std::size_t j = 0; j < labels.size(); ++j) s(static_cast<Eigen::Index>(j)) += labels[j] * 0.8;
    out.push_back({s, "m"});
  }
  return out;
}

}  // namespace

TEST(Stability, FullEnsembleHasZeroSpreadAndMatchesEnsembleAuc) {
  Rng rng(11);
  std::vector<int> labels(80);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 4 == 0;
  const auto members = random_members(6, labels, rng);
  std::vector<Vector> logits;
  for (const auto& m : members) logits.push_back(-m.scores);
  const auto cal = ensemble::calibrate(logits);

  for (auto mode : {EnsembleMode::plain, EnsembleMode::scaled}) {
    const auto curve = stability_curve(members, labels, mode, cal, 50, 3);
    ASSERT_EQ(curve.size(), 6u);
    EXPECT_EQ(curve.back().std_auc, 0.0);
    const Vector full = mode == EnsembleMode::plain ? ensemble::plain(logits) : ensemble::scaled(logits, cal);
    EXPECT_EQ(curve.back().mean_auc, roc(full, labels).auc);
  }
}

TEST(Stability, SingletonsAverageMemberAucs) {
  Rng rng(12);
  std::vector<int> labels(60);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 3 == 0;
  const auto members = random_members(5, labels, rng);
  double mean = 0.0;
  for (const auto& m : members) mean += roc(m, labels).auc / 5.0;
  const auto curve = stability_curve(members, labels, EnsembleMode::plain, std::nullopt, 5, 0);
  EXPECT_NEAR(curve.front().mean_auc, mean, 1e-12);
  EXPECT_EQ(curve.front().subsets, 5u);
}

TEST(Stability, RandomSubsetsWhenTrialsAreFewerThanCombinations) {
  Rng rng(13);
  std::vector<int> labels(40);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  const auto members = random_members(8, labels, rng);
  const auto curve = stability_curve(members, labels, EnsembleMode::plain, std::nullopt, 7, 1);
  EXPECT_EQ(curve[0].subsets, 7u);  // 8 singletons > 7 trials
  EXPECT_EQ(curve[6].subsets, 7u);  // C(8,7) = 8 > 7
  EXPECT_EQ(curve[7].subsets, 1u);
  const auto again = stability_curve(members, labels, EnsembleMode::plain, std::nullopt, 7, 1);
  for (std::size_t k = 0; k < curve.size(); ++k) EXPECT_EQ(curve[k].mean_auc, again[k].mean_auc);
}

TEST(Stability, Errors) {
  std::vector<int> labels{0, 1};
  std::vector<ScoreVector> members{{Vector::Zero(2), "m"}};
  EXPECT_THROW(stability_curve(members, labels, EnsembleMode::plain, std::nullopt, 0, 0), InvalidArgument);
  EXPECT_THROW(stability_curve(members, labels, EnsembleMode::scaled, std::nullopt, 1, 0), InvalidArgument);
}
