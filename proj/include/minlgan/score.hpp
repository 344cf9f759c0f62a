#pragma once

#include "minlgan/data.hpp"
#include "minlgan/error.hpp"
#include "minlgan/nets.hpp"

#include <iostream>
#include <span>
#include <string>
#include <vector>

namespace minlgan {

// Per-sample anomaly scores; higher always means more anomalous.
struct ScoreVector {
  Vector scores;
  std::string method;

  Eigen::Index size() const { return scores.size(); }
  double operator()(Eigen::Index i) const { return scores(i); }
};

inline ScoreVector score_gan(const Discriminator& d, const Matrix& x) {
  return {-logits(d, x), "gan"};
}

// Holdout extremes of one ensemble member's logit.
struct MemberRange {
  double max = 0.0;
  double min = 0.0;
  bool degenerate() const { return !(max > min); }
};

struct EnsembleCalibration {
  std::vector<MemberRange> members;
};

// Aggregation over precomputed member logits (one vector per member, aligned rows).
namespace ensemble {

inline void check_members(const std::vector<Vector>& member_logits) {
  if (member_logits.empty()) throw InvalidArgument("ensemble needs at least one member");
  for (const auto& v : member_logits)
    if (v.size() != member_logits.front().size()) throw ShapeError("ensemble members disagree on sample count");
}

// s = -(1/N) sum_i D_i(x)
inline Vector plain(const std::vector<Vector>& member_logits) {
  check_members(member_logits);
  Vector sum = Vector::Zero(member_logits.front().size());
  for (const auto& v : member_logits) sum += v;
  return -sum / static_cast<double>(member_logits.size());
}

inline EnsembleCalibration calibrate(const std::vector<Vector>& holdout_logits) {
  check_members(holdout_logits);
  if (holdout_logits.front().size() == 0) throw InvalidArgument("calibration needs a nonempty holdout");
  EnsembleCalibration cal;
  for (const auto& v : holdout_logits) cal.members.push_back({v.maxCoeff(), v.minCoeff()});
  return cal;
}

// s = -(1/N) sum_i (D_i(x) - n_i) / (m_i - n_i); a degenerate member (m_i = n_i)
// contributes the constant 0.5 and triggers a warning.
inline Vector scaled(const std::vector<Vector>& member_logits, const EnsembleCalibration& cal,
                     std::ostream* warn = &std::clog) {
  check_members(member_logits);
  if (cal.members.size() != member_logits.size())
    throw InvalidArgument("calibration has " + std::to_string(cal.members.size()) + " members, ensemble has " +
                          std::to_string(member_logits.size()));
  Vector sum = Vector::Zero(member_logits.front().size());
  for (std::size_t i = 0; i < member_logits.size(); ++i) {
    const auto& r = cal.members[i];
    if (r.degenerate()) {
      if (warn) *warn << "warning: ensemble member " << i << " is constant on the holdout; using 0.5\n";
      sum.array() += 0.5;
    } else {
      sum.array() += (member_logits[i].array() - r.min) / (r.max - r.min);
    }
  }
  return -sum / static_cast<double>(member_logits.size());
}

}  // namespace ensemble

inline std::vector<Vector> member_logits(std::span<const Discriminator> members, const Matrix& x) {
  std::vector<Vector> out;
  out.reserve(members.size());
  for (const auto& d : members) out.push_back(logits(d, x));
  return out;
}

inline ScoreVector score_ensemble(std::span<const Discriminator> members, const Matrix& x) {
  if (members.empty()) throw InvalidArgument("score_ensemble: empty ensemble");
  return {ensemble::plain(member_logits(members, x)), "ensemble"};
}

inline EnsembleCalibration calibrate(std::span<const Discriminator> members, const Dataset& holdout) {
  if (members.empty()) throw InvalidArgument("calibrate: empty ensemble");
  if (holdout.size() == 0) throw InvalidArgument("calibrate: empty holdout");
  return ensemble::calibrate(member_logits(members, holdout.features));
}

inline ScoreVector score_scaled_ensemble(std::span<const Discriminator> members, const EnsembleCalibration& cal,
                                         const Matrix& x, std::ostream* warn = &std::clog) {
  if (members.empty()) throw InvalidArgument("score_scaled_ensemble: empty ensemble");
  return {ensemble::scaled(member_logits(members, x), cal, warn), "scaled_ensemble"};
}

// Mean squared reconstruction error per sample.
inline ScoreVector score_ae(const AutoEncoder& ae, const Matrix& x) {
  const Matrix r = ae_forward(ae, x) - x;
  return {r.rowwise().squaredNorm() / static_cast<double>(x.cols()), "ae"};
}

// Negative Monte-Carlo reconstruction log-probability: -(1/S) sum_s log p(x | dec(z_s)),
// z_s ~ q(z | x). Each row draws its own latent noise from `seed`.
inline ScoreVector score_vae(const Vae& vae, const NoiseModel& noise, const Matrix& x, int n_samples,
                             std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("score_vae needs n_samples >= 1");
  const Posterior q = encode(vae.encoder, x);
  Rng rng(seed);
  Vector acc = Vector::Zero(x.rows());
  for (int s = 0; s < n_samples; ++s) {
    const Matrix eps = standard_normal(x.rows(), q.mu.cols(), rng);
    acc += log_cond_density(noise, x, forward(vae.decoder, reparameterize(q, eps)));
  }
  return {-acc / static_cast<double>(n_samples), "vae"};
}

}  // namespace minlgan
