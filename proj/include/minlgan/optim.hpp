#pragma once

#include "minlgan/nets.hpp"

#include <cmath>

namespace minlgan {

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Rescale the gradient to this global norm when it is larger; 0 disables clipping.
  double clip_norm = 0.0;
};

// Adaptive-moment descent on one parameter set.
class Adam {
 public:
  Adam() = default;
  Adam(const LayerParams& shape, AdamConfig config)
      : config_(config), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

  // params -= step(grad). Minimizes; callers maximizing pass the negated gradient.
  void descend(LayerParams& params, LayerParams grad) {
    if (config_.clip_norm > 0.0) {
      const double norm = std::sqrt(squared_norm(grad));
      if (norm > config_.clip_norm)
        for (auto& l : grad) {
          l.weight *= config_.clip_norm / norm;
          l.bias *= config_.clip_norm / norm;
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    const double lr = config_.learning_rate * std::sqrt(c2) / c1;
    for (std::size_t l = 0; l < params.size(); ++l) {
      update(params[l].weight, m_[l].weight, v_[l].weight, grad[l].weight, lr);
      update(params[l].bias, m_[l].bias, v_[l].bias, grad[l].bias, lr);
    }
  }

  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  template <class P>
  void update(P& p, P& m, P& v, const P& g, double lr) const {
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseAbs2();
    p.array() -= lr * m.array() / (v.array().sqrt() + config_.epsilon);
  }

  AdamConfig config_;
  LayerParams m_;
  LayerParams v_;
  long t_ = 0;
};

}  // namespace minlgan
