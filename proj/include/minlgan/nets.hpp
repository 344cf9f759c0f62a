#pragma once

#include "minlgan/error.hpp"
#include "minlgan/random.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace minlgan {

enum class Activation { identity, relu, leaky_relu, tanh, sigmoid };

inline constexpr double kLeakySlope = 0.2;

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

inline Activation parse_activation(std::string_view s) {
  for (auto a : {Activation::identity, Activation::relu, Activation::leaky_relu, Activation::tanh,
                 Activation::sigmoid})
    if (to_string(a) == s) return a;
  throw InvalidArgument("unknown activation '" + std::string(s) + "'");
}

namespace detail {

inline Matrix activate(Activation a, const Matrix& pre) {
  switch (a) {
    case Activation::identity: return pre;
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::leaky_relu: return pre.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
    case Activation::tanh: return pre.array().tanh().matrix();
    case Activation::sigmoid: return (1.0 / (1.0 + (-pre.array()).exp())).matrix();
  }
  return pre;
}

// grad_out ⊙ a'(pre)
inline Matrix activation_backward(Activation a, const Matrix& pre, const Matrix& grad_out) {
  switch (a) {
    case Activation::identity: return grad_out;
    case Activation::relu: return grad_out.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    case Activation::leaky_relu:
      return grad_out.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }));
    case Activation::tanh: return (grad_out.array() * (1.0 - pre.array().tanh().square())).matrix();
    case Activation::sigmoid: {
      const Eigen::ArrayXXd s = 1.0 / (1.0 + (-pre.array()).exp());
      return (grad_out.array() * s * (1.0 - s)).matrix();
    }
  }
  return grad_out;
}

}  // namespace detail

struct NetworkSpec {
  // Input width, hidden widths..., output width.
  std::vector<Eigen::Index> widths;
  Activation activation = Activation::relu;
  Activation output_activation = Activation::identity;
  // Layer whose (activated) output is exposed as the feature vector; -1 for none.
  int feature_layer = -1;

  int num_layers() const { return static_cast<int>(widths.size()) - 1; }
  Eigen::Index input_dim() const { return widths.front(); }
  Eigen::Index output_dim() const { return widths.back(); }

  Activation activation_of(int layer) const {
    return layer == num_layers() - 1 ? output_activation : activation;
  }

  void validate() const {
    if (widths.size() < 2) throw InvalidArgument("network needs at least an input and an output width");
    for (auto w : widths)
      if (w < 1) throw InvalidArgument("layer widths must be positive");
    if (feature_layer >= num_layers() - 1 || feature_layer < -1)
      throw InvalidArgument("feature layer must come strictly before the final layer");
  }

  bool operator==(const NetworkSpec&) const = default;
};

struct DenseLayer {
  Matrix weight;  // fan_in x fan_out
  Vector bias;    // fan_out
};

// Parameters (or gradients) of a stack of dense layers.
using LayerParams = std::vector<DenseLayer>;

struct Mlp {
  NetworkSpec spec;
  LayerParams layers;
};

// All-zero parameters.
inline Mlp make_mlp(NetworkSpec spec) {
  spec.validate();
  Mlp m{std::move(spec), {}};
  for (int l = 0; l < m.spec.num_layers(); ++l)
    m.layers.push_back({Matrix::Zero(m.spec.widths[l], m.spec.widths[l + 1]), Vector::Zero(m.spec.widths[l + 1])});
  return m;
}

// Glorot-uniform weights, zero biases.
inline Mlp make_mlp(NetworkSpec spec, Rng& rng) {
  Mlp m = make_mlp(std::move(spec));
  for (auto& layer : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    layer.weight = uniform(layer.weight.rows(), layer.weight.cols(), -limit, limit, rng);
  }
  return m;
}

inline LayerParams zeros_like(const LayerParams& p) {
  LayerParams out;
  out.reserve(p.size());
  for (const auto& l : p) out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  return out;
}

inline void axpy(double alpha, const LayerParams& x, LayerParams& y) {
  for (std::size_t l = 0; l < y.size(); ++l) {
    y[l].weight += alpha * x[l].weight;
    y[l].bias += alpha * x[l].bias;
  }
}

inline std::size_t parameter_count(const LayerParams& p) {
  std::size_t n = 0;
  for (const auto& l : p) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

inline double squared_norm(const LayerParams& p) {
  double s = 0.0;
  for (const auto& l : p) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

inline bool all_finite(const LayerParams& p) {
  for (const auto& l : p)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

// Layer by layer: weights (column-major) then bias.
inline Vector flatten(const LayerParams& p) {
  Vector out(static_cast<Eigen::Index>(parameter_count(p)));
  Eigen::Index k = 0;
  for (const auto& l : p) {
    out.segment(k, l.weight.size()) = Eigen::Map<const Vector>(l.weight.data(), l.weight.size());
    k += l.weight.size();
    out.segment(k, l.bias.size()) = l.bias;
    k += l.bias.size();
  }
  return out;
}

inline void unflatten(const Vector& flat, LayerParams& p) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count(p))) throw ShapeError("flat parameter size mismatch");
  Eigen::Index k = 0;
  for (auto& l : p) {
    Eigen::Map<Vector>(l.weight.data(), l.weight.size()) = flat.segment(k, l.weight.size());
    k += l.weight.size();
    l.bias = flat.segment(k, l.bias.size());
    k += l.bias.size();
  }
}

// Cached intermediate values of a forward pass through layers [0, top].
struct Tape {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  Matrix output;               // activated output of layer `top`
  int top = -1;
};

inline void check_input(const Mlp& m, const Matrix& x, const char* what) {
  if (x.cols() != m.spec.input_dim())
    throw ShapeError(std::string(what) + ": expected " + std::to_string(m.spec.input_dim()) + " columns, got " +
                     std::to_string(x.cols()));
}

inline Tape forward_tape(const Mlp& m, const Matrix& x, int top = -1) {
  check_input(m, x, "forward");
  if (top < 0) top = m.spec.num_layers() - 1;
  Tape t;
  t.top = top;
  Matrix h = x;
  for (int l = 0; l <= top; ++l) {
    Matrix pre = h * m.layers[l].weight;
    pre.rowwise() += m.layers[l].bias.transpose();
    t.inputs.push_back(std::move(h));
    h = detail::activate(m.spec.activation_of(l), pre);
    t.pre.push_back(std::move(pre));
  }
  t.output = std::move(h);
  return t;
}

inline Matrix forward(const Mlp& m, const Matrix& x) {
  check_input(m, x, "forward");
  Matrix h = x;
  for (int l = 0; l < m.spec.num_layers(); ++l) {
    Matrix pre = h * m.layers[l].weight;
    pre.rowwise() += m.layers[l].bias.transpose();
    h = detail::activate(m.spec.activation_of(l), pre);
  }
  return h;
}

// Reverse pass from dL/d(tape.output). Returns parameter gradients (zero above
// tape.top) and, when requested, dL/d(input).
inline LayerParams backward(const Mlp& m, const Tape& tape, const Matrix& grad_output, Matrix* grad_input = nullptr) {
  LayerParams grads = zeros_like(m.layers);
  Matrix g = grad_output;
  for (int l = tape.top; l >= 0; --l) {
    const Matrix g_pre = detail::activation_backward(m.spec.activation_of(l), tape.pre[l], g);
    grads[l].weight.noalias() = tape.inputs[l].transpose() * g_pre;
    grads[l].bias = g_pre.colwise().sum().transpose();
    if (l > 0 || grad_input) g = g_pre * m.layers[l].weight.transpose();
  }
  if (grad_input) *grad_input = std::move(g);
  return grads;
}

// Additive noise n in x = G(z) + n; defines p(x|z) and the smoothed generator density.
struct NoiseModel {
  enum class Family { gaussian, laplace };
  Family family = Family::gaussian;
  double sigma = 0.1;  // standard deviation (gaussian) or scale b (laplace)

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("noise sigma must be positive and finite");
  }
};

inline std::string_view to_string(NoiseModel::Family f) {
  return f == NoiseModel::Family::gaussian ? "gaussian" : "laplace";
}

inline NoiseModel::Family parse_noise_family(std::string_view s) {
  if (s == "gaussian") return NoiseModel::Family::gaussian;
  if (s == "laplace") return NoiseModel::Family::laplace;
  throw InvalidArgument("unknown noise family '" + std::string(s) + "'");
}

// Per-row log p(x | z) = log density of the noise at x - G(z).
inline Vector log_cond_density(const NoiseModel& noise, const Matrix& x, const Matrix& gz) {
  noise.validate();
  if (x.rows() != gz.rows() || x.cols() != gz.cols()) throw ShapeError("log_cond_density: shape mismatch");
  const double d = static_cast<double>(x.cols());
  const Matrix r = x - gz;
  if (noise.family == NoiseModel::Family::gaussian) {
    const double norm = -0.5 * d * std::log(2.0 * std::numbers::pi * noise.sigma * noise.sigma);
    return (norm - r.rowwise().squaredNorm().array() / (2.0 * noise.sigma * noise.sigma)).matrix();
  }
  const double norm = -d * std::log(2.0 * noise.sigma);
  return (norm - r.cwiseAbs().rowwise().sum().array() / noise.sigma).matrix();
}

// d log p(x | z) / d G(z), row per sample.
inline Matrix log_cond_density_grad(const NoiseModel& noise, const Matrix& x, const Matrix& gz) {
  const Matrix r = x - gz;
  if (noise.family == NoiseModel::Family::gaussian) return r / (noise.sigma * noise.sigma);
  return r.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }) / noise.sigma;
}

struct Generator {
  Mlp net;
  Eigen::Index latent_dim() const { return net.spec.input_dim(); }
  Eigen::Index data_dim() const { return net.spec.output_dim(); }
};

// z ~ N(0, I)
inline Matrix sample_prior(Eigen::Index n, Eigen::Index latent_dim, Rng& rng) {
  return standard_normal(n, latent_dim, rng);
}

inline Matrix generate(const Generator& g, const Matrix& z) {
  check_input(g.net, z, "generate");
  return forward(g.net, z);
}

// Final layer emits one pre-sigmoid logit.
struct Discriminator {
  Mlp net;
  int feature_layer() const { return net.spec.feature_layer; }
};

struct Discrimination {
  Vector logit;
  Matrix features;
};

inline Discrimination discriminate(const Discriminator& d, const Matrix& x) {
  check_input(d.net, x, "discriminate");
  if (d.feature_layer() < 0) throw InvalidArgument("discriminator has no feature layer");
  Discrimination out;
  Matrix h = x;
  for (int l = 0; l < d.net.spec.num_layers(); ++l) {
    Matrix pre = h * d.net.layers[l].weight;
    pre.rowwise() += d.net.layers[l].bias.transpose();
    h = detail::activate(d.net.spec.activation_of(l), pre);
    if (l == d.feature_layer()) out.features = h;
  }
  out.logit = h.col(0);
  return out;
}

inline Vector logits(const Discriminator& d, const Matrix& x) {
  check_input(d.net, x, "discriminate");
  return forward(d.net, x).col(0);
}

// Amortized diagonal-Gaussian posterior q(z | x): output columns are [mu | log_var].
struct Encoder {
  Mlp net;
  Eigen::Index latent_dim() const { return net.spec.output_dim() / 2; }
};

struct Posterior {
  Matrix mu;
  Matrix log_var;
};

inline Posterior split_heads(const Matrix& out) {
  const Eigen::Index k = out.cols() / 2;
  return {out.leftCols(k), out.rightCols(k)};
}

inline Posterior encode(const Encoder& e, const Matrix& x) {
  check_input(e.net, x, "encode");
  return split_heads(forward(e.net, x));
}

// z = mu + exp(log_var / 2) * eps
inline Matrix reparameterize(const Posterior& q, const Matrix& eps) {
  if (eps.rows() != q.mu.rows() || eps.cols() != q.mu.cols()) throw ShapeError("reparameterize: eps shape mismatch");
  return q.mu + ((0.5 * q.log_var.array()).exp() * eps.array()).matrix();
}

// KL(q(z|x) || N(0, I)) per row, closed form.
inline Vector kl_standard_normal(const Posterior& q) {
  return (0.5 * (q.mu.array().square() + q.log_var.array().exp() - 1.0 - q.log_var.array()).rowwise().sum())
      .matrix();
}

struct AutoEncoder {
  Mlp encoder;
  Mlp decoder;
};

inline Matrix ae_forward(const AutoEncoder& ae, const Matrix& x) {
  check_input(ae.encoder, x, "ae_forward");
  return forward(ae.decoder, forward(ae.encoder, x));
}

struct Vae {
  Encoder encoder;
  Mlp decoder;
};

struct VaePass {
  Matrix reconstruction;
  Posterior posterior;
};

inline VaePass vae_forward(const Vae& vae, const Matrix& x, const Matrix& eps) {
  Posterior q = encode(vae.encoder, x);
  Matrix recon = forward(vae.decoder, reparameterize(q, eps));
  return {std::move(recon), std::move(q)};
}

// Default architectures. Hidden layers use the given activation; outputs are linear.
inline NetworkSpec generator_spec(Eigen::Index latent_dim, const std::vector<Eigen::Index>& hidden,
                                  Eigen::Index data_dim) {
  NetworkSpec s;
  s.widths.push_back(latent_dim);
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(data_dim);
  s.activation = Activation::relu;
  return s;
}

inline NetworkSpec discriminator_spec(Eigen::Index data_dim, const std::vector<Eigen::Index>& hidden) {
  if (hidden.empty()) throw InvalidArgument("discriminator needs a hidden feature layer");
  NetworkSpec s;
  s.widths.push_back(data_dim);
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(1);
  s.activation = Activation::leaky_relu;
  s.feature_layer = static_cast<int>(hidden.size()) - 1;
  return s;
}

inline NetworkSpec encoder_spec(Eigen::Index data_dim, const std::vector<Eigen::Index>& hidden,
                                Eigen::Index latent_dim) {
  NetworkSpec s;
  s.widths.push_back(data_dim);
  s.widths.insert(s.widths.end(), hidden.begin(), hidden.end());
  s.widths.push_back(2 * latent_dim);
  s.activation = Activation::leaky_relu;
  return s;
}

// Deterministic encoder for the plain autoencoder: emits the code directly.
inline NetworkSpec ae_encoder_spec(Eigen::Index data_dim, const std::vector<Eigen::Index>& hidden,
                                   Eigen::Index code_dim) {
  NetworkSpec s = encoder_spec(data_dim, hidden, code_dim);
  s.widths.back() = code_dim;
  return s;
}

}  // namespace minlgan
