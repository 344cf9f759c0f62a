#pragma once

#include "minlgan/checkpoint.hpp"
#include "minlgan/data.hpp"
#include "minlgan/error.hpp"
#include "minlgan/eval.hpp"
#include "minlgan/nets.hpp"
#include "minlgan/optim.hpp"
#include "minlgan/score.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace minlgan {

struct TrainConfig {
  // Weight of the minimum-likelihood penalty; 0 turns MinLGAN into the GAN baseline.
  double a = 0.01;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  long batch_size = 64;
  long max_steps = 5000;
  // Holdout AUC every this many steps; 0 disables model selection (final weights kept).
  long eval_every = 250;
  std::uint64_t seed = 0;
  NoiseModel noise;
  double clip_norm = 0.0;
  Eigen::Index latent_dim = 32;
  std::vector<Eigen::Index> hidden = {64, 64};
  // Bottleneck width of AE / VAE; 0 picks max(1, dim / 2).
  Eigen::Index ae_latent_dim = 0;
  int vae_samples = 16;

  void validate() const {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("a must be a finite non-negative number");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (max_steps < 0 || eval_every < 0) throw ConfigError("max_steps and eval_every must be non-negative");
    if (latent_dim < 1 || ae_latent_dim < 0) throw ConfigError("latent dimensions must be positive");
    if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
    if (vae_samples < 1) throw ConfigError("vae_samples must be at least 1");
    if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
    try {
      noise.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }

  AdamConfig adam() const { return {learning_rate, beta1, beta2, 1e-8, clip_norm}; }

  Eigen::Index bottleneck(Eigen::Index data_dim) const {
    return ae_latent_dim > 0 ? ae_latent_dim : std::max<Eigen::Index>(1, data_dim / 2);
  }
};

// ---------------------------------------------------------------------------
// Objectives with analytic gradients. Each is a pure function of its inputs and
// the explicit noise draws, so the gradient checks can call them directly.

struct Objective {
  double value = 0.0;
  LayerParams grad;
};

namespace detail {

// log(1 + e^u) without overflow.
inline double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

inline double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace detail

// E log D(x) + E log(1 - D(G(z))) with D = sigmoid(logit), and its gradient w.r.t. the
// discriminator parameters. Maximized by the discriminator.
inline Objective discriminator_objective(const Discriminator& d, const Matrix& real, const Matrix& fake) {
  const Tape tr = forward_tape(d.net, real);
  const Tape tf = forward_tape(d.net, fake);
  const double nr = static_cast<double>(real.rows());
  const double nf = static_cast<double>(fake.rows());
  Objective o;
  Matrix gr(real.rows(), 1), gf(fake.rows(), 1);
  for (Eigen::Index i = 0; i < real.rows(); ++i) {
    const double l = tr.output(i, 0);
    o.value -= detail::softplus(-l) / nr;  // log sigmoid(l)
    gr(i, 0) = detail::sigmoid(-l) / nr;
  }
  for (Eigen::Index i = 0; i < fake.rows(); ++i) {
    const double l = tf.output(i, 0);
    o.value -= detail::softplus(l) / nf;  // log(1 - sigmoid(l))
    gf(i, 0) = -detail::sigmoid(l) / nf;
  }
  o.grad = backward(d.net, tr, gr);
  axpy(1.0, backward(d.net, tf, gf), o.grad);
  return o;
}

// || mean f(real) - mean f(G(z)) || over the discriminator's feature layer, with its
// gradient w.r.t. the generator parameters (discriminator held fixed).
inline Objective feature_matching_objective(const Generator& g, const Discriminator& d, const Matrix& real,
                                            const Matrix& z) {
  if (d.feature_layer() < 0) throw InvalidArgument("feature matching needs a discriminator feature layer");
  const Tape tg = forward_tape(g.net, z);
  const Tape tf = forward_tape(d.net, tg.output, d.feature_layer());
  const Tape treal = forward_tape(d.net, real, d.feature_layer());
  const Vector diff = (treal.output.colwise().mean() - tf.output.colwise().mean()).transpose();
  Objective o;
  o.value = diff.norm();
  if (o.value == 0.0) {
    o.grad = zeros_like(g.net.layers);
    return o;
  }
  // d/d f_i = -(diff / ||diff||) / n for every fake row i.
  const Vector unit = -diff / (o.value * static_cast<double>(z.rows()));
  const Matrix gfeat = unit.transpose().replicate(z.rows(), 1);
  Matrix gfake;
  backward(d.net, tf, gfeat, &gfake);
  o.grad = backward(g.net, tg, gfake);
  return o;
}

struct ElboObjective {
  double value = 0.0;  // batch mean ELBO
  double reconstruction = 0.0;
  double kl = 0.0;
  LayerParams encoder_grad;
  LayerParams decoder_grad;
};

// Single-sample reparameterized ELBO  E_q log p(x | dec(z)) - KL(q(z|x) || N(0, I)),
// averaged over the batch, with gradients for encoder and decoder.
inline ElboObjective elbo_objective(const Encoder& e, const Mlp& decoder, const NoiseModel& noise, const Matrix& x,
                                    const Matrix& eps) {
  const Tape te = forward_tape(e.net, x);
  const Posterior q = split_heads(te.output);
  if (eps.rows() != q.mu.rows() || eps.cols() != q.mu.cols()) throw ShapeError("elbo: eps shape mismatch");
  const Matrix std_dev = (0.5 * q.log_var.array()).exp().matrix();
  const Matrix z = q.mu + std_dev.cwiseProduct(eps);
  const Tape td = forward_tape(decoder, z);
  const double n = static_cast<double>(x.rows());

  ElboObjective o;
  o.reconstruction = log_cond_density(noise, x, td.output).mean();
  o.kl = kl_standard_normal(q).mean();
  o.value = o.reconstruction - o.kl;

  Matrix gz;
  o.decoder_grad = backward(decoder, td, log_cond_density_grad(noise, x, td.output) / n, &gz);
  Matrix gout(x.rows(), 2 * q.mu.cols());
  gout.leftCols(q.mu.cols()) = gz - q.mu / n;
  gout.rightCols(q.mu.cols()) = (gz.cwiseProduct(eps).cwiseProduct(std_dev) * 0.5).array() -
                                0.5 * (q.log_var.array().exp() - 1.0) / n;
  o.encoder_grad = backward(e.net, te, gout);
  return o;
}

// Batch mean of log p(x | G(z_q)) with z_q reparameterized from q(z|x) (encoder held
// fixed), and its gradient w.r.t. the generator parameters.
inline Objective likelihood_penalty(const Generator& g, const Encoder& e, const NoiseModel& noise, const Matrix& x,
                                    const Matrix& eps) {
  const Matrix z = reparameterize(encode(e, x), eps);
  const Tape tg = forward_tape(g.net, z);
  Objective o;
  o.value = log_cond_density(noise, x, tg.output).mean();
  o.grad = backward(g.net, tg, log_cond_density_grad(noise, x, tg.output) / static_cast<double>(x.rows()));
  return o;
}

// Feature matching plus a times the likelihood penalty; minimized by the generator.
inline Objective minl_generator_objective(const Generator& g, const Discriminator& d, const Encoder& e,
                                          const NoiseModel& noise, double a, const Matrix& real, const Matrix& z,
                                          const Matrix& eps) {
  Objective fm = feature_matching_objective(g, d, real, z);
  const Objective pen = likelihood_penalty(g, e, noise, real, eps);
  fm.value += a * pen.value;
  axpy(a, pen.grad, fm.grad);
  return fm;
}

// ---------------------------------------------------------------------------
// Adversarial (GAN / MinLGAN) training state and single steps.

struct AdversarialState {
  AdversarialNets nets;
  Adam opt_g;
  Adam opt_d;
  Adam opt_e;
  Rng rng;      // minibatches and prior draws
  Rng enc_rng;  // reparameterization noise of the encoder and the penalty
  std::int64_t step = 0;
};

// Network initialization depends only on (seed, dims), so GAN and MinLGAN runs with a
// shared seed start from identical weights.
inline AdversarialState init_adversarial(Eigen::Index data_dim, const TrainConfig& cfg) {
  cfg.validate();
  Rng rg(derive_seed(cfg.seed, 1)), rd(derive_seed(cfg.seed, 2)), re(derive_seed(cfg.seed, 3));
  AdversarialState s{
      AdversarialNets{Generator{make_mlp(generator_spec(cfg.latent_dim, cfg.hidden, data_dim), rg)},
                      Discriminator{make_mlp(discriminator_spec(data_dim, cfg.hidden), rd)},
                      Encoder{make_mlp(encoder_spec(data_dim, cfg.hidden, cfg.latent_dim), re)}},
      {}, {}, {}, Rng(derive_seed(cfg.seed, 10)), Rng(derive_seed(cfg.seed, 11)), 0};
  s.opt_g = Adam(s.nets.g.net.layers, cfg.adam());
  s.opt_d = Adam(s.nets.d.net.layers, cfg.adam());
  s.opt_e = Adam(s.nets.e.net.layers, cfg.adam());
  return s;
}

namespace detail {

inline void require_finite(double value, const LayerParams& grad, const char* what, std::int64_t step) {
  if (!std::isfinite(value) || !all_finite(grad)) throw DivergenceError(std::string(what) + " is not finite", step);
}

inline void negate(LayerParams& p) {
  for (auto& l : p) {
    l.weight = -l.weight;
    l.bias = -l.bias;
  }
}

}  // namespace detail

// One ascent step for the discriminator on a fresh fake batch. Returns the objective.
inline double d_step(AdversarialState& s, const Matrix& real, const TrainConfig& cfg) {
  (void)cfg;
  const Matrix z = sample_prior(real.rows(), s.nets.g.latent_dim(), s.rng);
  const Matrix fake = generate(s.nets.g, z);
  Objective o = discriminator_objective(s.nets.d, real, fake);
  detail::require_finite(o.value, o.grad, "discriminator objective", s.step);
  detail::negate(o.grad);
  s.opt_d.descend(s.nets.d.net.layers, std::move(o.grad));
  return o.value;
}

// One ascent step on the ELBO for q(z|x); the generator is the fixed decoder.
inline double encoder_step(AdversarialState& s, const Matrix& real, const TrainConfig& cfg) {
  const Matrix eps = standard_normal(real.rows(), s.nets.e.latent_dim(), s.enc_rng);
  ElboObjective o = elbo_objective(s.nets.e, s.nets.g.net, cfg.noise, real, eps);
  detail::require_finite(o.value, o.encoder_grad, "ELBO", s.step);
  detail::negate(o.encoder_grad);
  s.opt_e.descend(s.nets.e.net.layers, std::move(o.encoder_grad));
  return o.value;
}

// One descent step on the feature-matching loss.
inline double g_step_gan(AdversarialState& s, const Matrix& real, const TrainConfig& cfg) {
  (void)cfg;
  const Matrix z = sample_prior(real.rows(), s.nets.g.latent_dim(), s.rng);
  Objective o = feature_matching_objective(s.nets.g, s.nets.d, real, z);
  detail::require_finite(o.value, o.grad, "feature matching loss", s.step);
  s.opt_g.descend(s.nets.g.net.layers, std::move(o.grad));
  return o.value;
}

struct GeneratorLosses {
  double fm = 0.0;
  double ml_penalty = 0.0;
};

// One descent step on feature matching + a * E_q log p(x | G(z)). Draws the prior batch
// from the same stream as g_step_gan, so a = 0 reproduces it exactly.
inline GeneratorLosses g_step_minl(AdversarialState& s, const Matrix& real, const TrainConfig& cfg) {
  const Matrix z = sample_prior(real.rows(), s.nets.g.latent_dim(), s.rng);
  const Matrix eps = standard_normal(real.rows(), s.nets.e.latent_dim(), s.enc_rng);
  Objective fm = feature_matching_objective(s.nets.g, s.nets.d, real, z);
  const Objective pen = likelihood_penalty(s.nets.g, s.nets.e, cfg.noise, real, eps);
  detail::require_finite(fm.value, fm.grad, "feature matching loss", s.step);
  detail::require_finite(pen.value, pen.grad, "likelihood penalty", s.step);
  if (cfg.a != 0.0) axpy(cfg.a, pen.grad, fm.grad);
  s.opt_g.descend(s.nets.g.net.layers, std::move(fm.grad));
  return {fm.value, pen.value};
}

// ---------------------------------------------------------------------------
// Reconstruction baselines.

struct ReconstructionState {
  Model model;  // AutoEncoder or Vae
  Adam opt_enc;
  Adam opt_dec;
  Rng rng;
  Rng enc_rng;
  std::int64_t step = 0;
};

inline ReconstructionState init_reconstruction(Method method, Eigen::Index data_dim, const TrainConfig& cfg) {
  cfg.validate();
  const Eigen::Index k = cfg.bottleneck(data_dim);
  std::vector<Eigen::Index> rev(cfg.hidden.rbegin(), cfg.hidden.rend());
  Rng re(derive_seed(cfg.seed, 4)), rdec(derive_seed(cfg.seed, 5));
  NetworkSpec dec = generator_spec(k, rev, data_dim);
  ReconstructionState s;
  if (method == Method::ae) {
    AutoEncoder ae{make_mlp(ae_encoder_spec(data_dim, cfg.hidden, k), re), make_mlp(dec, rdec)};
    s.opt_enc = Adam(ae.encoder.layers, cfg.adam());
    s.opt_dec = Adam(ae.decoder.layers, cfg.adam());
    s.model = std::move(ae);
  } else if (method == Method::vae) {
    Vae vae{Encoder{make_mlp(encoder_spec(data_dim, cfg.hidden, k), re)}, make_mlp(dec, rdec)};
    s.opt_enc = Adam(vae.encoder.net.layers, cfg.adam());
    s.opt_dec = Adam(vae.decoder.layers, cfg.adam());
    s.model = std::move(vae);
  } else {
    throw InvalidArgument("init_reconstruction handles ae and vae only");
  }
  s.rng = Rng(derive_seed(cfg.seed, 10));
  s.enc_rng = Rng(derive_seed(cfg.seed, 11));
  return s;
}

// Mean over the batch of the per-sample mean squared error, with encoder/decoder grads.
inline std::pair<Objective, LayerParams> ae_objective(const AutoEncoder& ae, const Matrix& x) {
  const Tape te = forward_tape(ae.encoder, x);
  const Tape td = forward_tape(ae.decoder, te.output);
  const Matrix r = td.output - x;
  const double scale = 1.0 / static_cast<double>(x.rows() * x.cols());
  Objective dec;
  dec.value = r.squaredNorm() * scale;
  Matrix gcode;
  dec.grad = backward(ae.decoder, td, 2.0 * scale * r, &gcode);
  LayerParams enc = backward(ae.encoder, te, gcode);
  return {std::move(dec), std::move(enc)};
}

// One descent step; returns the reconstruction loss (AE) or the ELBO (VAE).
inline double reconstruction_step(ReconstructionState& s, const Matrix& real, const TrainConfig& cfg) {
  if (auto* ae = std::get_if<AutoEncoder>(&s.model)) {
    auto [dec, enc] = ae_objective(*ae, real);
    detail::require_finite(dec.value, dec.grad, "reconstruction loss", s.step);
    detail::require_finite(dec.value, enc, "reconstruction loss", s.step);
    s.opt_dec.descend(ae->decoder.layers, std::move(dec.grad));
    s.opt_enc.descend(ae->encoder.layers, std::move(enc));
    return dec.value;
  }
  auto& vae = std::get<Vae>(s.model);
  const Matrix eps = standard_normal(real.rows(), vae.encoder.latent_dim(), s.enc_rng);
  ElboObjective o = elbo_objective(vae.encoder, vae.decoder, cfg.noise, real, eps);
  detail::require_finite(o.value, o.encoder_grad, "ELBO", s.step);
  detail::require_finite(o.value, o.decoder_grad, "ELBO", s.step);
  detail::negate(o.encoder_grad);
  detail::negate(o.decoder_grad);
  s.opt_enc.descend(vae.encoder.net.layers, std::move(o.encoder_grad));
  s.opt_dec.descend(vae.decoder.layers, std::move(o.decoder_grad));
  return o.value;
}

// ---------------------------------------------------------------------------
// Training loops.

struct LossRecord {
  std::int64_t step = 0;
  std::string name;
  double value = 0.0;
};

struct EvalRecord {
  std::int64_t step = 0;
  double holdout_auc = 0.0;
};

struct History {
  std::vector<LossRecord> losses;
  std::vector<EvalRecord> evals;
};

struct BestCheckpoint {
  // NaN until a holdout evaluation has run.
  double holdout_auc = std::numeric_limits<double>::quiet_NaN();
  std::int64_t step = 0;
  Model model;
};

struct TrainResult {
  Method method = Method::minlgan;
  Model final_model;
  std::int64_t steps = 0;
  // Highest holdout AUC seen; the final model when no evaluation ran.
  BestCheckpoint best;
  History history;
};

// Divergence during a training loop; keeps everything recorded before the failure.
class TrainingDiverged : public DivergenceError {
 public:
  TrainingDiverged(const DivergenceError& cause, History partial)
      : DivergenceError(cause), partial_(std::make_shared<History>(std::move(partial))) {}

  const History& partial_history() const { return *partial_; }

 private:
  std::shared_ptr<const History> partial_;
};

// Anomaly scores of `x` under a trained model of any method.
inline ScoreVector score_model(const Model& model, const NoiseModel& noise, const Matrix& x, int vae_samples,
                               std::uint64_t seed) {
  if (const auto* adv = std::get_if<AdversarialNets>(&model)) return score_gan(adv->d, x);
  if (const auto* ae = std::get_if<AutoEncoder>(&model)) return score_ae(*ae, x);
  return score_vae(std::get<Vae>(model), noise, x, vae_samples, seed);
}

namespace detail {

inline Matrix sample_batch(const Matrix& train, long batch, Rng& rng) {
  std::uniform_int_distribution<Eigen::Index> pick(0, train.rows() - 1);
  Matrix out(batch, train.cols());
  for (long i = 0; i < batch; ++i) out.row(i) = train.row(pick(rng));
  return out;
}

}  // namespace detail

// Runs the alternating loop of `method` on splits.train (normal data only). Every
// eval_every steps the holdout AUC is computed and the best model kept. The minlgan order
// per step is d_step, encoder_step, g_step_minl.
inline TrainResult train(Method method, const Splits& splits, const TrainConfig& cfg) {
  cfg.validate();
  if (splits.train.size() == 0) throw ConfigError("empty training split");
  if (splits.train.count(Label::anomaly) != 0) throw ConfigError("training split must contain normal data only");
  if (splits.holdout.size() == 0) throw ConfigError("empty holdout split");
  const auto hold_labels = splits.holdout.label_ints();
  const bool can_eval = splits.holdout.count(Label::anomaly) > 0 && splits.holdout.count(Label::normal) > 0;
  if (cfg.eval_every > 0 && !can_eval)
    throw ConfigError("holdout needs both normal and anomalous samples for AUC-based model selection");

  const Eigen::Index dim = splits.train.dim();
  const std::uint64_t score_seed = derive_seed(cfg.seed, 20);
  TrainResult result;
  result.method = method;

  std::optional<AdversarialState> adv;
  std::optional<ReconstructionState> rec;
  if (is_adversarial(method)) {
    adv = init_adversarial(dim, cfg);
  } else {
    rec = init_reconstruction(method, dim, cfg);
  }
  auto current_model = [&]() -> Model { return adv ? Model(adv->nets) : rec->model; };
  Rng& batch_rng = adv ? adv->rng : rec->rng;
  auto& history = result.history;

  try {
    for (std::int64_t step = 0; step < cfg.max_steps; ++step) {
      const Matrix real = detail::sample_batch(splits.train.features, cfg.batch_size, batch_rng);
      auto record = [&](const char* name, double v) { history.losses.push_back({step, name, v}); };
      if (adv) {
        adv->step = step;
        record("d_objective", d_step(*adv, real, cfg));
        if (method == Method::minlgan) {
          record("elbo", encoder_step(*adv, real, cfg));
          const auto g = g_step_minl(*adv, real, cfg);
          record("fm_loss", g.fm);
          record("ml_penalty", g.ml_penalty);
        } else {
          record("fm_loss", g_step_gan(*adv, real, cfg));
        }
      } else {
        rec->step = step;
        record(method == Method::ae ? "reconstruction_loss" : "elbo", reconstruction_step(*rec, real, cfg));
      }

      if (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0) {
        const Model m = current_model();
        const double auc = roc(score_model(m, cfg.noise, splits.holdout.features, cfg.vae_samples, score_seed),
                               hold_labels)
                               .auc;
        history.evals.push_back({step + 1, auc});
        if (std::isnan(result.best.holdout_auc) || auc > result.best.holdout_auc)
          result.best = {auc, step + 1, m};
      }
    }
  } catch (const DivergenceError& e) {
    throw TrainingDiverged(e, std::move(history));
  }

  result.steps = cfg.max_steps;
  result.final_model = current_model();
  if (std::isnan(result.best.holdout_auc)) result.best = {result.best.holdout_auc, result.steps, result.final_model};
  return result;
}

inline TrainResult train_ae(const Splits& splits, const TrainConfig& cfg) { return train(Method::ae, splits, cfg); }

inline TrainResult train_vae(const Splits& splits, const TrainConfig& cfg) { return train(Method::vae, splits, cfg); }

}  // namespace minlgan
