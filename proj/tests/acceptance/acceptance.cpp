// Acceptance suite: one PASS / FAIL / BLOCKED line per criterion.
//
//   acceptance                 run every criterion
//   acceptance toy-separation  run the named criteria only
//   acceptance --list
//
// Exit status: 1 if any criterion failed, 77 if every selected criterion was blocked
// (missing dataset), 0 otherwise. UCI criteria look for data under $MINLGAN_DATA_ROOT
// (default: <source>/data).

#include "minlgan/experiment.hpp"

#include "oracles.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>

using namespace minlgan;

namespace {

struct Outcome {
  enum Kind { pass, fail, blocked } kind;
  std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path source_dir() { return MINLGAN_SOURCE_DIR; }

fs::path data_root() {
  const char* env = std::getenv("MINLGAN_DATA_ROOT");
  return env && *env ? fs::path(env) : source_dir() / "data";
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::path(MINLGAN_WORK_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Mlp smooth_mlp(std::vector<Eigen::Index> widths, Rng& rng, int feature_layer = -1) {
  Mlp m = make_mlp(NetworkSpec{std::move(widths), Activation::tanh, Activation::identity, feature_layer}, rng);
  for (auto& l : m.layers) l.bias = standard_normal(l.bias.size(), 1, rng).col(0) * 0.1;
  return m;
}

// ---------------------------------------------------------------------------
// Toy criteria

// Exact density ranking for the circle toy: the noisy-circle density at radius r is
// proportional to exp(-(r^2 + 1) / 2s^2) * integral of exp(r cos t / s^2) dt. Ranking by
// it gives the best AUC any scorer can reach on a given sample.
double circle_log_density(double x, double y, double sigma) {
  const double r = std::hypot(x, y), s2 = sigma * sigma;
  constexpr int kSteps = 4096;
  const double peak = r / s2;
  double acc = 0.0;
  for (int k = 0; k < kSteps; ++k) acc += std::exp(r * std::cos(2.0 * std::numbers::pi * k / kSteps) / s2 - peak);
  return -(r * r + 1.0) / (2.0 * s2) + peak + std::log(acc);
}

Outcome toy_separation() {
  int passes = 0;
  std::string detail;
  double slowest = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    // 1000 training normals, 200 + 200 holdout, and a 500 + 500 test set.
    const Dataset ds = concat(make_circle(1700, 0.05, 300 + seed), make_uniform_box(700, 2, -1.5, 1.5, 400 + seed));
    const Splits s = split(ds, {1000.0 / 1700.0, 200.0 / 1700.0, 200.0 / 700.0, seed});
    if (s.train.size() != 1000 || s.test.count(Label::normal) != 500 || s.test.count(Label::anomaly) != 500)
      return {Outcome::fail, "unexpected split sizes"};
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.a = 0.003;
    cfg.max_steps = 3000;
    cfg.eval_every = 250;
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult r = train(Method::minlgan, s, cfg);
    const double auc = roc(score_gan(std::get<AdversarialNets>(r.best.model).d, s.test.features), s.test.label_ints()).auc;
    slowest = std::max(slowest, seconds_since(t0));

    const Matrix raw = s.test.normalization.invert(s.test.features);
    Vector bayes(raw.rows());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) bayes(i) = -circle_log_density(raw(i, 0), raw(i, 1), 0.05);
    const double best = roc(bayes, s.test.label_ints()).auc;
    passes += auc >= 0.95;
    detail += (seed ? ", " : "") + fixed(auc) + " (optimal " + fixed(best) + ")";
  }
  return verdict(passes >= 4 && slowest < 300.0, std::to_string(passes) + "/5 seeds reach AUC >= 0.95; per seed: " +
                                                     detail + "; slowest run " + fixed(slowest, 1) + " s");
}

Outcome kl_effect() {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset ds = concat(make_circle(1000, 0.05, 500 + seed), make_uniform_box(100, 2, -1.5, 1.5, 600 + seed));
    const Splits s = split(ds, {0.9, 0.1, 0.99, seed});
    auto off_fraction = [&](double a) {
      TrainConfig cfg;
      cfg.seed = seed;
      cfg.a = a;
      cfg.max_steps = 3000;
      cfg.eval_every = 0;
      const auto nets = std::get<AdversarialNets>(train(Method::minlgan, s, cfg).final_model);
      Rng rng(700 + seed);
      const Matrix gz = s.train.normalization.invert(generate(nets.g, sample_prior(1000, nets.g.latent_dim(), rng)));
      long off = 0;
      for (Eigen::Index i = 0; i < gz.rows(); ++i) off += std::abs(gz.row(i).norm() - 1.0) > 0.3;
      return static_cast<double>(off) / 1000.0;
    };
    const double base = off_fraction(0.0), pushed = off_fraction(0.003);
    wins += pushed > base;
    detail += (seed ? ", " : "") + fixed(base, 3) + " -> " + fixed(pushed, 3);
  }
  return verdict(wins >= 4, std::to_string(wins) + "/5 seeds; off-manifold fraction a=0 -> a=0.003: " + detail);
}

Outcome stability_trend() {
  ExperimentConfig cfg = load_config(source_dir() / "configs" / "circle.json");
  cfg.restarts = 1;
  cfg.ensemble_n = 10;
  cfg.output_dir = work_dir("stability").string();
  const RunRecord rec = run_experiment(cfg, {std::nullopt, 0, nullptr});
  if (rec.status != "completed") return {Outcome::fail, "ensemble run failed: " + rec.error};
  // 1000 trials exceeds C(10, 5) = 252, so every subset is enumerated.
  const StabilityCurves c = emit_stability(rec, 1000, 0, rec.dir / "stability");
  auto decreasing = [](const std::vector<StabilityPoint>& pts) {
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (!(pts[i].std_auc < pts[i - 1].std_auc)) return false;
    return true;
  };
  double worst_gap = 0.0;
  for (const auto& p : c.scaled)
    if (p.k >= 5) worst_gap = std::max(worst_gap, std::abs(p.mean_auc - c.scaled.back().mean_auc));
  std::string stds;
  for (const auto& p : c.plain) stds += (p.k > 1 ? " " : "") + sci(p.std_auc);
  const bool ok = c.plain.size() == 10 && decreasing(c.plain) && decreasing(c.scaled) && worst_gap <= 0.01;
  return verdict(ok, std::string("std strictly decreasing: plain ") + (decreasing(c.plain) ? "yes" : "no") +
                         ", scaled " + (decreasing(c.scaled) ? "yes" : "no") + " [plain std " + stds +
                         "]; max |scaled mean(k>=5) - mean(10)| = " + sci(worst_gap));
}

// ---------------------------------------------------------------------------
// Numerical criteria

Outcome auc_oracle() {
  Rng rng(2024);
  std::uniform_int_distribution<int> size(2, 200), coin(0, 1), level(0, 7);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(rng);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = coin(rng);
    labels[0] = 0;
    labels[1] = 1;
    std::vector<double> scores(labels.size());
    // Half the instances draw from a small set of values to exercise ties.
    for (auto& v : scores) v = trial % 2 ? static_cast<double>(level(rng)) : normal(rng);
    const double got = roc(Eigen::Map<const Vector>(scores.data(), n), labels).auc;
    worst = std::max(worst, std::abs(got - oracle::pairwise_auc(scores, labels)));
  }
  return verdict(worst <= 1e-12, "1000 instances, max |AUC - Mann-Whitney| = " + sci(worst));
}

Outcome affine_invariance() {
  Rng rng(77);
  std::uniform_int_distribution<int> members(1, 10), rows(5, 100), hold_rows(5, 50);
  std::uniform_real_distribution<double> log_scale(std::log(0.01), std::log(100.0)), shift(-50.0, 50.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int m = members(rng), n = rows(rng), h = hold_rows(rng);
    std::vector<Vector> test, hold, test_t, hold_t;
    for (int i = 0; i < m; ++i) {
      const double spread = std::exp(log_scale(rng));
      test.push_back(standard_normal(n, 1, rng).col(0) * spread);
      hold.push_back(standard_normal(h, 1, rng).col(0) * spread);
      const double a = std::exp(log_scale(rng)), b = shift(rng);
      test_t.push_back((a * test.back().array() + b).matrix());
      hold_t.push_back((a * hold.back().array() + b).matrix());
    }
    const Vector before = ensemble::scaled(test, ensemble::calibrate(hold), nullptr);
    const Vector after = ensemble::scaled(test_t, ensemble::calibrate(hold_t), nullptr);
    worst = std::max(worst, (before - after).cwiseAbs().maxCoeff());
  }
  return verdict(worst <= 1e-9, "100 ensembles, max score change = " + sci(worst));
}

Outcome gradient_checks() {
  Rng rng(4242);
  double worst_d = 0, worst_elbo = 0, worst_fm = 0, worst_minl = 0;
  std::uniform_real_distribution<double> coef(0.01, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index dim = 1 + trial % 3, latent = 1 + trial % 2;
    const NoiseModel noise{trial % 2 ? NoiseModel::Family::laplace : NoiseModel::Family::gaussian, 0.25 + 0.1 * trial};
    const Generator g{smooth_mlp({latent, 6, dim}, rng)};
    const Discriminator d{smooth_mlp({dim, 5, 4, 1}, rng, 1)};
    const Encoder e{smooth_mlp({dim, 4, 2 * latent}, rng)};
    const Matrix real = standard_normal(8, dim, rng) * 2.0, fake = standard_normal(7, dim, rng);
    const Matrix z = standard_normal(8, latent, rng), eps = standard_normal(8, latent, rng);

    const auto od = discriminator_objective(d, real, fake);
    worst_d = std::max(worst_d, oracle::relative_error(flatten(od.grad), oracle::numeric_gradient(
        [&](const LayerParams& p) { return discriminator_objective(Discriminator{Mlp{d.net.spec, p}}, real, fake).value; },
        d.net.layers)));

    const auto oe = elbo_objective(e, g.net, noise, real, eps);
    worst_elbo = std::max(worst_elbo, oracle::relative_error(flatten(oe.encoder_grad), oracle::numeric_gradient(
        [&](const LayerParams& p) { return elbo_objective(Encoder{Mlp{e.net.spec, p}}, g.net, noise, real, eps).value; },
        e.net.layers)));
    worst_elbo = std::max(worst_elbo, oracle::relative_error(flatten(oe.decoder_grad), oracle::numeric_gradient(
        [&](const LayerParams& p) { return elbo_objective(e, Mlp{g.net.spec, p}, noise, real, eps).value; },
        g.net.layers)));

    const auto of = feature_matching_objective(g, d, real, z);
    worst_fm = std::max(worst_fm, oracle::relative_error(flatten(of.grad), oracle::numeric_gradient(
        [&](const LayerParams& p) { return feature_matching_objective(Generator{Mlp{g.net.spec, p}}, d, real, z).value; },
        g.net.layers)));

    const double a = coef(rng);
    const auto om = minl_generator_objective(g, d, e, noise, a, real, z, eps);
    worst_minl = std::max(worst_minl, oracle::relative_error(flatten(om.grad), oracle::numeric_gradient(
        [&](const LayerParams& p) {
          return minl_generator_objective(Generator{Mlp{g.net.spec, p}}, d, e, noise, a, real, z, eps).value;
        },
        g.net.layers)));
  }
  const double worst = std::max({worst_d, worst_elbo, worst_fm, worst_minl});
  return verdict(worst < 1e-4, "10 configurations each, max relative error: d-loss " + sci(worst_d) + ", ELBO " +
                                   sci(worst_elbo) + ", feature matching " + sci(worst_fm) + ", MinLGAN generator " +
                                   sci(worst_minl));
}

Outcome elbo_bound() {
  Rng rng(31337);
  const NoiseModel noise{NoiseModel::Family::gaussian, 0.3};
  double max_excess = -std::numeric_limits<double>::infinity();
  for (int point = 0; point < 50; ++point) {
    const Generator g{smooth_mlp({1, 6, 1}, rng)};
    const Encoder e{smooth_mlp({1, 4, 2}, rng)};
    const double x = std::normal_distribution<double>(0.0, 1.5)(rng);
    const Matrix xm = Matrix::Constant(1, 1, x);
    const double marginal = oracle::simpson(
        [&](double z) {
          return oracle::normal_pdf(z, 0.0, 1.0) *
                 oracle::normal_pdf(x, forward(g.net, Matrix::Constant(1, 1, z))(0, 0), noise.sigma);
        },
        -12.0, 12.0, 6000);
    const double elbo = oracle::simpson(
        [&](double eps) {
          return oracle::normal_pdf(eps, 0.0, 1.0) * elbo_objective(e, g.net, noise, xm, Matrix::Constant(1, 1, eps)).value;
        },
        -12.0, 12.0, 6000);
    max_excess = std::max(max_excess, elbo - std::log(marginal));
  }
  return verdict(max_excess <= 1e-6, "50 points, max ELBO - log p = " + sci(max_excess));
}

// ---------------------------------------------------------------------------
// UCI criteria

struct UciRun {
  std::optional<RunRecord> record;
  std::string missing;
  double seconds = 0.0;
};

// Runs configs/<name>.json when its data files are present.
UciRun run_uci(const std::string& name, const fs::path& out) {
  const ExperimentConfig cfg = load_config(source_dir() / "configs" / (name + ".json"));
  for (const auto& f : cfg.dataset.files)
    if (!fs::exists(data_root() / f)) return {std::nullopt, (data_root() / f).string(), 0.0};
  ExperimentConfig local = cfg;
  local.output_dir = out.string();
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec = run_experiment(local, {data_root(), 0, &std::clog});
  return {std::move(rec), "", seconds_since(t0)};
}

Outcome blocked(const std::string& missing) { return {Outcome::blocked, "dataset not found: " + missing}; }

Outcome uci_target(const std::string& name, double single_min, double ensemble_min, double budget_seconds) {
  const UciRun r = run_uci(name, work_dir(name));
  if (!r.record) return blocked(r.missing);
  if (r.record->status != "completed") return {Outcome::fail, "run failed: " + r.record->error};
  const double single = r.record->test_auc.at("single"), ens = r.record->test_auc.at("ensemble");
  return verdict(single >= single_min && ens >= ensemble_min && r.seconds < budget_seconds,
                 "MinLGAN " + fixed(single) + " (>= " + fixed(single_min, 2) + "), EMinLGAN-1 " + fixed(ens) +
                     " (>= " + fixed(ensemble_min, 2) + "), " + fixed(r.seconds, 0) + " s");
}

Outcome uci_ordering() {
  int holds = 0;
  std::string detail;
  for (const char* name : {"kdd-a", "cov-a", "cov-b", "shu-a"}) {
    const UciRun r = run_uci(name, work_dir(std::string("ordering-") + name));
    if (!r.record) return blocked(r.missing);
    if (r.record->status != "completed") return {Outcome::fail, std::string(name) + " run failed: " + r.record->error};
    const double single = r.record->test_auc.at("single"), ens = r.record->test_auc.at("ensemble");
    holds += ens >= single;
    detail += std::string(detail.empty() ? "" : ", ") + name + " " + fixed(ens) + " vs " + fixed(single);
  }
  return verdict(holds >= 3, std::to_string(holds) + "/4 setups with ensemble >= single; " + detail);
}

Outcome uci_determinism() {
  const UciRun a = run_uci("shu-a", work_dir("determinism-a"));
  if (!a.record) return blocked(a.missing);
  const UciRun b = run_uci("shu-a", work_dir("determinism-b"));
  if (a.record->status != "completed" || b.record->status != "completed") return {Outcome::fail, "run failed"};
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a.record->dir)) {
    if (e.path().filename() != "metrics.tsv") continue;
    const fs::path other = b.record->dir / fs::relative(e.path(), a.record->dir);
    if (!fs::exists(other) || io::read_text(e.path()) != io::read_text(other))
      return {Outcome::fail, "metrics differ: " + fs::relative(e.path(), a.record->dir).string()};
    ++compared;
  }
  return verdict(compared > 0, std::to_string(compared) + " metrics files byte-identical");
}

struct Criterion {
  std::string name;
  std::function<Outcome()> check;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {"toy-separation", toy_separation},
      {"kl-effect", kl_effect},
      {"shu-a", [] { return uci_target("shu-a", 0.94, 0.95, 30 * 60); }},
      {"cov-b", [] { return uci_target("cov-b", 0.90, 0.93, 45 * 60); }},
      {"uci-ordering", uci_ordering},
      {"auc-oracle", auc_oracle},
      {"affine-invariance", affine_invariance},
      {"gradient-checks", gradient_checks},
      {"elbo-bound", elbo_bound},
      {"stability-trend", stability_trend},
      {"determinism", uci_determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> selected;
  bool list = false;
  app.add_option("criteria", selected, "Criteria to run (default: all)");
  app.add_flag("--list", list, "Print criterion names");
  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& c : criteria()) std::cout << c.name << "\n";
    return 0;
  }
  for (const auto& name : selected)
    if (std::none_of(criteria().begin(), criteria().end(), [&](const Criterion& c) { return c.name == name; })) {
      std::cerr << "unknown criterion '" << name << "'; see --list\n";
      return 2;
    }
  std::vector<const Criterion*> run;
  for (const auto& c : criteria())
    if (selected.empty() || std::find(selected.begin(), selected.end(), c.name) != selected.end()) run.push_back(&c);

  int failed = 0, blocked_count = 0;
  for (const auto* c : run) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{Outcome::fail, ""};
    try {
      o = c->check();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("error: ") + e.what()};
    }
    static const char* tags[] = {"PASS", "FAIL", "BLOCKED"};
    std::cout << tags[o.kind] << "  " << c->name << ": " << o.detail << " [" << fixed(seconds_since(t0), 1) << " s]"
              << std::endl;
    failed += o.kind == Outcome::fail;
    blocked_count += o.kind == Outcome::blocked;
  }
  if (failed) return 1;
  return blocked_count == static_cast<int>(run.size()) ? 77 : 0;
}
