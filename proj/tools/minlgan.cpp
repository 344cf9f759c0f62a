// Command-line front end for the experiment runner.
//
//   minlgan run --config configs/circle.json [--out runs] [--seed 3] [--workers 4] [--method gan]
//   minlgan report runs/ [--out report]
//   minlgan plot-toy runs/<hash> [--out toy.svg]
//   minlgan stability runs/<hash> [--out stability]
//   minlgan score runs/<hash> --input rows.csv [--out scores.tsv]
//
// Relative dataset paths resolve against $MINLGAN_DATA_ROOT (default: working directory).
// Exit codes: 0 success, 1 a run failed, 2 bad config, data or arguments.

#include "minlgan/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using namespace minlgan;

// A path names either one run directory or an output directory whose subdirectories
// are runs.
std::vector<RunRecord> collect_records(const std::vector<std::string>& paths) {
  std::vector<RunRecord> out;
  for (const auto& p : paths) {
    if (fs::exists(fs::path(p) / "record.json")) {
      out.push_back(load_record(p));
      continue;
    }
    if (!fs::is_directory(p)) throw IoError("no run found at " + p);
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(p))
      if (fs::exists(e.path() / "record.json")) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw IoError("no run found at " + p);
    for (const auto& d : dirs) out.push_back(load_record(d));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-likelihood GAN anomaly detection experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Train and evaluate the experiments in one or more configs");
  std::vector<std::string> configs;
  std::string run_out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subsample;
  std::string method;
  unsigned workers = 0;
  run->add_option("--config", configs, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "Output directory (overrides output_dir)");
  run->add_option("--seed", seed, "Base training seed (overrides train.seed)");
  run->add_option("--workers", workers, "Parallel training jobs (0: all cores)");
  run->add_option("--subsample", subsample, "Keep at most this many normal rows (tabular data)");
  run->add_option("--method", method, "Override the method (gan, minlgan, ae, vae)");

  auto* report = app.add_subcommand("report", "Aggregate completed runs into tables and plots");
  std::vector<std::string> report_runs;
  std::string report_out = "report";
  report->add_option("runs", report_runs, "Run directories or output directories")->required();
  report->add_option("--out", report_out, "Report directory");

  auto* toy = app.add_subcommand("plot-toy", "Scatter and discriminator-logit figure for a 2-D run");
  std::string toy_run, toy_out;
  int grid = 120;
  toy->add_option("run", toy_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  toy->add_option("--out", toy_out, "SVG path (default: <run>/toy.svg)");
  toy->add_option("--grid", grid, "Heatmap resolution per axis")->check(CLI::Range(2, 2000));

  auto* stab = app.add_subcommand("stability", "Ensemble AUC as a function of the number of members");
  std::string stab_run, stab_out;
  std::size_t trials = 300;
  std::uint64_t stab_seed = 0;
  stab->add_option("run", stab_run, "Run directory with ensemble members")->required()->check(CLI::ExistingDirectory);
  stab->add_option("--out", stab_out, "Output directory (default: <run>/stability)");
  stab->add_option("--trials", trials, "Subsets per member count when not enumerating all");
  stab->add_option("--seed", stab_seed, "Seed for subset sampling");

  auto* score = app.add_subcommand("score", "Apply a saved run to new feature rows");
  std::string score_run, score_in, score_out = "scores.tsv";
  std::size_t restart = 0;
  score->add_option("run", score_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  score->add_option("--input", score_in, "Numeric feature rows")->required()->check(CLI::ExistingFile);
  score->add_option("--out", score_out, "Output TSV");
  score->add_option("--restart", restart, "Which restart's model to use");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      int status = 0;
      for (const auto& path : configs) {
        ExperimentConfig cfg = load_config(path);
        if (!run_out.empty()) cfg.output_dir = run_out;
        if (seed) cfg.train.seed = *seed;
        if (subsample) cfg.dataset.subsample_normals = *subsample;
        if (!method.empty()) {
          cfg.method = parse_method(method);
          if (!is_adversarial(cfg.method)) cfg.ensemble_n = 0;
        }
        const RunRecord rec = run_experiment(cfg, {std::nullopt, workers, &std::clog});
        std::cout << rec.dir.string() << "\t" << rec.status << "\n";
        if (rec.status != "completed") status = 1;
      }
      return status;
    }
    if (*report) {
      for (const auto& f : emit_report(collect_records(report_runs), report_out)) std::cout << f.string() << "\n";
      std::cout << io::read_text(fs::path(report_out) / "table.md");
    } else if (*toy) {
      const RunRecord rec = load_record(toy_run);
      std::cout << emit_toy_figure(rec, grid, toy_out.empty() ? rec.dir / "toy.svg" : fs::path(toy_out)).string()
                << "\n";
    } else if (*stab) {
      const RunRecord rec = load_record(stab_run);
      const fs::path out = stab_out.empty() ? rec.dir / "stability" : fs::path(stab_out);
      const auto curves = emit_stability(rec, trials, stab_seed, out);
      std::cout << "k\tplain_mean\tplain_std\tscaled_mean\tscaled_std\n";
      for (std::size_t i = 0; i < curves.plain.size(); ++i)
        std::cout << curves.plain[i].k << "\t" << curves.plain[i].mean_auc << "\t" << curves.plain[i].std_auc << "\t"
                  << curves.scaled[i].mean_auc << "\t" << curves.scaled[i].std_auc << "\n";
    } else if (*score) {
      std::cout << score_file(load_record(score_run), score_in, score_out, restart).string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
