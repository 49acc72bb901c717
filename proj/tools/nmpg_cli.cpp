// nmpg: run experiments, evaluate checkpoints, and drive the invariant suites.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "nmpg/checks.hpp"
#include "nmpg/experiment.hpp"

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  return json::parse(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Networked Markov potential games: independent policy gradient and localized actor-critic"};
  app.require_subcommand(1);

  // run ----------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run an experiment config for one or more seeds");
  std::string config_path, seeds_text, out_dir;
  std::optional<int> K, M, T, H, kappa_c, snapshot_every, stride;
  std::optional<double> alpha, lambda, eps, beta;
  std::optional<std::string> beta_mode;
  run->add_option("--config", config_path, "Experiment JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seeds", seeds_text, "Seeds as a..b or a comma list (default: from config)");
  run->add_option("--out", out_dir, "Output directory (default: $NMPG_OUT or ./runs)");
  run->add_option("--K", K, "Critic trajectory length");
  run->add_option("--alpha", alpha, "Critic step size");
  run->add_option("--lambda", lambda, "Trace parameter");
  run->add_option("--eps", eps, "Critic exploration");
  run->add_option("--kappa-c", kappa_c, "Critic truncation radius");
  run->add_option("--M", M, "Outer iterations");
  run->add_option("--T", T, "Gradient-sample trajectories per iteration");
  run->add_option("--H", H, "Gradient-sample horizon");
  run->add_option("--beta", beta, "Actor step size (implies --beta-mode literal)");
  run->add_option("--beta-mode", beta_mode, "paper-exact, paper-approx or literal")
      ->check(CLI::IsMember({"paper-exact", "paper-approx", "literal"}));
  run->add_option("--snapshot-every", snapshot_every, "Parameter snapshot stride (0: final only)");
  run->add_option("--eval-stride", stride, "NE-gap evaluation stride");

  // eval ---------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "Evaluate J and NE-gaps of a checkpoint");
  std::string checkpoint;
  nmpg::EvaluationConfig eval_cfg;
  std::string eval_mode = "local";
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--restarts", eval_cfg.restarts, "Best-response restarts");
  eval->add_option("--steps", eval_cfg.steps, "Best-response ascent steps");
  eval->add_option("--mode", eval_mode, "local or upper")->check(CLI::IsMember({"local", "upper"}));

  // check --------------------------------------------------------------------
  auto* check = app.add_subcommand("check", "Run an invariant suite");
  std::string suite;
  check->add_option("--suite", suite, "Suite name or 'all'")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = nmpg::ExperimentConfig::from_json(load_json(config_path));
      if (K) cfg.actor.critic.K = *K;
      if (alpha) cfg.actor.critic.alpha = *alpha;
      if (lambda) cfg.actor.critic.lambda = *lambda;
      if (eps) cfg.actor.critic.eps = *eps;
      if (kappa_c) cfg.actor.critic.kappa_c = *kappa_c;
      if (M) cfg.actor.M = *M;
      if (T) cfg.actor.T = *T;
      if (H) cfg.actor.H = *H;
      if (snapshot_every) cfg.actor.snapshot_every = *snapshot_every;
      if (stride) cfg.evaluation.stride = *stride;
      if (beta_mode) cfg.beta_mode = *beta_mode;
      if (beta) {
        cfg.actor.beta = *beta;
        cfg.beta_mode = "literal";
      }
      const auto seeds = seeds_text.empty() ? cfg.seeds : nmpg::parse_seeds(seeds_text);
      std::filesystem::path root = !out_dir.empty()            ? std::filesystem::path(out_dir)
                                   : !cfg.output_dir.empty() ? std::filesystem::path(cfg.output_dir)
                                                             : nmpg::default_output_root();
      const auto batch = nmpg::run_batch(cfg, seeds, root);
      for (const auto& r : batch.runs) {
        std::printf("seed %llu: %s", static_cast<unsigned long long>(r.seed), r.ok ? "ok" : "FAILED");
        if (r.series.points() > 0)
          std::printf(", final global gap %.6g, avg Nash regret %.6g",
                      r.series.gaps.row(r.series.points() - 1).maxCoeff(),
                      nmpg::avg_nash_regret(r.series, -1, r.series.points()));
        std::printf(" (%.1fs) -> %s\n", r.wall_seconds, r.dir.string().c_str());
      }
      std::printf("plot data: %s\n", batch.plotdata.string().c_str());
      return batch.all_ok ? 0 : 1;
    }
    if (*eval) {
      eval_cfg.mode = eval_mode == "upper" ? nmpg::GapMode::Upper : nmpg::GapMode::Local;
      std::cout << nmpg::evaluate_checkpoint(checkpoint, eval_cfg).dump(2) << "\n";
      return 0;
    }
    if (*check) {
      const auto names = suite == "all" ? nmpg::check_suites() : std::vector<std::string>{suite};
      bool ok = true;
      json out = json::array();
      for (const auto& name : names) {
        auto rep = nmpg::run_check(name);
        ok = ok && rep.at("passed").get<bool>();
        out.push_back(std::move(rep));
      }
      std::cout << (out.size() == 1 ? out[0] : out).dump(2) << "\n";
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
