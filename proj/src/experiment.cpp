#include "nmpg/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "nmpg/rng.hpp"

namespace nmpg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_keys(const json& j, const char* where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string algorithm_name(Algorithm a) { return a == Algorithm::Ipg ? "ipg" : "lac"; }

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  require_keys(j, "config", {"game", "algorithm", "actor", "critic", "features", "init",
                             "evaluation", "seeds", "output_dir"});
  ExperimentConfig c;
  if (!j.contains("game")) throw std::invalid_argument("config: 'game' is required");
  c.game = j.at("game");
  if (j.contains("algorithm")) {
    const auto a = j.at("algorithm").get<std::string>();
    if (a == "ipg") c.algorithm = Algorithm::Ipg;
    else if (a == "lac") c.algorithm = Algorithm::Lac;
    else throw std::invalid_argument("config: algorithm must be ipg or lac");
  }
  if (j.contains("actor")) {
    const json& a = j.at("actor");
    require_keys(a, "actor", {"M", "T", "H", "beta", "kappa_G", "snapshot_every", "critic_warm_start"});
    read_opt(a, "M", c.actor.M);
    read_opt(a, "T", c.actor.T);
    read_opt(a, "H", c.actor.H);
    read_opt(a, "kappa_G", c.actor.kappa_G);
    read_opt(a, "snapshot_every", c.actor.snapshot_every);
    read_opt(a, "critic_warm_start", c.actor.critic_warm_start);
    if (a.contains("beta")) {
      const json& b = a.at("beta");
      if (b.is_number()) {
        c.actor.beta = b.get<double>();
        c.beta_mode = "literal";
      } else {
        c.beta_mode = b.get<std::string>();
        if (c.beta_mode != "paper-exact" && c.beta_mode != "paper-approx")
          throw std::invalid_argument("actor.beta: number, \"paper-exact\" or \"paper-approx\"");
      }
    }
  }
  if (j.contains("critic")) {
    const json& k = j.at("critic");
    require_keys(k, "critic", {"K", "alpha", "lambda", "eps", "kappa_c"});
    read_opt(k, "K", c.actor.critic.K);
    read_opt(k, "alpha", c.actor.critic.alpha);
    read_opt(k, "lambda", c.actor.critic.lambda);
    read_opt(k, "eps", c.actor.critic.eps);
    read_opt(k, "kappa_c", c.actor.critic.kappa_c);
  }
  if (j.contains("features")) c.features = feature_mode_from_string(j.at("features").get<std::string>());
  if (j.contains("init")) {
    const json& i = j.at("init");
    require_keys(i, "init", {"kind", "scale"});
    read_opt(i, "kind", c.init.kind);
    read_opt(i, "scale", c.init.scale);
    if (c.init.kind != "zeros" && c.init.kind != "normal")
      throw std::invalid_argument("init.kind: zeros or normal");
  }
  if (j.contains("evaluation")) {
    const json& e = j.at("evaluation");
    require_keys(e, "evaluation", {"stride", "restarts", "steps", "init_scale", "mode"});
    read_opt(e, "stride", c.evaluation.stride);
    read_opt(e, "restarts", c.evaluation.restarts);
    read_opt(e, "steps", c.evaluation.steps);
    read_opt(e, "init_scale", c.evaluation.init_scale);
    if (e.contains("mode")) {
      const auto m = e.at("mode").get<std::string>();
      if (m == "local") c.evaluation.mode = GapMode::Local;
      else if (m == "upper") c.evaluation.mode = GapMode::Upper;
      else throw std::invalid_argument("evaluation.mode: local or upper");
    }
    if (c.evaluation.stride < 1 || c.evaluation.restarts < 1 || c.evaluation.steps < 0)
      throw std::invalid_argument("evaluation: stride >= 1, restarts >= 1, steps >= 0");
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    c.seeds = s.is_string() ? parse_seeds(s.get<std::string>()) : s.get<std::vector<std::uint64_t>>();
  }
  read_opt(j, "output_dir", c.output_dir);
  return c;
}

json ExperimentConfig::to_json() const {
  json beta = beta_mode == "literal" ? json(actor.beta) : json(beta_mode);
  return {
      {"game", game},
      {"algorithm", algorithm_name(algorithm)},
      {"actor",
       {{"M", actor.M}, {"T", actor.T}, {"H", actor.H}, {"beta", beta}, {"kappa_G", actor.kappa_G},
        {"snapshot_every", actor.snapshot_every}, {"critic_warm_start", actor.critic_warm_start}}},
      {"critic",
       {{"K", actor.critic.K}, {"alpha", actor.critic.alpha}, {"lambda", actor.critic.lambda},
        {"eps", actor.critic.eps}, {"kappa_c", actor.critic.kappa_c}}},
      {"features", nmpg::to_string(features)},
      {"init", {{"kind", init.kind}, {"scale", init.scale}}},
      {"evaluation",
       {{"stride", evaluation.stride}, {"restarts", evaluation.restarts}, {"steps", evaluation.steps},
        {"init_scale", evaluation.init_scale},
        {"mode", evaluation.mode == GapMode::Local ? "local" : "upper"}}},
      {"seeds", seeds},
      {"output_dir", output_dir},
  };
}

double ExperimentConfig::resolved_beta(const NetworkedGame& game) const {
  if (beta_mode == "paper-exact") return default_beta(game, actor.kappa_G, BetaMode::Exact);
  if (beta_mode == "paper-approx") return default_beta(game, actor.kappa_G, BetaMode::Approx);
  if (beta_mode == "literal") return actor.beta;
  throw std::invalid_argument("unknown beta mode '" + beta_mode + "'");
}

std::vector<int> evaluation_points(int M, int stride) {
  std::vector<int> pts;
  for (int m = 0; m <= M; m += stride) pts.push_back(m);
  if (pts.back() != M) pts.push_back(M);
  return pts;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, dots));
      const auto hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw std::invalid_argument("empty range");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    } else {
      std::stringstream ss(text);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
    }
  } catch (const std::exception&) {
    throw std::invalid_argument("seeds: expected 'a..b' or a comma list, got '" + text + "'");
  }
  if (out.empty()) throw std::invalid_argument("seeds: empty list");
  return out;
}

fs::path default_output_root() {
  const char* env = std::getenv("NMPG_OUT");
  return env && *env ? fs::path(env) : fs::path("runs");
}

std::string regret_csv(const RegretSeries& series, const std::vector<std::vector<double>>& objectives) {
  std::string out = "m,agent,ne_gap,j_i,avg_regret_prefix,nash_regret_prefix\n";
  const int n = series.agents();
  std::vector<double> sums(n, 0.0);
  double nr_sum = 0.0;
  for (int k = 0; k < series.points(); ++k) {
    nr_sum += series.gaps.row(k).maxCoeff();
    for (int i = 0; i < n; ++i) {
      sums[i] += series.gaps(k, i);
      out += std::to_string(series.iterations[k]) + "," + std::to_string(i) + "," +
             format_double(series.gaps(k, i)) + "," + format_double(objectives[k][i]) + "," +
             format_double(sums[i] / (k + 1)) + "," + format_double(nr_sum / (k + 1)) + "\n";
    }
  }
  return out;
}

namespace {

SoftmaxParams initial_params(const NetworkedGame& game, const InitConfig& init, std::uint64_t seed) {
  if (init.kind == "zeros") return SoftmaxParams::zeros(game);
  Rng rng = substream(seed, "init");
  return SoftmaxParams::random_normal(game, init.scale, rng);
}

json checkpoint_json(const NetworkedGame& game, const ExperimentConfig& config, std::uint64_t seed,
                     int m, const SoftmaxParams& theta, const std::vector<Eigen::VectorXd>* weights) {
  json j = {{"game", game.source()}, {"seed", seed}, {"iteration", m},
            {"theta", params_to_json(game, theta)}, {"config", config.to_json()}};
  if (weights) {
    json w = json::array();
    for (std::size_t i = 0; i < weights->size(); ++i) {
      const auto& v = (*weights)[i];
      w.push_back({{"agent", i}, {"w", std::vector<double>(v.data(), v.data() + v.size())}});
    }
    j["critic_weights"] = w;
  }
  return j;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed, const fs::path& out_root) {
  RunResult res;
  res.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  const NetworkedGame game = game_from_json(config.game);
  const int M = config.actor.M;
  const auto points = evaluation_points(M, config.evaluation.stride);
  std::set<int> point_set(points.begin(), points.end());
  res.series.gaps.resize(0, game.n());

  // Dense games also get the global-observation upper bound next to the configured estimate.
  const bool bracket = dense_enumerable(game);
  std::string raw_csv = "m,agent,raw_gap,best,current,upper_best\n";
  // Gap evaluation only reads theta; its randomness comes from its own substream so it
  // cannot perturb the learning run.
  const std::uint64_t br_master = substream(seed, "best-response")();
  auto hook = [&](int m, const SoftmaxParams& theta) {
    if (!point_set.count(m)) return;
    BestResponseOptions opt;
    opt.restarts = config.evaluation.restarts;
    opt.steps = config.evaluation.steps;
    opt.init_scale = config.evaluation.init_scale;
    opt.seed = splitmix64(br_master ^ static_cast<std::uint64_t>(m));
    const auto profile = softmax_profile(theta);
    const auto gaps = ne_gaps(game, profile, config.evaluation.mode, opt);
    std::vector<double> row, js;
    for (int i = 0; i < game.n(); ++i) {
      row.push_back(gaps[i].gap);
      js.push_back(gaps[i].current);
      raw_csv += std::to_string(m) + "," + std::to_string(i) + "," + format_double(gaps[i].raw) + "," +
                 format_double(gaps[i].best) + "," + format_double(gaps[i].current) + "," +
                 (bracket ? format_double(best_response_upper(game, profile, i)) : "nan") + "\n";
    }
    res.series.append(m, row);
    res.objectives.push_back(std::move(js));
  };

  LearningResult learned;
  try {
    ActorConfig actor = config.actor;
    actor.beta = config.resolved_beta(game);
    const SoftmaxParams theta0 = initial_params(game, config.init, seed);
    if (config.algorithm == Algorithm::Ipg) {
      learned = ipg_exact(game, theta0, actor.beta, M, actor.snapshot_every, hook);
    } else {
      const auto features = make_all_features(game, actor.critic.kappa_c, config.features);
      learned = localized_actor_critic(game, actor, features, theta0, seed, hook);
    }
    res.theta = learned.theta;
    res.ok = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (out_root.empty()) return res;
  res.dir = out_root / ("seed_" + std::to_string(seed));
  fs::create_directories(res.dir);
  write_file(res.dir / "regret.csv", regret_csv(res.series, res.objectives));
  write_file(res.dir / "gaps_raw.csv", raw_csv);

  double beta = std::nan("");
  try {
    beta = config.resolved_beta(game);
  } catch (const std::exception&) {
  }
  const RegretSeries& series = res.series;
  json meta = {
      {"seed", seed},
      {"algorithm", algorithm_name(config.algorithm)},
      {"beta", beta},
      {"config", config.to_json()},
      {"evaluation_stride", config.evaluation.stride},
      {"evaluated_points", series.points()},
      {"evaluation_iterations", series.iterations},
      {"regret_note", "prefix averages run over evaluated points only"},
      {"rng_substreams", {"init", "critic", "actor", "best-response"}},
      {"ok", res.ok},
      {"error", res.error},
      {"wall_seconds", res.wall_seconds},
  };
  if (series.points() > 0) {
    meta["final_avg_nash_regret"] = avg_nash_regret(series, -1, series.points());
    meta["final_nash_regret"] = nash_regret(series, series.points());
    meta["final_global_gap"] = series.gaps.row(series.points() - 1).maxCoeff();
  }
  write_file(res.dir / "metadata.json", meta.dump(2) + "\n");
  if (res.ok) {
    const auto* weights = learned.log.critic_weights.empty() ? nullptr : &learned.log.critic_weights.back();
    write_file(res.dir / "checkpoint.json",
               checkpoint_json(game, config, seed, M, res.theta, weights).dump(1) + "\n");
    if (config.actor.snapshot_every > 0 && !learned.log.snapshots.empty()) {
      fs::create_directories(res.dir / "snapshots");
      for (std::size_t k = 0; k < learned.log.snapshots.size(); ++k) {
        const int m = learned.log.snapshot_iterations[k];
        const auto* w = k < learned.log.critic_weights.size() ? &learned.log.critic_weights[k] : nullptr;
        write_file(res.dir / "snapshots" / ("theta_" + std::to_string(m) + ".json"),
                   checkpoint_json(game, config, seed, m, learned.log.snapshots[k], w).dump(1) + "\n");
      }
    }
  }
  return res;
}

PlotData aggregate(const std::vector<RunResult>& runs) {
  PlotData out;
  std::vector<const RunResult*> use;
  for (const auto& r : runs)
    if (r.ok && r.series.points() > 0) use.push_back(&r);
  // Seed order makes the floating-point sums independent of the batch order.
  std::sort(use.begin(), use.end(), [](auto* a, auto* b) { return a->seed < b->seed; });
  if (use.empty()) return out;
  out.iterations = use.front()->series.iterations;
  for (auto* r : use)
    if (r->series.iterations != out.iterations)
      throw std::invalid_argument("aggregate: runs have different evaluation schedules");
  out.runs = static_cast<int>(use.size());
  std::vector<std::vector<double>> nr, anr;
  for (auto* r : use) {
    nr.push_back(nash_regret_curve(r->series));
    anr.push_back(avg_nash_regret_curve(r->series));
  }
  auto stats = [&](const std::vector<std::vector<double>>& c, std::size_t k, double& mean, double& sd) {
    mean = 0.0;
    for (const auto& v : c) mean += v[k];
    mean /= c.size();
    double ss = 0.0;
    for (const auto& v : c) ss += (v[k] - mean) * (v[k] - mean);
    sd = c.size() > 1 ? std::sqrt(ss / (c.size() - 1)) : 0.0;
  };
  const std::size_t P = out.iterations.size();
  out.nash_mean.resize(P);
  out.nash_std.resize(P);
  out.avg_mean.resize(P);
  out.avg_std.resize(P);
  for (std::size_t k = 0; k < P; ++k) {
    stats(nr, k, out.nash_mean[k], out.nash_std[k]);
    stats(anr, k, out.avg_mean[k], out.avg_std[k]);
  }
  return out;
}

std::string plotdata_csv(const PlotData& data) {
  std::string out = "m,nash_regret_mean,nash_regret_std,avg_nash_regret_mean,avg_nash_regret_std,runs\n";
  for (std::size_t k = 0; k < data.iterations.size(); ++k)
    out += std::to_string(data.iterations[k]) + "," + format_double(data.nash_mean[k]) + "," +
           format_double(data.nash_std[k]) + "," + format_double(data.avg_mean[k]) + "," +
           format_double(data.avg_std[k]) + "," + std::to_string(data.runs) + "\n";
  return out;
}

BatchResult run_batch(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                      const fs::path& out_root) {
  BatchResult b;
  b.all_ok = true;
  for (auto seed : seeds) {
    b.runs.push_back(run_experiment(config, seed, out_root));
    if (!b.runs.back().ok) {
      b.all_ok = false;
      std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(seed),
                   b.runs.back().error.c_str());
    }
  }
  if (!out_root.empty()) {
    fs::create_directories(out_root);
    b.plotdata = out_root / "plotdata.csv";
    write_file(b.plotdata, plotdata_csv(aggregate(b.runs)));
  }
  return b;
}

json evaluate_checkpoint(const fs::path& file, const EvaluationConfig& eval) {
  std::ifstream f(file);
  if (!f) throw std::runtime_error("cannot open " + file.string());
  const json j = json::parse(f);
  const NetworkedGame game = game_from_json(j.at("game"));
  const SoftmaxParams theta = params_from_json(game, j.at("theta"));
  BestResponseOptions opt;
  opt.restarts = eval.restarts;
  opt.steps = eval.steps;
  opt.init_scale = eval.init_scale;
  opt.seed = substream(j.value("seed", std::uint64_t{0}), "eval")();
  const auto gaps = ne_gaps(game, softmax_profile(theta), eval.mode, opt);
  json agents = json::array();
  for (int i = 0; i < game.n(); ++i)
    agents.push_back({{"agent", i}, {"j", gaps[i].current}, {"best", gaps[i].best},
                      {"ne_gap", gaps[i].gap}, {"raw_gap", gaps[i].raw}});
  return {{"checkpoint", file.string()}, {"iteration", j.value("iteration", -1)},
          {"global_ne_gap", global_ne_gap(gaps)}, {"agents", agents}};
}

}  // namespace nmpg
