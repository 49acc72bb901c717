#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmpg/actor.hpp"
#include "nmpg/features.hpp"
#include "nmpg/oracle.hpp"
#include "nmpg/regret.hpp"

namespace nmpg {

enum class Algorithm { Ipg, Lac };

struct EvaluationConfig {
  int stride = 1;       // evaluate NE-gaps at m % stride == 0 and at m = M
  int restarts = 5;
  int steps = 300;
  double init_scale = 1.0;
  GapMode mode = GapMode::Local;
};

struct InitConfig {
  std::string kind = "zeros";  // zeros | normal
  double scale = 1.0;
};

struct ExperimentConfig {
  nlohmann::json game;
  Algorithm algorithm = Algorithm::Ipg;
  ActorConfig actor;
  /// "literal" uses actor.beta; "paper-exact" / "paper-approx" derive it from the game.
  std::string beta_mode = "literal";
  FeatureMode features = FeatureMode::OnehotConcat;
  InitConfig init;
  EvaluationConfig evaluation;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir;

  /// Unknown keys are rejected at every level.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// Step size after resolving beta_mode against the game.
  double resolved_beta(const NetworkedGame& game) const;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::filesystem::path dir;
  RegretSeries series;
  std::vector<std::vector<double>> objectives;  // [point][agent]
  SoftmaxParams theta;
  bool ok = false;
  std::string error;
  double wall_seconds = 0.0;
};

/// Evaluation schedule: 0, stride, 2 stride, ... and M.
std::vector<int> evaluation_points(int M, int stride);

/// Runs one seed; never throws for algorithm failures (they land in RunResult::error).
/// With an empty `out_root` nothing is written.
RunResult run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                         const std::filesystem::path& out_root);

struct BatchResult {
  std::vector<RunResult> runs;
  std::filesystem::path plotdata;
  bool all_ok = false;
};
BatchResult run_batch(const ExperimentConfig& config, const std::vector<std::uint64_t>& seeds,
                      const std::filesystem::path& out_root);

/// Columns m, agent, ne_gap, j_i, avg_regret_prefix, nash_regret_prefix.
std::string regret_csv(const RegretSeries& series, const std::vector<std::vector<double>>& objectives);

/// Mean and sample standard deviation of the two regret curves across runs that share a schedule.
struct PlotData {
  std::vector<int> iterations;
  std::vector<double> nash_mean, nash_std, avg_mean, avg_std;
  int runs = 0;
};
PlotData aggregate(const std::vector<RunResult>& runs);
std::string plotdata_csv(const PlotData& data);

/// $NMPG_OUT if set, otherwise "runs".
std::filesystem::path default_output_root();

/// Re-evaluates a saved checkpoint: J_i and NE-gaps of the stored parameters.
nlohmann::json evaluate_checkpoint(const std::filesystem::path& file, const EvaluationConfig& eval);

/// "0..9" -> 0..9 inclusive; "1,4,7" -> those seeds.
std::vector<std::uint64_t> parse_seeds(const std::string& text);

std::string format_double(double x);

}  // namespace nmpg
