#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nmpg/critic.hpp"
#include "nmpg/features.hpp"
#include "nmpg/game.hpp"
#include "nmpg/policy.hpp"

namespace nmpg {

enum class BetaMode { Exact, Approx };

/// (1 - gamma)^3 / (c n(kappa_G)) with c = 6 (exact gradients) or 24 (estimated).
/// The constants assume rewards in [0,1].
double default_beta(const NetworkedGame& game, int kappa_G, BetaMode mode);

struct ActorConfig {
  int M = 4000;
  int T = 1;
  int H = 15;
  double beta = 1e-3;
  int kappa_G = 1;
  CriticConfig critic;
  /// Start each critic call from the previous outer iteration's weights instead of zero.
  bool critic_warm_start = false;
  int snapshot_every = 0;  // 0: only the final parameters

  void validate(const NetworkedGame& game) const;
};

struct LearningLog {
  std::vector<int> snapshot_iterations;
  std::vector<SoftmaxParams> snapshots;
  std::vector<std::vector<double>> grad_norms;  // [m][i]
  std::vector<std::vector<Eigen::VectorXd>> critic_weights;  // at snapshot iterations
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

struct LearningResult {
  SoftmaxParams theta;
  LearningLog log;
};

/// Called with (m, theta(m)) before the m-th update, for m = 0..M-1, and once with (M, theta(M)).
using IterationHook = std::function<void(int, const SoftmaxParams&)>;

LearningResult ipg_exact(const NetworkedGame& game, const SoftmaxParams& theta0, double beta, int M,
                         int snapshot_every = 0, const IterationHook& hook = {});

/// Q-estimate consumed by the actor: (agent, global state, own action) -> value.
/// Implementations must read only the agent's kappa_c-hop neighborhood.
using QEstimate = std::function<double(int, std::span<const int>, int)>;

struct GradEstimate {
  std::vector<Eigen::MatrixXd> delta;             // running averages Delta_i^T
  std::vector<std::vector<Eigen::MatrixXd>> eta;  // [t][i], kept when requested
};

/// T trajectories of H steps under the un-mixed softmax policy, shared by all agents.
GradEstimate grad_estimate(const NetworkedGame& game, const SoftmaxParams& theta, const QEstimate& q,
                           int T, int H, Rng& rng, bool keep_eta = false);
GradEstimate grad_estimate(const NetworkedGame& game, const SoftmaxParams& theta,
                           const std::vector<Eigen::VectorXd>& weights,
                           const std::vector<FeatureMap>& features, int T, int H, Rng& rng,
                           bool keep_eta = false);

/// Streams "critic" and "actor" are derived from `seed`.
LearningResult localized_actor_critic(const NetworkedGame& game, const ActorConfig& config,
                                      const std::vector<FeatureMap>& features,
                                      const SoftmaxParams& theta0, std::uint64_t seed,
                                      const IterationHook& hook = {});

}  // namespace nmpg
