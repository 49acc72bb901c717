#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nmpg/features.hpp"
#include "nmpg/game.hpp"
#include "nmpg/policy.hpp"
#include "nmpg/rng.hpp"

namespace nmpg {

struct CriticConfig {
  int K = 10;
  double alpha = 1e-3;
  double lambda = 0.0;
  double eps = 0.0;
  int kappa_c = 1;

  void validate(const NetworkedGame& game) const;
};

/// K + 1 samples of (s(t), a(t), r(t)); row-major flat storage.
struct Trajectory {
  int n = 0;
  int length = 0;
  std::vector<int> states;
  std::vector<int> actions;
  std::vector<double> rewards;

  std::span<const int> state(int t) const { return {states.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
  std::span<const int> action(int t) const { return {actions.data() + static_cast<std::size_t>(t) * n, static_cast<std::size_t>(n)}; }
  double reward(int t, int i) const { return rewards[static_cast<std::size_t>(t) * n + i]; }
};

/// tau restricted to (s_{N_i^kappa_c}(t), a_i(t), r_i(t)).
struct RestrictedTrajectory {
  int agent = 0;
  std::vector<int> members;
  int length = 0;
  std::vector<int> states;  // length x members.size()
  std::vector<int> actions;
  std::vector<double> rewards;

  std::span<const int> state(int t) const {
    return {states.data() + static_cast<std::size_t>(t) * members.size(), members.size()};
  }
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int agent, int step)
      : std::runtime_error("critic weights became non-finite (agent " + std::to_string(agent) +
                           ", step " + std::to_string(step) + ")"),
        agent_(agent),
        step_(step) {}
  int agent() const { return agent_; }
  int step() const { return step_; }

 private:
  int agent_;
  int step_;
};

/// s(0) ~ mu, a(t) ~ epsilon-mixed profile, K + 1 samples. Draw order per step:
/// every agent's action (ascending), then every agent's next state (ascending).
Trajectory collect_trajectory(const NetworkedGame& game, const PolicyProfile& profile, double eps,
                              int K, Rng& rng);
RestrictedTrajectory restrict(const NetworkedGame& game, const Trajectory& tau, int i, int kappa_c);

/// Lines 6-9 of localized TD(lambda) for one agent on its restricted trajectory.
/// The trace decays by gamma * lambda.
Eigen::VectorXd td_lambda_agent(const RestrictedTrajectory& tau, const FeatureMap& features,
                                double gamma, double lambda, double alpha,
                                const Eigen::VectorXd* w0 = nullptr);

/// Collects one shared trajectory under the epsilon-mixed softmax policy and runs every agent.
std::vector<Eigen::VectorXd> td_lambda_local(const NetworkedGame& game, const SoftmaxParams& theta,
                                             const std::vector<FeatureMap>& features,
                                             const CriticConfig& config, Rng& rng,
                                             const std::vector<Eigen::VectorXd>* w0 = nullptr);

struct LocalStep {
  std::span<const int> s_N;
  int a_i;
  double r_i;
};

using FeatureRule = std::function<Eigen::VectorXd(const LocalStep&)>;
/// F(X(t), w) where X(t) holds steps t - t0 .. t + 1.
using UpdateFunctional = std::function<double(std::span<const LocalStep>, const Eigen::VectorXd&)>;

struct GeneralizedTdTrace {
  double max_trace_norm = 0.0;
};

/// w(t+1) = w(t) + alpha F(X(t), w(t)) zeta(t), zeta(t+1) = lambda zeta(t) + psi(z(t+1)).
/// Updates run for t = t0 .. K - 1.
Eigen::VectorXd generalized_td(const RestrictedTrajectory& tau, const FeatureRule& psi,
                               const UpdateFunctional& F, double lambda, int t0, double alpha, int K,
                               const Eigen::VectorXd& w0, GeneralizedTdTrace* trace = nullptr);

/// <phi(s_N, a_i), w>.
double q_hat(const FeatureMap& features, const Eigen::VectorXd& w, std::span<const int> s_N, int a_i);

}  // namespace nmpg
