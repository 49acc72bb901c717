#include "nmpg/critic.hpp"

#include <cmath>
#include <iostream>

namespace nmpg {

void CriticConfig::validate(const NetworkedGame& game) const {
  if (K < 0) throw std::invalid_argument("critic: K must be non-negative");
  if (!(alpha > 0.0)) throw std::invalid_argument("critic: alpha must be positive");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("critic: lambda must lie in [0,1)");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("critic: eps must lie in [0,1]");
  if (kappa_c < game.kappa_r()) throw std::invalid_argument("critic: kappa_c must be at least kappa_r");
}

Trajectory collect_trajectory(const NetworkedGame& game, const PolicyProfile& profile, double eps,
                              int K, Rng& rng) {
  const PolicyProfile mixed = eps > 0.0 ? epsilon_explore(profile, eps) : profile;
  const int n = game.n();
  Trajectory tau;
  tau.n = n;
  tau.length = K + 1;
  tau.states.resize(static_cast<std::size_t>(K + 1) * n);
  tau.actions.resize(tau.states.size());
  tau.rewards.resize(tau.states.size());
  auto s0 = game.sample_initial(rng);
  std::copy(s0.begin(), s0.end(), tau.states.begin());
  for (int t = 0; t <= K; ++t) {
    std::span<int> s(tau.states.data() + static_cast<std::size_t>(t) * n, n);
    std::span<int> a(tau.actions.data() + static_cast<std::size_t>(t) * n, n);
    sample_action(mixed, s, rng, a);
    for (int i = 0; i < n; ++i) tau.rewards[static_cast<std::size_t>(t) * n + i] = game.reward(i, s, a);
    if (t < K) game.step(s, a, rng, std::span<int>(tau.states.data() + static_cast<std::size_t>(t + 1) * n, n));
  }
  return tau;
}

RestrictedTrajectory restrict(const NetworkedGame& game, const Trajectory& tau, int i, int kappa_c) {
  RestrictedTrajectory out;
  out.agent = i;
  out.members = game.graph().khop(i, kappa_c);
  out.length = tau.length;
  const std::size_t m = out.members.size();
  out.states.resize(static_cast<std::size_t>(tau.length) * m);
  out.actions.resize(tau.length);
  out.rewards.resize(tau.length);
  for (int t = 0; t < tau.length; ++t) {
    auto s = tau.state(t);
    for (std::size_t k = 0; k < m; ++k) out.states[t * m + k] = s[out.members[k]];
    out.actions[t] = tau.action(t)[i];
    out.rewards[t] = tau.reward(t, i);
  }
  return out;
}

Eigen::VectorXd td_lambda_agent(const RestrictedTrajectory& tau, const FeatureMap& features,
                                double gamma, double lambda, double alpha, const Eigen::VectorXd* w0) {
  if (features.members() != tau.members)
    throw std::invalid_argument("td_lambda: feature neighborhood differs from the restriction");
  const int d = features.dim();
  Eigen::VectorXd w = w0 ? *w0 : Eigen::VectorXd::Zero(d);
  if (w.size() != d) throw std::invalid_argument("td_lambda: initial weight dimension mismatch");
  const double trace_decay = gamma * lambda;
  Eigen::VectorXd zeta = features(tau.state(0), tau.actions[0]);
  Eigen::VectorXd phi = zeta;
  for (int t = 0; t + 1 < tau.length; ++t) {
    Eigen::VectorXd phi_next = features(tau.state(t + 1), tau.actions[t + 1]);
    const double delta = phi.dot(w) - tau.rewards[t] - gamma * phi_next.dot(w);
    w.noalias() -= (alpha * delta) * zeta;
    if (!w.allFinite()) throw DivergenceError(tau.agent, t);
    zeta = trace_decay * zeta + phi_next;
    phi = std::move(phi_next);
  }
  return w;
}

std::vector<Eigen::VectorXd> td_lambda_local(const NetworkedGame& game, const SoftmaxParams& theta,
                                             const std::vector<FeatureMap>& features,
                                             const CriticConfig& config, Rng& rng,
                                             const std::vector<Eigen::VectorXd>* w0) {
  config.validate(game);
  if (static_cast<int>(features.size()) != game.n())
    throw std::invalid_argument("td_lambda_local: need one feature map per agent");
  const Trajectory tau = collect_trajectory(game, softmax_profile(theta), config.eps, config.K, rng);
  std::vector<Eigen::VectorXd> out;
  out.reserve(game.n());
  for (int i = 0; i < game.n(); ++i) {
    const auto local = restrict(game, tau, i, config.kappa_c);
    out.push_back(td_lambda_agent(local, features[i], game.gamma(), config.lambda, config.alpha,
                                  w0 ? &(*w0)[i] : nullptr));
  }
  return out;
}

Eigen::VectorXd generalized_td(const RestrictedTrajectory& tau, const FeatureRule& psi,
                               const UpdateFunctional& F, double lambda, int t0, double alpha, int K,
                               const Eigen::VectorXd& w0, GeneralizedTdTrace* trace) {
  if (t0 < 0) throw std::invalid_argument("generalized_td: t0 must be non-negative");
  if (K + 1 > tau.length) throw std::invalid_argument("generalized_td: trajectory shorter than K + 1");
  if (t0 > K) throw std::invalid_argument("generalized_td: window underflow (t0 > K)");
  std::vector<LocalStep> steps;
  steps.reserve(tau.length);
  for (int t = 0; t < tau.length; ++t) steps.push_back({tau.state(t), tau.actions[t], tau.rewards[t]});
  Eigen::VectorXd w = w0;
  Eigen::VectorXd zeta = psi(steps[t0]);
  double max_norm = zeta.norm();
  for (int t = t0; t < K; ++t) {
    std::span<const LocalStep> window(steps.data() + (t - t0), static_cast<std::size_t>(t0 + 2));
    const double f = F(window, w);
    w.noalias() += (alpha * f) * zeta;
    if (!w.allFinite()) throw DivergenceError(tau.agent, t);
    zeta = lambda * zeta + psi(steps[t + 1]);
    max_norm = std::max(max_norm, zeta.norm());
  }
  if (trace) trace->max_trace_norm = max_norm;
  return w;
}

double q_hat(const FeatureMap& features, const Eigen::VectorXd& w, std::span<const int> s_N, int a_i) {
  return features.dot(s_N, a_i, w);
}

}  // namespace nmpg
