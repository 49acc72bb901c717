#include "nmpg/actor.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "nmpg/oracle.hpp"

namespace nmpg {

double default_beta(const NetworkedGame& game, int kappa_G, BetaMode mode) {
  const double c = mode == BetaMode::Exact ? 6.0 : 24.0;
  const double g = 1.0 - game.gamma();
  return g * g * g / (c * game.graph().n_of_kappa(kappa_G));
}

void ActorConfig::validate(const NetworkedGame& game) const {
  if (M < 0 || T <= 0 || H <= 0) throw std::invalid_argument("actor: M >= 0, T > 0, H > 0 required");
  if (!(beta > 0.0)) throw std::invalid_argument("actor: beta must be positive");
  if (kappa_G < 0) throw std::invalid_argument("actor: kappa_G must be non-negative");
  critic.validate(game);
}

LearningResult ipg_exact(const NetworkedGame& game, const SoftmaxParams& theta0, double beta, int M,
                         int snapshot_every, const IterationHook& hook) {
  require_dense(game, "ipg_exact");
  const auto t_start = std::chrono::steady_clock::now();
  LearningResult res;
  res.theta = theta0;
  for (int m = 0; m < M; ++m) {
    if (hook) hook(m, res.theta);
    if (snapshot_every > 0 && m % snapshot_every == 0) {
      res.log.snapshot_iterations.push_back(m);
      res.log.snapshots.push_back(res.theta);
    }
    const auto profile = softmax_profile(res.theta);
    const auto sol = solve_exact(game, profile);
    std::vector<Eigen::MatrixXd> grads;
    std::vector<double> norms;
    for (int i = 0; i < game.n(); ++i) {
      grads.push_back(policy_gradient_from(game, profile, sol, i));
      norms.push_back(grads.back().norm());
    }
    for (int i = 0; i < game.n(); ++i) res.theta.theta[i] += beta * grads[i];
    res.log.grad_norms.push_back(std::move(norms));
  }
  if (hook) hook(M, res.theta);
  res.log.snapshot_iterations.push_back(M);
  res.log.snapshots.push_back(res.theta);
  res.log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

GradEstimate grad_estimate(const NetworkedGame& game, const SoftmaxParams& theta, const QEstimate& q,
                           int T, int H, Rng& rng, bool keep_eta) {
  if (T <= 0 || H <= 0) throw std::invalid_argument("grad_estimate: T and H must be positive");
  const int n = game.n();
  const auto profile = softmax_profile(theta);
  GradEstimate out;
  for (int i = 0; i < n; ++i)
    out.delta.push_back(Eigen::MatrixXd::Zero(game.num_states(i), game.num_actions(i)));
  std::vector<Eigen::MatrixXd> eta(n);
  std::vector<int> s, a(n), next(n);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) eta[i] = Eigen::MatrixXd::Zero(game.num_states(i), game.num_actions(i));
    s = game.sample_initial(rng);
    double disc = 1.0;
    for (int k = 0; k < H; ++k) {
      sample_action(profile, s, rng, a);
      for (int i = 0; i < n; ++i) {
        const double qv = q(i, s, a[i]);
        // grad log xi_i(a_i|s_i) is e_{a_i} - xi_i(.|s_i) on row s_i.
        eta[i].row(s[i]) -= (disc * qv) * profile.probs[i].row(s[i]);
        eta[i](s[i], a[i]) += disc * qv;
      }
      if (k + 1 < H) {
        game.step(s, a, rng, next);
        std::swap(s, next);
      }
      disc *= game.gamma();
    }
    const double w_old = static_cast<double>(t) / (t + 1), w_new = 1.0 / (t + 1);
    for (int i = 0; i < n; ++i) out.delta[i] = w_old * out.delta[i] + w_new * eta[i];
    if (keep_eta) out.eta.push_back(eta);
  }
  return out;
}

GradEstimate grad_estimate(const NetworkedGame& game, const SoftmaxParams& theta,
                           const std::vector<Eigen::VectorXd>& weights,
                           const std::vector<FeatureMap>& features, int T, int H, Rng& rng,
                           bool keep_eta) {
  if (weights.size() != features.size() || static_cast<int>(features.size()) != game.n())
    throw std::invalid_argument("grad_estimate: need one weight vector and feature map per agent");
  std::vector<std::vector<int>> buf(game.n());
  for (int i = 0; i < game.n(); ++i) buf[i].resize(features[i].members().size());
  QEstimate q = [&](int i, std::span<const int> s, int a_i) {
    features[i].project(s, buf[i]);
    return features[i].dot(buf[i], a_i, weights[i]);
  };
  return grad_estimate(game, theta, q, T, H, rng, keep_eta);
}

LearningResult localized_actor_critic(const NetworkedGame& game, const ActorConfig& config,
                                      const std::vector<FeatureMap>& features,
                                      const SoftmaxParams& theta0, std::uint64_t seed,
                                      const IterationHook& hook) {
  config.validate(game);
  if (config.critic.eps == 0.0)
    std::cerr << "warning: critic exploration eps = 0; stationary coverage is not guaranteed\n";
  const auto t_start = std::chrono::steady_clock::now();
  Rng critic_rng = substream(seed, "critic");
  Rng actor_rng = substream(seed, "actor");
  LearningResult res;
  res.theta = theta0;
  res.log.seed = seed;
  std::vector<Eigen::VectorXd> w;
  for (const auto& f : features) w.push_back(Eigen::VectorXd::Zero(f.dim()));
  for (int m = 0; m < config.M; ++m) {
    if (hook) hook(m, res.theta);
    w = td_lambda_local(game, res.theta, features, config.critic, critic_rng,
                        config.critic_warm_start ? &w : nullptr);
    const auto est = grad_estimate(game, res.theta, w, features, config.T, config.H, actor_rng);
    if (config.snapshot_every > 0 && m % config.snapshot_every == 0) {
      res.log.snapshot_iterations.push_back(m);
      res.log.snapshots.push_back(res.theta);
      res.log.critic_weights.push_back(w);
    }
    std::vector<double> norms;
    for (int i = 0; i < game.n(); ++i) {
      res.theta.theta[i] += config.beta * est.delta[i];
      norms.push_back(est.delta[i].norm());
      if (!res.theta.theta[i].allFinite())
        throw std::runtime_error("localized_actor_critic: non-finite parameters at iteration " +
                                 std::to_string(m) + ", agent " + std::to_string(i));
    }
    res.log.grad_norms.push_back(std::move(norms));
  }
  if (hook) hook(config.M, res.theta);
  res.log.snapshot_iterations.push_back(config.M);
  res.log.snapshots.push_back(res.theta);
  res.log.critic_weights.push_back(w);
  res.log.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

}  // namespace nmpg
