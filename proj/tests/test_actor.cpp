#include <gtest/gtest.h>

#include <cmath>

#include "nmpg/actor.hpp"
#include "nmpg/fixtures.hpp"
#include "nmpg/oracle.hpp"
#include "test_oracles.hpp"

using namespace nmpg;

namespace {

NetworkedGame one_agent(Rng& rng, double gamma) {
  RandomGameOptions opt;
  opt.kappa_r = 0;
  opt.gamma = gamma;
  return random_game(Graph(1, {}), opt, rng);
}

ActorConfig small_config() {
  ActorConfig cfg;
  cfg.M = 5;
  cfg.T = 2;
  cfg.H = 6;
  cfg.beta = 0.05;
  cfg.critic.K = 40;
  cfg.critic.alpha = 0.05;
  cfg.critic.eps = 0.1;
  cfg.critic.kappa_c = 1;
  return cfg;
}

}  // namespace

TEST(DefaultBeta, ClosedForms) {
  Rng rng(1);
  RandomGameOptions opt;
  opt.gamma = 0.9;
  const auto line = random_line_game(3, opt, rng);
  EXPECT_NEAR(default_beta(line, 1, BetaMode::Exact), 0.001 / 18, 1e-18);
  EXPECT_NEAR(default_beta(line, 1, BetaMode::Approx), 0.001 / 72, 1e-18);
  EXPECT_NEAR(default_beta(line, 0, BetaMode::Exact), 0.001 / 6, 1e-18);
  const auto single = one_agent(rng, 0.5);
  EXPECT_NEAR(default_beta(single, 1, BetaMode::Exact), 0.125 / 6, 1e-16);
}

TEST(Ipg, ZeroRewardsLeaveParametersUnchanged) {
  NetworkedGame::Parts p;
  p.graph = Graph::path(2);
  p.kappa_r = 0;
  for (int i = 0; i < 2; ++i) {
    p.state_labels.push_back({"x", "y"});
    p.action_labels.push_back({"u", "v"});
    p.kernels.push_back({{0, 1}, std::vector<double>(16, 0.5)});
    p.rewards.push_back(table_reward({i}, {2, 2}, {0, 0, 0, 0}));
  }
  p.mu = {{{0, 0}, 1.0}};
  const NetworkedGame game(std::move(p));
  Rng rng(2);
  const auto th = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto res = ipg_exact(game, th, 0.3, 20);
  for (int i = 0; i < 2; ++i) EXPECT_EQ(res.theta.theta[i], th.theta[i]);
}

TEST(Ipg, OneStepIsGradientAscent) {
  Rng rng(3);
  const auto game = random_line_game(3, {}, rng);
  const auto th = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto res = ipg_exact(game, th, 0.01, 1);
  for (int i = 0; i < 3; ++i)
    EXPECT_LE((res.theta.theta[i] - th.theta[i] - 0.01 * exact_policy_gradient(game, th, i)).cwiseAbs().maxCoeff(),
              1e-15);
}

TEST(Ipg, SingleAgentObjectiveIsMonotone) {
  Rng rng(4);
  for (int trial = 0; trial < 3; ++trial) {
    const auto game = one_agent(rng, 0.8);
    const double beta = default_beta(game, 1, BetaMode::Exact);
    std::vector<double> J;
    int calls = 0;
    ipg_exact(game, SoftmaxParams::random_normal(game, 1.0, rng), beta * 50, 200, 0,
              [&](int m, const SoftmaxParams& th) {
                EXPECT_EQ(m, calls++);
                J.push_back(objective(game, softmax_profile(th), 0));
              });
    EXPECT_EQ(calls, 201);
    for (std::size_t m = 1; m < J.size(); ++m) EXPECT_GE(J[m], J[m - 1] - 1e-13);
  }
}

TEST(Ipg, SnapshotsFollowTheSchedule) {
  Rng rng(5);
  const auto game = random_line_game(2, {}, rng);
  const auto res = ipg_exact(game, SoftmaxParams::zeros(game), 0.01, 10, 4);
  EXPECT_EQ(res.log.snapshot_iterations, (std::vector<int>{0, 4, 8, 10}));
  EXPECT_EQ(res.log.snapshots.back().theta[0], res.theta.theta[0]);
}

TEST(GradEstimate, SingleTrajectoryAndZeroCritic) {
  Rng rng(6);
  const auto game = random_line_game(3, {}, rng);
  const auto th = SoftmaxParams::random_normal(game, 1.0, rng);
  const QEstimate q = [](int i, std::span<const int> s, int a) { return 0.3 * i + 0.1 * s[i] + a; };
  Rng sim(7);
  const auto one = grad_estimate(game, th, q, 1, 10, sim, true);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(one.delta[i], one.eta[0][i]);

  const auto feats = make_all_features(game, 1, FeatureMode::OnehotConcat);
  std::vector<Eigen::VectorXd> zeros;
  for (const auto& f : feats) zeros.push_back(Eigen::VectorXd::Zero(f.dim()));
  const auto z = grad_estimate(game, th, zeros, feats, 4, 10, sim);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(z.delta[i].cwiseAbs().maxCoeff(), 0.0);
}

TEST(GradEstimate, RunningAverageAndNormBound) {
  Rng rng(8);
  const auto game = random_line_game(3, {}, rng);
  const auto th = SoftmaxParams::random_normal(game, 2.0, rng);
  const QEstimate unit = [](int, std::span<const int>, int) { return 1.0; };
  Rng sim(9);
  const int T = 7;
  const auto est = grad_estimate(game, th, unit, T, 40, sim, true);
  ASSERT_EQ(est.eta.size(), static_cast<std::size_t>(T));
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, 2);
    for (int t = 0; t < T; ++t) {
      mean += est.eta[t][i] / T;
      EXPECT_LE(est.eta[t][i].norm(), std::sqrt(2.0) / (1 - game.gamma()));
    }
    EXPECT_LE((est.delta[i] - mean).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(GradEstimate, UnbiasedWithOracleQ) {
  Rng rng(10);
  RandomGameOptions opt;
  opt.gamma = 0.8;
  const auto game = random_line_game(3, opt, rng);
  const auto th = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto sol = solve_exact(game, softmax_profile(th));
  const QEstimate q = [&](int i, std::span<const int> s, int a) {
    return sol.qbar[i](static_cast<Eigen::Index>(game.state_codec().encode(s)), a);
  };
  // Truncating at H = 60 leaves a bias below 0.8^60 sqrt(2) / 0.04, about 5e-5.
  Rng sim(11);
  const int T = 20000;
  const auto est = grad_estimate(game, th, q, T, 60, sim, true);
  for (int i = 0; i < 3; ++i) {
    const auto g = exact_policy_gradient(game, th, i);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        double sq = 0.0;
        for (int t = 0; t < T; ++t) sq += std::pow(est.eta[t][i](s, a) - est.delta[i](s, a), 2);
        const double se = std::sqrt(sq / (T - 1) / T);
        EXPECT_NEAR(est.delta[i](s, a), g(s, a), 4 * se + 1e-4) << "agent " << i;
      }
  }
}

TEST(GradEstimate, RejectsEmptyBudgets) {
  Rng rng(12);
  const auto game = random_line_game(2, {}, rng);
  const QEstimate q = [](int, std::span<const int>, int) { return 0.0; };
  EXPECT_THROW(grad_estimate(game, SoftmaxParams::zeros(game), q, 0, 5, rng), std::invalid_argument);
  EXPECT_THROW(grad_estimate(game, SoftmaxParams::zeros(game), q, 1, 0, rng), std::invalid_argument);
}

TEST(ActorCritic, NoIterationsReturnsStart) {
  Rng rng(13);
  const auto game = random_line_game(3, {}, rng);
  const auto th = SoftmaxParams::random_normal(game, 1.0, rng);
  auto cfg = small_config();
  cfg.M = 0;
  const auto res = localized_actor_critic(game, cfg, make_all_features(game, 1, FeatureMode::OnehotConcat), th, 3);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(res.theta.theta[i], th.theta[i]);
}

TEST(ActorCritic, SimultaneousUpdateFromNamedStreams) {
  Rng rng(14);
  const auto game = random_line_game(3, {}, rng);
  const auto th = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto feats = make_all_features(game, 1, FeatureMode::OnehotConcat);
  auto cfg = small_config();
  cfg.M = 1;
  const std::uint64_t seed = 99;
  const auto res = localized_actor_critic(game, cfg, feats, th, seed);
  // Every agent's step uses the critic and trajectories at the shared pre-update parameters.
  Rng critic = substream(seed, "critic"), actor = substream(seed, "actor");
  const auto w = td_lambda_local(game, th, feats, cfg.critic, critic);
  const auto est = grad_estimate(game, th, w, feats, cfg.T, cfg.H, actor);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(res.theta.theta[i], th.theta[i] + cfg.beta * est.delta[i]);
}

TEST(ActorCritic, DeterministicGivenSeed) {
  Rng rng(15);
  const auto net = appendix_traffic_net();
  const auto game = build_congestion_game(net, appendix_agents(net), 0.5, 0.9);
  const auto th = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto feats = make_all_features(game, 1, FeatureMode::OnehotConcat);
  auto cfg = small_config();
  cfg.M = 20;
  const auto a = localized_actor_critic(game, cfg, feats, th, 5);
  const auto b = localized_actor_critic(game, cfg, feats, th, 5);
  const auto c = localized_actor_critic(game, cfg, feats, th, 6);
  bool differs = false;
  for (int i = 0; i < game.n(); ++i) {
    EXPECT_EQ(a.theta.theta[i], b.theta.theta[i]);
    differs = differs || a.theta.theta[i] != c.theta.theta[i];
  }
  EXPECT_TRUE(differs);
}

TEST(ActorCritic, ConfigValidation) {
  Rng rng(16);
  const auto game = random_line_game(2, {}, rng);
  auto cfg = small_config();
  cfg.beta = 0.0;
  EXPECT_THROW(cfg.validate(game), std::invalid_argument);
  cfg = small_config();
  cfg.H = 0;
  EXPECT_THROW(cfg.validate(game), std::invalid_argument);
  cfg = small_config();
  cfg.critic.kappa_c = 0;
  EXPECT_THROW(cfg.validate(game), std::invalid_argument);
}
