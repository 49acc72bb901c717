#include <gtest/gtest.h>

#include <cmath>

#include "nmpg/fixtures.hpp"
#include "nmpg/oracle.hpp"
#include "nmpg/policy.hpp"
#include "test_oracles.hpp"

using namespace nmpg;

namespace {

constexpr int B = 0, G = 1;

PolicyProfile chain_det(const NetworkedGame& game, int a1, int a4) {
  return deterministic_profile(game, {{a1, a1}, {B, B}, {B, B}, {a4, a4}});
}

NetworkedGame zero_reward_game(double gamma = 0.9) {
  NetworkedGame::Parts p;
  p.graph = Graph::path(2);
  p.kappa_r = 0;
  p.gamma = gamma;
  for (int i = 0; i < 2; ++i) {
    p.state_labels.push_back({"x", "y"});
    p.action_labels.push_back({"u", "v"});
    p.kernels.push_back({{0, 1}, std::vector<double>(4 * 2 * 2, 0.5)});
    p.rewards.push_back(table_reward({i}, {2, 2}, {0, 0, 0, 0}));
  }
  p.mu = {{{0, 0}, 0.5}, {{1, 1}, 0.5}};
  return NetworkedGame(std::move(p));
}

NetworkedGame single_agent_mdp(Rng& rng, double gamma = 0.8) {
  RandomGameOptions opt;
  opt.kappa_r = 0;
  opt.gamma = gamma;
  return random_game(Graph(1, {}), opt, rng);
}

}  // namespace

TEST(InducedChain, StochasticAndDeterministicCase) {
  Rng rng(1);
  const auto game = random_line_game(3, {}, rng);
  const auto P = induced_chain(game, softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng)));
  EXPECT_LE((P.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);

  auto [chain, desc] = build_chain_example(0.9);
  const auto Pc = induced_chain(chain, chain_det(chain, G, B));
  EXPECT_TRUE((Pc.array() == 0.0 || Pc.array() == 1.0).all());
  // Agent 1 plays a_g, so s_1 = g after one step from any state.
  const auto states = enumerate_states(chain);
  for (std::size_t x = 0; x < states.size(); ++x)
    for (std::size_t y = 0; y < states.size(); ++y)
      if (Pc(x, y) == 1.0) {
        EXPECT_EQ(states[y][0], G);
        EXPECT_EQ(states[y][1], states[x][0]);
      }
}

TEST(QFunction, ConstantRewardAndSeriesOracle) {
  NetworkedGame::Parts p;
  p.graph = Graph(1, {});
  p.state_labels = {{"x", "y"}};
  p.action_labels = {{"u", "v"}};
  p.kernels = {{{0}, {0.3, 0.7, 0.6, 0.4, 1.0, 0.0, 0.2, 0.8}}};
  p.rewards = {table_reward({0}, {2, 2}, {0.4, 0.4, 0.4, 0.4})};
  p.mu = {{{0}, 1.0}};
  p.gamma = 0.75;
  const NetworkedGame constant(std::move(p));
  const auto Q = q_function(constant, uniform_profile(constant), 0);
  EXPECT_LE((Q.array() - 0.4 / 0.25).abs().maxCoeff(), 1e-12);

  Rng rng(2);
  for (int k = 0; k < 5; ++k) {
    const auto game = random_line_game(3, {}, rng);
    const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
    const auto d = ref::dense_model(game);
    for (int i = 0; i < 3; ++i) {
      const Eigen::MatrixXd ref_q = ref::series_q(game, d, xi, i, 1e-11);
      EXPECT_LE((q_function(game, xi, i) - ref_q).cwiseAbs().maxCoeff(), 1e-10);
      const Eigen::MatrixXd ref_bar = ref::average_q(game, d, xi, ref_q, i);
      EXPECT_LE((solve_exact(game, xi).qbar[i] - ref_bar).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(ExactSolution, Invariants) {
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    const auto game = random_line_game(3, {}, rng);
    const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.5, rng));
    const auto sol = solve_exact(game, xi);
    const auto states = enumerate_states(game);
    EXPECT_NEAR(sol.d.sum(), 1.0, 1e-10);
    for (int i = 0; i < 3; ++i) {
      for (std::size_t s = 0; s < states.size(); ++s) {
        const auto x = static_cast<Eigen::Index>(s);
        const Eigen::RowVectorXd pol = xi.probs[i].row(states[s][i]);
        EXPECT_NEAR(sol.v[i](x), pol.dot(sol.qbar[i].row(x)), 1e-10);
        EXPECT_NEAR(pol.dot(sol.adv_bar[i].row(x)), 0.0, 1e-10);
        for (int a = 0; a < 2; ++a) EXPECT_EQ(sol.adv_bar[i](x, a), sol.qbar[i](x, a) - sol.v[i](x));
      }
      EXPECT_GE(sol.qbar[i].minCoeff(), game.r_min() / (1 - game.gamma()) - 1e-12);
      EXPECT_LE(sol.qbar[i].maxCoeff(), game.r_max() / (1 - game.gamma()) + 1e-12);
      EXPECT_NEAR(sol.J(i), ref::series_objective(game, xi, i), 1e-10);
    }
  }
}

TEST(Objective, ChainAnchorsAndZeroGame) {
  for (double gamma : {0.5, 0.9, 0.99}) {
    auto [game, desc] = build_chain_example(gamma);
    EXPECT_NEAR(objective(game, chain_det(game, G, G), 3), std::pow(gamma, 4) / (1 - gamma), 1e-10);
    EXPECT_NEAR(objective(game, chain_det(game, B, G), 3), 0.0, 1e-10);
    Rng rng(4);
    EXPECT_NEAR(objective(game, softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng)), 0), 0.0, 1e-12);
  }
  const auto zero = zero_reward_game();
  EXPECT_EQ(objectives(zero, uniform_profile(zero)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Visitation, AbsorbingStartAndLowerBound) {
  auto [game, desc] = build_chain_example(0.8);
  // All-b state under all-b play never moves.
  const auto xi = deterministic_profile(game, {{B, B}, {B, B}, {B, B}, {B, B}});
  Eigen::VectorXd start = Eigen::VectorXd::Zero(16);
  start(0) = 1.0;
  EXPECT_NEAR(visitation(game, xi, start)(0), 1.0, 1e-12);

  Rng rng(5);
  const auto g2 = random_line_game(2, {}, rng);
  const auto p2 = softmax_profile(SoftmaxParams::random_normal(g2, 1.0, rng));
  Eigen::VectorXd st = Eigen::VectorXd::Random(4).cwiseAbs();
  st /= st.sum();
  const auto d = visitation(g2, p2, st);
  EXPECT_TRUE((d.array() >= (1 - g2.gamma()) * st.array() - 1e-15).all());
}

TEST(Visitation, MatchesGeometricStoppingSampler) {
  Rng rng(6);
  const auto game = random_line_game(2, {}, rng);
  const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
  Eigen::VectorXd start = Eigen::VectorXd::Zero(4);
  start(2) = 1.0;
  const auto d = visitation(game, xi, start);
  // Stop at T ~ Geometric(1 - gamma); the stopped state is distributed as d.
  const int draws = 40000;
  std::vector<int> hits(4, 0);
  Rng sim(7);
  for (int k = 0; k < draws; ++k) {
    std::vector<int> s = game.state_codec().decode(2);
    while (uniform01(sim) < game.gamma()) s = ref::rollout(game, xi, s, 1, sim).back();
    ++hits[game.state_codec().encode(s)];
  }
  for (int x = 0; x < 4; ++x) {
    const double p = d(x);
    EXPECT_NEAR(hits[x] / double(draws), p, 3 * std::sqrt(p * (1 - p) / draws) + 1e-12);
  }
}

TEST(PolicyGradient, FiniteDifferencesOnRandomGames) {
  Rng rng(8);
  for (int k = 0; k < 6; ++k) {
    const auto game = random_line_game(3, {}, rng);
    const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
    for (int i = 0; i < 3; ++i) {
      const auto g = exact_policy_gradient(game, theta, i);
      const auto fd = ref::finite_difference(theta, i, [&](const SoftmaxParams& t) {
        return objective(game, softmax_profile(t), i);
      });
      EXPECT_LE((g - fd).norm() / g.norm(), 1e-5);
    }
  }
}

TEST(PolicyGradient, ZeroGameAndNormBound) {
  const auto zero = zero_reward_game();
  Rng rng(9);
  const auto th = SoftmaxParams::random_normal(zero, 1.0, rng);
  EXPECT_EQ(exact_policy_gradient(zero, th, 0).cwiseAbs().maxCoeff(), 0.0);
  for (int k = 0; k < 10; ++k) {
    const auto game = micro_congestion_game(0.8).rescaled();
    const auto t = SoftmaxParams::random_normal(game, 2.0, rng);
    for (int i = 0; i < 2; ++i)
      EXPECT_LE(exact_policy_gradient(game, t, i).norm(), std::sqrt(2.0) / std::pow(0.2, 2));
  }
}

TEST(PolicyGradient, TrajectoryFormAgrees) {
  Rng rng(10);
  for (int k = 0; k < 4; ++k) {
    const auto game = random_line_game(3, {}, rng);
    const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
    for (int i = 0; i < 3; ++i)
      EXPECT_LE((exact_policy_gradient(game, theta, i) - policy_gradient_trajectory_form(game, theta, i))
                    .cwiseAbs()
                    .maxCoeff(),
                1e-8);
  }
}

TEST(PerformanceDifference, SingleAgentDeviations) {
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const auto game = random_line_game(3, {}, rng);
    const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
    const int i = k % 3;
    auto dev = theta;
    dev.theta[i] = SoftmaxParams::random_normal(game, 1.0, rng).theta[i];
    const auto p0 = softmax_profile(theta), p1 = softmax_profile(dev);
    const auto s0 = solve_exact(game, p0), s1 = solve_exact(game, p1);
    const auto states = enumerate_states(game);
    double rhs = 0.0;
    for (std::size_t s = 0; s < states.size(); ++s)
      for (int a = 0; a < 2; ++a)
        rhs += s1.d(s) * (p1.probs[i](states[s][i], a) - p0.probs[i](states[s][i], a)) * s0.qbar[i](s, a);
    EXPECT_NEAR(s1.J(i) - s0.J(i), rhs / (1 - game.gamma()), 1e-9);
  }
}

TEST(BestResponse, SingleAgentMatchesPolicyEnumeration) {
  Rng rng(12);
  for (int k = 0; k < 5; ++k) {
    const auto game = single_agent_mdp(rng);
    double best = -INFINITY;
    for (int a0 = 0; a0 < 2; ++a0)
      for (int a1 = 0; a1 < 2; ++a1)
        best = std::max(best, ref::series_objective(game, deterministic_profile(game, {{a0, a1}}), 0));
    const auto xi = uniform_profile(game);
    EXPECT_NEAR(best_response_upper(game, xi, 0), best, 1e-8);
    EXPECT_NEAR(best_response_local(game, xi, 0), best, 1e-6);
  }
}

TEST(BestResponse, UpperDominatesLocalAndRestartsMonotone) {
  Rng rng(13);
  for (int k = 0; k < 4; ++k) {
    const auto game = random_line_game(3, {}, rng);
    const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
    for (int i = 0; i < 3; ++i) {
      BestResponseOptions one, many;
      one.restarts = 1;
      many.restarts = 4;
      one.seed = many.seed = 77;
      const double l1 = best_response_local(game, xi, i, one);
      const double l4 = best_response_local(game, xi, i, many);
      EXPECT_GE(l4, l1);
      EXPECT_GE(best_response_upper(game, xi, i) + 1e-9, l4);
    }
  }
}

TEST(BestResponse, ChainAgentFour) {
  auto [game, desc] = build_chain_example(0.9);
  const double top = std::pow(0.9, 4) / 0.1;
  const auto xi = chain_det(game, G, B);
  EXPECT_NEAR(best_response_upper(game, xi, 3), top, 1e-8);
  EXPECT_NEAR(best_response_local(game, xi, 3), top, 1e-3);
}

TEST(NashGap, ChainAndBestResponseProfiles) {
  auto [game, desc] = build_chain_example(0.9);
  const double top = std::pow(0.9, 4) / 0.1;
  const auto gaps = ne_gaps(game, chain_det(game, G, B));
  EXPECT_NEAR(gaps[3].gap, top, 1e-3);
  const double global = global_ne_gap(gaps);
  for (const auto& g : gaps) {
    EXPECT_GE(global, g.gap);
    EXPECT_GE(g.gap, 0.0);
  }
  // (g, g) is a best response for everybody.
  const auto eq = ne_gaps(game, chain_det(game, G, G), GapMode::Upper);
  EXPECT_LE(global_ne_gap(eq), 1e-8);
}

TEST(Truncation, FullRadiusPointMassAndLinearity) {
  Rng rng(14);
  const auto game = random_line_game(4, {}, rng);
  const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
  const auto sol = solve_exact(game, xi);
  const int diam = game.graph().diameter();
  Eigen::VectorXd one(1);
  one << 1.0;
  EXPECT_LE((truncated_q(game, xi, 0, diam, one) - sol.qbar[0]).cwiseAbs().maxCoeff(), 1e-12);

  // Agent 0 with kappa_c = 1 keeps agents {0, 1}; the rest are agents {2, 3}.
  Eigen::VectorXd u1 = Eigen::VectorXd::Zero(4), u2 = Eigen::VectorXd::Zero(4);
  u1(3) = 1.0;
  u2 << 0.1, 0.2, 0.3, 0.4;
  const auto t1 = truncated_q(game, xi, 0, 1, u1);
  for (int sN = 0; sN < 4; ++sN)
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(t1(sN, a), sol.qbar[0](sN * 4 + 3, a), 1e-12);
  const Eigen::VectorXd mix = 0.3 * u1 + 0.7 * u2;
  const auto lhs = truncated_q(game, xi, 0, 1, mix);
  const Eigen::MatrixXd rhs = 0.3 * t1 + 0.7 * truncated_q(game, xi, 0, 1, u2);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(truncated_q(game, xi, 0, 1, Eigen::VectorXd::Ones(4)), std::invalid_argument);
}

TEST(Decay, BoundAndMonotoneInRadius) {
  Rng rng(15);
  for (int kappa_r : {0, 1}) {
    RandomGameOptions opt;
    opt.kappa_r = kappa_r;
    const auto game = random_line_game(4, opt, rng).rescaled();
    const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
    for (int i = 0; i < 4; ++i) {
      double prev = INFINITY;
      for (int kc = 0; kc <= game.graph().diameter(); ++kc) {
        const double gap = decay_gap(game, xi, i, kc);
        EXPECT_LE(gap, decay_bound(game.gamma(), kc, kappa_r));
        EXPECT_LE(gap, prev + 1e-12);
        prev = gap;
      }
      EXPECT_LE(decay_gap(game, xi, i, game.graph().diameter()), 1e-10);
    }
  }
}

TEST(EpsilonMixing, AveragedQPerturbationBound) {
  Rng rng(16);
  for (int k = 0; k < 6; ++k) {
    const auto game = random_line_game(3, {}, rng);
    const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.5, rng));
    const auto base = solve_exact(game, xi);
    for (double eps : {0.05, 0.2}) {
      const auto mixed = solve_exact(game, epsilon_explore(xi, eps));
      for (int i = 0; i < 3; ++i) {
        EXPECT_LE((mixed.qbar[i] - base.qbar[i]).cwiseAbs().maxCoeff(),
                  6 * 3 * eps / std::pow(1 - game.gamma(), 2));
        EXPECT_GE(base.qbar[i].minCoeff(), -1e-12);
        EXPECT_LE(base.qbar[i].maxCoeff(), 1 / (1 - game.gamma()) + 1e-12);
      }
    }
  }
}

TEST(Guards, RefuseLargeDenseProblems) {
  const auto net = appendix_traffic_net();
  const auto big = build_congestion_game(net, appendix_agents(net), 0.5, 0.9);
  EXPECT_FALSE(dense_enumerable(big));
  EXPECT_THROW(induced_chain(big, uniform_profile(big)), std::length_error);
  EXPECT_THROW(exact_policy_gradient(big, SoftmaxParams::zeros(big), 0), std::length_error);
}

// Structured congestion oracle ----------------------------------------------------

TEST(CongestionOracle, AgreesWithDenseSolve) {
  const auto game = micro_congestion_game(0.85, 0.5);
  Rng rng(17);
  for (int k = 0; k < 5; ++k) {
    const auto theta = SoftmaxParams::random_normal(game, 1.5, rng);
    const auto xi = softmax_profile(theta);
    const auto sol = solve_exact(game, xi);
    const CongestionEvaluator ev(game, xi, 1e-12);
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(ev.value_of_profile(i), sol.J(i), 1e-9);
      Eigen::MatrixXd grad;
      EXPECT_NEAR(ev.value(i, theta.theta[i], &grad), sol.J(i), 1e-9);
      EXPECT_LE((grad - exact_policy_gradient(game, theta, i)).cwiseAbs().maxCoeff(), 1e-8);
      // A unilateral deviation evaluated against the fixed others.
      auto dev = theta;
      dev.theta[i] = SoftmaxParams::random_normal(game, 1.5, rng).theta[i];
      EXPECT_NEAR(ev.value(i, dev.theta[i], nullptr), objective(game, softmax_profile(dev), i), 1e-9);
    }
  }
}

TEST(CongestionOracle, MatchesMonteCarloOnAppendixScale) {
  const auto net = appendix_traffic_net();
  const auto game = build_congestion_game(net, appendix_agents(net), 0.5, 0.7);
  Rng rng(18);
  const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
  const CongestionEvaluator ev(game, xi);
  const int i = 4, H = 80;
  Rng sim(19);
  const auto est = ref::monte_carlo(4000, [&](int) {
    std::vector<std::vector<int>> acts;
    const auto traj = ref::rollout(game, xi, game.mu()[0].state, H, sim, &acts);
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < H; ++t, disc *= game.gamma()) ret += disc * game.reward(i, traj[t], acts[t]);
    return ret;
  });
  EXPECT_NEAR(ev.value_of_profile(i), est.mean, 3 * est.stderr_ + 1e-6);
}

TEST(CongestionOracle, ValuePotentialIdentityAndMonteCarlo) {
  const auto game = micro_congestion_game(0.9, 0.5);
  Rng rng(20);
  const auto states = enumerate_states(game);
  for (int k = 0; k < 6; ++k) {
    const auto theta = SoftmaxParams::random_normal(game, 1.5, rng);
    const int i = k % 2;
    auto dev = theta;
    dev.theta[i] = SoftmaxParams::random_normal(game, 1.5, rng).theta[i];
    const auto p0 = softmax_profile(theta), p1 = softmax_profile(dev);
    const auto s0 = solve_exact(game, p0), s1 = solve_exact(game, p1);
    for (std::size_t x = 0; x < states.size(); ++x)
      EXPECT_NEAR(s0.v[i](x) - s1.v[i](x),
                  value_potential_congestion(game, p0, states[x]) - value_potential_congestion(game, p1, states[x]),
                  1e-8);
  }
  const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
  const auto s0 = game.mu()[0].state;
  Rng sim(21);
  const int H = 250;
  const auto est = ref::monte_carlo(4000, [&](int) {
    std::vector<std::vector<int>> acts;
    const auto traj = ref::rollout(game, xi, s0, H, sim, &acts);
    double ret = 0.0, disc = 1.0;
    for (int t = 0; t < H; ++t, disc *= game.gamma()) ret += disc * stage_potential_congestion(game, traj[t], acts[t]);
    return ret;
  });
  EXPECT_NEAR(value_potential_congestion(game, xi, s0), est.mean, 3 * est.stderr_ + 1e-6);
}

TEST(CongestionOracle, NashGapPathsAgree) {
  // The micro game is dense, so compare the dense gap against the structured evaluator's ascent.
  const auto game = micro_congestion_game(0.9, 0.5);
  Rng rng(22);
  const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto xi = softmax_profile(theta);
  const CongestionEvaluator ev(game, xi, 1e-12);
  BestResponseOptions opt;
  opt.restarts = 4;
  opt.steps = 400;
  for (int i = 0; i < 2; ++i) {
    const double dense = best_response_local(game, xi, i, opt);
    const double structured = local_ascent(
        [&](const Eigen::MatrixXd& t, Eigen::MatrixXd* g) { return ev.value(i, t, g); }, theta.theta[i], opt);
    EXPECT_NEAR(dense, structured, 1e-4);
    EXPECT_LE(dense, best_response_upper(game, xi, i) + 1e-9);
  }
}

TEST(Diagnostics, FiniteAndTabularLambda) {
  Rng rng(23);
  const auto game = random_line_game(2, {}, rng);
  const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto feats = make_all_features(game, 1, FeatureMode::Tabular);
  const auto d = diagnostics(game, theta, feats, 0.1);
  EXPECT_TRUE(std::isfinite(d.D));
  EXPECT_GE(d.D, 1.0);
  EXPECT_GT(d.pi_min, 0.0);
  EXPECT_NEAR(d.lambda_min, d.pi_min, 1e-12);
  EXPECT_LE(d.eps_red, 1e-9);
  for (double c : d.c_theta) {
    EXPECT_GT(c, 0.0);
    EXPECT_LE(c, 1.0 + 1e-12);
  }
  // A sharply peaked policy on a game with a single rewarded action per state.
  auto [chain, desc] = build_chain_example(0.9);
  SoftmaxParams peaked = SoftmaxParams::zeros(chain);
  for (auto& t : peaked.theta) t.col(G).array() = 30.0;
  const auto dc = diagnostics(chain, peaked, make_all_features(chain, 0, FeatureMode::Tabular), 0.1);
  EXPECT_GT(dc.c_theta[3], 0.999);
}
