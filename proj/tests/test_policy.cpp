#include <gtest/gtest.h>

#include <cmath>

#include "nmpg/fixtures.hpp"
#include "nmpg/policy.hpp"
#include "test_oracles.hpp"

using namespace nmpg;

TEST(Softmax, ZeroIsUniform) {
  const Eigen::VectorXd p = softmax_probs(Eigen::MatrixXd::Zero(2, 3), 1);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(p(a), 1.0 / 3, 1e-15);
}

TEST(Softmax, LogRatioRow) {
  Eigen::MatrixXd th(1, 2);
  th << std::log(1.0), std::log(3.0);
  const Eigen::VectorXd p = softmax_probs(th, 0);
  EXPECT_NEAR(p(0), 0.25, 1e-15);
  EXPECT_NEAR(p(1), 0.75, 1e-15);
}

TEST(Softmax, ShiftInvarianceAndLargeLogits) {
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    Eigen::MatrixXd th = Eigen::MatrixXd::NullaryExpr(3, 4, [&] { return 5 * standard_normal(rng); });
    const Eigen::VectorXd p = softmax_probs(th, 1);
    Eigen::MatrixXd shifted = th;
    shifted.row(1).array() += 1234.5;
    EXPECT_LE((softmax_probs(shifted, 1) - p).cwiseAbs().maxCoeff(), 1e-12);
  }
  Eigen::MatrixXd big(1, 2);
  big << 800.0, 0.0;
  const Eigen::VectorXd p = softmax_probs(big, 0);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p(0), 1.0, 1e-15);
}

TEST(LogProbGrad, ClosedFormCases) {
  const Eigen::MatrixXd th = Eigen::MatrixXd::Zero(3, 2);
  const Eigen::MatrixXd g = log_prob_grad(th, 1, 0);
  EXPECT_NEAR(g(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(g(1, 1), -0.5, 1e-15);
  EXPECT_EQ(g.row(0).norm(), 0.0);
  EXPECT_EQ(g.row(2).norm(), 0.0);
}

TEST(LogProbGradProperty, FiniteDifferencesAndTangency) {
  Rng rng(2);
  const double h = 1e-6;
  for (int trial = 0; trial < 40; ++trial) {
    Eigen::MatrixXd th = Eigen::MatrixXd::NullaryExpr(3, 3, [&] { return standard_normal(rng); });
    const int s = trial % 3, a = (trial / 3) % 3;
    const Eigen::MatrixXd g = log_prob_grad(th, s, a);
    EXPECT_NEAR(g.row(s).sum(), 0.0, 1e-14);
    Eigen::MatrixXd fd(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        Eigen::MatrixXd tp = th, tm = th;
        tp(r, c) += h;
        tm(r, c) -= h;
        fd(r, c) = (std::log(softmax_probs(tp, s)(a)) - std::log(softmax_probs(tm, s)(a))) / (2 * h);
      }
    EXPECT_LE((g - fd).norm() / g.norm(), 1e-5);
  }
}

TEST(LogProbGradProperty, ProbabilityGradientBound) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd th = Eigen::MatrixXd::NullaryExpr(2, 4, [&] { return 3 * standard_normal(rng); });
    const int s = trial % 2, a = trial % 4;
    const double xi = softmax_probs(th, s)(a);
    EXPECT_LE(prob_grad(th, s, a).norm(), std::sqrt(2.0) * xi + 1e-15);
    EXPECT_LE(log_prob_grad(th, s, a).norm(), std::sqrt(2.0) + 1e-15);
  }
}

TEST(EpsilonExplore, EndpointsAndL1Bound) {
  Rng rng(4);
  const auto game = random_line_game(3, {}, rng);
  const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 2.0, rng));
  const auto same = epsilon_explore(xi, 0.0);
  const auto uni = epsilon_explore(xi, 1.0);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(same.probs[i], xi.probs[i]);
    EXPECT_LE((uni.probs[i].array() - 0.5).abs().maxCoeff(), 1e-15);
  }
  EXPECT_EQ(uni.kind, PolicyKind::EpsilonMixed);
  for (double eps : {0.01, 0.2, 0.7}) {
    const auto mix = epsilon_explore(xi, eps);
    mix.validate();
    for (int i = 0; i < 3; ++i)
      for (int s = 0; s < 2; ++s)
        EXPECT_LE((mix.probs[i].row(s) - xi.probs[i].row(s)).cwiseAbs().sum(), 2 * eps + 1e-15);
  }
  EXPECT_THROW(epsilon_explore(xi, -0.1), std::invalid_argument);
  EXPECT_THROW(epsilon_explore(xi, 1.1), std::invalid_argument);
}

TEST(ProductPolicy, JointDeviationBoundedBySumOfLocal) {
  Rng rng(5);
  const auto game = random_line_game(3, {}, rng);
  const auto states = game.state_codec().size();
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = softmax_profile(SoftmaxParams::random_normal(game, 2.0, rng));
    const auto y = softmax_profile(SoftmaxParams::random_normal(game, 2.0, rng));
    for (std::size_t code = 0; code < states; ++code) {
      const auto s = game.state_codec().decode(code);
      double joint = 0.0, local = 0.0;
      for (std::size_t b = 0; b < game.action_codec().size(); ++b) {
        const auto a = game.action_codec().decode(b);
        joint += std::abs(x.joint_prob(s, a) - y.joint_prob(s, a));
      }
      for (int i = 0; i < 3; ++i) local += (x.probs[i].row(s[i]) - y.probs[i].row(s[i])).cwiseAbs().sum();
      EXPECT_LE(joint, local + 1e-12);
    }
  }
}

TEST(SampleAction, DeterministicAndSingleAction) {
  Rng rng(6);
  const auto game = random_line_game(3, {}, rng);
  const auto det = deterministic_profile(game, {{1, 0}, {0, 0}, {1, 1}});
  const std::vector<int> s{0, 1, 1};
  for (int k = 0; k < 20; ++k) EXPECT_EQ(sample_action(det, s, rng), (std::vector<int>{1, 0, 1}));

  PolicyProfile single;
  single.probs = {Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd::Ones(3, 1)};
  EXPECT_EQ(sample_action(single, std::vector<int>{1, 2}, rng), (std::vector<int>{0, 0}));
}

TEST(SampleAction, JointFrequenciesMatchProduct) {
  Rng rng(7);
  const auto game = random_line_game(2, {}, rng);
  const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
  const std::vector<int> s{1, 0};
  const int draws = 100000;
  std::vector<int> hits(4, 0);
  Rng sim(8);
  for (int k = 0; k < draws; ++k) {
    const auto a = sample_action(xi, s, sim);
    ++hits[a[0] * 2 + a[1]];
  }
  for (int a0 = 0; a0 < 2; ++a0)
    for (int a1 = 0; a1 < 2; ++a1) {
      const double p = xi.probs[0](1, a0) * xi.probs[1](0, a1);
      EXPECT_NEAR(hits[a0 * 2 + a1] / double(draws), p, 3 * std::sqrt(p * (1 - p) / draws));
    }
}

TEST(SampleAction, ReplayableFromSeed) {
  Rng rng(9);
  const auto game = random_line_game(4, {}, rng);
  const auto xi = softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng));
  Rng a(42), b(42);
  const std::vector<int> s{0, 1, 0, 1};
  for (int k = 0; k < 100; ++k) ASSERT_EQ(sample_action(xi, s, a), sample_action(xi, s, b));
}

TEST(PolicyJson, RoundTripAndLogits) {
  Rng rng(10);
  const auto game = random_line_game(3, {}, rng);
  const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
  const auto back = params_from_json(game, params_to_json(game, theta));
  for (int i = 0; i < 3; ++i) EXPECT_EQ(back.theta[i], theta.theta[i]);
  const auto probs = softmax_table(theta.theta[0]);
  EXPECT_LE((softmax_table(logits_of(probs)) - probs).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_TRUE(logits_of(Eigen::MatrixXd::Identity(2, 2)).allFinite());
}

TEST(PolicyProfile, ValidateRejectsBadRows) {
  PolicyProfile p;
  p.probs = {(Eigen::MatrixXd(1, 2) << 0.5, 0.6).finished()};
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
