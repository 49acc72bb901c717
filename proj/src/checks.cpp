#include "nmpg/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "nmpg/fixtures.hpp"
#include "nmpg/oracle.hpp"
#include "nmpg/policy.hpp"
#include "nmpg/regret.hpp"
#include "nmpg/rng.hpp"

namespace nmpg {

using nlohmann::json;

namespace {

json report(const std::string& suite, bool passed, double max_violation, json details) {
  return {{"suite", suite}, {"passed", passed}, {"max_violation", max_violation}, {"details", details}};
}

double objective_at(const NetworkedGame& game, const SoftmaxParams& theta, int i) {
  return objective(game, softmax_profile(theta), i);
}

json check_decay() {
  double worst = 0.0;  // max of gap - bound, and of the gap at the diameter
  bool ok = true;
  json rows = json::array();
  Rng rng(101);
  for (int kappa_r : {0, 1}) {
    for (double gamma : {0.5, 0.9}) {
      RandomGameOptions opt;
      opt.kappa_r = kappa_r;
      opt.gamma = gamma;
      const NetworkedGame game = random_line_game(4, opt, rng).rescaled();
      const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
      const auto profile = softmax_profile(theta);
      const int diam = game.graph().diameter();
      for (int i = 0; i < game.n(); ++i) {
        for (int kc = 0; kc <= diam; ++kc) {
          const double gap = decay_gap(game, profile, i, kc);
          const double bound = decay_bound(gamma, kc, kappa_r);
          const double excess = kc == diam ? gap - 1e-10 : gap - bound;
          worst = std::max(worst, excess);
          ok = ok && excess <= 0.0;
          rows.push_back({{"kappa_r", kappa_r}, {"gamma", gamma}, {"agent", i}, {"kappa_c", kc},
                          {"gap", gap}, {"bound", bound}});
        }
      }
    }
  }
  return report("decay", ok, worst, rows);
}

json check_subchain() {
  Rng rng(202);
  RandomGameOptions opt;
  opt.kappa_r = 0;
  opt.gamma = 0.9;
  const NetworkedGame game = random_line_game(3, opt, rng).rescaled();
  const auto profile = epsilon_explore(softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng)), 0.2);
  bool ok = true;
  double worst = 0.0;
  json rows = json::array();
  for (int i = 0; i < game.n(); ++i) {
    const auto full = build_state_action_chain(game, profile, i);
    for (int kc = 0; kc <= game.graph().diameter(); ++kc) {
      const auto sub = build_subchain(game, full, kc);
      const auto rep = subchain_checks(game, profile, sub, full);
      ok = ok && rep.passed;
      worst = std::max({worst, rep.stationary_gap / 1e-8, rep.conditional_gap / 1e-12,
                        rep.cost_bound > 0 ? rep.cost_gap / rep.cost_bound : rep.cost_gap});
      json r = rep.to_json();
      r["agent"] = i;
      r["kappa_c"] = kc;
      rows.push_back(r);
    }
  }
  // max_violation is the largest ratio to its tolerance; <= 1 means every check held.
  return report("subchain", ok, worst, rows);
}

json check_potentials() {
  json details;
  double worst = 0.0;
  const NetworkedGame game = micro_congestion_game(0.9, 0.5);

  // Stage potential: every unilateral deviation at every (s, a).
  double stage = 0.0;
  const auto& sc = game.state_codec();
  const auto& ac = game.action_codec();
  std::vector<int> s(game.n()), a(game.n()), b(game.n());
  for (std::size_t x = 0; x < sc.size(); ++x) {
    sc.decode(x, s);
    for (std::size_t y = 0; y < ac.size(); ++y) {
      ac.decode(y, a);
      for (int i = 0; i < game.n(); ++i) {
        for (int dev = 0; dev < game.num_actions(i); ++dev) {
          b = a;
          b[i] = dev;
          const double dr = game.reward(i, s, a) - game.reward(i, s, b);
          const double dphi = stage_potential_congestion(game, s, a) - stage_potential_congestion(game, s, b);
          stage = std::max(stage, std::abs(dr - dphi));
        }
      }
    }
  }
  details["stage_identity_max_error"] = stage;

  // Value potential: random unilateral policy deviations, every start state.
  Rng rng(303);
  double value = 0.0;
  const auto states = enumerate_states(game);
  for (int trial = 0; trial < 10; ++trial) {
    const auto theta = SoftmaxParams::random_normal(game, 1.5, rng);
    const int i = trial % game.n();
    auto dev = theta;
    dev.theta[i] = SoftmaxParams::random_normal(game, 1.5, rng).theta[i];
    const auto p0 = softmax_profile(theta), p1 = softmax_profile(dev);
    const auto s0 = solve_exact(game, p0), s1 = solve_exact(game, p1);
    for (std::size_t x = 0; x < states.size(); ++x) {
      const double dv = s0.v[i](static_cast<Eigen::Index>(x)) - s1.v[i](static_cast<Eigen::Index>(x));
      const double dphi = value_potential_congestion(game, p0, states[x]) -
                          value_potential_congestion(game, p1, states[x]);
      value = std::max(value, std::abs(dv - dphi));
    }
  }
  details["value_identity_max_error"] = value;

  // Local potentials of the chain example, and a wrong descriptor that must be caught.
  auto [chain, desc] = build_chain_example(0.9);
  Rng r2(304);
  const auto good = nmpg_check(chain, desc, 200, r2);
  auto bad_desc = desc;
  for (auto& f : bad_desc.local_potentials) f = [](const PolicyProfile&) { return 0.0; };
  Rng r3(305);
  const auto bad = nmpg_check(chain, bad_desc, 200, r3);
  details["chain_nmpg_max_violation"] = good.max_violation;
  details["zero_potential_violation"] = bad.max_violation;

  worst = std::max({stage / 1e-12, value / 1e-8, good.max_violation / 1e-8});
  const bool ok = stage <= 1e-12 && value <= 1e-8 && good.passed && !bad.passed;
  return report("potentials", ok, worst, details);
}

json check_gradients() {
  Rng rng(404);
  double fd_err = 0.0, traj_err = 0.0, pdt_err = 0.0;
  for (int g = 0; g < 5; ++g) {
    RandomGameOptions opt;
    opt.gamma = 0.8;
    const NetworkedGame game = random_line_game(3, opt, rng);
    const auto theta = SoftmaxParams::random_normal(game, 1.0, rng);
    for (int i = 0; i < game.n(); ++i) {
      const Eigen::MatrixXd grad = exact_policy_gradient(game, theta, i);
      Eigen::MatrixXd fd(grad.rows(), grad.cols());
      const double h = 1e-6;
      for (Eigen::Index r = 0; r < grad.rows(); ++r)
        for (Eigen::Index c = 0; c < grad.cols(); ++c) {
          auto tp = theta, tm = theta;
          tp.theta[i](r, c) += h;
          tm.theta[i](r, c) -= h;
          fd(r, c) = (objective_at(game, tp, i) - objective_at(game, tm, i)) / (2 * h);
        }
      fd_err = std::max(fd_err, (grad - fd).norm() / std::max(grad.norm(), 1e-12));
      traj_err = std::max(traj_err, (grad - policy_gradient_trajectory_form(game, theta, i)).cwiseAbs().maxCoeff());

      auto dev = theta;
      dev.theta[i] = SoftmaxParams::random_normal(game, 1.0, rng).theta[i];
      const auto p0 = softmax_profile(theta), p1 = softmax_profile(dev);
      const auto s0 = solve_exact(game, p0), s1 = solve_exact(game, p1);
      const auto states = enumerate_states(game);
      double rhs = 0.0;
      for (std::size_t x = 0; x < states.size(); ++x)
        for (int a = 0; a < game.num_actions(i); ++a)
          rhs += s1.d(static_cast<Eigen::Index>(x)) *
                 (p1.probs[i](states[x][i], a) - p0.probs[i](states[x][i], a)) *
                 s0.qbar[i](static_cast<Eigen::Index>(x), a);
      rhs /= 1.0 - game.gamma();
      pdt_err = std::max(pdt_err, std::abs(s1.J(i) - s0.J(i) - rhs));
    }
  }
  const bool ok = fd_err <= 1e-5 && traj_err <= 1e-8 && pdt_err <= 1e-9;
  return report("gradients", ok, std::max({fd_err / 1e-5, traj_err / 1e-8, pdt_err / 1e-9}),
                {{"finite_difference_rel_error", fd_err},
                 {"trajectory_form_error", traj_err},
                 {"performance_difference_error", pdt_err}});
}

json check_regret_sandwich() {
  Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 6;
    const int P = 1 + trial % 17;
    RegretSeries series;
    for (int k = 0; k < P; ++k) {
      std::vector<double> row(n);
      for (auto& g : row) g = uniform01(rng) * (trial % 3 == 0 ? 1.0 : 10.0);
      series.append(k, row);
    }
    worst = std::max(worst, sandwich_violation(series));
  }
  return report("regret-sandwich", worst <= 1e-12, worst, {{"series", 100}});
}

json check_critic_fixed_point() {
  Rng rng(606);
  RandomGameOptions opt;
  opt.gamma = 0.9;
  const NetworkedGame game = random_line_game(2, opt, rng);
  const auto profile = epsilon_explore(softmax_profile(SoftmaxParams::random_normal(game, 1.0, rng)), 0.1);
  const int diam = game.graph().diameter();
  double worst = 0.0;
  json rows = json::array();
  for (int i = 0; i < game.n(); ++i) {
    const auto chain = build_state_action_chain(game, profile, i);
    const auto features = make_features(game, i, diam, FeatureMode::Tabular);
    const auto fp = td0_fixed_point(game, chain, features);
    worst = std::max({worst, fp.eps_red, fp.residual});
    rows.push_back({{"agent", i}, {"eps_red", fp.eps_red}, {"residual", fp.residual},
                    {"lambda_min", fp.lambda_min}});
  }
  return report("critic-fixed-point", worst <= 1e-9, worst, rows);
}

json check_chain_example() {
  double worst = 0.0;
  json rows = json::array();
  constexpr int kB = 0, kG = 1;
  for (double gamma : {0.5, 0.9, 0.99}) {
    auto [game, desc] = build_chain_example(gamma);
    const double top = std::pow(gamma, 4) / (1.0 - gamma);
    auto det = [&](int a1, int a4) {
      return deterministic_profile(game, {{a1, a1}, {kB, kB}, {kB, kB}, {a4, a4}});
    };
    json f;
    for (int a1 : {kB, kG})
      for (int a4 : {kB, kG}) {
        const auto J = objectives(game, det(a1, a4));
        const double expect = (a1 == kG && a4 == kG) ? top : 0.0;
        worst = std::max({worst, std::abs(J(3) - expect), std::abs(J(0)), std::abs(J(1)), std::abs(J(2))});
        f[std::string(a1 == kG ? "g" : "b") + (a4 == kG ? "g" : "b")] = J(3);
      }
    // A single potential would give the (b,b) -> (g,g) difference along both deviation paths.
    const double via_agent1_first = objective(game, det(kG, kB), 0) - objective(game, det(kB, kB), 0) +
                                    objective(game, det(kG, kG), 3) - objective(game, det(kG, kB), 3);
    const double via_agent4_first = objective(game, det(kB, kG), 3) - objective(game, det(kB, kB), 3) +
                                    objective(game, det(kG, kG), 0) - objective(game, det(kB, kG), 0);
    rows.push_back({{"gamma", gamma}, {"f", f},
                    {"contradiction_pair", {via_agent4_first, via_agent1_first}},
                    {"expected_pair", {0.0, top}}});
    worst = std::max({worst, std::abs(via_agent4_first), std::abs(via_agent1_first - top)});
  }
  return report("chain-example", worst <= 1e-10, worst, rows);
}

const std::map<std::string, std::function<json()>>& registry() {
  static const std::map<std::string, std::function<json()>> r = {
      {"decay", check_decay},
      {"subchain", check_subchain},
      {"potentials", check_potentials},
      {"gradients", check_gradients},
      {"regret-sandwich", check_regret_sandwich},
      {"critic-fixed-point", check_critic_fixed_point},
      {"chain-example", check_chain_example},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& check_suites() {
  static const std::vector<std::string> names = {"decay",           "subchain",          "potentials",
                                                 "gradients",       "regret-sandwich",   "critic-fixed-point",
                                                 "chain-example"};
  return names;
}

json run_check(const std::string& suite) {
  const auto& r = registry();
  const auto it = r.find(suite);
  if (it == r.end()) throw std::invalid_argument("unknown check suite '" + suite + "'");
  return it->second();
}

}  // namespace nmpg
