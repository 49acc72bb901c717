#include "nmpg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace nmpg {

bool dense_enumerable(const NetworkedGame& game) {
  const std::size_t S = game.state_codec().size();
  const std::size_t A = game.action_codec().size();
  return S <= kOracleStateGuard && A <= kOracleGuard && S * A <= kOracleGuard;
}

void require_dense(const NetworkedGame& game, const char* what) {
  if (!dense_enumerable(game))
    throw std::length_error(std::string(what) + ": game exceeds the dense-oracle enumeration guard");
}

std::vector<std::vector<int>> enumerate_states(const NetworkedGame& game) {
  const auto& codec = game.state_codec();
  std::vector<std::vector<int>> out(codec.size());
  for (std::size_t c = 0; c < codec.size(); ++c) out[c] = codec.decode(c);
  return out;
}

Eigen::VectorXd kron_all(const std::vector<Eigen::VectorXd>& parts) {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(1);
  for (const auto& p : parts) {
    Eigen::VectorXd next(out.size() * p.size());
    for (Eigen::Index a = 0; a < out.size(); ++a) next.segment(a * p.size(), p.size()) = out(a) * p;
    out = std::move(next);
  }
  return out;
}

namespace {

Eigen::VectorXd row_vec(std::span<const double> r) {
  return Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
}

// m_j(. | s) = sum_{a_j} xi_j(a_j|s_j) P_j(. | s, a_j)
Eigen::VectorXd marginal_step(const NetworkedGame& game, const PolicyProfile& profile, int j,
                              std::span<const int> s) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(game.num_states(j));
  for (int a = 0; a < game.num_actions(j); ++a) {
    const double p = profile.probs[j](s[j], a);
    if (p != 0.0) m += p * row_vec(game.kernel_row(j, s, a));
  }
  return m;
}

// r-bar_i(s, a_i): the expectation over the actions of the other agents in r_i's scope.
double averaged_reward(const NetworkedGame& game, const PolicyProfile& profile, int i,
                       std::span<const int> s, int a_i) {
  const auto& scope = game.reward_spec(i).scope;
  std::vector<int> others;
  for (int j : scope)
    if (j != i) others.push_back(j);
  std::vector<int> radices;
  for (int j : others) radices.push_back(game.num_actions(j));
  MixedRadix codec(radices);
  std::vector<int> a(game.n(), 0), x(others.size(), 0);
  a[i] = a_i;
  double total = 0.0;
  do {
    double w = 1.0;
    for (std::size_t k = 0; k < others.size(); ++k) {
      a[others[k]] = x[k];
      w *= profile.probs[others[k]](s[others[k]], x[k]);
    }
    if (w != 0.0) total += w * game.reward(i, s, a);
  } while (codec.next(x));
  return total;
}

void check_profile(const NetworkedGame& game, const PolicyProfile& profile) {
  if (profile.n() != game.n()) throw std::invalid_argument("profile has wrong agent count");
  for (int i = 0; i < game.n(); ++i)
    if (profile.probs[i].rows() != game.num_states(i) || profile.probs[i].cols() != game.num_actions(i))
      throw std::invalid_argument("profile table shape mismatch for agent " + std::to_string(i));
}

}  // namespace

Eigen::MatrixXd induced_chain(const NetworkedGame& game, const PolicyProfile& profile) {
  require_dense(game, "induced_chain");
  check_profile(game, profile);
  const auto states = enumerate_states(game);
  const Eigen::Index S = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd P(S, S);
  std::vector<Eigen::VectorXd> parts(game.n());
  for (Eigen::Index c = 0; c < S; ++c) {
    for (int j = 0; j < game.n(); ++j) parts[j] = marginal_step(game, profile, j, states[c]);
    P.row(c) = kron_all(parts).transpose();
  }
  return P;
}

Eigen::MatrixXd induced_state_action_chain(const NetworkedGame& game, const PolicyProfile& profile) {
  require_dense(game, "induced_state_action_chain");
  check_profile(game, profile);
  const auto states = enumerate_states(game);
  const auto& acodec = game.action_codec();
  const Eigen::Index S = static_cast<Eigen::Index>(states.size());
  const Eigen::Index A = static_cast<Eigen::Index>(acodec.size());
  // xi(a'|s') for every pair, reused across rows.
  Eigen::MatrixXd pol(S, A);
  std::vector<int> a(game.n());
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index k = 0; k < A; ++k) {
      acodec.decode(k, a);
      pol(s, k) = profile.joint_prob(states[s], a);
    }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S * A, S * A);
  std::vector<Eigen::VectorXd> parts(game.n());
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index k = 0; k < A; ++k) {
      acodec.decode(k, a);
      for (int j = 0; j < game.n(); ++j) parts[j] = row_vec(game.kernel_row(j, states[s], a[j]));
      const Eigen::VectorXd next = kron_all(parts);
      for (Eigen::Index t = 0; t < S; ++t)
        if (next(t) != 0.0) P.block(s * A + k, t * A, 1, A) = next(t) * pol.row(t);
    }
  return P;
}

AveragedMdp averaged_mdp(const NetworkedGame& game, const PolicyProfile& profile, int i) {
  require_dense(game, "averaged_mdp");
  check_profile(game, profile);
  const auto states = enumerate_states(game);
  const Eigen::Index S = static_cast<Eigen::Index>(states.size());
  const int Ai = game.num_actions(i);
  AveragedMdp mdp;
  mdp.kernel.assign(Ai, Eigen::MatrixXd(S, S));
  mdp.reward.resize(S, Ai);
  std::vector<Eigen::VectorXd> parts(game.n());
  for (Eigen::Index c = 0; c < S; ++c) {
    for (int j = 0; j < game.n(); ++j)
      if (j != i) parts[j] = marginal_step(game, profile, j, states[c]);
    for (int a = 0; a < Ai; ++a) {
      parts[i] = row_vec(game.kernel_row(i, states[c], a));
      mdp.kernel[a].row(c) = kron_all(parts).transpose();
      mdp.reward(c, a) = averaged_reward(game, profile, i, states[c], a);
    }
  }
  return mdp;
}

namespace {

Eigen::VectorXd mu_vector(const NetworkedGame& game) {
  const auto mu = game.mu_dense(kOracleStateGuard);
  return Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
}

// Local state of agent i for every global code.
std::vector<int> local_index(const NetworkedGame& game, int i) {
  const auto& codec = game.state_codec();
  std::vector<int> out(codec.size());
  std::size_t stride = 1;
  for (int j = game.n() - 1; j > i; --j) stride *= static_cast<std::size_t>(game.num_states(j));
  for (std::size_t c = 0; c < codec.size(); ++c)
    out[c] = static_cast<int>((c / stride) % static_cast<std::size_t>(game.num_states(i)));
  return out;
}

struct AgentSolve {
  Eigen::MatrixXd qbar;
  Eigen::VectorXd v;
};

// Value and averaged Q of agent i given its averaged MDP and own local policy.
AgentSolve solve_agent(const AveragedMdp& mdp, const Eigen::MatrixXd& probs_i,
                       const std::vector<int>& si, double gamma,
                       Eigen::MatrixXd* system_out = nullptr) {
  const Eigen::Index S = mdp.reward.rows();
  const int Ai = static_cast<int>(mdp.reward.cols());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(S);
  for (Eigen::Index s = 0; s < S; ++s)
    for (int a = 0; a < Ai; ++a) {
      const double p = probs_i(si[s], a);
      if (p == 0.0) continue;
      P.row(s) += p * mdp.kernel[a].row(s);
      r(s) += p * mdp.reward(s, a);
    }
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * P;
  AgentSolve out;
  out.v = system.partialPivLu().solve(r);
  out.qbar.resize(S, Ai);
  for (int a = 0; a < Ai; ++a) out.qbar.col(a) = mdp.reward.col(a) + gamma * (mdp.kernel[a] * out.v);
  if (system_out) *system_out = std::move(system);
  return out;
}

}  // namespace

ExactSolution solve_exact(const NetworkedGame& game, const PolicyProfile& profile) {
  require_dense(game, "solve_exact");
  check_profile(game, profile);
  const double gamma = game.gamma();
  ExactSolution sol;
  sol.P = induced_chain(game, profile);
  const Eigen::Index S = sol.P.rows();
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - gamma * sol.P;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  const Eigen::VectorXd mu = mu_vector(game);
  sol.d = (1.0 - gamma) * M.transpose().partialPivLu().solve(mu);
  sol.J.resize(game.n());
  for (int i = 0; i < game.n(); ++i) {
    const auto mdp = averaged_mdp(game, profile, i);
    const auto si = local_index(game, i);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(S);
    for (Eigen::Index s = 0; s < S; ++s)
      for (int a = 0; a < game.num_actions(i); ++a) r(s) += profile.probs[i](si[s], a) * mdp.reward(s, a);
    Eigen::VectorXd v = lu.solve(r);
    Eigen::MatrixXd q(S, game.num_actions(i));
    for (int a = 0; a < game.num_actions(i); ++a) q.col(a) = mdp.reward.col(a) + gamma * (mdp.kernel[a] * v);
    sol.adv_bar.push_back(q.colwise() - v);
    sol.qbar.push_back(std::move(q));
    sol.J(i) = mu.dot(v);
    sol.v.push_back(std::move(v));
  }
  return sol;
}

Eigen::MatrixXd q_function(const NetworkedGame& game, const PolicyProfile& profile, int i) {
  const auto sol = solve_exact(game, profile);
  const auto states = enumerate_states(game);
  const auto& acodec = game.action_codec();
  const Eigen::Index S = static_cast<Eigen::Index>(states.size());
  const Eigen::Index A = static_cast<Eigen::Index>(acodec.size());
  Eigen::MatrixXd Q(S, A);
  std::vector<int> a(game.n());
  std::vector<Eigen::VectorXd> parts(game.n());
  for (Eigen::Index s = 0; s < S; ++s)
    for (Eigen::Index k = 0; k < A; ++k) {
      acodec.decode(k, a);
      for (int j = 0; j < game.n(); ++j) parts[j] = row_vec(game.kernel_row(j, states[s], a[j]));
      Q(s, k) = game.reward(i, states[s], a) + game.gamma() * kron_all(parts).dot(sol.v[i]);
    }
  return Q;
}

Eigen::VectorXd objectives(const NetworkedGame& game, const PolicyProfile& profile) {
  return solve_exact(game, profile).J;
}

double objective(const NetworkedGame& game, const PolicyProfile& profile, int i) {
  if (i < 0 || i >= game.n()) throw std::out_of_range("objective: bad agent index");
  if (!dense_enumerable(game) && game.congestion()) {
    CongestionEvaluator ev(game, profile);
    return ev.value_of_profile(i);
  }
  return objectives(game, profile)(i);
}

Eigen::VectorXd visitation(const NetworkedGame& game, const PolicyProfile& profile,
                           const Eigen::VectorXd& start) {
  const Eigen::MatrixXd P = induced_chain(game, profile);
  if (start.size() != P.rows()) throw std::invalid_argument("visitation: start has wrong size");
  const double gamma = game.gamma();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(P.rows(), P.cols()) - gamma * P.transpose();
  Eigen::VectorXd d = (1.0 - gamma) * M.partialPivLu().solve(start);
  return d / d.sum();
}

Eigen::MatrixXd policy_gradient_from(const NetworkedGame& game, const PolicyProfile& profile,
                                     const ExactSolution& sol, int i) {
  const auto si = local_index(game, i);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(game.num_states(i), game.num_actions(i));
  for (Eigen::Index s = 0; s < sol.d.size(); ++s)
    for (int a = 0; a < game.num_actions(i); ++a)
      G(si[s], a) += sol.d(s) * profile.probs[i](si[s], a) * sol.adv_bar[i](s, a);
  return G / (1.0 - game.gamma());
}

Eigen::MatrixXd exact_policy_gradient(const NetworkedGame& game, const SoftmaxParams& theta, int i) {
  const auto profile = softmax_profile(theta);
  return policy_gradient_from(game, profile, solve_exact(game, profile), i);
}

Eigen::MatrixXd policy_gradient_trajectory_form(const NetworkedGame& game, const SoftmaxParams& theta,
                                                int i, double tail_tol) {
  const auto profile = softmax_profile(theta);
  const auto sol = solve_exact(game, profile);
  const auto si = local_index(game, i);
  const double gamma = game.gamma();
  const Eigen::MatrixXd& Q = sol.qbar[i];
  const double qmax = std::max(Q.cwiseAbs().maxCoeff(), 1e-300);
  const int Si = game.num_states(i), Ai = game.num_actions(i);
  // Per-state expected score-weighted Q: sum_a xi(a) (e_a - xi) Q(s,a) lives on row s_i.
  Eigen::MatrixXd per_state(sol.P.rows(), Ai);
  for (Eigen::Index s = 0; s < sol.P.rows(); ++s) {
    const auto xi = profile.probs[i].row(si[s]);
    const double mean = xi.dot(Q.row(s));
    for (int a = 0; a < Ai; ++a) per_state(s, a) = xi(a) * (Q(s, a) - mean);
  }
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(Si, Ai);
  Eigen::VectorXd p = mu_vector(game);
  double disc = 1.0;
  // |score| <= sqrt(2), so the tail after t terms is at most sqrt(2) qmax gamma^t / (1 - gamma).
  while (std::sqrt(2.0) * qmax * disc / (1.0 - gamma) > tail_tol) {
    for (Eigen::Index s = 0; s < p.size(); ++s)
      if (p(s) != 0.0) G.row(si[s]) += disc * p(s) * per_state.row(s);
    p = sol.P.transpose() * p;
    disc *= gamma;
  }
  return G;
}

// Best responses ----------------------------------------------------------------

double best_response_upper(const NetworkedGame& game, const PolicyProfile& profile, int i,
                           const BestResponseOptions& opt) {
  const auto mdp = averaged_mdp(game, profile, i);
  const double gamma = game.gamma();
  const Eigen::Index S = mdp.reward.rows();
  Eigen::VectorXd V = Eigen::VectorXd::Zero(S);
  for (int it = 0; it < opt.max_vi_iterations; ++it) {
    Eigen::VectorXd best = Eigen::VectorXd::Constant(S, -std::numeric_limits<double>::infinity());
    for (std::size_t a = 0; a < mdp.kernel.size(); ++a)
      best = best.cwiseMax(mdp.reward.col(static_cast<Eigen::Index>(a)) + gamma * (mdp.kernel[a] * V));
    const double change = (best - V).cwiseAbs().maxCoeff();
    V = std::move(best);
    if (change <= opt.tol_vi) return mu_vector(game).dot(V);
  }
  throw std::runtime_error("best_response_upper: value iteration did not converge");
}

double local_ascent(const LocalObjective& f, const Eigen::MatrixXd& start,
                    const BestResponseOptions& opt) {
  Rng rng = substream(opt.seed, "best-response");
  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::MatrixXd& th) { best = std::max(best, f(th, nullptr)); };
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    Eigen::MatrixXd th = start;
    if (r > 0)
      for (Eigen::Index k = 0; k < th.size(); ++k) th(k) = opt.init_scale * standard_normal(rng);
    Eigen::MatrixXd g(th.rows(), th.cols());
    double J = f(th, &g);
    double eta = 1.0;
    for (int step = 0; step < opt.steps; ++step) {
      const double gg = g.squaredNorm();
      if (!(gg > 1e-24)) break;
      bool moved = false;
      while (eta > 1e-12) {
        Eigen::MatrixXd cand = th + eta * g;
        const double Jc = f(cand, nullptr);
        if (Jc >= J + 1e-4 * eta * gg) {
          th = std::move(cand);
          moved = true;
          break;
        }
        eta *= 0.5;
      }
      if (!moved) break;
      J = f(th, &g);
      eta *= 2.0;
    }
    best = std::max(best, J);
    // The ascent only approaches vertices; also score the greedy rounding of where it ended.
    Eigen::MatrixXd greedy = Eigen::MatrixXd::Constant(th.rows(), th.cols(), -800.0);
    for (Eigen::Index s = 0; s < th.rows(); ++s) {
      Eigen::Index k;
      th.row(s).maxCoeff(&k);
      greedy(s, k) = 0.0;
    }
    consider(greedy);
  }
  return best;
}

namespace {

Eigen::MatrixXd clamp_logits(const Eigen::MatrixXd& probs_i) {
  return logits_of(probs_i).cwiseMax(-30.0);
}

}  // namespace

double best_response_local(const NetworkedGame& game, const PolicyProfile& profile, int i,
                           const BestResponseOptions& opt) {
  if (!dense_enumerable(game) && game.congestion()) {
    CongestionEvaluator ev(game, profile);
    LocalObjective f = [&](const Eigen::MatrixXd& th, Eigen::MatrixXd* g) { return ev.value(i, th, g); };
    return local_ascent(f, clamp_logits(profile.probs[i]), opt);
  }
  const auto mdp = averaged_mdp(game, profile, i);
  const auto si = local_index(game, i);
  const double gamma = game.gamma();
  const Eigen::VectorXd mu = mu_vector(game);
  LocalObjective f = [&](const Eigen::MatrixXd& th, Eigen::MatrixXd* grad) {
    const Eigen::MatrixXd xi = softmax_table(th);
    Eigen::MatrixXd system;
    const AgentSolve sol = solve_agent(mdp, xi, si, gamma, &system);
    const double J = mu.dot(sol.v);
    if (grad) {
      const Eigen::VectorXd d = (1.0 - gamma) * system.transpose().partialPivLu().solve(mu);
      grad->setZero(th.rows(), th.cols());
      for (Eigen::Index s = 0; s < d.size(); ++s)
        for (Eigen::Index a = 0; a < th.cols(); ++a)
          (*grad)(si[s], a) += d(s) * xi(si[s], a) * (sol.qbar(s, a) - sol.v(s));
      *grad /= (1.0 - gamma);
    }
    return J;
  };
  return local_ascent(f, clamp_logits(profile.probs[i]), opt);
}

NashGap ne_gap(const NetworkedGame& game, const PolicyProfile& profile, int i, GapMode mode,
               const BestResponseOptions& opt) {
  NashGap out;
  out.current = objective(game, profile, i);
  out.best = mode == GapMode::Local ? best_response_local(game, profile, i, opt)
                                    : best_response_upper(game, profile, i, opt);
  out.raw = out.best - out.current;
  out.gap = std::max(0.0, out.raw);
  return out;
}

std::vector<NashGap> ne_gaps(const NetworkedGame& game, const PolicyProfile& profile, GapMode mode,
                             const BestResponseOptions& opt) {
  std::vector<NashGap> out;
  if (!dense_enumerable(game) && game.congestion()) {
    CongestionEvaluator ev(game, profile);
    for (int i = 0; i < game.n(); ++i) {
      if (mode == GapMode::Upper)
        throw std::length_error("ne_gaps: upper-bound mode needs a dense-enumerable game");
      LocalObjective f = [&](const Eigen::MatrixXd& th, Eigen::MatrixXd* g) { return ev.value(i, th, g); };
      NashGap g;
      g.current = ev.value_of_profile(i);
      BestResponseOptions o = opt;
      o.seed = splitmix64(opt.seed + static_cast<std::uint64_t>(i));
      g.best = local_ascent(f, clamp_logits(profile.probs[i]), o);
      g.raw = g.best - g.current;
      g.gap = std::max(0.0, g.raw);
      out.push_back(g);
    }
    return out;
  }
  for (int i = 0; i < game.n(); ++i) {
    BestResponseOptions o = opt;
    o.seed = splitmix64(opt.seed + static_cast<std::uint64_t>(i));
    out.push_back(ne_gap(game, profile, i, mode, o));
  }
  return out;
}

double global_ne_gap(const std::vector<NashGap>& gaps) {
  double g = 0.0;
  for (const auto& x : gaps) g = std::max(g, x.gap);
  return g;
}

}  // namespace nmpg
