#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "nmpg/oracle.hpp"

namespace nmpg {

namespace {

// Splits every global code into (code over `inside`, code over the rest), both ascending.
struct Split {
  MixedRadix in_codec, out_codec;
  std::vector<std::size_t> in_code, out_code;
};

Split split_states(const NetworkedGame& game, const std::vector<int>& inside) {
  std::vector<char> is_in(game.n(), 0);
  for (int j : inside) is_in[j] = 1;
  std::vector<int> rin, rout;
  for (int j = 0; j < game.n(); ++j) (is_in[j] ? rin : rout).push_back(game.num_states(j));
  Split sp{MixedRadix(rin), MixedRadix(rout), {}, {}};
  const auto& codec = game.state_codec();
  std::vector<int> s(game.n()), xin, xout;
  for (std::size_t c = 0; c < codec.size(); ++c) {
    codec.decode(c, s);
    xin.clear();
    xout.clear();
    for (int j = 0; j < game.n(); ++j) (is_in[j] ? xin : xout).push_back(s[j]);
    sp.in_code.push_back(sp.in_codec.encode(xin));
    sp.out_code.push_back(sp.out_codec.encode(xout));
  }
  return sp;
}

}  // namespace

Eigen::MatrixXd truncated_q(const NetworkedGame& game, const PolicyProfile& profile, int i,
                            int kappa_c, const Eigen::VectorXd& u) {
  const auto sol = solve_exact(game, profile);
  const auto sp = split_states(game, game.graph().khop(i, kappa_c));
  if (u.size() != static_cast<Eigen::Index>(sp.out_codec.size()))
    throw std::invalid_argument("truncated_q: u has wrong size");
  if ((u.array() < 0.0).any() || std::abs(u.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("truncated_q: u is not a distribution");
  const Eigen::MatrixXd& Q = sol.qbar[i];
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sp.in_codec.size()), Q.cols());
  for (Eigen::Index s = 0; s < Q.rows(); ++s)
    out.row(static_cast<Eigen::Index>(sp.in_code[s])) += u(static_cast<Eigen::Index>(sp.out_code[s])) * Q.row(s);
  return out;
}

double decay_gap(const NetworkedGame& game, const PolicyProfile& profile, int i, int kappa_c) {
  const auto sol = solve_exact(game, profile);
  const auto sp = split_states(game, game.graph().khop(i, kappa_c));
  const Eigen::MatrixXd& Q = sol.qbar[i];
  const Eigen::Index rows = static_cast<Eigen::Index>(sp.in_codec.size());
  Eigen::MatrixXd hi = Eigen::MatrixXd::Constant(rows, Q.cols(), -INFINITY);
  Eigen::MatrixXd lo = Eigen::MatrixXd::Constant(rows, Q.cols(), INFINITY);
  for (Eigen::Index s = 0; s < Q.rows(); ++s) {
    const auto r = static_cast<Eigen::Index>(sp.in_code[s]);
    hi.row(r) = hi.row(r).cwiseMax(Q.row(s));
    lo.row(r) = lo.row(r).cwiseMin(Q.row(s));
  }
  // With u a point mass at one completion, the worst comparison is against the opposite extreme.
  return (hi - lo).maxCoeff();
}

double decay_bound(double gamma, int kappa_c, int kappa_r) {
  return 2.0 * std::min(std::pow(gamma, kappa_c - kappa_r + 1), 1.0) / (1.0 - gamma);
}

ChainStructure chain_structure(const Eigen::MatrixXd& P, double tol) {
  const Eigen::Index N = P.rows();
  auto reach = [&](bool forward) {
    std::vector<char> seen(N, 0);
    std::queue<Eigen::Index> q;
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (Eigen::Index v = 0; v < N; ++v) {
        const double p = forward ? P(u, v) : P(v, u);
        if (p > tol && !seen[v]) {
          seen[v] = 1;
          q.push(v);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  ChainStructure out;
  out.irreducible = N > 0 && reach(true) && reach(false);
  if (!out.irreducible) return out;
  std::vector<long> level(N, -1);
  std::queue<Eigen::Index> q;
  level[0] = 0;
  q.push(0);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (Eigen::Index v = 0; v < N; ++v)
      if (P(u, v) > tol && level[v] < 0) {
        level[v] = level[u] + 1;
        q.push(v);
      }
  }
  long g = 0;
  for (Eigen::Index u = 0; u < N; ++u)
    for (Eigen::Index v = 0; v < N; ++v)
      if (P(u, v) > tol) g = std::gcd(g, std::labs(level[u] + 1 - level[v]));
  out.period = static_cast<int>(g);
  return out;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  const auto st = chain_structure(P);
  if (!st.irreducible) throw std::domain_error("stationary_distribution: chain is reducible");
  if (st.period != 1)
    throw std::domain_error("stationary_distribution: chain has period " + std::to_string(st.period));
  const Eigen::Index N = P.rows();
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(N, N);
  A.row(N - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(N);
  b(N - 1) = 1.0;
  Eigen::VectorXd pi = A.fullPivLu().solve(b);
  const double resid = (P.transpose() * pi - pi).cwiseAbs().maxCoeff();
  if (!(resid <= 1e-10)) throw std::runtime_error("stationary_distribution: residual too large");
  return pi;
}

StateActionChain build_state_action_chain(const NetworkedGame& game, const PolicyProfile& profile,
                                          int i) {
  const auto mdp = averaged_mdp(game, profile, i);
  const auto states = enumerate_states(game);
  const Eigen::Index S = static_cast<Eigen::Index>(states.size());
  const int A = game.num_actions(i);
  StateActionChain ch;
  ch.agent = i;
  ch.num_actions = A;
  ch.P = Eigen::MatrixXd::Zero(S * A, S * A);
  ch.r.resize(S * A);
  ch.mu0 = Eigen::VectorXd::Zero(S * A);
  const auto mu = game.mu_dense(kOracleStateGuard);
  for (Eigen::Index s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const Eigen::Index z = s * A + a;
      ch.r(z) = mdp.reward(s, a);
      ch.mu0(z) = mu[s] * profile.probs[i](states[s][i], a);
      for (Eigen::Index t = 0; t < S; ++t) {
        const double p = mdp.kernel[a](s, t);
        if (p == 0.0) continue;
        for (int b = 0; b < A; ++b) ch.P(z, t * A + b) = p * profile.probs[i](states[t][i], b);
      }
    }
  const Eigen::Index N = S * A;
  ch.cost = (Eigen::MatrixXd::Identity(N, N) - game.gamma() * ch.P).partialPivLu().solve(ch.r);
  ch.pi = stationary_distribution(ch.P);
  return ch;
}

SubChain build_subchain(const NetworkedGame& game, const StateActionChain& full, int kappa_c) {
  const int i = full.agent;
  if (kappa_c < game.kappa_r())
    throw std::invalid_argument("build_subchain: kappa_c must be at least kappa_r");
  SubChain sub;
  sub.agent = i;
  sub.kappa_c = kappa_c;
  sub.members = game.graph().khop(i, kappa_c);
  const auto sp = split_states(game, sub.members);
  sub.state_codec = sp.in_codec;
  sub.num_actions = full.num_actions;
  const int A = full.num_actions;
  const Eigen::Index Nz = static_cast<Eigen::Index>(sp.in_codec.size()) * A;
  const Eigen::Index Fz = full.P.rows();
  sub.full_to_sub.resize(Fz);
  for (Eigen::Index z = 0; z < Fz; ++z)
    sub.full_to_sub[z] = sp.in_code[z / A] * A + static_cast<std::size_t>(z % A);

  sub.pi_marginal = Eigen::VectorXd::Zero(Nz);
  sub.mu0 = Eigen::VectorXd::Zero(Nz);
  sub.r = Eigen::VectorXd::Zero(Nz);
  for (Eigen::Index z = 0; z < Fz; ++z) {
    const auto k = static_cast<Eigen::Index>(sub.full_to_sub[z]);
    sub.pi_marginal(k) += full.pi(z);
    sub.mu0(k) += full.mu0(z);
    sub.r(k) += full.pi(z) * full.r(z);
  }
  if ((sub.pi_marginal.array() <= 0.0).any())
    throw std::domain_error("build_subchain: restricted state with zero stationary mass");
  sub.r = sub.r.cwiseQuotient(sub.pi_marginal);

  sub.P = Eigen::MatrixXd::Zero(Nz, Nz);
  for (Eigen::Index z = 0; z < Fz; ++z) {
    const auto k = static_cast<Eigen::Index>(sub.full_to_sub[z]);
    const double w = full.pi(z) / sub.pi_marginal(k);
    for (Eigen::Index y = 0; y < Fz; ++y) {
      const double p = full.P(z, y);
      if (p != 0.0) sub.P(k, static_cast<Eigen::Index>(sub.full_to_sub[y])) += w * p;
    }
  }
  sub.cost = (Eigen::MatrixXd::Identity(Nz, Nz) - game.gamma() * sub.P).partialPivLu().solve(sub.r);
  sub.pi = stationary_distribution(sub.P);
  return sub;
}

SubChain build_subchain(const NetworkedGame& game, const PolicyProfile& profile, int i, int kappa_c) {
  return build_subchain(game, build_state_action_chain(game, profile, i), kappa_c);
}

nlohmann::json SubChainReport::to_json() const {
  return {{"irreducible", irreducible},       {"aperiodic", aperiodic},
          {"stationary_gap", stationary_gap}, {"conditional_gap", conditional_gap},
          {"cost_gap", cost_gap},             {"cost_bound", cost_bound},
          {"worst_state", worst_state},       {"passed", passed}};
}

SubChainReport subchain_checks(const NetworkedGame& game, const PolicyProfile& profile,
                               const SubChain& sub, const StateActionChain& full) {
  SubChainReport rep;
  const auto st = chain_structure(sub.P);
  rep.irreducible = st.irreducible;
  rep.aperiodic = st.period == 1;
  rep.stationary_gap = (sub.pi - sub.pi_marginal).cwiseAbs().maxCoeff();

  const int i = sub.agent;
  const int A = sub.num_actions;
  const auto& members = sub.members;
  auto pos = [&](int j) {
    return static_cast<int>(std::find(members.begin(), members.end(), j) - members.begin());
  };
  std::vector<int> inner = sub.kappa_c >= 1 ? game.graph().khop(i, sub.kappa_c - 1) : std::vector<int>{};
  std::vector<int> s_N(members.size()), t_N(members.size()), s(game.n(), 0);
  const Eigen::Index Nz = sub.P.rows();
  for (Eigen::Index z = 0; z < Nz; ++z) {
    sub.state_codec.decode(static_cast<std::size_t>(z / A), s_N);
    const int a_i = static_cast<int>(z % A);
    std::fill(s.begin(), s.end(), 0);
    for (std::size_t k = 0; k < members.size(); ++k) s[members[k]] = s_N[k];
    for (int j : inner) {
      const int pj = pos(j);
      if (j == i) {
        // Coordinate (s_i, a_i): xi_i(a'|s_i') P_i(s_i'|s, a_i).
        Eigen::MatrixXd marg = Eigen::MatrixXd::Zero(game.num_states(i), A);
        for (Eigen::Index y = 0; y < Nz; ++y) {
          sub.state_codec.decode(static_cast<std::size_t>(y / A), t_N);
          marg(t_N[pj], y % A) += sub.P(z, y);
        }
        auto row = game.kernel_row(i, s, a_i);
        for (int x = 0; x < game.num_states(i); ++x)
          for (int b = 0; b < A; ++b)
            rep.conditional_gap =
                std::max(rep.conditional_gap, std::abs(marg(x, b) - profile.probs[i](x, b) * row[x]));
      } else {
        Eigen::VectorXd marg = Eigen::VectorXd::Zero(game.num_states(j));
        for (Eigen::Index y = 0; y < Nz; ++y) {
          sub.state_codec.decode(static_cast<std::size_t>(y / A), t_N);
          marg(t_N[pj]) += sub.P(z, y);
        }
        Eigen::VectorXd target = Eigen::VectorXd::Zero(game.num_states(j));
        for (int b = 0; b < game.num_actions(j); ++b) {
          auto row = game.kernel_row(j, s, b);
          for (int x = 0; x < game.num_states(j); ++x) target(x) += profile.probs[j](s[j], b) * row[x];
        }
        rep.conditional_gap = std::max(rep.conditional_gap, (marg - target).cwiseAbs().maxCoeff());
      }
    }
  }

  const double width = game.r_max() - game.r_min();
  const double scale = width > 0.0 ? 1.0 / width : 1.0;
  for (Eigen::Index z = 0; z < full.P.rows(); ++z) {
    // Affine rescaling shifts both costs by the same constant, so only the width matters.
    const double gap = scale * std::abs(sub.cost(static_cast<Eigen::Index>(sub.full_to_sub[z])) - full.cost(z));
    if (gap > rep.cost_gap) {
      rep.cost_gap = gap;
      rep.worst_state = static_cast<std::size_t>(z);
    }
  }
  rep.cost_bound = std::pow(game.gamma(), sub.kappa_c - game.kappa_r() + 1) / (1.0 - game.gamma());
  rep.passed = rep.irreducible && rep.aperiodic && rep.stationary_gap <= 1e-8 &&
               rep.conditional_gap <= 1e-12 && rep.cost_gap <= rep.cost_bound;
  return rep;
}

Eigen::MatrixXd feature_matrix(const NetworkedGame& game, const FeatureMap& features) {
  const auto states = enumerate_states(game);
  const int A = features.num_actions();
  Eigen::MatrixXd Om(static_cast<Eigen::Index>(states.size()) * A, features.dim());
  for (std::size_t s = 0; s < states.size(); ++s)
    for (int a = 0; a < A; ++a)
      Om.row(static_cast<Eigen::Index>(s) * A + a) = features.from_global(states[s], a).transpose();
  return Om;
}

FixedPoint projected_fixed_point(const Eigen::MatrixXd& Om, const Eigen::MatrixXd& P, const Eigen::VectorXd& pi,
                           const Eigen::VectorXd& r, const Eigen::VectorXd& cost, double gamma) {
  Eigen::FullPivLU<Eigen::MatrixXd> rank(Om);
  if (rank.rank() < Om.cols())
    throw std::invalid_argument("projected fixed point: feature matrix has dependent columns");
  const Eigen::MatrixXd DOm = pi.asDiagonal() * Om;
  const Eigen::MatrixXd A = DOm.transpose() * (Om - gamma * (P * Om));
  const Eigen::VectorXd b = DOm.transpose() * r;
  FixedPoint fp;
  fp.w = A.fullPivLu().solve(b);
  const Eigen::VectorXd fit = Om * fp.w;
  fp.eps_red = (fit - cost).cwiseAbs().maxCoeff();
  fp.residual = (DOm.transpose() * (r + gamma * (P * fit) - fit)).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Om.transpose() * DOm);
  fp.lambda_min = eig.eigenvalues().minCoeff();
  return fp;
}

FixedPoint td0_fixed_point(const NetworkedGame& game, const StateActionChain& chain,
                           const FeatureMap& features) {
  if (features.agent() != chain.agent) throw std::invalid_argument("td0_fixed_point: agent mismatch");
  return projected_fixed_point(feature_matrix(game, features), chain.P, chain.pi, chain.r, chain.cost,
                         game.gamma());
}

FixedPoint td0_fixed_point(const NetworkedGame& game, const SubChain& sub, const FeatureMap& features) {
  if (features.members() != sub.members)
    throw std::invalid_argument("td0_fixed_point: feature neighborhood differs from the sub-chain");
  const int A = sub.num_actions;
  Eigen::MatrixXd Om(sub.P.rows(), features.dim());
  std::vector<int> s_N(sub.members.size());
  for (Eigen::Index z = 0; z < sub.P.rows(); ++z) {
    sub.state_codec.decode(static_cast<std::size_t>(z / A), s_N);
    Om.row(z) = features(s_N, static_cast<int>(z % A)).transpose();
  }
  return projected_fixed_point(Om, sub.P, sub.pi, sub.r, sub.cost, game.gamma());
}

NmpgReport nmpg_check(const NetworkedGame& game, const NMPGDescriptor& desc, int samples, Rng& rng,
                      double tol, double theta_scale) {
  if (static_cast<int>(desc.local_potentials.size()) != game.n())
    throw std::invalid_argument("nmpg_check: need one local potential per agent");
  NmpgReport rep;
  for (int k = 0; k < samples; ++k) {
    const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(game.n()));
    const auto hood = game.graph().khop(i, desc.kappa_G);
    const int j = hood[rng() % hood.size()];
    SoftmaxParams th = SoftmaxParams::random_normal(game, theta_scale, rng);
    SoftmaxParams th2 = th;
    SoftmaxParams fresh = SoftmaxParams::random_normal(game, theta_scale, rng);
    th2.theta[j] = fresh.theta[j];
    const auto p1 = softmax_profile(th), p2 = softmax_profile(th2);
    const double dJ = objective(game, p2, j) - objective(game, p1, j);
    const double dPhi = desc.local_potentials[i](p2) - desc.local_potentials[i](p1);
    const double v = std::abs(dJ - dPhi);
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.worst_i = i;
      rep.worst_j = j;
    }
    ++rep.samples;
  }
  rep.passed = rep.max_violation <= tol;
  return rep;
}

nlohmann::json Diagnostics::to_json() const {
  nlohmann::json j{{"D", D},           {"c_theta", c_theta}, {"pi_min", pi_min},
                   {"lambda_min", lambda_min}, {"eps_app", eps_app}, {"eps_red", eps_red}};
  j["eps_critic"] = eps_critic ? nlohmann::json(*eps_critic) : nlohmann::json();
  return j;
}

Diagnostics diagnostics(const NetworkedGame& game, const SoftmaxParams& theta,
                        const std::vector<FeatureMap>& features, double eps,
                        const std::vector<Eigen::VectorXd>* critic_weights) {
  if (static_cast<int>(features.size()) != game.n())
    throw std::invalid_argument("diagnostics: need one feature map per agent");
  const auto profile = softmax_profile(theta);
  const auto sol = solve_exact(game, profile);
  const auto states = enumerate_states(game);
  Diagnostics out;
  out.D = 1.0 / sol.d.minCoeff();
  for (int i = 0; i < game.n(); ++i) {
    double c = INFINITY;
    for (std::size_t s = 0; s < states.size(); ++s) {
      const auto q = sol.qbar[i].row(static_cast<Eigen::Index>(s));
      const double top = q.maxCoeff();
      double mass = 0.0;
      for (Eigen::Index a = 0; a < q.size(); ++a)
        if (q(a) >= top - 1e-9) mass += profile.probs[i](states[s][i], a);
      c = std::min(c, mass);
    }
    out.c_theta.push_back(c);
  }
  const auto mixed = epsilon_explore(profile, eps);
  out.pi_min = INFINITY;
  out.lambda_min = INFINITY;
  for (int i = 0; i < game.n(); ++i) {
    const auto full = build_state_action_chain(game, mixed, i);
    const auto sub = build_subchain(game, full, features[i].kappa_c());
    out.pi_min = std::min(out.pi_min, sub.pi_marginal.minCoeff());
    const auto fp = td0_fixed_point(game, sub, features[i]);
    out.lambda_min = std::min(out.lambda_min, fp.lambda_min);
    out.eps_red = std::max(out.eps_red, fp.eps_red);
    // Least-squares fit of the sub-chain cost under the stationary weights.
    const int A = sub.num_actions;
    Eigen::MatrixXd Om(sub.P.rows(), features[i].dim());
    std::vector<int> s_N(sub.members.size());
    for (Eigen::Index z = 0; z < sub.P.rows(); ++z) {
      sub.state_codec.decode(static_cast<std::size_t>(z / A), s_N);
      Om.row(z) = features[i](s_N, static_cast<int>(z % A)).transpose();
    }
    const Eigen::VectorXd sw = sub.pi_marginal.cwiseSqrt();
    const Eigen::VectorXd w = (sw.asDiagonal() * Om).colPivHouseholderQr().solve(sw.cwiseProduct(sub.cost));
    out.eps_app = std::max(out.eps_app, (Om * w - sub.cost).cwiseAbs().maxCoeff());
  }
  if (critic_weights) {
    double e = 0.0;
    for (int i = 0; i < game.n(); ++i)
      for (std::size_t s = 0; s < states.size(); ++s)
        for (int a = 0; a < game.num_actions(i); ++a) {
          const double qh = features[i].from_global(states[s], a).dot((*critic_weights)[i]);
          e = std::max(e, std::abs(qh - sol.qbar[i](static_cast<Eigen::Index>(s), a)));
        }
    out.eps_critic = e;
  }
  return out;
}

}  // namespace nmpg
