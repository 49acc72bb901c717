#include <cmath>
#include <stdexcept>

#include "nmpg/oracle.hpp"

namespace nmpg {

int truncation_horizon(double gamma, double bound, double tol) {
  if (bound <= 0.0) return 1;
  // gamma^T bound / (1 - gamma) <= tol
  const double T = std::log(tol * (1.0 - gamma) / bound) / std::log(gamma);
  return std::max(1, static_cast<int>(std::ceil(T)));
}

namespace {

const CongestionLayout& layout_of(const NetworkedGame& game) {
  if (!game.congestion()) throw std::invalid_argument("structured oracle: not a congestion game");
  for (int i = 0; i < game.n(); ++i)
    if (game.kernel(i).scope != std::vector<int>{i})
      throw std::invalid_argument("structured oracle: transitions are not completely local");
  if (game.mu().size() != 1)
    throw std::invalid_argument("structured oracle: initial state must be deterministic");
  return *game.congestion();
}

// Deterministic successor of (s, a) for a completely local 0/1 kernel.
std::vector<std::vector<int>> successors(const NetworkedGame& game, int j) {
  std::vector<std::vector<int>> next(game.num_states(j), std::vector<int>(game.num_actions(j)));
  std::vector<int> s(game.n(), 0);
  for (int x = 0; x < game.num_states(j); ++x) {
    s[j] = x;
    for (int a = 0; a < game.num_actions(j); ++a) {
      auto row = game.kernel_row(j, s, a);
      int k = 0;
      while (row[k] != 1.0) ++k;
      next[x][a] = k;
    }
  }
  return next;
}

}  // namespace

std::vector<Eigen::VectorXd> local_occupancy(const NetworkedGame& game, int j,
                                             const Eigen::MatrixXd& probs_j, int start, int T) {
  const int Sj = game.num_states(j);
  std::vector<Eigen::VectorXd> occ(T, Eigen::VectorXd::Zero(Sj));
  occ[0](start) = 1.0;
  std::vector<int> s(game.n(), 0);
  for (int t = 0; t + 1 < T; ++t)
    for (int x = 0; x < Sj; ++x) {
      if (occ[t](x) == 0.0) continue;
      s[j] = x;
      for (int a = 0; a < game.num_actions(j); ++a) {
        const double p = occ[t](x) * probs_j(x, a);
        if (p == 0.0) continue;
        auto row = game.kernel_row(j, s, a);
        for (int y = 0; y < Sj; ++y) occ[t + 1](y) += p * row[y];
      }
    }
  return occ;
}

namespace {

// own[t][e]: probability that agent j traverses edge e at time t.
std::vector<std::vector<double>> edge_usage(const CongestionLayout& L, int j,
                                            const std::vector<Eigen::VectorXd>& occ,
                                            const Eigen::MatrixXd& probs_j) {
  const auto& route = L.routes[j];
  std::vector<std::vector<double>> use(occ.size(), std::vector<double>(L.edges.size(), 0.0));
  for (std::size_t t = 0; t < occ.size(); ++t)
    for (Eigen::Index x = 0; x < occ[t].size(); ++x) {
      if (occ[t](x) == 0.0 || x == route.dest_state) continue;
      for (Eigen::Index a = 0; a < probs_j.cols(); ++a) {
        const int e = route.action_edge[x][a];
        if (e >= 0) use[t][e] += occ[t](x) * probs_j(x, a);
      }
    }
  return use;
}

}  // namespace

CongestionEvaluator::CongestionEvaluator(const NetworkedGame& game, const PolicyProfile& profile,
                                         double tol)
    : game_(game), profile_(profile) {
  const auto& L = layout_of(game);
  const double bound = std::max(std::abs(game.r_min()), std::abs(game.r_max()));
  T_ = truncation_horizon(game.gamma(), bound, tol);
  const auto& init = game.mu().front().state;
  load_.assign(T_, std::vector<double>(L.edges.size(), 0.0));
  for (int j = 0; j < game.n(); ++j) {
    auto occ = local_occupancy(game, j, profile.probs[j], init[j], T_);
    own_.push_back(edge_usage(L, j, occ, profile.probs[j]));
    for (int t = 0; t < T_; ++t)
      for (std::size_t e = 0; e < L.edges.size(); ++e) load_[t][e] += own_[j][t][e];
  }
}

double CongestionEvaluator::value(int i, const Eigen::MatrixXd& theta_i, Eigen::MatrixXd* grad) const {
  const auto& L = *game_.congestion();
  const auto& route = L.routes[i];
  const int Si = game_.num_states(i), Ai = game_.num_actions(i);
  const Eigen::MatrixXd xi = softmax_table(theta_i);
  const auto next = successors(game_, i);
  const double gamma = game_.gamma();
  const int start = game_.mu().front().state[i];

  // Expected stage reward of (t, s, a) given everyone else's marginals.
  auto cost = [&](int t, int s, int a) {
    if (s == route.dest_state) return 0.0;
    const int e = route.action_edge[s][a];
    if (e < 0) return -L.eps_bar;
    return -L.eps_bar - 1.0 - (load_[t][e] - own_[i][t][e]);
  };

  std::vector<Eigen::VectorXd> occ(T_, Eigen::VectorXd::Zero(Si));
  occ[0](start) = 1.0;
  double J = 0.0, disc = 1.0;
  for (int t = 0; t < T_; ++t, disc *= gamma)
    for (int s = 0; s < Si; ++s) {
      if (occ[t](s) == 0.0) continue;
      for (int a = 0; a < Ai; ++a) {
        const double p = occ[t](s) * xi(s, a);
        J += disc * p * cost(t, s, a);
        if (t + 1 < T_) occ[t + 1](next[s][a]) += p;
      }
    }
  if (!grad) return J;

  // Adjoint pass: lam(s) is the discounted reward-to-go from (t, s).
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(Si, Ai);
  Eigen::VectorXd lam_next = Eigen::VectorXd::Zero(Si), lam(Si);
  std::vector<double> discs(T_);
  discs[0] = 1.0;
  for (int t = 1; t < T_; ++t) discs[t] = discs[t - 1] * gamma;
  for (int t = T_ - 1; t >= 0; --t) {
    for (int s = 0; s < Si; ++s) {
      double v = 0.0;
      for (int a = 0; a < Ai; ++a) {
        const double qa = discs[t] * cost(t, s, a) + (t + 1 < T_ ? lam_next(next[s][a]) : 0.0);
        v += xi(s, a) * qa;
        g(s, a) += occ[t](s) * qa;
      }
      lam(s) = v;
    }
    std::swap(lam, lam_next);
  }
  grad->resize(Si, Ai);
  for (int s = 0; s < Si; ++s) {
    const double mean = xi.row(s).dot(g.row(s));
    for (int a = 0; a < Ai; ++a) (*grad)(s, a) = xi(s, a) * (g(s, a) - mean);
  }
  return J;
}

double CongestionEvaluator::value_of_profile(int i) const {
  return value(i, logits_of(profile_.probs[i]), nullptr);
}

double value_potential_congestion(const NetworkedGame& game, const PolicyProfile& profile,
                                  std::span<const int> s, double tail_tol) {
  const auto& L = layout_of(game);
  game.validate_state(s);
  const int n = game.n();
  const double phi_max = n * L.eps_bar + 0.5 * n * (n + 1);
  const int T = truncation_horizon(game.gamma(), phi_max, tail_tol);
  std::vector<std::vector<Eigen::VectorXd>> occ(n);
  std::vector<std::vector<std::vector<double>>> use(n);
  for (int j = 0; j < n; ++j) {
    occ[j] = local_occupancy(game, j, profile.probs[j], s[j], T);
    use[j] = edge_usage(L, j, occ[j], profile.probs[j]);
  }
  double Phi = 0.0, disc = 1.0;
  for (int t = 0; t < T; ++t, disc *= game.gamma()) {
    double e_phi = 0.0;
    for (int j = 0; j < n; ++j) e_phi -= L.eps_bar * (1.0 - occ[j][t](L.routes[j].dest_state));
    // E[N(N+1)/2] = sum_j p_j + sum_{j<k} p_j p_k for independent indicators.
    for (std::size_t e = 0; e < L.edges.size(); ++e) {
      double sum = 0.0, sq = 0.0;
      for (int j = 0; j < n; ++j) {
        sum += use[j][t][e];
        sq += use[j][t][e] * use[j][t][e];
      }
      e_phi -= sum + 0.5 * (sum * sum - sq);
    }
    Phi += disc * e_phi;
  }
  return Phi;
}

}  // namespace nmpg
