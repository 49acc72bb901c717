#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmpg/features.hpp"
#include "nmpg/game.hpp"
#include "nmpg/policy.hpp"

namespace nmpg {

/// Joint tables larger than this (|S| x |A| entries) are refused by dense oracles.
inline constexpr std::size_t kOracleGuard = 200'000;
/// Dense oracles also need |S| x |S| transition matrices.
inline constexpr std::size_t kOracleStateGuard = 4096;

bool dense_enumerable(const NetworkedGame& game);
void require_dense(const NetworkedGame& game, const char* what);

/// Global state codes decoded once.
std::vector<std::vector<int>> enumerate_states(const NetworkedGame& game);

/// Kronecker product of per-agent distributions in agent order (agent 0 most significant).
Eigen::VectorXd kron_all(const std::vector<Eigen::VectorXd>& parts);

/// P^xi(s'|s).
Eigen::MatrixXd induced_chain(const NetworkedGame& game, const PolicyProfile& profile);
/// P^xi((s',a')|(s,a)) over joint state-action codes s * |A| + a.
Eigen::MatrixXd induced_state_action_chain(const NetworkedGame& game, const PolicyProfile& profile);

/// Agent i's MDP when everyone else follows the profile: kernel[a_i] is |S| x |S|
/// and reward(s, a_i) = r-bar_i.
struct AveragedMdp {
  std::vector<Eigen::MatrixXd> kernel;
  Eigen::MatrixXd reward;
};
AveragedMdp averaged_mdp(const NetworkedGame& game, const PolicyProfile& profile, int i);

struct ExactSolution {
  Eigen::MatrixXd P;
  std::vector<Eigen::MatrixXd> qbar;      // |S| x |A_i|
  std::vector<Eigen::VectorXd> v;         // |S|
  std::vector<Eigen::MatrixXd> adv_bar;   // qbar - v
  Eigen::VectorXd J;
  Eigen::VectorXd d;                      // discounted visitation from mu
};

ExactSolution solve_exact(const NetworkedGame& game, const PolicyProfile& profile);
/// Full Q_i(s, a) over joint actions, |S| x |A|.
Eigen::MatrixXd q_function(const NetworkedGame& game, const PolicyProfile& profile, int i);
double objective(const NetworkedGame& game, const PolicyProfile& profile, int i);
Eigen::VectorXd objectives(const NetworkedGame& game, const PolicyProfile& profile);
Eigen::VectorXd visitation(const NetworkedGame& game, const PolicyProfile& profile,
                           const Eigen::VectorXd& start);

Eigen::MatrixXd exact_policy_gradient(const NetworkedGame& game, const SoftmaxParams& theta, int i);
Eigen::MatrixXd policy_gradient_from(const NetworkedGame& game, const PolicyProfile& profile,
                                     const ExactSolution& sol, int i);
/// Sum_t gamma^t E[grad log xi_i(a_i(t)|s_i(t)) Q-bar_i(s(t), a_i(t))] summed exactly until the
/// analytic tail drops below `tail_tol`.
Eigen::MatrixXd policy_gradient_trajectory_form(const NetworkedGame& game, const SoftmaxParams& theta,
                                                int i, double tail_tol = 1e-12);

// Best responses and Nash gaps ----------------------------------------------

struct BestResponseOptions {
  int restarts = 5;
  int steps = 300;
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  double tol_vi = 1e-10;
  int max_vi_iterations = 1'000'000;
};

/// Max over policies that observe the global state (an upper bound on the local best response).
double best_response_upper(const NetworkedGame& game, const PolicyProfile& profile, int i,
                           const BestResponseOptions& opt = {});

/// Objective of agent i as a function of its own logits; returns J and writes the gradient.
using LocalObjective = std::function<double(const Eigen::MatrixXd& theta_i, Eigen::MatrixXd* grad)>;

/// Exact-gradient ascent with backtracking from several starts; the first start is
/// `start`, the rest are Gaussian. Returns the best value found.
double local_ascent(const LocalObjective& f, const Eigen::MatrixXd& start,
                    const BestResponseOptions& opt);

double best_response_local(const NetworkedGame& game, const PolicyProfile& profile, int i,
                           const BestResponseOptions& opt = {});

enum class GapMode { Local, Upper };

struct NashGap {
  double gap = 0.0;       // clamped at 0
  double raw = 0.0;       // best - current, unclamped
  double best = 0.0;
  double current = 0.0;
};

NashGap ne_gap(const NetworkedGame& game, const PolicyProfile& profile, int i,
               GapMode mode = GapMode::Local, const BestResponseOptions& opt = {});
std::vector<NashGap> ne_gaps(const NetworkedGame& game, const PolicyProfile& profile,
                             GapMode mode = GapMode::Local, const BestResponseOptions& opt = {});
double global_ne_gap(const std::vector<NashGap>& gaps);

// Structured oracle for congestion games --------------------------------------
// Transitions are completely local and the start state is deterministic, so agents'
// state-action processes are independent; expectations factor per agent.

/// Horizon T with gamma^T * bound / (1 - gamma) <= tol.
int truncation_horizon(double gamma, double bound, double tol);

/// occ[t](s_j): probability that agent j is in local state s_j at time t, t < T.
std::vector<Eigen::VectorXd> local_occupancy(const NetworkedGame& game, int j,
                                             const Eigen::MatrixXd& probs_j, int start, int T);

struct CongestionEvaluator {
  CongestionEvaluator(const NetworkedGame& game, const PolicyProfile& profile, double tol = 1e-10);

  /// J_i when agent i plays softmax(theta_i); gradient in logits if requested.
  double value(int i, const Eigen::MatrixXd& theta_i, Eigen::MatrixXd* grad) const;
  double value_of_profile(int i) const;
  int horizon() const { return T_; }

 private:
  const NetworkedGame& game_;
  const PolicyProfile& profile_;
  int T_;
  // load_[t][e]: expected number of agents traversing edge e at time t.
  std::vector<std::vector<double>> load_;
  // own_[j][t][e]: agent j's contribution to load_.
  std::vector<std::vector<std::vector<double>>> own_;
};

/// Potential Phi^xi(s) = sum_t gamma^t E[phi(s(t), a(t)) | s(0) = s] by per-agent propagation.
double value_potential_congestion(const NetworkedGame& game, const PolicyProfile& profile,
                                  std::span<const int> s, double tail_tol = 1e-9);

// Truncation ------------------------------------------------------------------

/// E_{s_{-N} ~ u}[Q-bar_i(s_N, s_{-N}, a_i)] over (s_N code, a_i). u is over the joint states
/// of the complement of N_i^kappa_c (ascending agents, agent order significance as usual).
Eigen::MatrixXd truncated_q(const NetworkedGame& game, const PolicyProfile& profile, int i,
                            int kappa_c, const Eigen::VectorXd& u);
/// sup over point-mass u of max |truncated - Q-bar|, in the game's native reward units.
double decay_gap(const NetworkedGame& game, const PolicyProfile& profile, int i, int kappa_c);
/// 2 min(gamma^(kappa_c - kappa_r + 1), 1) / (1 - gamma), valid for rewards in [0,1].
double decay_bound(double gamma, int kappa_c, int kappa_r);

// Markov chains -----------------------------------------------------------------

struct ChainStructure {
  bool irreducible = false;
  int period = 0;  // 0 when reducible
};
ChainStructure chain_structure(const Eigen::MatrixXd& P, double tol = 0.0);
/// Unique stationary distribution of an irreducible aperiodic chain by linear solve.
/// Throws std::domain_error for reducible or periodic chains.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P);

/// Chain over z = (s, a_i) with code s * |A_i| + a_i under an (exploring) profile.
struct StateActionChain {
  int agent = 0;
  int num_actions = 0;
  Eigen::MatrixXd P;
  Eigen::VectorXd pi;
  Eigen::VectorXd mu0;
  Eigen::VectorXd r;     // r-bar_i(s, a_i)
  Eigen::VectorXd cost;  // Q-bar_i(s, a_i)
};
StateActionChain build_state_action_chain(const NetworkedGame& game, const PolicyProfile& profile,
                                          int i);

/// Restriction to z_N = (s_{N_i^kappa_c}, a_i); code = codec(s_N) * |A_i| + a_i.
struct SubChain {
  int agent = 0;
  int kappa_c = 0;
  std::vector<int> members;
  MixedRadix state_codec;
  int num_actions = 0;
  Eigen::MatrixXd P;
  Eigen::VectorXd pi;           // stationary distribution of P by linear solve
  Eigen::VectorXd pi_marginal;  // marginal of the full chain's stationary distribution
  Eigen::VectorXd mu0;
  Eigen::VectorXd r;
  Eigen::VectorXd cost;
  std::vector<std::size_t> full_to_sub;  // full z code -> z_N code
};
SubChain build_subchain(const NetworkedGame& game, const StateActionChain& full, int kappa_c);
SubChain build_subchain(const NetworkedGame& game, const PolicyProfile& profile, int i, int kappa_c);

struct SubChainReport {
  bool irreducible = false;
  bool aperiodic = false;
  double stationary_gap = 0.0;     // max |pi - pi_marginal|
  double conditional_gap = 0.0;    // inner-agent local conditionals vs original kernels
  double cost_gap = 0.0;           // sup |C~ - C| in rescaled units
  double cost_bound = 0.0;
  std::size_t worst_state = 0;     // full-chain code attaining cost_gap
  bool passed = false;
  nlohmann::json to_json() const;
};
SubChainReport subchain_checks(const NetworkedGame& game, const PolicyProfile& profile,
                               const SubChain& sub, const StateActionChain& full);

// Projected Bellman fixed point ----------------------------------------------------

struct FixedPoint {
  Eigen::VectorXd w;
  double eps_red = 0.0;       // sup |phi^T w - cost| over the chain
  double residual = 0.0;      // |Omega^T D (R + gamma P Omega w - Omega w)|_inf
  double lambda_min = 0.0;    // smallest eigenvalue of Omega^T D Omega
};
/// w* solving Omega^T D (I - gamma P) Omega w = Omega^T D r with D = diag(pi); eps_red is
/// measured against `cost`.
FixedPoint projected_fixed_point(const Eigen::MatrixXd& Omega, const Eigen::MatrixXd& P,
                                 const Eigen::VectorXd& pi, const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& cost, double gamma);
FixedPoint td0_fixed_point(const NetworkedGame& game, const StateActionChain& chain,
                           const FeatureMap& features);
FixedPoint td0_fixed_point(const NetworkedGame& game, const SubChain& sub, const FeatureMap& features);
/// Omega over the full chain: row z = phi(s_N, a_i).
Eigen::MatrixXd feature_matrix(const NetworkedGame& game, const FeatureMap& features);

// Potentials and diagnostics --------------------------------------------------------

struct NmpgReport {
  double max_violation = 0.0;
  int worst_i = -1;
  int worst_j = -1;
  int samples = 0;
  bool passed = false;
};
NmpgReport nmpg_check(const NetworkedGame& game, const NMPGDescriptor& desc, int samples, Rng& rng,
                      double tol = 1e-8, double theta_scale = 2.0);

struct Diagnostics {
  double D = 0.0;
  std::vector<double> c_theta;
  double pi_min = 0.0;
  double lambda_min = 0.0;
  std::optional<double> eps_critic;
  double eps_app = 0.0;   // upper estimate: sup error of the pi-weighted least-squares fit
  double eps_red = 0.0;
  nlohmann::json to_json() const;
};
Diagnostics diagnostics(const NetworkedGame& game, const SoftmaxParams& theta,
                        const std::vector<FeatureMap>& features, double eps,
                        const std::vector<Eigen::VectorXd>* critic_weights = nullptr);

}  // namespace nmpg
