#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "json.hpp"
#include "nmpg/game.hpp"
#include "nmpg/rng.hpp"

namespace nmpg {

/// theta[i] is |S_i| x |A_i|.
struct SoftmaxParams {
  std::vector<Eigen::MatrixXd> theta;

  static SoftmaxParams zeros(const NetworkedGame& game);
  static SoftmaxParams random_normal(const NetworkedGame& game, double scale, Rng& rng);
  int n() const { return static_cast<int>(theta.size()); }
};

enum class PolicyKind { Softmax, Explicit, EpsilonMixed };

/// probs[i](s_i, a_i) = xi_i(a_i | s_i).
struct PolicyProfile {
  std::vector<Eigen::MatrixXd> probs;
  PolicyKind kind = PolicyKind::Explicit;

  int n() const { return static_cast<int>(probs.size()); }
  double prob(int i, int s_i, int a_i) const { return probs[i](s_i, a_i); }
  /// xi(a|s) = prod_i xi_i(a_i|s_i).
  double joint_prob(std::span<const int> s, std::span<const int> a) const;
  void validate(double tol = 1e-12) const;
};

Eigen::VectorXd softmax_probs(const Eigen::MatrixXd& theta_i, int s_i);
/// d log xi_i(a_i|s_i) / d theta_i, a |S_i| x |A_i| table.
Eigen::MatrixXd log_prob_grad(const Eigen::MatrixXd& theta_i, int s_i, int a_i);
/// d xi_i(a_i|s_i) / d theta_i.
Eigen::MatrixXd prob_grad(const Eigen::MatrixXd& theta_i, int s_i, int a_i);

Eigen::MatrixXd softmax_table(const Eigen::MatrixXd& theta_i);
PolicyProfile softmax_profile(const SoftmaxParams& params);
PolicyProfile epsilon_explore(const PolicyProfile& profile, double eps);
PolicyProfile uniform_profile(const NetworkedGame& game);
/// Deterministic local policy: agent i plays choice[i][s_i].
PolicyProfile deterministic_profile(const NetworkedGame& game,
                                    const std::vector<std::vector<int>>& choice);

void sample_action(const PolicyProfile& profile, std::span<const int> s, Rng& rng,
                   std::span<int> out);
std::vector<int> sample_action(const PolicyProfile& profile, std::span<const int> s, Rng& rng);

/// Log-parameters of an explicit local policy (probabilities floored at 1e-300).
Eigen::MatrixXd logits_of(const Eigen::MatrixXd& probs_i);

nlohmann::json params_to_json(const NetworkedGame& game, const SoftmaxParams& params);
SoftmaxParams params_from_json(const NetworkedGame& game, const nlohmann::json& j);

}  // namespace nmpg
