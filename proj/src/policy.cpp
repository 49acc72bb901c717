#include "nmpg/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nmpg {

namespace {
constexpr double kProbFloor = 1e-300;
}

SoftmaxParams SoftmaxParams::zeros(const NetworkedGame& game) {
  SoftmaxParams p;
  for (int i = 0; i < game.n(); ++i)
    p.theta.push_back(Eigen::MatrixXd::Zero(game.num_states(i), game.num_actions(i)));
  return p;
}

SoftmaxParams SoftmaxParams::random_normal(const NetworkedGame& game, double scale, Rng& rng) {
  SoftmaxParams p = zeros(game);
  for (auto& t : p.theta)
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = scale * standard_normal(rng);
  return p;
}

double PolicyProfile::joint_prob(std::span<const int> s, std::span<const int> a) const {
  double p = 1.0;
  for (int i = 0; i < n(); ++i) p *= probs[i](s[i], a[i]);
  return p;
}

void PolicyProfile::validate(double tol) const {
  for (int i = 0; i < n(); ++i)
    for (Eigen::Index r = 0; r < probs[i].rows(); ++r) {
      if ((probs[i].row(r).array() < 0.0).any())
        throw std::invalid_argument("PolicyProfile: negative probability");
      if (std::abs(probs[i].row(r).sum() - 1.0) > tol)
        throw std::invalid_argument("PolicyProfile: row of agent " + std::to_string(i) +
                                    " does not sum to 1");
    }
}

Eigen::VectorXd softmax_probs(const Eigen::MatrixXd& theta_i, int s_i) {
  if (!theta_i.allFinite()) throw std::invalid_argument("softmax_probs: non-finite parameters");
  Eigen::VectorXd z = theta_i.row(s_i).transpose();
  z = (z.array() - z.maxCoeff()).exp();
  return z / z.sum();
}

Eigen::MatrixXd softmax_table(const Eigen::MatrixXd& theta_i) {
  Eigen::MatrixXd out(theta_i.rows(), theta_i.cols());
  for (Eigen::Index s = 0; s < theta_i.rows(); ++s)
    out.row(s) = softmax_probs(theta_i, static_cast<int>(s)).transpose();
  return out;
}

Eigen::MatrixXd log_prob_grad(const Eigen::MatrixXd& theta_i, int s_i, int a_i) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(theta_i.rows(), theta_i.cols());
  g.row(s_i) = -softmax_probs(theta_i, s_i).transpose();
  g(s_i, a_i) += 1.0;
  return g;
}

Eigen::MatrixXd prob_grad(const Eigen::MatrixXd& theta_i, int s_i, int a_i) {
  const double p = softmax_probs(theta_i, s_i)(a_i);
  return p * log_prob_grad(theta_i, s_i, a_i);
}

PolicyProfile softmax_profile(const SoftmaxParams& params) {
  PolicyProfile out;
  out.kind = PolicyKind::Softmax;
  for (const auto& t : params.theta) out.probs.push_back(softmax_table(t));
  return out;
}

PolicyProfile epsilon_explore(const PolicyProfile& profile, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("epsilon_explore: eps outside [0,1]");
  PolicyProfile out;
  out.kind = PolicyKind::EpsilonMixed;
  for (const auto& p : profile.probs)
    out.probs.push_back(((1.0 - eps) * p.array() + eps / static_cast<double>(p.cols())).matrix());
  return out;
}

PolicyProfile uniform_profile(const NetworkedGame& game) {
  return softmax_profile(SoftmaxParams::zeros(game));
}

PolicyProfile deterministic_profile(const NetworkedGame& game,
                                    const std::vector<std::vector<int>>& choice) {
  PolicyProfile out;
  for (int i = 0; i < game.n(); ++i) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(game.num_states(i), game.num_actions(i));
    for (int s = 0; s < game.num_states(i); ++s) p(s, choice.at(i).at(s)) = 1.0;
    out.probs.push_back(std::move(p));
  }
  return out;
}

void sample_action(const PolicyProfile& profile, std::span<const int> s, Rng& rng,
                   std::span<int> out) {
  for (int i = 0; i < profile.n(); ++i) {
    const auto& P = profile.probs[i];
    thread_local std::vector<double> row;
    row.resize(P.cols());
    for (Eigen::Index a = 0; a < P.cols(); ++a) row[a] = P(s[i], a);
    out[i] = sample_categorical(row, rng);
  }
}

std::vector<int> sample_action(const PolicyProfile& profile, std::span<const int> s, Rng& rng) {
  std::vector<int> out(profile.n());
  sample_action(profile, s, rng, out);
  return out;
}

Eigen::MatrixXd logits_of(const Eigen::MatrixXd& probs_i) {
  return probs_i.array().max(kProbFloor).log().matrix();
}

nlohmann::json params_to_json(const NetworkedGame& game, const SoftmaxParams& params) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 0; i < params.n(); ++i) {
    nlohmann::json a;
    a["agent"] = i;
    a["states"] = game.state_labels(i);
    a["actions"] = game.action_labels(i);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index s = 0; s < params.theta[i].rows(); ++s) {
      std::vector<double> r(params.theta[i].cols());
      for (Eigen::Index k = 0; k < params.theta[i].cols(); ++k) r[k] = params.theta[i](s, k);
      rows.push_back(r);
    }
    a["theta"] = rows;
    out.push_back(std::move(a));
  }
  return out;
}

SoftmaxParams params_from_json(const NetworkedGame& game, const nlohmann::json& j) {
  SoftmaxParams p = SoftmaxParams::zeros(game);
  if (!j.is_array() || static_cast<int>(j.size()) != game.n())
    throw std::invalid_argument("policy checkpoint: expected one entry per agent");
  for (const auto& a : j) {
    const int i = a.at("agent").get<int>();
    if (i < 0 || i >= game.n()) throw std::out_of_range("policy checkpoint: bad agent index");
    const auto& rows = a.at("theta");
    if (static_cast<int>(rows.size()) != game.num_states(i))
      throw std::invalid_argument("policy checkpoint: wrong row count");
    for (int s = 0; s < game.num_states(i); ++s) {
      if (static_cast<int>(rows[s].size()) != game.num_actions(i))
        throw std::invalid_argument("policy checkpoint: wrong column count");
      for (int k = 0; k < game.num_actions(i); ++k) p.theta[i](s, k) = rows[s][k].get<double>();
    }
  }
  return p;
}

}  // namespace nmpg
