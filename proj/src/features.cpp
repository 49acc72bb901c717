#include "nmpg/features.hpp"

#include <cmath>
#include <stdexcept>

namespace nmpg {

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "tabular") return FeatureMode::Tabular;
  if (s == "onehot-concat") return FeatureMode::OnehotConcat;
  throw std::invalid_argument("unknown feature mode '" + s + "'");
}

std::string to_string(FeatureMode m) {
  return m == FeatureMode::Tabular ? "tabular" : "onehot-concat";
}

FeatureMap::FeatureMap(const NetworkedGame& game, int agent, int kappa_c, FeatureMode mode)
    : agent_(agent), kappa_c_(kappa_c), mode_(mode) {
  if (kappa_c < game.kappa_r())
    throw std::invalid_argument("make_features: kappa_c must be at least kappa_r");
  members_ = game.graph().khop(agent, kappa_c);
  num_actions_ = game.num_actions(agent);
  std::vector<int> radices;
  for (int j : members_) radices.push_back(game.num_states(j));
  codec_ = MixedRadix(radices);
  if (mode == FeatureMode::Tabular) {
    dim_ = static_cast<int>(codec_.size()) * num_actions_;
    scale_ = 1.0;
  } else {
    int off = 0;
    for (int j : members_) {
      offsets_.push_back(off);
      off += game.num_states(j);
    }
    offsets_.push_back(off);
    dim_ = off + num_actions_;
    scale_ = 1.0 / std::sqrt(static_cast<double>(members_.size() + 1));
  }
}

void FeatureMap::active(std::span<const int> s_N, int a_i, std::vector<int>& idx) const {
  idx.clear();
  if (mode_ == FeatureMode::Tabular) {
    idx.push_back(static_cast<int>(codec_.encode(s_N)) * num_actions_ + a_i);
    return;
  }
  for (std::size_t k = 0; k < members_.size(); ++k) idx.push_back(offsets_[k] + s_N[k]);
  idx.push_back(offsets_.back() + a_i);
}

Eigen::VectorXd FeatureMap::operator()(std::span<const int> s_N, int a_i) const {
  std::vector<int> idx;
  active(s_N, a_i, idx);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(dim_);
  for (int k : idx) phi(k) = scale_;
  return phi;
}

void FeatureMap::project(std::span<const int> s, std::span<int> s_N) const {
  for (std::size_t k = 0; k < members_.size(); ++k) s_N[k] = s[members_[k]];
}

Eigen::VectorXd FeatureMap::from_global(std::span<const int> s, int a_i) const {
  std::vector<int> s_N(members_.size());
  project(s, s_N);
  return (*this)(s_N, a_i);
}

double FeatureMap::dot(std::span<const int> s_N, int a_i, const Eigen::VectorXd& w) const {
  if (w.size() != dim_) throw std::invalid_argument("q_hat: weight dimension mismatch");
  thread_local std::vector<int> idx;
  active(s_N, a_i, idx);
  double acc = 0.0;
  for (int k : idx) acc += w(k);
  return scale_ * acc;
}

FeatureMap make_features(const NetworkedGame& game, int i, int kappa_c, FeatureMode mode) {
  return FeatureMap(game, i, kappa_c, mode);
}

std::vector<FeatureMap> make_all_features(const NetworkedGame& game, int kappa_c, FeatureMode mode) {
  std::vector<FeatureMap> out;
  for (int i = 0; i < game.n(); ++i) out.emplace_back(game, i, kappa_c, mode);
  return out;
}

}  // namespace nmpg
