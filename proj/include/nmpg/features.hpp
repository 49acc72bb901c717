#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "nmpg/game.hpp"

namespace nmpg {

enum class FeatureMode { Tabular, OnehotConcat };

FeatureMode feature_mode_from_string(const std::string& s);
std::string to_string(FeatureMode m);

/// phi_i(s_{N_i^kappa_c}, a_i). Inputs list the local states of `members()` in
/// ascending agent order. Every feature vector has unit norm.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(const NetworkedGame& game, int agent, int kappa_c, FeatureMode mode);

  int agent() const { return agent_; }
  int kappa_c() const { return kappa_c_; }
  FeatureMode mode() const { return mode_; }
  int dim() const { return dim_; }
  int num_actions() const { return num_actions_; }
  const std::vector<int>& members() const { return members_; }
  const MixedRadix& local_codec() const { return codec_; }
  double scale() const { return scale_; }

  /// Indices of the nonzero coordinates; each carries the value scale().
  void active(std::span<const int> s_N, int a_i, std::vector<int>& idx) const;
  Eigen::VectorXd operator()(std::span<const int> s_N, int a_i) const;
  Eigen::VectorXd from_global(std::span<const int> s, int a_i) const;
  double dot(std::span<const int> s_N, int a_i, const Eigen::VectorXd& w) const;
  /// Extracts s_N from a global state.
  void project(std::span<const int> s, std::span<int> s_N) const;

 private:
  int agent_ = 0;
  int kappa_c_ = 0;
  FeatureMode mode_ = FeatureMode::Tabular;
  std::vector<int> members_;
  std::vector<int> offsets_;
  MixedRadix codec_;
  int num_actions_ = 0;
  int dim_ = 0;
  double scale_ = 1.0;
};

FeatureMap make_features(const NetworkedGame& game, int i, int kappa_c, FeatureMode mode);
std::vector<FeatureMap> make_all_features(const NetworkedGame& game, int kappa_c, FeatureMode mode);

}  // namespace nmpg
