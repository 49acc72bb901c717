#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nmpg/graph.hpp"
#include "nmpg/mixed_radix.hpp"
#include "nmpg/rng.hpp"

namespace nmpg {

struct PolicyProfile;

/// P_i(s_i' | s_scope, a_i). The scope is a sorted subset of N_i; the table is
/// indexed ((scope code) * |A_i| + a_i) * |S_i| + s_i'.
struct LocalKernel {
  std::vector<int> scope;
  std::vector<double> table;
};

using RewardFn =
    std::function<double(std::span<const int> states, std::span<const int> actions)>;

/// r_i as a function of the states and actions of `scope`, a sorted subset of N_i^{kappa_r}.
/// The function only ever sees those coordinates, in scope order.
struct LocalReward {
  std::vector<int> scope;
  RewardFn fn;
};

/// Reward backed by a dense table indexed by the mixed-radix code of
/// (states of scope..., actions of scope...).
LocalReward table_reward(std::vector<int> scope, std::vector<int> radices,
                         std::vector<double> table);

struct InitialState {
  std::vector<int> state;
  double prob = 1.0;
};

/// Route data kept alongside a congestion game so structured oracles can use it.
struct CongestionLayout {
  struct Route {
    int start = 0;
    int dest = 0;
    std::vector<int> nodes;                     // local state -> traffic node
    std::vector<std::vector<int>> action_edge;  // [local state][action] -> edge id, -1 = stay
    int dest_state = 0;
  };
  std::vector<std::string> node_names;
  std::vector<std::pair<int, int>> edges;  // directed traffic edges (u, v), u != v
  double eps_bar = 0.5;
  std::vector<Route> routes;
};

class NetworkedGame {
 public:
  struct Parts {
    Graph graph;
    std::vector<std::vector<std::string>> state_labels;
    std::vector<std::vector<std::string>> action_labels;
    std::vector<LocalKernel> kernels;
    std::vector<LocalReward> rewards;
    int kappa_r = 0;
    double gamma = 0.9;
    std::vector<InitialState> mu;
    double r_min = 0.0;
    double r_max = 1.0;
    std::optional<CongestionLayout> congestion;
    nlohmann::json source;
  };

  explicit NetworkedGame(Parts parts);

  int n() const { return graph_.size(); }
  const Graph& graph() const { return graph_; }
  int num_states(int i) const { return state_codec_.radices()[i]; }
  int num_actions(int i) const { return action_codec_.radices()[i]; }
  const std::vector<std::string>& state_labels(int i) const { return state_labels_[i]; }
  const std::vector<std::string>& action_labels(int i) const { return action_labels_[i]; }
  const MixedRadix& state_codec() const { return state_codec_; }
  const MixedRadix& action_codec() const { return action_codec_; }
  int kappa_r() const { return kappa_r_; }
  double gamma() const { return gamma_; }
  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  const std::vector<InitialState>& mu() const { return mu_; }
  const LocalKernel& kernel(int i) const { return kernels_[i]; }
  const LocalReward& reward_spec(int i) const { return rewards_[i]; }
  const std::optional<CongestionLayout>& congestion() const { return congestion_; }
  const nlohmann::json& source() const { return source_; }

  /// P_i(. | s_{N_i}, a_i) as a span over S_i.
  std::span<const double> kernel_row(int i, std::span<const int> s, int a_i) const;
  double reward(int i, std::span<const int> s, std::span<const int> a) const;
  void step(std::span<const int> s, std::span<const int> a, Rng& rng, std::span<int> out) const;
  std::vector<int> step(std::span<const int> s, std::span<const int> a, Rng& rng) const;
  std::vector<int> sample_initial(Rng& rng) const;

  /// Exact product distribution over successor codes (nonzero entries only).
  std::vector<std::pair<std::size_t, double>> global_kernel(std::span<const int> s,
                                                            std::span<const int> a) const;

  /// Dense mu over global state codes; subject to the enumeration guard.
  std::vector<double> mu_dense(std::size_t guard = kGlobalKernelGuard) const;

  /// Copy with rewards mapped affinely onto [0,1] via the declared range.
  NetworkedGame rescaled() const;
  /// Copy with a different discount.
  NetworkedGame with_gamma(double gamma) const;

  void validate_state(std::span<const int> s) const;
  void validate_action(std::span<const int> a) const;

  static constexpr std::size_t kGlobalKernelGuard = 1'000'000;

 private:
  Graph graph_;
  std::vector<std::vector<std::string>> state_labels_;
  std::vector<std::vector<std::string>> action_labels_;
  MixedRadix state_codec_;
  MixedRadix action_codec_;
  std::vector<LocalKernel> kernels_;
  std::vector<MixedRadix> kernel_codecs_;
  std::vector<LocalReward> rewards_;
  int kappa_r_ = 0;
  double gamma_ = 0.9;
  std::vector<InitialState> mu_;
  double r_min_ = 0.0;
  double r_max_ = 1.0;
  std::optional<CongestionLayout> congestion_;
  nlohmann::json source_;
};

/// Local potentials Phi_i evaluated on policy profiles.
struct NMPGDescriptor {
  int kappa_G = 0;
  std::vector<std::function<double(const PolicyProfile&)>> local_potentials;
  std::optional<std::pair<double, double>> potential_bounds;
  std::function<double(int)> nu;
};

// Congestion game ----------------------------------------------------------

struct TrafficNet {
  std::vector<std::string> nodes;
  std::vector<std::pair<int, int>> edges;  // directed, u != v; waiting is always allowed

  int node_index(const std::string& name) const;
};

struct AgentRoute {
  int start = 0;
  int dest = 0;
};

/// Nodes reachable from `start` along traffic edges, ascending node index.
std::vector<int> reachable_nodes(const TrafficNet& net, int start);

Graph comm_graph_from_traffic(const TrafficNet& net, const std::vector<AgentRoute>& agents);

NetworkedGame build_congestion_game(const TrafficNet& net, const std::vector<AgentRoute>& agents,
                                    double eps_bar, double gamma);

/// The 8-node, 12-agent traffic instance used in the experiments.
TrafficNet appendix_traffic_net();
std::vector<AgentRoute> appendix_agents(const TrafficNet& net);

/// Exact stage potential: -eps_bar * (agents not at their destination)
/// - sum_e N_e (N_e + 1) / 2, with N_e counting non-waiting traversals.
double stage_potential_congestion(const NetworkedGame& game, std::span<const int> s,
                                  std::span<const int> a);
/// -(1/2) sum_e N_e (N_e - 1). Kept for reference; it does not track wait deviations.
double stage_potential_pairwise(const NetworkedGame& game, std::span<const int> s,
                                std::span<const int> a);
/// Number of agents traversing each traffic edge under (s, a).
std::vector<int> edge_counts(const NetworkedGame& game, std::span<const int> s,
                             std::span<const int> a);

// Chain example ------------------------------------------------------------

/// Four agents on a path. Agent 0 moves to the good state iff it plays a_g,
/// agents 1..3 copy their predecessor, and only agent 3 is rewarded (1 at (s_g, a_g)).
std::pair<NetworkedGame, NMPGDescriptor> build_chain_example(double gamma);

/// Closed-form J of the last chain agent for stationary local policies.
double chain_example_value(double gamma, double xi1_g_given_b, double xi1_g_given_g,
                           double xi4_g_given_g);

// Serialization ------------------------------------------------------------

NetworkedGame game_from_json(const nlohmann::json& spec);

}  // namespace nmpg
