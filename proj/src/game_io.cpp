#include <set>
#include <stdexcept>

#include "nmpg/game.hpp"

namespace nmpg {

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
}

NetworkedGame explicit_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"type", "graph", "states", "actions", "kernels", "rewards", "kappa_r", "gamma",
                  "mu", "reward_range"},
                 "explicit game");
  NetworkedGame::Parts p;
  const auto& g = j.at("graph");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : g.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  p.graph = Graph(g.at("n").get<int>(), std::move(edges));
  p.state_labels = j.at("states").get<std::vector<std::vector<std::string>>>();
  p.action_labels = j.at("actions").get<std::vector<std::vector<std::string>>>();
  p.kappa_r = j.at("kappa_r").get<int>();
  p.gamma = j.at("gamma").get<double>();
  const int n = p.graph.size();
  if (static_cast<int>(p.state_labels.size()) != n || static_cast<int>(p.action_labels.size()) != n)
    throw std::invalid_argument("explicit game: label arrays must have one entry per agent");
  for (const auto& k : j.at("kernels"))
    p.kernels.push_back({k.at("scope").get<std::vector<int>>(), k.at("table").get<std::vector<double>>()});
  for (const auto& r : j.at("rewards")) {
    auto scope = r.at("scope").get<std::vector<int>>();
    std::vector<int> radices;
    for (int a : scope) radices.push_back(static_cast<int>(p.state_labels.at(a).size()));
    for (int a : scope) radices.push_back(static_cast<int>(p.action_labels.at(a).size()));
    p.rewards.push_back(table_reward(scope, radices, r.at("table").get<std::vector<double>>()));
  }
  for (const auto& m : j.at("mu"))
    p.mu.push_back({m.at("state").get<std::vector<int>>(), m.at("p").get<double>()});
  auto range = j.at("reward_range").get<std::vector<double>>();
  if (range.size() != 2) throw std::invalid_argument("explicit game: reward_range needs 2 values");
  p.r_min = range[0];
  p.r_max = range[1];
  p.source = j;
  return NetworkedGame(std::move(p));
}

}  // namespace

NetworkedGame game_from_json(const nlohmann::json& spec) {
  const std::string type = spec.at("type").get<std::string>();
  if (type == "chain") {
    reject_unknown(spec, {"type", "gamma"}, "chain game");
    return build_chain_example(spec.at("gamma").get<double>()).first;
  }
  if (type == "congestion") {
    reject_unknown(spec, {"type", "traffic_net", "agents", "eps_bar", "gamma", "preset"},
                   "congestion game");
    TrafficNet net;
    std::vector<AgentRoute> agents;
    if (spec.contains("preset")) {
      if (spec.at("preset").get<std::string>() != "appendix")
        throw std::invalid_argument("congestion game: unknown preset");
      net = appendix_traffic_net();
      agents = appendix_agents(net);
    } else {
      const auto& t = spec.at("traffic_net");
      net.nodes = t.at("nodes").get<std::vector<std::string>>();
      for (const auto& e : t.at("edges"))
        net.edges.emplace_back(net.node_index(e.at(0).get<std::string>()),
                               net.node_index(e.at(1).get<std::string>()));
      for (const auto& a : spec.at("agents"))
        agents.push_back({net.node_index(a.at("start").get<std::string>()),
                          net.node_index(a.at("dest").get<std::string>())});
    }
    return build_congestion_game(net, agents, spec.value("eps_bar", 0.5),
                                 spec.at("gamma").get<double>());
  }
  if (type == "explicit") return explicit_from_json(spec);
  throw std::invalid_argument("unknown game type '" + type + "'");
}

}  // namespace nmpg
