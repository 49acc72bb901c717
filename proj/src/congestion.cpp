#include <algorithm>
#include <queue>
#include <stdexcept>

#include "nmpg/game.hpp"

namespace nmpg {

int TrafficNet::node_index(const std::string& name) const {
  auto it = std::find(nodes.begin(), nodes.end(), name);
  if (it == nodes.end()) throw std::invalid_argument("unknown traffic node '" + name + "'");
  return static_cast<int>(it - nodes.begin());
}

std::vector<int> reachable_nodes(const TrafficNet& net, int start) {
  const int V = static_cast<int>(net.nodes.size());
  if (start < 0 || start >= V) throw std::out_of_range("reachable_nodes: bad start node");
  std::vector<char> seen(V, 0);
  std::queue<int> q;
  seen[start] = 1;
  q.push(start);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [a, b] : net.edges)
      if (a == u && !seen[b]) {
        seen[b] = 1;
        q.push(b);
      }
  }
  std::vector<int> out;
  for (int v = 0; v < V; ++v)
    if (seen[v]) out.push_back(v);
  return out;
}

Graph comm_graph_from_traffic(const TrafficNet& net, const std::vector<AgentRoute>& agents) {
  const int n = static_cast<int>(agents.size());
  std::vector<std::vector<int>> open(n);
  for (int i = 0; i < n; ++i) {
    for (int v : reachable_nodes(net, agents[i].start))
      if (v != agents[i].dest) open[i].push_back(v);
  }
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      std::vector<int> common;
      std::set_intersection(open[i].begin(), open[i].end(), open[j].begin(), open[j].end(),
                            std::back_inserter(common));
      if (!common.empty()) edges.emplace_back(i, j);
    }
  return Graph(n, std::move(edges));
}

namespace {

std::vector<std::vector<int>> out_edges(const TrafficNet& net) {
  std::vector<std::vector<int>> out(net.nodes.size());
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    auto [u, v] = net.edges[e];
    if (u == v) throw std::invalid_argument("traffic net: self-loops are implicit (waiting)");
    out[u].push_back(static_cast<int>(e));
  }
  return out;
}

}  // namespace

NetworkedGame build_congestion_game(const TrafficNet& net, const std::vector<AgentRoute>& agents,
                                    double eps_bar, double gamma) {
  if (!(eps_bar > 0.0)) throw std::invalid_argument("build_congestion_game: eps_bar must be > 0");
  const int n = static_cast<int>(agents.size());
  if (n == 0) throw std::invalid_argument("build_congestion_game: no agents");
  const int V = static_cast<int>(net.nodes.size());
  for (auto [u, v] : net.edges)
    if (u < 0 || u >= V || v < 0 || v >= V)
      throw std::out_of_range("build_congestion_game: edge references unknown node");
  const auto outs = out_edges(net);
  std::size_t max_out = 1;
  for (const auto& o : outs) max_out = std::max(max_out, o.size());
  const int num_actions = static_cast<int>(max_out) + 1;

  CongestionLayout layout;
  layout.node_names = net.nodes;
  layout.edges = net.edges;
  layout.eps_bar = eps_bar;

  NetworkedGame::Parts parts;
  parts.graph = comm_graph_from_traffic(net, agents);
  parts.kappa_r = 1;
  parts.gamma = gamma;

  std::vector<std::string> action_names{"wait"};
  for (int k = 1; k < num_actions; ++k) action_names.push_back("edge" + std::to_string(k));

  InitialState init;
  for (int i = 0; i < n; ++i) {
    const auto& ag = agents[i];
    auto nodes = reachable_nodes(net, ag.start);
    auto dpos = std::find(nodes.begin(), nodes.end(), ag.dest);
    if (dpos == nodes.end())
      throw std::invalid_argument("build_congestion_game: destination of agent " +
                                  std::to_string(i) + " is unreachable");
    CongestionLayout::Route route;
    route.start = ag.start;
    route.dest = ag.dest;
    route.nodes = nodes;
    route.dest_state = static_cast<int>(dpos - nodes.begin());
    const int ns = static_cast<int>(nodes.size());
    auto local = [&](int node) {
      return static_cast<int>(std::find(nodes.begin(), nodes.end(), node) - nodes.begin());
    };

    LocalKernel K;
    K.scope = {i};
    K.table.assign(static_cast<std::size_t>(ns) * num_actions * ns, 0.0);
    route.action_edge.assign(ns, std::vector<int>(num_actions, -1));
    for (int s = 0; s < ns; ++s) {
      const int u = nodes[s];
      for (int a = 0; a < num_actions; ++a) {
        int next = s;
        if (u != ag.dest && a > 0 && !outs[u].empty()) {
          // Actions beyond the out-degree fall back to the first out edge.
          const int k = a <= static_cast<int>(outs[u].size()) ? a : 1;
          const int e = outs[u][k - 1];
          route.action_edge[s][a] = e;
          next = local(net.edges[e].second);
        }
        K.table[(static_cast<std::size_t>(s) * num_actions + a) * ns + next] = 1.0;
      }
    }
    parts.kernels.push_back(std::move(K));

    std::vector<std::string> labels;
    for (int v : nodes) labels.push_back(net.nodes[v]);
    parts.state_labels.push_back(std::move(labels));
    parts.action_labels.push_back(action_names);
    init.state.push_back(local(ag.start));
    layout.routes.push_back(std::move(route));
  }

  int widest = 1;
  for (int i = 0; i < n; ++i) {
    auto scope = parts.graph.khop(i, 1);
    widest = std::max(widest, static_cast<int>(scope.size()));
    std::vector<CongestionLayout::Route> routes;
    int self = 0;
    for (std::size_t k = 0; k < scope.size(); ++k) {
      routes.push_back(layout.routes[scope[k]]);
      if (scope[k] == i) self = static_cast<int>(k);
    }
    auto fn = [routes = std::move(routes), self, eps_bar](std::span<const int> s,
                                                          std::span<const int> a) {
      const auto& me = routes[self];
      if (s[self] == me.dest_state) return 0.0;
      const int e = me.action_edge[s[self]][a[self]];
      if (e < 0) return -eps_bar;
      int count = 0;
      for (std::size_t k = 0; k < routes.size(); ++k)
        if (s[k] != routes[k].dest_state && routes[k].action_edge[s[k]][a[k]] == e) ++count;
      return -eps_bar - count;
    };
    parts.rewards.push_back(LocalReward{std::move(scope), std::move(fn)});
  }
  parts.r_min = -eps_bar - widest;
  parts.r_max = 0.0;
  parts.mu = {init};

  nlohmann::json src;
  src["type"] = "congestion";
  src["traffic_net"]["nodes"] = net.nodes;
  for (auto [u, v] : net.edges) src["traffic_net"]["edges"].push_back({net.nodes[u], net.nodes[v]});
  for (const auto& ag : agents)
    src["agents"].push_back({{"start", net.nodes[ag.start]}, {"dest", net.nodes[ag.dest]}});
  src["eps_bar"] = eps_bar;
  src["gamma"] = gamma;
  parts.source = std::move(src);
  parts.congestion = std::move(layout);
  return NetworkedGame(std::move(parts));
}

TrafficNet appendix_traffic_net() {
  TrafficNet net;
  net.nodes = {"b1", "b2", "b3", "b4", "c1", "c2", "c3", "d"};
  auto id = [&](const char* s) { return net.node_index(s); };
  const char* pairs[][2] = {{"b1", "c1"}, {"b2", "c1"}, {"b2", "c2"}, {"b3", "c2"}, {"b3", "c3"},
                            {"b4", "c3"}, {"c1", "d"},  {"c2", "d"},  {"c3", "d"}};
  for (auto& p : pairs) net.edges.emplace_back(id(p[0]), id(p[1]));
  return net;
}

std::vector<AgentRoute> appendix_agents(const TrafficNet& net) {
  std::vector<AgentRoute> out;
  for (int i = 0; i < 12; ++i)
    out.push_back({net.node_index("b" + std::to_string(i / 3 + 1)), net.node_index("d")});
  return out;
}

std::vector<int> edge_counts(const NetworkedGame& game, std::span<const int> s,
                             std::span<const int> a) {
  if (!game.congestion()) throw std::invalid_argument("edge_counts: not a congestion game");
  const auto& L = *game.congestion();
  std::vector<int> N(L.edges.size(), 0);
  for (int j = 0; j < game.n(); ++j) {
    const auto& r = L.routes[j];
    if (s[j] == r.dest_state) continue;
    const int e = r.action_edge[s[j]][a[j]];
    if (e >= 0) ++N[e];
  }
  return N;
}

double stage_potential_congestion(const NetworkedGame& game, std::span<const int> s,
                                  std::span<const int> a) {
  const auto N = edge_counts(game, s, a);
  const auto& L = *game.congestion();
  double phi = 0.0;
  for (int j = 0; j < game.n(); ++j)
    if (s[j] != L.routes[j].dest_state) phi -= L.eps_bar;
  for (int c : N) phi -= 0.5 * c * (c + 1);
  return phi;
}

double stage_potential_pairwise(const NetworkedGame& game, std::span<const int> s,
                                std::span<const int> a) {
  double phi = 0.0;
  for (int c : edge_counts(game, s, a)) phi -= 0.5 * c * (c - 1);
  return phi;
}

}  // namespace nmpg
