#include "nmpg/fixtures.hpp"

namespace nmpg {

NetworkedGame random_game(const Graph& graph, const RandomGameOptions& opt, Rng& rng) {
  const int n = graph.size();
  NetworkedGame::Parts p;
  p.graph = graph;
  p.kappa_r = opt.kappa_r;
  p.gamma = opt.gamma;
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> sl, al;
    for (int k = 0; k < opt.num_states; ++k) sl.push_back("s" + std::to_string(k));
    for (int k = 0; k < opt.num_actions; ++k) al.push_back("a" + std::to_string(k));
    p.state_labels.push_back(sl);
    p.action_labels.push_back(al);
  }
  for (int i = 0; i < n; ++i) {
    LocalKernel K;
    K.scope = graph.khop(i, 1);
    std::size_t rows = opt.num_actions;
    for (std::size_t k = 0; k < K.scope.size(); ++k) rows *= opt.num_states;
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(opt.num_states);
      double sum = 0.0;
      for (auto& x : row) sum += (x = opt.kernel_floor + uniform01(rng));
      for (auto x : row) K.table.push_back(x / sum);
    }
    p.kernels.push_back(std::move(K));

    auto scope = graph.khop(i, opt.kappa_r);
    std::vector<int> radices(scope.size(), opt.num_states);
    radices.insert(radices.end(), scope.size(), opt.num_actions);
    std::size_t size = 1;
    for (int r : radices) size *= static_cast<std::size_t>(r);
    std::vector<double> table(size);
    for (auto& x : table) x = uniform01(rng);
    p.rewards.push_back(table_reward(scope, radices, std::move(table)));
  }
  MixedRadix codec(std::vector<int>(n, opt.num_states));
  std::vector<double> w(codec.size(), 1.0);
  if (!opt.uniform_mu)
    for (auto& x : w) x = 0.1 + uniform01(rng);
  double total = 0.0;
  for (double x : w) total += x;
  for (std::size_t c = 0; c < codec.size(); ++c) p.mu.push_back({codec.decode(c), w[c] / total});
  p.r_min = 0.0;
  p.r_max = 1.0;
  return NetworkedGame(std::move(p));
}

NetworkedGame random_line_game(int n, const RandomGameOptions& opt, Rng& rng) {
  return random_game(Graph::path(n), opt, rng);
}

NetworkedGame micro_congestion_game(double gamma, double eps_bar) {
  TrafficNet net;
  net.nodes = {"a", "b", "c", "d"};
  net.edges = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
  return build_congestion_game(net, {{0, 3}, {0, 3}}, eps_bar, gamma);
}

}  // namespace nmpg
