#include <stdexcept>

#include "nmpg/game.hpp"
#include "nmpg/policy.hpp"

namespace nmpg {

double chain_example_value(double gamma, double xi1_g_given_b, double xi1_g_given_g,
                           double xi4_g_given_g) {
  // P(s_1(t) = g) follows p_{t+1} = c + rho p_t from p_0 = 0; agent 4 lags agent 1 by 3 steps.
  const double c = xi1_g_given_b;
  const double rho = xi1_g_given_g - xi1_g_given_b;
  const double g4 = gamma * gamma * gamma * gamma;
  return xi4_g_given_g * g4 * c / ((1.0 - gamma) * (1.0 - gamma * rho));
}

std::pair<NetworkedGame, NMPGDescriptor> build_chain_example(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("chain example: gamma in (0,1)");
  constexpr int kB = 0, kG = 1;
  NetworkedGame::Parts parts;
  parts.graph = Graph::path(4);
  parts.kappa_r = 0;
  parts.gamma = gamma;
  for (int i = 0; i < 4; ++i) {
    parts.state_labels.push_back({"s_b", "s_g"});
    parts.action_labels.push_back({"a_b", "a_g"});
  }
  LocalKernel first{{0}, std::vector<double>(2 * 2 * 2, 0.0)};
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) first.table[(s * 2 + a) * 2 + (a == kG ? kG : kB)] = 1.0;
  parts.kernels.push_back(first);
  for (int i = 1; i < 4; ++i) {
    LocalKernel copy{{i - 1}, std::vector<double>(2 * 2 * 2, 0.0)};
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) copy.table[(s * 2 + a) * 2 + s] = 1.0;
    parts.kernels.push_back(copy);
  }
  for (int i = 0; i < 3; ++i) parts.rewards.push_back(table_reward({i}, {2, 2}, {0, 0, 0, 0}));
  parts.rewards.push_back(table_reward({3}, {2, 2}, {0, 0, 0, 1}));
  parts.mu = {InitialState{{kB, kB, kB, kB}, 1.0}};
  parts.r_min = 0.0;
  parts.r_max = 1.0;
  parts.source = {{"type", "chain"}, {"gamma", gamma}};

  NMPGDescriptor desc;
  desc.kappa_G = 1;
  auto zero = [](const PolicyProfile&) { return 0.0; };
  auto f = [gamma](const PolicyProfile& xi) {
    return chain_example_value(gamma, xi.probs[0](kB, kG), xi.probs[0](kG, kG), xi.probs[3](kG, kG));
  };
  desc.local_potentials = {zero, zero, f, f};
  desc.potential_bounds = std::pair{0.0, gamma * gamma * gamma * gamma / (1.0 - gamma)};
  return {NetworkedGame(std::move(parts)), std::move(desc)};
}

}  // namespace nmpg
