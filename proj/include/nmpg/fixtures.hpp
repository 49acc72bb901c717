#pragma once

#include "nmpg/game.hpp"
#include "nmpg/rng.hpp"

namespace nmpg {

struct RandomGameOptions {
  int num_states = 2;
  int num_actions = 2;
  int kappa_r = 1;
  double gamma = 0.9;
  double kernel_floor = 0.05;  // keeps every transition positive, hence ergodic chains
  bool uniform_mu = true;
};

/// Random game on `graph`: kernels conditioned on the full one-hop neighborhood,
/// table rewards in [0,1] over the kappa_r-hop neighborhood.
NetworkedGame random_game(const Graph& graph, const RandomGameOptions& opt, Rng& rng);
NetworkedGame random_line_game(int n, const RandomGameOptions& opt, Rng& rng);

/// Two agents travelling a -> d through b or c: the smallest congestion instance with a shared choice.
NetworkedGame micro_congestion_game(double gamma, double eps_bar = 0.5);

}  // namespace nmpg
