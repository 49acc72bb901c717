#pragma once

#include <limits>
#include <utility>
#include <vector>

namespace nmpg {

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

/// Undirected simple communication graph over agents 0..n-1.
/// Hop distances are precomputed; the object is immutable after construction.
class Graph {
 public:
  Graph() = default;
  Graph(int n, std::vector<std::pair<int, int>> edges);

  static Graph path(int n);
  static Graph complete(int n);

  int size() const { return n_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const;

  /// Hop count, or kUnreachable if i and j lie in different components.
  int dist(int i, int j) const;

  /// N_i^kappa: sorted agents within kappa hops of i (always contains i).
  std::vector<int> khop(int i, int kappa) const;
  /// Agents outside N_i^kappa.
  std::vector<int> khop_complement(int i, int kappa) const;
  /// N_i^kappa without i.
  std::vector<int> khop_exclusive(int i, int kappa) const;

  int n_of_kappa(int kappa) const;
  /// Largest finite hop distance.
  int diameter() const;

 private:
  void check(int i) const;

  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> dist_;
};

}  // namespace nmpg
