#include "nmpg/graph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>
#include <string>

namespace nmpg {

Graph::Graph(int n, std::vector<std::pair<int, int>> edges) : n_(n), adj_(n) {
  if (n <= 0) throw std::invalid_argument("Graph: node count must be positive");
  for (auto [a, b] : edges) {
    check(a);
    check(b);
    if (a == b) throw std::invalid_argument("Graph: self-loop at " + std::to_string(a));
    auto e = std::minmax(a, b);
    if (std::find(edges_.begin(), edges_.end(), std::pair{e.first, e.second}) != edges_.end())
      throw std::invalid_argument("Graph: duplicate edge");
    edges_.emplace_back(e.first, e.second);
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }
  for (auto& v : adj_) std::sort(v.begin(), v.end());

  dist_.assign(static_cast<std::size_t>(n) * n, kUnreachable);
  for (int src = 0; src < n; ++src) {
    int* row = &dist_[static_cast<std::size_t>(src) * n];
    std::queue<int> q;
    row[src] = 0;
    q.push(src);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj_[u]) {
        if (row[v] != kUnreachable) continue;
        row[v] = row[u] + 1;
        q.push(v);
      }
    }
  }
}

Graph Graph::path(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return Graph(n, std::move(e));
}

Graph Graph::complete(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph(n, std::move(e));
}

void Graph::check(int i) const {
  if (i < 0 || i >= n_) throw std::out_of_range("Graph: agent index " + std::to_string(i));
}

const std::vector<int>& Graph::neighbors(int i) const {
  check(i);
  return adj_[i];
}

int Graph::dist(int i, int j) const {
  check(i);
  check(j);
  return dist_[static_cast<std::size_t>(i) * n_ + j];
}

std::vector<int> Graph::khop(int i, int kappa) const {
  check(i);
  if (kappa < 0) throw std::invalid_argument("Graph::khop: negative radius");
  std::vector<int> out;
  for (int j = 0; j < n_; ++j)
    if (dist(i, j) <= kappa) out.push_back(j);
  return out;
}

std::vector<int> Graph::khop_complement(int i, int kappa) const {
  check(i);
  std::vector<int> out;
  for (int j = 0; j < n_; ++j)
    if (dist(i, j) > kappa) out.push_back(j);
  return out;
}

std::vector<int> Graph::khop_exclusive(int i, int kappa) const {
  auto out = khop(i, kappa);
  out.erase(std::find(out.begin(), out.end(), i));
  return out;
}

int Graph::n_of_kappa(int kappa) const {
  std::size_t best = 0;
  for (int i = 0; i < n_; ++i) best = std::max(best, khop(i, kappa).size());
  return static_cast<int>(best);
}

int Graph::diameter() const {
  int d = 0;
  for (int v : dist_)
    if (v != kUnreachable) d = std::max(d, v);
  return d;
}

}  // namespace nmpg
