#include <gtest/gtest.h>

#include <algorithm>

#include "nmpg/graph.hpp"
#include "nmpg/mixed_radix.hpp"
#include "nmpg/rng.hpp"

using namespace nmpg;

namespace {

Graph random_graph(int n, double p, Rng& rng) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (uniform01(rng) < p) e.emplace_back(i, j);
  return Graph(n, e);
}

}  // namespace

TEST(Graph, PathDistances) {
  const Graph g = Graph::path(4);
  EXPECT_EQ(g.dist(0, 3), 3);
  EXPECT_EQ(g.dist(0, 2), 2);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(g.dist(i, i), 0);
}

TEST(Graph, KhopOnChain) {
  const Graph g = Graph::path(4);
  EXPECT_EQ(g.khop(2, 0), std::vector<int>{2});
  EXPECT_EQ(g.khop(1, 1), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(g.khop(0, 3), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(g.khop_exclusive(1, 1), (std::vector<int>{0, 2}));
  EXPECT_EQ(g.khop_complement(0, 1), (std::vector<int>{2, 3}));
}

TEST(Graph, NOfKappa) {
  EXPECT_EQ(Graph::path(4).n_of_kappa(1), 3);
  EXPECT_EQ(Graph::path(4).n_of_kappa(0), 1);
  EXPECT_EQ(Graph::complete(5).n_of_kappa(1), 5);
}

TEST(Graph, DisconnectedUsesSentinel) {
  const Graph g(4, {{0, 1}, {2, 3}});
  EXPECT_EQ(g.dist(0, 3), kUnreachable);
  EXPECT_EQ(g.khop(0, 10), (std::vector<int>{0, 1}));
  EXPECT_EQ(g.diameter(), 1);
}

TEST(Graph, RejectsBadEdges) {
  EXPECT_THROW(Graph(3, {{0, 0}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{0, 1}, {1, 0}}), std::invalid_argument);
  EXPECT_THROW(Graph(3, {{0, 3}}), std::out_of_range);
  EXPECT_THROW(Graph::path(3).dist(0, 5), std::out_of_range);
}

TEST(GraphProperty, TriangleMonotoneAndCover) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 9;
    const Graph g = random_graph(n, 0.35, rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          if (g.dist(i, j) == kUnreachable || g.dist(j, k) == kUnreachable) continue;
          EXPECT_LE(g.dist(i, k), g.dist(i, j) + g.dist(j, k));
        }
    for (int kappa = 0; kappa < n; ++kappa) {
      EXPECT_LE(g.n_of_kappa(kappa), g.n_of_kappa(kappa + 1));
      for (int i = 0; i < n; ++i) {
        const auto a = g.khop(i, kappa), b = g.khop(i, kappa + 1);
        EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
      }
    }
    const Graph full = Graph::complete(n);
    for (int i = 0; i < n; ++i) EXPECT_EQ(static_cast<int>(full.khop(i, full.diameter()).size()), n);
  }
}

TEST(MixedRadix, FirstCoordinateMostSignificant) {
  const MixedRadix c({2, 3, 4});
  EXPECT_EQ(c.size(), 24u);
  const std::vector<int> x{1, 2, 3};
  EXPECT_EQ(c.encode(x), 1u * 12 + 2 * 4 + 3);
  EXPECT_EQ(c.decode(23), x);
  std::vector<int> y{0, 0, 0};
  std::size_t count = 1;
  while (c.next(y)) {
    EXPECT_EQ(c.encode(y), count);
    ++count;
  }
  EXPECT_EQ(count, 24u);
  EXPECT_THROW(c.encode(std::vector<int>{2, 0, 0}), std::out_of_range);
}

TEST(Rng, SubstreamsAreNamedAndStable) {
  Rng a = substream(5, "critic"), b = substream(5, "critic"), c = substream(5, "actor");
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
}
