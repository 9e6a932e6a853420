#pragma once

#include "clustergas/common.hpp"
#include "clustergas/rng.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace clustergas {

// Simple labelled graph, k <= 16, bitmask adjacency.
struct SimpleGraph {
  int k = 0;
  std::vector<std::uint32_t> adj;

  explicit SimpleGraph(int vertices = 0) : k(vertices), adj(vertices, 0) {}

  void add_edge(int i, int j) {
    if (i == j) throw ConfigError("SimpleGraph: self-loop");
    adj[i] |= 1u << j;
    adj[j] |= 1u << i;
  }
  bool has_edge(int i, int j) const { return (adj[i] >> j) & 1u; }
  std::vector<std::pair<int, int>> edge_list() const;
  int edge_count() const { return static_cast<int>(edge_list().size()); }

  static SimpleGraph complete(int k);
};

// Alternating connected-graph sum: sum over connected spanning edge subsets C
// of g of (-1)^|C|; 1 for a single vertex, 0 for a disconnected graph.
// Evaluated by a subset recursion over vertex sets (3^k), exact in 64-bit.
long long phi(const SimpleGraph& g);

// Transparent reference route: direct enumeration of the 2^|E| edge subsets.
long long phi_edge_enumeration(const SimpleGraph& g);

// Number of spanning trees (Kirchhoff), exact integer arithmetic.
long long spanning_tree_count(const SimpleGraph& g);

// (k-2)! / prod (d_i - 1)! labelled trees with the given degree sequence.
long long count_trees_with_degrees(int k, const std::vector<int>& degrees);

// Spanning tree with edges in clustering order: edges[0] is the first
// collision, edges[n-2] the last. Edge endpoints are stored (min, max).
struct OrderedTree {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
};

struct SignedOrderedTree {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> signs;  // +1 collision, -1 overlap
};

// |T^<_n| = n^{n-2} (n-1)!; the signed set multiplies by 2^{n-1}.
long long ordered_tree_count(int n);
long long signed_ordered_tree_count(int n);

// Random-access decode: index in [0, ordered_tree_count(n)) to a tree via
// Prufer digits plus a Lehmer-coded edge order. Restartable and chunkable.
OrderedTree ordered_tree_at(int n, long long index);
SignedOrderedTree signed_ordered_tree_at(int n, long long index);

// Full enumeration (n <= 7 by contract; larger sets are sampled instead).
void for_each_ordered_tree(int n, const std::function<void(const OrderedTree&)>& fn);
void for_each_signed_ordered_tree(int n, const std::function<void(const SignedOrderedTree&)>& fn);

OrderedTree random_ordered_tree(int n, CounterRng& rng);
SignedOrderedTree random_signed_ordered_tree(int n, CounterRng& rng);

// All labelled trees on n vertices as edge lists (test oracle helper).
std::vector<std::vector<std::pair<int, int>>> all_labeled_trees(int n);

}  // namespace clustergas
