#include "clustergas/trees.hpp"

#include "clustergas/union_find.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <bit>

namespace clustergas {

std::vector<std::pair<int, int>> SimpleGraph::edge_list() const {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (has_edge(i, j)) edges.emplace_back(i, j);
  return edges;
}

SimpleGraph SimpleGraph::complete(int k) {
  SimpleGraph g(k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) g.add_edge(i, j);
  return g;
}

long long phi(const SimpleGraph& g) {
  const int k = g.k;
  if (k > 16) throw SizeLimit("phi: exact mode limited to k <= 16");
  if (k == 0) return 0;
  if (k == 1) return 1;
  const std::uint32_t full = (k == 32 ? ~0u : (1u << k) - 1u);
  // edge_free[S]: the induced subgraph on S has no edges.
  std::vector<char> edge_free(full + 1u, 1);
  for (std::uint32_t s = 1; s <= full; ++s) {
    const int v = std::countr_zero(s);
    const std::uint32_t rest = s & (s - 1u);
    edge_free[s] = edge_free[rest] && !(g.adj[v] & rest);
  }
  // phi(S) = F(S) - sum over proper subsets S' of S containing the lowest
  // vertex of S of phi(S') F(S \ S'), with F = edge_free.
  std::vector<long long> ph(full + 1u, 0);
  for (std::uint32_t s = 1; s <= full; ++s) {
    if (std::popcount(s) == 1) {
      ph[s] = 1;
      continue;
    }
    const std::uint32_t vbit = s & (~s + 1u);
    const std::uint32_t rest = s ^ vbit;
    long long acc = edge_free[s] ? 1 : 0;
    // proper submasks of rest, each combined with vbit
    for (std::uint32_t sub = (rest - 1u) & rest;; sub = (sub - 1u) & rest) {
      const std::uint32_t sp = vbit | sub;
      if (edge_free[s ^ sp]) acc -= ph[sp];
      if (sub == 0) break;
    }
    ph[s] = acc;
  }
  return ph[full];
}

long long phi_edge_enumeration(const SimpleGraph& g) {
  const int k = g.k;
  if (k == 0) return 0;
  if (k == 1) return 1;
  const auto edges = g.edge_list();
  const int m = static_cast<int>(edges.size());
  if (m > 25) throw SizeLimit("phi_edge_enumeration: too many edges for 2^|E| enumeration");
  long long acc = 0;
  for (std::uint32_t subset = 0; subset < (1u << m); ++subset) {
    UnionFind uf(static_cast<std::size_t>(k));
    int chosen = 0;
    for (int e = 0; e < m; ++e)
      if ((subset >> e) & 1u) {
        uf.unite(edges[e].first, edges[e].second);
        ++chosen;
      }
    if (uf.count() == 1) acc += (chosen % 2 == 0) ? 1 : -1;
  }
  return acc;
}

long long spanning_tree_count(const SimpleGraph& g) {
  const int k = g.k;
  if (k > 16) throw SizeLimit("spanning_tree_count: limited to k <= 16");
  if (k <= 1) return 1;
  const int m = k - 1;  // Laplacian minor
  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> M(m, m);
  M.setZero();
  for (int i = 1; i < k; ++i) {
    M(i - 1, i - 1) = std::popcount(g.adj[i]);
    for (int j = 1; j < k; ++j)
      if (j != i && g.has_edge(i, j)) M(i - 1, j - 1) = -1;
  }
  // Bareiss fraction-free elimination: every intermediate entry is an exact
  // minor determinant, bounded by the spanning-forest counts.
  long long prev = 1;
  int sign = 1;
  for (int c = 0; c + 1 < m; ++c) {
    if (M(c, c) == 0) {
      int r = c + 1;
      while (r < m && M(r, c) == 0) ++r;
      if (r == m) return 0;
      M.row(c).swap(M.row(r));
      sign = -sign;
    }
    for (int i = c + 1; i < m; ++i)
      for (int j = c + 1; j < m; ++j) {
        const __int128 num =
            static_cast<__int128>(M(i, j)) * M(c, c) - static_cast<__int128>(M(i, c)) * M(c, j);
        M(i, j) = static_cast<long long>(num / prev);
      }
    prev = M(c, c);
  }
  return sign * M(m - 1, m - 1);
}

long long count_trees_with_degrees(int k, const std::vector<int>& degrees) {
  if (k > 18) throw SizeLimit("count_trees_with_degrees: limited to k <= 18");
  if (static_cast<int>(degrees.size()) != k)
    throw DegreeMismatch("count_trees_with_degrees: degree sequence length != k");
  long long sum = 0;
  for (int d : degrees) {
    if (d < 1) throw DegreeMismatch("count_trees_with_degrees: degree below 1");
    sum += d;
  }
  if (sum != 2LL * k - 2) throw DegreeMismatch("count_trees_with_degrees: handshake violation");
  long long result = 1;
  for (int f = 2; f <= k - 2; ++f) result *= f;
  for (int d : degrees) {
    long long fac = 1;
    for (int f = 2; f <= d - 1; ++f) fac *= f;
    result /= fac;
  }
  return result;
}

namespace {

long long int_pow(long long base, int exp) {
  long long r = 1;
  for (int e = 0; e < exp; ++e) r *= base;
  return r;
}

long long factorial(int n) {
  long long r = 1;
  for (int f = 2; f <= n; ++f) r *= f;
  return r;
}

// Prufer decode; the returned edge list is sorted (min,max)-lexicographically.
std::vector<std::pair<int, int>> prufer_decode(int n, const std::vector<int>& seq) {
  std::vector<int> degree(n, 1);
  for (int v : seq) ++degree[v];
  std::vector<std::pair<int, int>> edges;
  std::vector<char> used(n, 0);
  for (int v : seq) {
    int leaf = -1;
    for (int u = 0; u < n; ++u)
      if (degree[u] == 1 && !used[u]) {
        leaf = u;
        break;
      }
    used[leaf] = 1;
    edges.emplace_back(std::min(leaf, v), std::max(leaf, v));
    --degree[v];
  }
  int a = -1, b = -1;
  for (int u = 0; u < n; ++u)
    if (!used[u] && degree[u] == 1) (a < 0 ? a : b) = u;
  edges.emplace_back(std::min(a, b), std::max(a, b));
  std::sort(edges.begin(), edges.end());
  return edges;
}

std::vector<int> lehmer_decode(int m, long long index) {
  std::vector<int> perm(m), pool(m);
  for (int i = 0; i < m; ++i) pool[i] = i;
  for (int i = 0; i < m; ++i) {
    const long long f = factorial(m - 1 - i);
    const int pos = static_cast<int>(index / f);
    index %= f;
    perm[i] = pool[pos];
    pool.erase(pool.begin() + pos);
  }
  return perm;
}

}  // namespace

long long ordered_tree_count(int n) {
  if (n < 1) throw SizeLimit("ordered_tree_count: n must be >= 1");
  if (n > 12) throw SizeLimit("ordered_tree_count: count exceeds 64-bit range guard");
  if (n == 1) return 1;
  return int_pow(n, n - 2) * factorial(n - 1);
}

long long signed_ordered_tree_count(int n) {
  const long long base = ordered_tree_count(n);
  return base * (1LL << (n - 1));
}

OrderedTree ordered_tree_at(int n, long long index) {
  OrderedTree t;
  t.n = n;
  if (n == 1) return t;
  const long long trees = int_pow(n, n - 2);
  long long prufer_idx = index % trees;
  const long long perm_idx = index / trees;
  std::vector<int> seq(n - 2);
  for (int i = 0; i < n - 2; ++i) {
    seq[i] = static_cast<int>(prufer_idx % n);
    prufer_idx /= n;
  }
  const auto canonical = prufer_decode(n, seq);
  const auto perm = lehmer_decode(n - 1, perm_idx);
  t.edges.resize(n - 1);
  for (int e = 0; e < n - 1; ++e) t.edges[e] = canonical[perm[e]];
  return t;
}

SignedOrderedTree signed_ordered_tree_at(int n, long long index) {
  const long long base = ordered_tree_count(n);
  const OrderedTree t = ordered_tree_at(n, index % base);
  long long bits = index / base;
  SignedOrderedTree s;
  s.n = n;
  s.edges = t.edges;
  s.signs.resize(std::max(n - 1, 0));
  for (int e = 0; e < n - 1; ++e) {
    s.signs[e] = (bits & 1) ? -1 : 1;
    bits >>= 1;
  }
  return s;
}

void for_each_ordered_tree(int n, const std::function<void(const OrderedTree&)>& fn) {
  if (n > 7) throw SizeLimit("for_each_ordered_tree: full enumeration limited to n <= 7");
  const long long count = ordered_tree_count(n);
  for (long long i = 0; i < count; ++i) fn(ordered_tree_at(n, i));
}

void for_each_signed_ordered_tree(int n,
                                  const std::function<void(const SignedOrderedTree&)>& fn) {
  if (n > 7) throw SizeLimit("for_each_signed_ordered_tree: full enumeration limited to n <= 7");
  const long long count = signed_ordered_tree_count(n);
  for (long long i = 0; i < count; ++i) fn(signed_ordered_tree_at(n, i));
}

namespace {

// Near-uniform index in [0, count) by 128-bit multiply-shift; the deviation
// from uniform is count / 2^64 per value.
long long random_index(long long count, CounterRng& rng) {
  const unsigned __int128 p =
      static_cast<unsigned __int128>(rng.next_u64()) * static_cast<unsigned __int128>(count);
  return static_cast<long long>(p >> 64);
}

}  // namespace

OrderedTree random_ordered_tree(int n, CounterRng& rng) {
  return ordered_tree_at(n, random_index(ordered_tree_count(n), rng));
}

SignedOrderedTree random_signed_ordered_tree(int n, CounterRng& rng) {
  return signed_ordered_tree_at(n, random_index(signed_ordered_tree_count(n), rng));
}

std::vector<std::vector<std::pair<int, int>>> all_labeled_trees(int n) {
  std::vector<std::vector<std::pair<int, int>>> out;
  if (n == 1) {
    out.emplace_back();
    return out;
  }
  const long long trees = int_pow(n, n - 2);
  for (long long idx = 0; idx < trees; ++idx) {
    long long v = idx;
    std::vector<int> seq(n - 2);
    for (int i = 0; i < n - 2; ++i) {
      seq[i] = static_cast<int>(v % n);
      v /= n;
    }
    out.push_back(prufer_decode(n, seq));
  }
  return out;
}

}  // namespace clustergas
