#pragma once

#include "clustergas/trajectory.hpp"
#include "clustergas/union_find.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

namespace clustergas {

// Timestamped collision multigraph of one run; edges mirror the collision log.
template <int D>
struct InteractionGraph {
  struct Edge {
    double t;
    int i, j;  // i < j
    Vec<D> omega;
  };
  int n = 0;
  std::vector<Edge> edges;  // time order

  static InteractionGraph from_log(int n_particles, const CollisionLog<D>& log) {
    InteractionGraph g;
    g.n = n_particles;
    g.edges.reserve(log.size());
    for (const auto& ev : log) g.edges.push_back({ev.t, ev.i, ev.j, ev.omega});
    return g;
  }
};

// One connected component of the interaction graph together with the member
// trajectories. The clustering tree keeps the collisions that connect the
// component in time order; cycle-creating collisions are recollisions.
template <int D>
struct ClusterPath {
  std::vector<int> member_ids;                            // sorted particle indices
  TrajectorySet<D> trajectories;                          // restriction to members
  std::vector<typename InteractionGraph<D>::Edge> edges;  // all collisions, time order
  std::vector<typename InteractionGraph<D>::Edge> clustering_tree;
  std::vector<typename InteractionGraph<D>::Edge> recollision_edges;
  bool minimal = false;
  double energy = 0.0;  // constant along the path

  int size() const { return static_cast<int>(member_ids.size()); }

  const Trajectory<D>& trajectory_of(int particle_id) const {
    const auto it = std::lower_bound(member_ids.begin(), member_ids.end(), particle_id);
    return trajectories[static_cast<std::size_t>(it - member_ids.begin())];
  }
};

// Greedy time-ordered spanning tree: collisions that would close a cycle are
// skipped and reported as recollisions. Ties between equal-time edges break
// pair-lexicographically. Returns the tree only for minimal paths, matching
// the definition of a min cluster path as one whose interaction graph is a
// simple tree.
template <int D>
std::pair<bool, std::optional<std::vector<typename InteractionGraph<D>::Edge>>> classify_minimal(
    ClusterPath<D>& path) {
  std::map<int, std::size_t> local;
  for (std::size_t k = 0; k < path.member_ids.size(); ++k) local[path.member_ids[k]] = k;
  auto edges = path.edges;
  std::stable_sort(edges.begin(), edges.end(),
                   [](const auto& a, const auto& b) {
                     if (a.t != b.t) return a.t < b.t;
                     if (a.i != b.i) return a.i < b.i;
                     return a.j < b.j;
                   });
  UnionFind uf(path.member_ids.size());
  path.clustering_tree.clear();
  path.recollision_edges.clear();
  for (const auto& e : edges) {
    if (uf.unite(local[e.i], local[e.j]))
      path.clustering_tree.push_back(e);
    else
      path.recollision_edges.push_back(e);
  }
  path.minimal = path.recollision_edges.empty();
  if (path.minimal) return {true, path.clustering_tree};
  return {false, std::nullopt};
}

// Unique partition of the particles into connected components of the
// interaction graph; isolated particles become singleton paths.
template <int D>
std::vector<ClusterPath<D>> partition_cluster_paths(const InteractionGraph<D>& graph,
                                                    const TrajectorySet<D>& trajectories) {
  const int n = graph.n;
  UnionFind uf(static_cast<std::size_t>(n));
  for (const auto& e : graph.edges) uf.unite(e.i, e.j);

  std::map<std::size_t, int> root_to_path;
  std::vector<ClusterPath<D>> paths;
  for (int i = 0; i < n; ++i) {
    const std::size_t r = uf.find(i);
    auto [it, inserted] = root_to_path.try_emplace(r, static_cast<int>(paths.size()));
    if (inserted) paths.emplace_back();
    paths[it->second].member_ids.push_back(i);
  }
  for (auto& p : paths) {
    for (int id : p.member_ids) {
      p.trajectories.push_back(trajectories[id]);
      p.energy += kinetic_energy<D>(trajectories[id].points.front().v);
    }
  }
  for (const auto& e : graph.edges) {
    paths[root_to_path[uf.find(e.i)]].edges.push_back(e);
  }
  for (auto& p : paths) classify_minimal<D>(p);
  return paths;
}

// Overlap graph over a family of cluster paths: one edge per overlapping path
// pair carrying the infimum contact time, the particle pair realising it and
// the contact direction. Paths may come from independent samples; for the
// paths of a single physical run the graph is empty by hard-core exclusion.
template <int D>
struct OverlapGraph {
  struct Edge {
    double tau;  // infimum contact time within the window
    int p, q;    // path indices, p < q
    int qi, qj;  // particle ids realising the contact
    Vec<D> omega;
    bool at_window_start;  // contact already holds at t0 (time-zero overlap)
  };
  int k = 0;
  std::vector<Edge> edges;
};

namespace detail {

template <int D>
struct PathBound {
  Vec<D> ref;
  double radius;
};

template <int D>
PathBound<D> path_bound(const ClusterPath<D>& path) {
  PathBound<D> b;
  b.ref = path.trajectories.front().points.front().x;
  b.radius = 0.0;
  for (const auto& tr : path.trajectories)
    for (const auto& pt : tr.points)
      b.radius = std::max(b.radius, torus_distance<D>(b.ref, pt.x));
  return b;
}

}  // namespace detail

template <int D>
OverlapGraph<D> detect_overlaps(const std::vector<ClusterPath<D>>& paths, double eps, double t0,
                                double t1) {
  OverlapGraph<D> og;
  og.k = static_cast<int>(paths.size());
  std::vector<detail::PathBound<D>> bounds;
  bounds.reserve(paths.size());
  for (const auto& p : paths) bounds.push_back(detail::path_bound<D>(p));
  for (int p = 0; p < og.k; ++p) {
    for (int q = p + 1; q < og.k; ++q) {
      // Paths whose bounding balls stay apart cannot come within eps.
      if (torus_distance<D>(bounds[p].ref, bounds[q].ref) >
          bounds[p].radius + bounds[q].radius + eps)
        continue;
      std::optional<ContactEvent<D>> earliest;
      for (const auto& ti : paths[p].trajectories) {
        for (const auto& tj : paths[q].trajectories) {
          const auto ev = first_contact_time<D>(ti, tj, eps, t0, t1);
          if (ev && (!earliest || ev->t < earliest->t)) earliest = ev;
        }
      }
      if (earliest) {
        og.edges.push_back({earliest->t, p, q, earliest->i, earliest->j, earliest->omega,
                            earliest->t <= t0});
      }
    }
  }
  return og;
}

struct AggregateClassification {
  bool connected = false;
  bool minimal = false;  // connected, simple tree, no time-zero overlaps
  int sign = 0;          // (-1)^(k-1) when minimal, else 0
};

// Connectivity of the overlap graph and minimal-aggregate classification;
// the ordered overlap tree (edges by infimum time) is returned when minimal.
template <int D>
std::pair<AggregateClassification, std::optional<std::vector<typename OverlapGraph<D>::Edge>>>
aggregate_connectivity(const OverlapGraph<D>& og) {
  AggregateClassification out;
  UnionFind uf(static_cast<std::size_t>(og.k));
  bool any_start = false;
  for (const auto& e : og.edges) {
    uf.unite(e.p, e.q);
    any_start = any_start || e.at_window_start;
  }
  out.connected = og.k > 0 && uf.count() == 1;
  out.minimal = out.connected && static_cast<int>(og.edges.size()) == og.k - 1 && !any_start;
  if (!out.minimal) return {out, std::nullopt};
  out.sign = (og.k - 1) % 2 == 0 ? 1 : -1;
  auto tree = og.edges;
  std::sort(tree.begin(), tree.end(), [](const auto& a, const auto& b) { return a.tau < b.tau; });
  return {out, tree};
}

}  // namespace clustergas
