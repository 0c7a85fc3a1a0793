#pragma once

// Small random networks, partitions and sampled slot outcomes for
// property-style tests.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "quarc/clustering.hpp"
#include "quarc/community.hpp"
#include "quarc/percolation.hpp"
#include "quarc/rng.hpp"
#include "quarc/routing.hpp"
#include "quarc/schedule.hpp"
#include "quarc/topology.hpp"

namespace testing_support {

using namespace quarc;

inline std::uint32_t pick(Rng& rng, std::uint32_t lo, std::uint32_t hi) {
  return static_cast<std::uint32_t>(rng.uniform_int(lo, hi));
}

/// Connected graph: random spanning tree plus extra edges with probability
/// `extra`. Widths uniform in [1, max_width].
inline NetworkGraph random_connected_graph(Rng& rng, std::uint32_t n, std::uint32_t max_width,
                                           double extra = 0.3,
                                           std::uint32_t qubits = kUnlimitedQubits) {
  NetworkGraph g;
  for (std::uint32_t i = 0; i < n; ++i) g.add_node({rng.uniform(), rng.uniform()}, qubits, 1.0);
  auto add = [&](NodeId u, NodeId v) {
    const auto w = pick(rng, 1, max_width);
    g.add_edge(u, v, 1.0, std::vector<double>(w, 1.0));
  };
  for (std::uint32_t i = 1; i < n; ++i) add(pick(rng, 0, i - 1), i);
  for (std::uint32_t u = 0; u < n; ++u)
    for (std::uint32_t v = u + 1; v < n; ++v)
      if (!g.find_edge(u, v) && rng.bernoulli(extra)) add(u, v);
  return g;
}

/// Same shape as a LocalGraph (vertices 0..n-1, edge ids in insertion order).
inline LocalGraph random_local_graph(Rng& rng, std::uint32_t n, double extra, bool connected) {
  LocalGraph g = LocalGraph::with_vertices(n);
  std::uint64_t id = 0;
  std::vector<std::vector<char>> has(n, std::vector<char>(n, 0));
  auto add = [&](std::uint32_t u, std::uint32_t v) {
    if (u == v || has[u][v]) return;
    has[u][v] = has[v][u] = 1;
    g.add_edge(u, v, id++);
  };
  if (connected)
    for (std::uint32_t i = 1; i < n; ++i) add(pick(rng, 0, i - 1), i);
  for (std::uint32_t u = 0; u < n; ++u)
    for (std::uint32_t v = u + 1; v < n; ++v)
      if (rng.bernoulli(extra)) add(u, v);
  return g;
}

/// Partition into `parts` connected clusters grown from random seeds.
inline std::vector<std::vector<NodeId>> random_connected_partition(const NetworkGraph& g,
                                                                   Rng& rng,
                                                                   std::uint32_t parts) {
  const auto n = static_cast<std::uint32_t>(g.node_count());
  parts = std::clamp<std::uint32_t>(parts, 1, n);
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> owner(n, -1);
  std::vector<std::vector<NodeId>> out(parts);
  for (std::uint32_t i = 0; i < parts; ++i) {
    owner[order[i]] = static_cast<int>(i);
    out[i].push_back(order[i]);
  }
  std::uint32_t assigned = parts;
  while (assigned < n) {
    // A random frontier edge extends its owner's cluster.
    std::vector<std::pair<NodeId, int>> frontier;
    for (const auto& e : g.edges()) {
      if (owner[e.u] >= 0 && owner[e.v] < 0) frontier.emplace_back(e.v, owner[e.u]);
      if (owner[e.v] >= 0 && owner[e.u] < 0) frontier.emplace_back(e.u, owner[e.v]);
    }
    const auto& [node, who] = frontier[pick(rng, 0, static_cast<std::uint32_t>(frontier.size()) - 1)];
    owner[node] = who;
    out[who].push_back(node);
    ++assigned;
  }
  return out;
}

/// One request served on a random clustering with random channel and
/// fusion probabilities; keeps everything the oracles need.
struct Scenario {
  NetworkGraph graph;
  Clustering clustering;
  NodeId source = 0;
  NodeId destination = 0;
  ClusterPath path;
  PathLayout layout;
  std::vector<std::vector<NodeId>> path_members;
  QubitAssignment assignment;
  EffectiveParams params;
};

inline Scenario random_scenario(Rng& rng, std::uint32_t max_nodes, std::uint32_t max_width,
                                EdgeSelection selection = EdgeSelection::kAllPathEdges) {
  Scenario sc;
  const auto n = pick(rng, 2, max_nodes);
  sc.graph = random_connected_graph(rng, n, max_width, 0.25,
                                    rng.bernoulli(0.5) ? kUnlimitedQubits : pick(rng, 1, 6));
  sc.clustering = Clustering::from_partition(
      sc.graph, random_connected_partition(sc.graph, rng, pick(rng, 1, std::min(n, 5u))));
  sc.source = pick(rng, 0, n - 1);
  do sc.destination = pick(rng, 0, n - 1);
  while (sc.destination == sc.source);
  const Request req{0, sc.source, sc.destination, 0};
  const auto sel = select_paths(std::span<const Request>(&req, 1), sc.clustering);
  sc.path = sel.served.at(0);
  sc.layout = PathLayout::of(sc.path, sc.clustering);
  for (auto id : sc.path.clusters) sc.path_members.push_back(sc.clustering.cluster(id).members);
  sc.assignment = assign_qubits(sc.path, sc.graph, sc.clustering, rng, selection);
  sc.params = base_params(sc.graph);
  for (auto& probs : sc.params.channel_probs)
    for (auto& p : probs) p = rng.uniform(0.2, 1.0);
  for (auto& q : sc.params.fusion_probs) q = rng.uniform(0.3, 1.0);
  return sc;
}

}  // namespace testing_support
