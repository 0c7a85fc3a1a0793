#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "quarc/error.hpp"
#include "quarc/topology.hpp"

namespace quarc {

/// Simple undirected graph on local vertices 0..n-1. Each edge keeps a
/// caller-supplied id used for deterministic tie-breaking.
struct LocalGraph {
  struct LocalEdge {
    std::uint32_t u = 0;
    std::uint32_t v = 0;
    std::uint64_t id = 0;
  };

  std::vector<NodeId> nodes;  // local vertex -> network node id
  std::vector<LocalEdge> edges;

  std::size_t vertex_count() const { return nodes.size(); }

  static LocalGraph with_vertices(std::size_t n) {
    LocalGraph g;
    g.nodes.resize(n);
    std::iota(g.nodes.begin(), g.nodes.end(), NodeId{0});
    return g;
  }

  void add_edge(std::uint32_t u, std::uint32_t v, std::uint64_t id) {
    edges.push_back(LocalEdge{u, v, id});
  }

  /// adjacency[x] = list of (neighbour, edge index); only edges with
  /// alive[edge] set are included (all when `alive` is empty).
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adjacency(
      std::span<const char> alive = {}) const {
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> adj(nodes.size());
    for (std::uint32_t i = 0; i < edges.size(); ++i) {
      if (!alive.empty() && !alive[i]) continue;
      adj[edges[i].u].emplace_back(edges[i].v, i);
      adj[edges[i].v].emplace_back(edges[i].u, i);
    }
    return adj;
  }
};

/// Subgraph induced by `members` (any order); local vertices follow the
/// sorted member order, edge ids are the network edge ids.
inline LocalGraph induced_subgraph(const NetworkGraph& g, std::vector<NodeId> members) {
  std::sort(members.begin(), members.end());
  LocalGraph lg;
  lg.nodes = members;
  std::vector<std::int64_t> local(g.node_count(), -1);
  for (std::uint32_t i = 0; i < members.size(); ++i) local[members[i]] = i;
  for (std::uint32_t i = 0; i < members.size(); ++i)
    for (EdgeId e : g.incident(members[i])) {
      const NodeId other = g.edge(e).other(members[i]);
      if (local[other] > static_cast<std::int64_t>(i))
        lg.add_edge(i, static_cast<std::uint32_t>(local[other]), e);
    }
  std::sort(lg.edges.begin(), lg.edges.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return lg;
}

/// Component label per local vertex (labels 0.. in order of smallest vertex).
inline std::vector<std::uint32_t> component_labels(const LocalGraph& g,
                                                   std::span<const char> alive = {}) {
  const auto adj = g.adjacency(alive);
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> label(g.vertex_count(), kUnset);
  std::uint32_t next = 0;
  for (std::uint32_t s = 0; s < g.vertex_count(); ++s) {
    if (label[s] != kUnset) continue;
    label[s] = next;
    std::queue<std::uint32_t> frontier;
    frontier.push(s);
    while (!frontier.empty()) {
      const auto x = frontier.front();
      frontier.pop();
      for (auto [y, e] : adj[x])
        if (label[y] == kUnset) {
          label[y] = next;
          frontier.push(y);
        }
    }
    ++next;
  }
  return label;
}

inline std::size_t component_count(const LocalGraph& g, std::span<const char> alive = {}) {
  const auto labels = component_labels(g, alive);
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

/// Edge betweenness with unit edge lengths: for every edge, the sum over
/// ordered vertex pairs (s, t) of the fraction of shortest s-t paths that use
/// it (Brandes accumulation). Result is indexed like g.edges; dead edges get 0.
inline std::vector<double> edge_betweenness(const LocalGraph& g,
                                            std::span<const char> alive = {}) {
  const std::size_t n = g.vertex_count();
  std::vector<double> bc(g.edges.size(), 0.0);
  const auto adj = g.adjacency(alive);
  std::vector<double> sigma(n), delta(n);
  std::vector<int> dist(n);
  std::vector<std::uint32_t> order;
  order.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<std::uint32_t> frontier;
    frontier.push(s);
    while (!frontier.empty()) {
      const auto v = frontier.front();
      frontier.pop();
      order.push_back(v);
      for (auto [w, e] : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          frontier.push(w);
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const auto w = *it;
      for (auto [v, e] : adj[w]) {
        if (dist[v] != dist[w] - 1) continue;
        const double c = sigma[v] / sigma[w] * (1.0 + delta[w]);
        bc[e] += c;
        delta[v] += c;
      }
    }
  }
  return bc;
}

/// Splits `g` into exactly k vertex sets by repeatedly deleting a
/// maximum-betweenness edge (ties: smallest edge id), recomputing
/// betweenness after every deletion, until there are at least k components.
/// If the input already has more than k components, the smallest ones are
/// merged into their best-connected neighbour component until k remain.
/// Returned sets hold network node ids, sorted, ordered by smallest member.
inline std::vector<std::vector<NodeId>> girvan_newman(const LocalGraph& g, std::size_t k) {
  if (k == 0) throw InfeasibleSplit("split arity must be positive");
  if (g.vertex_count() < k)
    throw InfeasibleSplit("cannot split " + std::to_string(g.vertex_count()) +
                          " nodes into " + std::to_string(k) + " clusters");
  std::vector<char> alive(g.edges.size(), 1);
  std::vector<std::uint32_t> labels = component_labels(g, alive);
  auto count_of = [](const std::vector<std::uint32_t>& l) {
    return l.empty() ? std::size_t{0} : std::size_t{*std::max_element(l.begin(), l.end())} + 1;
  };
  std::size_t components = count_of(labels);

  // Betweenness decomposes over components, so only the component that just
  // lost an edge needs recomputing.
  std::vector<double> bc = edge_betweenness(g, alive);
  while (components < k) {
    std::int64_t best = -1;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      if (!alive[e]) continue;
      if (best < 0 || bc[e] > bc[best] + 1e-9 * std::max(1.0, bc[best]) ||
          (std::abs(bc[e] - bc[best]) <= 1e-9 * std::max(1.0, bc[best]) &&
           g.edges[e].id < g.edges[best].id))
        best = static_cast<std::int64_t>(e);
    }
    if (best < 0) break;  // no edges left; cannot happen while components < k <= n
    alive[best] = 0;
    bc[best] = 0.0;
    labels = component_labels(g, alive);
    components = count_of(labels);

    const auto a = labels[g.edges[best].u], b = labels[g.edges[best].v];
    std::vector<char> touched(g.edges.size(), 0);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const auto l = labels[g.edges[e].u];
      touched[e] = alive[e] && (l == a || l == b);
    }
    const auto fresh = edge_betweenness(g, touched);
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      if (touched[e]) bc[e] = fresh[e];
  }

  std::vector<std::vector<std::uint32_t>> groups(components);
  for (std::uint32_t v = 0; v < labels.size(); ++v) groups[labels[v]].push_back(v);

  while (groups.size() > k) {
    std::size_t smallest = 0;
    for (std::size_t i = 1; i < groups.size(); ++i)
      if (groups[i].size() < groups[smallest].size()) smallest = i;
    std::vector<std::uint32_t> group_of(g.vertex_count());
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (auto v : groups[i]) group_of[v] = static_cast<std::uint32_t>(i);
    std::vector<std::size_t> links(groups.size(), 0);
    for (const auto& e : g.edges) {
      const auto gu = group_of[e.u], gv = group_of[e.v];
      if (gu == smallest && gv != smallest) ++links[gv];
      if (gv == smallest && gu != smallest) ++links[gu];
    }
    std::size_t target = groups.size();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      if (i == smallest) continue;
      if (target == groups.size() || links[i] > links[target] ||
          (links[i] == links[target] && links[i] == 0 &&
           groups[i].size() < groups[target].size()))
        target = i;
    }
    groups[target].insert(groups[target].end(), groups[smallest].begin(),
                          groups[smallest].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(smallest));
  }

  std::vector<std::vector<NodeId>> out;
  for (const auto& grp : groups) {
    std::vector<NodeId> ids;
    for (auto v : grp) ids.push_back(g.nodes[v]);
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace quarc
