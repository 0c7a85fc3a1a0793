#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "quarc/clustering.hpp"
#include "quarc/error.hpp"
#include "quarc/rng.hpp"
#include "quarc/topology.hpp"

namespace quarc {

using RequestId = std::uint64_t;

struct Request {
  RequestId id = 0;
  NodeId source = 0;
  NodeId destination = 0;
  std::uint64_t arrival_slot = 0;
  bool operator==(const Request&) const = default;
};

/// Clusters C_0..C_k serving one request; source in C_0, destination in C_k.
struct ClusterPath {
  RequestId request = 0;
  std::vector<ClusterId> clusters;
  bool operator==(const ClusterPath&) const = default;
};

/// Directed, weighted graph over clusters. Arc A->B exists for adjacent
/// clusters and weighs |A| / channels(A, B). Vertices are clustering indices.
class ClusterGraph {
 public:
  struct Arc {
    std::size_t to = 0;
    double weight = 0.0;
  };

  ClusterGraph() = default;
  explicit ClusterGraph(const Clustering& clustering) : clustering_(&clustering) {
    arcs_.assign(clustering.size(), {});
    for (const auto& [key, channels] : clustering.adjacency()) {
      const auto a = clustering.index_of(key.first), b = clustering.index_of(key.second);
      const double ch = static_cast<double>(channels);
      arcs_[a].push_back(Arc{b, clustering.clusters()[a].members.size() / ch});
      arcs_[b].push_back(Arc{a, clustering.clusters()[b].members.size() / ch});
    }
    for (auto& out : arcs_)
      std::sort(out.begin(), out.end(), [](const Arc& x, const Arc& y) { return x.to < y.to; });
  }

  std::size_t vertex_count() const { return arcs_.size(); }
  const std::vector<Arc>& arcs(std::size_t from) const { return arcs_[from]; }
  const Clustering& clustering() const { return *clustering_; }

  /// Weight of arc A->B by cluster id, or nullopt when not adjacent.
  std::optional<double> weight(ClusterId from, ClusterId to) const {
    const auto a = clustering_->index_of(from), b = clustering_->index_of(to);
    for (const auto& arc : arcs_[a])
      if (arc.to == b) return arc.weight;
    return std::nullopt;
  }

  /// Dijkstra from cluster index `src` to `dst`, skipping vertices marked in
  /// `removed`. Returns the path as cluster indices, or empty if unreachable.
  /// Equal-distance ties resolve towards smaller indices.
  std::vector<std::size_t> shortest_path(std::size_t src, std::size_t dst,
                                         const std::vector<char>& removed) const {
    if (removed[src] || removed[dst]) return {};
    if (src == dst) return {src};
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(arcs_.size(), inf);
    std::vector<std::size_t> prev(arcs_.size(), arcs_.size());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[src] = 0.0;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
      const auto [d, x] = pq.top();
      pq.pop();
      if (d > dist[x]) continue;
      if (x == dst) break;
      for (const auto& arc : arcs_[x]) {
        if (removed[arc.to]) continue;
        const double nd = d + arc.weight;
        if (nd < dist[arc.to]) {
          dist[arc.to] = nd;
          prev[arc.to] = x;
          pq.emplace(nd, arc.to);
        }
      }
    }
    if (dist[dst] == inf) return {};
    std::vector<std::size_t> path;
    for (std::size_t x = dst; x != src; x = prev[x]) path.push_back(x);
    path.push_back(src);
    std::reverse(path.begin(), path.end());
    return path;
  }

 private:
  const Clustering* clustering_ = nullptr;
  std::vector<std::vector<Arc>> arcs_;
};

inline ClusterGraph cluster_graph(const Clustering& clustering) {
  return ClusterGraph(clustering);
}

struct PathSelection {
  std::vector<ClusterPath> served;
  std::vector<RequestId> skipped;
};

/// Serves requests oldest first. Each served request removes its clusters
/// from the working graph; a request with no path in what remains is
/// skipped for this slot.
inline PathSelection select_paths(std::span<const Request> queue, const ClusterGraph& cg) {
  const auto& clustering = cg.clustering();
  PathSelection sel;
  std::vector<char> removed(cg.vertex_count(), 0);
  for (const auto& req : queue) {
    if (req.source >= clustering.node_assignment().size() ||
        req.destination >= clustering.node_assignment().size())
      throw ConsistencyError("request endpoint is in no cluster");
    const auto src = clustering.index_of(clustering.cluster_of(req.source));
    const auto dst = clustering.index_of(clustering.cluster_of(req.destination));
    const auto path = cg.shortest_path(src, dst, removed);
    if (path.empty()) {
      sel.skipped.push_back(req.id);
      continue;
    }
    ClusterPath cp{req.id, {}};
    for (auto idx : path) {
      removed[idx] = 1;
      cp.clusters.push_back(clustering.clusters()[idx].id);
    }
    sel.served.push_back(std::move(cp));
  }
  return sel;
}

inline PathSelection select_paths(std::span<const Request> queue, const Clustering& clustering) {
  return select_paths(queue, ClusterGraph(clustering));
}

/// Which inter-cluster edges of a path take part in qubit assignment.
enum class EdgeSelection {
  kAllPathEdges,    // any two clusters of the path
  kConsecutiveOnly  // only C_i -- C_{i+1}
};

/// node -> position of its cluster in the path, or -1.
struct PathLayout {
  std::vector<int> position;
  std::size_t length = 0;  // k + 1

  static PathLayout of(const ClusterPath& path, const Clustering& clustering) {
    PathLayout layout;
    layout.position.assign(clustering.node_assignment().size(), -1);
    layout.length = path.clusters.size();
    for (std::size_t i = 0; i < path.clusters.size(); ++i)
      for (NodeId n : clustering.cluster(path.clusters[i]).members)
        layout.position[n] = static_cast<int>(i);
    return layout;
  }
};

/// The edge set of a path, ascending by id.
inline std::vector<EdgeId> path_edges(const PathLayout& layout, const NetworkGraph& g,
                                      EdgeSelection selection) {
  std::vector<EdgeId> out;
  for (const auto& e : g.edges()) {
    const int a = layout.position[e.u], b = layout.position[e.v];
    if (a < 0 || b < 0) continue;
    if (selection == EdgeSelection::kConsecutiveOnly && std::abs(a - b) > 1) continue;
    out.push_back(e.id);
  }
  return out;
}

struct QubitAssignment {
  std::vector<ChannelRef> assigned;           // ascending
  std::vector<ChannelRef> in_order;           // as taken
  std::vector<std::uint32_t> remaining_capacity;  // by node id
};

/// Randomized-priority assignment: each path edge draws a ~ U[0,1) and its
/// channel i gets priority a + i; channels are taken in ascending priority
/// whenever both endpoints still have a free qubit. Every edge is therefore
/// offered its first channel before any edge is offered a second.
inline QubitAssignment assign_qubits(std::span<const EdgeId> edges, const NetworkGraph& g,
                                     Rng& rng) {
  struct Prioritized {
    double priority;
    ChannelRef channel;
  };
  std::vector<Prioritized> order;
  for (EdgeId e : edges) {
    const double a = rng.uniform();
    for (std::uint32_t i = 0; i < g.edge(e).width(); ++i)
      order.push_back(Prioritized{a + i, ChannelRef{e, i}});
  }
  std::sort(order.begin(), order.end(), [](const Prioritized& x, const Prioritized& y) {
    return x.priority < y.priority || (x.priority == y.priority && x.channel < y.channel);
  });
  QubitAssignment qa;
  qa.remaining_capacity.reserve(g.node_count());
  for (const auto& n : g.nodes()) qa.remaining_capacity.push_back(n.qubit_capacity);
  auto take = [&](NodeId n) {
    if (qa.remaining_capacity[n] != kUnlimitedQubits) --qa.remaining_capacity[n];
  };
  for (const auto& item : order) {
    const auto& e = g.edge(item.channel.edge);
    if (qa.remaining_capacity[e.u] == 0 || qa.remaining_capacity[e.v] == 0) continue;
    take(e.u);
    take(e.v);
    qa.assigned.push_back(item.channel);
  }
  qa.in_order = qa.assigned;
  std::sort(qa.assigned.begin(), qa.assigned.end());
  return qa;
}

inline QubitAssignment assign_qubits(const ClusterPath& path, const NetworkGraph& g,
                                     const Clustering& clustering, Rng& rng,
                                     EdgeSelection selection = EdgeSelection::kAllPathEdges) {
  const auto layout = PathLayout::of(path, clustering);
  const auto edges = path_edges(layout, g, selection);
  return assign_qubits(edges, g, rng);
}

}  // namespace quarc
