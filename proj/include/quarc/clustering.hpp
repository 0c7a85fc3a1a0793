#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "quarc/error.hpp"
#include "quarc/topology.hpp"

namespace quarc {

using ClusterId = std::uint32_t;

struct Cluster {
  ClusterId id = 0;
  std::vector<NodeId> members;  // sorted ascending
  bool operator==(const Cluster&) const = default;
};

/// Per-epoch passing statistics of one cluster.
struct ClusterStats {
  std::uint64_t attempts = 0;
  std::uint64_t passes = 0;

  bool has_rate() const { return attempts > 0; }
  double rate() const {
    return attempts == 0 ? 0.0 : static_cast<double>(passes) / static_cast<double>(attempts);
  }
  bool operator==(const ClusterStats&) const = default;
};

/// True if `members` induce a connected subgraph of `g`.
inline bool induces_connected(const NetworkGraph& g, const std::vector<NodeId>& members) {
  if (members.empty()) return false;
  std::vector<char> in(g.node_count(), 0), seen(g.node_count(), 0);
  for (NodeId n : members) in[n] = 1;
  std::queue<NodeId> frontier;
  frontier.push(members.front());
  seen[members.front()] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const NodeId x = frontier.front();
    frontier.pop();
    for (EdgeId e : g.incident(x)) {
      const NodeId y = g.edge(e).other(x);
      if (in[y] && !seen[y]) {
        seen[y] = 1;
        ++reached;
        frontier.push(y);
      }
    }
  }
  return reached == members.size();
}

/// Partition of the network's nodes into clusters, with the induced
/// cluster-adjacency (channel counts between clusters). Immutable once built.
class Clustering {
 public:
  Clustering() = default;

  /// Builds from explicit clusters. Throws unless the clusters partition
  /// the node set; with `require_connected`, each cluster must also induce a
  /// connected subgraph.
  static Clustering from_clusters(const NetworkGraph& g, std::vector<Cluster> clusters,
                                  bool require_connected = true,
                                  ClusterId next_id_floor = 0) {
    Clustering c;
    c.next_id_ = next_id_floor;
    c.node_of_.assign(g.node_count(), kNone);
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      auto& cl = clusters[i];
      if (cl.members.empty()) throw ConsistencyError("empty cluster");
      if (i > 0 && clusters[i - 1].id == cl.id) throw ConsistencyError("duplicate cluster id");
      std::sort(cl.members.begin(), cl.members.end());
      for (NodeId n : cl.members) {
        if (n >= g.node_count()) throw ConsistencyError("cluster member is not a node");
        if (c.node_of_[n] != kNone)
          throw ConsistencyError("node " + std::to_string(n) + " is in two clusters");
        c.node_of_[n] = cl.id;
      }
      if (require_connected && !induces_connected(g, cl.members))
        throw ConsistencyError("cluster " + std::to_string(cl.id) + " is not connected");
      c.index_.emplace(cl.id, i);
      c.next_id_ = std::max(c.next_id_, cl.id + 1);
    }
    for (std::size_t n = 0; n < c.node_of_.size(); ++n)
      if (c.node_of_[n] == kNone)
        throw ConsistencyError("node " + std::to_string(n) + " is in no cluster");
    c.clusters_ = std::move(clusters);
    c.neighbors_.assign(c.clusters_.size(), {});
    for (const auto& e : g.edges()) {
      const ClusterId a = c.node_of_[e.u], b = c.node_of_[e.v];
      if (a == b) continue;
      c.channels_[std::minmax(a, b)] += e.width();
    }
    for (const auto& [key, count] : c.channels_) {
      c.neighbors_[c.index_.at(key.first)].push_back(key.second);
      c.neighbors_[c.index_.at(key.second)].push_back(key.first);
    }
    for (auto& nb : c.neighbors_) std::sort(nb.begin(), nb.end());
    return c;
  }

  /// Clusters numbered 0.. in the order given.
  static Clustering from_partition(const NetworkGraph& g,
                                   const std::vector<std::vector<NodeId>>& parts,
                                   bool require_connected = true) {
    std::vector<Cluster> cl;
    for (std::size_t i = 0; i < parts.size(); ++i)
      cl.push_back(Cluster{static_cast<ClusterId>(i), parts[i]});
    return from_clusters(g, std::move(cl), require_connected);
  }

  static Clustering whole(const NetworkGraph& g) {
    std::vector<NodeId> all(g.node_count());
    for (NodeId n = 0; n < all.size(); ++n) all[n] = n;
    return from_partition(g, {all}, false);
  }

  static Clustering singletons(const NetworkGraph& g) {
    std::vector<std::vector<NodeId>> parts;
    for (NodeId n = 0; n < g.node_count(); ++n) parts.push_back({n});
    return from_partition(g, parts);
  }

  const std::vector<Cluster>& clusters() const { return clusters_; }
  std::size_t size() const { return clusters_.size(); }
  bool contains(ClusterId id) const { return index_.contains(id); }
  const Cluster& cluster(ClusterId id) const { return clusters_[index_.at(id)]; }
  std::size_t index_of(ClusterId id) const { return index_.at(id); }
  ClusterId cluster_of(NodeId n) const { return node_of_.at(n); }
  const std::vector<ClusterId>& node_assignment() const { return node_of_; }
  ClusterId next_id() const { return next_id_; }

  /// Sum of widths of edges with one endpoint in each cluster.
  std::uint32_t channels_between(ClusterId a, ClusterId b) const {
    auto it = channels_.find(std::minmax(a, b));
    return it == channels_.end() ? 0 : it->second;
  }
  const std::map<std::pair<ClusterId, ClusterId>, std::uint32_t>& adjacency() const {
    return channels_;
  }
  /// Adjacent cluster ids, ascending.
  const std::vector<ClusterId>& neighbors(ClusterId id) const {
    return neighbors_[index_.at(id)];
  }

  /// Canonical form: clusters as sorted member lists, ordered by smallest
  /// member. Ignores cluster ids.
  std::vector<std::vector<NodeId>> partition() const {
    std::vector<std::vector<NodeId>> parts;
    for (const auto& c : clusters_) parts.push_back(c.members);
    std::sort(parts.begin(), parts.end());
    return parts;
  }

  bool operator==(const Clustering& o) const { return clusters_ == o.clusters_; }

 private:
  static constexpr ClusterId kNone = static_cast<ClusterId>(-1);

  std::vector<Cluster> clusters_;
  std::map<ClusterId, std::size_t> index_;
  std::vector<ClusterId> node_of_;
  std::map<std::pair<ClusterId, ClusterId>, std::uint32_t> channels_;
  std::vector<std::vector<ClusterId>> neighbors_;
  ClusterId next_id_ = 0;
};

}  // namespace quarc
