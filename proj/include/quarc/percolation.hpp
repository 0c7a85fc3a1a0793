#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "quarc/error.hpp"
#include "quarc/rng.hpp"
#include "quarc/routing.hpp"
#include "quarc/schedule.hpp"
#include "quarc/topology.hpp"

namespace quarc {

struct LinkSample {
  ChannelRef channel;
  bool success = false;
  bool operator==(const LinkSample&) const = default;
};

struct FusionAttempt {
  NodeId node = 0;
  std::vector<ChannelRef> links;
  bool success = false;
  std::uint32_t tier = 1;  // 1 = primary, >= 2 secondary
  bool operator==(const FusionAttempt&) const = default;
};

/// Link sets fused together at one node, in round order.
using FusionPlan = std::vector<std::vector<ChannelRef>>;

/// One independent Bernoulli(p_c) draw per assigned channel, in channel order.
inline std::vector<LinkSample> sample_links(std::span<const ChannelRef> assigned,
                                            const EffectiveParams& params, Rng& rng) {
  std::vector<LinkSample> out;
  out.reserve(assigned.size());
  for (const auto& c : assigned) out.push_back(LinkSample{c, rng.bernoulli(params.channel_prob(c))});
  return out;
}

inline std::vector<LinkSample> sample_links(const QubitAssignment& qa,
                                            const EffectiveParams& params, Rng& rng) {
  return sample_links(qa.assigned, params, rng);
}

/// Greedy local fusion rounds at one node. Each round takes the lowest
/// remaining successful link of every incident edge. A round that would
/// leave exactly one link behind absorbs it, and a round that draws from a
/// single edge only is folded into the previous set, so no set has fewer
/// than two links. Zero or one input link gives an empty plan.
inline FusionPlan fusion_plan(std::span<const ChannelRef> links) {
  if (links.size() < 2) return {};
  std::map<EdgeId, std::vector<std::uint32_t>> by_edge;
  for (const auto& c : links) by_edge[c.edge].push_back(c.index);
  for (auto& [e, idx] : by_edge) std::sort(idx.begin(), idx.end(), std::greater<>());

  std::size_t remaining = links.size();
  FusionPlan plan;
  bool pending_singleton = false;  // plan.back() is a lone single-edge round
  while (remaining > 0) {
    std::vector<ChannelRef> round;
    for (auto& [e, idx] : by_edge) {
      if (idx.empty()) continue;
      round.push_back(ChannelRef{e, idx.back()});
      idx.pop_back();
    }
    remaining -= round.size();
    if (remaining == 1) {
      for (auto& [e, idx] : by_edge)
        if (!idx.empty()) {
          round.push_back(ChannelRef{e, idx.back()});
          idx.pop_back();
        }
      remaining = 0;
    }
    if (round.size() >= 2 && !pending_singleton) {
      plan.push_back(std::move(round));
    } else if (!plan.empty()) {
      plan.back().insert(plan.back().end(), round.begin(), round.end());
      pending_singleton = plan.back().size() < 2;
    } else {
      plan.push_back(std::move(round));
      pending_singleton = plan.back().size() < 2;
    }
  }
  return plan;
}

inline FusionPlan fusion_plan(NodeId /*node*/, std::span<const ChannelRef> links) {
  return fusion_plan(links);
}

/// Fusion plans of every node touching at least two successful links,
/// ascending by node id.
inline std::vector<std::pair<NodeId, FusionPlan>> plan_fusions(
    const NetworkGraph& g, std::span<const LinkSample> links) {
  std::map<NodeId, std::vector<ChannelRef>> at;
  for (const auto& l : links) {
    if (!l.success) continue;
    const auto& e = g.edge(l.channel.edge);
    at[e.u].push_back(l.channel);
    at[e.v].push_back(l.channel);
  }
  std::vector<std::pair<NodeId, FusionPlan>> out;
  for (auto& [node, incident] : at) {
    std::sort(incident.begin(), incident.end());
    auto plan = fusion_plan(incident);
    if (!plan.empty()) out.emplace_back(node, std::move(plan));
  }
  return out;
}

/// One Bernoulli(q_node) draw per planned set; tier is the set's round
/// index (1-based) within its node's plan.
inline std::vector<FusionAttempt> sample_fusions(
    const std::vector<std::pair<NodeId, FusionPlan>>& plans, const EffectiveParams& params,
    Rng& rng) {
  std::vector<FusionAttempt> out;
  for (const auto& [node, plan] : plans)
    for (std::size_t i = 0; i < plan.size(); ++i)
      out.push_back(FusionAttempt{node, plan[i], rng.bernoulli(params.fusion_prob(node)),
                                  static_cast<std::uint32_t>(i + 1)});
  return out;
}

/// Vertices are successful links; a successful fusion of link set F at a
/// node joins every pair of links in F.
class LinkGraph {
 public:
  struct Vertex {
    ChannelRef channel;
    NodeId u = 0;
    NodeId v = 0;
    bool touches(NodeId n) const { return u == n || v == n; }
  };
  using Arc = std::pair<std::uint32_t, std::uint32_t>;

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Arc>& arcs() const { return arcs_; }

  std::optional<std::uint32_t> index_of(ChannelRef c) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), c,
                               [](const Vertex& v, ChannelRef x) { return v.channel < x; });
    if (it == vertices_.end() || it->channel != c) return std::nullopt;
    return static_cast<std::uint32_t>(it - vertices_.begin());
  }

  /// Component representative per vertex; `keep` (if non-empty) restricts
  /// the graph to marked vertices, unmarked ones get their own index.
  std::vector<std::uint32_t> components(std::span<const char> keep = {}) const {
    std::vector<std::uint32_t> parent(vertices_.size());
    std::iota(parent.begin(), parent.end(), 0u);
    auto find = [&](std::uint32_t x) {
      while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
      }
      return x;
    };
    for (const auto& [a, b] : arcs_) {
      if (!keep.empty() && (!keep[a] || !keep[b])) continue;
      const auto ra = find(a), rb = find(b);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
    for (std::uint32_t i = 0; i < parent.size(); ++i) parent[i] = find(i);
    return parent;
  }

 private:
  friend LinkGraph build_link_graph(const NetworkGraph&, std::span<const LinkSample>,
                                    std::span<const FusionAttempt>);
  std::vector<Vertex> vertices_;  // ascending by channel
  std::vector<Arc> arcs_;
};

inline LinkGraph build_link_graph(const NetworkGraph& g, std::span<const LinkSample> links,
                                  std::span<const FusionAttempt> fusions) {
  LinkGraph lg;
  for (const auto& l : links) {
    if (!l.success) continue;
    const auto& e = g.edge(l.channel.edge);
    if (l.channel.index >= e.width()) throw ConsistencyError("channel index exceeds edge width");
    lg.vertices_.push_back(LinkGraph::Vertex{l.channel, e.u, e.v});
  }
  std::sort(lg.vertices_.begin(), lg.vertices_.end(),
            [](const auto& a, const auto& b) { return a.channel < b.channel; });
  for (std::size_t i = 1; i < lg.vertices_.size(); ++i)
    if (lg.vertices_[i - 1].channel == lg.vertices_[i].channel)
      throw ConsistencyError("channel sampled twice");
  for (const auto& f : fusions) {
    if (!f.success) continue;
    std::vector<std::uint32_t> idx;
    for (const auto& c : f.links) {
      const auto i = lg.index_of(c);
      if (!i) throw ConsistencyError("fusion references a link that did not succeed");
      if (!lg.vertices_[*i].touches(f.node))
        throw ConsistencyError("fusion references a link not incident to its node");
      idx.push_back(*i);
    }
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        lg.arcs_.emplace_back(idx[a], idx[b]);
  }
  return lg;
}

/// True iff one component holds a link incident to S and a link incident
/// to D (possibly the same link).
inline bool end_to_end_success(const LinkGraph& lg, NodeId source, NodeId destination) {
  const auto comp = lg.components();
  std::vector<char> from_source(comp.size(), 0);
  const auto& vs = lg.vertices();
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (vs[i].touches(source)) from_source[comp[i]] = 1;
  for (std::size_t i = 0; i < vs.size(); ++i)
    if (vs[i].touches(destination) && from_source[comp[i]]) return true;
  return false;
}

/// Whether path cluster i connected its entry side to its exit side. Only
/// links with both ends in C_{i-1}, C_i or C_{i+1} are kept (C_{-1} = {S},
/// C_{k+1} = {D}). Entry links touch C_{i-1} (S when i = 0); exit links
/// touch C_{i+1} (D when i = k).
inline bool cluster_pass(const LinkGraph& lg, const PathLayout& layout, NodeId source,
                         NodeId destination, std::size_t i) {
  if (i >= layout.length) throw DomainError("cluster index outside the path");
  const int me = static_cast<int>(i);
  const int last = static_cast<int>(layout.length) - 1;
  auto in_window = [&](NodeId n) {
    const int p = layout.position[n];
    return (p >= 0 && p >= me - 1 && p <= me + 1) || (me == 0 && n == source) ||
           (me == last && n == destination);
  };
  auto is_entry = [&](const LinkGraph::Vertex& v) {
    if (me == 0) return v.touches(source);
    return layout.position[v.u] == me - 1 || layout.position[v.v] == me - 1;
  };
  auto is_exit = [&](const LinkGraph::Vertex& v) {
    if (me == last) return v.touches(destination);
    return layout.position[v.u] == me + 1 || layout.position[v.v] == me + 1;
  };
  const auto& vs = lg.vertices();
  std::vector<char> keep(vs.size(), 0);
  for (std::size_t j = 0; j < vs.size(); ++j) keep[j] = in_window(vs[j].u) && in_window(vs[j].v);
  const auto comp = lg.components(keep);
  std::vector<char> entered(vs.size(), 0);
  for (std::size_t j = 0; j < vs.size(); ++j)
    if (keep[j] && is_entry(vs[j])) entered[comp[j]] = 1;
  for (std::size_t j = 0; j < vs.size(); ++j)
    if (keep[j] && is_exit(vs[j]) && entered[comp[j]]) return true;
  return false;
}

/// Everything sampled for one serviced request in one slot.
struct SlotOutcome {
  std::vector<LinkSample> links;
  std::vector<FusionAttempt> fusions;
  bool success = false;
  std::vector<bool> passes;  // per path cluster
};

/// Link sampling, fusion and percolation checks for one assigned path.
inline SlotOutcome percolate(const NetworkGraph& g, const PathLayout& layout,
                             const QubitAssignment& qa, const EffectiveParams& params,
                             NodeId source, NodeId destination, Rng& link_rng, Rng& fusion_rng) {
  SlotOutcome out;
  out.links = sample_links(qa, params, link_rng);
  const auto plans = plan_fusions(g, out.links);
  out.fusions = sample_fusions(plans, params, fusion_rng);
  const auto lg = build_link_graph(g, out.links, out.fusions);
  out.success = end_to_end_success(lg, source, destination);
  out.passes.reserve(layout.length);
  for (std::size_t i = 0; i < layout.length; ++i)
    out.passes.push_back(cluster_pass(lg, layout, source, destination, i));
  return out;
}

}  // namespace quarc
