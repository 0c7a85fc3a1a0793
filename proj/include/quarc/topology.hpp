#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "quarc/error.hpp"
#include "quarc/rng.hpp"

namespace quarc {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

/// Capacity sentinel treated as +inf by qubit assignment.
inline constexpr std::uint32_t kUnlimitedQubits =
    std::numeric_limits<std::uint32_t>::max();

struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

struct Node {
  NodeId id = 0;
  Position position;
  std::uint32_t qubit_capacity = 0;
  double fusion_prob = 1.0;
  bool operator==(const Node&) const = default;
};

/// One entanglement-generation resource: channel `index` of edge `edge`.
/// Ordered lexicographically; this is the "lowest id" order of the fusion
/// protocol.
struct ChannelRef {
  EdgeId edge = 0;
  std::uint32_t index = 0;
  auto operator<=>(const ChannelRef&) const = default;
};

struct Edge {
  EdgeId id = 0;
  NodeId u = 0;
  NodeId v = 0;
  double length = 1.0;
  std::vector<double> channel_probs;

  std::uint32_t width() const {
    return static_cast<std::uint32_t>(channel_probs.size());
  }
  bool touches(NodeId n) const { return u == n || v == n; }
  NodeId other(NodeId n) const { return n == u ? v : u; }
  bool operator==(const Edge&) const = default;
};

inline bool valid_probability(double p) { return p >= 0.0 && p <= 1.0; }

/// Undirected network of repeater nodes. Node and edge ids are dense
/// (0..n-1, 0..m-1) and equal to insertion order. At most one edge joins a
/// node pair; parallel channels are expressed by the edge width.
class NetworkGraph {
 public:
  NodeId add_node(Position position, std::uint32_t qubit_capacity,
                  double fusion_prob) {
    if (!valid_probability(fusion_prob))
      throw InvalidTopology("fusion probability outside [0,1]");
    const auto id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{id, position, qubit_capacity, fusion_prob});
    adjacency_.emplace_back();
    return id;
  }

  EdgeId add_edge(NodeId u, NodeId v, double length,
                  std::vector<double> channel_probs) {
    if (u >= nodes_.size() || v >= nodes_.size())
      throw InvalidTopology("edge endpoint is not a node of the graph");
    if (u == v) throw InvalidTopology("self-loop edges are not allowed");
    if (!(length > 0.0) || !std::isfinite(length))
      throw InvalidTopology("edge length must be positive and finite");
    if (channel_probs.empty())
      throw InvalidTopology("edge width must be at least 1");
    for (double p : channel_probs)
      if (!valid_probability(p))
        throw InvalidTopology("channel probability outside [0,1]");
    const auto key = ordered(u, v);
    if (edge_index_.contains(key))
      throw InvalidTopology("duplicate edge between nodes " +
                            std::to_string(u) + " and " + std::to_string(v));
    const auto id = static_cast<EdgeId>(edges_.size());
    edges_.push_back(Edge{id, u, v, length, std::move(channel_probs)});
    edge_index_.emplace(key, id);
    adjacency_[u].push_back(id);
    adjacency_[v].push_back(id);
    channel_count_ += edges_.back().width();
    return id;
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t channel_count() const { return channel_count_; }

  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Edge& edge(EdgeId id) const { return edges_.at(id); }
  std::span<const Node> nodes() const { return nodes_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const EdgeId> incident(NodeId id) const { return adjacency_.at(id); }
  std::size_t degree(NodeId id) const { return adjacency_.at(id).size(); }

  std::optional<EdgeId> find_edge(NodeId u, NodeId v) const {
    auto it = edge_index_.find(ordered(u, v));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }

  void set_channel_probs(EdgeId id, std::vector<double> probs) {
    auto& e = edges_.at(id);
    if (probs.size() != e.channel_probs.size())
      throw InvalidTopology("channel probability count must equal edge width");
    for (double p : probs)
      if (!valid_probability(p))
        throw InvalidTopology("channel probability outside [0,1]");
    e.channel_probs = std::move(probs);
  }

  void set_fusion_prob(NodeId id, double q) {
    if (!valid_probability(q))
      throw InvalidTopology("fusion probability outside [0,1]");
    nodes_.at(id).fusion_prob = q;
  }

  double mean_channel_prob() const {
    double sum = 0.0;
    for (const auto& e : edges_)
      for (double p : e.channel_probs) sum += p;
    return channel_count_ == 0 ? 0.0 : sum / static_cast<double>(channel_count_);
  }

  /// BFS hop distances from `source`; -1 marks unreachable nodes.
  std::vector<int> hop_distances_from(NodeId source) const {
    std::vector<int> dist(nodes_.size(), -1);
    std::queue<NodeId> frontier;
    dist.at(source) = 0;
    frontier.push(source);
    while (!frontier.empty()) {
      const NodeId x = frontier.front();
      frontier.pop();
      for (EdgeId e : adjacency_[x]) {
        const NodeId y = edges_[e].other(x);
        if (dist[y] < 0) {
          dist[y] = dist[x] + 1;
          frontier.push(y);
        }
      }
    }
    return dist;
  }

  bool connected() const {
    if (nodes_.empty()) return true;
    const auto d = hop_distances_from(0);
    return std::none_of(d.begin(), d.end(), [](int x) { return x < 0; });
  }

  bool operator==(const NetworkGraph& o) const {
    return nodes_ == o.nodes_ && edges_ == o.edges_;
  }

 private:
  static std::pair<NodeId, NodeId> ordered(NodeId u, NodeId v) {
    return u < v ? std::pair{u, v} : std::pair{v, u};
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeId>> adjacency_;
  std::map<std::pair<NodeId, NodeId>, EdgeId> edge_index_;
  std::size_t channel_count_ = 0;
};

/// side x side 4-neighbour grid. Node (row r, column c) has id r*side + c and
/// position (c, r); every edge has length 1.
inline NetworkGraph make_grid(std::uint32_t side, std::uint32_t width,
                              std::uint32_t qubits_per_node, double p,
                              double q) {
  if (side < 2) throw InvalidTopology("grid side must be at least 2");
  if (width < 1) throw InvalidTopology("grid edge width must be at least 1");
  if (!valid_probability(p) || !valid_probability(q))
    throw InvalidTopology("grid probabilities must lie in [0,1]");
  NetworkGraph g;
  for (std::uint32_t r = 0; r < side; ++r)
    for (std::uint32_t c = 0; c < side; ++c)
      g.add_node(Position{static_cast<double>(c), static_cast<double>(r)},
                 qubits_per_node, q);
  const std::vector<double> probs(width, p);
  for (std::uint32_t r = 0; r < side; ++r) {
    for (std::uint32_t c = 0; c < side; ++c) {
      const NodeId id = r * side + c;
      if (c + 1 < side) g.add_edge(id, id + 1, 1.0, probs);
      if (r + 1 < side) g.add_edge(id, id + side, 1.0, probs);
    }
  }
  return g;
}

/// Mean over all channels of exp(-alpha * length(edge)).
inline double mean_channel_prob_for_alpha(const NetworkGraph& g, double alpha) {
  double sum = 0.0;
  for (const auto& e : g.edges()) sum += e.width() * std::exp(-alpha * e.length);
  return sum / static_cast<double>(g.channel_count());
}

/// Solves mean_c exp(-alpha L_c) = mean_p for alpha by monotone bisection.
inline double solve_alpha(const NetworkGraph& g, double mean_p) {
  if (!(mean_p > 0.0 && mean_p < 1.0))
    throw DomainError("mean channel probability must lie in (0,1)");
  if (g.channel_count() == 0) throw DomainError("graph has no channels");
  double lo = 0.0;
  double hi = 1.0;
  while (mean_channel_prob_for_alpha(g, hi) > mean_p) {
    hi *= 2.0;
    if (hi > 1e300) throw DomainError("alpha bisection failed to bracket");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double f = mean_channel_prob_for_alpha(g, mid);
    if (f > mean_p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Sets every channel to exp(-alpha * length) with alpha chosen so that the
/// mean channel probability equals mean_p. Returns alpha.
inline double calibrate_alpha(NetworkGraph& g, double mean_p) {
  const double alpha = solve_alpha(g, mean_p);
  for (const auto& e : g.edges()) {
    const EdgeId id = e.id;
    const double p = std::exp(-alpha * e.length);
    g.set_channel_probs(id, std::vector<double>(e.width(), p));
  }
  return alpha;
}

struct IntRange {
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  bool operator==(const IntRange&) const = default;
};

struct WaxmanParams {
  std::uint32_t n = 100;
  double target_avg_degree = 6.0;
  IntRange qubit_range{10, 14};
  IntRange width_range{3, 7};
  double mean_p = 0.6;
  double q = 0.9;
  std::uint64_t seed = 1;
  // Waxman shape parameters; a scale factor on top of beta is tuned to hit
  // the degree target.
  double alpha_w = 0.4;
  double beta_w = 0.4;
  double degree_tolerance = 0.05;
  int max_attempts = 100;
  bool operator==(const WaxmanParams&) const = default;
};

namespace detail {

inline double waxman_expected_degree(const std::vector<double>& base_probs,
                                     double scale, std::uint32_t n) {
  double sum = 0.0;
  for (double b : base_probs) sum += std::min(1.0, scale * b);
  return 2.0 * sum / n;
}

}  // namespace detail

/// Random geometric Waxman topology in the unit square. Each attempt draws
/// fresh positions and edges from its own sub-seed; attempts whose realized
/// average degree misses the target tolerance or that are disconnected are
/// discarded.
inline NetworkGraph make_waxman(const WaxmanParams& wp) {
  if (wp.n < 2) throw InvalidTopology("waxman graph needs at least 2 nodes");
  if (!(wp.target_avg_degree > 0.0))
    throw InvalidTopology("target average degree must be positive");
  if (wp.qubit_range.lo > wp.qubit_range.hi || wp.width_range.lo > wp.width_range.hi ||
      wp.width_range.lo < 1)
    throw InvalidTopology("invalid qubit or width range");
  if (!valid_probability(wp.q)) throw InvalidTopology("q outside [0,1]");
  if (wp.target_avg_degree > static_cast<double>(wp.n - 1))
    throw CalibrationFailure("average degree target exceeds n-1");

  const std::uint32_t n = wp.n;
  for (int attempt = 0; attempt < wp.max_attempts; ++attempt) {
    Rng rng(wp.seed, {static_cast<std::uint64_t>(Stream::kTopology),
                      static_cast<std::uint64_t>(attempt)});
    std::vector<Position> pos(n);
    for (auto& p : pos) {
      p.x = rng.uniform();
      p.y = rng.uniform();
    }
    double max_dist = 0.0;
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) {
        const double d = std::hypot(pos[i].x - pos[j].x, pos[i].y - pos[j].y);
        dist.push_back(d);
        max_dist = std::max(max_dist, d);
      }
    if (!(max_dist > 0.0)) continue;
    std::vector<double> base(dist.size());
    for (std::size_t k = 0; k < dist.size(); ++k)
      base[k] = wp.beta_w * std::exp(-dist[k] / (wp.alpha_w * max_dist));

    // Expected degree is monotone in the scale; bisect so the expectation
    // matches the target exactly.
    double lo = 0.0, hi = 1.0;
    while (detail::waxman_expected_degree(base, hi, n) < wp.target_avg_degree) {
      hi *= 2.0;
      if (hi > 1e12) throw CalibrationFailure("average degree target unattainable");
    }
    for (int iter = 0; iter < 100; ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (detail::waxman_expected_degree(base, mid, n) < wp.target_avg_degree)
        lo = mid;
      else
        hi = mid;
    }
    const double scale = hi;

    std::vector<std::pair<NodeId, NodeId>> picked;
    std::size_t k = 0;
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j, ++k)
        if (rng.bernoulli(std::min(1.0, scale * base[k]))) picked.emplace_back(i, j);

    const double realized = 2.0 * static_cast<double>(picked.size()) / n;
    if (std::abs(realized - wp.target_avg_degree) >
        wp.degree_tolerance * wp.target_avg_degree)
      continue;

    NetworkGraph g;
    for (std::uint32_t i = 0; i < n; ++i) {
      const auto qubits = static_cast<std::uint32_t>(
          rng.uniform_int(wp.qubit_range.lo, wp.qubit_range.hi));
      g.add_node(pos[i], qubits, wp.q);
    }
    for (auto [u, v] : picked) {
      const auto width = static_cast<std::uint32_t>(
          rng.uniform_int(wp.width_range.lo, wp.width_range.hi));
      const double len = std::hypot(pos[u].x - pos[v].x, pos[u].y - pos[v].y);
      g.add_edge(u, v, len, std::vector<double>(width, 1.0));
    }
    if (!g.connected()) continue;
    calibrate_alpha(g, wp.mean_p);
    return g;
  }
  throw CalibrationFailure("no connected waxman draw within degree tolerance after " +
                           std::to_string(wp.max_attempts) + " attempts");
}

/// Node groups of b x b square blocks of a make_grid(side, ...) network.
inline std::vector<std::vector<NodeId>> grid_block_partition(std::uint32_t side,
                                                             std::uint32_t block) {
  if (block == 0 || side % block != 0)
    throw DomainError("block side " + std::to_string(block) +
                      " does not divide grid side " + std::to_string(side));
  const std::uint32_t per_row = side / block;
  std::vector<std::vector<NodeId>> parts(per_row * per_row);
  for (std::uint32_t r = 0; r < side; ++r)
    for (std::uint32_t c = 0; c < side; ++c)
      parts[(r / block) * per_row + (c / block)].push_back(r * side + c);
  return parts;
}

}  // namespace quarc
