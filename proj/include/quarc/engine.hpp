#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "quarc/clustering.hpp"
#include "quarc/error.hpp"
#include "quarc/metrics.hpp"
#include "quarc/percolation.hpp"
#include "quarc/reconfigure.hpp"
#include "quarc/rng.hpp"
#include "quarc/routing.hpp"
#include "quarc/schedule.hpp"
#include "quarc/thresholds.hpp"
#include "quarc/topology.hpp"

namespace quarc {

enum class ClusteringMode { kAdaptive, kStatic };

/// Source-destination distribution of new requests.
struct RequestDistribution {
  enum class Kind { kUniform, kBimodal };
  Kind kind = Kind::kUniform;
  // Bimodal: `near_share` of requests at hop distance near*diameter, the
  // rest at far*diameter.
  double near = 0.25;
  double far = 0.75;
  double near_share = 0.5;
  bool operator==(const RequestDistribution&) const = default;
};

struct SimulationConfig {
  std::shared_ptr<const NetworkGraph> graph;
  ParameterSchedule schedule;
  ClusteringMode mode = ClusteringMode::kAdaptive;
  /// Initial (adaptive) or fixed (static) partition; empty = one cluster.
  std::vector<std::vector<NodeId>> partition;
  std::optional<ThresholdTable> thresholds;  // required when adaptive
  ReconfigConfig reconfig;
  std::uint32_t queue_capacity = 10;
  RequestDistribution requests;
  EdgeSelection edge_selection = EdgeSelection::kAllPathEdges;
  std::uint64_t slots = 0;
  std::uint64_t seed = 1;
};

/// One serviced request within a slot.
struct ServedRequest {
  Request request;
  ClusterPath path;
  QubitAssignment assignment;
  SlotOutcome outcome;
};

/// Everything decided in one slot; handed to observers before satisfied
/// requests leave the queue.
struct SlotEvent {
  std::uint64_t slot = 0;
  std::uint64_t epoch = 0;
  const Clustering* clustering = nullptr;
  const ClusterGraph* cluster_graph = nullptr;
  std::vector<Request> queue;  // FIFO order seen by path selection
  PathSelection selection;
  std::vector<ServedRequest> served;
};

using SlotObserver = std::function<void(const SlotEvent&)>;

/// Discrete time-slot simulation of adaptive (or static) cluster routing.
class Simulator {
 public:
  explicit Simulator(SimulationConfig cfg) : cfg_(std::move(cfg)) {
    if (!cfg_.graph) throw ConfigError("simulation needs a topology");
    const auto& g = *cfg_.graph;
    if (g.node_count() < 2) throw ConfigError("topology needs at least two nodes");
    if (cfg_.queue_capacity < 1) throw ConfigError("queue_capacity must be at least 1");
    if (cfg_.reconfig.k < 2) throw ConfigError("k must be at least 2");
    if (cfg_.reconfig.epoch_length < 1) throw ConfigError("epoch_length must be at least 1");
    if (cfg_.mode == ClusteringMode::kAdaptive && !cfg_.thresholds)
      throw ConfigError("adaptive mode needs a threshold table");

    clustering_ = std::make_unique<Clustering>(
        cfg_.partition.empty() ? Clustering::whole(g)
                               : Clustering::from_partition(g, cfg_.partition));
    cluster_graph_ = std::make_unique<ClusterGraph>(*clustering_);

    hops_.resize(g.node_count());
    for (NodeId n = 0; n < g.node_count(); ++n) hops_[n] = g.hop_distances_from(n);
    if (cfg_.requests.kind == RequestDistribution::Kind::kBimodal) {
      for (NodeId s = 0; s < g.node_count(); ++s)
        for (NodeId d = 0; d < g.node_count(); ++d)
          if (s != d && hops_[s][d] > 0) {
            const auto h = static_cast<std::size_t>(hops_[s][d]);
            if (pairs_by_hop_.size() <= h) pairs_by_hop_.resize(h + 1);
            pairs_by_hop_[h].emplace_back(s, d);
          }
      if (pairs_by_hop_.empty()) throw ConfigError("bimodal requests need a connected pair");
    }

    double y_min = g.node(0).position.y, y_max = y_min;
    for (const auto& n : g.nodes()) {
      y_min = std::min(y_min, n.position.y);
      y_max = std::max(y_max, n.position.y);
    }
    log_.epoch_length = cfg_.reconfig.epoch_length;
    log_.region_split_y = 0.5 * (y_min + y_max);
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;
  Simulator(Simulator&&) = default;
  Simulator& operator=(Simulator&&) = default;

  void set_observer(SlotObserver obs) { observer_ = std::move(obs); }

  const SimulationConfig& config() const { return cfg_; }
  const Clustering& clustering() const { return *clustering_; }
  const MetricsLog& log() const { return log_; }
  const StatsMap& epoch_stats() const { return stats_; }
  std::uint64_t slot() const { return slot_; }
  std::uint64_t epoch() const { return epoch_; }
  const std::deque<Request>& queue() const { return queue_; }
  const std::optional<ReconfigReport>& last_reconfiguration() const { return last_report_; }

  /// Routes, percolates and records one slot.
  void run_slot() {
    const auto& g = *cfg_.graph;
    const auto& params = params_for(slot_);
    refill(slot_);

    SlotEvent ev;
    ev.slot = slot_;
    ev.epoch = epoch_;
    ev.clustering = clustering_.get();
    ev.cluster_graph = cluster_graph_.get();
    ev.queue.assign(queue_.begin(), queue_.end());
    ev.selection = select_paths(ev.queue, *cluster_graph_);

    SlotMetrics sm{slot_, static_cast<std::uint32_t>(ev.selection.served.size()), 0,
                   static_cast<std::uint32_t>(ev.selection.skipped.size())};
    std::vector<RequestId> satisfied;
    for (const auto& path : ev.selection.served) {
      const Request& req = find_request(ev.queue, path.request);
      Rng assign_rng(cfg_.seed, {static_cast<std::uint64_t>(Stream::kAssignment), slot_, req.id});
      Rng link_rng(cfg_.seed, {static_cast<std::uint64_t>(Stream::kLinks), slot_, req.id});
      Rng fusion_rng(cfg_.seed, {static_cast<std::uint64_t>(Stream::kFusions), slot_, req.id});
      const auto layout = PathLayout::of(path, *clustering_);
      auto qa = assign_qubits(path_edges(layout, g, cfg_.edge_selection), g, assign_rng);
      auto outcome = percolate(g, layout, qa, params, req.source, req.destination, link_rng,
                               fusion_rng);
      for (std::size_t i = 0; i < path.clusters.size(); ++i) {
        auto& st = stats_[path.clusters[i]];
        ++st.attempts;
        if (outcome.passes[i]) ++st.passes;
      }
      auto& rm = log_.requests[req.id];
      ++rm.attempts;
      if (outcome.success) {
        rm.satisfied_slot = slot_;
        satisfied.push_back(req.id);
        ++sm.satisfied;
      }
      ev.served.push_back(ServedRequest{req, path, std::move(qa), std::move(outcome)});
    }
    log_.slots.push_back(sm);
    if (observer_) observer_(ev);

    std::erase_if(queue_, [&](const Request& r) {
      return std::find(satisfied.begin(), satisfied.end(), r.id) != satisfied.end();
    });
    ++slot_;
  }

  /// Logs the epoch's cluster statistics and, in adaptive mode,
  /// reconfigures the clustering. Statistics are reset.
  void end_epoch() {
    const auto& g = *cfg_.graph;
    for (const auto& c : clustering_->clusters()) {
      const auto it = stats_.find(c.id);
      const ClusterStats st = it == stats_.end() ? ClusterStats{} : it->second;
      double cx = 0.0, cy = 0.0;
      for (NodeId n : c.members) {
        cx += g.node(n).position.x;
        cy += g.node(n).position.y;
      }
      const double sz = static_cast<double>(c.members.size());
      log_.clusters.push_back(ClusterEpochMetrics{epoch_, c.id,
                                                  static_cast<std::uint32_t>(c.members.size()),
                                                  st.attempts, st.passes, cx / sz, cy / sz});
    }
    log_.snapshots.push_back(ClusteringSnapshot{epoch_, clustering_->node_assignment()});
    if (cfg_.mode == ClusteringMode::kAdaptive) {
      last_report_ = reconfigure_with_report(*clustering_, stats_, *cfg_.thresholds,
                                             cfg_.reconfig, g);
      *clustering_ = last_report_->clustering;
      cluster_graph_ = std::make_unique<ClusterGraph>(*clustering_);
    }
    stats_.clear();
    ++epoch_;
  }

  /// epoch_length slots followed by end_epoch().
  void run_epoch() {
    for (std::uint32_t i = 0; i < cfg_.reconfig.epoch_length; ++i) run_slot();
    end_epoch();
  }

  /// Runs the configured number of slots in epochs; a trailing partial
  /// epoch is closed like a full one.
  const MetricsLog& run() {
    while (slot_ < cfg_.slots) {
      const auto n = std::min<std::uint64_t>(cfg_.reconfig.epoch_length, cfg_.slots - slot_);
      for (std::uint64_t i = 0; i < n; ++i) run_slot();
      end_epoch();
    }
    return log_;
  }

 private:
  static const Request& find_request(const std::vector<Request>& q, RequestId id) {
    for (const auto& r : q)
      if (r.id == id) return r;
    throw ConsistencyError("served request is not queued");
  }

  const EffectiveParams& params_for(std::uint64_t slot) {
    const auto idx = cfg_.schedule.active_index(slot);
    const std::int64_t key = idx ? static_cast<std::int64_t>(*idx) : -1;
    if (!params_ || key != params_key_) {
      params_ = apply_schedule(*cfg_.graph, cfg_.schedule, slot);
      params_key_ = key;
    }
    return *params_;
  }

  Request generate(std::uint64_t arrival) {
    const auto& g = *cfg_.graph;
    const RequestId id = next_request_++;
    Rng rng(cfg_.seed, {static_cast<std::uint64_t>(Stream::kRequests), id});
    const auto n = g.node_count();
    NodeId s = 0, d = 0;
    if (cfg_.requests.kind == RequestDistribution::Kind::kUniform) {
      s = static_cast<NodeId>(rng.uniform_int(0, n - 1));
      d = static_cast<NodeId>(rng.uniform_int(0, n - 2));
      if (d >= s) ++d;
    } else {
      const auto diameter = static_cast<double>(pairs_by_hop_.size() - 1);
      const double frac =
          rng.bernoulli(cfg_.requests.near_share) ? cfg_.requests.near : cfg_.requests.far;
      auto h = static_cast<std::size_t>(std::max(1.0, std::round(frac * diameter)));
      h = std::min(h, pairs_by_hop_.size() - 1);
      // Nearest populated distance, preferring shorter.
      std::size_t pick = h;
      for (std::size_t off = 0; off < pairs_by_hop_.size(); ++off) {
        if (h >= off && h - off >= 1 && !pairs_by_hop_[h - off].empty()) {
          pick = h - off;
          break;
        }
        if (h + off < pairs_by_hop_.size() && !pairs_by_hop_[h + off].empty()) {
          pick = h + off;
          break;
        }
      }
      const auto& bucket = pairs_by_hop_[pick];
      std::tie(s, d) = bucket[rng.uniform_int(0, bucket.size() - 1)];
    }
    log_.requests.push_back(RequestMetrics{id, s, d, hops_[s][d], arrival, std::nullopt, 0});
    return Request{id, s, d, arrival};
  }

  void refill(std::uint64_t arrival) {
    while (queue_.size() < cfg_.queue_capacity) queue_.push_back(generate(arrival));
  }

  SimulationConfig cfg_;
  std::unique_ptr<Clustering> clustering_;
  std::unique_ptr<ClusterGraph> cluster_graph_;
  std::vector<std::vector<int>> hops_;
  std::vector<std::vector<std::pair<NodeId, NodeId>>> pairs_by_hop_;
  std::deque<Request> queue_;
  RequestId next_request_ = 0;
  StatsMap stats_;
  MetricsLog log_;
  std::optional<EffectiveParams> params_;
  std::int64_t params_key_ = -2;
  std::optional<ReconfigReport> last_report_;
  SlotObserver observer_;
  std::uint64_t slot_ = 0;
  std::uint64_t epoch_ = 0;
};

inline MetricsLog run_simulation(SimulationConfig cfg) {
  Simulator sim(std::move(cfg));
  return sim.run();
}

}  // namespace quarc
