#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "quarc/clustering.hpp"
#include "quarc/community.hpp"
#include "quarc/kemeny.hpp"
#include "quarc/thresholds.hpp"
#include "quarc/topology.hpp"

namespace quarc {

struct ReconfigConfig {
  std::uint32_t k = 4;               // split arity
  std::uint32_t epoch_length = 500;  // slots per epoch
  bool operator==(const ReconfigConfig&) const = default;
};

using StatsMap = std::map<ClusterId, ClusterStats>;

struct MergeRecord {
  ClusterId initiator = 0;
  std::vector<ClusterId> partners;  // one (direct merge) or two
  std::vector<ClusterId> results;
};

/// What reconfigure decided, for logging and tests.
struct ReconfigReport {
  Clustering clustering;
  std::vector<ClusterId> split_marked;
  std::vector<ClusterId> merge_marked;
  std::vector<MergeRecord> merges;
};

/// True if a strict majority of c's neighbour clusters are smaller than
/// |c| / k (the local-minimum escape rule).
inline bool escapes_local_minimum(const Clustering& clustering, ClusterId c, std::uint32_t k) {
  const auto& nb = clustering.neighbors(c);
  if (nb.empty()) return false;
  const double limit = static_cast<double>(clustering.cluster(c).members.size()) / k;
  std::size_t small = 0;
  for (ClusterId x : nb)
    if (static_cast<double>(clustering.cluster(x).members.size()) < limit) ++small;
  return 2 * small > nb.size();
}

/// One end-of-epoch adaptive reconfiguration.
///
/// Clusters at or above their split threshold, or satisfying the
/// local-minimum rule, are split into k parts with Girvan-Newman. Remaining
/// clusters at or below their merge threshold are visited in increasing rate
/// order (ties by id); each picks the pair of neighbours whose union with it
/// has the smallest Kemeny constant and, if none of the three has been
/// modified this epoch, the union is re-split into two. A cluster with a
/// single neighbour merges with it directly. Clusters without attempts have
/// no rate and are only subject to the local-minimum rule. Clusters smaller
/// than k cannot be split and are never marked for splitting.
inline ReconfigReport reconfigure_with_report(const Clustering& clustering,
                                              const StatsMap& stats,
                                              const ThresholdTable& table,
                                              const ReconfigConfig& cfg,
                                              const NetworkGraph& graph) {
  const auto network_size = static_cast<std::uint32_t>(graph.node_count());
  auto stats_of = [&](ClusterId id) {
    auto it = stats.find(id);
    return it == stats.end() ? ClusterStats{} : it->second;
  };

  ReconfigReport report;
  std::set<ClusterId> to_split;
  for (const auto& c : clustering.clusters()) {
    const auto size = c.members.size();
    if (size < cfg.k) continue;
    const auto st = stats_of(c.id);
    const auto thr = table.lookup(static_cast<double>(size), network_size);
    if ((st.has_rate() && st.rate() >= thr.split) ||
        escapes_local_minimum(clustering, c.id, cfg.k))
      to_split.insert(c.id);
  }
  struct Candidate {
    double rate;
    ClusterId id;
  };
  std::vector<Candidate> to_merge;
  for (const auto& c : clustering.clusters()) {
    if (to_split.contains(c.id)) continue;
    const auto st = stats_of(c.id);
    if (!st.has_rate()) continue;
    const auto thr = table.lookup(static_cast<double>(c.members.size()), network_size);
    if (st.rate() <= thr.merge) to_merge.push_back({st.rate(), c.id});
  }
  std::sort(to_merge.begin(), to_merge.end(), [](const Candidate& a, const Candidate& b) {
    return a.rate < b.rate || (a.rate == b.rate && a.id < b.id);
  });
  report.split_marked.assign(to_split.begin(), to_split.end());
  for (const auto& m : to_merge) report.merge_marked.push_back(m.id);

  // Working partition keyed by cluster id.
  std::map<ClusterId, std::vector<NodeId>> parts;
  for (const auto& c : clustering.clusters()) parts[c.id] = c.members;
  ClusterId next_id = clustering.next_id();
  std::set<ClusterId> modified;

  for (ClusterId id : to_split) {
    auto pieces = girvan_newman(induced_subgraph(graph, parts.at(id)), cfg.k);
    parts.erase(id);
    modified.insert(id);
    for (auto& p : pieces) {
      modified.insert(next_id);
      parts[next_id++] = std::move(p);
    }
  }

  if (!to_merge.empty()) {
    auto current = [&] {
      std::vector<Cluster> cl;
      for (const auto& [id, members] : parts) cl.push_back(Cluster{id, members});
      return Clustering::from_clusters(graph, std::move(cl), false, next_id);
    };
    Clustering working = current();
    for (const auto& cand : to_merge) {
      const ClusterId c = cand.id;
      if (!parts.contains(c) || modified.contains(c)) continue;
      const auto& nb = working.neighbors(c);
      if (nb.empty()) continue;

      std::vector<ClusterId> partners;
      if (nb.size() == 1) {
        partners = {nb.front()};
      } else {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < nb.size(); ++i)
          for (std::size_t j = i + 1; j < nb.size(); ++j) {
            std::vector<NodeId> uni = parts.at(c);
            const auto& a = parts.at(nb[i]);
            const auto& b = parts.at(nb[j]);
            uni.insert(uni.end(), a.begin(), a.end());
            uni.insert(uni.end(), b.begin(), b.end());
            const double kc = kemeny_constant(induced_subgraph(graph, uni));
            // Pairs are visited in ascending (id, id) order, so strict < keeps
            // the smallest pair on ties.
            if (kc < best) {
              best = kc;
              partners = {nb[i], nb[j]};
            }
          }
        if (partners.empty()) continue;  // every candidate union disconnected
      }
      if (std::any_of(partners.begin(), partners.end(),
                      [&](ClusterId x) { return modified.contains(x); }))
        continue;

      std::vector<NodeId> uni = parts.at(c);
      for (ClusterId x : partners) {
        const auto& m = parts.at(x);
        uni.insert(uni.end(), m.begin(), m.end());
      }
      MergeRecord rec{c, partners, {}};
      std::vector<std::vector<NodeId>> pieces;
      if (partners.size() == 1) {
        std::sort(uni.begin(), uni.end());
        pieces.push_back(std::move(uni));
      } else {
        pieces = girvan_newman(induced_subgraph(graph, uni), 2);
      }
      parts.erase(c);
      modified.insert(c);
      for (ClusterId x : partners) {
        parts.erase(x);
        modified.insert(x);
      }
      for (auto& p : pieces) {
        modified.insert(next_id);
        rec.results.push_back(next_id);
        parts[next_id++] = std::move(p);
      }
      report.merges.push_back(std::move(rec));
      working = current();
    }
  }

  std::vector<Cluster> out;
  for (auto& [id, members] : parts) out.push_back(Cluster{id, std::move(members)});
  report.clustering = Clustering::from_clusters(graph, std::move(out), false, next_id);
  return report;
}

inline Clustering reconfigure(const Clustering& clustering, const StatsMap& stats,
                              const ThresholdTable& table, const ReconfigConfig& cfg,
                              const NetworkGraph& graph) {
  return reconfigure_with_report(clustering, stats, table, cfg, graph).clustering;
}

}  // namespace quarc
