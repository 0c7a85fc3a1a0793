#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "quarc/clustering.hpp"
#include "quarc/error.hpp"
#include "quarc/routing.hpp"

namespace quarc {

struct SlotMetrics {
  std::uint64_t slot = 0;
  std::uint32_t attempted = 0;
  std::uint32_t satisfied = 0;
  std::uint32_t skipped = 0;
  bool operator==(const SlotMetrics&) const = default;
};

struct RequestMetrics {
  RequestId id = 0;
  NodeId source = 0;
  NodeId destination = 0;
  int hop_distance = -1;  // node-graph shortest path; -1 if unreachable
  std::uint64_t arrival_slot = 0;
  std::optional<std::uint64_t> satisfied_slot;
  std::uint32_t attempts = 0;
  bool operator==(const RequestMetrics&) const = default;
};

struct ClusterEpochMetrics {
  std::uint64_t epoch = 0;
  ClusterId cluster = 0;
  std::uint32_t size = 0;
  std::uint64_t attempts = 0;
  std::uint64_t passes = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  bool operator==(const ClusterEpochMetrics&) const = default;
};

/// Node -> cluster assignment in force during one epoch.
struct ClusteringSnapshot {
  std::uint64_t epoch = 0;
  std::vector<ClusterId> node_cluster;
  bool operator==(const ClusteringSnapshot&) const = default;
};

struct MetricsLog {
  std::uint64_t epoch_length = 0;
  double region_split_y = 0.0;  // "upper" = centroid y >= split
  std::vector<SlotMetrics> slots;
  std::vector<RequestMetrics> requests;  // indexed by request id
  std::vector<ClusterEpochMetrics> clusters;
  std::vector<ClusteringSnapshot> snapshots;
  bool operator==(const MetricsLog&) const = default;
};

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

inline void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace detail

/// Writes slots.csv, requests.csv, clusters.csv and assignments.csv into
/// `dir` (created if needed). Column order is part of the output contract.
inline void write_metrics_csv(const MetricsLog& log, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  {
    const auto path = dir / "slots.csv";
    auto out = detail::open_for_write(path);
    out << "slot,attempted,satisfied,skipped\n";
    for (const auto& s : log.slots)
      out << s.slot << ',' << s.attempted << ',' << s.satisfied << ',' << s.skipped << '\n';
    detail::finish(out, path);
  }
  {
    const auto path = dir / "requests.csv";
    auto out = detail::open_for_write(path);
    out << "request,source,destination,hop_distance,arrival_slot,satisfied_slot,attempts\n";
    for (const auto& r : log.requests) {
      out << r.id << ',' << r.source << ',' << r.destination << ',' << r.hop_distance << ','
          << r.arrival_slot << ',';
      if (r.satisfied_slot) out << *r.satisfied_slot;
      out << ',' << r.attempts << '\n';
    }
    detail::finish(out, path);
  }
  {
    const auto path = dir / "clusters.csv";
    auto out = detail::open_for_write(path);
    out << "epoch,cluster,size,attempts,passes,centroid_x,centroid_y\n";
    for (const auto& c : log.clusters)
      out << c.epoch << ',' << c.cluster << ',' << c.size << ',' << c.attempts << ','
          << c.passes << ',' << format_double(c.centroid_x) << ','
          << format_double(c.centroid_y) << '\n';
    detail::finish(out, path);
  }
  {
    const auto path = dir / "assignments.csv";
    auto out = detail::open_for_write(path);
    out << "epoch,node,cluster\n";
    for (const auto& s : log.snapshots)
      for (std::size_t n = 0; n < s.node_cluster.size(); ++n)
        out << s.epoch << ',' << n << ',' << s.node_cluster[n] << '\n';
    detail::finish(out, path);
  }
}

struct LatencySummary {
  std::uint64_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;
  std::uint64_t max = 0;
  std::map<std::uint64_t, std::uint64_t> histogram;  // latency -> requests
};

struct HopBucket {
  int hop_distance = 0;
  std::uint64_t generated = 0;
  std::uint64_t satisfied = 0;
  std::uint64_t attempts = 0;
  /// Satisfied attempts / attempts (each request succeeds at most once).
  double success_rate = 0.0;
  /// Share of generated requests never satisfied.
  double starvation = 0.0;
};

struct RegionSizes {
  std::uint64_t epoch = 0;
  double upper_mean_size = 0.0;  // NaN when no cluster centroid in region
  double lower_mean_size = 0.0;
  std::uint32_t upper_clusters = 0;
  std::uint32_t lower_clusters = 0;
};

struct Report {
  std::uint64_t window = 1;
  std::uint64_t total_slots = 0;
  std::uint64_t total_satisfied = 0;
  double mean_throughput = 0.0;
  std::vector<double> throughput;  // mean satisfied per slot, per window
  LatencySummary latency;
  std::vector<HopBucket> by_hop;
  std::vector<RegionSizes> regions;
};

namespace detail {

inline double nearest_rank(const std::vector<std::uint64_t>& sorted, double pct) {
  if (sorted.empty()) return 0.0;
  auto rank = static_cast<std::size_t>(std::ceil(pct * static_cast<double>(sorted.size()) / 100.0 - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return static_cast<double>(sorted[rank - 1]);
}

}  // namespace detail

inline Report summarize(const MetricsLog& log, std::uint64_t window) {
  if (window < 1) throw DomainError("summary window must be at least one slot");
  Report rep;
  rep.window = window;
  rep.total_slots = log.slots.size();
  for (std::size_t i = 0; i < log.slots.size(); i += window) {
    const std::size_t end = std::min(log.slots.size(), i + window);
    double sum = 0.0;
    for (std::size_t j = i; j < end; ++j) sum += log.slots[j].satisfied;
    rep.throughput.push_back(sum / static_cast<double>(end - i));
  }
  for (const auto& s : log.slots) rep.total_satisfied += s.satisfied;
  rep.mean_throughput = rep.total_slots == 0 ? 0.0
                                             : static_cast<double>(rep.total_satisfied) /
                                                   static_cast<double>(rep.total_slots);

  std::vector<std::uint64_t> lat;
  std::map<int, HopBucket> hops;
  for (const auto& r : log.requests) {
    auto& b = hops[r.hop_distance];
    b.hop_distance = r.hop_distance;
    ++b.generated;
    b.attempts += r.attempts;
    if (r.satisfied_slot) {
      ++b.satisfied;
      const auto l = *r.satisfied_slot - r.arrival_slot;
      lat.push_back(l);
      ++rep.latency.histogram[l];
    }
  }
  std::sort(lat.begin(), lat.end());
  rep.latency.count = lat.size();
  if (!lat.empty()) {
    double sum = 0.0;
    for (auto l : lat) sum += static_cast<double>(l);
    rep.latency.mean = sum / static_cast<double>(lat.size());
    rep.latency.median = detail::nearest_rank(lat, 50.0);
    rep.latency.p95 = detail::nearest_rank(lat, 95.0);
    rep.latency.max = lat.back();
  }
  for (auto& [h, b] : hops) {
    b.success_rate = b.attempts == 0 ? 0.0
                                     : static_cast<double>(b.satisfied) /
                                           static_cast<double>(b.attempts);
    b.starvation = b.generated == 0 ? 0.0
                                    : 1.0 - static_cast<double>(b.satisfied) /
                                                static_cast<double>(b.generated);
    rep.by_hop.push_back(b);
  }

  std::map<std::uint64_t, RegionSizes> regions;
  std::map<std::uint64_t, std::pair<double, double>> sums;
  for (const auto& c : log.clusters) {
    auto& r = regions[c.epoch];
    r.epoch = c.epoch;
    auto& s = sums[c.epoch];
    if (c.centroid_y >= log.region_split_y) {
      ++r.upper_clusters;
      s.first += c.size;
    } else {
      ++r.lower_clusters;
      s.second += c.size;
    }
  }
  for (auto& [e, r] : regions) {
    const auto& s = sums[e];
    r.upper_mean_size = r.upper_clusters ? s.first / r.upper_clusters : std::nan("");
    r.lower_mean_size = r.lower_clusters ? s.second / r.lower_clusters : std::nan("");
    rep.regions.push_back(r);
  }
  return rep;
}

/// Writes throughput.csv, latency.csv, hop_success.csv and
/// region_sizes.csv for a report.
inline void write_report_csv(const Report& rep, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  {
    const auto path = dir / "throughput.csv";
    auto out = detail::open_for_write(path);
    out << "window,start_slot,mean_satisfied_per_slot\n";
    for (std::size_t i = 0; i < rep.throughput.size(); ++i)
      out << i << ',' << i * rep.window << ',' << format_double(rep.throughput[i]) << '\n';
    detail::finish(out, path);
  }
  {
    const auto path = dir / "latency.csv";
    auto out = detail::open_for_write(path);
    out << "latency,requests\n";
    for (const auto& [l, n] : rep.latency.histogram) out << l << ',' << n << '\n';
    detail::finish(out, path);
  }
  {
    const auto path = dir / "hop_success.csv";
    auto out = detail::open_for_write(path);
    out << "hop_distance,generated,satisfied,attempts,success_rate,starvation\n";
    for (const auto& b : rep.by_hop)
      out << b.hop_distance << ',' << b.generated << ',' << b.satisfied << ',' << b.attempts
          << ',' << format_double(b.success_rate) << ',' << format_double(b.starvation)
          << '\n';
    detail::finish(out, path);
  }
  {
    const auto path = dir / "region_sizes.csv";
    auto out = detail::open_for_write(path);
    out << "epoch,upper_clusters,upper_mean_size,lower_clusters,lower_mean_size\n";
    for (const auto& r : rep.regions)
      out << r.epoch << ',' << r.upper_clusters << ',' << format_double(r.upper_mean_size)
          << ',' << r.lower_clusters << ',' << format_double(r.lower_mean_size) << '\n';
    detail::finish(out, path);
  }
}

}  // namespace quarc
