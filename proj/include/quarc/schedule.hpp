#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quarc/error.hpp"
#include "quarc/topology.hpp"

namespace quarc {

/// Axis-aligned rectangle, bounds inclusive.
struct Region {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(Position p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  bool operator==(const Region&) const = default;
};

/// Sets p on every channel of edges whose two endpoints both lie in the
/// region. Edges crossing the region boundary keep their base value.
struct RegionOverride {
  Region region;
  double p = 0.0;
  bool operator==(const RegionOverride&) const = default;
};

/// Parameter overrides active from a schedule entry's start slot. Applied to
/// the base graph in this order: mean_p (length-derived channel values),
/// global p, regions (later entries win), q.
struct Overrides {
  std::optional<double> p;
  std::optional<double> q;
  std::optional<double> mean_p;
  std::vector<RegionOverride> regions;
  bool operator==(const Overrides&) const = default;
};

struct ScheduleEntry {
  std::uint64_t start_slot = 0;
  Overrides overrides;
  bool operator==(const ScheduleEntry&) const = default;
};

class ParameterSchedule {
 public:
  ParameterSchedule() = default;
  explicit ParameterSchedule(std::vector<ScheduleEntry> entries) {
    for (auto& e : entries) add(std::move(e));
  }

  void add(ScheduleEntry entry) {
    if (!entries_.empty() && entry.start_slot <= entries_.back().start_slot)
      throw ConfigError("schedule start slots must be strictly increasing");
    validate(entry.overrides);
    entries_.push_back(std::move(entry));
  }

  const std::vector<ScheduleEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Index of the last entry with start_slot <= slot, if any.
  std::optional<std::size_t> active_index(std::uint64_t slot) const {
    std::optional<std::size_t> found;
    for (std::size_t i = 0; i < entries_.size() && entries_[i].start_slot <= slot; ++i)
      found = i;
    return found;
  }

  /// Alternates between `a` and `b` every `period` slots, starting with `a`,
  /// until `horizon`.
  static ParameterSchedule alternating(const Overrides& a, const Overrides& b,
                                       std::uint64_t period, std::uint64_t horizon) {
    ParameterSchedule s;
    bool first = true;
    for (std::uint64_t t = 0; t < horizon; t += period, first = !first)
      s.add(ScheduleEntry{t, first ? a : b});
    return s;
  }

  /// Global p stepping from `from` towards `to` by `step` every `period` slots.
  static ParameterSchedule ramp_p(double from, double to, double step,
                                  std::uint64_t period) {
    ParameterSchedule s;
    const int n = static_cast<int>(std::floor(std::abs(to - from) / step + 1e-9));
    const double dir = to < from ? -1.0 : 1.0;
    for (int i = 0; i <= n; ++i) {
      Overrides o;
      o.p = from + dir * step * i;
      s.add(ScheduleEntry{static_cast<std::uint64_t>(i) * period, o});
    }
    return s;
  }

  bool operator==(const ParameterSchedule&) const = default;

 private:
  static void validate(const Overrides& o) {
    auto check = [](const std::optional<double>& v, const char* what) {
      if (v && !valid_probability(*v))
        throw ConfigError(std::string("schedule override '") + what + "' outside [0,1]");
    };
    check(o.p, "p");
    check(o.q, "q");
    if (o.mean_p && !(*o.mean_p > 0.0 && *o.mean_p < 1.0))
      throw ConfigError("schedule override 'mean_p' outside (0,1)");
    for (const auto& r : o.regions)
      if (!valid_probability(r.p))
        throw ConfigError("schedule region override 'p' outside [0,1]");
  }

  std::vector<ScheduleEntry> entries_;
};

/// Per-slot physical parameters: channel probabilities by (edge, index) and
/// fusion probability by node.
struct EffectiveParams {
  std::vector<std::vector<double>> channel_probs;
  std::vector<double> fusion_probs;

  double channel_prob(ChannelRef c) const { return channel_probs[c.edge][c.index]; }
  double fusion_prob(NodeId n) const { return fusion_probs[n]; }
  bool operator==(const EffectiveParams&) const = default;
};

inline EffectiveParams base_params(const NetworkGraph& g) {
  EffectiveParams ep;
  ep.channel_probs.reserve(g.edge_count());
  for (const auto& e : g.edges()) ep.channel_probs.push_back(e.channel_probs);
  ep.fusion_probs.reserve(g.node_count());
  for (const auto& n : g.nodes()) ep.fusion_probs.push_back(n.fusion_prob);
  return ep;
}

inline EffectiveParams apply_overrides(const NetworkGraph& g, const Overrides& o) {
  EffectiveParams ep = base_params(g);
  if (o.mean_p) {
    const double alpha = solve_alpha(g, *o.mean_p);
    for (const auto& e : g.edges())
      for (auto& p : ep.channel_probs[e.id]) p = std::exp(-alpha * e.length);
  }
  if (o.p)
    for (auto& probs : ep.channel_probs)
      for (auto& p : probs) p = *o.p;
  for (const auto& r : o.regions)
    for (const auto& e : g.edges())
      if (r.region.contains(g.node(e.u).position) && r.region.contains(g.node(e.v).position))
        for (auto& p : ep.channel_probs[e.id]) p = r.p;
  if (o.q)
    for (auto& q : ep.fusion_probs) q = *o.q;
  return ep;
}

/// Effective parameters at `slot`. The graph itself is never modified.
inline EffectiveParams apply_schedule(const NetworkGraph& g, const ParameterSchedule& s,
                                      std::uint64_t slot) {
  const auto idx = s.active_index(slot);
  if (!idx) return base_params(g);
  return apply_overrides(g, s.entries()[*idx].overrides);
}

}  // namespace quarc
