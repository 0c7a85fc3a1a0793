#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quarc/engine.hpp"
#include "quarc/error.hpp"
#include "quarc/io.hpp"
#include "quarc/routing.hpp"
#include "quarc/schedule.hpp"
#include "quarc/topology.hpp"

namespace quarc {

struct GridSpec {
  std::uint32_t side = 16;
  std::uint32_t width = 1;
  std::uint32_t qubits = 4;
  double p = 0.9;
  double q = 0.9;
  bool operator==(const GridSpec&) const = default;
};

struct TopologySpec {
  enum class Kind { kGrid, kWaxman, kFile };
  Kind kind = Kind::kGrid;
  GridSpec grid;
  WaxmanParams waxman;
  std::string file;
  bool operator==(const TopologySpec&) const = default;
};

/// Either explicit entries or an a/b alternation every `period` slots.
struct ScheduleSpec {
  std::vector<ScheduleEntry> entries;
  std::optional<std::array<Overrides, 2>> alternate;
  std::uint64_t period = 0;
  bool operator==(const ScheduleSpec&) const = default;

  ParameterSchedule resolve(std::uint64_t horizon) const {
    if (alternate)
      return ParameterSchedule::alternating((*alternate)[0], (*alternate)[1], period,
                                            std::max<std::uint64_t>(horizon, 1));
    return ParameterSchedule(entries);
  }
};

struct PartitionSpec {
  enum class Kind { kWhole, kSingletons, kBlocks, kExplicit };
  Kind kind = Kind::kWhole;
  std::uint32_t block = 0;
  std::vector<std::vector<NodeId>> clusters;
  bool operator==(const PartitionSpec&) const = default;
};

struct ThresholdSpec {
  enum class Source { kBuiltin, kFile, kTopologySpecific };
  Source source = Source::kBuiltin;
  std::string file;
  bool operator==(const ThresholdSpec&) const = default;
};

enum class TraceLevel { kNone, kRouting, kFull };

struct RunConfig {
  TopologySpec topology;
  ScheduleSpec schedule;
  ClusteringMode mode = ClusteringMode::kAdaptive;
  PartitionSpec partition;
  std::optional<ThresholdSpec> thresholds;  // adaptive mode only
  std::uint32_t k = 4;
  std::uint32_t epoch_length = 500;
  std::uint32_t queue_capacity = 10;
  RequestDistribution requests;
  EdgeSelection edge_selection = EdgeSelection::kAllPathEdges;
  std::uint64_t slots = 0;
  std::uint64_t seed = 1;
  std::uint64_t window = 0;  // summary window; 0 = epoch_length
  TraceLevel trace = TraceLevel::kNone;
  std::string output;  // empty = caller decides
  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::filesystem::path resolve_path(const std::string& p,
                                          const std::filesystem::path& base_dir) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return path.lexically_normal();
}

inline IntRange range_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be [lo, hi]");
  try {
    return IntRange{j[0].get<std::uint32_t>(), j[1].get<std::uint32_t>()};
  } catch (const Json::exception&) {
    throw ConfigError(where + " must hold two non-negative integers");
  }
}

inline std::uint64_t non_negative(const Json& obj, const char* key, std::uint64_t fallback,
                                  const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (v.is_number_integer() && v.get<std::int64_t>() < 0)
    throw ConfigError("'" + std::string(key) + "' in " + where + " must be >= 0");
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw ConfigError("'" + std::string(key) + "' in " + where + " must be an integer");
  return v.get<std::uint64_t>();
}

inline std::uint32_t positive32(const Json& obj, const char* key, std::uint32_t fallback,
                                const std::string& where) {
  const auto v = non_negative(obj, key, fallback, where);
  if (v < 1 || v > 0xffffffffULL)
    throw ConfigError("'" + std::string(key) + "' in " + where + " must be a positive 32-bit integer");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

/// Parses and validates a run configuration. Relative file paths resolve
/// against `base_dir`.
inline RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = {}) {
  using detail::get_or;
  using detail::get_required;
  const std::string top = "config";
  detail::check_keys(j,
                     {"topology", "schedule", "mode", "partition", "thresholds", "k",
                      "epoch_length", "queue_capacity", "requests", "edge_selection", "slots",
                      "seed", "window", "trace", "output"},
                     top);
  RunConfig c;

  if (!j.contains("topology")) throw ConfigError("missing key 'topology' in config");
  const auto& jt = j["topology"];
  detail::check_keys(jt, {"grid", "waxman", "file"}, "topology");
  if (jt.size() != 1)
    throw ConfigError("'topology' must hold exactly one of 'grid', 'waxman', 'file'");
  if (jt.contains("grid")) {
    const auto& g = jt["grid"];
    const std::string w = "topology.grid";
    detail::check_keys(g, {"side", "width", "qubits", "p", "q"}, w);
    c.topology.kind = TopologySpec::Kind::kGrid;
    c.topology.grid.side = detail::positive32(g, "side", c.topology.grid.side, w);
    c.topology.grid.width = detail::positive32(g, "width", c.topology.grid.width, w);
    if (g.contains("qubits") && g["qubits"].is_null())
      c.topology.grid.qubits = kUnlimitedQubits;
    else
      c.topology.grid.qubits = detail::positive32(g, "qubits", c.topology.grid.qubits, w);
    c.topology.grid.p = get_or<double>(g, "p", c.topology.grid.p, w);
    c.topology.grid.q = get_or<double>(g, "q", c.topology.grid.q, w);
    if (!valid_probability(c.topology.grid.p)) throw ConfigError("'p' in topology.grid outside [0,1]");
    if (!valid_probability(c.topology.grid.q)) throw ConfigError("'q' in topology.grid outside [0,1]");
  } else if (jt.contains("waxman")) {
    const auto& g = jt["waxman"];
    const std::string w = "topology.waxman";
    detail::check_keys(g,
                       {"n", "avg_degree", "qubits", "width", "mean_p", "q", "seed", "alpha",
                        "beta"},
                       w);
    auto& wp = c.topology.waxman;
    c.topology.kind = TopologySpec::Kind::kWaxman;
    wp.n = detail::positive32(g, "n", wp.n, w);
    wp.target_avg_degree = get_or<double>(g, "avg_degree", wp.target_avg_degree, w);
    if (g.contains("qubits")) wp.qubit_range = detail::range_from_json(g["qubits"], w + ".qubits");
    if (g.contains("width")) wp.width_range = detail::range_from_json(g["width"], w + ".width");
    wp.mean_p = get_or<double>(g, "mean_p", wp.mean_p, w);
    wp.q = get_or<double>(g, "q", wp.q, w);
    wp.seed = detail::non_negative(g, "seed", wp.seed, w);
    wp.alpha_w = get_or<double>(g, "alpha", wp.alpha_w, w);
    wp.beta_w = get_or<double>(g, "beta", wp.beta_w, w);
    if (!(wp.mean_p > 0.0 && wp.mean_p < 1.0))
      throw ConfigError("'mean_p' in topology.waxman outside (0,1)");
    if (!valid_probability(wp.q)) throw ConfigError("'q' in topology.waxman outside [0,1]");
  } else {
    c.topology.kind = TopologySpec::Kind::kFile;
    c.topology.file =
        detail::resolve_path(get_required<std::string>(jt, "file", "topology"), base_dir).string();
  }

  if (j.contains("schedule")) {
    const auto& js = j["schedule"];
    if (js.is_object()) {
      detail::check_keys(js, {"alternate", "period"}, "schedule");
      if (!js.contains("alternate") || !js["alternate"].is_array() || js["alternate"].size() != 2)
        throw ConfigError("'alternate' in schedule must hold two override objects");
      c.schedule.alternate = std::array<Overrides, 2>{
          overrides_from_json(js["alternate"][0], "schedule.alternate[0]"),
          overrides_from_json(js["alternate"][1], "schedule.alternate[1]")};
      c.schedule.period = detail::non_negative(js, "period", 0, "schedule");
      if (c.schedule.period < 1) throw ConfigError("'period' in schedule must be >= 1");
      // Validates both override sets.
      ParameterSchedule::alternating((*c.schedule.alternate)[0], (*c.schedule.alternate)[1], 1, 2);
    } else {
      c.schedule.entries = schedule_from_json(js).entries();
    }
  }

  const auto mode = get_or<std::string>(j, "mode", "adaptive", top);
  if (mode == "adaptive")
    c.mode = ClusteringMode::kAdaptive;
  else if (mode == "static")
    c.mode = ClusteringMode::kStatic;
  else
    throw ConfigError("'mode' must be 'adaptive' or 'static', got '" + mode + "'");

  if (j.contains("partition")) {
    const auto& jp = j["partition"];
    if (jp.is_string()) {
      const auto s = jp.get<std::string>();
      if (s == "whole")
        c.partition.kind = PartitionSpec::Kind::kWhole;
      else if (s == "singletons")
        c.partition.kind = PartitionSpec::Kind::kSingletons;
      else
        throw ConfigError("'partition' must be 'whole', 'singletons', {\"blocks\": b} or "
                          "{\"clusters\": [...]}, got '" + s + "'");
    } else {
      detail::check_keys(jp, {"blocks", "clusters"}, "partition");
      if (jp.size() != 1) throw ConfigError("'partition' must hold exactly one of 'blocks', 'clusters'");
      if (jp.contains("blocks")) {
        if (c.topology.kind != TopologySpec::Kind::kGrid)
          throw ConfigError("'blocks' in partition needs a grid topology");
        c.partition.kind = PartitionSpec::Kind::kBlocks;
        c.partition.block = detail::positive32(jp, "blocks", 1, "partition");
        if (c.topology.grid.side % c.partition.block != 0)
          throw ConfigError("'blocks' in partition must divide the grid side");
      } else {
        c.partition.kind = PartitionSpec::Kind::kExplicit;
        c.partition.clusters =
            get_required<std::vector<std::vector<NodeId>>>(jp, "clusters", "partition");
        if (c.partition.clusters.empty())
          throw ConfigError("'clusters' in partition must not be empty");
      }
    }
  }

  if (j.contains("thresholds")) {
    if (c.mode == ClusteringMode::kStatic)
      throw ConfigError("'thresholds' conflicts with mode 'static' (thresholds drive adaptive "
                        "reconfiguration only)");
    const auto& jt2 = j["thresholds"];
    ThresholdSpec ts;
    if (jt2.is_string()) {
      const auto s = jt2.get<std::string>();
      if (s == "builtin")
        ts.source = ThresholdSpec::Source::kBuiltin;
      else if (s == "topology-specific")
        ts.source = ThresholdSpec::Source::kTopologySpecific;
      else
        throw ConfigError("'thresholds' must be 'builtin', 'topology-specific' or "
                          "{\"file\": path}, got '" + s + "'");
    } else {
      detail::check_keys(jt2, {"file"}, "thresholds");
      ts.source = ThresholdSpec::Source::kFile;
      ts.file = detail::resolve_path(get_required<std::string>(jt2, "file", "thresholds"),
                                     base_dir)
                    .string();
    }
    c.thresholds = ts;
  } else if (c.mode == ClusteringMode::kAdaptive) {
    c.thresholds = ThresholdSpec{};
  }

  c.k = detail::positive32(j, "k", c.k, top);
  if (c.k < 2) throw ConfigError("'k' must be >= 2");
  c.epoch_length = detail::positive32(j, "epoch_length", c.epoch_length, top);
  c.queue_capacity = detail::positive32(j, "queue_capacity", c.queue_capacity, top);

  if (j.contains("requests")) {
    const auto& jr = j["requests"];
    detail::check_keys(jr, {"kind", "near", "far", "near_share"}, "requests");
    const auto kind = get_or<std::string>(jr, "kind", "uniform", "requests");
    if (kind == "uniform") {
      if (jr.size() > 1) throw ConfigError("uniform requests take no further keys");
      c.requests.kind = RequestDistribution::Kind::kUniform;
    } else if (kind == "bimodal") {
      c.requests.kind = RequestDistribution::Kind::kBimodal;
      c.requests.near = get_or<double>(jr, "near", c.requests.near, "requests");
      c.requests.far = get_or<double>(jr, "far", c.requests.far, "requests");
      c.requests.near_share = get_or<double>(jr, "near_share", c.requests.near_share, "requests");
      for (double v : {c.requests.near, c.requests.far, c.requests.near_share})
        if (!valid_probability(v)) throw ConfigError("bimodal request fractions must lie in [0,1]");
    } else {
      throw ConfigError("'kind' in requests must be 'uniform' or 'bimodal', got '" + kind + "'");
    }
  }

  const auto sel = get_or<std::string>(j, "edge_selection", "all", top);
  if (sel == "all")
    c.edge_selection = EdgeSelection::kAllPathEdges;
  else if (sel == "consecutive")
    c.edge_selection = EdgeSelection::kConsecutiveOnly;
  else
    throw ConfigError("'edge_selection' must be 'all' or 'consecutive', got '" + sel + "'");

  c.slots = detail::non_negative(j, "slots", 0, top);
  c.seed = detail::non_negative(j, "seed", c.seed, top);
  c.window = detail::non_negative(j, "window", 0, top);

  const auto trace = get_or<std::string>(j, "trace", "none", top);
  if (trace == "none")
    c.trace = TraceLevel::kNone;
  else if (trace == "routing")
    c.trace = TraceLevel::kRouting;
  else if (trace == "full")
    c.trace = TraceLevel::kFull;
  else
    throw ConfigError("'trace' must be 'none', 'routing' or 'full', got '" + trace + "'");

  c.output = get_or<std::string>(j, "output", "", top);
  return c;
}

/// Full form with every default written out; parse_config(config_to_json(c))
/// == c.
inline Json config_to_json(const RunConfig& c) {
  Json j;
  switch (c.topology.kind) {
    case TopologySpec::Kind::kGrid: {
      const auto& g = c.topology.grid;
      Json jg{{"side", g.side}, {"width", g.width}, {"p", g.p}, {"q", g.q}};
      if (g.qubits == kUnlimitedQubits)
        jg["qubits"] = nullptr;
      else
        jg["qubits"] = g.qubits;
      j["topology"] = Json{{"grid", jg}};
      break;
    }
    case TopologySpec::Kind::kWaxman: {
      const auto& w = c.topology.waxman;
      j["topology"] = Json{{"waxman",
                            {{"n", w.n},
                             {"avg_degree", w.target_avg_degree},
                             {"qubits", {w.qubit_range.lo, w.qubit_range.hi}},
                             {"width", {w.width_range.lo, w.width_range.hi}},
                             {"mean_p", w.mean_p},
                             {"q", w.q},
                             {"seed", w.seed},
                             {"alpha", w.alpha_w},
                             {"beta", w.beta_w}}}};
      break;
    }
    case TopologySpec::Kind::kFile:
      j["topology"] = Json{{"file", c.topology.file}};
      break;
  }
  if (c.schedule.alternate)
    j["schedule"] = Json{{"alternate",
                          {overrides_to_json((*c.schedule.alternate)[0]),
                           overrides_to_json((*c.schedule.alternate)[1])}},
                         {"period", c.schedule.period}};
  else
    j["schedule"] = schedule_to_json(ParameterSchedule(c.schedule.entries));
  j["mode"] = c.mode == ClusteringMode::kAdaptive ? "adaptive" : "static";
  switch (c.partition.kind) {
    case PartitionSpec::Kind::kWhole: j["partition"] = "whole"; break;
    case PartitionSpec::Kind::kSingletons: j["partition"] = "singletons"; break;
    case PartitionSpec::Kind::kBlocks: j["partition"] = Json{{"blocks", c.partition.block}}; break;
    case PartitionSpec::Kind::kExplicit:
      j["partition"] = Json{{"clusters", c.partition.clusters}};
      break;
  }
  if (c.thresholds) {
    switch (c.thresholds->source) {
      case ThresholdSpec::Source::kBuiltin: j["thresholds"] = "builtin"; break;
      case ThresholdSpec::Source::kTopologySpecific: j["thresholds"] = "topology-specific"; break;
      case ThresholdSpec::Source::kFile: j["thresholds"] = Json{{"file", c.thresholds->file}}; break;
    }
  }
  j["k"] = c.k;
  j["epoch_length"] = c.epoch_length;
  j["queue_capacity"] = c.queue_capacity;
  if (c.requests.kind == RequestDistribution::Kind::kUniform)
    j["requests"] = Json{{"kind", "uniform"}};
  else
    j["requests"] = Json{{"kind", "bimodal"},
                         {"near", c.requests.near},
                         {"far", c.requests.far},
                         {"near_share", c.requests.near_share}};
  j["edge_selection"] = c.edge_selection == EdgeSelection::kAllPathEdges ? "all" : "consecutive";
  j["slots"] = c.slots;
  j["seed"] = c.seed;
  j["window"] = c.window;
  const char* traces[] = {"none", "routing", "full"};
  j["trace"] = traces[static_cast<int>(c.trace)];
  j["output"] = c.output;
  return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json_file(path), path.parent_path());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the canonical config form with the output directory blanked, so
/// the same experiment written to different places hashes alike.
inline std::string config_hash(const RunConfig& c) {
  RunConfig copy = c;
  copy.output.clear();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(copy).dump())));
  return buf;
}

}  // namespace quarc
