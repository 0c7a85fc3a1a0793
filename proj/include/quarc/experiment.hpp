#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "quarc/builtin_thresholds.hpp"
#include "quarc/calibration.hpp"
#include "quarc/config.hpp"
#include "quarc/engine.hpp"
#include "quarc/error.hpp"
#include "quarc/io.hpp"
#include "quarc/metrics.hpp"
#include "quarc/thresholds.hpp"
#include "quarc/topology.hpp"

namespace quarc {

inline constexpr const char* kVersion = "1.0.0";

inline NetworkGraph build_topology(const RunConfig& c) {
  switch (c.topology.kind) {
    case TopologySpec::Kind::kGrid: {
      const auto& g = c.topology.grid;
      return make_grid(g.side, g.width, g.qubits, g.p, g.q);
    }
    case TopologySpec::Kind::kWaxman:
      return make_waxman(c.topology.waxman);
    case TopologySpec::Kind::kFile:
      return topology_from_json(read_json_file(c.topology.file));
  }
  throw ConfigError("unknown topology kind");
}

inline std::vector<std::vector<NodeId>> build_partition(const RunConfig& c,
                                                        const NetworkGraph& g) {
  switch (c.partition.kind) {
    case PartitionSpec::Kind::kWhole:
      return {};
    case PartitionSpec::Kind::kSingletons: {
      std::vector<std::vector<NodeId>> parts;
      for (NodeId n = 0; n < g.node_count(); ++n) parts.push_back({n});
      return parts;
    }
    case PartitionSpec::Kind::kBlocks:
      return grid_block_partition(c.topology.grid.side, c.partition.block);
    case PartitionSpec::Kind::kExplicit:
      return c.partition.clusters;
  }
  return {};
}

inline double mean_fusion_prob(const NetworkGraph& g) {
  double sum = 0.0;
  for (const auto& n : g.nodes()) sum += n.fusion_prob;
  return g.node_count() == 0 ? 0.0 : sum / static_cast<double>(g.node_count());
}

/// The table an adaptive run uses, or nullopt in static mode.
inline std::optional<ThresholdTable> resolve_thresholds(const RunConfig& c, const NetworkGraph& g,
                                                        unsigned jobs = 1) {
  if (c.mode == ClusteringMode::kStatic || !c.thresholds) return std::nullopt;
  switch (c.thresholds->source) {
    case ThresholdSpec::Source::kBuiltin:
      return builtin_grid_thresholds();
    case ThresholdSpec::Source::kFile:
      return thresholds_from_json(read_json_file(c.thresholds->file));
    case ThresholdSpec::Source::kTopologySpecific: {
      TopologyCalibrationConfig tc;
      tc.q = mean_fusion_prob(g);
      tc.reconfig = ReconfigConfig{c.k, c.epoch_length};
      tc.queue_capacity = c.queue_capacity;
      tc.seed = c.seed;
      tc.jobs = jobs;
      return derive_topology_thresholds(g, builtin_grid_thresholds(), tc).table;
    }
  }
  return std::nullopt;
}

inline SimulationConfig simulation_config(const RunConfig& c,
                                          std::shared_ptr<const NetworkGraph> g,
                                          std::optional<ThresholdTable> table) {
  SimulationConfig sc;
  sc.partition = build_partition(c, *g);
  sc.graph = std::move(g);
  sc.schedule = c.schedule.resolve(c.slots);
  sc.mode = c.mode;
  sc.thresholds = std::move(table);
  sc.reconfig = ReconfigConfig{c.k, c.epoch_length};
  sc.queue_capacity = c.queue_capacity;
  sc.requests = c.requests;
  sc.edge_selection = c.edge_selection;
  sc.slots = c.slots;
  sc.seed = c.seed;
  return sc;
}

/// JSON-lines slot trace. "routing" records queue order and path choices;
/// "full" adds assigned channels, link and fusion outcomes.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, TraceLevel level)
      : out_(path, std::ios::binary | std::ios::trunc), level_(level), path_(path) {
    if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void operator()(const SlotEvent& ev) {
    Json j;
    j["slot"] = ev.slot;
    j["epoch"] = ev.epoch;
    j["queue"] = Json::array();
    for (const auto& r : ev.queue)
      j["queue"].push_back(Json{{"request", r.id}, {"source", r.source},
                                {"destination", r.destination}, {"arrival", r.arrival_slot}});
    j["skipped"] = ev.selection.skipped;
    j["served"] = Json::array();
    for (const auto& s : ev.served) {
      Json js{{"request", s.request.id},
              {"clusters", s.path.clusters},
              {"success", s.outcome.success},
              {"passes", s.outcome.passes}};
      if (level_ == TraceLevel::kFull) {
        js["channels"] = Json::array();
        for (const auto& c : s.assignment.assigned) js["channels"].push_back({c.edge, c.index});
        js["links"] = Json::array();
        for (const auto& l : s.outcome.links)
          js["links"].push_back({l.channel.edge, l.channel.index, l.success});
        js["fusions"] = Json::array();
        for (const auto& f : s.outcome.fusions) {
          Json links = Json::array();
          for (const auto& c : f.links) links.push_back({c.edge, c.index});
          js["fusions"].push_back(Json{{"node", f.node}, {"tier", f.tier},
                                       {"links", links}, {"success", f.success}});
        }
      }
      j["served"].push_back(std::move(js));
    }
    out_ << j.dump() << '\n';
    if (!out_) throw IoError("failed writing " + path_.string());
  }

 private:
  std::ofstream out_;
  TraceLevel level_;
  std::filesystem::path path_;
};

struct RunArtifacts {
  MetricsLog log;
  Report report;
  std::optional<ThresholdTable> thresholds;
  std::vector<std::string> files;  // written, relative to the output directory
};

inline Json run_manifest(const RunConfig& c, const std::vector<std::string>& files) {
  return Json{{"tool", "quarc_sim"},
              {"version", kVersion},
              {"config_hash", config_hash(c)},
              {"seed", c.seed},
              {"slots", c.slots},
              {"config", config_to_json(c)},
              {"files", files}};
}

/// Runs one configured simulation and writes its artifacts to `out`:
/// config.json, topology.json, thresholds.json (adaptive), the metric and
/// report CSVs, trace.jsonl (if tracing) and manifest.json.
inline RunArtifacts run_experiment(const RunConfig& c, const std::filesystem::path& out,
                                   unsigned jobs = 1) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());

  auto graph = std::make_shared<const NetworkGraph>(build_topology(c));
  RunArtifacts art;
  art.thresholds = resolve_thresholds(c, *graph, jobs);

  write_json_file(out / "config.json", config_to_json(c));
  art.files.push_back("config.json");
  write_json_file(out / "topology.json", topology_to_json(*graph));
  art.files.push_back("topology.json");
  if (art.thresholds) {
    write_json_file(out / "thresholds.json", thresholds_to_json(*art.thresholds));
    art.files.push_back("thresholds.json");
  }

  Simulator sim(simulation_config(c, graph, art.thresholds));
  std::optional<TraceWriter> trace;
  if (c.trace != TraceLevel::kNone) {
    trace.emplace(out / "trace.jsonl", c.trace);
    sim.set_observer([&](const SlotEvent& ev) { (*trace)(ev); });
    art.files.push_back("trace.jsonl");
  }
  art.log = sim.run();
  write_metrics_csv(art.log, out);
  art.report = summarize(art.log, c.window == 0 ? c.epoch_length : c.window);
  write_report_csv(art.report, out);
  for (const char* f : {"slots.csv", "requests.csv", "clusters.csv", "assignments.csv",
                        "throughput.csv", "latency.csv", "hop_success.csv", "region_sizes.csv"})
    art.files.push_back(f);
  write_json_file(out / "manifest.json", run_manifest(c, art.files));
  return art;
}

}  // namespace quarc
