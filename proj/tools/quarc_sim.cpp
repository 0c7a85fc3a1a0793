// Command-line driver: run, calibrate-grid, calibrate-topology, sweep.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "quarc/quarc.hpp"

namespace fs = std::filesystem;
using namespace quarc;

namespace {

constexpr int kExitError = 1;
constexpr int kExitInconclusive = 2;

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> slots;
  std::optional<std::uint32_t> epoch;
  std::string out;
  unsigned jobs = 1;
  std::string trace;
};

void add_common(CLI::App* app, RunFlags& f) {
  app->add_option("--seed", f.seed, "Master seed (overrides the config)");
  app->add_option("--slots", f.slots, "Number of time slots (overrides the config)");
  app->add_option("--epoch", f.epoch, "Epoch length in slots (overrides the config)")
      ->check(CLI::PositiveNumber);
  app->add_option("--out", f.out, "Output directory (fallback: config, then $QUARC_SIM_OUT)");
  app->add_option("--jobs", f.jobs, "Parallel jobs")->check(CLI::PositiveNumber);
}

std::string output_dir(const std::string& flag, const std::string& from_config,
                       const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (!from_config.empty()) return from_config;
  if (const char* env = std::getenv("QUARC_SIM_OUT"); env && *env) return env;
  return fallback;
}

void apply_flags(RunConfig& c, const RunFlags& f) {
  if (f.seed) c.seed = *f.seed;
  if (f.slots) c.slots = *f.slots;
  if (f.epoch) c.epoch_length = *f.epoch;
  if (!f.trace.empty()) {
    Json j = config_to_json(c);
    j["trace"] = f.trace;
    c = parse_config(j);
  }
}

int cmd_run(const RunFlags& f) {
  RunConfig c = load_config(f.config);
  apply_flags(c, f);
  const fs::path out = output_dir(f.out, c.output, "quarc_out");
  const auto art = run_experiment(c, out, f.jobs);
  std::cout << "slots " << art.report.total_slots << ", satisfied " << art.report.total_satisfied
            << ", mean throughput " << format_double(art.report.mean_throughput)
            << " per slot\nwrote " << out.string() << "\n";
  return 0;
}

struct GridFlags {
  std::uint32_t side = 16;
  std::uint32_t width = 1;
  std::uint32_t qubits = 4;
  double q = 0.9;
  double p_min = 0.3;
  double p_max = 1.0;
  double p_step = 0.05;
  std::vector<std::uint32_t> configs;
  std::uint64_t slots = 2000;
  std::uint32_t replications = 10;
  std::uint32_t epoch = 500;
  std::uint64_t seed = 1;
  std::string merge;
};

int cmd_calibrate_grid(const GridFlags& g, const RunFlags& f) {
  GridSweepConfig sc;
  sc.side = g.side;
  sc.width = g.width;
  sc.qubits = g.qubits;
  sc.q = g.q;
  const int n = static_cast<int>(std::floor((g.p_max - g.p_min) / g.p_step + 1e-9));
  for (int i = 0; i <= n; ++i) sc.p_values.push_back(std::round((g.p_min + i * g.p_step) * 1e9) / 1e9);
  sc.configs = g.configs;
  if (sc.configs.empty())
    for (std::uint32_t b = 1; b <= g.side; b *= 2)
      if (g.side % b == 0) sc.configs.push_back(b);
  sc.slots = f.slots.value_or(g.slots);
  sc.replications = g.replications;
  sc.epoch_length = f.epoch.value_or(g.epoch);
  sc.seed = f.seed.value_or(g.seed);
  sc.jobs = f.jobs;
  const fs::path out = output_dir(f.out, "", "quarc_calibration");

  const auto sweep = sweep_static_grid(sc);
  std::ostringstream csv;
  csv << "p,config,cluster_size,replications,mean_throughput,sem,ci_lo,ci_hi,passing_rate\n";
  for (const auto& pt : sweep.points)
    csv << format_double(pt.p) << ',' << pt.config << ',' << pt.cluster_size << ','
        << pt.throughput.n << ',' << format_double(pt.throughput.mean) << ','
        << format_double(pt.throughput.sem) << ',' << format_double(pt.throughput.lo) << ','
        << format_double(pt.throughput.hi) << ',' << format_double(pt.passing_rate.mean) << '\n';
  write_text_file(out / "sweep.csv", csv.str());

  const auto cal = derive_2d_thresholds_with_crossings(sweep);
  std::ostringstream xs;
  xs << "p,p_lo,p_hi,low_p_best,high_p_best,small_size,small_rate,big_size,big_rate\n";
  for (const auto& x : cal.crossings)
    xs << format_double(x.p) << ',' << format_double(x.p_lo) << ',' << format_double(x.p_hi)
       << ',' << x.low_p_best << ',' << x.high_p_best << ',' << x.small_size << ','
       << format_double(x.small_rate) << ',' << x.big_size << ',' << format_double(x.big_rate)
       << '\n';
  write_text_file(out / "crossings.csv", xs.str());

  std::vector<SizeThresholds> tables = cal.table.tables();
  if (!g.merge.empty()) {
    for (const auto& t : thresholds_from_json(read_json_file(g.merge)).tables())
      if (t.network_size != tables.front().network_size) tables.push_back(t);
  }
  write_json_file(out / "thresholds.json", thresholds_to_json(ThresholdTable(tables)));
  write_json_file(out / "manifest.json",
                  Json{{"tool", "quarc_sim"},
                       {"version", kVersion},
                       {"command", "calibrate-grid"},
                       {"side", sc.side},
                       {"width", sc.width},
                       {"qubits", sc.qubits},
                       {"q", sc.q},
                       {"p_values", sc.p_values},
                       {"configs", sc.configs},
                       {"slots", sc.slots},
                       {"replications", sc.replications},
                       {"epoch_length", sc.epoch_length},
                       {"seed", sc.seed},
                       {"files", {"sweep.csv", "crossings.csv", "thresholds.json"}}});
  std::cout << cal.crossings.size() << " crossing(s); wrote " << out.string() << "\n";
  return 0;
}

struct TopologyFlags {
  std::string topology;
  std::string grid_thresholds;
  TopologyCalibrationConfig cal;
};

int cmd_calibrate_topology(TopologyFlags& t, const RunFlags& f) {
  NetworkGraph g;
  std::string out_hint;
  if (!f.config.empty()) {
    RunConfig c = load_config(f.config);
    apply_flags(c, f);
    g = build_topology(c);
    out_hint = c.output;
    t.cal.reconfig = ReconfigConfig{c.k, c.epoch_length};
    t.cal.queue_capacity = c.queue_capacity;
    t.cal.seed = c.seed;
  } else if (!t.topology.empty()) {
    g = topology_from_json(read_json_file(t.topology));
  } else {
    throw ConfigError("calibrate-topology needs --config or --topology");
  }
  if (f.seed) t.cal.seed = *f.seed;
  if (f.slots) t.cal.slots = *f.slots;
  if (f.epoch) t.cal.reconfig.epoch_length = *f.epoch;
  t.cal.jobs = f.jobs;
  const ThresholdTable grid = t.grid_thresholds.empty()
                                  ? builtin_grid_thresholds()
                                  : thresholds_from_json(read_json_file(t.grid_thresholds));
  const fs::path out = output_dir(f.out, out_hint, "quarc_calibration");

  const auto res = derive_topology_thresholds(g, grid, t.cal);
  std::ostringstream bis;
  bis << "p,singleton_mean,singleton_ci_lo,singleton_ci_hi,adaptive_mean,adaptive_ci_lo,"
         "adaptive_ci_hi\n";
  for (const auto& s : res.steps)
    bis << format_double(s.p) << ',' << format_double(s.singleton.mean) << ','
        << format_double(s.singleton.lo) << ',' << format_double(s.singleton.hi) << ','
        << format_double(s.adaptive.mean) << ',' << format_double(s.adaptive.lo) << ','
        << format_double(s.adaptive.hi) << '\n';
  write_text_file(out / "bisection.csv", bis.str());
  std::ostringstream rates;
  rates << "passing_rate\n";
  for (double r : res.steady_rates) rates << format_double(r) << '\n';
  write_text_file(out / "steady_rates.csv", rates.str());
  write_json_file(out / "thresholds.json", thresholds_to_json(res.table));
  write_json_file(out / "manifest.json",
                  Json{{"tool", "quarc_sim"},
                       {"version", kVersion},
                       {"command", "calibrate-topology"},
                       {"seed", t.cal.seed},
                       {"p_star", res.p_star},
                       {"split_cap", res.split_cap},
                       {"merge_cap", res.merge_cap},
                       {"steady_epoch", res.steady_epoch},
                       {"files", {"bisection.csv", "steady_rates.csv", "thresholds.json"}}});
  std::cout << "p* = " << format_double(res.p_star) << ", split cap "
            << format_double(res.split_cap) << ", merge cap " << format_double(res.merge_cap)
            << "\nwrote " << out.string() << "\n";
  return 0;
}

std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& specs) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : specs) {
    const auto dots = s.find("..");
    try {
      if (dots == std::string::npos) {
        seeds.push_back(std::stoull(s));
      } else {
        const auto lo = std::stoull(s.substr(0, dots)), hi = std::stoull(s.substr(dots + 2));
        if (lo > hi) throw ConfigError("empty seed range '" + s + "'");
        for (auto v = lo; v <= hi; ++v) seeds.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad seed '" + s + "' (use N or LO..HI)");
    }
  }
  return seeds;
}

int cmd_sweep(const std::vector<std::string>& configs, const std::vector<std::string>& seed_specs,
              const RunFlags& f) {
  if (configs.empty()) throw ConfigError("sweep needs --configs");
  const auto seeds = parse_seeds(seed_specs);
  if (seeds.empty()) throw ConfigError("sweep needs --seeds");
  const fs::path out = output_dir(f.out, "", "quarc_sweep");

  struct Job {
    std::size_t config;
    std::uint64_t seed;
    fs::path dir;
  };
  std::vector<RunConfig> loaded;
  std::vector<std::string> names;
  for (const auto& path : configs) {
    loaded.push_back(load_config(path));
    apply_flags(loaded.back(), RunFlags{"", std::nullopt, f.slots, f.epoch, "", 1, f.trace});
    std::string name = fs::path(path).stem().string();
    for (int dup = 2; std::find(names.begin(), names.end(), name) != names.end(); ++dup)
      name = fs::path(path).stem().string() + "-" + std::to_string(dup);
    names.push_back(name);
  }
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < loaded.size(); ++c)
    for (auto s : seeds)
      jobs.push_back(Job{c, s, out / names[c] / ("seed-" + std::to_string(s))});

  std::vector<Report> reports(jobs.size());
  parallel_for(jobs.size(), f.jobs, [&](std::size_t i) {
    RunConfig c = loaded[jobs[i].config];
    c.seed = jobs[i].seed;
    reports[i] = run_experiment(c, jobs[i].dir).report;
  });

  // Aggregates are recomputed from the per-seed summaries in job order.
  std::ostringstream agg, series;
  agg << "config,metric,seeds,mean,sd,sem\n";
  series << "config,window,start_slot,seeds,mean,sem\n";
  for (std::size_t c = 0; c < loaded.size(); ++c) {
    std::map<std::string, std::vector<double>> metrics;
    std::vector<std::vector<double>> windows;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].config != c) continue;
      const auto& r = reports[i];
      metrics["throughput"].push_back(r.mean_throughput);
      metrics["latency_mean"].push_back(r.latency.count ? r.latency.mean : std::nan(""));
      std::uint64_t generated = 0, satisfied = 0;
      for (const auto& b : r.by_hop) {
        generated += b.generated;
        satisfied += b.satisfied;
      }
      metrics["starvation"].push_back(
          generated ? 1.0 - static_cast<double>(satisfied) / static_cast<double>(generated) : 0.0);
      if (windows.size() < r.throughput.size()) windows.resize(r.throughput.size());
      for (std::size_t w = 0; w < r.throughput.size(); ++w) windows[w].push_back(r.throughput[w]);
    }
    for (const auto& [metric, xs] : metrics) {
      std::vector<double> finite;
      for (double x : xs)
        if (!std::isnan(x)) finite.push_back(x);
      const auto e = estimate(finite);
      agg << names[c] << ',' << metric << ',' << e.n << ',' << format_double(e.mean) << ','
          << format_double(e.sd) << ',' << format_double(e.sem) << '\n';
    }
    const auto window = loaded[c].window == 0 ? loaded[c].epoch_length : loaded[c].window;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const auto e = estimate(windows[w]);
      series << names[c] << ',' << w << ',' << w * window << ',' << e.n << ','
             << format_double(e.mean) << ',' << format_double(e.sem) << '\n';
    }
  }
  write_text_file(out / "aggregate.csv", agg.str());
  write_text_file(out / "aggregate_throughput.csv", series.str());
  Json manifest{{"tool", "quarc_sim"}, {"version", kVersion}, {"command", "sweep"},
                {"seeds", seeds}, {"runs", Json::array()}};
  for (const auto& j : jobs)
    manifest["runs"].push_back(Json{{"config", names[j.config]},
                                    {"config_hash", config_hash(loaded[j.config])},
                                    {"seed", j.seed},
                                    {"dir", fs::relative(j.dir, out).string()}});
  write_json_file(out / "manifest.json", manifest);
  std::cout << jobs.size() << " run(s); wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive-clustering entanglement routing simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run one configured simulation");
  run->add_option("--config", run_flags.config, "Run configuration (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  add_common(run, run_flags);
  run->add_option("--trace", run_flags.trace, "Slot trace level")
      ->check(CLI::IsMember({"none", "routing", "full"}));

  GridFlags grid_flags;
  RunFlags grid_run;
  auto* cal_grid = app.add_subcommand("calibrate-grid", "Derive 2-D grid thresholds");
  cal_grid->add_option("--side", grid_flags.side, "Grid side")->check(CLI::PositiveNumber);
  cal_grid->add_option("--width", grid_flags.width, "Channels per edge")->check(CLI::PositiveNumber);
  cal_grid->add_option("--qubits", grid_flags.qubits, "Qubits per node")->check(CLI::PositiveNumber);
  cal_grid->add_option("--q", grid_flags.q, "Fusion success probability")->check(CLI::Range(0.0, 1.0));
  cal_grid->add_option("--p-min", grid_flags.p_min, "Smallest swept p")->check(CLI::Range(0.0, 1.0));
  cal_grid->add_option("--p-max", grid_flags.p_max, "Largest swept p")->check(CLI::Range(0.0, 1.0));
  cal_grid->add_option("--p-step", grid_flags.p_step, "p grid step")->check(CLI::PositiveNumber);
  cal_grid->add_option("--configs", grid_flags.configs, "Block sides (default: powers of two)");
  cal_grid->add_option("--replications", grid_flags.replications, "Seeds per point")
      ->check(CLI::PositiveNumber);
  cal_grid->add_option("--merge", grid_flags.merge,
                       "Existing thresholds JSON whose other network sizes are kept")
      ->check(CLI::ExistingFile);
  add_common(cal_grid, grid_run);

  TopologyFlags topo_flags;
  RunFlags topo_run;
  auto* cal_topo = app.add_subcommand("calibrate-topology", "Derive topology-specific thresholds");
  cal_topo->add_option("--config", topo_run.config, "Run configuration naming the topology")
      ->check(CLI::ExistingFile);
  cal_topo->add_option("--topology", topo_flags.topology, "Topology JSON")->check(CLI::ExistingFile);
  cal_topo->add_option("--grid-thresholds", topo_flags.grid_thresholds,
                       "Grid thresholds JSON (default: built-in)")
      ->check(CLI::ExistingFile);
  cal_topo->add_option("--q", topo_flags.cal.q, "Fusion success probability")
      ->check(CLI::Range(0.0, 1.0));
  cal_topo->add_option("--p-lo", topo_flags.cal.p_lo, "Lower end of the p* bracket");
  cal_topo->add_option("--p-hi", topo_flags.cal.p_hi, "Upper end of the p* bracket");
  cal_topo->add_option("--warmup", topo_flags.cal.warmup_slots, "Slots excluded from throughput");
  cal_topo->add_option("--replications", topo_flags.cal.replications, "Seeds per estimate");
  add_common(cal_topo, topo_run);

  RunFlags sweep_flags;
  std::vector<std::string> sweep_configs, sweep_seeds{"1..10"};
  auto* sweep = app.add_subcommand("sweep", "Run configurations over several seeds");
  sweep->add_option("--configs", sweep_configs, "Run configurations")
      ->required()
      ->check(CLI::ExistingFile);
  sweep->add_option("--seeds", sweep_seeds, "Seeds: N or LO..HI, repeatable");
  add_common(sweep, sweep_flags);
  sweep->add_option("--trace", sweep_flags.trace, "Slot trace level")
      ->check(CLI::IsMember({"none", "routing", "full"}));

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_flags);
    if (*cal_grid) return cmd_calibrate_grid(grid_flags, grid_run);
    if (*cal_topo) return cmd_calibrate_topology(topo_flags, topo_run);
    if (*sweep) return cmd_sweep(sweep_configs, sweep_seeds, sweep_flags);
  } catch (const CalibrationInconclusive& e) {
    std::cerr << "calibration inconclusive: " << e.what() << "\n";
    return kExitInconclusive;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return 0;
}
