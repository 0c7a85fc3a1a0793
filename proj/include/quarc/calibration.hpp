#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quarc/clustering.hpp"
#include "quarc/engine.hpp"
#include "quarc/error.hpp"
#include "quarc/jobs.hpp"
#include "quarc/metrics.hpp"
#include "quarc/rng.hpp"
#include "quarc/stats.hpp"
#include "quarc/thresholds.hpp"
#include "quarc/topology.hpp"

namespace quarc {

/// Mean over (epoch, cluster) records with at least one attempt of
/// passes / attempts; NaN when no cluster was ever attempted.
inline double mean_passing_rate(const MetricsLog& log, std::uint64_t first_epoch = 0) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : log.clusters) {
    if (c.epoch < first_epoch || c.attempts == 0) continue;
    sum += static_cast<double>(c.passes) / static_cast<double>(c.attempts);
    ++n;
  }
  return n == 0 ? std::nan("") : sum / static_cast<double>(n);
}

/// Mean satisfied requests per slot from `first_slot` on.
inline double mean_throughput(const MetricsLog& log, std::uint64_t first_slot = 0) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : log.slots) {
    if (s.slot < first_slot) continue;
    sum += s.satisfied;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

struct GridSweepConfig {
  std::uint32_t side = 16;
  std::uint32_t width = 1;
  std::uint32_t qubits = 4;
  double q = 0.9;
  std::vector<double> p_values;
  std::vector<std::uint32_t> configs;  // square block sides
  std::uint64_t slots = 2000;
  std::uint32_t replications = 10;
  std::uint32_t queue_capacity = 10;
  std::uint32_t epoch_length = 500;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct SweepPoint {
  double p = 0.0;
  std::uint32_t config = 0;        // block side
  std::uint32_t cluster_size = 0;  // config^2
  Estimate throughput;
  Estimate passing_rate;
  std::vector<double> throughput_samples;  // per replication
  std::vector<double> passing_samples;
};

struct GridSweep {
  std::uint32_t side = 0;
  std::vector<double> p_values;         // ascending
  std::vector<std::uint32_t> configs;   // ascending
  std::vector<SweepPoint> points;       // ordered by (p, config)

  const SweepPoint& at(std::size_t p_index, std::size_t config_index) const {
    return points.at(p_index * configs.size() + config_index);
  }
};

/// Seed of replication r; shared by every sweep point so that
/// configurations are compared on common random numbers.
inline std::uint64_t replication_seed(std::uint64_t master, std::uint64_t r) {
  return derive_seed(master, {static_cast<std::uint64_t>(Stream::kCalibration), r});
}

/// Static square-block clustering on the grid for every (p, config), with
/// a t-interval over replications.
inline GridSweep sweep_static_grid(const GridSweepConfig& cfg) {
  if (cfg.p_values.empty() || cfg.configs.empty())
    throw DomainError("sweep needs at least one p value and one configuration");
  for (auto c : cfg.configs)
    if (c == 0 || cfg.side % c != 0)
      throw DomainError("configuration " + std::to_string(c) + " does not divide side " +
                        std::to_string(cfg.side));
  for (double p : cfg.p_values)
    if (!valid_probability(p)) throw DomainError("sweep p outside [0,1]");
  if (!valid_probability(cfg.q)) throw DomainError("sweep q outside [0,1]");
  if (cfg.replications < 1) throw DomainError("sweep needs at least one replication");

  GridSweep out;
  out.side = cfg.side;
  out.p_values = cfg.p_values;
  std::sort(out.p_values.begin(), out.p_values.end());
  out.p_values.erase(std::unique(out.p_values.begin(), out.p_values.end()), out.p_values.end());
  out.configs = cfg.configs;
  std::sort(out.configs.begin(), out.configs.end());
  out.configs.erase(std::unique(out.configs.begin(), out.configs.end()), out.configs.end());

  const std::size_t n_points = out.p_values.size() * out.configs.size();
  const std::size_t n_jobs = n_points * cfg.replications;
  std::vector<double> thr(n_jobs), rate(n_jobs);
  parallel_for(n_jobs, cfg.jobs, [&](std::size_t job) {
    const std::size_t point = job / cfg.replications;
    const std::size_t rep = job % cfg.replications;
    const double p = out.p_values[point / out.configs.size()];
    const auto block = out.configs[point % out.configs.size()];
    SimulationConfig sc;
    sc.graph = std::make_shared<const NetworkGraph>(
        make_grid(cfg.side, cfg.width, cfg.qubits, p, cfg.q));
    sc.mode = ClusteringMode::kStatic;
    sc.partition = grid_block_partition(cfg.side, block);
    sc.reconfig.epoch_length = cfg.epoch_length;
    sc.queue_capacity = cfg.queue_capacity;
    sc.slots = cfg.slots;
    sc.seed = replication_seed(cfg.seed, rep);
    const auto log = run_simulation(std::move(sc));
    thr[job] = mean_throughput(log);
    rate[job] = mean_passing_rate(log);
  });

  for (std::size_t point = 0; point < n_points; ++point) {
    SweepPoint sp;
    sp.p = out.p_values[point / out.configs.size()];
    sp.config = out.configs[point % out.configs.size()];
    sp.cluster_size = sp.config * sp.config;
    for (std::uint32_t r = 0; r < cfg.replications; ++r) {
      sp.throughput_samples.push_back(thr[point * cfg.replications + r]);
      const double pr = rate[point * cfg.replications + r];
      if (!std::isnan(pr)) sp.passing_samples.push_back(pr);
    }
    sp.throughput = estimate(sp.throughput_samples);
    sp.passing_rate = estimate(sp.passing_samples);
    out.points.push_back(std::move(sp));
  }
  return out;
}

/// A change of the best configuration between adjacent p values, confirmed
/// by CI-separated points on both sides.
struct Crossing {
  double p_lo = 0.0;  // last p where `low_p_best` leads
  double p_hi = 0.0;  // first p where `high_p_best` leads
  double p = 0.0;     // interpolated equal-throughput point
  std::uint32_t low_p_best = 0;   // config side
  std::uint32_t high_p_best = 0;
  std::uint32_t small_size = 0;   // cluster sizes
  std::uint32_t big_size = 0;
  double small_rate = 0.0;  // passing rates at p
  double big_rate = 0.0;
};

struct GridCalibration {
  ThresholdTable table;
  std::vector<Crossing> crossings;
};

namespace detail {

/// Lowers merge knots where they would exceed the split curve. Evaluated on
/// the union of knot sizes, where both curves are linear between knots.
inline std::vector<ThresholdPoint> cap_merge_by_split(const std::vector<ThresholdPoint>& merge,
                                                      const std::vector<ThresholdPoint>& split) {
  std::set<double> sizes;
  for (const auto& k : merge) sizes.insert(k.size);
  for (const auto& k : split) sizes.insert(k.size);
  std::vector<ThresholdPoint> out;
  for (double s : sizes)
    out.push_back(ThresholdPoint{s, std::min(interpolate_knots(merge, s),
                                             interpolate_knots(split, s))});
  return out;
}

inline std::vector<ThresholdPoint> average_knots(const std::map<double, std::vector<double>>& m) {
  std::vector<ThresholdPoint> out;
  for (const auto& [size, vals] : m) {
    double sum = 0.0;
    for (double v : vals) sum += v;
    out.push_back(ThresholdPoint{size, sum / static_cast<double>(vals.size())});
  }
  return out;
}

}  // namespace detail

/// Maps each CI-separated change of the best configuration to a split knot
/// for the larger cluster size and a merge knot for the smaller one, using
/// the passing rates at the interpolated crossing.
inline GridCalibration derive_2d_thresholds_with_crossings(const GridSweep& sweep) {
  if (sweep.configs.size() < 2) throw DomainError("threshold derivation needs two configurations");
  if (sweep.p_values.size() < 2) throw DomainError("threshold derivation needs two p values");
  const std::size_t np = sweep.p_values.size(), nc = sweep.configs.size();
  auto best = [&](std::size_t pi) {
    std::size_t b = 0;
    for (std::size_t c = 1; c < nc; ++c)
      if (sweep.at(pi, c).throughput.mean > sweep.at(pi, b).throughput.mean) b = c;
    return b;
  };

  GridCalibration out;
  std::map<double, std::vector<double>> split, merge;
  for (std::size_t j = 0; j + 1 < np; ++j) {
    const std::size_t a = best(j), b = best(j + 1);
    if (a == b) continue;
    bool left = false, right = false;
    for (std::size_t i = j + 1; i-- > 0 && !left;)
      left = sweep.at(i, a).throughput.separated_above(sweep.at(i, b).throughput);
    for (std::size_t i = j + 1; i < np && !right; ++i)
      right = sweep.at(i, b).throughput.separated_above(sweep.at(i, a).throughput);
    if (!left || !right) continue;

    const double d0 = sweep.at(j, a).throughput.mean - sweep.at(j, b).throughput.mean;
    const double d1 = sweep.at(j + 1, a).throughput.mean - sweep.at(j + 1, b).throughput.mean;
    const double t = d0 - d1 > 0.0 ? d0 / (d0 - d1) : 0.5;
    auto rate_at = [&](std::size_t c) {
      const double r0 = sweep.at(j, c).passing_rate.mean;
      const double r1 = sweep.at(j + 1, c).passing_rate.mean;
      return r0 + t * (r1 - r0);
    };
    Crossing x;
    x.p_lo = sweep.p_values[j];
    x.p_hi = sweep.p_values[j + 1];
    x.p = x.p_lo + t * (x.p_hi - x.p_lo);
    x.low_p_best = sweep.configs[a];
    x.high_p_best = sweep.configs[b];
    const std::size_t small = std::min(a, b), big = std::max(a, b);
    x.small_size = sweep.configs[small] * sweep.configs[small];
    x.big_size = sweep.configs[big] * sweep.configs[big];
    x.small_rate = rate_at(small);
    x.big_rate = rate_at(big);
    if (std::isnan(x.small_rate) || std::isnan(x.big_rate)) continue;
    split[x.big_size].push_back(x.big_rate);
    merge[x.small_size].push_back(x.small_rate);
    out.crossings.push_back(x);
  }
  if (out.crossings.empty())
    throw CalibrationInconclusive("no CI-separated change of the best configuration was found");

  SizeThresholds st;
  st.network_size = sweep.side * sweep.side;
  st.split = detail::average_knots(split);
  st.merge = detail::cap_merge_by_split(detail::average_knots(merge), st.split);
  out.table = ThresholdTable({st});
  return out;
}

inline ThresholdTable derive_2d_thresholds(const GridSweep& sweep) {
  return derive_2d_thresholds_with_crossings(sweep).table;
}

struct TopologyCalibrationConfig {
  double q = 0.9;
  double p_lo = 0.05;
  double p_hi = 0.95;
  int max_iterations = 20;
  int scan_points = 8;  // coarse grid tried when the bracket ends do not differ in sign
  std::uint64_t slots = 3000;         // per throughput estimate
  std::uint64_t warmup_slots = 1000;  // excluded from throughput
  std::uint32_t replications = 5;
  std::uint32_t queue_capacity = 10;
  ReconfigConfig reconfig;
  std::uint32_t steady_epochs = 3;
  std::uint32_t collect_epochs = 5;
  std::uint32_t max_epochs = 100;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
};

struct BisectionStep {
  double p = 0.0;
  Estimate singleton;
  Estimate adaptive;
};

struct TopologyCalibration {
  double p_star = 0.0;
  Estimate singleton;
  Estimate adaptive;
  std::vector<BisectionStep> steps;  // endpoints first
  std::uint64_t steady_epoch = 0;    // first epoch of the collection window
  std::vector<double> steady_rates;  // e_i
  double split_cap = 0.0;            // G_t
  double merge_cap = 0.0;            // singleton passing rate at p*
  ThresholdTable table;
};

namespace detail {

inline NetworkGraph with_mean_p(const NetworkGraph& g, double mean_p, double q) {
  NetworkGraph out = g;
  for (NodeId n = 0; n < out.node_count(); ++n) out.set_fusion_prob(n, q);
  calibrate_alpha(out, mean_p);
  return out;
}

struct ModeRuns {
  Estimate throughput;
  std::vector<double> passing;  // per replication
};

inline ModeRuns run_mode(const std::shared_ptr<const NetworkGraph>& g, bool adaptive,
                         const ThresholdTable& table, const TopologyCalibrationConfig& cfg,
                         std::uint64_t seed) {
  std::vector<double> thr(cfg.replications), rate(cfg.replications);
  parallel_for(cfg.replications, cfg.jobs, [&](std::size_t r) {
    SimulationConfig sc;
    sc.graph = g;
    sc.reconfig = cfg.reconfig;
    sc.queue_capacity = cfg.queue_capacity;
    sc.slots = cfg.slots;
    sc.seed = replication_seed(seed, r);
    if (adaptive) {
      sc.mode = ClusteringMode::kAdaptive;
      sc.thresholds = table;
    } else {
      sc.mode = ClusteringMode::kStatic;
      for (NodeId n = 0; n < g->node_count(); ++n) sc.partition.push_back({n});
    }
    const auto log = run_simulation(std::move(sc));
    thr[r] = mean_throughput(log, cfg.warmup_slots);
    rate[r] = mean_passing_rate(log);
  });
  ModeRuns out;
  out.throughput = estimate(thr);
  for (double r : rate)
    if (!std::isnan(r)) out.passing.push_back(r);
  return out;
}

}  // namespace detail

/// Topology-specific caps on a grid-derived table. Bisects the mean channel
/// probability for the point p* where singleton clusters and adaptive
/// clustering give equal throughput (overlapping 95% intervals), runs the
/// adaptive protocol at p* to steady state, and caps split thresholds at the
/// 75th percentile of steady-state passing rates and merge thresholds at the
/// singleton passing rate at p*.
inline TopologyCalibration derive_topology_thresholds(const NetworkGraph& graph,
                                                      const ThresholdTable& grid_table,
                                                      const TopologyCalibrationConfig& cfg) {
  if (grid_table.empty()) throw DomainError("grid threshold table is empty");
  if (!(cfg.p_lo > 0.0 && cfg.p_lo < cfg.p_hi && cfg.p_hi < 1.0))
    throw DomainError("p* bracket must satisfy 0 < lo < hi < 1");
  if (!valid_probability(cfg.q)) throw DomainError("q outside [0,1]");
  if (cfg.replications < 2) throw DomainError("topology calibration needs two replications");
  if (cfg.warmup_slots >= cfg.slots) throw DomainError("warm-up must be shorter than the run");

  TopologyCalibration out;
  struct Eval {
    detail::ModeRuns singleton, adaptive;
    double gap() const { return adaptive.throughput.mean - singleton.throughput.mean; }
    bool equal() const { return adaptive.throughput.overlaps(singleton.throughput); }
  };
  auto evaluate = [&](double p) {
    auto g = std::make_shared<const NetworkGraph>(detail::with_mean_p(graph, p, cfg.q));
    Eval e{detail::run_mode(g, false, grid_table, cfg, cfg.seed),
           detail::run_mode(g, true, grid_table, cfg, cfg.seed)};
    out.steps.push_back(BisectionStep{p, e.singleton.throughput, e.adaptive.throughput});
    return e;
  };

  auto sign = [](const Eval& e) { return e.gap() > 0.0 ? 1 : e.gap() < 0.0 ? -1 : 0; };
  double lo = cfg.p_lo, hi = cfg.p_hi;
  const int s_lo = sign(evaluate(lo));
  const int s_hi = sign(evaluate(hi));
  bool bracketed = s_lo != 0 && s_hi != 0 && s_lo != s_hi;
  bool lo_positive = s_lo > 0;
  if (!bracketed && cfg.scan_points > 1) {
    // Near-zero throughput at the ends makes their gap sign noise; look for
    // the first sign change on a coarse interior grid instead.
    double prev_p = lo;
    int prev = s_lo;
    for (int i = 1; i <= cfg.scan_points && !bracketed; ++i) {
      const double p = cfg.p_lo + (cfg.p_hi - cfg.p_lo) * i / cfg.scan_points;
      const int s = i == cfg.scan_points ? s_hi : sign(evaluate(p));
      if (prev != 0 && s != 0 && prev != s) {
        lo = prev_p;
        hi = p;
        lo_positive = prev > 0;
        bracketed = true;
      }
      prev_p = p;
      prev = s;
    }
  }
  if (!bracketed)
    throw CalibrationInconclusive("throughput gap never changes sign over the p* bracket");

  std::optional<Eval> found;
  double p_star = 0.0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    Eval e = evaluate(mid);
    if (e.equal()) {
      found = std::move(e);
      p_star = mid;
      break;
    }
    if ((e.gap() > 0.0) == lo_positive)
      lo = mid;
    else
      hi = mid;
  }
  if (!found)
    throw CalibrationInconclusive("bisection did not reach equal throughput within " +
                                  std::to_string(cfg.max_iterations) + " iterations");
  out.p_star = p_star;
  out.singleton = found->singleton.throughput;
  out.adaptive = found->adaptive.throughput;
  if (found->singleton.passing.empty())
    throw CalibrationInconclusive("singleton clusters were never attempted at p*");
  out.merge_cap = estimate(found->singleton.passing).mean;

  // Steady state of the adaptive protocol at p*.
  SimulationConfig sc;
  sc.graph = std::make_shared<const NetworkGraph>(detail::with_mean_p(graph, p_star, cfg.q));
  sc.mode = ClusteringMode::kAdaptive;
  sc.thresholds = grid_table;
  sc.reconfig = cfg.reconfig;
  sc.queue_capacity = cfg.queue_capacity;
  sc.seed = replication_seed(cfg.seed, cfg.replications);
  Simulator sim(std::move(sc));
  auto sizes = [&] {
    std::vector<std::size_t> s;
    for (const auto& c : sim.clustering().clusters()) s.push_back(c.members.size());
    std::sort(s.begin(), s.end());
    return s;
  };
  auto previous = sizes();
  std::uint32_t unchanged = 0;
  std::uint32_t epochs = 0;
  while (unchanged < cfg.steady_epochs) {
    if (epochs++ >= cfg.max_epochs)
      throw CalibrationInconclusive("no steady clustering within " +
                                    std::to_string(cfg.max_epochs) + " epochs");
    sim.run_epoch();
    auto now = sizes();
    unchanged = now == previous ? unchanged + 1 : 0;
    previous = std::move(now);
  }
  out.steady_epoch = sim.epoch();
  for (std::uint32_t e = 0; e < cfg.collect_epochs; ++e) sim.run_epoch();
  for (const auto& c : sim.log().clusters)
    if (c.epoch >= out.steady_epoch && c.attempts > 0)
      out.steady_rates.push_back(static_cast<double>(c.passes) / static_cast<double>(c.attempts));
  if (out.steady_rates.empty())
    throw CalibrationInconclusive("no cluster was attempted during the steady-state window");
  out.split_cap = nearest_rank_percentile(out.steady_rates, 75.0);

  std::set<double> knot_sizes;
  for (const auto& t : grid_table.tables()) {
    for (const auto& k : t.split) knot_sizes.insert(k.size);
    for (const auto& k : t.merge) knot_sizes.insert(k.size);
  }
  const auto n = static_cast<std::uint32_t>(graph.node_count());
  SizeThresholds st;
  st.network_size = n;
  for (double s : knot_sizes) {
    const auto base = grid_table.lookup(s, n);
    const double split = std::min(out.split_cap, base.split);
    st.split.push_back(ThresholdPoint{s, split});
    st.merge.push_back(ThresholdPoint{s, std::min({out.merge_cap, base.merge, split})});
  }
  out.table = ThresholdTable({st});
  return out;
}

}  // namespace quarc
