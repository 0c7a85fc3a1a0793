#include <catch_amalgamated.hpp>

#include <cmath>

#include "quarc/builtin_thresholds.hpp"
#include "quarc/calibration.hpp"
#include "quarc/stats.hpp"

using namespace quarc;
using Catch::Approx;

namespace {

SweepPoint point(double p, std::uint32_t config, double thr, double rate) {
  SweepPoint sp;
  sp.p = p;
  sp.config = config;
  sp.cluster_size = config * config;
  sp.throughput_samples = {thr - 0.01, thr, thr + 0.01};
  sp.passing_samples = {rate, rate, rate};
  sp.throughput = estimate(sp.throughput_samples);
  sp.passing_rate = estimate(sp.passing_samples);
  return sp;
}

/// Configs {1, 8} on an 8x8 grid; rows give (thr_1, rate_1, thr_8, rate_8) per p.
GridSweep synthetic(const std::vector<double>& ps, const std::vector<std::array<double, 4>>& rows) {
  GridSweep s;
  s.side = 8;
  s.p_values = ps;
  s.configs = {1, 8};
  for (std::size_t i = 0; i < ps.size(); ++i) {
    s.points.push_back(point(ps[i], 1, rows[i][0], rows[i][1]));
    s.points.push_back(point(ps[i], 8, rows[i][2], rows[i][3]));
  }
  return s;
}

}  // namespace

TEST_CASE("t interval with nine degrees of freedom") {
  const std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto e = estimate(xs);
  CHECK(e.n == 10);
  CHECK(e.mean == 5.5);
  CHECK(e.sd == Approx(std::sqrt(55.0 / 6.0)).epsilon(1e-12));
  CHECK(e.sem == Approx(std::sqrt(55.0 / 6.0) / std::sqrt(10.0)).epsilon(1e-12));
  // t_{0.975, 9} = 2.262157
  CHECK(e.half_width() == Approx(2.262157 * e.sem).epsilon(1e-6));
  CHECK(e.lo == Approx(5.5 - e.half_width()));
}

TEST_CASE("degenerate samples give unbounded or zero-width intervals") {
  const auto one = estimate(std::vector<double>{3.0});
  CHECK(one.mean == 3.0);
  CHECK(std::isinf(one.lo));
  CHECK(std::isinf(one.hi));
  const auto none = estimate(std::vector<double>{});
  CHECK(std::isnan(none.mean));
  const auto flat = estimate(std::vector<double>{2.0, 2.0, 2.0});
  CHECK(flat.lo == 2.0);
  CHECK(flat.hi == 2.0);
  CHECK_THROWS_AS(estimate(std::vector<double>{1, 2}, 1.0), DomainError);
}

TEST_CASE("interval separation") {
  const auto a = estimate(std::vector<double>{1.0, 1.1, 0.9});
  const auto b = estimate(std::vector<double>{2.0, 2.1, 1.9});
  CHECK(b.separated_above(a));
  CHECK_FALSE(a.separated_above(b));
  CHECK_FALSE(a.overlaps(b));
  CHECK(a.overlaps(a));
}

TEST_CASE("nearest rank percentile of doubles") {
  CHECK(nearest_rank_percentile({4, 1, 3, 2}, 75) == 3.0);
  CHECK(nearest_rank_percentile({4, 1, 3, 2}, 76) == 4.0);
  CHECK(nearest_rank_percentile({7}, 75) == 7.0);
  CHECK(nearest_rank_percentile({5, 1, 2, 3, 4, 6, 7, 8}, 75) == 6.0);
  CHECK_THROWS_AS(nearest_rank_percentile({}, 75), DomainError);
  CHECK_THROWS_AS(nearest_rank_percentile({1.0}, 0), DomainError);
}

TEST_CASE("log reductions") {
  MetricsLog log;
  for (std::uint64_t s = 0; s < 6; ++s) log.slots.push_back(SlotMetrics{s, 1, static_cast<std::uint32_t>(s % 3), 0});
  CHECK(mean_throughput(log) == Approx(1.0));
  CHECK(mean_throughput(log, 4) == Approx(1.5));
  CHECK(mean_throughput(log, 10) == 0.0);
  log.clusters = {{0, 0, 4, 10, 5, 0, 0}, {0, 1, 4, 0, 0, 0, 0}, {1, 0, 4, 4, 4, 0, 0}};
  CHECK(mean_passing_rate(log) == Approx(0.75));
  CHECK(mean_passing_rate(log, 1) == Approx(1.0));
  CHECK(std::isnan(mean_passing_rate(log, 2)));
}

TEST_CASE("one crossing gives one split knot and one merge knot") {
  // Large clusters lead at low p, singletons at high p.
  const auto sweep = synthetic({0.2, 0.4, 0.6, 0.8}, {{{0.1, 0.1, 0.8, 0.1},
                                                       {0.5, 0.2, 1.0, 0.3},
                                                       {1.5, 0.3, 0.5, 0.6},
                                                       {2.0, 0.4, 0.4, 0.8}}});
  const auto cal = derive_2d_thresholds_with_crossings(sweep);
  REQUIRE(cal.crossings.size() == 1);
  const auto& x = cal.crossings[0];
  CHECK(x.low_p_best == 8);
  CHECK(x.high_p_best == 1);
  CHECK(x.p_lo == 0.4);
  CHECK(x.p_hi == 0.6);
  // Gaps 0.5 and -1.0 put the crossing a third of the way along.
  CHECK(x.p == Approx(0.4 + 0.2 / 3));
  CHECK(x.big_size == 64);
  CHECK(x.small_size == 1);
  CHECK(x.big_rate == Approx(0.4));
  CHECK(x.small_rate == Approx(0.2 + 0.1 / 3));

  REQUIRE(cal.table.tables().size() == 1);
  const auto& t = cal.table.tables()[0];
  CHECK(t.network_size == 64);
  REQUIRE(t.split.size() == 1);
  CHECK(t.split[0].size == 64);
  CHECK(t.split[0].threshold == Approx(0.4));
  for (const auto& k : t.merge) CHECK(k.threshold == Approx(x.small_rate));
  for (double s : {1.0, 4.0, 16.0, 64.0, 100.0}) {
    const auto th = cal.table.lookup(s, 64);
    CHECK(th.merge <= th.split);
  }
}

TEST_CASE("merge knots are capped by the split curve") {
  const auto sweep = synthetic({0.2, 0.4}, {{{0.1, 0.9, 0.8, 0.2}, {1.5, 0.95, 0.5, 0.3}}});
  const auto cal = derive_2d_thresholds_with_crossings(sweep);
  REQUIRE(cal.crossings.size() == 1);
  CHECK(cal.crossings[0].small_rate > cal.crossings[0].big_rate);
  for (const auto& k : cal.table.tables()[0].merge)
    CHECK(k.threshold == Approx(cal.crossings[0].big_rate));
}

TEST_CASE("no crossing or an unresolved one is inconclusive") {
  const auto never = synthetic({0.2, 0.4, 0.6}, {{{0.1, 0.1, 0.8, 0.1},
                                                  {0.2, 0.2, 1.0, 0.3},
                                                  {0.3, 0.3, 1.2, 0.6}}});
  CHECK_THROWS_AS(derive_2d_thresholds(never), CalibrationInconclusive);
  // The best config changes, but only by less than the interval width.
  const auto close = synthetic({0.2, 0.4}, {{{0.50, 0.1, 0.505, 0.1}, {0.505, 0.2, 0.5, 0.3}}});
  CHECK_THROWS_AS(derive_2d_thresholds(close), CalibrationInconclusive);

  GridSweep one_config;
  one_config.side = 8;
  one_config.p_values = {0.1, 0.2};
  one_config.configs = {8};
  CHECK_THROWS_AS(derive_2d_thresholds(one_config), DomainError);
}

TEST_CASE("static sweep validates its grid") {
  GridSweepConfig cfg;
  cfg.side = 8;
  cfg.p_values = {0.5};
  cfg.configs = {1, 3};
  CHECK_THROWS_AS(sweep_static_grid(cfg), DomainError);
  cfg.configs = {};
  CHECK_THROWS_AS(sweep_static_grid(cfg), DomainError);
  cfg.configs = {2};
  cfg.p_values = {1.5};
  CHECK_THROWS_AS(sweep_static_grid(cfg), DomainError);
}

TEST_CASE("static sweep at the probability extremes") {
  GridSweepConfig cfg;
  cfg.side = 4;
  cfg.q = 1.0;
  cfg.p_values = {1.0, 0.0};
  cfg.configs = {4, 2, 1};
  cfg.slots = 300;
  cfg.epoch_length = 100;
  cfg.replications = 3;
  const auto sweep = sweep_static_grid(cfg);
  CHECK(sweep.p_values == std::vector<double>{0.0, 1.0});
  CHECK(sweep.configs == std::vector<std::uint32_t>{1, 2, 4});
  REQUIRE(sweep.points.size() == 6);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(sweep.at(0, c).throughput.mean == 0.0);
    CHECK(sweep.at(1, c).throughput_samples.size() == 3);
    CHECK(sweep.at(1, c).cluster_size == sweep.configs[c] * sweep.configs[c]);
  }
  // Certain links and fusions: the smallest clusters serve the most requests.
  CHECK(sweep.at(1, 0).throughput.mean > sweep.at(1, 1).throughput.mean);
  CHECK(sweep.at(1, 1).throughput.mean > sweep.at(1, 2).throughput.mean);
  CHECK(sweep.at(1, 2).throughput.mean == 1.0);
  CHECK(sweep.at(1, 0).passing_rate.mean == 1.0);
}

TEST_CASE("sweep results do not depend on the job count") {
  GridSweepConfig cfg;
  cfg.side = 4;
  cfg.p_values = {0.6, 0.9};
  cfg.configs = {1, 2};
  cfg.slots = 150;
  cfg.epoch_length = 50;
  cfg.replications = 2;
  const auto a = sweep_static_grid(cfg);
  cfg.jobs = 3;
  const auto b = sweep_static_grid(cfg);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].throughput_samples == b.points[i].throughput_samples);
    CHECK(a.points[i].passing_samples == b.points[i].passing_samples);
  }
}

TEST_CASE("topology calibration rejects bad brackets and reports no sign change") {
  const auto g = make_grid(4, 1, 4, 0.5, 0.9);
  TopologyCalibrationConfig cfg;
  cfg.p_lo = 0.6;
  cfg.p_hi = 0.4;
  CHECK_THROWS_AS(derive_topology_thresholds(g, builtin_grid_thresholds(), cfg), DomainError);
  cfg.p_lo = 0.2;
  cfg.p_hi = 0.8;
  cfg.replications = 1;
  CHECK_THROWS_AS(derive_topology_thresholds(g, builtin_grid_thresholds(), cfg), DomainError);
  CHECK_THROWS_AS(derive_topology_thresholds(g, ThresholdTable{}, cfg), DomainError);

  // Two nodes: the whole network and singletons route identically on common
  // random numbers, so the gap is exactly zero at every p.
  NetworkGraph pair;
  pair.add_node({0, 0}, 4, 0.9);
  pair.add_node({1, 0}, 4, 0.9);
  pair.add_edge(0, 1, 1.0, {0.5});
  cfg.replications = 2;
  cfg.slots = 120;
  cfg.warmup_slots = 20;
  cfg.reconfig.epoch_length = 40;
  cfg.scan_points = 3;
  CHECK_THROWS_AS(derive_topology_thresholds(pair, builtin_grid_thresholds(), cfg),
                  CalibrationInconclusive);
}
