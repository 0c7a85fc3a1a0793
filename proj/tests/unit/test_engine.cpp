#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <memory>
#include <set>

#include "quarc/engine.hpp"

using namespace quarc;

namespace {

ThresholdTable flat(double merge, double split) {
  return ThresholdTable({SizeThresholds{64, {{1, split}}, {{1, merge}}}});
}

SimulationConfig grid_config(std::uint32_t side, double p, double q, std::uint64_t slots,
                             std::uint64_t seed = 1) {
  SimulationConfig c;
  c.graph = std::make_shared<const NetworkGraph>(make_grid(side, 1, 4, p, q));
  c.thresholds = flat(0.3, 0.8);
  c.reconfig.epoch_length = 100;
  c.slots = slots;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("zero slots leave an empty log") {
  const auto log = run_simulation(grid_config(4, 0.9, 0.9, 0));
  CHECK(log.slots.empty());
  CHECK(log.requests.empty());
  CHECK(log.clusters.empty());
  CHECK(log.snapshots.empty());
}

TEST_CASE("queue is full and oldest first at the start of every slot") {
  auto cfg = grid_config(6, 0.7, 0.8, 600);
  cfg.queue_capacity = 7;
  Simulator sim(std::move(cfg));
  std::vector<Request> previous;
  std::set<RequestId> satisfied_before;
  sim.set_observer([&](const SlotEvent& ev) {
    REQUIRE(ev.queue.size() == 7);
    for (std::size_t i = 1; i < ev.queue.size(); ++i) {
      CHECK(ev.queue[i - 1].id < ev.queue[i].id);
      CHECK(ev.queue[i - 1].arrival_slot <= ev.queue[i].arrival_slot);
    }
    for (const auto& r : ev.queue) {
      CHECK(r.arrival_slot <= ev.slot);
      CHECK_FALSE(satisfied_before.contains(r.id));
    }
    // Unsatisfied requests from the previous slot are still queued, in order.
    std::vector<RequestId> carried;
    for (const auto& r : previous)
      if (!satisfied_before.contains(r.id)) carried.push_back(r.id);
    for (std::size_t i = 0; i < carried.size(); ++i) CHECK(ev.queue[i].id == carried[i]);
    for (std::size_t i = carried.size(); i < ev.queue.size(); ++i)
      CHECK(ev.queue[i].arrival_slot == ev.slot);
    for (const auto& s : ev.served)
      if (s.outcome.success) satisfied_before.insert(s.request.id);
    previous = ev.queue;
  });
  sim.run();
}

TEST_CASE("certain links and fusions satisfy every served request") {
  auto cfg = grid_config(5, 1.0, 1.0, 200);
  cfg.mode = ClusteringMode::kStatic;
  cfg.partition = grid_block_partition(5, 5);
  Simulator sim(std::move(cfg));
  std::size_t served = 0;
  sim.set_observer([&](const SlotEvent& ev) {
    for (const auto& s : ev.served) {
      CHECK(s.outcome.success);
      for (bool p : s.outcome.passes) CHECK(p);
      ++served;
    }
  });
  const auto& log = sim.run();
  CHECK(served == 200);
  for (const auto& s : log.slots) CHECK(s.satisfied == 1);
}

TEST_CASE("zero link probability satisfies nothing") {
  auto cfg = grid_config(4, 0.0, 1.0, 300);
  const auto log = run_simulation(std::move(cfg));
  for (const auto& s : log.slots) CHECK(s.satisfied == 0);
  for (const auto& r : log.requests) CHECK_FALSE(r.satisfied_slot.has_value());
}

TEST_CASE("same seed gives an identical log, another seed does not") {
  auto a = run_simulation(grid_config(6, 0.8, 0.8, 700, 11));
  auto b = run_simulation(grid_config(6, 0.8, 0.8, 700, 11));
  auto c = run_simulation(grid_config(6, 0.8, 0.8, 700, 12));
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("single cluster with a high pass rate splits into k after one epoch") {
  auto cfg = grid_config(8, 1.0, 1.0, 100);
  cfg.thresholds = flat(0.1, 0.5);
  Simulator sim(std::move(cfg));
  CHECK(sim.clustering().size() == 1);
  sim.run_epoch();
  CHECK(sim.clustering().size() == 4);
  REQUIRE(sim.last_reconfiguration().has_value());
  CHECK(sim.last_reconfiguration()->split_marked.size() == 1);
}

TEST_CASE("reconfiguration happens at every epoch boundary") {
  auto cfg = grid_config(8, 0.8, 0.9, 1050);
  cfg.reconfig.epoch_length = 500;
  cfg.thresholds = flat(0.3, 0.7);
  Simulator sim(std::move(cfg));
  std::vector<std::uint64_t> epochs_seen;
  std::vector<std::vector<ClusterId>> assignment_in_slot;
  sim.set_observer([&](const SlotEvent& ev) {
    CHECK(ev.epoch == ev.slot / 500);
    epochs_seen.push_back(ev.epoch);
    assignment_in_slot.push_back(ev.clustering->node_assignment());
  });
  const auto& log = sim.run();
  REQUIRE(log.snapshots.size() == 3);  // two full epochs and a 50-slot tail
  for (std::size_t e = 0; e < 3; ++e) CHECK(log.snapshots[e].epoch == e);
  // Within an epoch the clustering never changes.
  for (std::size_t s = 1; s < assignment_in_slot.size(); ++s)
    if (epochs_seen[s] == epochs_seen[s - 1]) CHECK(assignment_in_slot[s] == assignment_in_slot[s - 1]);
  CHECK(log.snapshots[0].node_cluster == assignment_in_slot[0]);
  CHECK(log.snapshots[1].node_cluster == assignment_in_slot[500]);
  CHECK(log.snapshots[2].node_cluster == assignment_in_slot[1000]);
  CHECK(sim.epoch() == 3);
}

TEST_CASE("epoch stats count one attempt per path cluster and at most one pass") {
  auto cfg = grid_config(8, 0.75, 0.85, 400);
  cfg.mode = ClusteringMode::kStatic;
  cfg.partition = grid_block_partition(8, 2);
  Simulator sim(std::move(cfg));
  std::map<std::pair<std::uint64_t, ClusterId>, std::pair<std::uint64_t, std::uint64_t>> seen;
  sim.set_observer([&](const SlotEvent& ev) {
    for (const auto& s : ev.served) {
      REQUIRE(s.outcome.passes.size() == s.path.clusters.size());
      std::set<ClusterId> distinct(s.path.clusters.begin(), s.path.clusters.end());
      CHECK(distinct.size() == s.path.clusters.size());
      for (std::size_t i = 0; i < s.path.clusters.size(); ++i) {
        auto& rec = seen[{ev.epoch, s.path.clusters[i]}];
        ++rec.first;
        if (s.outcome.passes[i]) ++rec.second;
      }
    }
  });
  const auto& log = sim.run();
  for (const auto& c : log.clusters) {
    const auto it = seen.find({c.epoch, c.cluster});
    const std::pair<std::uint64_t, std::uint64_t> want =
        it == seen.end() ? std::pair<std::uint64_t, std::uint64_t>{0, 0} : it->second;
    CHECK(c.attempts == want.first);
    CHECK(c.passes == want.second);
    CHECK(c.passes <= c.attempts);
    CHECK(c.size == 4);
  }
  CHECK(log.clusters.size() == 4 * 16);
}

TEST_CASE("request log is consistent with slot counts") {
  const auto log = run_simulation(grid_config(6, 0.85, 0.85, 900, 5));
  std::uint64_t satisfied = 0;
  for (const auto& s : log.slots) satisfied += s.satisfied;
  std::uint64_t flagged = 0;
  for (std::size_t i = 0; i < log.requests.size(); ++i) {
    const auto& r = log.requests[i];
    CHECK(r.id == i);
    CHECK(r.source != r.destination);
    CHECK(r.hop_distance >= 1);
    if (r.satisfied_slot) {
      ++flagged;
      CHECK(*r.satisfied_slot >= r.arrival_slot);
      CHECK(r.attempts >= 1);
    }
  }
  CHECK(flagged == satisfied);
  CHECK(satisfied > 0);
}

TEST_CASE("bimodal requests sit at a quarter and three quarters of the diameter") {
  auto cfg = grid_config(8, 0.8, 0.9, 300);
  cfg.requests.kind = RequestDistribution::Kind::kBimodal;
  const auto log = run_simulation(std::move(cfg));
  // Diameter 14: round(3.5) = 4 and round(10.5) = 11.
  std::size_t near = 0, far = 0;
  for (const auto& r : log.requests) {
    CHECK((r.hop_distance == 4 || r.hop_distance == 11));
    (r.hop_distance == 4 ? near : far)++;
  }
  const double share = static_cast<double>(near) / static_cast<double>(near + far);
  CHECK(share > 0.4);
  CHECK(share < 0.6);
}

TEST_CASE("uniform requests cover many distances") {
  const auto log = run_simulation(grid_config(8, 0.8, 0.9, 300));
  std::set<int> hops;
  for (const auto& r : log.requests) hops.insert(r.hop_distance);
  CHECK(hops.size() >= 10);
}

TEST_CASE("static mode keeps its partition") {
  auto cfg = grid_config(8, 1.0, 1.0, 1000);
  cfg.mode = ClusteringMode::kStatic;
  cfg.thresholds.reset();
  cfg.partition = grid_block_partition(8, 4);
  const auto initial = Clustering::from_partition(*cfg.graph, cfg.partition).node_assignment();
  const auto log = run_simulation(std::move(cfg));
  REQUIRE(log.snapshots.size() == 10);
  for (const auto& s : log.snapshots) CHECK(s.node_cluster == initial);
}

TEST_CASE("schedule overrides take effect at their start slot") {
  auto cfg = grid_config(5, 1.0, 1.0, 400);
  cfg.mode = ClusteringMode::kStatic;
  cfg.schedule = ParameterSchedule({ScheduleEntry{200, Overrides{0.0, {}, {}, {}}}});
  const auto log = run_simulation(std::move(cfg));
  for (const auto& s : log.slots) CHECK(s.satisfied == (s.slot < 200 ? 1u : 0u));
}

TEST_CASE("invalid simulation configs are rejected") {
  auto base = grid_config(4, 0.9, 0.9, 10);
  auto no_graph = base;
  no_graph.graph.reset();
  CHECK_THROWS_AS(Simulator(no_graph), ConfigError);
  auto no_queue = base;
  no_queue.queue_capacity = 0;
  CHECK_THROWS_AS(Simulator(no_queue), ConfigError);
  auto bad_k = base;
  bad_k.reconfig.k = 1;
  CHECK_THROWS_AS(Simulator(bad_k), ConfigError);
  auto bad_epoch = base;
  bad_epoch.reconfig.epoch_length = 0;
  CHECK_THROWS_AS(Simulator(bad_epoch), ConfigError);
  auto no_table = base;
  no_table.thresholds.reset();
  CHECK_THROWS_AS(Simulator(no_table), ConfigError);
  auto bad_partition = base;
  bad_partition.partition = {{0, 1}};
  CHECK_THROWS_AS(Simulator(bad_partition), ConsistencyError);
}
