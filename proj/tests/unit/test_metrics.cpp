#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "quarc/metrics.hpp"

using namespace quarc;
using Catch::Approx;

namespace {

MetricsLog twenty_slots() {
  MetricsLog log;
  const std::uint32_t sat[20] = {1, 0, 2, 1, 0, 0, 0, 0, 0, 0, 3, 1, 1, 0, 0, 2, 2, 2, 2, 2};
  for (std::uint64_t s = 0; s < 20; ++s) log.slots.push_back(SlotMetrics{s, 3, sat[s], 0});
  return log;
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

RequestMetrics req(RequestId id, int hops, std::uint64_t arrival,
                   std::optional<std::uint64_t> done, std::uint32_t attempts) {
  return RequestMetrics{id, 0, 1, hops, arrival, done, attempts};
}

}  // namespace

TEST_CASE("windowed throughput on a 20-slot log") {
  const auto log = twenty_slots();
  const auto r5 = summarize(log, 5);
  CHECK(r5.throughput == std::vector<double>{0.8, 0.0, 1.0, 2.0});
  CHECK(r5.total_slots == 20);
  CHECK(r5.total_satisfied == 19);
  CHECK(r5.mean_throughput == Approx(0.95));

  // 20 slots in windows of 6 leave a two-slot tail.
  const auto r6 = summarize(log, 6);
  REQUIRE(r6.throughput.size() == 4);
  CHECK(r6.throughput[0] == Approx(4.0 / 6));
  CHECK(r6.throughput[1] == Approx(4.0 / 6));
  CHECK(r6.throughput[2] == Approx(7.0 / 6));
  CHECK(r6.throughput[3] == Approx(2.0));

  const auto r1 = summarize(log, 1);
  REQUIRE(r1.throughput.size() == 20);
  CHECK(r1.throughput[10] == 3.0);
  CHECK(summarize(log, 50).throughput == std::vector<double>{0.95});
}

TEST_CASE("window of zero is rejected") { CHECK_THROWS_AS(summarize(MetricsLog{}, 0), DomainError); }

TEST_CASE("requests satisfied on arrival have zero latency") {
  MetricsLog log = twenty_slots();
  for (RequestId i = 0; i < 6; ++i) log.requests.push_back(req(i, 2, i, i, 1));
  const auto r = summarize(log, 5);
  CHECK(r.latency.count == 6);
  CHECK(r.latency.mean == 0.0);
  CHECK(r.latency.median == 0.0);
  CHECK(r.latency.p95 == 0.0);
  CHECK(r.latency.max == 0);
  CHECK(r.latency.histogram == std::map<std::uint64_t, std::uint64_t>{{0, 6}});
}

TEST_CASE("no successes give zero throughput and full starvation") {
  MetricsLog log;
  for (std::uint64_t s = 0; s < 10; ++s) log.slots.push_back(SlotMetrics{s, 2, 0, 1});
  for (RequestId i = 0; i < 9; ++i) log.requests.push_back(req(i, 1 + static_cast<int>(i % 3), 0, std::nullopt, 4));
  const auto r = summarize(log, 3);
  for (double t : r.throughput) CHECK(t == 0.0);
  REQUIRE(r.by_hop.size() == 3);
  for (const auto& b : r.by_hop) {
    CHECK(b.generated == 3);
    CHECK(b.satisfied == 0);
    CHECK(b.starvation == 1.0);
    CHECK(b.success_rate == 0.0);
  }
  CHECK(r.latency.count == 0);
}

TEST_CASE("latency and hop buckets from a hand-built log") {
  MetricsLog log = twenty_slots();
  log.requests = {req(0, 1, 0, 0, 1),  req(1, 1, 0, 3, 4),  req(2, 2, 1, 2, 2),
                  req(3, 2, 2, std::nullopt, 5), req(4, 3, 4, 14, 3), req(5, 1, 5, 7, 1)};
  const auto r = summarize(log, 10);
  // Latencies 0, 3, 1, 10, 2 -> sorted 0 1 2 3 10.
  CHECK(r.latency.count == 5);
  CHECK(r.latency.mean == Approx(3.2));
  CHECK(r.latency.median == 2.0);
  CHECK(r.latency.p95 == 10.0);
  CHECK(r.latency.max == 10);
  REQUIRE(r.by_hop.size() == 3);
  CHECK(r.by_hop[0].hop_distance == 1);
  CHECK(r.by_hop[0].generated == 3);
  CHECK(r.by_hop[0].satisfied == 3);
  CHECK(r.by_hop[0].attempts == 6);
  CHECK(r.by_hop[0].success_rate == Approx(0.5));
  CHECK(r.by_hop[0].starvation == 0.0);
  CHECK(r.by_hop[1].success_rate == Approx(1.0 / 7));
  CHECK(r.by_hop[1].starvation == Approx(0.5));
  CHECK(r.by_hop[2].success_rate == Approx(1.0 / 3));
}

TEST_CASE("region sizes split clusters by centroid height") {
  MetricsLog log;
  log.region_split_y = 0.5;
  log.clusters = {{0, 0, 10, 5, 2, 0.1, 0.9}, {0, 1, 20, 5, 2, 0.2, 0.5},
                  {0, 2, 6, 5, 2, 0.3, 0.1},  {1, 0, 8, 1, 1, 0.5, 0.2},
                  {1, 1, 12, 1, 1, 0.5, 0.4}};
  const auto r = summarize(log, 1);
  REQUIRE(r.regions.size() == 2);
  CHECK(r.regions[0].upper_clusters == 2);  // y = 0.5 counts as upper
  CHECK(r.regions[0].upper_mean_size == 15.0);
  CHECK(r.regions[0].lower_clusters == 1);
  CHECK(r.regions[0].lower_mean_size == 6.0);
  CHECK(r.regions[1].upper_clusters == 0);
  CHECK(std::isnan(r.regions[1].upper_mean_size));
  CHECK(r.regions[1].lower_mean_size == 10.0);
}

TEST_CASE("nearest rank percentile") {
  const std::vector<std::uint64_t> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(detail::nearest_rank(xs, 50) == 5.0);
  CHECK(detail::nearest_rank(xs, 95) == 10.0);
  CHECK(detail::nearest_rank(xs, 10) == 1.0);
  CHECK(detail::nearest_rank(xs, 11) == 2.0);
  CHECK(detail::nearest_rank({}, 50) == 0.0);
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3, 1e-300, 123456.789, 0.0})
    CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("CSV files carry stable headers") {
  const auto dir = std::filesystem::temp_directory_path() / "quarc_metrics_test";
  std::filesystem::remove_all(dir);
  MetricsLog log = twenty_slots();
  log.requests = {req(0, 1, 0, 2, 1), req(1, 2, 0, std::nullopt, 3)};
  log.clusters = {{0, 0, 4, 3, 1, 0.5, 0.25}};
  log.snapshots = {{0, {0, 0, 0, 0}}};
  write_metrics_csv(log, dir);
  write_report_csv(summarize(log, 5), dir);
  CHECK(first_line(dir / "slots.csv") == "slot,attempted,satisfied,skipped");
  CHECK(first_line(dir / "requests.csv") ==
        "request,source,destination,hop_distance,arrival_slot,satisfied_slot,attempts");
  CHECK(first_line(dir / "clusters.csv") ==
        "epoch,cluster,size,attempts,passes,centroid_x,centroid_y");
  CHECK(first_line(dir / "assignments.csv") == "epoch,node,cluster");
  CHECK(first_line(dir / "throughput.csv") == "window,start_slot,mean_satisfied_per_slot");
  CHECK(first_line(dir / "latency.csv") == "latency,requests");
  CHECK(first_line(dir / "hop_success.csv") ==
        "hop_distance,generated,satisfied,attempts,success_rate,starvation");
  CHECK(first_line(dir / "region_sizes.csv") ==
        "epoch,upper_clusters,upper_mean_size,lower_clusters,lower_mean_size");

  std::ifstream in(dir / "requests.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "0,0,1,1,0,2,1");
  std::getline(in, line);
  CHECK(line == "1,0,1,2,0,,3");
  std::filesystem::remove_all(dir);
}
