#include <catch_amalgamated.hpp>

#include "quarc/schedule.hpp"

using namespace quarc;

namespace {

Overrides with_p(double p) {
  Overrides o;
  o.p = p;
  return o;
}

}  // namespace

TEST_CASE("oscillating p picks the last started entry") {
  const auto g = make_grid(3, 1, 1, 0.2, 0.9);
  const auto s = ParameterSchedule::alternating(with_p(0.6), with_p(0.9), 400, 4000);
  CHECK(apply_schedule(g, s, 450).channel_probs[0][0] == 0.9);
  CHECK(apply_schedule(g, s, 0).channel_probs[0][0] == 0.6);
  CHECK(apply_schedule(g, s, 399).channel_probs[0][0] == 0.6);
  CHECK(apply_schedule(g, s, 800).channel_probs[0][0] == 0.6);
  CHECK(apply_schedule(g, s, 1250).channel_probs[0][0] == 0.9);
}

TEST_CASE("empty schedule is the identity") {
  const auto g = make_grid(3, 2, 1, 0.3, 0.7);
  const ParameterSchedule s;
  const auto ep = apply_schedule(g, s, 12345);
  CHECK(ep == base_params(g));
  CHECK(ep.fusion_prob(4) == 0.7);
}

TEST_CASE("entries before the first start slot use base parameters") {
  const auto g = make_grid(2, 1, 1, 0.3, 0.7);
  ParameterSchedule s;
  s.add({100, with_p(0.8)});
  CHECK(apply_schedule(g, s, 99).channel_probs[0][0] == 0.3);
  CHECK(apply_schedule(g, s, 100).channel_probs[0][0] == 0.8);
}

TEST_CASE("region override splits the network") {
  // 4x4 grid: rows y = 0..3; upper half y >= 2.
  const auto g = make_grid(4, 1, 1, 0.45, 0.9);
  Overrides o;
  o.regions = {{{0, 3, 2, 3}, 0.6}, {{0, 3, 0, 1}, 0.3}};
  const auto ep = apply_overrides(g, o);
  for (const auto& e : g.edges()) {
    const double y1 = g.node(e.u).position.y, y2 = g.node(e.v).position.y;
    const double p = ep.channel_probs[e.id][0];
    if (y1 >= 2 && y2 >= 2)
      CHECK(p == 0.6);
    else if (y1 <= 1 && y2 <= 1)
      CHECK(p == 0.3);
    else
      CHECK(p == 0.45);
  }
}

TEST_CASE("global q and mean_p overrides") {
  const auto g = make_grid(3, 1, 1, 0.2, 0.5);
  Overrides o;
  o.q = 0.8;
  o.mean_p = 0.5;
  const auto ep = apply_overrides(g, o);
  for (double q : ep.fusion_probs) CHECK(q == 0.8);
  for (const auto& probs : ep.channel_probs) CHECK(std::abs(probs[0] - 0.5) < 1e-9);
}

TEST_CASE("schedules are pure") {
  const auto g = make_grid(3, 1, 1, 0.2, 0.5);
  const auto before = base_params(g);
  const auto s = ParameterSchedule::alternating(with_p(0.6), with_p(0.9), 10, 100);
  CHECK(apply_schedule(g, s, 15) == apply_schedule(g, s, 15));
  CHECK(base_params(g) == before);
}

TEST_CASE("schedule validation") {
  ParameterSchedule s;
  s.add({10, with_p(0.5)});
  CHECK_THROWS_AS(s.add({10, with_p(0.5)}), ConfigError);
  CHECK_THROWS_AS(s.add({5, with_p(0.5)}), ConfigError);
  CHECK_THROWS_AS(s.add({20, with_p(1.5)}), ConfigError);
  Overrides bad;
  bad.mean_p = 1.0;
  CHECK_THROWS_AS(s.add({30, bad}), ConfigError);
  CHECK(s.active_index(9) == std::nullopt);
  CHECK(s.active_index(11) == std::size_t{0});
}

TEST_CASE("ramp schedule steps down by the increment") {
  const auto s = ParameterSchedule::ramp_p(0.9, 0.5, 0.01, 400);
  REQUIRE(s.entries().size() == 41);
  CHECK(std::abs(*s.entries().back().overrides.p - 0.5) < 1e-12);
  CHECK(s.entries()[1].start_slot == 400);
}
