#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "tae/scenario.hpp"
#include "tae/synth.hpp"

using namespace tae;

namespace {

Lane straight_lane(int id, double x0, double x1, double y) {
  Lane l;
  l.id = id;
  l.width = 3.5;
  for (double x = x0; x <= x1 + 1e-9; x += 4.0) l.pts.push_back({x, y});
  return l;
}

// Agent moving at constant velocity from `start`.
Agent uniform_agent(int id, bool ego, Pt start, Pt vel, int horizon = 30) {
  Agent a;
  a.id = id;
  a.ego = ego;
  a.lane = 0;
  for (int t = 0; t < kObsSteps; ++t)
    a.obs.push_back({start.x + vel.x * kDt * t, start.y + vel.y * kDt * t});
  for (int t = kObsSteps; t < kObsSteps + horizon; ++t)
    a.fut.push_back({start.x + vel.x * kDt * t, start.y + vel.y * kDt * t});
  return a;
}

Scenario two_car_scenario(double gap, double speed) {
  Scenario s;
  s.id = 0;
  s.lanes.push_back(straight_lane(0, 0, 300, 0));
  s.agents.push_back(uniform_agent(0, false, {30 + gap, 0}, {speed, 0}));
  s.agents.push_back(uniform_agent(1, true, {30, 0}, {speed, 0}));
  return s;
}

std::string write_tmp(const std::string& name, const std::string& text) {
  std::string path = "/tmp/" + name;
  std::ofstream f(path);
  f << text;
  return path;
}

}  // namespace

TEST_CASE("headway: constant gap over constant speed") {
  Scenario s = two_car_scenario(20.0, 10.0);
  auto h = compute_headway(s, 1);
  REQUIRE(h.has_value());
  CHECK(*h == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("headway: front vehicle has no lead") {
  Scenario s = two_car_scenario(20.0, 10.0);
  CHECK(!compute_headway(s, 0).has_value());
}

TEST_CASE("headway: absent when the lead is far or the follower slow") {
  Scenario far = two_car_scenario(80.0, 10.0);  // beyond the 60 m corridor
  CHECK(!compute_headway(far, 1).has_value());
  Scenario slow = two_car_scenario(10.0, 0.2);  // below the 0.5 m/s floor
  CHECK(!compute_headway(slow, 1).has_value());
}

TEST_CASE("car following: settles to gap = headway * speed") {
  // Integrate the follower ODE behind a 10 m/s lead with target 1.0 s.
  double v = 10.0, gap = 5.0, vlead = 10.0, h = 1.0;
  for (int i = 0; i < 60000; ++i) {
    double a = std::clamp(car_following_accel(v, vlead, gap, h), -4.0, 3.0);
    v += a * 0.001;
    gap += (vlead - v) * 0.001;
  }
  CHECK(gap == doctest::Approx(10.0).epsilon(0.15));
  CHECK(v == doctest::Approx(10.0).epsilon(0.02));

  // A scenario sampled from the converged regime measures the target back.
  Scenario s;
  s.id = 0;
  s.lanes.push_back(straight_lane(0, 0, 300, 0));
  s.agents.push_back(uniform_agent(0, false, {50 + gap, 0}, {vlead, 0}));
  s.agents.push_back(uniform_agent(1, true, {50, 0}, {v, 0}));
  auto measured = compute_headway(s, 1);
  REQUIRE(measured.has_value());
  CHECK(*measured == doctest::Approx(h).epsilon(0.20));
}

TEST_CASE("intention: straight constant-velocity track is Forward") {
  Scenario s = two_car_scenario(20.0, 10.0);
  auto it = label_intention(s, 1);
  REQUIRE(it.has_value());
  CHECK(*it == Intent::forward);
}

TEST_CASE("intention: lateral jitter under the threshold is Forward") {
  Scenario s = two_car_scenario(20.0, 10.0);
  Agent& a = s.agents[1];
  for (size_t t = 0; t < a.obs.size(); ++t) a.obs[t].y = (t % 2) ? 0.1 : -0.1;
  for (size_t t = 0; t < a.fut.size(); ++t) a.fut[t].y = (t % 2) ? -0.1 : 0.1;
  auto it = label_intention(s, 1);
  REQUIRE(it.has_value());
  CHECK(*it == Intent::forward);
}

TEST_CASE("frame: canonical track is a fixed point") {
  Scenario s = two_car_scenario(20.0, 10.0);
  // Build an agent already in canonical pose: last observed point at the
  // origin, moving along +x.
  Agent a = uniform_agent(1, true, {-(kObsSteps - 1) * 1.0, 0}, {10, 0});
  s.agents[1] = a;
  CanonicalTrack ct = normalize_frame(s.agents[1], s);
  for (int t = 0; t < kObsSteps; ++t) {
    CHECK(std::abs(ct.obs[t].x - a.obs[t].x) < 1e-9);
    CHECK(std::abs(ct.obs[t].y - a.obs[t].y) < 1e-9);
  }
}

TEST_CASE("frame: to_world inverts to_local") {
  Scenario s = two_car_scenario(20.0, 10.0);
  Frame f = compute_frame(s.agents[1], s);
  for (Pt p : {Pt{3.7, -2.1}, Pt{0, 0}, Pt{145.0, 62.0}}) {
    Pt q = f.to_world(f.to_local(p));
    CHECK(std::abs(q.x - p.x) < 1e-9);
    CHECK(std::abs(q.y - p.y) < 1e-9);
  }
}

TEST_CASE("frame: canonical form is rotation invariant") {
  SynthConfig cfg;
  cfg.n = 3;
  cfg.agents = 4;
  cfg.seed = 5;
  auto scs = synth_generate(cfg);
  for (auto& s : scs) {
    Scenario r = s;  // rotate the whole scenario by 90 degrees
    auto rot = [](Pt p) { return Pt{-p.y, p.x}; };
    for (auto& l : r.lanes)
      for (auto& p : l.pts) p = rot(p);
    for (auto& a : r.agents) {
      for (auto& p : a.obs) p = rot(p);
      for (auto& p : a.fut) p = rot(p);
    }
    for (size_t i = 0; i < s.agents.size(); ++i) {
      CanonicalTrack c0 = normalize_frame(s.agents[i], s);
      CanonicalTrack c1 = normalize_frame(r.agents[i], r);
      for (int t = 0; t < kObsSteps; ++t) {
        CHECK(std::abs(c0.obs[t].x - c1.obs[t].x) < 1e-9);
        CHECK(std::abs(c0.obs[t].y - c1.obs[t].y) < 1e-9);
      }
      for (size_t t = 0; t < c0.fut.size(); ++t) {
        CHECK(std::abs(c0.fut[t].x - c1.fut[t].x) < 1e-9);
        CHECK(std::abs(c0.fut[t].y - c1.fut[t].y) < 1e-9);
      }
    }
  }
}

TEST_CASE("frame: stationary agent falls back to the lane direction") {
  Scenario s = two_car_scenario(20.0, 10.0);
  Agent& a = s.agents[1];
  for (auto& p : a.obs) p = {50, 0.4};  // parked next to the +x lane
  Frame f = compute_frame(a, s);
  Pt q = f.to_local({51, 0.4});
  CHECK(std::abs(q.x - 1.0) < 1e-9);
  CHECK(std::abs(q.y) < 1e-9);
}

TEST_CASE("json: save and load round-trip losslessly") {
  SynthConfig cfg;
  cfg.n = 4;
  cfg.agents = 5;
  cfg.label_frac = 0.5;
  cfg.seed = 99;
  auto scs = synth_generate(cfg);
  std::string path = "/tmp/tae_roundtrip.json";
  save_scenarios(path, scs);
  auto back = load_scenarios(path);
  REQUIRE(back.size() == scs.size());
  for (size_t i = 0; i < scs.size(); ++i) CHECK(back[i] == scs[i]);
  // Serialization itself is deterministic.
  CHECK(scenarios_to_json(scs) == scenarios_to_json(back));
  std::remove(path.c_str());
}

TEST_CASE("json: wrong waypoint count is rejected naming the track") {
  Scenario s = two_car_scenario(20.0, 10.0);
  auto root = nlohmann::json::parse(scenarios_to_json({s}));
  root["scenarios"][0]["agents"][1]["obs"].erase(19);
  CHECK_THROWS_WITH_AS(scenarios_from_json(root.dump()),
                       doctest::Contains("agent 1: expected 20 observed waypoints, got 19"),
                       DataError);
}

TEST_CASE("json: truncated file is a parse error with no partial result") {
  Scenario s = two_car_scenario(20.0, 10.0);
  std::string text = scenarios_to_json({s});
  std::string path = write_tmp("tae_truncated.json", text.substr(0, text.size() / 2));
  CHECK_THROWS_WITH_AS(load_scenarios(path), doctest::Contains("parse error"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("json: unknown version is rejected") {
  CHECK_THROWS_WITH_AS(scenarios_from_json("{\"version\": 3, \"scenarios\": []}"),
                       doctest::Contains("unknown version 3"), DataError);
}

TEST_CASE("validate: structured errors name the offender") {
  Scenario s = two_car_scenario(20.0, 10.0);
  s.agents[0].id = 1;  // duplicate
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("duplicate id"), DataError);

  s = two_car_scenario(20.0, 10.0);
  s.agents[0].lane = 7;
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("unknown lane 7"), DataError);

  s = two_car_scenario(20.0, 10.0);
  s.agents[0].ego = true;  // two egos
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("exactly one ego"), DataError);

  s = two_car_scenario(20.0, 10.0);
  s.agents[1].obs[7].x += 5.0;  // 50 m/s step
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("speed exceeds 40 m/s"), DataError);

  s = two_car_scenario(20.0, 10.0);
  s.agents.pop_back();
  CHECK_THROWS_WITH_AS(validate(s), doctest::Contains("fewer than 2 agents"), DataError);
}

TEST_CASE("synth: generation is a deterministic function of the seed") {
  SynthConfig cfg;
  cfg.n = 1;
  cfg.agents = 2;
  cfg.seed = 7;
  std::string a = scenarios_to_json(synth_generate(cfg));
  std::string b = scenarios_to_json(synth_generate(cfg));
  CHECK(a == b);
  cfg.seed = 8;
  CHECK(scenarios_to_json(synth_generate(cfg)) != a);
}

TEST_CASE("synth: intention mix lands within binomial bounds") {
  SynthConfig cfg;
  cfg.n = 60;
  cfg.agents = 5;  // 300 agents
  cfg.seed = 11;
  auto scs = synth_generate(cfg);
  int cnt[3] = {0, 0, 0};
  int total = 0;
  for (auto& s : scs)
    for (auto& a : s.agents) {
      REQUIRE(a.hidden.has_value());
      cnt[static_cast<int>(a.hidden->intent)]++;
      ++total;
    }
  CHECK(total == 300);
  for (int c = 0; c < 3; ++c) {
    CHECK(cnt[c] >= 70);
    CHECK(cnt[c] <= 130);
  }
}

TEST_CASE("synth: revealed labels agree with hidden ground truth") {
  SynthConfig cfg;
  cfg.n = 60;
  cfg.agents = 5;
  cfg.label_frac = 1.0;
  cfg.seed = 42;
  auto scs = synth_generate(cfg);
  int labeled = 0, agree = 0, hw_n = 0;
  double mse = 0, mean = 0, var = 0;
  for (auto& s : scs)
    for (auto& a : s.agents) {
      if (a.label.intent) {
        ++labeled;
        if (*a.label.intent == a.hidden->intent) ++agree;
      }
      if (a.label.headway) {
        CHECK(*a.label.headway > 0.05);
        CHECK(*a.label.headway < 30.0);
        double d = *a.label.headway - a.hidden->headway;
        mse += d * d;
        mean += a.hidden->headway;
        ++hw_n;
      }
    }
  REQUIRE(labeled > 200);
  CHECK(double(agree) / labeled >= 0.95);
  REQUIRE(hw_n > 100);
  mse /= hw_n;
  mean /= hw_n;
  for (auto& s : scs)
    for (auto& a : s.agents)
      if (a.label.headway) var += (a.hidden->headway - mean) * (a.hidden->headway - mean);
  var /= hw_n;
  // Measured labels track the targets far more tightly than the population
  // spread, so semi-supervision has signal.
  CHECK(mse < 0.1 * var);
}

TEST_CASE("synth: scripted turns are labeled as turns") {
  SynthConfig cfg;
  cfg.n = 40;
  cfg.agents = 5;
  cfg.label_frac = 1.0;
  cfg.seed = 3;
  auto scs = synth_generate(cfg);
  int left_checked = 0, left_hits = 0;
  for (auto& s : scs)
    for (auto& a : s.agents)
      if (a.hidden->intent == Intent::left && a.label.intent) {
        ++left_checked;
        if (*a.label.intent == Intent::left) ++left_hits;
      }
  // Threshold-straddling maneuvers may stay unlabeled or mislabel; the
  // contract is >= 95% agreement among labeled turns.
  REQUIRE(left_checked > 10);
  CHECK(double(left_hits) / left_checked >= 0.95);
}

TEST_CASE("synth: config validation") {
  SynthConfig cfg;
  cfg.agents = 1;
  CHECK_THROWS_AS(synth_generate(cfg), UsageError);
  cfg.agents = 9;
  CHECK_THROWS_AS(synth_generate(cfg), UsageError);
  cfg.agents = 4;
  cfg.n = 0;
  CHECK_THROWS_AS(synth_generate(cfg), UsageError);
  cfg.n = 1;
  cfg.label_frac = 1.5;
  CHECK_THROWS_AS(synth_generate(cfg), UsageError);
}

TEST_CASE("synth: horizon is honored and validated on load") {
  SynthConfig cfg;
  cfg.n = 2;
  cfg.agents = 3;
  cfg.horizon = 45;
  cfg.seed = 21;
  auto scs = synth_generate(cfg);
  for (auto& s : scs) {
    CHECK(s.horizon() == 45);
    for (auto& a : s.agents) CHECK(a.fut.size() == 45);
  }
}
