#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tae/error.hpp"

namespace tae {

constexpr int kObsSteps = 20;     // 2 s of history at 10 Hz
constexpr double kDt = 0.1;
constexpr int kDefaultHorizon = 30;  // 3 s prediction
constexpr double kMaxSpeed = 40.0;   // m/s, track invariant
constexpr double kLeadRange = 60.0;  // m, headway search range
constexpr double kMinHeadwaySpeed = 0.5;  // m/s

struct Pt {
  double x = 0, y = 0;
  friend Pt operator+(Pt a, Pt b) { return {a.x + b.x, a.y + b.y}; }
  friend Pt operator-(Pt a, Pt b) { return {a.x - b.x, a.y - b.y}; }
  friend Pt operator*(double s, Pt p) { return {s * p.x, s * p.y}; }
  double norm() const { return std::hypot(x, y); }
  friend bool operator==(const Pt&, const Pt&) = default;
};

inline double dot(Pt a, Pt b) { return a.x * b.x + a.y * b.y; }
inline double cross(Pt a, Pt b) { return a.x * b.y - a.y * b.x; }

enum class Intent : int { forward = 0, left = 1, right = 2 };

const char* intent_name(Intent i);
Intent intent_from_name(const std::string& s);

struct Lane {
  int id = -1;
  double width = 3.5;
  std::vector<Pt> pts;  // centerline, consecutive points <= 5 m apart
  std::vector<int> succ, pred;
  int left = -1, right = -1;  // -1 = no neighbor
  friend bool operator==(const Lane&, const Lane&) = default;
};

struct BehaviorLabel {
  std::optional<Intent> intent;
  std::optional<double> headway;  // seconds, in (0.05, 30) when present
  bool empty() const { return !intent && !headway; }
  friend bool operator==(const BehaviorLabel&, const BehaviorLabel&) = default;
};

struct HiddenBehavior {
  Intent intent = Intent::forward;
  double headway = 0;  // the generator's target, seconds
  friend bool operator==(const HiddenBehavior&, const HiddenBehavior&) = default;
};

struct Agent {
  int id = -1;
  bool ego = false;
  std::vector<Pt> obs;  // exactly kObsSteps
  std::vector<Pt> fut;  // H points
  int lane = -1;
  BehaviorLabel label;
  std::optional<HiddenBehavior> hidden;  // synthetic data only
  friend bool operator==(const Agent&, const Agent&) = default;
};

struct Scenario {
  int id = -1;
  std::vector<Lane> lanes;
  std::vector<Agent> agents;

  const Agent& ego() const;
  const Lane* lane_by_id(int id) const;
  int horizon() const { return agents.empty() ? 0 : int(agents[0].fut.size()); }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

// Throws DataError naming the scenario/agent/lane on any invariant violation.
void validate(const Scenario& s);

// Canonical per-agent frame: origin at the last observed point, +x along the
// velocity at the last observed step (lane direction when nearly stopped).
struct Frame {
  Pt origin;
  double c = 1, s = 0;  // rotation world->local is by -theta
  Pt to_local(Pt p) const {
    Pt d = p - origin;
    return {c * d.x + s * d.y, -s * d.x + c * d.y};
  }
  Pt to_world(Pt p) const { return {origin.x + c * p.x - s * p.y, origin.y + s * p.x + c * p.y}; }
};

Frame compute_frame(const Agent& a, const Scenario& s);

// Canonicalised copy of the track plus the transform that undoes it.
struct CanonicalTrack {
  std::vector<Pt> obs, fut;
  Frame frame;
};
CanonicalTrack normalize_frame(const Agent& a, const Scenario& s);

// Mean over the observed window of (longitudinal gap to the nearest lead
// vehicle in the same corridor) / (follower speed). Absent when no lead is
// within kLeadRange or the follower is below kMinHeadwaySpeed throughout.
std::optional<double> compute_headway(const Scenario& s, int agent_id);

// Rule-based intention over the full 5 s window (see README for thresholds).
std::optional<Intent> label_intention(const Scenario& s, int agent_id);

void save_scenarios(const std::string& path, const std::vector<Scenario>& scenarios);
std::vector<Scenario> load_scenarios(const std::string& path);
std::string scenarios_to_json(const std::vector<Scenario>& scenarios);
std::vector<Scenario> scenarios_from_json(const std::string& text);

}  // namespace tae
