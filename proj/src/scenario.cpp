#include "tae/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

namespace tae {

using ojson = nlohmann::ordered_json;

const char* intent_name(Intent i) {
  switch (i) {
    case Intent::forward: return "forward";
    case Intent::left: return "left";
    case Intent::right: return "right";
  }
  return "?";
}

Intent intent_from_name(const std::string& s) {
  if (s == "forward") return Intent::forward;
  if (s == "left") return Intent::left;
  if (s == "right") return Intent::right;
  throw DataError("unknown intent '" + s + "'");
}

const Agent& Scenario::ego() const {
  for (const auto& a : agents)
    if (a.ego) return a;
  throw DataError("scenario " + std::to_string(id) + ": no ego agent");
}

const Lane* Scenario::lane_by_id(int lid) const {
  for (const auto& l : lanes)
    if (l.id == lid) return &l;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Validation

static void validate_track(const Scenario& s, const Agent& a, const std::vector<Pt>& pts,
                           const char* which, size_t expect) {
  std::string where =
      "scenario " + std::to_string(s.id) + ": agent " + std::to_string(a.id) + ": ";
  check_data(pts.size() == expect, where + "expected " + std::to_string(expect) + " " + which +
                                       " waypoints, got " + std::to_string(pts.size()));
  for (const Pt& p : pts)
    check_data(std::isfinite(p.x) && std::isfinite(p.y), where + "non-finite waypoint");
  for (size_t t = 1; t < pts.size(); ++t)
    check_data((pts[t] - pts[t - 1]).norm() / kDt <= kMaxSpeed,
               where + std::string(which) + " speed exceeds 40 m/s at step " + std::to_string(t));
}

void validate(const Scenario& s) {
  std::string where = "scenario " + std::to_string(s.id) + ": ";
  check_data(!s.lanes.empty(), where + "no lanes");
  check_data(s.agents.size() >= 2, where + "fewer than 2 agents");

  std::map<int, const Lane*> by_id;
  for (const auto& l : s.lanes) {
    std::string lw = where + "lane " + std::to_string(l.id) + ": ";
    check_data(l.id >= 0, lw + "negative id");
    check_data(by_id.emplace(l.id, &l).second, lw + "duplicate id");
    check_data(l.width > 0, lw + "non-positive width");
    check_data(l.pts.size() >= 2, lw + "needs at least 2 centerline points");
    for (size_t i = 1; i < l.pts.size(); ++i)
      check_data((l.pts[i] - l.pts[i - 1]).norm() <= 5.0 + 1e-9,
                 lw + "centerline gap over 5 m at point " + std::to_string(i));
  }
  for (const auto& l : s.lanes) {
    std::string lw = where + "lane " + std::to_string(l.id) + ": ";
    for (int n : l.succ) check_data(by_id.count(n), lw + "unknown successor " + std::to_string(n));
    for (int n : l.pred) check_data(by_id.count(n), lw + "unknown predecessor " + std::to_string(n));
    for (int n : {l.left, l.right}) {
      if (n < 0) continue;
      check_data(by_id.count(n), lw + "unknown neighbor " + std::to_string(n));
      const Lane* o = by_id[n];
      check_data(o->left == l.id || o->right == l.id,
                 lw + "neighbor relation with lane " + std::to_string(n) + " is not mutual");
    }
  }

  int egos = 0;
  size_t h = s.agents[0].fut.size();
  std::map<int, bool> agent_ids;
  for (const auto& a : s.agents) {
    std::string aw = where + "agent " + std::to_string(a.id) + ": ";
    check_data(a.id >= 0, aw + "negative id");
    check_data(agent_ids.emplace(a.id, true).second, aw + "duplicate id");
    egos += a.ego ? 1 : 0;
    validate_track(s, a, a.obs, "observed", kObsSteps);
    check_data(!a.fut.empty(), aw + "empty future");
    check_data(a.fut.size() == h, aw + "future horizon differs from the scenario's");
    validate_track(s, a, a.fut, "future", h);
    check_data(by_id.count(a.lane), aw + "unknown lane " + std::to_string(a.lane));
    if (a.label.headway)
      check_data(*a.label.headway > 0.05 && *a.label.headway < 30.0,
                 aw + "headway label outside (0.05, 30) s");
    if (a.hidden)
      check_data(a.hidden->headway > 0, aw + "non-positive hidden headway");
  }
  check_data(egos == 1, where + "expected exactly one ego agent, found " + std::to_string(egos));
}

// ---------------------------------------------------------------------------
// Canonical frame

static Pt lane_direction_at(const Lane& lane, Pt p) {
  double best = 1e300;
  Pt dir{1, 0};
  for (size_t i = 1; i < lane.pts.size(); ++i) {
    Pt a = lane.pts[i - 1], b = lane.pts[i], d = b - a;
    double len2 = dot(d, d);
    if (len2 < 1e-12) continue;
    double t = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
    Pt q = a + t * d;
    double dist = (p - q).norm();
    if (dist < best) {
      best = dist;
      dir = (1.0 / std::sqrt(len2)) * d;
    }
  }
  return dir;
}

Frame compute_frame(const Agent& a, const Scenario& s) {
  check_data(a.obs.size() >= 2, "agent " + std::to_string(a.id) + ": needs 2+ observed points");
  Frame f;
  f.origin = a.obs.back();
  Pt v = a.obs[a.obs.size() - 1] - a.obs[a.obs.size() - 2];
  double speed = v.norm() / kDt;
  if (speed < 0.1) {
    const Lane* lane = s.lane_by_id(a.lane);
    Pt d = lane ? lane_direction_at(*lane, f.origin) : Pt{1, 0};
    f.c = d.x;
    f.s = d.y;
  } else {
    double n = v.norm();
    f.c = v.x / n;
    f.s = v.y / n;
  }
  return f;
}

CanonicalTrack normalize_frame(const Agent& a, const Scenario& s) {
  CanonicalTrack out;
  out.frame = compute_frame(a, s);
  out.obs.reserve(a.obs.size());
  out.fut.reserve(a.fut.size());
  for (Pt p : a.obs) out.obs.push_back(out.frame.to_local(p));
  for (Pt p : a.fut) out.fut.push_back(out.frame.to_local(p));
  return out;
}

// ---------------------------------------------------------------------------
// Headway

std::optional<double> compute_headway(const Scenario& s, int agent_id) {
  const Agent* f = nullptr;
  for (const auto& a : s.agents)
    if (a.id == agent_id) f = &a;
  check_data(f != nullptr, "scenario " + std::to_string(s.id) + ": no agent " +
                               std::to_string(agent_id));

  double total = 0;
  int n = 0;
  for (int t = 0; t < kObsSteps; ++t) {
    Pt p = f->obs[t];
    Pt v = t + 1 < kObsSteps ? f->obs[t + 1] - f->obs[t] : f->obs[t] - f->obs[t - 1];
    double speed = v.norm() / kDt;
    if (speed < kMinHeadwaySpeed) continue;
    Pt u = (1.0 / v.norm()) * v;
    double nearest = 1e300;
    for (const auto& o : s.agents) {
      if (o.id == agent_id) continue;
      Pt r = o.obs[t] - p;
      double along = dot(r, u), lat = cross(u, r);
      // Same corridor: ahead, within range, laterally inside ~half a lane.
      if (along > 0.5 && along <= kLeadRange && std::abs(lat) <= 2.0) nearest = std::min(nearest, along);
    }
    if (nearest < 1e299) {
      total += nearest / speed;
      ++n;
    }
  }
  // Require a persistent lead relationship: at least half the window must
  // have a qualifying lead, so a corridor briefly swept across other traffic
  // during a maneuver does not masquerade as car-following.
  if (n < kObsSteps / 2) return std::nullopt;
  double h = total / n;
  if (h <= 0.05 || h >= 30.0) return std::nullopt;
  return h;
}

// ---------------------------------------------------------------------------
// Intention labeling

// Signed lateral offset of p from the lane centerline; the nearest segment is
// extended infinitely so maneuvers that leave the lane keep a well-defined
// offset. Positive = left of travel direction.
static double lateral_offset(const Lane& lane, Pt p) {
  double best = 1e300;
  double lat = 0;
  for (size_t i = 1; i < lane.pts.size(); ++i) {
    Pt a = lane.pts[i - 1], d = lane.pts[i] - a;
    double len2 = dot(d, d);
    if (len2 < 1e-12) continue;
    double t = dot(p - a, d) / len2;
    double tc = std::clamp(t, 0.0, 1.0);
    double dist = (p - (a + tc * d)).norm();
    if (dist < best) {
      best = dist;
      lat = cross((1.0 / std::sqrt(len2)) * d, p - a);
    }
  }
  return lat;
}

std::optional<Intent> label_intention(const Scenario& s, int agent_id) {
  const Agent* a = nullptr;
  for (const auto& x : s.agents)
    if (x.id == agent_id) a = &x;
  check_data(a != nullptr, "scenario " + std::to_string(s.id) + ": no agent " +
                               std::to_string(agent_id));
  const Lane* lane = s.lane_by_id(a->lane);
  if (!lane) return std::nullopt;

  std::vector<Pt> path = a->obs;
  path.insert(path.end(), a->fut.begin(), a->fut.end());
  if (path.size() < 2) return std::nullopt;

  double w = lane->width;
  double base = lateral_offset(*lane, path.front());
  double dmin = 0, dmax = 0, dend = 0;
  for (const Pt& p : path) {
    double d = lateral_offset(*lane, p) - base;
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    dend = d;
  }

  // Net heading change, accumulated from per-step displacement directions.
  double dtheta = 0;
  double prev = 0;
  bool have_prev = false;
  for (size_t t = 1; t < path.size(); ++t) {
    Pt v = path[t] - path[t - 1];
    if (v.norm() / kDt < 0.3) continue;  // ignore near-stationary steps
    double th = std::atan2(v.y, v.x);
    if (have_prev) {
      double d = th - prev;
      while (d > M_PI) d -= 2 * M_PI;
      while (d < -M_PI) d += 2 * M_PI;
      dtheta += d;
    }
    prev = th;
    have_prev = true;
  }
  const double turn_thresh = 30.0 * M_PI / 180.0;

  bool left_lat = dend > 0.5 * w && dmin > -0.25 * w;
  bool right_lat = dend < -0.5 * w && dmax < 0.25 * w;
  if (left_lat || (dtheta > turn_thresh && dend > 0)) return Intent::left;
  if (right_lat || (dtheta < -turn_thresh && dend < 0)) return Intent::right;
  if (std::max(dmax, -dmin) < 0.25 * w && std::abs(dtheta) < turn_thresh) return Intent::forward;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON persistence

static ojson pts_to_json(const std::vector<Pt>& pts) {
  ojson arr = ojson::array();
  for (const Pt& p : pts) arr.push_back(ojson::array({p.x, p.y}));
  return arr;
}

static std::vector<Pt> pts_from_json(const ojson& j, const std::string& where) {
  check_data(j.is_array(), where + ": expected array of points");
  std::vector<Pt> out;
  out.reserve(j.size());
  for (const auto& e : j) {
    check_data(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(),
               where + ": point must be [x, y]");
    out.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return out;
}

std::string scenarios_to_json(const std::vector<Scenario>& scenarios) {
  ojson root;
  root["version"] = 1;
  ojson list = ojson::array();
  for (const Scenario& s : scenarios) {
    ojson js;
    js["id"] = s.id;
    ojson lanes = ojson::array();
    for (const Lane& l : s.lanes) {
      ojson jl;
      jl["id"] = l.id;
      jl["width"] = l.width;
      jl["pts"] = pts_to_json(l.pts);
      jl["succ"] = l.succ;
      jl["pred"] = l.pred;
      jl["left"] = l.left;
      jl["right"] = l.right;
      lanes.push_back(std::move(jl));
    }
    js["lanes"] = std::move(lanes);
    ojson agents = ojson::array();
    for (const Agent& a : s.agents) {
      ojson ja;
      ja["id"] = a.id;
      ja["ego"] = a.ego;
      ja["obs"] = pts_to_json(a.obs);
      ja["fut"] = pts_to_json(a.fut);
      ja["lane"] = a.lane;
      if (!a.label.empty()) {
        ojson jl;
        if (a.label.intent) jl["intent"] = intent_name(*a.label.intent);
        if (a.label.headway) jl["headway"] = *a.label.headway;
        ja["label"] = std::move(jl);
      }
      if (a.hidden) {
        ojson jh;
        jh["intent"] = intent_name(a.hidden->intent);
        jh["headway"] = a.hidden->headway;
        ja["hidden"] = std::move(jh);
      }
      agents.push_back(std::move(ja));
    }
    js["agents"] = std::move(agents);
    list.push_back(std::move(js));
  }
  root["scenarios"] = std::move(list);
  return root.dump();
}

std::vector<Scenario> scenarios_from_json(const std::string& text) {
  ojson root;
  try {
    root = ojson::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("scenario JSON parse error: ") + e.what());
  }
  check_data(root.is_object() && root.contains("version"), "scenario JSON: missing version");
  check_data(root["version"].is_number_integer() && root["version"].get<int>() == 1,
             "scenario JSON: unknown version " + root["version"].dump());
  check_data(root.contains("scenarios") && root["scenarios"].is_array(),
             "scenario JSON: missing scenarios array");

  std::vector<Scenario> out;
  for (const auto& js : root["scenarios"]) {
    Scenario s;
    s.id = js.value("id", -1);
    std::string where = "scenario " + std::to_string(s.id);
    check_data(js.contains("lanes") && js.contains("agents"), where + ": missing lanes/agents");
    for (const auto& jl : js["lanes"]) {
      Lane l;
      l.id = jl.value("id", -1);
      l.width = jl.value("width", 3.5);
      l.pts = pts_from_json(jl.at("pts"), where + " lane " + std::to_string(l.id));
      l.succ = jl.value("succ", std::vector<int>{});
      l.pred = jl.value("pred", std::vector<int>{});
      l.left = jl.value("left", -1);
      l.right = jl.value("right", -1);
      s.lanes.push_back(std::move(l));
    }
    for (const auto& ja : js["agents"]) {
      Agent a;
      a.id = ja.value("id", -1);
      a.ego = ja.value("ego", false);
      std::string aw = where + " agent " + std::to_string(a.id);
      a.obs = pts_from_json(ja.at("obs"), aw);
      a.fut = pts_from_json(ja.at("fut"), aw);
      a.lane = ja.value("lane", -1);
      if (ja.contains("label")) {
        const auto& jl = ja["label"];
        if (jl.contains("intent")) a.label.intent = intent_from_name(jl["intent"].get<std::string>());
        if (jl.contains("headway")) a.label.headway = jl["headway"].get<double>();
      }
      if (ja.contains("hidden")) {
        HiddenBehavior h;
        h.intent = intent_from_name(ja["hidden"].at("intent").get<std::string>());
        h.headway = ja["hidden"].at("headway").get<double>();
        a.hidden = h;
      }
      s.agents.push_back(std::move(a));
    }
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

void save_scenarios(const std::string& path, const std::vector<Scenario>& scenarios) {
  std::ofstream f(path, std::ios::binary);
  check_data(bool(f), "cannot open '" + path + "' for writing");
  std::string text = scenarios_to_json(scenarios);
  f.write(text.data(), std::streamsize(text.size()));
  f << '\n';
  check_data(bool(f), "write failed for '" + path + "'");
}

std::vector<Scenario> load_scenarios(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check_data(bool(f), "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return scenarios_from_json(ss.str());
}

}  // namespace tae
