#include "tae/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tae/error.hpp"
#include "tae/rng.hpp"

namespace tae {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kKv = 0.9;    // relative-speed damping
constexpr double kKg = 0.25;   // gap-error gain
constexpr double kAccMin = -4.0, kAccMax = 3.0;
constexpr double kTurnSpeed = 7.0;  // speed cap inside an intersection arc

// Polyline path with arclength parameterization. Vehicles travel along a
// path; lane changes are expressed as a lateral offset profile on top of it.
struct Path {
  std::vector<Pt> pts;
  std::vector<double> cum;
  double arc0 = 1e18, arc1 = -1e18;  // arclength span of a turn arc, if any

  void finish() {
    cum.assign(pts.size(), 0.0);
    for (size_t i = 1; i < pts.size(); ++i) cum[i] = cum[i - 1] + (pts[i] - pts[i - 1]).norm();
  }
  double length() const { return cum.back(); }
  // Clamped segment lookup; extrapolates along the end segments.
  size_t seg(double s) const {
    size_t lo = 0, hi = cum.size() - 1;
    while (hi - lo > 1) {
      size_t mid = (lo + hi) / 2;
      if (cum[mid] <= s) lo = mid; else hi = mid;
    }
    return lo;
  }
  Pt dir_of(size_t i) const {
    Pt d = pts[i + 1] - pts[i];
    double n = d.norm();
    return n > 1e-12 ? Pt{d.x / n, d.y / n} : Pt{1, 0};
  }
  Pt pos(double s) const {
    size_t i = seg(s);
    Pt d = dir_of(i);
    return pts[i] + (s - cum[i]) * d;
  }
  Pt dir(double s) const { return dir_of(seg(s)); }
  // Speed target at arclength s for a vehicle with free speed vdes: capped
  // inside (and slightly before) a turn arc.
  double vtarget(double s, double vdes) const {
    if (s > arc0 - 12.0 && s < arc1) return std::min(vdes, kTurnSpeed);
    return vdes;
  }
};

struct Veh {
  int path = 0;
  double s = 0, v = 0;
  double vdes = 10;
  double h = 1.5;       // target time headway (hidden ground truth)
  int lead = -1;        // index in the vehicle array, -1 for platoon leaders
  double couple_until = 1e18;  // follow the lead only while lead.s <= this
  Intent intent = Intent::forward;
  double lat_to = 0, t_lat0 = -1, lat_dur = 2.5;  // lane-change profile
  bool ego = false;
  int lane_hint = -1;   // initial lane id
};

struct World {
  std::vector<Lane> lanes;
  std::vector<Path> paths;
  std::vector<Veh> vehs;
};

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// Lateral offset of vehicle at time t (seconds since scenario start).
double lat_at(const Veh& w, double t) {
  if (w.t_lat0 < 0) return 0.0;
  return w.lat_to * smoothstep((t - w.t_lat0) / w.lat_dur);
}

Pt left_normal(Pt d) { return Pt{-d.y, d.x}; }

std::vector<Pt> sample_line(Pt a, Pt b, double step) {
  double len = (b - a).norm();
  int n = std::max(1, (int)std::ceil(len / step));
  std::vector<Pt> out;
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    double f = double(i) / n;
    out.push_back(Pt{a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f});
  }
  return out;
}

void append_pts(std::vector<Pt>& dst, const std::vector<Pt>& src) {
  for (const Pt& p : src) {
    if (!dst.empty() && (p - dst.back()).norm() < 1e-9) continue;
    dst.push_back(p);
  }
}

double draw_headway(Rng& rng) {
  for (int i = 0; i < 64; ++i) {
    double h = rng.lognormal(kHeadwayLogMu, kHeadwayLogSigma);
    if (h >= kHeadwayMin && h <= kHeadwayMax) return h;
  }
  return 1.5;
}

// ---- straight road -------------------------------------------------------

// nl parallel lanes along +x, length 200 m, lane i centered at y = 3.5*i.
// Each lane is split into two chained segments so successor/predecessor
// topology is exercised. Segment ids: lane i -> {2i, 2i+1}.
World build_straight(Rng& rng, int A) {
  World w;
  int nl = (A >= 6) ? 3 : (A <= 4 ? 2 : 2 + (int)rng.uniform_int(2));
  const double kW = 3.5, kLen = 200.0, kHalf = 100.0;
  for (int i = 0; i < nl; ++i) {
    for (int half = 0; half < 2; ++half) {
      Lane l;
      l.id = 2 * i + half;
      l.width = kW;
      double x0 = half * kHalf, x1 = x0 + kHalf;
      l.pts = sample_line(Pt{x0, kW * i}, Pt{x1, kW * i}, 4.0);
      if (half == 0) l.succ = {2 * i + 1};
      else l.pred = {2 * i};
      l.left = (i + 1 < nl) ? 2 * (i + 1) + half : -1;
      l.right = (i > 0) ? 2 * (i - 1) + half : -1;
      w.lanes.push_back(l);
    }
  }
  // One shared path per lane.
  for (int i = 0; i < nl; ++i) {
    Path p;
    p.pts = sample_line(Pt{0, kW * i}, Pt{kLen, kW * i}, 4.0);
    p.finish();
    w.paths.push_back(p);
  }

  // Place platoons lane by lane with staggered chainage so adjacent lanes
  // leave room for lane changes. A follower that would spawn off the road
  // start becomes a leader further ahead so large target headways stay honest.
  std::vector<double> tail_s(nl, -1);  // s of the rearmost vehicle per lane
  std::vector<double> head_s(nl, -1);
  std::vector<double> lane_vdes(nl, 0);
  std::vector<int> lane_tail_idx(nl, -1);
  int lane = (int)rng.uniform_int(nl);
  int placed = 0;
  while (placed < A) {
    Veh v;
    v.path = lane;
    if (tail_s[lane] < 0) {
      v.vdes = rng.uniform(7.0, 13.0);
      v.v = v.vdes;
      v.s = (head_s[lane] < 0) ? rng.uniform(70.0, 105.0) + 20.0 * lane
                               : head_s[lane] + rng.uniform(35.0, 60.0);
      v.lead = -1;
      head_s[lane] = v.s;
    } else {
      v.vdes = lane_vdes[lane];
      v.h = draw_headway(rng);
      double f = rng.uniform(0.92, 1.08);
      double vlead = w.vehs[lane_tail_idx[lane]].v;
      v.v = std::max(5.0, vlead + rng.uniform(-0.3, 0.3));
      double s0 = tail_s[lane] - f * v.h * vlead;
      if (s0 < 8.0) {
        // No room: restart on the next lane as a leader.
        tail_s[lane] = -1;
        lane = (lane + 1) % nl;
        continue;
      }
      v.s = s0;
      v.lead = lane_tail_idx[lane];
    }
    lane_vdes[lane] = v.vdes;
    tail_s[lane] = v.s;
    v.lane_hint = 2 * lane + (v.s >= kHalf ? 1 : 0);
    w.vehs.push_back(v);
    lane_tail_idx[lane] = (int)w.vehs.size() - 1;
    ++placed;
    if (rng.uniform() < 0.35) lane = (lane + 1) % nl;  // occasionally move on
  }
  return w;
}

// Assign lane-change maneuvers on a straight road. A vehicle may change only
// into an existing, locally clear lane; the turn probability of eligible
// vehicles is boosted to carry the mass of blocked ones, keeping the
// dataset-level mix on target.
void assign_straight_intents(Rng& rng, World& w, int nl, const std::array<double, 3>& mix) {
  size_t V = w.vehs.size();
  std::vector<char> can_l(V, 0), can_r(V, 0);
  std::vector<size_t> eligible;
  for (size_t i = 0; i < V; ++i) {
    const Veh& v = w.vehs[i];
    auto clear = [&](int dest_lane) {
      for (size_t j = 0; j < V; ++j) {
        if (j == i || w.vehs[j].path != dest_lane) continue;
        if (std::abs(w.vehs[j].s - v.s) < 14.0) return false;
      }
      return true;
    };
    can_l[i] = v.path + 1 < nl && clear(v.path + 1);
    can_r[i] = v.path - 1 >= 0 && clear(v.path - 1);
    if (can_l[i] || can_r[i]) eligible.push_back(i);
  }
  double want_turns = 1.12 * (mix[1] + mix[2]) * (double)V;
  double q = eligible.empty() ? 0.0 : std::min(1.0, want_turns / (double)eligible.size());
  double plr = mix[1] + mix[2] > 0 ? mix[1] / (mix[1] + mix[2]) : 0.5;
  for (size_t i : eligible) {
    if (rng.uniform() >= q) continue;
    Veh& v = w.vehs[i];
    if (can_l[i] && can_r[i]) v.intent = (rng.uniform() < plr) ? Intent::left : Intent::right;
    else v.intent = can_l[i] ? Intent::left : Intent::right;
    v.lat_to = (v.intent == Intent::left) ? 3.5 : -3.5;
    v.t_lat0 = rng.uniform(1.0, 1.8);
    v.lat_dur = rng.uniform(2.2, 2.8);
  }
}

// ---- 4-way intersection ---------------------------------------------------

// Right-hand traffic. Roads along +x/-x/+y/-y with one lane per direction at
// lateral offset 1.75 m; the junction box spans [-8, 8] on both axes.
struct Approach {
  Pt d;        // travel direction
  int lane_in; // approach lane id
};

World build_intersection(Rng& rng, int A, const std::array<double, 3>& mix) {
  World w;
  const double kB = 8.0, kFar = 90.0, kOff = 1.75, kW = 3.5;
  const Pt dirs[4] = {Pt{1, 0}, Pt{-1, 0}, Pt{0, 1}, Pt{0, -1}};  // E W N S
  auto right_of = [](Pt d) { return Pt{d.y, -d.x}; };
  // Lane ids: approach of dirs[k] -> 2k, exit -> 2k+1.
  for (int k = 0; k < 4; ++k) {
    Pt d = dirs[k];
    Pt o = kOff * right_of(d);
    Lane in, out;
    in.id = 2 * k;
    in.width = kW;
    in.pts = sample_line(Pt{-kFar * d.x + o.x, -kFar * d.y + o.y}, Pt{-kB * d.x + o.x, -kB * d.y + o.y}, 4.0);
    in.succ = {2 * k + 1};
    out.id = 2 * k + 1;
    out.width = kW;
    out.pts = sample_line(Pt{kB * d.x + o.x, kB * d.y + o.y}, Pt{kFar * d.x + o.x, kFar * d.y + o.y}, 4.0);
    out.pred = {2 * k};
    w.lanes.push_back(in);
    w.lanes.push_back(out);
  }
  // Opposite-direction adjacency: the lane to the left of an approach is the
  // oncoming road's exit running alongside it (and vice versa).
  auto opp = [](int k) { return k ^ 1; };  // E<->W, N<->S
  for (int k = 0; k < 4; ++k) {
    w.lanes[2 * k].left = 2 * opp(k) + 1;       // approach k <-> exit opp(k)
    w.lanes[2 * opp(k) + 1].left = 2 * k;
  }

  // Paths per (approach, maneuver): 0 straight, 1 left, 2 right.
  auto build_path = [&](int k, Intent m) {
    Pt d = dirs[k];
    Pt o = kOff * right_of(d);
    Path p;
    append_pts(p.pts, sample_line(Pt{-kFar * d.x + o.x, -kFar * d.y + o.y},
                                  Pt{-kB * d.x + o.x, -kB * d.y + o.y}, 4.0));
    Pt A0{-kB * d.x + o.x, -kB * d.y + o.y};
    if (m == Intent::forward) {
      append_pts(p.pts, sample_line(A0, Pt{kB * d.x + o.x, kB * d.y + o.y}, 2.0));
      Pt o2 = o;
      append_pts(p.pts, sample_line(Pt{kB * d.x + o2.x, kB * d.y + o2.y},
                                    Pt{kFar * d.x + o2.x, kFar * d.y + o2.y}, 4.0));
    } else {
      Pt e = (m == Intent::left) ? left_normal(d) : right_of(d);
      Pt oe = kOff * right_of(e);
      Pt B0{kB * e.x + oe.x, kB * e.y + oe.y};
      double r = (m == Intent::left) ? (kB + kOff) : (kB - kOff);
      Pt C = (m == Intent::left) ? Pt{A0.x + r * left_normal(d).x, A0.y + r * left_normal(d).y}
                                 : Pt{A0.x + r * right_of(d).x, A0.y + r * right_of(d).y};
      double a0 = std::atan2(A0.y - C.y, A0.x - C.x);
      double a1 = std::atan2(B0.y - C.y, B0.x - C.x);
      double sweep = a1 - a0;
      if (m == Intent::left) { while (sweep < 0) sweep += 2 * kPi; }
      else { while (sweep > 0) sweep -= 2 * kPi; }
      int n = std::max(6, (int)std::ceil(r * std::abs(sweep) / 1.5));
      std::vector<Pt> arc;
      for (int i = 0; i <= n; ++i) {
        double a = a0 + sweep * i / n;
        arc.push_back(Pt{C.x + r * std::cos(a), C.y + r * std::sin(a)});
      }
      double pre = 0;  // arclength of the approach portion
      for (size_t i = 1; i < p.pts.size(); ++i) pre += (p.pts[i] - p.pts[i - 1]).norm();
      append_pts(p.pts, arc);
      p.arc0 = pre;
      p.arc1 = pre + r * std::abs(sweep);
      append_pts(p.pts, sample_line(B0, Pt{kFar * e.x + oe.x, kFar * e.y + oe.y}, 4.0));
    }
    p.finish();
    return p;
  };
  // paths[k*3 + m]
  for (int k = 0; k < 4; ++k)
    for (int m = 0; m < 3; ++m) w.paths.push_back(build_path(k, static_cast<Intent>(m)));

  const double div_s = kFar - kB;  // approach length; maneuvers share it

  int k1 = (int)rng.uniform_int(4);
  int k2 = (k1 < 2) ? 2 + (int)rng.uniform_int(2) : (int)rng.uniform_int(2);  // perpendicular
  int n1 = (A + 1) / 2, n2 = A - n1;
  double arr1 = rng.uniform(0.6, 1.1);
  double arr2 = arr1 + rng.uniform(2.0, 2.6);

  // Pass 1: spawn chains (positions do not depend on the maneuver, which
  // only alters the path beyond the shared approach).
  auto place = [&](int k, int count, double arrive, bool ego_first) {
    double vdes = rng.uniform(8.0, 12.0);
    double tail = -1;
    int tail_idx = -1;
    for (int i = 0; i < count; ++i) {
      Veh v;
      v.vdes = vdes;
      if (tail < 0) {
        v.v = vdes;
        v.s = div_s - vdes * arrive;
        v.lead = -1;
      } else {
        v.h = draw_headway(rng);
        double f = rng.uniform(0.92, 1.08);
        double vlead = w.vehs[tail_idx].v;
        // Large target headways may not fit on the approach; shrink the
        // target so the follower's behavior stays consistent with it.
        double h_fit = (tail - 6.0) / (f * std::max(vlead, 1.0));
        if (v.h > h_fit) v.h = std::max(kHeadwayMin, h_fit);
        v.v = std::max(5.0, vlead + rng.uniform(-0.3, 0.3));
        double s0 = tail - f * v.h * vlead;
        v.s = std::max(1.0, std::min(s0, tail - 3.0));
        v.lead = tail_idx;
        v.couple_until = div_s + 2.0;
      }
      v.ego = ego_first && i == 0;
      v.intent = Intent::forward;
      v.path = k * 3;
      v.lane_hint = 2 * k;
      tail = v.s;
      w.vehs.push_back(v);
      tail_idx = (int)w.vehs.size() - 1;
    }
  };
  place(k1, n1, arr1, true);
  place(k2, n2, arr2, false);

  // Pass 2: maneuvers. Only vehicles reaching the box early enough may turn
  // (so the maneuver is visible inside the labeling window); their turn
  // probability is boosted to carry the mass of the ineligible ones, keeping
  // the dataset-level mix on target.
  std::vector<int> eligible;
  for (size_t i = 0; i < w.vehs.size(); ++i) {
    double eta = (div_s - w.vehs[i].s) / std::max(w.vehs[i].v, 1.0);
    if (eta <= 4.0) eligible.push_back((int)i);
  }
  double want_turns = 1.12 * (mix[1] + mix[2]) * (double)w.vehs.size();
  double q = eligible.empty() ? 0.0 : std::min(1.0, want_turns / (double)eligible.size());
  double plr = mix[1] + mix[2] > 0 ? mix[1] / (mix[1] + mix[2]) : 0.5;
  for (int idx : eligible) {
    if (rng.uniform() >= q) continue;
    Intent it = (rng.uniform() < plr) ? Intent::left : Intent::right;
    Veh& v = w.vehs[idx];
    v.intent = it;
    v.path = (v.path / 3) * 3 + static_cast<int>(it);
  }
  return w;
}

// ---- simulation ------------------------------------------------------------

std::vector<std::vector<Pt>> simulate(const World& w, int steps) {
  std::vector<Veh> st = w.vehs;
  std::vector<std::vector<Pt>> out(st.size());
  for (auto& t : out) t.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    double t = k * kDt;
    for (size_t i = 0; i < st.size(); ++i) {
      const Path& p = w.paths[st[i].path];
      Pt base = p.pos(st[i].s);
      Pt nrm = left_normal(p.dir(st[i].s));
      double lat = lat_at(st[i], t);
      out[i].push_back(Pt{base.x + lat * nrm.x, base.y + lat * nrm.y});
    }
    if (k + 1 == steps) break;
    std::vector<double> acc(st.size(), 0.0);
    for (size_t i = 0; i < st.size(); ++i) {
      const Veh& v = st[i];
      const Path& p = w.paths[v.path];
      double a_track = 1.8 * (p.vtarget(v.s, v.vdes) - v.v);
      double a = a_track;
      if (v.lead >= 0 && st[v.lead].s <= v.couple_until) {
        double gap = st[v.lead].s - v.s;
        a = std::min(car_following_accel(v.v, st[v.lead].v, gap, v.h), a_track);
      }
      acc[i] = std::clamp(a, kAccMin, kAccMax);
    }
    for (size_t i = 0; i < st.size(); ++i) {
      st[i].v = std::clamp(st[i].v + acc[i] * kDt, 0.0, 20.0);
      st[i].s += st[i].v * kDt;
    }
  }
  return out;
}

double min_pair_dist(const std::vector<std::vector<Pt>>& tracks) {
  double best = 1e18;
  for (size_t i = 0; i < tracks.size(); ++i)
    for (size_t j = i + 1; j < tracks.size(); ++j)
      for (size_t k = 0; k < tracks[i].size(); ++k)
        best = std::min(best, (tracks[i][k] - tracks[j][k]).norm());
  return best;
}

Pt xform(Pt p, double c, double s, Pt t) {
  return Pt{c * p.x - s * p.y + t.x, s * p.x + c * p.y + t.y};
}

Scenario assemble(const World& w, const std::vector<std::vector<Pt>>& tracks,
                  int id, int horizon, Rng& rng) {
  Scenario sc;
  sc.id = id;
  double th = rng.uniform(0.0, 2 * kPi);
  Pt tr{rng.uniform(-150.0, 150.0), rng.uniform(-150.0, 150.0)};
  double c = std::cos(th), s = std::sin(th);
  sc.lanes = w.lanes;
  for (Lane& l : sc.lanes)
    for (Pt& p : l.pts) p = xform(p, c, s, tr);
  for (size_t i = 0; i < w.vehs.size(); ++i) {
    Agent a;
    a.id = (int)i;
    a.ego = w.vehs[i].ego;
    a.lane = w.vehs[i].lane_hint;
    for (int k = 0; k < kObsSteps; ++k) a.obs.push_back(xform(tracks[i][k], c, s, tr));
    for (int k = 0; k < horizon; ++k) a.fut.push_back(xform(tracks[i][kObsSteps + k], c, s, tr));
    a.hidden = HiddenBehavior{w.vehs[i].intent, w.vehs[i].h};
    sc.agents.push_back(a);
  }
  return sc;
}

}  // namespace

double car_following_accel(double v, double v_lead, double gap, double target_headway) {
  return kKv * (v_lead - v) + kKg * (gap - target_headway * v);
}

std::vector<Scenario> synth_generate(const SynthConfig& cfg) {
  if (cfg.n < 1) throw UsageError("synth: scenario count must be >= 1");
  if (cfg.agents < 2 || cfg.agents > 8)
    throw UsageError("synth: agents per scenario must be in [2, 8], got " + std::to_string(cfg.agents));
  if (cfg.label_frac < 0.0 || cfg.label_frac > 1.0)
    throw UsageError("synth: label fraction must be in [0, 1]");
  if (cfg.horizon < 1 || cfg.horizon > 100) throw UsageError("synth: horizon must be in [1, 100]");
  double mixsum = cfg.intent_mix[0] + cfg.intent_mix[1] + cfg.intent_mix[2];
  if (!(mixsum > 0) || cfg.intent_mix[0] < 0 || cfg.intent_mix[1] < 0 || cfg.intent_mix[2] < 0)
    throw UsageError("synth: intent mix must be nonnegative with positive sum");
  std::array<double, 3> mix{cfg.intent_mix[0] / mixsum, cfg.intent_mix[1] / mixsum,
                            cfg.intent_mix[2] / mixsum};

  Rng root(cfg.seed);
  std::vector<Scenario> out;
  out.reserve(cfg.n);
  int steps = kObsSteps + cfg.horizon;
  for (int si = 0; si < cfg.n; ++si) {
    Rng srng = root.derive((uint64_t)si);
    Scenario sc;
    bool ok = false;
    for (int attempt = 0; attempt < 25 && !ok; ++attempt) {
      Rng rng = srng.derive((uint64_t)attempt);
      World w;
      bool inter = rng.uniform() < 0.3;
      if (inter) {
        w = build_intersection(rng, cfg.agents, mix);
      } else {
        w = build_straight(rng, cfg.agents);
        // Ego: mostly a platoon leader (so followers react to it), else the
        // rearmost follower.
        int pick = -1;
        if (rng.uniform() < 0.7) {
          for (size_t i = 0; i < w.vehs.size(); ++i)
            if (w.vehs[i].lead < 0) { pick = (int)i; break; }
        } else {
          for (int i = (int)w.vehs.size() - 1; i >= 0; --i)
            if (w.vehs[i].lead >= 0) { pick = i; break; }
          if (pick < 0) pick = 0;
        }
        if (pick < 0) pick = 0;
        w.vehs[pick].ego = true;
        int nl = (int)(w.lanes.size() / 2);
        assign_straight_intents(rng, w, nl, mix);
      }
      auto tracks = simulate(w, steps);
      if (min_pair_dist(tracks) < 1.2) continue;
      sc = assemble(w, tracks, si, cfg.horizon, rng);
      // Reveal labels for a random subset using the rule-based extractors.
      for (Agent& a : sc.agents) {
        if (rng.uniform() >= cfg.label_frac) continue;
        a.label.intent = label_intention(sc, a.id);
        a.label.headway = compute_headway(sc, a.id);
      }
      ok = true;
    }
    if (!ok)
      throw DataError("synth: could not build a collision-free scenario " + std::to_string(si) +
                      " after 25 attempts");
    validate(sc);
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace tae
