#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "tae/evaluation.hpp"
#include "tae/synth.hpp"

using namespace tae;

namespace {

std::vector<Scenario> make_data(int n, uint64_t seed, double label_frac = 0.5) {
  SynthConfig sc;
  sc.n = n;
  sc.agents = 4;
  sc.label_frac = label_frac;
  sc.seed = seed;
  return synth_generate(sc);
}

ModelConfig small_model() {
  ModelConfig mc;
  mc.feat.width = 16;
  mc.feat.hidden = 16;
  mc.feat.conv = 8;
  mc.enc_hidden = 16;
  mc.dec_hidden = 24;
  mc.disc_hidden = 16;
  mc.cls_hidden = 16;
  return mc;
}

Checkpoint small_ckpt(uint64_t seed) {
  TrainConfig tc;
  tc.seed = seed;
  return train_init(small_model(), tc);
}

Array fill_rows(int rows, int cols, double base, double step) {
  Array a = Array::zeros({rows, cols});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) a.v[size_t(r * cols + c)] = float(base + step * (r * cols + c));
  return a;
}

}  // namespace

// ---- displacement -----------------------------------------------------------

TEST_CASE("identical predictions score zero displacement") {
  Array t = fill_rows(3, 8, 0.5, 0.25);
  DisplacementStats s = displacement_metrics(t, t);
  CHECK(s.ade == 0.0);
  CHECK(s.fde == 0.0);
}

TEST_CASE("a constant 3-4 offset scores five metres everywhere") {
  Array truth = fill_rows(2, 10, 0.0, 0.1);
  Array pred = truth;
  for (int r = 0; r < 2; ++r)
    for (int t = 0; t < 5; ++t) {
      pred.v[size_t(r * 10 + 2 * t)] += 3.0f;
      pred.v[size_t(r * 10 + 2 * t + 1)] += 4.0f;
    }
  DisplacementStats s = displacement_metrics(pred, truth);
  CHECK(s.ade == doctest::Approx(5.0).epsilon(1e-6));
  CHECK(s.fde == doctest::Approx(5.0).epsilon(1e-6));
  auto a = per_row_ade(pred, truth);
  auto f = per_row_fde(pred, truth);
  for (double v : a) CHECK(v == doctest::Approx(5.0));
  for (double v : f) CHECK(v == doctest::Approx(5.0));
}

TEST_CASE("best-of-K never scores worse than the first candidate") {
  const int A = 5, K = 4, cols = 12;
  Array truth = fill_rows(A, cols, 1.0, 0.3);
  Array cands = Array::zeros({A * K, cols});
  Rng rng(7);
  for (size_t i = 0; i < cands.v.size(); ++i) cands.v[i] = float(rng.uniform(-4.0, 4.0));
  Array first = Array::zeros({A, cols});
  for (int a = 0; a < A; ++a)
    for (int c = 0; c < cols; ++c) first.v[size_t(a * cols + c)] = cands.v[size_t(a * K * cols + c)];

  DisplacementStats one = displacement_metrics(first, truth);
  DisplacementStats best = min_displacement_metrics(cands, truth, K);
  CHECK(best.ade <= one.ade + 1e-12);
  CHECK(best.fde <= one.fde + 1e-12);

  DisplacementStats same = min_displacement_metrics(first, truth, 1);
  CHECK(same.ade == doctest::Approx(one.ade).epsilon(1e-12));
  CHECK(same.fde == doctest::Approx(one.fde).epsilon(1e-12));
}

TEST_CASE("displacement shape mismatches are rejected") {
  Array a = fill_rows(2, 8, 0, 0.1), b = fill_rows(2, 10, 0, 0.1);
  CHECK_THROWS_AS(displacement_metrics(a, b), DataError);
  CHECK_THROWS_AS(min_displacement_metrics(a, b, 1), DataError);
  CHECK_THROWS_AS(min_displacement_metrics(a, a, 3), DataError);
}

// ---- behavior metrics -------------------------------------------------------

TEST_CASE("perfect behavior recovery scores one and zero") {
  std::vector<LatentCode> codes(10);
  std::vector<BehaviorLabel> truth(10);
  Rng rng(3);
  for (int r = 0; r < 10; ++r) {
    int cls = rng.uniform_int(3);
    codes[size_t(r)].intent = {0, 0, 0};
    codes[size_t(r)].intent[size_t(cls)] = 1.0;
    truth[size_t(r)].intent = Intent(cls);
    double h = rng.uniform(0.5, 5.0);
    codes[size_t(r)].agg = h;
    truth[size_t(r)].headway = h;
  }
  BehaviorReport rep = behavior_metrics(codes, truth);
  CHECK(rep.intent_rows == 10);
  CHECK(rep.agg_rows == 10);
  CHECK(rep.intent_accuracy == 1.0);
  CHECK(rep.agg_mse == 0.0);
}

TEST_CASE("predicting the mean headway scores exactly the label variance") {
  std::vector<double> hs = {1.0, 2.5, 0.75, 4.0, 1.25, 3.5};
  double mean = 0;
  for (double h : hs) mean += h;
  mean /= double(hs.size());
  double var = 0;
  for (double h : hs) var += (h - mean) * (h - mean);
  var /= double(hs.size());

  std::vector<LatentCode> codes(hs.size());
  std::vector<BehaviorLabel> truth(hs.size());
  for (size_t r = 0; r < hs.size(); ++r) {
    codes[r].agg = mean;
    truth[r].headway = hs[r];
  }
  BehaviorReport rep = behavior_metrics(codes, truth);
  CHECK(rep.agg_mse == doctest::Approx(var).epsilon(1e-12));
  CHECK(rep.agg_mse == rep.mean_baseline_mse);  // same squared deviations
  CHECK(rep.intent_rows == 0);
}

TEST_CASE("uniform random intent guesses land near one third") {
  const int n = 1000;
  std::vector<LatentCode> codes(n);
  std::vector<BehaviorLabel> truth(n);
  Rng rng(11);
  for (int r = 0; r < n; ++r) {
    codes[size_t(r)].intent = {0, 0, 0};
    codes[size_t(r)].intent[size_t(rng.uniform_int(3))] = 1.0;
    truth[size_t(r)].intent = Intent(rng.uniform_int(3));
  }
  BehaviorReport rep = behavior_metrics(codes, truth);
  CHECK(rep.intent_rows == n);
  CHECK(std::abs(rep.intent_accuracy - 1.0 / 3.0) <= 0.05);
}

TEST_CASE("rows without labels are skipped per metric") {
  std::vector<LatentCode> codes(4);
  std::vector<BehaviorLabel> truth(4);
  truth[1].intent = Intent::left;
  codes[1].intent = {0, 1, 0};
  truth[2].headway = 2.0;
  codes[2].agg = 2.0;
  BehaviorReport rep = behavior_metrics(codes, truth);
  CHECK(rep.intent_rows == 1);
  CHECK(rep.agg_rows == 1);
  CHECK(rep.intent_accuracy == 1.0);
  CHECK(rep.agg_mse == 0.0);
}

TEST_CASE("hidden truth only marks agents whose lead was observable") {
  auto data = make_data(12, 21, 1.0);
  std::vector<const Scenario*> ptrs;
  for (const auto& s : data) ptrs.push_back(&s);
  FeatBatch fb = feat_batch_build(ptrs);
  auto hidden = hidden_truth(fb, ptrs);
  auto revealed = revealed_truth(fb, ptrs);
  REQUIRE(int(hidden.size()) == fb.n_agents);
  int eligible = 0;
  for (int r = 0; r < fb.n_agents; ++r) {
    const Scenario& s = *ptrs[size_t(fb.scen_of[size_t(r)])];
    const Agent& a = s.agents[size_t(fb.agent_pos[size_t(r)])];
    CHECK(hidden[size_t(r)].intent.has_value());
    bool observable = compute_headway(s, a.id).has_value();
    CHECK(hidden[size_t(r)].headway.has_value() == observable);
    eligible += observable;
    CHECK(revealed[size_t(r)].intent == a.label.intent);
    CHECK(revealed[size_t(r)].headway == a.label.headway);
  }
  CHECK(eligible > 0);  // platoons always have followers
}

// ---- constant velocity baseline ---------------------------------------------

TEST_CASE("a stationary agent extrapolates to copies of its last point") {
  Agent a;
  a.obs.assign(size_t(kObsSteps), Pt{3.0, -2.0});
  auto traj = constant_velocity_traj(a, 5);
  REQUIRE(traj.size() == 5);
  for (const Pt& p : traj) {
    CHECK(p.x == doctest::Approx(3.0));
    CHECK(p.y == doctest::Approx(-2.0));
  }
}

TEST_CASE("uniform motion extrapolates with zero error") {
  Agent a;
  Pt v{0.8, -0.3};
  for (int i = 0; i < kObsSteps; ++i)
    a.obs.push_back(Pt{1.0 + v.x * i, 2.0 + v.y * i});
  auto traj = constant_velocity_traj(a, 8);
  for (int t = 0; t < 8; ++t) {
    Pt want{1.0 + v.x * (kObsSteps - 1 + t + 1), 2.0 + v.y * (kObsSteps - 1 + t + 1)};
    CHECK(traj[size_t(t)].x == doctest::Approx(want.x).epsilon(1e-12));
    CHECK(traj[size_t(t)].y == doctest::Approx(want.y).epsilon(1e-12));
  }
}

TEST_CASE("a turning agent picks up final displacement error") {
  Agent a;
  for (int i = 0; i < kObsSteps; ++i) {
    double th = 0.08 * i;
    a.obs.push_back(Pt{10.0 * std::sin(th), 10.0 * (1.0 - std::cos(th))});
  }
  int H = 10;
  auto traj = constant_velocity_traj(a, H);
  double fde = 0;
  for (int t = 0; t < H; ++t) {
    double th = 0.08 * (kObsSteps - 1 + t + 1);
    Pt want{10.0 * std::sin(th), 10.0 * (1.0 - std::cos(th))};
    if (t == H - 1) fde = (traj[size_t(t)] - want).norm();
  }
  CHECK(fde > 0.1);
}

TEST_CASE("canonical baseline rows agree with the world-frame helper") {
  auto data = make_data(4, 33);
  std::vector<const Scenario*> ptrs;
  for (const auto& s : data) ptrs.push_back(&s);
  FeatBatch fb = feat_batch_build(ptrs);
  int H = 12;
  Array rows = constant_velocity_targets(fb, ptrs, H);
  REQUIRE(rows.shape[0] == fb.n_agents);
  REQUIRE(rows.shape[1] == 2 * H);
  for (int r = 0; r < fb.n_agents; ++r) {
    const Agent& a = ptrs[size_t(fb.scen_of[size_t(r)])]->agents[size_t(fb.agent_pos[size_t(r)])];
    auto world = constant_velocity_traj(a, H);
    for (int t = 0; t < H; ++t) {
      Pt l = fb.frame[size_t(r)].to_local(world[size_t(t)]);
      CHECK(rows.v[size_t(r) * 2 * H + 2 * t] == doctest::Approx(l.x).epsilon(1e-5));
      CHECK(rows.v[size_t(r) * 2 * H + 2 * t + 1] == doctest::Approx(l.y).epsilon(1e-5));
    }
  }
}

TEST_CASE("the baseline needs history and a horizon") {
  Agent a;
  a.obs.push_back(Pt{0, 0});
  CHECK_THROWS_AS(constant_velocity_traj(a, 5), DataError);
  a.obs.push_back(Pt{1, 0});
  CHECK_THROWS_AS(constant_velocity_traj(a, 0), DataError);
}

// ---- latent statistics ------------------------------------------------------

TEST_CASE("ks statistic separates matched and shifted samples") {
  Rng rng(5);
  std::vector<double> xs;
  for (int i = 0; i < 4000; ++i) xs.push_back(rng.normal(0.0, 1.0));
  CHECK(ks_statistic_normal(xs, 0.0, 1.0) < 0.03);
  CHECK(ks_statistic_normal(xs, 1.0, 1.0) > 0.3);
  CHECK(ks_statistic_normal({0.0}, 0.0, 1.0) == doctest::Approx(0.5));
}

TEST_CASE("latent stats recover sample moments") {
  Rng rng(9);
  PriorConfig pc;
  std::vector<LatentCode> codes(2000);
  for (auto& c : codes) {
    for (int d = 0; d < 6; ++d) c.gauss[size_t(d)] = rng.normal(0.0, 1.0);
    c.intent = {0, 0, 0};
    c.intent[size_t(rng.uniform_int(3))] = 1.0;
    c.agg = rng.lognormal(pc.agg_mu, pc.agg_sigma);
  }
  LatentStats st = latent_stats(codes, pc);
  for (int d = 0; d < 6; ++d) {
    CHECK(std::abs(st.gauss_mean[size_t(d)]) < 0.1);
    CHECK(st.gauss_std[size_t(d)] == doctest::Approx(1.0).epsilon(0.08));
  }
  double isum = 0;
  for (int k = 0; k < 3; ++k) {
    CHECK(st.intent_mean[size_t(k)] == doctest::Approx(1.0 / 3).epsilon(0.15));
    isum += st.intent_mean[size_t(k)];
  }
  CHECK(isum == doctest::Approx(1.0));
  CHECK(st.agg_log_ks < 0.05);
}

// ---- headway fitting --------------------------------------------------------

TEST_CASE("fitting recovers log-normal headways and prefers the true family") {
  Rng rng(13);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(rng.lognormal(0.30, 0.55));
  HeadwayFit fit = fit_headway(xs);
  CHECK(std::abs(fit.lognormal.p1 - 0.30) <= 0.02);
  CHECK(std::abs(fit.lognormal.p2 - 0.55) <= 0.02);
  CHECK(fit.best == "log-normal");
  CHECK(fit.lognormal.kl < fit.normal.kl);
  CHECK(fit.lognormal.kl < fit.gamma.kl);
  CHECK(fit.lognormal.kl >= -1e-12);
  CHECK(fit.normal.kl >= -1e-12);
  CHECK(fit.gamma.kl >= -1e-12);
  CHECK(fit.lognormal.sse < fit.normal.sse);
}

TEST_CASE("normal data prefers the normal family") {
  Rng rng(17);
  std::vector<double> xs;
  while (xs.size() < 100000) {
    double v = rng.normal(5.0, 0.5);
    if (v > 0) xs.push_back(v);
  }
  HeadwayFit fit = fit_headway(xs);
  CHECK(fit.best == "normal");
  CHECK(std::abs(fit.normal.p1 - 5.0) <= 0.02);
  CHECK(std::abs(fit.normal.p2 - 0.5) <= 0.02);
}

TEST_CASE("gamma data prefers the gamma family") {
  Rng rng(19);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i)
    xs.push_back(-std::log(rng.uniform(1e-12, 1.0)) - std::log(rng.uniform(1e-12, 1.0)));
  HeadwayFit fit = fit_headway(xs);
  CHECK(fit.best == "gamma");
  CHECK(fit.gamma.p1 == doctest::Approx(2.0).epsilon(0.03));
  CHECK(fit.gamma.p2 == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("fitting rejects small or non-positive samples") {
  std::vector<double> xs(99, 1.0);
  CHECK_THROWS_AS(fit_headway(xs), DataError);
  xs.assign(100, 1.0);
  xs[50] = 0.0;
  CHECK_THROWS_AS(fit_headway(xs), DataError);
  xs[50] = -2.0;
  CHECK_THROWS_AS(fit_headway(xs), DataError);
}

// ---- dpgmm ------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> bundle(int count, double center, uint64_t seed, double spread = 0.05) {
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> v(20);
    for (auto& x : v) x = center + rng.normal(0.0, spread);
    out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("identical trajectories collapse to one cluster") {
  std::vector<std::vector<double>> xs(60, std::vector<double>(20, 1.5));
  DpgmmResult r = dpgmm_fit(xs);
  CHECK(r.clusters_at(0.05) == 1);
  CHECK(r.clusters_at(0.03) == 1);
  CHECK(r.clusters_at(0.01) == 1);
}

TEST_CASE("two separated bundles form two clusters") {
  auto xs = bundle(100, 0.0, 1);
  auto b2 = bundle(100, 8.0, 2);
  xs.insert(xs.end(), b2.begin(), b2.end());
  bool warn = true;
  int k = dpgmm_cluster(xs, 0.05, {}, &warn);
  CHECK(k == 2);
  CHECK_FALSE(warn);
}

TEST_CASE("cluster counts grow monotonically as the threshold drops") {
  auto xs = bundle(150, 0.0, 3);
  auto b2 = bundle(40, 8.0, 4);
  auto b3 = bundle(10, -8.0, 5);
  xs.insert(xs.end(), b2.begin(), b2.end());
  xs.insert(xs.end(), b3.begin(), b3.end());
  DpgmmResult r = dpgmm_fit(xs);
  int c5 = r.clusters_at(0.05), c3 = r.clusters_at(0.03), c1 = r.clusters_at(0.01);
  CHECK(c1 >= c3);
  CHECK(c3 >= c5);
  CHECK(c5 >= 2);  // the 150 and 40 bundles both clear five percent
  int manual = 0;
  for (double m : r.mass) manual += m >= 0.01;
  CHECK(manual == c1);
}

TEST_CASE("the elbo is nondecreasing in the iteration cap") {
  auto xs = bundle(100, 0.0, 6, 0.5);
  auto b2 = bundle(50, 4.0, 7, 0.5);
  xs.insert(xs.end(), b2.begin(), b2.end());
  double prev = -1e300;
  for (int cap : {1, 2, 3, 5, 8, 13, 21}) {
    DpgmmConfig cfg;
    cfg.max_iters = cap;
    DpgmmResult r = dpgmm_fit(xs, cfg);
    CHECK(r.elbo >= prev - 1e-6);
    prev = r.elbo;
  }
}

TEST_CASE("an iteration cap of one reports non-convergence") {
  auto xs = bundle(100, 0.0, 8, 1.0);
  auto b2 = bundle(100, 6.0, 9, 1.0);
  xs.insert(xs.end(), b2.begin(), b2.end());
  DpgmmConfig cfg;
  cfg.max_iters = 1;
  bool warn = false;
  dpgmm_cluster(xs, 0.05, cfg, &warn);
  CHECK(warn);
}

TEST_CASE("dpgmm rejects small or ragged inputs") {
  std::vector<std::vector<double>> xs(49, std::vector<double>(20, 0.0));
  CHECK_THROWS_AS(dpgmm_fit(xs), DataError);
  xs.assign(60, std::vector<double>(20, 0.0));
  xs[10].resize(19);
  CHECK_THROWS_AS(dpgmm_fit(xs), DataError);
}

TEST_CASE("cluster vectors subsample ten evenly spaced waypoints") {
  const int H = 30;
  std::vector<float> row(size_t(2 * H));
  for (int t = 0; t < H; ++t) {
    row[size_t(2 * t)] = float(t);
    row[size_t(2 * t + 1)] = float(100 + t);
  }
  auto v = cluster_vector(row.data(), H);
  REQUIRE(v.size() == 20);
  for (int i = 0; i < 10; ++i) {
    int w = (i + 1) * H / 10 - 1;
    CHECK(v[size_t(2 * i)] == doctest::Approx(double(w)));
    CHECK(v[size_t(2 * i + 1)] == doctest::Approx(double(100 + w)));
  }
  CHECK_THROWS_AS(cluster_vector(row.data(), 9), DataError);
}

// ---- modes ------------------------------------------------------------------

TEST_CASE("mode names round-trip and overrides edit the right slot") {
  for (int m = 0; m < kNumModes; ++m)
    CHECK(mode_from_name(mode_name(GenMode(m))) == GenMode(m));
  CHECK_THROWS_AS(mode_from_name("bogus"), UsageError);

  LatentCode base;
  base.intent = {0.2, 0.5, 0.3};
  base.agg = 1.5;
  for (int d = 0; d < 6; ++d) base.gauss[size_t(d)] = 0.1 * d;

  LatentCode ml = apply_mode(base, GenMode::most_likely, 1.0);
  CHECK(ml.agg == base.agg);
  CHECK(ml.intent == base.intent);

  LatentCode agg = apply_mode(base, GenMode::aggressive, 1.0);
  CHECK(agg.agg == doctest::Approx(0.5));
  CHECK(agg.intent == base.intent);
  LatentCode floor = apply_mode(base, GenMode::aggressive, 5.0);
  CHECK(floor.agg == doctest::Approx(0.05));

  LatentCode cons = apply_mode(base, GenMode::conservative, 1.0);
  CHECK(cons.agg == doctest::Approx(2.5));

  LatentCode left = apply_mode(base, GenMode::left, 1.0);
  CHECK(left.intent == std::array<double, 3>{0, 1, 0});
  CHECK(left.agg == base.agg);
  CHECK(left.gauss == base.gauss);
  CHECK(apply_mode(base, GenMode::right, 1.0).intent == std::array<double, 3>{0, 0, 1});
  CHECK(apply_mode(base, GenMode::forward, 1.0).intent == std::array<double, 3>{1, 0, 0});
}

// ---- sweep ------------------------------------------------------------------

TEST_CASE("a zero offset changes nothing") {
  auto data = make_data(24, 41);
  Checkpoint ck = small_ckpt(2);
  SweepReport rep = sweep_behavior(ck, data, {0.0});
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[0].offset == 0.0);
  CHECK(rep.rows[0].forced == "none");
  CHECK(rep.rows[0].risky == rep.risky_base);
  CHECK(rep.rows[0].pct_change == 0.0);
  CHECK(rep.rows[1].offset == 0.0);
  CHECK(rep.rows[1].risky == rep.risky_base);
  CHECK(rep.rows[1].pct_change == 0.0);
  CHECK(rep.n_scenarios == 24);
}

TEST_CASE("sweep reports one row per offset after the baseline") {
  auto data = make_data(16, 43);
  Checkpoint ck = small_ckpt(3);
  SweepReport rep = sweep_behavior(ck, data, default_sweep_offsets(), "left", 4.0);
  REQUIRE(rep.rows.size() == default_sweep_offsets().size() + 1);
  CHECK(rep.rows[0].forced == "none");
  for (size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].offset == default_sweep_offsets()[i - 1]);
    CHECK(rep.rows[i].forced == "left");
    if (rep.rows[i].pct_valid)
      CHECK(rep.rows[i].pct_change ==
            doctest::Approx(100.0 * (rep.rows[i].risky - rep.risky_base) / rep.risky_base));
    else
      CHECK(rep.risky_base == 0);
  }
}

TEST_CASE("tighter distance thresholds flag no more scenarios") {
  auto data = make_data(32, 47);
  Checkpoint ck = small_ckpt(4);
  SweepReport wide = sweep_behavior(ck, data, default_sweep_offsets(), "none", 6.0);
  SweepReport tight = sweep_behavior(ck, data, default_sweep_offsets(), "none", 1.5);
  CHECK(tight.risky_base <= wide.risky_base);
  for (size_t i = 0; i < wide.rows.size(); ++i)
    CHECK(tight.rows[i].risky <= wide.rows[i].risky);
  CHECK(wide.risky_base + wide.rows.back().risky > 0);  // the loose threshold sees contact
}

TEST_CASE("sweep validates horizon, ego presence, and override names") {
  auto data = make_data(4, 51);
  ModelConfig mc = small_model();
  mc.horizon = 20;
  TrainConfig tc;
  tc.seed = 1;
  Checkpoint short_ck = train_init(mc, tc);
  CHECK_THROWS_AS(sweep_behavior(short_ck, data, {0.5}), DataError);

  Checkpoint ck = small_ckpt(5);
  CHECK_THROWS_AS(sweep_behavior(ck, data, {0.5}, "sideways"), UsageError);

  auto broken = data;
  for (auto& a : broken[0].agents) a.ego = false;
  CHECK_THROWS_AS(sweep_behavior(ck, broken, {0.5}), DataError);
}

// ---- report and full protocol -------------------------------------------------

TEST_CASE("reports serialize deterministically") {
  EvalReport rep;
  rep.config_hash = "00ff00ff00ff00ff";
  rep.add("ade", 0.5);
  rep.add("fde", 1.25);
  CHECK(rep.get("ade") == 0.5);
  CHECK(rep.has("fde"));
  CHECK_FALSE(rep.has("nope"));
  CHECK_THROWS_AS(rep.get("nope"), DataError);
  CHECK(rep.to_csv() ==
        "name,value,config_hash\n"
        "ade,0.5,00ff00ff00ff00ff\n"
        "fde,1.25,00ff00ff00ff00ff\n");
  std::string j = rep.to_json();
  CHECK(j.find("\"config_hash\": \"00ff00ff00ff00ff\"") != std::string::npos);
  CHECK(j.find("\"ade\": 0.5") != std::string::npos);
}

TEST_CASE("sweep rows land in the report under offset-tagged names") {
  SweepReport sw;
  sw.n_scenarios = 10;
  sw.threshold = 0.5;
  sw.risky_base = 4;
  sw.rows.push_back({0.0, "none", 4, true, 0.0});
  sw.rows.push_back({0.5, "none", 6, true, 50.0});
  sw.rows.push_back({-1.0, "none", 2, true, -50.0});
  EvalReport rep;
  sweep_into(rep, sw);
  CHECK(rep.get("risky_base") == 4.0);
  CHECK(rep.get("risky_+0.5") == 6.0);
  CHECK(rep.get("pct_+0.5") == 50.0);
  CHECK(rep.get("risky_-1") == 2.0);

  SweepReport forced = sw;
  forced.rows[1].forced = "left";
  forced.rows[2].forced = "left";
  EvalReport rep2;
  sweep_into(rep2, forced);
  CHECK(rep2.get("risky_left_+0.5") == 6.0);
  CHECK(rep2.has("pct_left_-1"));
}

TEST_CASE("the full protocol runs on an untrained model") {
  auto data = make_data(48, 61, 0.4);
  Checkpoint ck = small_ckpt(6);
  EvalReport rep = evaluate(ck, data, 1.0, 0);

  CHECK(rep.get("n_scenarios") == 48.0);
  CHECK(rep.get("n_agents") == 4 * 48.0);
  for (const auto& [name, v] : rep.metrics) {
    INFO(name);
    CHECK(std::isfinite(v));
  }
  CHECK(rep.get("ade") > 0.0);
  CHECK(rep.get("cv_ade") > 0.0);
  CHECK(rep.get("min_ade_k6") <= rep.get("ade") + 1e-9);
  CHECK(rep.get("min_fde_k6") <= rep.get("fde") + 1e-9);
  CHECK(rep.get("min_fde_within_fde") == 1.0);
  CHECK(rep.get("intent_rows") == 4 * 48.0);  // hidden intents exist for every agent
  CHECK(rep.get("agg_rows") > 0.0);
  CHECK(rep.get("agg_mean_baseline_mse") > 0.0);
  CHECK(rep.has("clusters_ml_0.05"));
  CHECK(rep.has("clusters_modes_0.01"));
  CHECK(rep.get("clusters_modes_0.01") >= 1.0);
  double im = rep.get("intent_mean_forward") + rep.get("intent_mean_left") +
              rep.get("intent_mean_right");
  CHECK(im == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.config_hash.size() == 16);

  EvalReport again = evaluate(ck, data, 1.0, 0);
  CHECK(again.to_json() == rep.to_json());
  CHECK(again.to_csv() == rep.to_csv());
}
