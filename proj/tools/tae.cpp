// Command-line front end: data synthesis, training, generation, prediction,
// evaluation, and safety sweeps, each leaving a manifest next to its outputs.
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tae/evaluation.hpp"
#include "tae/manifest.hpp"
#include "tae/svg.hpp"
#include "tae/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace tae;

namespace {

constexpr int kChunk = 32;

std::string fmt_num(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%g", v);
  return b;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  check_data(f.good(), "cannot write '" + path + "'");
  f.write(text.data(), std::streamsize(text.size()));
  check_data(f.good(), "write failed for '" + path + "'");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": '" + s + "' is not a number");
  }
}

std::array<double, 3> parse_mix(const std::string& s) {
  auto parts = split_commas(s);
  if (parts.size() != 3) throw UsageError("--intent-mix expects three comma-separated weights");
  std::array<double, 3> m{};
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    m[size_t(i)] = parse_double(parts[size_t(i)], "--intent-mix");
    if (m[size_t(i)] < 0) throw UsageError("--intent-mix weights must be non-negative");
    sum += m[size_t(i)];
  }
  if (sum <= 0) throw UsageError("--intent-mix weights must not all be zero");
  return m;
}

void force_intent(LatentCode& z, const std::string& cls) {
  if (cls == "none") return;
  if (cls == "forward") z.intent = {1, 0, 0};
  else if (cls == "left") z.intent = {0, 1, 0};
  else if (cls == "right") z.intent = {0, 0, 1};
  else throw UsageError("unknown intent class '" + cls + "'");
}

ordered_json traj_json(const std::vector<Pt>& pts) {
  ordered_json arr = ordered_json::array();
  for (const Pt& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataOpts {
  int n = 10;
  int agents = 5;
  std::string mix;
  double label_frac = 0.3;
  int horizon = kDefaultHorizon;
  uint64_t seed = 0;
  std::string out;
};

int cmd_gen_data(const GenDataOpts& o, const std::vector<std::string>& argv) {
  if (o.n < 1) throw UsageError("--n must be at least 1");
  SynthConfig sc;
  sc.n = o.n;
  sc.agents = o.agents;
  if (!o.mix.empty()) sc.intent_mix = parse_mix(o.mix);
  sc.label_frac = o.label_frac;
  sc.horizon = o.horizon;
  sc.seed = o.seed;
  auto scens = synth_generate(sc);

  fs::create_directories(o.out);
  save_scenarios(o.out + "/scenarios.json", scens);

  RunManifest m;
  m.command = "gen-data";
  m.argv = argv;
  m.seed = o.seed;
  m.config = {{"n", std::to_string(sc.n)},
              {"agents", std::to_string(sc.agents)},
              {"intent-mix", fmt_num(sc.intent_mix[0]) + "," + fmt_num(sc.intent_mix[1]) + "," +
                                 fmt_num(sc.intent_mix[2])},
              {"label-frac", fmt_num(sc.label_frac)},
              {"horizon", std::to_string(sc.horizon)},
              {"seed", std::to_string(sc.seed)},
              {"out", o.out}};
  m.output_paths = {"scenarios.json"};
  write_manifest(o.out, m);
  std::printf("wrote %d scenarios to %s\n", int(scens.size()), o.out.c_str());
  return 0;
}

// ---- train --------------------------------------------------------------------

struct TrainOpts {
  std::string data, out, resume;
  TrainConfig tc;
  bool set_epochs = false, set_div = false, set_hyper = false;
};

int cmd_train(const TrainOpts& o, const std::vector<std::string>& argv) {
  auto data = load_scenarios(o.data);
  Checkpoint ck;
  if (o.resume.empty()) {
    ck = train_init(ModelConfig{}, o.tc);
  } else {
    // A resumed run continues the checkpoint's stored schedule bit-exactly;
    // only the schedule lengths may be extended.
    if (o.set_hyper)
      throw UsageError(
          "--resume keeps the checkpoint's hyper-parameters; only --epochs and "
          "--div-epochs may be changed");
    ck = load_checkpoint(o.resume);
    if (o.set_epochs) ck.train.epochs = o.tc.epochs;
    if (o.set_div) ck.train.div_epochs = o.tc.div_epochs;
  }

  std::vector<LossRow> log;
  train_main(ck, data, &log);
  train_diversity(ck, data, &log);

  fs::create_directories(o.out);
  save_checkpoint(o.out + "/checkpoint.tae", ck);
  write_loss_csv(o.out + "/losses.csv", log);

  RunManifest m;
  m.command = "train";
  m.argv = argv;
  m.seed = ck.train.seed;
  m.config = {{"data", o.data},
              {"epochs", std::to_string(ck.train.epochs)},
              {"batch", std::to_string(ck.train.batch)},
              {"lr-pred", fmt_num(ck.train.lr_pred)},
              {"lr-adv", fmt_num(ck.train.lr_adv)},
              {"lr-disc", fmt_num(ck.train.lr_disc)},
              {"lr-semi", fmt_num(ck.train.lr_semi)},
              {"div-epochs", std::to_string(ck.train.div_epochs)},
              {"lambda-d", fmt_num(ck.train.lambda_d)},
              {"seed", std::to_string(ck.train.seed)},
              {"resume", o.resume.empty() ? "-" : o.resume},
              {"out", o.out}};
  m.input_paths = {o.data};
  if (!o.resume.empty()) m.input_paths.push_back(o.resume);
  m.output_paths = {"checkpoint.tae", "losses.csv"};
  write_manifest(o.out, m);
  std::printf("trained %d+%d epochs on %d scenarios -> %s\n", ck.epoch, ck.div_epoch,
              int(data.size()), o.out.c_str());
  return 0;
}

// ---- generate -----------------------------------------------------------------

struct GenerateOpts {
  std::string ckpt, data, out;
  std::string modes = "most-likely,aggressive,conservative,left,right,forward";
  double agg_offset = 1.0;
  std::string intent = "none";
  bool svg = false;
};

int cmd_generate(const GenerateOpts& o, const std::vector<std::string>& argv) {
  Checkpoint ck = load_checkpoint(o.ckpt);
  auto data = load_scenarios(o.data);
  check_data(!data.empty(), "generate: empty scenario set");

  std::vector<GenMode> modes;
  for (const std::string& name : split_commas(o.modes)) modes.push_back(mode_from_name(name));
  if (modes.empty()) throw UsageError("--modes must name at least one mode");
  LatentCode probe;
  force_intent(probe, o.intent);  // validate the class name early

  const ModelConfig& mc = ck.model;
  const int H = mc.horizon;
  const int M = int(modes.size());

  fs::create_directories(o.out);
  ordered_json scen_arr = ordered_json::array();
  std::vector<std::string> outputs = {"generated.json"};

  for (int at = 0; at < int(data.size()); at += kChunk) {
    std::vector<const Scenario*> ptrs;
    for (int i = at; i < std::min<int>(int(data.size()), at + kChunk); ++i)
      ptrs.push_back(&data[size_t(i)]);
    FeatBatch fb = feat_batch_build(ptrs);
    std::vector<LatentCode> codes = tae_encode(fb, ck.params, mc);

    std::vector<LatentCode> gen_codes;
    std::vector<int> gen_row;  // batch row each generated code belongs to
    for (int r = 0; r < fb.n_agents; ++r) {
      const Agent& a = ptrs[size_t(fb.scen_of[size_t(r)])]->agents[size_t(fb.agent_pos[size_t(r)])];
      if (a.ego) continue;
      for (GenMode mode : modes) {
        LatentCode z = apply_mode(codes[size_t(r)], mode, o.agg_offset);
        force_intent(z, o.intent);
        gen_codes.push_back(z);
        gen_row.push_back(r);
      }
    }
    check_data(!gen_codes.empty(), "generate: no non-ego agents in batch");
    Array trajs = tae_decode(gen_codes, ck.params, mc);

    std::vector<ordered_json> agents_of(ptrs.size());
    for (auto& a : agents_of) a = ordered_json::array();
    std::vector<std::vector<SvgAgentTrajs>> svg_of(ptrs.size());
    for (size_t g = 0; g < gen_codes.size(); g += size_t(M)) {
      int r = gen_row[g];
      int s = fb.scen_of[size_t(r)];
      const Agent& a = ptrs[size_t(s)]->agents[size_t(fb.agent_pos[size_t(r)])];
      ordered_json futures = ordered_json::object();
      SvgAgentTrajs st;
      st.agent_id = a.id;
      for (int k = 0; k < M; ++k) {
        auto world = row_to_world(fb.frame[size_t(r)], trajs, int(g) + k);
        futures[mode_name(modes[size_t(k)])] = traj_json(world);
        st.generated.push_back(std::move(world));
      }
      agents_of[size_t(s)].push_back({{"id", a.id}, {"futures", futures}});
      svg_of[size_t(s)].push_back(std::move(st));
    }
    for (size_t s = 0; s < ptrs.size(); ++s) {
      int index = at + int(s);
      scen_arr.push_back(
          {{"index", index}, {"id", ptrs[s]->id}, {"agents", agents_of[s]}});
      if (o.svg) {
        char name[32];
        std::snprintf(name, sizeof name, "scenario_%04d.svg", index);
        write_text(o.out + "/" + name, scenario_svg(*ptrs[s], svg_of[s]));
        outputs.push_back(name);
      }
    }
  }

  ordered_json j;
  j["agg_offset"] = o.agg_offset;
  j["intent"] = o.intent;
  j["modes"] = split_commas(o.modes);
  j["horizon"] = H;
  j["scenarios"] = scen_arr;
  write_text(o.out + "/generated.json", j.dump(2) + "\n");

  RunManifest m;
  m.command = "generate";
  m.argv = argv;
  m.seed = ck.train.seed;
  m.config = {{"ckpt", o.ckpt},          {"data", o.data},
              {"modes", o.modes},        {"agg-offset", fmt_num(o.agg_offset)},
              {"intent", o.intent},      {"svg", o.svg ? "true" : "false"},
              {"out", o.out}};
  m.input_paths = {o.ckpt, o.data};
  m.output_paths = outputs;
  write_manifest(o.out, m);
  std::printf("generated %d mode(s) for %d scenarios -> %s\n", M, int(data.size()),
              o.out.c_str());
  return 0;
}

// ---- predict ------------------------------------------------------------------

struct PredictOpts {
  std::string ckpt, data, out;
};

int cmd_predict(const PredictOpts& o, const std::vector<std::string>& argv) {
  Checkpoint ck = load_checkpoint(o.ckpt);
  auto data = load_scenarios(o.data);
  check_data(!data.empty(), "predict: empty scenario set");
  const ModelConfig& mc = ck.model;
  const int H = mc.horizon, D = mc.feat.width, K = mc.prior.K;
  for (const Scenario& s : data)
    check_data(s.horizon() == H, "predict: horizon mismatch between checkpoint and data");

  ordered_json scen_arr = ordered_json::array();
  for (int at = 0; at < int(data.size()); at += kChunk) {
    std::vector<const Scenario*> ptrs;
    for (int i = at; i < std::min<int>(int(data.size()), at + kChunk); ++i)
      ptrs.push_back(&data[size_t(i)]);
    FeatBatch fb = feat_batch_build(ptrs);
    const int A = fb.n_agents;
    Array feats = feat_values(fb, ck.params, mc.feat);
    std::vector<LatentCode> codes = tae_encode(fb, ck.params, mc);

    std::vector<LatentCode> cands;
    cands.reserve(size_t(A) * size_t(K));
    for (int r = 0; r < A; ++r) {
      auto dc = diverse_codes(codes[size_t(r)], mc.prior);
      cands.insert(cands.end(), dc.begin(), dc.end());
    }
    Array trajs = tae_decode(cands, ck.params, mc);

    Array cin = Array::zeros({A * K, D + 2 * H});
    for (int r = 0; r < A; ++r)
      for (int k = 0; k < K; ++k) {
        float* row = &cin.v[size_t(r * K + k) * size_t(D + 2 * H)];
        std::copy_n(&feats.v[size_t(r) * size_t(D)], size_t(D), row);
        std::copy_n(&trajs.v[size_t(r * K + k) * size_t(2 * H)], size_t(2 * H), row + D);
      }
    Tape t;
    TapeParams tp(t, ck.params);
    int sc = classifier_build(t, tp, t.constant(cin, "cin"), A, K, mc);
    Exec<float> ex(t);
    ex.forward();
    const std::vector<float>& scores = ex.value(sc);

    std::vector<ordered_json> agents_of(ptrs.size());
    for (auto& a : agents_of) a = ordered_json::array();
    for (int r = 0; r < A; ++r) {
      const Agent& a = ptrs[size_t(fb.scen_of[size_t(r)])]->agents[size_t(fb.agent_pos[size_t(r)])];
      ordered_json cand_arr = ordered_json::array();
      ordered_json score_arr = ordered_json::array();
      int best = 0;
      for (int k = 0; k < K; ++k) {
        cand_arr.push_back(traj_json(row_to_world(fb.frame[size_t(r)], trajs, r * K + k)));
        float v = scores[size_t(r * K + k)];
        score_arr.push_back(v);
        if (v > scores[size_t(r * K + best)]) best = k;
      }
      agents_of[size_t(fb.scen_of[size_t(r)])].push_back({{"id", a.id},
                                                          {"ego", a.ego},
                                                          {"candidates", cand_arr},
                                                          {"scores", score_arr},
                                                          {"best", best}});
    }
    for (size_t s = 0; s < ptrs.size(); ++s)
      scen_arr.push_back(
          {{"index", at + int(s)}, {"id", ptrs[s]->id}, {"agents", agents_of[s]}});
  }

  fs::create_directories(o.out);
  ordered_json j;
  j["k"] = K;
  j["horizon"] = H;
  j["scenarios"] = scen_arr;
  write_text(o.out + "/predictions.json", j.dump(2) + "\n");

  RunManifest m;
  m.command = "predict";
  m.argv = argv;
  m.seed = ck.train.seed;
  m.config = {{"ckpt", o.ckpt}, {"data", o.data}, {"out", o.out}};
  m.input_paths = {o.ckpt, o.data};
  m.output_paths = {"predictions.json"};
  write_manifest(o.out, m);
  std::printf("predicted %d candidates per agent for %d scenarios -> %s\n", K, int(data.size()),
              o.out.c_str());
  return 0;
}

// ---- eval ---------------------------------------------------------------------

struct EvalOpts {
  std::string ckpt, data, out;
  double agg_offset = 1.0;
  uint64_t seed = 0;
};

int cmd_eval(const EvalOpts& o, const std::vector<std::string>& argv) {
  Checkpoint ck = load_checkpoint(o.ckpt);
  auto data = load_scenarios(o.data);
  EvalReport rep = evaluate(ck, data, o.agg_offset, o.seed);

  fs::create_directories(o.out);
  write_text(o.out + "/report.json", rep.to_json());
  write_text(o.out + "/report.csv", rep.to_csv());

  RunManifest m;
  m.command = "eval";
  m.argv = argv;
  m.seed = o.seed;
  m.config = {{"ckpt", o.ckpt},
              {"data", o.data},
              {"agg-offset", fmt_num(o.agg_offset)},
              {"seed", std::to_string(o.seed)},
              {"out", o.out}};
  m.input_paths = {o.ckpt, o.data};
  m.output_paths = {"report.json", "report.csv"};
  write_manifest(o.out, m);
  std::printf("evaluated %d scenarios -> %s\n", int(data.size()), o.out.c_str());
  return 0;
}

// ---- sweep --------------------------------------------------------------------

struct SweepOpts {
  std::string ckpt, data, out;
  std::string offsets;
  std::string intent = "none";
  double threshold = 0.5;
};

int cmd_sweep(const SweepOpts& o, const std::vector<std::string>& argv) {
  Checkpoint ck = load_checkpoint(o.ckpt);
  auto data = load_scenarios(o.data);

  std::vector<double> offsets;
  if (o.offsets.empty()) {
    offsets = default_sweep_offsets();
  } else {
    for (const std::string& s : split_commas(o.offsets))
      offsets.push_back(parse_double(s, "--offsets"));
    if (offsets.empty()) throw UsageError("--offsets must name at least one offset");
  }

  SweepReport rep = sweep_behavior(ck, data, offsets, o.intent, o.threshold);

  fs::create_directories(o.out);
  ordered_json j;
  j["n_scenarios"] = rep.n_scenarios;
  j["threshold"] = rep.threshold;
  j["risky_base"] = rep.risky_base;
  ordered_json rows = ordered_json::array();
  for (const SweepRow& r : rep.rows)
    rows.push_back({{"offset", r.offset},
                    {"forced", r.forced},
                    {"risky", r.risky},
                    {"pct_valid", r.pct_valid},
                    {"pct_change", r.pct_change}});
  j["rows"] = rows;
  write_text(o.out + "/sweep.json", j.dump(2) + "\n");

  std::string csv = "offset,forced,risky,pct_valid,pct_change\n";
  char buf[96];
  for (const SweepRow& r : rep.rows) {
    std::snprintf(buf, sizeof buf, "%g,%s,%d,%d,%.9g\n", r.offset, r.forced.c_str(), r.risky,
                  int(r.pct_valid), r.pct_change);
    csv += buf;
  }
  write_text(o.out + "/sweep.csv", csv);

  RunManifest m;
  m.command = "sweep";
  m.argv = argv;
  m.seed = ck.train.seed;
  std::string offs;
  for (size_t i = 0; i < offsets.size(); ++i) offs += (i ? "," : "") + fmt_num(offsets[i]);
  m.config = {{"ckpt", o.ckpt},   {"data", o.data},
              {"offsets", offs},  {"intent", o.intent},
              {"threshold", fmt_num(o.threshold)}, {"out", o.out}};
  m.input_paths = {o.ckpt, o.data};
  m.output_paths = {"sweep.json", "sweep.csv"};
  write_manifest(o.out, m);
  std::printf("swept %d offset(s) over %d scenarios -> %s\n", int(offsets.size()),
              int(data.size()), o.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavior-aware trajectory autoencoder"};
  app.require_subcommand(1);
  std::vector<std::string> raw(argv, argv + argc);

  GenDataOpts gd;
  CLI::App* c_gd = app.add_subcommand("gen-data", "Synthesize ground-truth scenarios");
  c_gd->add_option("--n", gd.n, "Scenario count");
  c_gd->add_option("--agents", gd.agents, "Agents per scenario (2..8)");
  c_gd->add_option("--intent-mix", gd.mix, "forward,left,right weights");
  c_gd->add_option("--label-frac", gd.label_frac, "Fraction of agents with revealed labels");
  c_gd->add_option("--horizon", gd.horizon, "Future steps per agent");
  c_gd->add_option("--seed", gd.seed, "RNG seed");
  c_gd->add_option("--out", gd.out, "Output directory")->required();

  TrainOpts tr;
  CLI::App* c_tr = app.add_subcommand("train", "Train the autoencoder");
  c_tr->add_option("--data", tr.data, "Scenario JSON")->required();
  c_tr->add_option("--epochs", tr.tc.epochs, "Main-stage epochs");
  c_tr->add_option("--batch", tr.tc.batch, "Scenarios per batch");
  c_tr->add_option("--lr-pred", tr.tc.lr_pred, "Prediction learning rate");
  c_tr->add_option("--lr-adv", tr.tc.lr_adv, "Adversarial learning rate");
  c_tr->add_option("--lr-disc", tr.tc.lr_disc, "Discriminator learning rate");
  c_tr->add_option("--lr-semi", tr.tc.lr_semi, "Semi-supervised learning rate");
  c_tr->add_option("--div-epochs", tr.tc.div_epochs, "Diversity-stage epochs");
  c_tr->add_option("--lambda-d", tr.tc.lambda_d, "Diversity loss weight");
  c_tr->add_option("--seed", tr.tc.seed, "RNG seed");
  c_tr->add_option("--resume", tr.resume, "Checkpoint to continue (keeps its stored schedule)");
  c_tr->add_option("--out", tr.out, "Output directory")->required();

  GenerateOpts ge;
  CLI::App* c_ge = app.add_subcommand("generate", "Decode behavior-controlled futures");
  c_ge->add_option("--ckpt", ge.ckpt, "Checkpoint file")->required();
  c_ge->add_option("--data", ge.data, "Scenario JSON")->required();
  c_ge->add_option("--modes", ge.modes, "Comma-separated mode names");
  c_ge->add_option("--agg-offset", ge.agg_offset, "Headway shift for aggressive/conservative");
  c_ge->add_option("--intent", ge.intent, "Forced intent class (none|forward|left|right)");
  c_ge->add_flag("--svg", ge.svg, "Write one SVG per scenario");
  c_ge->add_option("--out", ge.out, "Output directory")->required();

  PredictOpts pr;
  CLI::App* c_pr = app.add_subcommand("predict", "Rank diverse candidates per agent");
  c_pr->add_option("--ckpt", pr.ckpt, "Checkpoint file")->required();
  c_pr->add_option("--data", pr.data, "Scenario JSON")->required();
  c_pr->add_option("--out", pr.out, "Output directory")->required();

  EvalOpts ev;
  CLI::App* c_ev = app.add_subcommand("eval", "Run the evaluation protocol");
  c_ev->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  c_ev->add_option("--data", ev.data, "Scenario JSON")->required();
  c_ev->add_option("--agg-offset", ev.agg_offset, "Mode headway shift");
  c_ev->add_option("--seed", ev.seed, "Clustering seed");
  c_ev->add_option("--out", ev.out, "Output directory")->required();

  SweepOpts sw;
  CLI::App* c_sw = app.add_subcommand("sweep", "Safety-critical aggressiveness sweep");
  c_sw->add_option("--ckpt", sw.ckpt, "Checkpoint file")->required();
  c_sw->add_option("--data", sw.data, "Scenario JSON")->required();
  c_sw->add_option("--offsets", sw.offsets, "Comma-separated headway offsets");
  c_sw->add_option("--intent", sw.intent, "Forced intent class (none|forward|left|right)");
  c_sw->add_option("--threshold", sw.threshold, "Risky distance threshold (m)");
  c_sw->add_option("--out", sw.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
    tr.set_epochs = c_tr->count("--epochs") > 0;
    tr.set_div = c_tr->count("--div-epochs") > 0;
    for (const char* f : {"--batch", "--lr-pred", "--lr-adv", "--lr-disc", "--lr-semi",
                          "--lambda-d", "--seed"})
      tr.set_hyper = tr.set_hyper || c_tr->count(f) > 0;
    if (c_gd->parsed()) return cmd_gen_data(gd, raw);
    if (c_tr->parsed()) return cmd_train(tr, raw);
    if (c_ge->parsed()) return cmd_generate(ge, raw);
    if (c_pr->parsed()) return cmd_predict(pr, raw);
    if (c_ev->parsed()) return cmd_eval(ev, raw);
    if (c_sw->parsed()) return cmd_sweep(sw, raw);
    return 2;
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
