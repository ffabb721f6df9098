// Drives the installed binary end to end. The harness points TAE_BIN at the
// built tool; a scratch directory under /tmp isolates each run.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin_path() {
  const char* env = std::getenv("TAE_BIN");
  REQUIRE_MESSAGE(env != nullptr, "set TAE_BIN to the tae binary");
  return env;
}

const std::string& scratch() {
  static const std::string dir = [] {
    std::string d = "/tmp/tae_cli_scratch";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  std::string cmd = "SOURCE_DATE_EPOCH=1755302400 " + bin_path() + " " + args +
                    " >/dev/null 2>/dev/null";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE_MESSAGE(f.good(), path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int line_count(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

// Shared fixtures: one small dataset and one briefly trained checkpoint.
const std::string& data_path() {
  static const std::string p = [] {
    REQUIRE(run("gen-data --n 16 --agents 4 --label-frac 0.5 --seed 7 --out " + scratch() +
                "/data") == 0);
    return scratch() + "/data/scenarios.json";
  }();
  return p;
}

const std::string& ckpt_path() {
  static const std::string p = [] {
    REQUIRE(run("train --data " + data_path() +
                " --epochs 1 --div-epochs 1 --batch 8 --seed 3 --out " + scratch() + "/train") ==
            0);
    return scratch() + "/train/checkpoint.tae";
  }();
  return p;
}

}  // namespace

TEST_CASE("gen-data writes scenarios plus one manifest, reproducibly") {
  data_path();
  CHECK(fs::exists(scratch() + "/data/scenarios.json"));
  CHECK(fs::exists(scratch() + "/data/manifest.json"));
  json scens = json::parse(slurp(data_path()));
  CHECK(scens.at("scenarios").size() == 16);

  REQUIRE(run("gen-data --n 16 --agents 4 --label-frac 0.5 --seed 7 --out " + scratch() +
              "/data_again") == 0);
  CHECK(slurp(scratch() + "/data_again/scenarios.json") == slurp(data_path()));

  json man = json::parse(slurp(scratch() + "/data/manifest.json"));
  CHECK(man.at("command") == "gen-data");
  CHECK(man.at("created") == "2025-08-16T00:00:00Z");
  CHECK(man.at("outputs") == json::array({"scenarios.json"}));
}

TEST_CASE("invalid flags exit with the usage code") {
  CHECK(run("gen-data --agents 1 --out " + scratch() + "/bad") == 2);
  CHECK(run("gen-data --n 0 --out " + scratch() + "/bad") == 2);
  CHECK(run("gen-data --intent-mix 1,2 --out " + scratch() + "/bad") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("train --out " + scratch() + "/bad") == 2);  // missing required --data
  CHECK(run("--help") == 0);
}

TEST_CASE("missing or corrupt files exit with the data code") {
  CHECK(run("train --data " + scratch() + "/nope.json --out " + scratch() + "/bad") == 3);
  std::ofstream(scratch() + "/garbage.tae") << "not a checkpoint";
  CHECK(run("eval --ckpt " + scratch() + "/garbage.tae --data " + data_path() + " --out " +
            scratch() + "/bad") == 3);
}

TEST_CASE("train writes a checkpoint, a loss csv, and a manifest") {
  ckpt_path();
  CHECK(fs::exists(scratch() + "/train/checkpoint.tae"));
  CHECK(fs::exists(scratch() + "/train/manifest.json"));
  std::string csv = slurp(scratch() + "/train/losses.csv");
  CHECK(csv.rfind("epoch,batch,phase,loss\n", 0) == 0);
  // 1 main epoch x 2 batches x 4 phases + 1 diversity epoch x 2 batches x 2 rows.
  CHECK(line_count(csv) == 1 + 8 + 4);
}

TEST_CASE("training never mutates its inputs") {
  std::string before = slurp(data_path());
  ckpt_path();
  CHECK(slurp(data_path()) == before);
}

TEST_CASE("resume continues bit-identically through the binary") {
  std::string base = " --data " + data_path() + " --batch 8 --seed 11 ";
  REQUIRE(run("train" + base + "--epochs 3 --div-epochs 1 --out " + scratch() + "/full") == 0);
  REQUIRE(run("train" + base + "--epochs 2 --div-epochs 0 --out " + scratch() + "/leg1") == 0);
  REQUIRE(run("train --data " + data_path() + " --resume " + scratch() +
              "/leg1/checkpoint.tae --epochs 3 --div-epochs 1 --out " + scratch() + "/leg2") == 0);
  CHECK(slurp(scratch() + "/full/checkpoint.tae") == slurp(scratch() + "/leg2/checkpoint.tae"));

  CHECK(run("train --data " + data_path() + " --resume " + scratch() +
            "/leg1/checkpoint.tae --lr-pred 0.01 --out " + scratch() + "/bad") == 2);
}

TEST_CASE("generate emits six futures per non-ego agent") {
  REQUIRE(run("generate --ckpt " + ckpt_path() + " --data " + data_path() + " --svg --out " +
              scratch() + "/gen") == 0);
  json j = json::parse(slurp(scratch() + "/gen/generated.json"));
  json data = json::parse(slurp(data_path()));
  REQUIRE(j.at("scenarios").size() == 16);
  for (const auto& s : j.at("scenarios")) {
    CHECK(s.at("agents").size() == 3);  // 4 agents minus the ego
    for (const auto& a : s.at("agents")) {
      CHECK(a.at("futures").size() == 6);
      for (const auto& [name, fut] : a.at("futures").items()) CHECK(fut.size() == 30);
    }
  }
  for (int i = 0; i < 16; ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s/gen/scenario_%04d.svg", scratch().c_str(), i);
    std::string svg = slurp(name);
    CHECK(svg.find("class=\"ref\"") != std::string::npos);
    CHECK(svg.find("class=\"gen\"") != std::string::npos);
  }
}

TEST_CASE("zero offset and no intent reproduce most-likely output exactly") {
  REQUIRE(run("generate --ckpt " + ckpt_path() + " --data " + data_path() +
              " --agg-offset 0 --intent none --out " + scratch() + "/gen0") == 0);
  json j = json::parse(slurp(scratch() + "/gen0/generated.json"));
  bool intent_mode_differs = false;
  for (const auto& s : j.at("scenarios"))
    for (const auto& a : s.at("agents")) {
      const auto& f = a.at("futures");
      CHECK(f.at("aggressive") == f.at("most-likely"));
      CHECK(f.at("conservative") == f.at("most-likely"));
      intent_mode_differs = intent_mode_differs || f.at("left") != f.at("most-likely");
    }
  CHECK(intent_mode_differs);  // the forced-intent modes still vary
  CHECK(run("generate --ckpt " + ckpt_path() + " --data " + data_path() +
            " --modes sideways --out " + scratch() + "/bad") == 2);
}

TEST_CASE("predict emits six scored candidates per agent") {
  REQUIRE(run("predict --ckpt " + ckpt_path() + " --data " + data_path() + " --out " + scratch() +
              "/pred") == 0);
  json j = json::parse(slurp(scratch() + "/pred/predictions.json"));
  CHECK(j.at("k") == 6);
  for (const auto& s : j.at("scenarios"))
    for (const auto& a : s.at("agents")) {
      REQUIRE(a.at("candidates").size() == 6);
      REQUIRE(a.at("scores").size() == 6);
      double sum = 0, best = -1;
      int arg = -1;
      for (int k = 0; k < 6; ++k) {
        double v = a.at("scores")[size_t(k)].get<double>();
        CHECK(v >= 0.0);
        sum += v;
        if (v > best) {
          best = v;
          arg = k;
        }
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
      CHECK(a.at("best") == arg);
    }
}

TEST_CASE("eval writes a deterministic report pair") {
  REQUIRE(run("eval --ckpt " + ckpt_path() + " --data " + data_path() + " --out " + scratch() +
              "/eval") == 0);
  REQUIRE(run("eval --ckpt " + ckpt_path() + " --data " + data_path() + " --out " + scratch() +
              "/eval2") == 0);
  CHECK(slurp(scratch() + "/eval/report.json") == slurp(scratch() + "/eval2/report.json"));
  CHECK(slurp(scratch() + "/eval/report.csv") == slurp(scratch() + "/eval2/report.csv"));
  json rep = json::parse(slurp(scratch() + "/eval/report.json"));
  CHECK(rep.at("metrics").at("n_scenarios") == 16);
  CHECK(rep.at("metrics").at("min_fde_within_fde") == 1.0);
  CHECK(fs::exists(scratch() + "/eval/manifest.json"));
}

TEST_CASE("sweep reports one row per offset plus the baseline") {
  REQUIRE(run("sweep --ckpt " + ckpt_path() + " --data " + data_path() + " --threshold 4 --out " +
              scratch() + "/sweep") == 0);
  std::string csv = slurp(scratch() + "/sweep/sweep.csv");
  CHECK(csv.rfind("offset,forced,risky,pct_valid,pct_change\n", 0) == 0);
  CHECK(line_count(csv) == 1 + 1 + 6);  // header + baseline + six default offsets
  json j = json::parse(slurp(scratch() + "/sweep/sweep.json"));
  REQUIRE(j.at("rows").size() == 7);
  CHECK(j.at("rows")[0].at("offset") == 0.0);
  CHECK(j.at("rows")[0].at("forced") == "none");
  CHECK(j.at("rows")[0].at("risky") == j.at("risky_base"));

  REQUIRE(run("sweep --ckpt " + ckpt_path() + " --data " + data_path() +
              " --offsets 0.5,1 --intent left --threshold 4 --out " + scratch() + "/sweep2") == 0);
  json j2 = json::parse(slurp(scratch() + "/sweep2/sweep.json"));
  REQUIRE(j2.at("rows").size() == 3);
  CHECK(j2.at("rows")[1].at("forced") == "left");
  CHECK(run("sweep --ckpt " + ckpt_path() + " --data " + data_path() +
            " --intent sideways --out " + scratch() + "/bad") == 2);
}

TEST_CASE("horizon mismatches exit with the data code") {
  REQUIRE(run("gen-data --n 4 --agents 3 --horizon 20 --seed 2 --out " + scratch() + "/h20") == 0);
  std::string h20 = scratch() + "/h20/scenarios.json";
  CHECK(run("sweep --ckpt " + ckpt_path() + " --data " + h20 + " --out " + scratch() + "/bad") ==
        3);
  CHECK(run("eval --ckpt " + ckpt_path() + " --data " + h20 + " --out " + scratch() + "/bad") ==
        3);
  CHECK(run("predict --ckpt " + ckpt_path() + " --data " + h20 + " --out " + scratch() + "/bad") ==
        3);
}
