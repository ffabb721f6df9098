#include "tae/manifest.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tae/error.hpp"
#include "tae/hash.hpp"

namespace tae {

std::string hash_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check_data(f.good(), "manifest: cannot read input '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

std::string manifest_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0') t = std::time_t(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string manifest_to_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) cfg[k] = v;
  j["config"] = cfg;
  j["seed"] = m.seed;
  nlohmann::ordered_json inputs = nlohmann::ordered_json::array();
  for (const std::string& p : m.input_paths)
    inputs.push_back({{"path", p}, {"hash", hash_file(p)}});
  j["inputs"] = inputs;
  j["outputs"] = m.output_paths;
  j["created"] = m.created;
  return j.dump(2) + "\n";
}

void write_manifest(const std::string& dir, RunManifest m) {
  if (m.created.empty()) m.created = manifest_timestamp();
  const std::string text = manifest_to_json(m);
  const std::string path = dir + "/manifest.json";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  check_data(f.good(), "manifest: cannot write '" + path + "'");
  f.write(text.data(), std::streamsize(text.size()));
  check_data(f.good(), "manifest: write failed for '" + path + "'");
}

}  // namespace tae
