#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tae {

// Record of one command invocation, written as manifest.json next to the
// command's outputs. A rerun with an equal manifest yields equal outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::pair<std::string, std::string>> config;  // resolved flag -> value
  uint64_t seed = 0;
  std::vector<std::string> input_paths;   // hashed when the manifest is written
  std::vector<std::string> output_paths;  // relative to the output directory
  std::string created;                    // filled by write_manifest when empty
};

// FNV-1a content hash of a file, as 16 hex digits. DataError when unreadable.
std::string hash_file(const std::string& path);

// ISO-8601 UTC. Honours SOURCE_DATE_EPOCH for reproducible runs.
std::string manifest_timestamp();

// Serializes the manifest (hashing inputs) and writes <dir>/manifest.json,
// replacing any previous one so the directory holds exactly one.
void write_manifest(const std::string& dir, RunManifest m);

std::string manifest_to_json(const RunManifest& m);

}  // namespace tae
