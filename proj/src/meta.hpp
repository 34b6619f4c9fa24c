#pragma once

// Run metadata: every CLI command writes a meta.json next to its CSVs with
// the seed, the canonical config string and its hash, and library versions.
// No timestamps or host details, so re-runs stay byte-identical.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rsopt {

std::uint64_t fnv1a(const std::string& s);

struct RunMeta {
  std::string command;
  std::uint64_t seed = 0;
  std::string config;  // canonical flag serialization
  // Extra run statistics (e.g. sigma2_hat, divergence counts), emitted in
  // insertion order.
  std::vector<std::pair<std::string, std::string>> stats;
};

// Writes `<dir>/meta.json`.
void write_meta_json(const std::string& dir, const RunMeta& meta);

}  // namespace rsopt
