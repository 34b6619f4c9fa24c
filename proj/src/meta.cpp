#include "meta.hpp"

#include <fstream>

#include <Eigen/Core>
#include "json.hpp"

#include "rsopt/types.hpp"
#include "rsopt/version.hpp"

namespace rsopt {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_meta_json(const std::string& dir, const RunMeta& meta) {
  nlohmann::ordered_json j;
  j["command"] = meta.command;
  j["seed"] = meta.seed;
  j["config"] = meta.config;
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a(meta.config)));
  j["config_hash"] = hash;
  j["versions"] = {
      {"rsopt", kVersion},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
  };
  nlohmann::ordered_json stats = nlohmann::ordered_json::object();
  for (const auto& [k, v] : meta.stats) stats[k] = v;
  j["stats"] = stats;

  const std::string path = dir + "/meta.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("meta: cannot open '" + path + "'");
  out << j.dump(2) << '\n';
  out.flush();
  if (out.fail()) throw NumericalError("meta: write to '" + path + "' failed");
}

}  // namespace rsopt
