#include "semsurf/manifest.hpp"

#include <ctime>
#include <fstream>

#include <json.hpp>

#include "semsurf/common.hpp"

namespace semsurf {

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void RunManifest::save(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["dataset_hash"] = dataset_hash;
  j["created_utc"] = created_utc;
  j["outputs"] = outputs;
  std::ofstream out(path);
  if (!out) throw io_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  RunManifest m;
  m.command = j.value("command", "");
  m.seed = j.value("seed", std::uint64_t(0));
  m.dataset_hash = j.value("dataset_hash", "");
  m.created_utc = j.value("created_utc", "");
  if (j.contains("config"))
    for (const auto& [k, v] : j["config"].items()) m.config[k] = v.get<std::string>();
  if (j.contains("outputs"))
    for (const auto& v : j["outputs"]) m.outputs.push_back(v.get<std::string>());
  return m;
}

}  // namespace semsurf
