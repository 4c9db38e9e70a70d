#pragma once

#include <map>
#include <string>
#include <vector>

namespace semsurf {

/// Reproducibility record written next to every artifact a command produces.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // flattened snapshot
  std::uint64_t seed = 0;
  std::string dataset_hash;  // content hash of the input dataset, if any
  std::string created_utc;
  std::vector<std::string> outputs;

  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

std::string utc_timestamp();

}  // namespace semsurf
