#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rwre/engine/cache.hpp"

namespace rwre {

inline constexpr const char* kVersion = "0.3.0";

/// Everything needed to reproduce a run. The config hash covers the seed,
/// version and parameters; wall time is informational only.
struct RunManifest {
  std::uint64_t master_seed = 0;
  std::string version = kVersion;
  nlohmann::json parameters = nlohmann::json::object();
  double wall_time_seconds = 0.0;

  [[nodiscard]] std::string config_hash() const {
    nlohmann::json canon = {{"seed", master_seed}, {"version", version}, {"parameters", parameters}};
    return hex64(fnv1a64(canon.dump()));
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"config_hash", config_hash()},
            {"master_seed", master_seed},
            {"version", version},
            {"parameters", parameters},
            {"wall_time_seconds", wall_time_seconds}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.parameters = j.at("parameters");
    m.wall_time_seconds = j.value("wall_time_seconds", 0.0);
    return m;
  }
};

}  // namespace rwre
