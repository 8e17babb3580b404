#pragma once

// JSON mapping for configuration structs. Parsing is strict: unknown keys
// raise ConfigError naming the offending path; absent keys keep defaults.

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "rlrn/dataset.hpp"
#include "rlrn/errors.hpp"

namespace rlrn {

using nlohmann::json;

class StrictReader {
 public:
  StrictReader(const json& j, std::string path);

  template <typename T>
  StrictReader& get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      out = j_.at(key).get<T>();
    } catch (const ConfigError& e) {
      throw ConfigError(path_ + "." + key + e.what());
    } catch (const std::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
    return *this;
  }
  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }
  // Throws on keys that were never requested.
  void finish();

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace rlrn

namespace rlrn::sim {
void to_json(nlohmann::json& j, const RoadConfig& c);
void from_json(const nlohmann::json& j, RoadConfig& c);
void to_json(nlohmann::json& j, const VehicleParams& c);
void from_json(const nlohmann::json& j, VehicleParams& c);
void to_json(nlohmann::json& j, const IdmParams& c);
void from_json(const nlohmann::json& j, IdmParams& c);
void to_json(nlohmann::json& j, const WorldConfig& c);
void from_json(const nlohmann::json& j, WorldConfig& c);
}  // namespace rlrn::sim

namespace rlrn::data {
void to_json(nlohmann::json& j, const GhostSpec& c);
void from_json(const nlohmann::json& j, GhostSpec& c);
void to_json(nlohmann::json& j, const RasterSpec& c);
void from_json(const nlohmann::json& j, RasterSpec& c);
void to_json(nlohmann::json& j, const SampleConfig& c);
void from_json(const nlohmann::json& j, SampleConfig& c);
void to_json(nlohmann::json& j, const Combination& c);
void from_json(const nlohmann::json& j, Combination& c);
void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);
}  // namespace rlrn::data
