#include "rlrn/config_json.hpp"

namespace rlrn {

StrictReader::StrictReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j.is_object()) throw ConfigError(path_ + ": expected an object");
}

void StrictReader::finish() {
  for (const auto& item : j_.items())
    if (!seen_.count(item.key())) throw ConfigError(path_ + ": unknown key '" + item.key() + "'");
}

}  // namespace rlrn

namespace rlrn::sim {

void to_json(json& j, const RoadConfig& c) {
  j = {{"straight_length", c.straight_length}, {"curve_radius", c.curve_radius}, {"lanes", c.lanes}, {"lane_width", c.lane_width}};
}
void from_json(const json& j, RoadConfig& c) {
  StrictReader r(j, "");
  r.get("straight_length", c.straight_length).get("curve_radius", c.curve_radius).get("lanes", c.lanes).get("lane_width", c.lane_width);
  r.finish();
}

void to_json(json& j, const VehicleParams& c) {
  j = {{"length", c.length},       {"width", c.width},         {"wheelbase", c.wheelbase},
       {"max_steer", c.max_steer}, {"max_accel", c.max_accel}, {"max_brake", c.max_brake}};
}
void from_json(const json& j, VehicleParams& c) {
  StrictReader r(j, "");
  r.get("length", c.length).get("width", c.width).get("wheelbase", c.wheelbase);
  r.get("max_steer", c.max_steer).get("max_accel", c.max_accel).get("max_brake", c.max_brake);
  r.finish();
}

void to_json(json& j, const IdmParams& c) {
  j = {{"a_max", c.a_max}, {"b_comfort", c.b_comfort}, {"time_headway", c.time_headway}, {"min_gap", c.min_gap}, {"delta", c.delta}};
}
void from_json(const json& j, IdmParams& c) {
  StrictReader r(j, "");
  r.get("a_max", c.a_max).get("b_comfort", c.b_comfort).get("time_headway", c.time_headway);
  r.get("min_gap", c.min_gap).get("delta", c.delta);
  r.finish();
}

void to_json(json& j, const WorldConfig& c) {
  j = {{"road", c.road},
       {"vehicle", c.vehicle},
       {"idm", c.idm},
       {"dt", c.dt},
       {"spawn_window", c.spawn_window},
       {"min_spacing", c.min_spacing},
       {"initial_speed_min", c.initial_speed_min},
       {"initial_speed_max", c.initial_speed_max},
       {"desired_speed_min", c.desired_speed_min},
       {"desired_speed_max", c.desired_speed_max},
       {"ego_desired_speed", c.ego_desired_speed},
       {"speed_wave_amplitude_max", c.speed_wave_amplitude_max},
       {"speed_wave_period_min", c.speed_wave_period_min},
       {"speed_wave_period_max", c.speed_wave_period_max},
       {"lookahead_min", c.lookahead_min},
       {"lookahead_gain", c.lookahead_gain},
       {"route_spacing", c.route_spacing}};
}
void from_json(const json& j, WorldConfig& c) {
  StrictReader r(j, "");
  r.get("road", c.road).get("vehicle", c.vehicle).get("idm", c.idm).get("dt", c.dt);
  r.get("spawn_window", c.spawn_window).get("min_spacing", c.min_spacing);
  r.get("initial_speed_min", c.initial_speed_min).get("initial_speed_max", c.initial_speed_max);
  r.get("desired_speed_min", c.desired_speed_min).get("desired_speed_max", c.desired_speed_max);
  r.get("ego_desired_speed", c.ego_desired_speed).get("speed_wave_amplitude_max", c.speed_wave_amplitude_max);
  r.get("speed_wave_period_min", c.speed_wave_period_min).get("speed_wave_period_max", c.speed_wave_period_max);
  r.get("lookahead_min", c.lookahead_min).get("lookahead_gain", c.lookahead_gain).get("route_spacing", c.route_spacing);
  r.finish();
}

}  // namespace rlrn::sim

namespace rlrn::data {

void to_json(json& j, const GhostSpec& c) {
  j = {{"max_count", c.max_count},
       {"radius_min", c.radius_min},
       {"radius_max", c.radius_max},
       {"fleet_range", c.fleet_range},
       {"speed_std_floor", c.speed_std_floor},
       {"heading_std_floor", c.heading_std_floor},
       {"max_retries", c.max_retries}};
}
void from_json(const json& j, GhostSpec& c) {
  StrictReader r(j, "");
  r.get("max_count", c.max_count).get("radius_min", c.radius_min).get("radius_max", c.radius_max);
  r.get("fleet_range", c.fleet_range).get("speed_std_floor", c.speed_std_floor);
  r.get("heading_std_floor", c.heading_std_floor).get("max_retries", c.max_retries);
  r.finish();
}

void to_json(json& j, const RasterSpec& c) {
  j = {{"width", c.width},
       {"height", c.height},
       {"extent", c.extent},
       {"vehicle_length", c.vehicle_length},
       {"vehicle_width", c.vehicle_width}};
}
void from_json(const json& j, RasterSpec& c) {
  StrictReader r(j, "");
  r.get("width", c.width).get("height", c.height).get("extent", c.extent);
  r.get("vehicle_length", c.vehicle_length).get("vehicle_width", c.vehicle_width);
  r.finish();
}

void to_json(json& j, const SampleConfig& c) {
  j = {{"history", c.history}, {"observation_range", c.observation_range}, {"route_points", c.route_points}, {"raster", c.raster}};
}
void from_json(const json& j, SampleConfig& c) {
  StrictReader r(j, "");
  r.get("history", c.history).get("observation_range", c.observation_range).get("route_points", c.route_points);
  r.get("raster", c.raster);
  r.finish();
}

void to_json(json& j, const Combination& c) { j = {{"n_normal", c.n_normal}, {"n_ghost", c.n_ghost}, {"count", c.count}}; }
void from_json(const json& j, Combination& c) {
  StrictReader r(j, "");
  r.get("n_normal", c.n_normal).get("n_ghost", c.n_ghost).get("count", c.count);
  r.finish();
}

void to_json(json& j, const DatasetConfig& c) {
  j = {{"world", c.world},
       {"n_vehicles", c.n_vehicles},
       {"warmup_steps", c.warmup_steps},
       {"samples_per_episode", c.samples_per_episode},
       {"sample_stride", c.sample_stride},
       {"ghost", c.ghost},
       {"sample", c.sample},
       {"combos", c.combos},
       {"seed", c.seed},
       {"threads", c.threads}};
}
void from_json(const json& j, DatasetConfig& c) {
  StrictReader r(j, "");
  r.get("world", c.world).get("n_vehicles", c.n_vehicles).get("warmup_steps", c.warmup_steps);
  r.get("samples_per_episode", c.samples_per_episode).get("sample_stride", c.sample_stride);
  r.get("ghost", c.ghost).get("sample", c.sample).get("combos", c.combos).get("seed", c.seed).get("threads", c.threads);
  r.finish();
}

}  // namespace rlrn::data
