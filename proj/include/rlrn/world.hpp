#pragma once

// Synthetic multi-lane traffic world with a scripted expert driver.
//
// The road is a closed stadium loop (two straights joined by two half
// circles) so that long runs never leave the map. Vehicles keep their lane;
// the expert is an IDM gap-keeping longitudinal controller plus pure-pursuit
// steering toward the lane centre line. Motion is a kinematic bicycle.

#include <cstdint>
#include <vector>

#include "rlrn/geometry.hpp"

namespace rlrn::sim {

struct RoadConfig {
  double straight_length = 150.0;
  double curve_radius = 40.0;
  int lanes = 4;
  double lane_width = 3.5;
};

struct VehicleParams {
  double length = 4.5;
  double width = 1.8;
  double wheelbase = 2.7;
  double max_steer = 0.5;  // rad at |st| = 1
  double max_accel = 2.5;  // m/s^2 at ac = 1
  double max_brake = 6.0;  // m/s^2 at br = 1
};

struct IdmParams {
  double a_max = 2.5;
  double b_comfort = 3.0;
  double time_headway = 0.6;
  double min_gap = 1.5;
  double delta = 4.0;
};

struct WorldConfig {
  RoadConfig road;
  VehicleParams vehicle;
  IdmParams idm;
  double dt = 0.1;
  // Vehicles are spawned within this arc length centred on the ego (<= 0: whole loop).
  double spawn_window = 180.0;
  double min_spacing = 9.0;  // centre-to-centre, same lane, at spawn
  double initial_speed_min = 3.0;
  double initial_speed_max = 7.0;
  double desired_speed_min = 4.0;
  double desired_speed_max = 10.0;
  double ego_desired_speed = 9.0;
  // Non-ego desired speeds oscillate: v0(t) = base + amp * sin(2 pi t / period + phase).
  double speed_wave_amplitude_max = 4.0;
  double speed_wave_period_min = 8.0;
  double speed_wave_period_max = 25.0;
  double lookahead_min = 5.0;
  double lookahead_gain = 0.6;  // s
  double route_spacing = 3.0;   // m between route waypoints
};

// Closed stadium loop; centre line s = 0 at the origin heading +x,
// counter-clockwise. Lateral offset d is positive to the left (inwards).
class Track {
 public:
  explicit Track(const RoadConfig& cfg);

  struct Frenet {
    double s;
    double d;
  };

  double length() const { return length_; }
  const RoadConfig& config() const { return cfg_; }
  double half_width() const { return 0.5 * cfg_.lanes * cfg_.lane_width; }
  double lane_offset(int lane) const;
  int lane_of(double d) const;  // -1 when off the road

  Frenet to_frenet(Vec2 p) const;
  Pose2 from_frenet(double s, double d) const;
  bool on_road(Vec2 p) const;
  double wrap_s(double s) const;

  // Lane centre line sampled every `spacing` metres, one lap.
  std::vector<Vec2> lane_polyline(int lane, double spacing) const;

 private:
  RoadConfig cfg_;
  double arc_length_;
  double length_;
};

struct Action {
  float st = 0.0f;  // steering [-1, 1]
  float ac = 0.0f;  // throttle [0, 1]
  float br = 0.0f;  // brake [0, 1]

  Action clamped() const;
  friend bool operator==(const Action&, const Action&) = default;
};

struct Vehicle {
  int id = 0;
  Pose2 pose;
  double speed = 0.0;
  double desired_speed = 0.0;  // base IDM desired speed
  double wave_amplitude = 0.0;
  double wave_period = 1.0;
  double wave_phase = 0.0;
  int route_lane = -1;  // lane whose centre line is the route; -1 = no route
};

// IDM desired speed of `v` at simulation time `time`.
double desired_speed_at(const Vehicle& v, double time);

struct WorldState {
  WorldConfig config;
  Track track{config.road};
  std::vector<Vehicle> vehicles;
  double time = 0.0;
  int ego = 0;  // index of the designated ego vehicle
};

// Ego is vehicle 0, lane-centred at a random arc position; the others are
// placed collision-free within the spawn window. Deterministic in `seed`.
WorldState world_create(const WorldConfig& config, int n_vehicles, std::uint64_t seed);

Action expert_action(const WorldState& world, int vehicle_index);

// Kinematic bicycle step under a fixed action.
void integrate(Vehicle& v, const Action& a, double dt, const VehicleParams& params);

// Advances every vehicle under its expert action; time += dt.
void step(WorldState& world, double dt);

// Smallest bumper-to-bumper gap among same-lane pairs and smallest centre
// distance among all pairs.
struct Separation {
  double min_lane_gap;
  double min_center_distance;
};
Separation separation(const WorldState& world);

struct VehicleSnapshot {
  Pose2 pose;
  double speed = 0.0;
};

struct EpisodeLog {
  WorldConfig config;
  // Rigid transform from track coordinates to logged world coordinates
  // (identity for recorded episodes; used to move whole scenes).
  Pose2 frame;
  double dt = 0.1;
  int ego = 0;
  std::vector<int> ids;
  std::vector<bool> ghost;                            // per vehicle
  std::vector<std::vector<VehicleSnapshot>> states;  // [step][vehicle]
  std::vector<Action> ego_actions;                    // expert action at each step
  std::vector<Vec2> ego_route;                        // ego route waypoints, world frame

  int length() const { return static_cast<int>(states.size()); }
  int vehicle_count() const { return static_cast<int>(ids.size()); }
};

struct RecordOptions {
  int warmup_steps = 50;
};

// Runs world_create, discards `warmup_steps`, then logs `length` steps.
EpisodeLog record_episode(const WorldConfig& config, int n_vehicles, int length, std::uint64_t seed,
                          const RecordOptions& options = {});

}  // namespace rlrn::sim
