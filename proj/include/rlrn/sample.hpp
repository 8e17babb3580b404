#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rlrn/world.hpp"

namespace rlrn::data {

using sim::Action;
using sim::EpisodeLog;

// One vehicle's state relative to the ego at the same timestep. Positions and
// velocities are differences to the ego at that step, rotated into the ego
// frame at the sample time t (+x = ego heading, +y = left); theta is the
// heading difference at that step. The ego's own history is therefore zero.
struct VehicleState {
  float x = 0.0f;
  float y = 0.0f;
  float vx = 0.0f;
  float vy = 0.0f;
  float theta = 0.0f;  // wrapped to (-pi, pi]
  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

inline constexpr int kStateDim = 5;

using TrajectoryHistory = std::vector<VehicleState>;  // oldest first

// Pose in the ego frame at the sample time t (used for rasterisation).
struct LocalPose {
  float x = 0.0f;
  float y = 0.0f;
  float heading = 0.0f;
  friend bool operator==(const LocalPose&, const LocalPose&) = default;
};

struct RasterSpec {
  int width = 64;
  int height = 64;
  double extent = 40.0;  // metres covered along each axis
  double vehicle_length = 4.5;
  double vehicle_width = 1.8;
  double cell() const { return extent / width; }
};

// W x H x 3 bytes, row-major, channel-last. Row 0 is the far front of the
// ego, column 0 its far left. Channel 0: drivable area; 1: every vehicle's
// footprint over the history window; 2: the highlighted vehicle only.
struct BevRaster {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bytes;

  std::uint8_t at(int row, int col, int ch) const {
    return bytes[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
  }
  friend bool operator==(const BevRaster&, const BevRaster&) = default;
};

struct SceneSample {
  int n_normal = 0;
  int n_ghost = 0;
  std::uint64_t seed = 0;
  int t = 0;
  std::vector<TrajectoryHistory> histories;        // n+1, ego first
  std::vector<std::vector<LocalPose>> local_poses;  // n+1 x h, ego frame at t
  std::vector<std::array<float, 2>> route;          // 8 waypoints, ego frame
  Action action;
  std::vector<std::uint8_t> ghost_labels;  // 0 normal, 1 ghost; ego always 0
  std::vector<std::uint8_t> drivable;      // height x width mask, 1 = road
  std::vector<BevRaster> rasters;          // n+1

  int vehicle_count() const { return static_cast<int>(histories.size()); }
  int history_length() const { return histories.empty() ? 0 : static_cast<int>(histories[0].size()); }
  friend bool operator==(const SceneSample&, const SceneSample&) = default;
};

// Structural invariants: equal per-vehicle lengths, route of 8, ego zero
// states, ego label 0. Throws DimensionError describing the first violation.
void validate(const SceneSample& s, int route_points = 8);

struct GhostSpec {
  int count = 0;
  int max_count = 2;
  double radius_min = 2.0;  // annulus around the ego, metres
  double radius_max = 10.0;
  double fleet_range = 20.0;  // normal vehicles within this range define the fleet mean
  double speed_std_floor = 0.5;
  double heading_std_floor = 0.05;
  int max_retries = 100;
};

struct FleetStats {
  double speed_mean, speed_std;
  double heading_mean, heading_std;
};
FleetStats fleet_stats(const EpisodeLog& episode, int step, double range);

// Adds `spec.count` ghost vehicles placed uniformly (by area) in the annulus
// around the ego at `anchor_step`, never overlapping the ego footprint. Speed
// and heading are Gaussian around the local fleet mean at the anchor; ghosts
// move at constant velocity across every logged step. Normal vehicles,
// expert actions and the route are untouched.
EpisodeLog inject_ghosts(const EpisodeLog& episode, const GhostSpec& spec, int anchor_step, std::uint64_t seed);

// Steps [begin, end) of an episode with all metadata kept.
EpisodeLog slice_episode(const EpisodeLog& episode, int begin, int end);

struct SampleConfig {
  int history = 8;
  double observation_range = 20.0;
  int route_points = 8;
  RasterSpec raster;
};

// Ego plus the n_normal nearest normal vehicles (within the observation
// range) plus every ghost, ordered by distance to the ego at t. All states in
// the ego frame; rasters are left empty (see rasterize_bev).
SceneSample assemble_sample(const EpisodeLog& episode, int t, int n_normal, const SampleConfig& config = {});

// Deterministic BEV raster highlighting vehicle `index` (0 = ego).
BevRaster rasterize_bev(const SceneSample& sample, int index, const RasterSpec& spec = {});
void rasterize_all(SceneSample& sample, const RasterSpec& spec = {});

}  // namespace rlrn::data
