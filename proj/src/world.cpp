#include "rlrn/world.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "rlrn/errors.hpp"
#include "rlrn/rng.hpp"

namespace rlrn {

bool boxes_overlap(const Pose2& a, const Pose2& b, double length, double width) {
  auto corners = [&](const Pose2& p) {
    std::array<Vec2, 4> c{Vec2{0.5 * length, 0.5 * width}, Vec2{0.5 * length, -0.5 * width},
                          Vec2{-0.5 * length, -0.5 * width}, Vec2{-0.5 * length, 0.5 * width}};
    for (auto& v : c) v = p.apply(v);
    return c;
  };
  const auto ca = corners(a), cb = corners(b);
  const std::array<Vec2, 4> axes{rotate({1, 0}, a.heading), rotate({0, 1}, a.heading), rotate({1, 0}, b.heading),
                                 rotate({0, 1}, b.heading)};
  for (const Vec2& ax : axes) {
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (const Vec2& p : ca) {
      amin = std::min(amin, dot(p, ax));
      amax = std::max(amax, dot(p, ax));
    }
    for (const Vec2& p : cb) {
      bmin = std::min(bmin, dot(p, ax));
      bmax = std::max(bmax, dot(p, ax));
    }
    if (amax < bmin || bmax < amin) return false;
  }
  return true;
}

}  // namespace rlrn

namespace rlrn::sim {

using std::numbers::pi;

Track::Track(const RoadConfig& cfg) : cfg_(cfg) {
  if (cfg.lanes < 1 || cfg.lane_width <= 0.0 || cfg.straight_length <= 0.0 || cfg.curve_radius <= half_width())
    throw PlacementError("invalid road geometry");
  arc_length_ = pi * cfg.curve_radius;
  length_ = 2.0 * cfg.straight_length + 2.0 * arc_length_;
}

double Track::lane_offset(int lane) const {
  return (lane - 0.5 * (cfg_.lanes - 1)) * cfg_.lane_width;
}

int Track::lane_of(double d) const {
  if (std::abs(d) > half_width()) return -1;
  const int lane = static_cast<int>(std::floor(d / cfg_.lane_width + 0.5 * cfg_.lanes));
  return std::clamp(lane, 0, cfg_.lanes - 1);
}

double Track::wrap_s(double s) const {
  s = std::fmod(s, length_);
  return s < 0.0 ? s + length_ : s;
}

Track::Frenet Track::to_frenet(Vec2 p) const {
  const double ls = cfg_.straight_length, r = cfg_.curve_radius;
  if (p.x >= 0.0 && p.x <= ls) {
    if (p.y < r) return {p.x, p.y};
    return {ls + arc_length_ + (ls - p.x), 2.0 * r - p.y};
  }
  if (p.x > ls) {
    const double phi = std::atan2(p.y - r, p.x - ls);
    return {ls + r * (phi + 0.5 * pi), r - std::hypot(p.x - ls, p.y - r)};
  }
  double phi = std::atan2(p.y - r, p.x);
  if (phi < 0.0) phi += 2.0 * pi;
  return {2.0 * ls + arc_length_ + r * (phi - 0.5 * pi), r - std::hypot(p.x, p.y - r)};
}

Pose2 Track::from_frenet(double s, double d) const {
  const double ls = cfg_.straight_length, r = cfg_.curve_radius;
  s = wrap_s(s);
  if (s < ls) return {s, d, 0.0};
  if (s < ls + arc_length_) {
    const double phi = -0.5 * pi + (s - ls) / r;
    return {ls + (r - d) * std::cos(phi), r + (r - d) * std::sin(phi), wrap_angle(phi + 0.5 * pi)};
  }
  if (s < 2.0 * ls + arc_length_) {
    const double u = s - ls - arc_length_;
    return {ls - u, 2.0 * r - d, pi};
  }
  const double phi = 0.5 * pi + (s - 2.0 * ls - arc_length_) / r;
  return {(r - d) * std::cos(phi), r + (r - d) * std::sin(phi), wrap_angle(phi + 0.5 * pi)};
}

bool Track::on_road(Vec2 p) const { return std::abs(to_frenet(p).d) <= half_width(); }

std::vector<Vec2> Track::lane_polyline(int lane, double spacing) const {
  if (lane < 0 || lane >= cfg_.lanes) throw RoutingError("lane index out of range");
  const int n = static_cast<int>(std::floor(length_ / spacing));
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pts.push_back(from_frenet(i * spacing, lane_offset(lane)).position());
  return pts;
}

Action Action::clamped() const {
  return {std::clamp(st, -1.0f, 1.0f), std::clamp(ac, 0.0f, 1.0f), std::clamp(br, 0.0f, 1.0f)};
}

namespace {

Action expert_from_frenet(const WorldState& w, int i, const std::vector<Track::Frenet>& fr) {
  const Vehicle& me = w.vehicles.at(static_cast<std::size_t>(i));
  if (me.route_lane < 0 || me.route_lane >= w.track.config().lanes)
    throw RoutingError("vehicle " + std::to_string(me.id) + " has no route");
  const WorldConfig& cfg = w.config;
  const IdmParams& idm = cfg.idm;

  int leader = -1;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < w.vehicles.size(); ++j) {
    if (static_cast<int>(j) == i || w.vehicles[j].route_lane != me.route_lane) continue;
    const double ds = w.track.wrap_s(fr[j].s - fr[static_cast<std::size_t>(i)].s);
    if (ds > 0.0 && ds < best) {
      best = ds;
      leader = static_cast<int>(j);
    }
  }

  const double v = me.speed;
  const double v0 = std::max(desired_speed_at(me, w.time), 0.1);
  double accel = idm.a_max * (1.0 - std::pow(v / v0, idm.delta));
  if (leader >= 0) {
    const Vehicle& lv = w.vehicles[static_cast<std::size_t>(leader)];
    const double gap = std::max((lv.pose.position() - me.pose.position()).norm() - cfg.vehicle.length, 0.1);
    const double dv = v - lv.speed;
    const double s_star =
        idm.min_gap + std::max(0.0, v * idm.time_headway + v * dv / (2.0 * std::sqrt(idm.a_max * idm.b_comfort)));
    accel -= idm.a_max * (s_star / gap) * (s_star / gap);
  }

  Action a;
  if (accel >= 0.0)
    a.ac = static_cast<float>(accel / cfg.vehicle.max_accel);
  else
    a.br = static_cast<float>(-accel / cfg.vehicle.max_brake);

  const double lookahead = std::max(cfg.lookahead_min, cfg.lookahead_gain * v);
  const Pose2 target =
      w.track.from_frenet(fr[static_cast<std::size_t>(i)].s + lookahead, w.track.lane_offset(me.route_lane));
  const Vec2 local = me.pose.inverse_apply(target.position());
  const double alpha = std::atan2(local.y, local.x);
  const double steer = std::atan2(2.0 * cfg.vehicle.wheelbase * std::sin(alpha), local.norm());
  a.st = static_cast<float>(steer / cfg.vehicle.max_steer);
  return a.clamped();
}

std::vector<Track::Frenet> frenet_all(const WorldState& w) {
  std::vector<Track::Frenet> fr;
  fr.reserve(w.vehicles.size());
  for (const Vehicle& v : w.vehicles) fr.push_back(w.track.to_frenet(v.pose.position()));
  return fr;
}

double lane_distance(const Track& track, double a, double b) {
  const double d = track.wrap_s(a - b);
  return std::min(d, track.length() - d);
}

}  // namespace

WorldState world_create(const WorldConfig& config, int n_vehicles, std::uint64_t seed) {
  if (n_vehicles < 1) throw PlacementError("world_create: need at least one vehicle");
  if (config.dt <= 0.0) throw PlacementError("world_create: dt must be positive");
  WorldState w{config, Track(config.road), {}, 0.0, 0};
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int lanes = config.road.lanes;
  const double window = config.spawn_window <= 0.0 ? w.track.length() : std::min(config.spawn_window, w.track.length());

  struct Slot {
    int lane;
    double s;
  };
  std::vector<Slot> slots;
  const int ego_lane = std::uniform_int_distribution<int>(0, lanes - 1)(rng);
  const double ego_s = unit(rng) * w.track.length();
  slots.push_back({ego_lane, ego_s});
  const int max_attempts = 1000 * n_vehicles;
  int attempts = 0;
  while (static_cast<int>(slots.size()) < n_vehicles) {
    if (++attempts > max_attempts)
      throw PlacementError("world_create: cannot place " + std::to_string(n_vehicles) + " vehicles on the road");
    const int lane = std::uniform_int_distribution<int>(0, lanes - 1)(rng);
    const double s = w.track.wrap_s(ego_s + (unit(rng) - 0.5) * window);
    const bool free = std::none_of(slots.begin(), slots.end(), [&](const Slot& o) {
      return o.lane == lane && lane_distance(w.track, o.s, s) < config.min_spacing;
    });
    if (free) slots.push_back({lane, s});
  }

  for (std::size_t i = 0; i < slots.size(); ++i) {
    Vehicle v;
    v.id = static_cast<int>(i);
    v.route_lane = slots[i].lane;
    v.pose = w.track.from_frenet(slots[i].s, w.track.lane_offset(slots[i].lane));
    v.speed = config.initial_speed_min + unit(rng) * (config.initial_speed_max - config.initial_speed_min);
    v.desired_speed = i == 0 ? config.ego_desired_speed
                             : config.desired_speed_min + unit(rng) * (config.desired_speed_max - config.desired_speed_min);
    if (i != 0) {
      v.wave_amplitude = unit(rng) * config.speed_wave_amplitude_max;
      v.wave_period = config.speed_wave_period_min + unit(rng) * (config.speed_wave_period_max - config.speed_wave_period_min);
      v.wave_phase = unit(rng) * 2.0 * pi;
    }
    w.vehicles.push_back(v);
  }
  return w;
}

double desired_speed_at(const Vehicle& v, double time) {
  return v.desired_speed + v.wave_amplitude * std::sin(2.0 * pi * time / v.wave_period + v.wave_phase);
}

Action expert_action(const WorldState& world, int vehicle_index) {
  if (vehicle_index < 0 || vehicle_index >= static_cast<int>(world.vehicles.size()))
    throw RoutingError("expert_action: no vehicle with index " + std::to_string(vehicle_index));
  return expert_from_frenet(world, vehicle_index, frenet_all(world));
}

void integrate(Vehicle& v, const Action& action, double dt, const VehicleParams& p) {
  const Action a = action.clamped();
  const double accel = a.ac * p.max_accel - a.br * p.max_brake;
  const double v_new = std::max(0.0, v.speed + accel * dt);
  const double v_avg = 0.5 * (v.speed + v_new);
  const double yaw_rate = v_avg / p.wheelbase * std::tan(a.st * p.max_steer);
  const double mid_heading = v.pose.heading + 0.5 * yaw_rate * dt;
  v.pose.x += v_avg * dt * std::cos(mid_heading);
  v.pose.y += v_avg * dt * std::sin(mid_heading);
  v.pose.heading = wrap_angle(v.pose.heading + yaw_rate * dt);
  v.speed = v_new;
}

void step(WorldState& world, double dt) {
  if (!(dt > 0.0 && dt <= 0.5)) throw UsageError("step: dt must lie in (0, 0.5]");
  const auto fr = frenet_all(world);
  std::vector<Action> actions;
  actions.reserve(world.vehicles.size());
  for (std::size_t i = 0; i < world.vehicles.size(); ++i)
    actions.push_back(expert_from_frenet(world, static_cast<int>(i), fr));
  for (std::size_t i = 0; i < world.vehicles.size(); ++i)
    integrate(world.vehicles[i], actions[i], dt, world.config.vehicle);
  world.time += dt;
}

Separation separation(const WorldState& world) {
  Separation s{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  const auto& vs = world.vehicles;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const double d = (vs[i].pose.position() - vs[j].pose.position()).norm();
      s.min_center_distance = std::min(s.min_center_distance, d);
      if (vs[i].route_lane == vs[j].route_lane) s.min_lane_gap = std::min(s.min_lane_gap, d - world.config.vehicle.length);
    }
  return s;
}

EpisodeLog record_episode(const WorldConfig& config, int n_vehicles, int length, std::uint64_t seed,
                          const RecordOptions& options) {
  if (length < 1) throw UsageError("record_episode: length must be positive");
  WorldState w = world_create(config, n_vehicles, seed);
  for (int i = 0; i < options.warmup_steps; ++i) step(w, config.dt);

  EpisodeLog log;
  log.config = config;
  log.dt = config.dt;
  log.ego = w.ego;
  for (const Vehicle& v : w.vehicles) log.ids.push_back(v.id);
  log.ghost.assign(w.vehicles.size(), false);
  log.ego_route = w.track.lane_polyline(w.vehicles[static_cast<std::size_t>(w.ego)].route_lane, config.route_spacing);
  log.states.reserve(static_cast<std::size_t>(length));
  log.ego_actions.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    std::vector<VehicleSnapshot> snap;
    snap.reserve(w.vehicles.size());
    for (const Vehicle& v : w.vehicles) snap.push_back({v.pose, v.speed});
    log.states.push_back(std::move(snap));
    log.ego_actions.push_back(expert_action(w, w.ego));
    step(w, config.dt);
  }
  return log;
}

}  // namespace rlrn::sim
