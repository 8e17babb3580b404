#include <algorithm>
#include <cmath>

#include "rlrn/errors.hpp"
#include "rlrn/rng.hpp"
#include "rlrn/sample.hpp"

namespace rlrn::data {

using std::numbers::pi;

EpisodeLog slice_episode(const EpisodeLog& episode, int begin, int end) {
  if (begin < 0 || end > episode.length() || begin >= end)
    throw WindowingError("slice_episode: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") outside episode of length " + std::to_string(episode.length()));
  EpisodeLog out;
  out.config = episode.config;
  out.frame = episode.frame;
  out.dt = episode.dt;
  out.ego = episode.ego;
  out.ids = episode.ids;
  out.ghost = episode.ghost;
  out.ego_route = episode.ego_route;
  out.states.assign(episode.states.begin() + begin, episode.states.begin() + end);
  out.ego_actions.assign(episode.ego_actions.begin() + begin, episode.ego_actions.begin() + end);
  return out;
}

FleetStats fleet_stats(const EpisodeLog& episode, int step, double range) {
  if (step < 0 || step >= episode.length()) throw WindowingError("fleet_stats: step out of range");
  const auto& snap = episode.states[static_cast<std::size_t>(step)];
  const Vec2 ego = snap[static_cast<std::size_t>(episode.ego)].pose.position();
  double n = 0.0, sv = 0.0, svv = 0.0, sc = 0.0, ss = 0.0;
  for (std::size_t j = 0; j < snap.size(); ++j) {
    if (episode.ghost[j] || (snap[j].pose.position() - ego).norm() > range) continue;
    n += 1.0;
    sv += snap[j].speed;
    svv += snap[j].speed * snap[j].speed;
    sc += std::cos(snap[j].pose.heading);
    ss += std::sin(snap[j].pose.heading);
  }
  if (n == 0.0) throw PlacementError("fleet_stats: no normal vehicle in range");
  FleetStats f{};
  f.speed_mean = sv / n;
  f.speed_std = std::sqrt(std::max(0.0, svv / n - f.speed_mean * f.speed_mean));
  f.heading_mean = std::atan2(ss, sc);
  const double r = std::clamp(std::hypot(sc, ss) / n, 1e-12, 1.0);
  f.heading_std = std::sqrt(-2.0 * std::log(r));
  return f;
}

EpisodeLog inject_ghosts(const EpisodeLog& episode, const GhostSpec& spec, int anchor_step, std::uint64_t seed) {
  if (spec.count < 0 || spec.count > spec.max_count)
    throw UsageError("inject_ghosts: count " + std::to_string(spec.count) + " outside [0, " +
                     std::to_string(spec.max_count) + "]");
  if (std::none_of(episode.ghost.begin(), episode.ghost.end(), [](bool g) { return !g; }))
    throw PlacementError("inject_ghosts: episode has no normal vehicle");
  if (spec.count == 0) return episode;
  if (anchor_step < 0 || anchor_step >= episode.length()) throw WindowingError("inject_ghosts: anchor out of range");
  if (!(spec.radius_min >= 0.0 && spec.radius_max > spec.radius_min))
    throw UsageError("inject_ghosts: invalid placement annulus");

  const FleetStats fleet = fleet_stats(episode, anchor_step, spec.fleet_range);
  std::normal_distribution<double> speed_dist(fleet.speed_mean, std::max(fleet.speed_std, spec.speed_std_floor));
  std::normal_distribution<double> heading_dist(fleet.heading_mean, std::max(fleet.heading_std, spec.heading_std_floor));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Rng rng(seed);

  const auto& vp = episode.config.vehicle;
  const Pose2 ego = episode.states[static_cast<std::size_t>(anchor_step)][static_cast<std::size_t>(episode.ego)].pose;
  EpisodeLog out = episode;
  int next_id = *std::max_element(episode.ids.begin(), episode.ids.end()) + 1;
  const double r2min = spec.radius_min * spec.radius_min, r2max = spec.radius_max * spec.radius_max;

  for (int g = 0; g < spec.count; ++g) {
    Pose2 pose;
    bool placed = false;
    for (int attempt = 0; attempt < spec.max_retries && !placed; ++attempt) {
      const double r = std::sqrt(r2min + unit(rng) * (r2max - r2min));
      const double phi = 2.0 * pi * unit(rng);
      pose = {ego.x + r * std::cos(phi), ego.y + r * std::sin(phi), wrap_angle(heading_dist(rng))};
      placed = !boxes_overlap(pose, ego, vp.length, vp.width);
    }
    if (!placed) throw PlacementError("inject_ghosts: no free spot around the ego after retries");
    const double speed = std::max(0.0, speed_dist(rng));
    const Vec2 vel = rotate({speed, 0.0}, pose.heading);

    out.ids.push_back(next_id++);
    out.ghost.push_back(true);
    for (int k = 0; k < out.length(); ++k) {
      const Vec2 p = pose.position() + vel * ((k - anchor_step) * episode.dt);
      out.states[static_cast<std::size_t>(k)].push_back({{p.x, p.y, pose.heading}, speed});
    }
  }
  return out;
}

}  // namespace rlrn::data
