#include <algorithm>
#include <numeric>

#include "rlrn/errors.hpp"
#include "rlrn/sample.hpp"

namespace rlrn::data {

namespace {

Vec2 velocity(const sim::VehicleSnapshot& s) { return rotate({s.speed, 0.0}, s.pose.heading); }

std::vector<std::array<float, 2>> route_ahead(const EpisodeLog& ep, const Pose2& ego, int count) {
  const auto& route = ep.ego_route;
  if (route.size() < 2) throw RoutingError("assemble_sample: episode has no ego route");
  std::size_t nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < route.size(); ++i) {
    const double d = (route[i] - ego.position()).norm();
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  if (ego.inverse_apply(route[nearest]).x <= 0.0) nearest = (nearest + 1) % route.size();
  std::vector<std::array<float, 2>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const Vec2 p = ego.inverse_apply(route[(nearest + static_cast<std::size_t>(k)) % route.size()]);
    out.push_back({static_cast<float>(p.x), static_cast<float>(p.y)});
  }
  return out;
}

}  // namespace

void validate(const SceneSample& s, int route_points) {
  const auto n1 = static_cast<std::size_t>(s.vehicle_count());
  if (n1 == 0) throw DimensionError("sample has no vehicles");
  if (s.ghost_labels.size() != n1) throw DimensionError("label count differs from vehicle count");
  if (!s.rasters.empty() && s.rasters.size() != n1) throw DimensionError("raster count differs from vehicle count");
  if (s.local_poses.size() != n1) throw DimensionError("pose count differs from vehicle count");
  if (static_cast<int>(s.route.size()) != route_points)
    throw DimensionError("route has " + std::to_string(s.route.size()) + " waypoints");
  const std::size_t h = s.histories[0].size();
  for (std::size_t i = 0; i < n1; ++i)
    if (s.histories[i].size() != h || s.local_poses[i].size() != h) throw DimensionError("ragged history window");
  if (std::any_of(s.histories[0].begin(), s.histories[0].end(), [](const VehicleState& v) { return !(v == VehicleState{}); }))
    throw DimensionError("ego history is not zero");
  if (s.ghost_labels[0] != 0) throw DimensionError("ego labelled as ghost");
  const auto ghosts = std::count(s.ghost_labels.begin(), s.ghost_labels.end(), std::uint8_t{1});
  if (ghosts != s.n_ghost || static_cast<int>(n1) != 1 + s.n_normal + s.n_ghost)
    throw DimensionError("vehicle counts disagree with n_normal / n_ghost");
}

SceneSample assemble_sample(const EpisodeLog& episode, int t, int n_normal, const SampleConfig& config) {
  const int h = config.history;
  if (h < 1) throw WindowingError("history length must be positive");
  if (t < h - 1 || t >= episode.length())
    throw WindowingError("assemble_sample: t = " + std::to_string(t) + " needs " + std::to_string(h) +
                         " steps of history in an episode of length " + std::to_string(episode.length()));
  if (n_normal < 0) throw SelectionError("n_normal must be non-negative");

  const auto ego_idx = static_cast<std::size_t>(episode.ego);
  const auto& now = episode.states[static_cast<std::size_t>(t)];
  const Pose2 ego_t = now[ego_idx].pose;

  struct Candidate {
    double dist;
    std::size_t index;
  };
  std::vector<Candidate> normals, ghosts;
  for (std::size_t j = 0; j < now.size(); ++j) {
    if (j == ego_idx) continue;
    const double d = (now[j].pose.position() - ego_t.position()).norm();
    if (episode.ghost[j])
      ghosts.push_back({d, j});
    else if (d <= config.observation_range)
      normals.push_back({d, j});
  }
  if (static_cast<int>(normals.size()) < n_normal)
    throw SelectionError("assemble_sample: " + std::to_string(normals.size()) + " normal vehicles within " +
                         std::to_string(config.observation_range) + " m, need " + std::to_string(n_normal));
  auto by_dist = [&](const Candidate& a, const Candidate& b) {
    return a.dist != b.dist ? a.dist < b.dist : episode.ids[a.index] < episode.ids[b.index];
  };
  std::sort(normals.begin(), normals.end(), by_dist);
  normals.resize(static_cast<std::size_t>(n_normal));
  std::vector<Candidate> chosen = normals;
  chosen.insert(chosen.end(), ghosts.begin(), ghosts.end());
  std::sort(chosen.begin(), chosen.end(), by_dist);
  chosen.insert(chosen.begin(), Candidate{0.0, ego_idx});

  SceneSample s;
  s.n_normal = n_normal;
  s.n_ghost = static_cast<int>(ghosts.size());
  s.t = t;
  s.action = episode.ego_actions.at(static_cast<std::size_t>(t));
  s.route = route_ahead(episode, ego_t, config.route_points);

  const double c = std::cos(-ego_t.heading), sn = std::sin(-ego_t.heading);
  auto to_ego_axes = [&](Vec2 v) { return Vec2{c * v.x - sn * v.y, sn * v.x + c * v.y}; };

  for (const Candidate& cand : chosen) {
    TrajectoryHistory hist;
    std::vector<LocalPose> poses;
    hist.reserve(static_cast<std::size_t>(h));
    poses.reserve(static_cast<std::size_t>(h));
    for (int k = t - h + 1; k <= t; ++k) {
      const auto& step = episode.states[static_cast<std::size_t>(k)];
      const auto& me = step[cand.index];
      const auto& ego = step[ego_idx];
      if (cand.index == ego_idx) {
        hist.push_back({});
      } else {
        const Vec2 dp = to_ego_axes(me.pose.position() - ego.pose.position());
        const Vec2 dv = to_ego_axes(velocity(me) - velocity(ego));
        hist.push_back({static_cast<float>(dp.x), static_cast<float>(dp.y), static_cast<float>(dv.x),
                        static_cast<float>(dv.y), static_cast<float>(wrap_angle(me.pose.heading - ego.pose.heading))});
      }
      const Vec2 lp = ego_t.inverse_apply(me.pose.position());
      poses.push_back({static_cast<float>(lp.x), static_cast<float>(lp.y),
                       static_cast<float>(wrap_angle(me.pose.heading - ego_t.heading))});
    }
    s.histories.push_back(std::move(hist));
    s.local_poses.push_back(std::move(poses));
    s.ghost_labels.push_back(episode.ghost[cand.index] ? 1 : 0);
  }

  // Drivable mask sampled at cell centres, in the same layout as the rasters.
  const RasterSpec& rs = config.raster;
  const sim::Track track(episode.config.road);
  const double cell = rs.cell();
  s.drivable.resize(static_cast<std::size_t>(rs.width) * static_cast<std::size_t>(rs.height));
  for (int row = 0; row < rs.height; ++row)
    for (int col = 0; col < rs.width; ++col) {
      const Vec2 local{(0.5 * rs.height - row - 0.5) * cell, (0.5 * rs.width - col - 0.5) * cell};
      const Vec2 world = ego_t.apply(local);
      s.drivable[static_cast<std::size_t>(row) * rs.width + col] = track.on_road(episode.frame.inverse_apply(world)) ? 1 : 0;
    }
  return s;
}

}  // namespace rlrn::data
