#include "rlrn/batch.hpp"

#include <algorithm>

#include "rlrn/errors.hpp"

namespace rlrn::model {

PreparedSample prepare_sample(const data::SceneSample& s, const ModelDims& dims) {
  data::validate(s, dims.route_points);
  if (s.history_length() != dims.history)
    throw DimensionError("sample history " + std::to_string(s.history_length()) + " differs from model history " +
                         std::to_string(dims.history));
  PreparedSample p;
  p.n_normal = s.n_normal;
  p.n_ghost = s.n_ghost;
  p.vehicles = s.vehicle_count();
  const int pooled = dims.pooled_size();
  p.rasters.reserve(static_cast<std::size_t>(p.vehicles) * pooled * pooled * 3);
  for (int i = 0; i < p.vehicles; ++i) {
    const auto h = normalized_history(s.histories[static_cast<std::size_t>(i)], dims);
    p.history.insert(p.history.end(), h.begin(), h.end());
    const auto& r = s.rasters.at(static_cast<std::size_t>(i));
    if (r.width != dims.raster_size || r.height != dims.raster_size)
      throw DimensionError("raster " + std::to_string(r.width) + "x" + std::to_string(r.height) + " does not match model input " +
                           std::to_string(dims.raster_size));
    const auto pr = pooled_raster(r);
    p.rasters.insert(p.rasters.end(), pr.begin(), pr.end());
    const auto& last = s.local_poses[static_cast<std::size_t>(i)].back();
    p.positions.push_back({last.x, last.y});
  }
  const auto rs = static_cast<float>(1.0 / dims.route_scale);
  for (const auto& w : s.route) p.route.insert(p.route.end(), {w[0] * rs, w[1] * rs});
  p.action = {s.action.st, s.action.ac, s.action.br};
  p.labels = s.ghost_labels;
  return p;
}

ModelBatch make_batch(std::span<const PreparedSample* const> samples, const ModelDims& dims, const BatchOptions& options) {
  if (samples.empty()) throw UsageError("make_batch: empty batch");
  ModelBatch b;
  b.samples = static_cast<int>(samples.size());
  b.offsets.push_back(0);
  for (const auto* s : samples) b.offsets.push_back(b.offsets.back() + s->vehicles);
  b.rows = b.offsets.back();

  const int h = dims.history, hidden = dims.lstm_hidden, pooled = dims.pooled_size();
  const std::size_t raster_floats = static_cast<std::size_t>(pooled) * pooled * 3;
  const bool cached_v = std::all_of(samples.begin(), samples.end(), [](const auto* s) { return !s->v.empty(); });
  const bool cached_scene = std::all_of(samples.begin(), samples.end(), [](const auto* s) { return !s->scene.empty(); });

  if (cached_v) {
    b.v = Tensor({b.rows, hidden});
    std::size_t o = 0;
    for (const auto* s : samples) {
      if (s->v.size() != static_cast<std::size_t>(s->vehicles) * hidden) throw DimensionError("make_batch: cached v has wrong size");
      std::copy(s->v.begin(), s->v.end(), b.v.ptr() + o);
      o += s->v.size();
    }
  } else if (options.histories) {
    for (int k = 0; k < h; ++k) {
      Tensor t({b.rows, data::kStateDim});
      int row = 0;
      for (const auto* s : samples)
        for (int i = 0; i < s->vehicles; ++i, ++row)
          for (int c = 0; c < data::kStateDim; ++c)
            t.at(row, c) = s->history[(static_cast<std::size_t>(i) * h + k) * data::kStateDim + c];
      b.steps.push_back(std::move(t));
    }
  }

  if (cached_scene) {
    b.scene = Tensor({b.samples, dims.vae_latent});
    for (int i = 0; i < b.samples; ++i) {
      const auto& sc = samples[static_cast<std::size_t>(i)]->scene;
      if (sc.size() != static_cast<std::size_t>(dims.vae_latent)) throw DimensionError("make_batch: cached scene has wrong size");
      std::copy(sc.begin(), sc.end(), b.scene.ptr() + static_cast<std::size_t>(i) * dims.vae_latent);
    }
  }

  if (options.rasters) {
    b.rasters = Tensor({b.rows, pooled, pooled, 3});
    b.ego_rasters = Tensor({b.samples, pooled, pooled, 3});
    std::size_t o = 0;
    for (int i = 0; i < b.samples; ++i) {
      const auto& r = samples[static_cast<std::size_t>(i)]->rasters;
      std::copy(r.begin(), r.end(), b.rasters.ptr() + o);
      std::copy(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(raster_floats),
                b.ego_rasters.ptr() + static_cast<std::size_t>(i) * raster_floats);
      o += r.size();
    }
  }

  const int route_width = 2 * dims.route_points;
  b.route = Tensor({b.samples, route_width});
  b.actions = Tensor({b.samples, 3});
  b.labels = Tensor({b.rows, 1});
  b.label_weights = Tensor({b.rows, 1});
  for (int i = 0; i < b.samples; ++i) {
    const auto& s = *samples[static_cast<std::size_t>(i)];
    if (static_cast<int>(s.route.size()) != route_width) throw DimensionError("make_batch: route has wrong length");
    for (int c = 0; c < route_width; ++c) b.route.at(i, c) = s.route[static_cast<std::size_t>(c)];
    for (int c = 0; c < 3; ++c) b.actions.at(i, c) = s.action[static_cast<std::size_t>(c)];
    for (int j = 0; j < s.vehicles; ++j) {
      const int row = b.offsets[static_cast<std::size_t>(i)] + j;
      b.labels.at(row, 0) = s.labels[static_cast<std::size_t>(j)];
      b.label_weights.at(row, 0) = j == 0 ? 0.0f : 1.0f;
    }
    if (options.graphs) {
      append_graph(b.local, build_local_graph(s.positions, dims.graph_range), b.offsets[static_cast<std::size_t>(i)],
                   GatTarget::AllNodes);
      append_graph(b.star, build_star_graph(s.positions, dims.graph_range), b.offsets[static_cast<std::size_t>(i)],
                   GatTarget::EgoOnly);
    }
  }
  return b;
}

}  // namespace rlrn::model
