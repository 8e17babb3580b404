#pragma once

// Network-ready views of scene samples and mini-batch assembly.

#include <array>
#include <span>
#include <vector>

#include "rlrn/behaviour.hpp"
#include "rlrn/relation_graph.hpp"

namespace rlrn::model {

// One sample converted to float inputs. Pooled rasters are
// vehicles x S x S x 3 in [0, 1]. `v` and `scene` hold frozen-stage outputs
// once they are cached (empty before).
struct PreparedSample {
  int n_normal = 0;
  int n_ghost = 0;
  int vehicles = 0;
  std::vector<float> history;  // vehicles x h x 5, normalised
  std::vector<float> rasters;
  std::vector<std::array<float, 2>> positions;  // at time t, ego frame
  std::vector<float> route;                     // route_points x 2, normalised
  std::array<float, 3> action{};
  std::vector<std::uint8_t> labels;
  std::vector<float> v;      // vehicles x lstm_hidden
  std::vector<float> scene;  // vae_latent
};

// Throws DimensionError when the sample does not fit `dims`.
PreparedSample prepare_sample(const data::SceneSample& s, const ModelDims& dims);

struct BatchOptions {
  bool histories = true;  // per-step LSTM inputs (unless v is cached)
  bool rasters = true;
  bool graphs = true;
};

struct ModelBatch {
  int samples = 0;
  int rows = 0;              // vehicles over all samples
  std::vector<int> offsets;  // first row of each sample, size samples + 1
  std::vector<Tensor> steps;  // h x [rows, 5]; empty when v is cached
  Tensor v;                   // [rows, lstm_hidden] when cached
  Tensor rasters;             // [rows, S, S, 3]
  Tensor ego_rasters;         // [samples, S, S, 3]
  Tensor scene;               // [samples, vae_latent] when cached
  Tensor route;               // [samples, 2 * route_points]
  Tensor actions;             // [samples, 3]
  Tensor labels;              // [rows, 1]
  Tensor label_weights;       // [rows, 1], 0 for egos
  AttentionGraph local;       // all nodes
  AttentionGraph star;        // ego targets only

  bool has_v() const { return !v.empty(); }
  bool has_scene() const { return !scene.empty(); }
};

ModelBatch make_batch(std::span<const PreparedSample* const> samples, const ModelDims& dims, const BatchOptions& options = {});

}  // namespace rlrn::model
