#pragma once

// Behaviour features: LSTM autoencoder over relative trajectories (v_i), a
// strided conv stack over BEV rasters (m_i) and the fusion MLP (z_i).

#include <vector>

#include "rlrn/nn.hpp"
#include "rlrn/sample.hpp"

namespace rlrn::model {

using ad::ParameterSet;
using ad::Tape;
using ad::Tensor;
using ad::Var;

struct ModelDims {
  int history = 8;
  int lstm_hidden = 64;  // |v_i|
  int raster_size = 64;  // input rasters are raster_size^2 x 3, pooled 2x2 before the conv stack
  int conv1 = 8;
  int conv2 = 16;
  int conv3 = 64;  // |m_i|
  int behaviour = 64;  // |z_i|
  int conf_heads = 4;
  int conf_head_dim = 16;  // |k_i| = heads * head_dim
  int rel_heads = 4;
  int rel_head_dim = 16;  // |r_o|
  int vae_latent = 32;    // |r_m|
  int route_points = 8;
  int route_hidden = 32;
  int route_dim = 32;  // |r_n|
  int action_hidden = 128;
  int classifier_hidden = 64;
  double graph_range = 10.0;  // D
  // Input normalisation: positions / position_scale, velocities / velocity_scale, theta / pi.
  double position_scale = 10.0;
  double velocity_scale = 15.0;
  double route_scale = 20.0;
  bool normalized_attention = false;

  int conf_dim() const { return conf_heads * conf_head_dim; }
  int rel_dim() const { return rel_heads * rel_head_dim; }
  int pooled_size() const { return raster_size / 2; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Throws DimensionError on an inconsistent configuration.
void validate_dims(const ModelDims& d);

// Normalised history of one vehicle, h x 5, oldest first.
std::vector<float> normalized_history(const data::TrajectoryHistory& h, const ModelDims& d);

// Per-step LSTM inputs for a stack of N histories: `steps[k]` is [N, 5].
std::vector<Tensor> history_steps(const std::vector<const std::vector<float>*>& histories, const ModelDims& d);

// ----- LSTM autoencoder ("lstm.*") -----
void add_lstm_autoencoder(ParameterSet& params, const ModelDims& d, Rng& rng);
// Final hidden state of the encoder: [N, lstm_hidden].
Var lstm_encode(Tape& tape, ParameterSet& params, const std::vector<Tensor>& steps);
// Decoder unrolled `h` steps from (h0 = v, c0 = 0) with zero inputs; [N, h*5].
Var lstm_decode(Tape& tape, ParameterSet& params, const Var& v, int h);

// ----- raster encoder ("cnn.*") -----
// 2x2 average pool of a W x W x 3 byte raster, scaled to [0, 1].
std::vector<float> pooled_raster(const data::BevRaster& r);
void add_cnn(ParameterSet& params, const ModelDims& d, Rng& rng);
// x: [N, S, S, 3] pooled rasters -> m: [N, conv3].
Var cnn_encode(Tape& tape, ParameterSet& params, const Var& x);

// ----- fusion ("fuse.*") -----
void add_fuse(ParameterSet& params, const ModelDims& d, Rng& rng);
Var fuse(Tape& tape, ParameterSet& params, const Var& v, const Var& m);

}  // namespace rlrn::model
