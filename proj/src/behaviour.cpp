#include "rlrn/behaviour.hpp"

#include <numbers>

#include "rlrn/errors.hpp"

namespace rlrn::model {

using namespace rlrn::ad;

void validate_dims(const ModelDims& d) {
  auto positive = [](int v, const char* what) {
    if (v <= 0) throw DimensionError(std::string("model dims: ") + what + " must be positive");
  };
  positive(d.history, "history");
  positive(d.lstm_hidden, "lstm_hidden");
  positive(d.conv1, "conv1");
  positive(d.conv2, "conv2");
  positive(d.conv3, "conv3");
  positive(d.behaviour, "behaviour");
  positive(d.conf_heads, "conf_heads");
  positive(d.conf_head_dim, "conf_head_dim");
  positive(d.rel_heads, "rel_heads");
  positive(d.rel_head_dim, "rel_head_dim");
  positive(d.vae_latent, "vae_latent");
  positive(d.route_points, "route_points");
  positive(d.route_hidden, "route_hidden");
  positive(d.route_dim, "route_dim");
  positive(d.action_hidden, "action_hidden");
  positive(d.classifier_hidden, "classifier_hidden");
  // Three stride-2 convs on the pooled raster, and three 2x upsamplings in the VAE decoder.
  if (d.raster_size < 16 || d.raster_size % 16 != 0) throw DimensionError("model dims: raster_size must be a multiple of 16");
  if (!(d.graph_range > 0.0)) throw DimensionError("model dims: graph_range must be positive");
}

std::vector<float> normalized_history(const data::TrajectoryHistory& h, const ModelDims& d) {
  if (static_cast<int>(h.size()) != d.history)
    throw DimensionError("history of length " + std::to_string(h.size()) + ", expected " + std::to_string(d.history));
  std::vector<float> out;
  out.reserve(h.size() * data::kStateDim);
  const auto ps = static_cast<float>(1.0 / d.position_scale), vs = static_cast<float>(1.0 / d.velocity_scale);
  const auto ts = static_cast<float>(1.0 / std::numbers::pi);
  for (const auto& s : h) out.insert(out.end(), {s.x * ps, s.y * ps, s.vx * vs, s.vy * vs, s.theta * ts});
  return out;
}

std::vector<Tensor> history_steps(const std::vector<const std::vector<float>*>& histories, const ModelDims& d) {
  const int n = static_cast<int>(histories.size());
  if (n == 0) throw DimensionError("history_steps: no histories");
  std::vector<Tensor> steps;
  steps.reserve(static_cast<std::size_t>(d.history));
  for (int k = 0; k < d.history; ++k) {
    Tensor t({n, data::kStateDim});
    for (int i = 0; i < n; ++i) {
      const auto& h = *histories[static_cast<std::size_t>(i)];
      if (static_cast<int>(h.size()) != d.history * data::kStateDim) throw DimensionError("history_steps: wrong history length");
      for (int c = 0; c < data::kStateDim; ++c)
        t.at(i, c) = h[static_cast<std::size_t>(k * data::kStateDim + c)];
    }
    steps.push_back(std::move(t));
  }
  return steps;
}

void add_lstm_autoencoder(ParameterSet& params, const ModelDims& d, Rng& rng) {
  const int h = d.lstm_hidden, s = data::kStateDim;
  params.add("lstm.enc.wx", xavier_uniform({s, 4 * h}, s, 4 * h, rng));
  params.add("lstm.enc.wh", xavier_uniform({h, 4 * h}, h, 4 * h, rng));
  params.add("lstm.enc.b", Tensor({4 * h}));
  params.add("lstm.dec.wh", xavier_uniform({h, 4 * h}, h, 4 * h, rng));
  params.add("lstm.dec.b", Tensor({4 * h}));
  add_dense(params, "lstm.dec.out", h, s, rng);
}

namespace {

// One LSTM cell update; gates laid out [i | f | g | o].
void lstm_cell(const Var& gates, Var& h, Var& c, int hidden) {
  const Var i = sigmoid(slice(gates, 1, 0, hidden));
  const Var f = sigmoid(slice(gates, 1, hidden, 2 * hidden));
  const Var g = tanh(slice(gates, 1, 2 * hidden, 3 * hidden));
  const Var o = sigmoid(slice(gates, 1, 3 * hidden, 4 * hidden));
  c = c.valid() ? add(mul(f, c), mul(i, g)) : mul(i, g);
  h = mul(o, tanh(c));
}

}  // namespace

Var lstm_encode(Tape& tape, ParameterSet& params, const std::vector<Tensor>& steps) {
  const Var wx = tape.param(params.get("lstm.enc.wx"));
  const Var wh = tape.param(params.get("lstm.enc.wh"));
  const Var b = tape.param(params.get("lstm.enc.b"));
  const int hidden = wh.dim(0);
  Var h, c;
  for (const Tensor& x : steps) {
    if (x.rank() != 2 || x.dim(1) != data::kStateDim) throw DimensionError("lstm_encode: step input must be [N, 5]");
    Var gates = matmul(tape.constant(x), wx);
    if (h.valid()) gates = add(gates, matmul(h, wh));
    lstm_cell(add_bias(gates, b), h, c, hidden);
  }
  if (!h.valid()) throw DimensionError("lstm_encode: empty sequence");
  return h;
}

Var lstm_decode(Tape& tape, ParameterSet& params, const Var& v, int h) {
  const Var wh = tape.param(params.get("lstm.dec.wh"));
  const Var b = tape.param(params.get("lstm.dec.b"));
  const int hidden = wh.dim(0);
  if (v.value().rank() != 2 || v.dim(1) != hidden)
    throw DimensionError("lstm_decode: feature dim " + shape_str(v.shape()) + " does not match decoder hidden " +
                         std::to_string(hidden));
  Var state = v, c;
  std::vector<Var> outs;
  for (int k = 0; k < h; ++k) {
    lstm_cell(add_bias(matmul(state, wh), b), state, c, hidden);
    outs.push_back(dense(tape, params, "lstm.dec.out", state));
  }
  return concat(outs, 1);
}

std::vector<float> pooled_raster(const data::BevRaster& r) {
  if (r.width % 2 != 0 || r.height % 2 != 0 || r.bytes.size() != static_cast<std::size_t>(r.width) * r.height * 3)
    throw DimensionError("pooled_raster: malformed raster");
  const int w2 = r.width / 2, h2 = r.height / 2;
  std::vector<float> out(static_cast<std::size_t>(w2) * h2 * 3);
  for (int y = 0; y < h2; ++y)
    for (int x = 0; x < w2; ++x)
      for (int c = 0; c < 3; ++c) {
        const int s = r.at(2 * y, 2 * x, c) + r.at(2 * y, 2 * x + 1, c) + r.at(2 * y + 1, 2 * x, c) + r.at(2 * y + 1, 2 * x + 1, c);
        out[(static_cast<std::size_t>(y) * w2 + x) * 3 + c] = static_cast<float>(s) / (4.0f * 255.0f);
      }
  return out;
}

void add_cnn(ParameterSet& params, const ModelDims& d, Rng& rng) {
  add_conv(params, "cnn.c1", 3, 3, d.conv1, rng);
  add_conv(params, "cnn.c2", 3, d.conv1, d.conv2, rng);
  add_conv(params, "cnn.c3", 3, d.conv2, d.conv3, rng);
}

Var cnn_encode(Tape& tape, ParameterSet& params, const Var& x) {
  if (x.value().rank() != 4 || x.dim(3) != 3) throw DimensionError("cnn_encode: expected [N, S, S, 3], got " + shape_str(x.shape()));
  Var y = relu(conv(tape, params, "cnn.c1", x, 3, 2, 1));
  y = relu(conv(tape, params, "cnn.c2", y, 3, 2, 1));
  y = relu(conv(tape, params, "cnn.c3", y, 3, 2, 1));
  return global_avg_pool(y);
}

void add_fuse(ParameterSet& params, const ModelDims& d, Rng& rng) {
  add_dense(params, "fuse", d.lstm_hidden + d.conv3, d.behaviour, rng);
}

Var fuse(Tape& tape, ParameterSet& params, const Var& v, const Var& m) {
  if (v.dim(0) != m.dim(0)) throw DimensionError("fuse: v and m disagree on vehicle count");
  const Var parts[] = {v, m};
  return tanh(dense(tape, params, "fuse", concat(parts, 1)));
}

}  // namespace rlrn::model
