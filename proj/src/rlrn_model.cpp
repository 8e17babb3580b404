#include "rlrn/rlrn_model.hpp"

#include "rlrn/errors.hpp"

namespace rlrn::model {

using namespace rlrn::ad;

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::Baseline,     Variant::RlrnS,      Variant::RlrnT,           Variant::CilNet,
                                      Variant::NoConfidence, Variant::NoResidual, Variant::FrozenConfidence};
  return v;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Baseline: return "Baseline";
    case Variant::RlrnS: return "RLRN-S";
    case Variant::RlrnT: return "RLRN-T";
    case Variant::CilNet: return "CIL-Net";
    case Variant::NoConfidence: return "RLRN-no-C";
    case Variant::NoResidual: return "RLRN-no-R";
    case Variant::FrozenConfidence: return "RLRN-frozen-conf";
  }
  throw UsageError("unknown variant");
}

Variant parse_variant(const std::string& name) {
  for (Variant v : all_variants())
    if (variant_name(v) == name) return v;
  throw ConfigError("unknown variant '" + name + "'");
}

std::vector<GhostCombo> data_policy(Variant v) {
  switch (v) {
    case Variant::Baseline: return {{3, 0}};
    case Variant::RlrnS: return {{3, 1}};
    default: return {{3, 0}, {3, 1}, {3, 2}};
  }
}

bool uses_confidence_stage(Variant v) { return v != Variant::CilNet && v != Variant::NoConfidence; }

bool uses_confidence_init(Variant v) { return uses_confidence_stage(v) && v != Variant::Baseline; }

GatConfig confidence_gat(const ModelDims& d) { return {d.conf_heads, d.conf_head_dim, d.normalized_attention}; }
GatConfig relation_gat(const ModelDims& d) { return {d.rel_heads, d.rel_head_dim, d.normalized_attention}; }

// ----- VAE -----

namespace {
constexpr int kVaeC1 = 16, kVaeC2 = 32, kVaeC3 = 32;

int vae_grid(const ModelDims& d) { return d.pooled_size() / 8; }
}  // namespace

void add_vae(ParameterSet& params, const ModelDims& d, Rng& rng) {
  const int flat = vae_grid(d) * vae_grid(d) * kVaeC3;
  add_conv(params, "vae.enc1", 3, 3, kVaeC1, rng);
  add_conv(params, "vae.enc2", 3, kVaeC1, kVaeC2, rng);
  add_conv(params, "vae.enc3", 3, kVaeC2, kVaeC3, rng);
  add_dense(params, "vae.mean", flat, d.vae_latent, rng);
  add_dense(params, "vae.logvar", flat, d.vae_latent, rng);
  add_dense(params, "vae.dec0", d.vae_latent, flat, rng);
  add_conv(params, "vae.dec1", 3, kVaeC3, kVaeC2, rng);
  add_conv(params, "vae.dec2", 3, kVaeC2, kVaeC1, rng);
  add_conv(params, "vae.dec3", 3, kVaeC1, 3, rng);
}

VaeOutputs vae_encode(Tape& tape, ParameterSet& params, const Var& x) {
  if (x.value().rank() != 4 || x.dim(3) != 3 || x.dim(1) % 8 != 0)
    throw DimensionError("vae_encode: expected [B, S, S, 3] with S divisible by 8, got " + shape_str(x.shape()));
  Var y = relu(conv(tape, params, "vae.enc1", x, 3, 2, 1));
  y = relu(conv(tape, params, "vae.enc2", y, 3, 2, 1));
  y = relu(conv(tape, params, "vae.enc3", y, 3, 2, 1));
  y = reshape(y, {y.dim(0), y.dim(1) * y.dim(2) * y.dim(3)});
  return {dense(tape, params, "vae.mean", y), dense(tape, params, "vae.logvar", y)};
}

Var vae_decode(Tape& tape, ParameterSet& params, const Var& z, const ModelDims& d) {
  const int g = vae_grid(d);
  Var y = relu(dense(tape, params, "vae.dec0", z));
  y = reshape(y, {z.dim(0), g, g, kVaeC3});
  y = relu(conv(tape, params, "vae.dec1", upsample2(y), 3, 1, 1));
  y = relu(conv(tape, params, "vae.dec2", upsample2(y), 3, 1, 1));
  return sigmoid(conv(tape, params, "vae.dec3", upsample2(y), 3, 1, 1));
}

VaeLoss vae_loss(Tape& tape, ParameterSet& params, const Var& x, const ModelDims& d, float beta, Rng& rng) {
  const VaeOutputs q = vae_encode(tape, params, x);
  Tensor eps(q.mean.shape());
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& e : eps.data()) e = normal(rng);
  const Var z = add(q.mean, mul(exp(scale(q.logvar, 0.5f)), tape.constant(std::move(eps))));
  const Var recon = mse(vae_decode(tape, params, z, d), x.value());
  // KL per sample: 0.5 * sum(mu^2 + exp(logvar) - logvar - 1).
  const Var kl_terms = add_scalar(sub(add(square(q.mean), exp(q.logvar)), q.logvar), -1.0f);
  const Var kl = scale(sum(kl_terms), 0.5f / static_cast<float>(x.dim(0)));
  return {add(recon, scale(kl, beta)), recon, kl};
}

// ----- route, head, classifier -----

void add_route_encoder(ParameterSet& params, const ModelDims& d, Rng& rng) {
  add_dense(params, "route.l1", 2 * d.route_points, d.route_hidden, rng);
  add_dense(params, "route.l2", d.route_hidden, d.route_dim, rng);
}

Var route_encode(Tape& tape, ParameterSet& params, const Var& route) {
  const int expected = params.get("route.l1.w").value.dim(0);
  if (route.value().rank() != 2 || route.dim(1) != expected)
    throw DimensionError("route_encode: expected " + std::to_string(expected / 2) + " waypoints, got " + shape_str(route.shape()));
  return tanh(dense(tape, params, "route.l2", relu(dense(tape, params, "route.l1", route))));
}

void add_action_head(ParameterSet& params, int in, const ModelDims& d, Rng& rng) {
  add_dense(params, "head.l1", in, d.action_hidden, rng);
  add_dense(params, "head.l2", d.action_hidden, 3, rng);
}

Var action_head(Tape& tape, ParameterSet& params, const Var& r) {
  const int expected = params.get("head.l1.w").value.dim(0);
  if (r.value().rank() != 2 || r.dim(1) != expected)
    throw DimensionError("action_head: input " + shape_str(r.shape()) + ", expected width " + std::to_string(expected));
  const Var o = dense(tape, params, "head.l2", relu(dense(tape, params, "head.l1", r)));
  const Var parts[] = {tanh(slice(o, 1, 0, 1)), sigmoid(slice(o, 1, 1, 3))};
  return concat(parts, 1);
}

void add_classifier(ParameterSet& params, int in, const ModelDims& d, Rng& rng) {
  add_dense(params, "cls.l1", in, d.classifier_hidden, rng);
  add_dense(params, "cls.l2", d.classifier_hidden, 1, rng);
}

Var classifier_logits(Tape& tape, ParameterSet& params, const Var& p) {
  const int expected = params.get("cls.l1.w").value.dim(0);
  if (p.value().rank() != 2 || p.dim(1) != expected)
    throw DimensionError("classifier: input " + shape_str(p.shape()) + ", expected width " + std::to_string(expected));
  return dense(tape, params, "cls.l2", relu(dense(tape, params, "cls.l1", p)));
}

// ----- model -----

namespace {

Rng module_rng(std::uint64_t seed, const char* name) { return Rng(derive_seed(seed, name)); }

std::vector<int> ego_rows(const ModelBatch& b) { return {b.offsets.begin(), b.offsets.end() - 1}; }

}  // namespace

RlrnModel::RlrnModel(Variant variant, const ModelDims& dims, std::uint64_t seed) : variant_(variant), dims_(dims) {
  validate_dims(dims_);
  Rng lstm = module_rng(seed, "lstm"), vae = module_rng(seed, "vae"), route = module_rng(seed, "route");
  add_lstm_autoencoder(params_, dims_, lstm);
  add_vae(params_, dims_, vae);
  add_route_encoder(params_, dims_, route);
  if (variant_ != Variant::NoConfidence) {
    Rng cnn = module_rng(seed, "cnn"), fz = module_rng(seed, "fuse");
    add_cnn(params_, dims_, cnn);
    add_fuse(params_, dims_, fz);
  }
  if (uses_confidence_stage(variant_)) {
    Rng conf = module_rng(seed, "conf"), cls = module_rng(seed, "cls");
    add_gat(params_, "conf", dims_.behaviour, confidence_gat(dims_), conf);
    add_classifier(params_, dims_.conf_dim() + dims_.lstm_hidden, dims_, cls);
  }
  if (variant_ != Variant::CilNet) {
    Rng rel = module_rng(seed, "rel");
    add_gat(params_, "rel", relation_input(), relation_gat(dims_), rel);
  }
  Rng head = module_rng(seed, "head");
  add_action_head(params_, head_input(), dims_, head);
  check_dimensions();
}

int RlrnModel::relation_input() const {
  switch (variant_) {
    case Variant::NoConfidence: return dims_.lstm_hidden;
    case Variant::NoResidual: return dims_.conf_dim();
    default: return dims_.conf_dim() + dims_.lstm_hidden;
  }
}

int RlrnModel::head_input() const {
  if (variant_ == Variant::CilNet) return dims_.behaviour + dims_.vae_latent + dims_.route_dim;
  return dims_.lstm_hidden + dims_.vae_latent + dims_.rel_dim() + dims_.route_dim;
}

void RlrnModel::check_dimensions() const {
  auto rows = [this](const std::string& name) { return params_.get(name).value.dim(0); };
  auto cols = [this](const std::string& name) { return params_.get(name).value.dim(1); };
  auto expect = [](bool ok, const std::string& what) {
    if (!ok) throw DimensionError("dimension chain broken: " + what);
  };
  expect(rows("lstm.enc.wh") == dims_.lstm_hidden && rows("lstm.dec.wh") == dims_.lstm_hidden, "|v_i| vs LSTM hidden");
  expect(cols("vae.mean.w") == dims_.vae_latent, "|r_m|");
  expect(cols("route.l2.w") == dims_.route_dim, "|r_n|");
  if (params_.contains("fuse.w"))
    expect(rows("fuse.w") == dims_.lstm_hidden + cols("cnn.c3.w") && cols("fuse.w") == dims_.behaviour, "|z_i| = fuse(v_i, m_i)");
  if (params_.contains("conf.wk")) {
    expect(rows("conf.wk") == dims_.behaviour, "|z_i| -> confidence GAT");
    expect(rows("cls.l1.w") == cols("conf.wk") + dims_.lstm_hidden, "|p_i| = |k_i| + |v_i| at the classifier");
  }
  if (params_.contains("rel.wk")) {
    expect(rows("rel.wk") == relation_input(), "|p_i| -> relation GAT");
    expect(cols("rel.wk") == dims_.rel_dim(), "|r_o|");
  }
  expect(rows("head.l1.w") == head_input(), "action head input = |v_0| + |r_m| + |r_o| + |r_n|");
  expect(cols("head.l2.w") == 3, "action width");
}

void RlrnModel::freeze_for_end_to_end() {
  for (auto& p : params_) p.frozen = false;
  params_.set_frozen("lstm.", true);
  params_.set_frozen("vae.", true);
  params_.set_frozen("cls.", true);
  if (variant_ == Variant::FrozenConfidence) {
    params_.set_frozen("cnn.", true);
    params_.set_frozen("fuse.", true);
    params_.set_frozen("conf.", true);
  }
}

Var RlrnModel::behaviour(Tape& tape, const ModelBatch& b) {
  if (b.has_v()) {
    if (b.v.dim(1) != dims_.lstm_hidden) throw DimensionError("cached v width differs from the model");
    return tape.constant(b.v);
  }
  if (b.steps.empty()) throw UsageError("batch carries neither histories nor cached behaviour features");
  return lstm_encode(tape, params_, b.steps);
}

Var RlrnModel::scene(Tape& tape, const ModelBatch& b) {
  if (b.has_scene()) {
    if (b.scene.dim(1) != dims_.vae_latent) throw DimensionError("cached scene width differs from the model");
    return tape.constant(b.scene);
  }
  if (b.ego_rasters.empty()) throw UsageError("batch carries neither rasters nor cached scene features");
  return vae_encode(tape, params_, tape.constant(b.ego_rasters)).mean;
}

Var RlrnModel::confidence(Tape& tape, const ModelBatch& b, const Var& v) {
  if (!uses_confidence_stage(variant_)) throw UsageError(variant_name(variant_) + " has no confidence stage");
  if (b.rasters.empty()) throw UsageError("confidence stage needs rasters");
  const Var z = fuse(tape, params_, v, cnn_encode(tape, params_, tape.constant(b.rasters)));
  return gat_layer(tape, params_, "conf", z, b.local, confidence_gat(dims_));
}

Var RlrnModel::actions(Tape& tape, const ModelBatch& b) {
  const Var v = behaviour(tape, b);
  const Var v0 = gather_rows(v, ego_rows(b));
  const Var rm = scene(tape, b);
  const Var rn = route_encode(tape, params_, tape.constant(b.route));

  if (variant_ == Variant::CilNet) {
    if (b.ego_rasters.empty()) throw UsageError("CIL-Net needs the ego raster");
    const Var z0 = fuse(tape, params_, v0, cnn_encode(tape, params_, tape.constant(b.ego_rasters)));
    const Var parts[] = {z0, rm, rn};
    return action_head(tape, params_, concat(parts, 1));
  }

  Var p;
  if (variant_ == Variant::NoConfidence) {
    p = v;
  } else {
    const Var k = confidence(tape, b, v);
    if (variant_ == Variant::NoResidual) {
      p = k;
    } else {
      const Var kv[] = {k, v};
      p = concat(kv, 1);
    }
  }
  const Var ro = gat_layer(tape, params_, "rel", p, b.star, relation_gat(dims_));
  const Var parts[] = {v0, rm, ro, rn};
  return action_head(tape, params_, concat(parts, 1));
}

Var RlrnModel::ghost_logits(Tape& tape, const ModelBatch& b) {
  const Var v = behaviour(tape, b);
  const Var kv[] = {confidence(tape, b, v), v};
  return classifier_logits(tape, params_, concat(kv, 1));
}

std::vector<sim::Action> predict(RlrnModel& model, const ModelBatch& b) {
  Tape tape;
  const Tensor& y = model.actions(tape, b).value();
  std::vector<sim::Action> out(static_cast<std::size_t>(b.samples));
  for (int i = 0; i < b.samples; ++i) out[static_cast<std::size_t>(i)] = {y.at(i, 0), y.at(i, 1), y.at(i, 2)};
  return out;
}

}  // namespace rlrn::model
