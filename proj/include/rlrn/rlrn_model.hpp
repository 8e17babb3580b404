#pragma once

// The full relation network and its comparison / ablation variants.

#include <string>
#include <vector>

#include "rlrn/batch.hpp"

namespace rlrn::model {

enum class Variant { Baseline, RlrnS, RlrnT, CilNet, NoConfidence, NoResidual, FrozenConfidence };

const std::vector<Variant>& all_variants();
std::string variant_name(Variant v);     // "Baseline", "RLRN-S", ...
Variant parse_variant(const std::string& name);  // throws ConfigError

struct GhostCombo {
  int n_normal = 3;
  int n_ghost = 0;
  friend bool operator==(const GhostCombo&, const GhostCombo&) = default;
};

// Training-data ghost policy of a variant.
std::vector<GhostCombo> data_policy(Variant v);
// Variants whose confidence stage starts from the ghost-classification pre-training.
bool uses_confidence_init(Variant v);
bool uses_confidence_stage(Variant v);

// ----- scene VAE ("vae.*") on the pooled ego raster -----
void add_vae(ParameterSet& params, const ModelDims& d, Rng& rng);
struct VaeOutputs {
  Var mean;
  Var logvar;
};
VaeOutputs vae_encode(Tape& tape, ParameterSet& params, const Var& x);
Var vae_decode(Tape& tape, ParameterSet& params, const Var& z, const ModelDims& d);
struct VaeLoss {
  Var total;
  Var reconstruction;
  Var kl;  // mean over the batch of KL(q(z|x) || N(0, I))
};
// Reparameterised loss with noise drawn from `rng`.
VaeLoss vae_loss(Tape& tape, ParameterSet& params, const Var& x, const ModelDims& d, float beta, Rng& rng);

// ----- route encoder ("route.*") and action head ("head.*") -----
void add_route_encoder(ParameterSet& params, const ModelDims& d, Rng& rng);
Var route_encode(Tape& tape, ParameterSet& params, const Var& route);
void add_action_head(ParameterSet& params, int in, const ModelDims& d, Rng& rng);
// [B, 3]: st via tanh, ac and br via sigmoid.
Var action_head(Tape& tape, ParameterSet& params, const Var& r);

// ----- classifier ("cls.*") -----
void add_classifier(ParameterSet& params, int in, const ModelDims& d, Rng& rng);
Var classifier_logits(Tape& tape, ParameterSet& params, const Var& p);

GatConfig confidence_gat(const ModelDims& d);
GatConfig relation_gat(const ModelDims& d);

class RlrnModel {
 public:
  RlrnModel(Variant variant, const ModelDims& dims, std::uint64_t seed);

  Variant variant() const { return variant_; }
  const ModelDims& dims() const { return dims_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Fails fast with DimensionError when parameter shapes break the chain.
  void check_dimensions() const;

  // Parameters trained end to end for this variant; everything else frozen.
  void freeze_for_end_to_end();

  Var behaviour(Tape& tape, const ModelBatch& b);  // v, [rows, lstm_hidden]
  Var scene(Tape& tape, const ModelBatch& b);      // r_m, [samples, vae_latent]
  Var confidence(Tape& tape, const ModelBatch& b, const Var& v);  // k, [rows, conf_dim]
  Var actions(Tape& tape, const ModelBatch& b);    // [samples, 3]
  Var ghost_logits(Tape& tape, const ModelBatch& b);  // [rows, 1]

  // Action head input width for this variant.
  int head_input() const;
  int relation_input() const;

 private:
  Variant variant_;
  ModelDims dims_;
  ParameterSet params_;
};

// Eval-mode prediction for every sample of a batch.
std::vector<sim::Action> predict(RlrnModel& model, const ModelBatch& b);

}  // namespace rlrn::model
