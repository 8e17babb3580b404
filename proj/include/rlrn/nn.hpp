#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rlrn/autodiff.hpp"
#include "rlrn/ops.hpp"
#include "rlrn/rng.hpp"

namespace rlrn::ad {

// Uniform Xavier/Glorot: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_init(int fan_in, int fan_out, std::uint64_t seed);
Tensor xavier_uniform(Shape shape, int fan_in, int fan_out, Rng& rng);

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::map<std::string, AdamMoments> moments;
};

// One bias-corrected Adam update of every non-frozen parameter from its
// accumulated grad. Frozen parameters are never touched.
void adam_step(ParameterSet& params, AdamState& state);

// Dense layer parameters "<prefix>.w" [in x out] (Xavier) and "<prefix>.b" [out] (zeros).
void add_dense(ParameterSet& params, const std::string& prefix, int in, int out, Rng& rng, bool bias = true);
// Convolution weights "<prefix>.w" [k*k*in x out] and "<prefix>.b" [out].
void add_conv(ParameterSet& params, const std::string& prefix, int k, int in, int out, Rng& rng);

// y = x W (+ b) for a rank-2 x.
Var dense(Tape& tape, ParameterSet& params, const std::string& prefix, const Var& x);
Var conv(Tape& tape, ParameterSet& params, const std::string& prefix, const Var& x, int k, int stride, int pad);

}  // namespace rlrn::ad
