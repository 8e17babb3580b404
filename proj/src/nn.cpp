#include "rlrn/nn.hpp"

#include <cmath>

#include "rlrn/errors.hpp"

namespace rlrn::ad {

Tensor xavier_uniform(Shape shape, int fan_in, int fan_out, Rng& rng) {
  if (fan_in <= 0 || fan_out <= 0) throw DimensionError("xavier_init: fans must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = static_cast<float>(dist(rng));
  return t;
}

Tensor xavier_init(int fan_in, int fan_out, std::uint64_t seed) {
  Rng rng(seed);
  return xavier_uniform({fan_in, fan_out}, fan_in, fan_out, rng);
}

void adam_step(ParameterSet& params, AdamState& state) {
  const AdamConfig& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(static_cast<double>(c.beta1), static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(static_cast<double>(c.beta2), static_cast<double>(state.step));
  for (Parameter& p : params) {
    if (p.frozen) continue;
    if (p.grad.shape() != p.value.shape())
      throw DimensionError("adam_step: gradient shape mismatch for " + p.name);
    auto [it, fresh] = state.moments.try_emplace(p.name);
    AdamMoments& mo = it->second;
    if (fresh) {
      mo.m = Tensor::zeros_like(p.value);
      mo.v = Tensor::zeros_like(p.value);
    } else if (mo.m.shape() != p.value.shape()) {
      throw DimensionError("adam_step: moment shape mismatch for " + p.name);
    }
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const float g = p.grad[i];
      mo.m[i] = c.beta1 * mo.m[i] + (1.0f - c.beta1) * g;
      mo.v[i] = c.beta2 * mo.v[i] + (1.0f - c.beta2) * g * g;
      const double mhat = mo.m[i] / bc1;
      const double vhat = mo.v[i] / bc2;
      p.value[i] -= static_cast<float>(c.lr * mhat / (std::sqrt(vhat) + c.eps));
    }
  }
}

void add_dense(ParameterSet& params, const std::string& prefix, int in, int out, Rng& rng, bool bias) {
  params.add(prefix + ".w", xavier_uniform({in, out}, in, out, rng));
  if (bias) params.add(prefix + ".b", Tensor({out}));
}

void add_conv(ParameterSet& params, const std::string& prefix, int k, int in, int out, Rng& rng) {
  params.add(prefix + ".w", xavier_uniform({k * k * in, out}, k * k * in, k * k * out, rng));
  params.add(prefix + ".b", Tensor({out}));
}

Var dense(Tape& tape, ParameterSet& params, const std::string& prefix, const Var& x) {
  Var y = matmul(x, tape.param(params.get(prefix + ".w")));
  if (params.contains(prefix + ".b")) y = add_bias(y, tape.param(params.get(prefix + ".b")));
  return y;
}

Var conv(Tape& tape, ParameterSet& params, const std::string& prefix, const Var& x, int k, int stride, int pad) {
  Var y = conv2d(x, tape.param(params.get(prefix + ".w")), k, stride, pad);
  return add_bias(y, tape.param(params.get(prefix + ".b")));
}

}  // namespace rlrn::ad
