#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rlrn/autodiff.hpp"

// Differentiable tensor ops. Every op records one node on the tape of its
// first input. Broadcasting is limited to equal shapes and scalar-vs-tensor,
// except add_bias which broadcasts a vector along the last axis.
namespace rlrn::ad {

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, float s);
Var add_scalar(const Var& a, float s);
Var add_bias(const Var& x, const Var& bias);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var relu(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);

// Softmax of a rank-1 tensor. Masked (false) entries come out exactly 0.
// Throws EmptyNeighborhoodError when every entry is masked.
Var softmax(const Var& v, const std::vector<bool>& mask = {});
// Row-wise softmax of a rank-2 tensor with a row-major 0/1 mask.
Var softmax_rows(const Var& m, const std::vector<std::uint8_t>& mask = {});

Var concat(std::span<const Var> parts, int axis);
Var slice(const Var& a, int axis, int begin, int end);
Var reshape(const Var& a, Shape shape);
// Rows of a rank-2 tensor, in the given order (repeats allowed).
Var gather_rows(const Var& a, std::vector<int> rows);

// 2-D convolution on NHWC input. `w` has shape [k*k*C, O], row index
// (ky*k + kx)*C + c. Zero padding `pad` on every side.
Var conv2d(const Var& x, const Var& w, int k, int stride, int pad);
// 2x2 average pooling, stride 2, NHWC (H and W must be even).
Var avg_pool2(const Var& x);
// Mean over H and W of an NHWC tensor -> [N, C].
Var global_avg_pool(const Var& x);
// Nearest-neighbour 2x upsampling, NHWC.
Var upsample2(const Var& x);

// Mean squared error against a constant target.
Var mse(const Var& pred, const Tensor& target);
// Weighted mean binary cross-entropy on logits; weights 0 drop an entry.
Var bce_with_logits(const Var& logits, const Tensor& targets, const Tensor& weights);

}  // namespace rlrn::ad
