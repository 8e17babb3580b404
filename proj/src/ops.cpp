#include "rlrn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>

#include "rlrn/errors.hpp"

namespace rlrn::ad {
namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

MapC as_mat(const Tensor& t, int rows, int cols) { return MapC(t.ptr(), rows, cols); }
Map as_mat(Tensor& t, int rows, int cols) { return Map(t.ptr(), rows, cols); }

Tape& tape_of(const Var& v) {
  if (!v.valid()) throw UsageError("op on an unbound Var");
  return *v.tape();
}

void require_rank(const Var& v, int rank, const char* op) {
  if (v.value().rank() != rank)
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(v.shape()));
}

template <class F, class DF>
Var unary(const Var& a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const int ia = a.id();
  return tape_of(a).record(std::move(y), {ia}, [ia, df](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * df(x[i], y[i]);
  });
}

enum class Bin { Add, Sub, Mul };

// Equal shapes, or one side has exactly one element.
Var binary(const Var& a, const Var& b, Bin op) {
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  const bool a_scalar = x.size() == 1 && z.size() != 1;
  const bool b_scalar = z.size() == 1 && x.size() != 1;
  if (!a_scalar && !b_scalar && x.shape() != z.shape())
    throw DimensionError("elementwise: incompatible shapes " + shape_str(x.shape()) + " and " +
                         shape_str(z.shape()));
  Tensor y(a_scalar ? z.shape() : x.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const float p = a_scalar ? x[0] : x[i];
    const float q = b_scalar ? z[0] : z[i];
    y[i] = op == Bin::Add ? p + q : op == Bin::Sub ? p - q : p * q;
  }
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(y), {ia, ib}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& z = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& gx = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const float q = b_scalar ? z[0] : z[i];
        const float d = op == Bin::Mul ? g[i] * q : g[i];
        gx[a_scalar ? 0 : i] += d;
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gz = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const float p = a_scalar ? x[0] : x[i];
        const float d = op == Bin::Mul ? g[i] * p : op == Bin::Sub ? -g[i] : g[i];
        gz[b_scalar ? 0 : i] += d;
      }
    }
  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k)
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  Tensor y({m, n});
  as_mat(y, m, n).noalias() = as_mat(a.value(), m, k) * as_mat(b.value(), k, n);
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(y), {ia, ib}, [=](Tape& t, int self) {
    const auto g = as_mat(t.grad(self), m, n);
    if (t.requires_grad(ia))
      as_mat(t.grad_buffer(ia), m, k).noalias() += g * as_mat(t.value(ib), k, n).transpose();
    if (t.requires_grad(ib))
      as_mat(t.grad_buffer(ib), k, n).noalias() += as_mat(t.value(ia), m, k).transpose() * g;
  });
}

Var transpose(const Var& a) {
  require_rank(a, 2, "transpose");
  const int m = a.dim(0), n = a.dim(1);
  Tensor y({n, m});
  as_mat(y, n, m) = as_mat(a.value(), m, n).transpose();
  const int ia = a.id();
  return tape_of(a).record(std::move(y), {ia}, [=](Tape& t, int self) {
    if (t.requires_grad(ia))
      as_mat(t.grad_buffer(ia), m, n) += as_mat(t.grad(self), n, m).transpose();
  });
}

Var add(const Var& a, const Var& b) { return binary(a, b, Bin::Add); }
Var sub(const Var& a, const Var& b) { return binary(a, b, Bin::Sub); }
Var mul(const Var& a, const Var& b) { return binary(a, b, Bin::Mul); }

Var scale(const Var& a, float s) {
  return unary(a, [s](float x) { return s * x; }, [s](float, float) { return s; });
}

Var add_scalar(const Var& a, float s) {
  return unary(a, [s](float x) { return x + s; }, [](float, float) { return 1.0f; });
}

Var add_bias(const Var& x, const Var& bias) {
  const int c = x.value().shape().back();
  if (bias.value().rank() != 1 || bias.dim(0) != c)
    throw DimensionError("add_bias: bias " + shape_str(bias.shape()) + " does not match last axis of " +
                         shape_str(x.shape()));
  const std::size_t rows = x.value().size() / static_cast<std::size_t>(c);
  Tensor y = x.value();
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (int j = 0; j < c; ++j) y[r * c + j] += b[static_cast<std::size_t>(j)];
  const int ix = x.id(), ib = bias.id();
  return tape_of(x).record(std::move(y), {ix, ib}, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ix)) {
      Tensor& gx = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (int j = 0; j < c; ++j) gb[static_cast<std::size_t>(j)] += g[r * c + j];
    }
  });
}

Var tanh(const Var& a) {
  return unary(a, [](float x) { return std::tanh(x); }, [](float, float y) { return 1.0f - y * y; });
}

Var sigmoid(const Var& a) {
  return unary(
      a,
      [](float x) {
        // Split on sign so exp never overflows.
        if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
        const float e = std::exp(x);
        return e / (1.0f + e);
      },
      [](float, float y) { return y * (1.0f - y); });
}

Var relu(const Var& a) {
  return unary(a, [](float x) { return x > 0.0f ? x : 0.0f; },
               [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Var exp(const Var& a) {
  return unary(a, [](float x) { return std::exp(x); }, [](float, float y) { return y; });
}

Var square(const Var& a) {
  return unary(a, [](float x) { return x * x; }, [](float x, float) { return 2.0f * x; });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (float v : a.value().data()) s += v;
  const int ia = a.id();
  return tape_of(a).record(Tensor::scalar(static_cast<float>(s)), {ia}, [ia](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const float g = t.grad(self)[0];
    for (float& v : t.grad_buffer(ia).data()) v += g;
  });
}

Var mean(const Var& a) { return scale(sum(a), 1.0f / static_cast<float>(a.value().size())); }

Var softmax(const Var& v, const std::vector<bool>& mask) {
  require_rank(v, 1, "softmax");
  const int n = v.dim(0);
  if (!mask.empty() && static_cast<int>(mask.size()) != n)
    throw DimensionError("softmax: mask length differs from input");
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n), 1);
  for (int i = 0; i < n && !mask.empty(); ++i) m[static_cast<std::size_t>(i)] = mask[static_cast<std::size_t>(i)];
  return reshape(softmax_rows(reshape(v, {1, n}), m), {n});
}

Var softmax_rows(const Var& a, const std::vector<std::uint8_t>& mask) {
  require_rank(a, 2, "softmax_rows");
  const int r = a.dim(0), c = a.dim(1);
  if (!mask.empty() && mask.size() != a.value().size())
    throw DimensionError("softmax_rows: mask size differs from input");
  auto active = [&mask](std::size_t i) { return mask.empty() || mask[i] != 0; };
  const Tensor& x = a.value();
  Tensor y({r, c});
  for (int i = 0; i < r; ++i) {
    float mx = -INFINITY;
    for (int j = 0; j < c; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * c + j;
      if (active(k)) mx = std::max(mx, x[k]);
    }
    if (mx == -INFINITY) throw EmptyNeighborhoodError("softmax: every entry of row " + std::to_string(i) + " is masked");
    double z = 0.0;
    for (int j = 0; j < c; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * c + j;
      if (active(k)) z += std::exp(static_cast<double>(x[k] - mx));
    }
    for (int j = 0; j < c; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * c + j;
      y[k] = active(k) ? static_cast<float>(std::exp(static_cast<double>(x[k] - mx)) / z) : 0.0f;
    }
  }
  const int ia = a.id();
  return tape_of(a).record(std::move(y), {ia}, [=](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(ia);
    for (int i = 0; i < r; ++i) {
      const std::size_t row = static_cast<std::size_t>(i) * c;
      float dot = 0.0f;
      for (int j = 0; j < c; ++j) dot += g[row + j] * y[row + j];
      for (int j = 0; j < c; ++j) gx[row + j] += y[row + j] * (g[row + j] - dot);
    }
  });
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw UsageError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  const int rank = static_cast<int>(s0.size());
  if (axis < 0 || axis >= rank) throw DimensionError("concat: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= static_cast<std::size_t>(s0[d]);
  for (int d = axis + 1; d < rank; ++d) inner *= static_cast<std::size_t>(s0[d]);
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<int> ids, widths;
  for (const Var& p : parts) {
    const Shape& s = p.shape();
    bool ok = static_cast<int>(s.size()) == rank;
    for (int d = 0; ok && d < rank; ++d) ok = d == axis || s[d] == s0[d];
    if (!ok) throw DimensionError("concat: off-axis mismatch between " + shape_str(s0) + " and " + shape_str(s));
    out_shape[axis] += s[axis];
    ids.push_back(p.id());
    widths.push_back(s[axis]);
  }
  Tensor y(out_shape);
  const std::size_t out_row = static_cast<std::size_t>(out_shape[axis]) * inner;
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& x = parts[p].value();
    const std::size_t w = static_cast<std::size_t>(widths[p]) * inner;
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(x.ptr() + o * w, w, y.ptr() + o * out_row + offset);
    offset += w;
  }
  return tape_of(parts[0]).record(std::move(y), ids, [=](Tape& t, int self) {
    const Tensor& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      const std::size_t w = static_cast<std::size_t>(widths[p]) * inner;
      if (t.requires_grad(ids[p])) {
        Tensor& gx = t.grad_buffer(ids[p]);
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < w; ++i) gx[o * w + i] += g[o * out_row + offset + i];
      }
      offset += w;
    }
  });
}

Var slice(const Var& a, int axis, int begin, int end) {
  const Shape& s = a.shape();
  const int rank = static_cast<int>(s.size());
  if (axis < 0 || axis >= rank || begin < 0 || end > s[axis] || begin >= end)
    throw DimensionError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for axis " + std::to_string(axis) + " of " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= static_cast<std::size_t>(s[d]);
  for (int d = axis + 1; d < rank; ++d) inner *= static_cast<std::size_t>(s[d]);
  Shape out_shape = s;
  out_shape[axis] = end - begin;
  Tensor y(out_shape);
  const std::size_t in_row = static_cast<std::size_t>(s[axis]) * inner;
  const std::size_t w = static_cast<std::size_t>(end - begin) * inner;
  const std::size_t off = static_cast<std::size_t>(begin) * inner;
  for (std::size_t o = 0; o < outer; ++o) std::copy_n(a.value().ptr() + o * in_row + off, w, y.ptr() + o * w);
  const int ia = a.id();
  return tape_of(a).record(std::move(y), {ia}, [=](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < w; ++i) gx[o * in_row + off + i] += g[o * w + i];
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor y = a.value().reshaped(std::move(shape));
  const int ia = a.id();
  return tape_of(a).record(std::move(y), {ia}, [ia](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var gather_rows(const Var& a, std::vector<int> rows) {
  require_rank(a, 2, "gather_rows");
  const int r = a.dim(0), c = a.dim(1);
  if (rows.empty()) throw DimensionError("gather_rows: empty row list");
  Tensor y({static_cast<int>(rows.size()), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= r) throw DimensionError("gather_rows: row index out of range");
    std::copy_n(a.value().ptr() + static_cast<std::size_t>(rows[i]) * c, c, y.ptr() + i * c);
  }
  const int ia = a.id();
  return tape_of(a).record(std::move(y), {ia}, [ia, c, rows = std::move(rows)](Tape& t, int self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ia);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < c; ++j) gx[static_cast<std::size_t>(rows[i]) * c + j] += g[i * c + j];
  });
}

Var conv2d(const Var& x, const Var& w, int k, int stride, int pad) {
  require_rank(x, 4, "conv2d");
  require_rank(w, 2, "conv2d");
  const int n = x.dim(0), h = x.dim(1), wd = x.dim(2), c = x.dim(3);
  const int kk = k * k * c;
  if (w.dim(0) != kk)
    throw DimensionError("conv2d: weight rows " + std::to_string(w.dim(0)) + " != k*k*C = " + std::to_string(kk));
  const int o = w.dim(1);
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (wd + 2 * pad - k) / stride + 1;
  if (ho <= 0 || wo <= 0) throw DimensionError("conv2d: kernel larger than padded input");
  const int rows = n * ho * wo;

  // im2col: one row per output pixel.
  auto cols = std::make_shared<Tensor>(Shape{rows, kk});
  const float* xs = x.value().ptr();
  float* cs = cols->ptr();
  for (int b = 0; b < n; ++b)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox) {
        float* row = cs + (static_cast<std::size_t>((b * ho + oy) * wo + ox)) * kk;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride - pad + ky;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride - pad + kx;
            float* dst = row + (ky * k + kx) * c;
            if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
            std::copy_n(xs + ((static_cast<std::size_t>(b) * h + iy) * wd + ix) * c, c, dst);
          }
        }
      }
  Tensor y({n, ho, wo, o});
  as_mat(y, rows, o).noalias() = as_mat(*cols, rows, kk) * as_mat(w.value(), kk, o);
  const int ixd = x.id(), iw = w.id();
  return tape_of(x).record(std::move(y), {ixd, iw}, [=](Tape& t, int self) {
    const auto g = as_mat(t.grad(self), rows, o);
    if (t.requires_grad(iw)) as_mat(t.grad_buffer(iw), kk, o).noalias() += as_mat(*cols, rows, kk).transpose() * g;
    if (!t.requires_grad(ixd)) return;
    RowMat dcols = g * as_mat(t.value(iw), kk, o).transpose();
    float* gx = t.grad_buffer(ixd).ptr();
    for (int b = 0; b < n; ++b)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          const float* row = dcols.data() + (static_cast<std::size_t>((b * ho + oy) * wo + ox)) * kk;
          for (int ky = 0; ky < k; ++ky) {
            const int iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < k; ++kx) {
              const int ix = ox * stride - pad + kx;
              if (ix < 0 || ix >= wd) continue;
              float* dst = gx + ((static_cast<std::size_t>(b) * h + iy) * wd + ix) * c;
              const float* src = row + (ky * k + kx) * c;
              for (int ch = 0; ch < c; ++ch) dst[ch] += src[ch];
            }
          }
        }
  });
}

Var avg_pool2(const Var& x) {
  require_rank(x, 4, "avg_pool2");
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (h % 2 || w % 2) throw DimensionError("avg_pool2: spatial size must be even");
  const int ho = h / 2, wo = w / 2;
  Tensor y({n, ho, wo, c});
  const float* xs = x.value().ptr();
  for (int b = 0; b < n; ++b)
    for (int oy = 0; oy < ho; ++oy)
      for (int ox = 0; ox < wo; ++ox)
        for (int ch = 0; ch < c; ++ch) {
          float s = 0.0f;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              s += xs[((static_cast<std::size_t>(b) * h + 2 * oy + dy) * w + 2 * ox + dx) * c + ch];
          y[((static_cast<std::size_t>(b) * ho + oy) * wo + ox) * c + ch] = 0.25f * s;
        }
  const int ix = x.id();
  return tape_of(x).record(std::move(y), {ix}, [=](Tape& t, int self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (int b = 0; b < n; ++b)
      for (int iy = 0; iy < h; ++iy)
        for (int ixx = 0; ixx < w; ++ixx)
          for (int ch = 0; ch < c; ++ch)
            gx[((static_cast<std::size_t>(b) * h + iy) * w + ixx) * c + ch] +=
                0.25f * g[((static_cast<std::size_t>(b) * ho + iy / 2) * wo + ixx / 2) * c + ch];
  });
}

Var global_avg_pool(const Var& x) {
  require_rank(x, 4, "global_avg_pool");
  const int n = x.dim(0), hw = x.dim(1) * x.dim(2), c = x.dim(3);
  Tensor y({n, c});
  const float* xs = x.value().ptr();
  const float inv = 1.0f / static_cast<float>(hw);
  for (int b = 0; b < n; ++b)
    for (int p = 0; p < hw; ++p)
      for (int ch = 0; ch < c; ++ch) y[static_cast<std::size_t>(b) * c + ch] += xs[(static_cast<std::size_t>(b) * hw + p) * c + ch];
  for (float& v : y.data()) v *= inv;
  const int ix = x.id();
  return tape_of(x).record(std::move(y), {ix}, [=](Tape& t, int self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (int b = 0; b < n; ++b)
      for (int p = 0; p < hw; ++p)
        for (int ch = 0; ch < c; ++ch)
          gx[(static_cast<std::size_t>(b) * hw + p) * c + ch] += inv * g[static_cast<std::size_t>(b) * c + ch];
  });
}

Var upsample2(const Var& x) {
  require_rank(x, 4, "upsample2");
  const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  Tensor y({n, 2 * h, 2 * w, c});
  const float* xs = x.value().ptr();
  for (int b = 0; b < n; ++b)
    for (int oy = 0; oy < 2 * h; ++oy)
      for (int ox = 0; ox < 2 * w; ++ox)
        std::copy_n(xs + ((static_cast<std::size_t>(b) * h + oy / 2) * w + ox / 2) * c, c,
                    y.ptr() + ((static_cast<std::size_t>(b) * 2 * h + oy) * 2 * w + ox) * c);
  const int ix = x.id();
  return tape_of(x).record(std::move(y), {ix}, [=](Tape& t, int self) {
    if (!t.requires_grad(ix)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad_buffer(ix);
    for (int b = 0; b < n; ++b)
      for (int oy = 0; oy < 2 * h; ++oy)
        for (int ox = 0; ox < 2 * w; ++ox)
          for (int ch = 0; ch < c; ++ch)
            gx[((static_cast<std::size_t>(b) * h + oy / 2) * w + ox / 2) * c + ch] +=
                g[((static_cast<std::size_t>(b) * 2 * h + oy) * 2 * w + ox) * c + ch];
  });
}

Var mse(const Var& pred, const Tensor& target) {
  if (pred.shape() != target.shape())
    throw DimensionError("mse: prediction " + shape_str(pred.shape()) + " vs target " + shape_str(target.shape()));
  const Tensor& p = pred.value();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - target[i];
    s += d * d;
  }
  const float inv = 1.0f / static_cast<float>(p.size());
  const int ip = pred.id();
  return tape_of(pred).record(Tensor::scalar(static_cast<float>(s) * inv), {ip},
                              [ip, inv, target](Tape& t, int self) {
                                if (!t.requires_grad(ip)) return;
                                const float g = t.grad(self)[0];
                                const Tensor& p = t.value(ip);
                                Tensor& gp = t.grad_buffer(ip);
                                for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * 2.0f * inv * (p[i] - target[i]);
                              });
}

Var bce_with_logits(const Var& logits, const Tensor& targets, const Tensor& weights) {
  const Tensor& z = logits.value();
  if (z.size() != targets.size() || z.size() != weights.size())
    throw DimensionError("bce_with_logits: logits, targets and weights must have equal size");
  double wsum = 0.0, loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (weights[i] == 0.0f) continue;
    const double x = z[i], y = targets[i];
    // max(x,0) - x*y + log(1 + exp(-|x|))
    loss += weights[i] * (std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x))));
    wsum += weights[i];
  }
  if (wsum <= 0.0) throw UsageError("bce_with_logits: all weights are zero");
  const float inv = static_cast<float>(1.0 / wsum);
  const int iz = logits.id();
  return tape_of(logits).record(
      Tensor::scalar(static_cast<float>(loss) * inv), {iz}, [iz, inv, targets, weights](Tape& t, int self) {
        if (!t.requires_grad(iz)) return;
        const float g = t.grad(self)[0];
        const Tensor& z = t.value(iz);
        Tensor& gz = t.grad_buffer(iz);
        for (std::size_t i = 0; i < z.size(); ++i) {
          if (weights[i] == 0.0f) continue;
          const float s = z[i] >= 0.0f ? 1.0f / (1.0f + std::exp(-z[i])) : std::exp(z[i]) / (1.0f + std::exp(z[i]));
          gz[i] += g * inv * weights[i] * (s - targets[i]);
        }
      });
}

}  // namespace rlrn::ad
