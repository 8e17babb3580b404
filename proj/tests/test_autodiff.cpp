#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "reference.hpp"
#include "rlrn/checkpoint.hpp"
#include "rlrn/errors.hpp"
#include "rlrn/nn.hpp"

using namespace rlrn;
using namespace rlrn::ad;
using ref::Vec;

namespace {

constexpr double kGradTol = 1e-4;

std::mt19937_64 rng_for(const char* name) { return std::mt19937_64(fnv1a64(name)); }

Vec unary_ref(const Vec& x, double (*f)(double)) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return y;
}

}  // namespace

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor({0, 2}), DimensionError);
}

TEST(Matmul, IdentityAndZero) {
  Tape tape;
  auto rng = rng_for("matmul-id");
  const Tensor a = ref::random_tensor({3, 4}, rng);
  Tensor eye({4, 4});
  for (int i = 0; i < 4; ++i) eye.at(i, i) = 1.0f;
  EXPECT_EQ(matmul(tape.constant(a), tape.constant(eye)).value(), a);
  const Var z = matmul(tape.constant(Tensor::from_rows({{1, 2}, {3, 4}})), tape.constant(Tensor({2, 1})));
  EXPECT_EQ(z.value(), Tensor({2, 1}));
  EXPECT_THROW(matmul(tape.constant(Tensor({2, 3})), tape.constant(Tensor({2, 3}))), DimensionError);
}

TEST(Matmul, GradientMatchesFiniteDifferences) {
  auto rng = rng_for("matmul");
  const auto r = ref::check_gradients(
      {ref::random_tensor({3, 5}, rng), ref::random_tensor({5, 4}, rng)},
      [](Tape&, const std::vector<Var>& v) { return matmul(v[0], v[1]); },
      [](const std::vector<Vec>& x) { return ref::matmul(x[0], x[1], 3, 5, 4); });
  EXPECT_LT(r.worst_relative, kGradTol);
  EXPECT_LT(r.forward_error, 1e-5);
}

TEST(Elementwise, FixedPoints) {
  Tape tape;
  EXPECT_EQ(ad::tanh(tape.constant(Tensor::scalar(0))).value().item(), 0.0f);
  EXPECT_EQ(sigmoid(tape.constant(Tensor::scalar(0))).value().item(), 0.5f);
  EXPECT_THROW(add(tape.constant(Tensor({2, 3})), tape.constant(Tensor({3, 2}))), DimensionError);
  EXPECT_THROW(mul(tape.constant(Tensor({2})), tape.constant(Tensor({3}))), DimensionError);
}

TEST(Elementwise, ReluGradientIsStep) {
  Tape tape;
  ParameterSet ps;
  auto& p = ps.add("x", Tensor({4}, {-2.0f, -0.5f, 0.5f, 3.0f}));
  tape.backward(sum(relu(tape.param(p))));
  EXPECT_EQ(p.grad, Tensor({4}, {0, 0, 1, 1}));
}

struct UnaryCase {
  const char* name;
  Var (*op)(const Var&);
  double (*f)(double);
};

class UnaryGrad : public ::testing::TestWithParam<UnaryCase> {};

TEST_P(UnaryGrad, MatchesFiniteDifferences) {
  const auto c = GetParam();
  auto rng = rng_for(c.name);
  const auto r = ref::check_gradients(
      {ref::random_nonzero({4, 6}, rng)}, [&](Tape&, const std::vector<Var>& v) { return c.op(v[0]); },
      [&](const std::vector<Vec>& x) { return unary_ref(x[0], c.f); });
  EXPECT_LT(r.worst_relative, kGradTol) << c.name;
  EXPECT_LT(r.forward_error, 1e-5) << c.name;
}

INSTANTIATE_TEST_SUITE_P(
    Ops, UnaryGrad,
    ::testing::Values(UnaryCase{"tanh", &ad::tanh, [](double x) { return std::tanh(x); }},
                      UnaryCase{"sigmoid", &ad::sigmoid, [](double x) { return ref::sigmoid(x); }},
                      UnaryCase{"relu", &ad::relu, [](double x) { return x > 0 ? x : 0.0; }},
                      UnaryCase{"exp", &ad::exp, [](double x) { return std::exp(x); }},
                      UnaryCase{"square", &ad::square, [](double x) { return x * x; }},
                      UnaryCase{"scale", [](const Var& v) { return scale(v, -2.5f); },
                                [](double x) { return -2.5 * x; }},
                      UnaryCase{"add_scalar", [](const Var& v) { return add_scalar(v, 0.75f); },
                                [](double x) { return x + 0.75; }}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(Elementwise, BinaryGradients) {
  auto rng = rng_for("binary");
  const Tensor a = ref::random_tensor({3, 4}, rng), b = ref::random_tensor({3, 4}, rng), s = ref::random_tensor({1}, rng);
  auto combine = [](const Vec& x, const Vec& y, auto f) {
    Vec o(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) o[i] = f(x[i], y.size() == 1 ? y[0] : y[i]);
    return o;
  };
  const auto add_r = ref::check_gradients({a, b}, [](Tape&, const auto& v) { return add(v[0], v[1]); },
                                          [&](const auto& x) { return combine(x[0], x[1], std::plus<>()); });
  const auto sub_r = ref::check_gradients({a, b}, [](Tape&, const auto& v) { return sub(v[0], v[1]); },
                                          [&](const auto& x) { return combine(x[0], x[1], std::minus<>()); });
  const auto mul_r = ref::check_gradients({a, b}, [](Tape&, const auto& v) { return mul(v[0], v[1]); },
                                          [&](const auto& x) { return combine(x[0], x[1], std::multiplies<>()); });
  const auto smul_r = ref::check_gradients({a, s}, [](Tape&, const auto& v) { return mul(v[0], v[1]); },
                                           [&](const auto& x) { return combine(x[0], x[1], std::multiplies<>()); });
  const auto sadd_r = ref::check_gradients({s, a}, [](Tape&, const auto& v) { return add(v[0], v[1]); },
                                           [&](const auto& x) { return combine(x[1], x[0], std::plus<>()); });
  for (const auto& r : {add_r, sub_r, mul_r, smul_r, sadd_r}) EXPECT_LT(r.worst_relative, kGradTol);
}

TEST(Elementwise, AddBiasAndTranspose) {
  auto rng = rng_for("bias");
  const auto bias_r = ref::check_gradients(
      {ref::random_tensor({5, 3}, rng), ref::random_tensor({3}, rng)},
      [](Tape&, const auto& v) { return add_bias(v[0], v[1]); },
      [](const auto& x) {
        Vec o(x[0]);
        for (std::size_t i = 0; i < o.size(); ++i) o[i] += x[1][i % 3];
        return o;
      });
  EXPECT_LT(bias_r.worst_relative, kGradTol);
  const auto tr = ref::check_gradients(
      {ref::random_tensor({2, 3}, rng)}, [](Tape&, const auto& v) { return transpose(v[0]); },
      [](const auto& x) {
        Vec o(6);
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 3; ++j) o[j * 2 + i] = x[0][i * 3 + j];
        return o;
      });
  EXPECT_LT(tr.worst_relative, kGradTol);
}

TEST(Elementwise, FiniteOnLargeInputs) {
  Tape tape;
  Tensor x({6}, {-1000.0f, -50.0f, -1.0f, 1.0f, 50.0f, 1000.0f});
  const Var v = tape.constant(x);
  EXPECT_TRUE(ad::tanh(v).value().all_finite());
  EXPECT_TRUE(sigmoid(v).value().all_finite());
  EXPECT_TRUE(relu(v).value().all_finite());
  EXPECT_TRUE(softmax(v).value().all_finite());
  EXPECT_TRUE(bce_with_logits(v, Tensor({6}, 1.0f), Tensor({6}, 1.0f)).value().all_finite());
}

TEST(Reductions, SumAndMean) {
  auto rng = rng_for("reduce");
  const auto s = ref::check_gradients({ref::random_tensor({3, 3}, rng)}, [](Tape&, const auto& v) { return sum(v[0]); },
                                      [](const auto& x) {
                                        double a = 0;
                                        for (double e : x[0]) a += e;
                                        return Vec{a};
                                      });
  const auto m = ref::check_gradients({ref::random_tensor({3, 3}, rng)}, [](Tape&, const auto& v) { return mean(v[0]); },
                                      [](const auto& x) {
                                        double a = 0;
                                        for (double e : x[0]) a += e;
                                        return Vec{a / 9.0};
                                      });
  EXPECT_LT(s.worst_relative, kGradTol);
  EXPECT_LT(m.worst_relative, kGradTol);
}

TEST(Softmax, Examples) {
  Tape tape;
  const Var even = softmax(tape.constant(Tensor({2}, {0.0f, 0.0f})));
  EXPECT_FLOAT_EQ(even.value()[0], 0.5f);
  EXPECT_FLOAT_EQ(even.value()[1], 0.5f);

  const Var single = softmax(tape.constant(Tensor({3}, {4.0f, -1.0f, 2.0f})), {false, true, false});
  EXPECT_EQ(single.value(), Tensor({3}, {0.0f, 1.0f, 0.0f}));

  const Var three = softmax(tape.constant(Tensor({3}, {1.0f, 2.0f, 3.0f})));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(three.value()[i], std::exp(i + 1.0) / z, 1e-6);

  EXPECT_THROW(softmax(tape.constant(Tensor({2})), {false, false}), EmptyNeighborhoodError);
}

TEST(Softmax, SumsToOneOverUnmaskedEntries) {
  auto rng = rng_for("softmax-sum");
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    Tape tape;
    const Tensor x = ref::random_tensor({7}, rng, -30.0, 30.0);
    std::vector<bool> mask(7);
    for (auto&& m : mask) m = keep(rng);
    mask[static_cast<std::size_t>(trial % 7)] = true;
    const Var y = softmax(tape.constant(x), mask);
    double total = 0.0;
    for (int i = 0; i < 7; ++i) {
      EXPECT_GE(y.value()[i], 0.0f);
      if (!mask[static_cast<std::size_t>(i)]) {
        EXPECT_EQ(y.value()[i], 0.0f);
      }
      total += y.value()[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Softmax, MaskedRowGradient) {
  auto rng = rng_for("softmax-grad");
  const std::vector<std::uint8_t> mask{1, 0, 1, 1, 1, 1, 0, 1, 0, 1, 1, 1};
  const auto r = ref::check_gradients(
      {ref::random_tensor({3, 4}, rng, -2, 2)}, [&](Tape&, const auto& v) { return softmax_rows(v[0], mask); },
      [&](const auto& x) {
        Vec o(12, 0.0);
        for (int row = 0; row < 3; ++row) {
          double mx = -1e300, z = 0;
          for (int c = 0; c < 4; ++c)
            if (mask[row * 4 + c]) mx = std::max(mx, x[0][row * 4 + c]);
          for (int c = 0; c < 4; ++c)
            if (mask[row * 4 + c]) z += std::exp(x[0][row * 4 + c] - mx);
          for (int c = 0; c < 4; ++c)
            if (mask[row * 4 + c]) o[row * 4 + c] = std::exp(x[0][row * 4 + c] - mx) / z;
        }
        return o;
      });
  EXPECT_LT(r.worst_relative, kGradTol);
  EXPECT_LT(r.forward_error, 1e-6);
}

TEST(Concat, ShapesAndIdentity) {
  Tape tape;
  const Var x = tape.constant(Tensor({2}, {1, 2}));
  const Var one[] = {x};
  EXPECT_EQ(concat(one, 0).value(), x.value());
  const Var parts[] = {x, tape.constant(Tensor({3}, {3, 4, 5}))};
  EXPECT_EQ(concat(parts, 0).shape(), (Shape{5}));
  const Var bad[] = {tape.constant(Tensor({2, 2})), tape.constant(Tensor({3, 3}))};
  EXPECT_THROW(concat(bad, 1), DimensionError);
}

TEST(Concat, GradientRoutesToSourceOnly) {
  // Perturbing one output slice must change only the matching input's gradient.
  Tape tape;
  ParameterSet ps;
  auto& a = ps.add("a", Tensor({2, 2}, 1.0f));
  auto& b = ps.add("b", Tensor({2, 3}, 1.0f));
  const Var parts[] = {tape.param(a), tape.param(b)};
  const Var y = concat(parts, 1);
  Tensor w({2, 5});
  w.at(1, 3) = 1.0f;  // inside b's slice
  tape.backward(sum(mul(y, tape.constant(w))));
  EXPECT_EQ(a.grad, Tensor({2, 2}));
  Tensor expect({2, 3});
  expect.at(1, 1) = 1.0f;
  EXPECT_EQ(b.grad, expect);

  auto rng = rng_for("concat");
  const auto r = ref::check_gradients(
      {ref::random_tensor({2, 3}, rng), ref::random_tensor({4, 3}, rng)},
      [](Tape&, const auto& v) { return concat(std::vector<Var>{v[0], v[1]}, 0); },
      [](const auto& x) {
        Vec o(x[0]);
        o.insert(o.end(), x[1].begin(), x[1].end());
        return o;
      });
  EXPECT_LT(r.worst_relative, kGradTol);
}

TEST(ShapeOps, SliceReshapeGather) {
  auto rng = rng_for("shape-ops");
  const auto sl = ref::check_gradients({ref::random_tensor({3, 5}, rng)},
                                       [](Tape&, const auto& v) { return slice(v[0], 1, 1, 4); },
                                       [](const auto& x) {
                                         Vec o;
                                         for (int r = 0; r < 3; ++r)
                                           for (int c = 1; c < 4; ++c) o.push_back(x[0][r * 5 + c]);
                                         return o;
                                       });
  const auto ga = ref::check_gradients({ref::random_tensor({4, 2}, rng)},
                                       [](Tape&, const auto& v) { return gather_rows(v[0], {3, 0, 3}); },
                                       [](const auto& x) {
                                         Vec o;
                                         for (int r : {3, 0, 3})
                                           for (int c = 0; c < 2; ++c) o.push_back(x[0][r * 2 + c]);
                                         return o;
                                       });
  const auto rs = ref::check_gradients({ref::random_tensor({2, 6}, rng)},
                                       [](Tape&, const auto& v) { return ad::tanh(reshape(v[0], {3, 4})); },
                                       [](const auto& x) { return unary_ref(x[0], [](double e) { return std::tanh(e); }); });
  EXPECT_LT(sl.worst_relative, kGradTol);
  EXPECT_LT(ga.worst_relative, kGradTol);
  EXPECT_LT(rs.worst_relative, kGradTol);
  Tape tape;
  EXPECT_THROW(reshape(tape.constant(Tensor({2, 3})), {4, 2}), DimensionError);
}

TEST(Conv, MatchesDirectConvolution) {
  auto rng = rng_for("conv");
  for (const auto& [stride, pad] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 0}}) {
    const auto r = ref::check_gradients(
        {ref::random_tensor({2, 6, 6, 3}, rng), ref::random_tensor({3 * 3 * 3, 4}, rng)},
        [=](Tape&, const auto& v) { return conv2d(v[0], v[1], 3, stride, pad); },
        [=](const auto& x) { return ref::conv2d(x[0], x[1], 2, 6, 6, 3, 4, 3, stride, pad); });
    EXPECT_LT(r.worst_relative, kGradTol) << "stride " << stride << " pad " << pad;
    EXPECT_LT(r.forward_error, 1e-5);
  }
}

TEST(Conv, PoolingAndUpsampling) {
  auto rng = rng_for("pool");
  const auto ap = ref::check_gradients(
      {ref::random_tensor({1, 4, 4, 2}, rng)}, [](Tape&, const auto& v) { return avg_pool2(v[0]); },
      [](const auto& x) {
        Vec o(8, 0.0);
        for (int y = 0; y < 4; ++y)
          for (int xx = 0; xx < 4; ++xx)
            for (int c = 0; c < 2; ++c) o[((y / 2) * 2 + xx / 2) * 2 + c] += 0.25 * x[0][(y * 4 + xx) * 2 + c];
        return o;
      });
  const auto gp = ref::check_gradients(
      {ref::random_tensor({2, 3, 3, 2}, rng)}, [](Tape&, const auto& v) { return global_avg_pool(v[0]); },
      [](const auto& x) {
        Vec o(4, 0.0);
        for (int b = 0; b < 2; ++b)
          for (int p = 0; p < 9; ++p)
            for (int c = 0; c < 2; ++c) o[b * 2 + c] += x[0][(b * 9 + p) * 2 + c] / 9.0;
        return o;
      });
  const auto up = ref::check_gradients(
      {ref::random_tensor({1, 2, 2, 1}, rng)}, [](Tape&, const auto& v) { return upsample2(v[0]); },
      [](const auto& x) {
        Vec o(16);
        for (int y = 0; y < 4; ++y)
          for (int xx = 0; xx < 4; ++xx) o[y * 4 + xx] = x[0][(y / 2) * 2 + xx / 2];
        return o;
      });
  EXPECT_LT(ap.worst_relative, kGradTol);
  EXPECT_LT(gp.worst_relative, kGradTol);
  EXPECT_LT(up.worst_relative, kGradTol);
}

TEST(Losses, MseAndWeightedBce) {
  auto rng = rng_for("loss");
  const Tensor target = ref::random_tensor({3, 2}, rng);
  const auto m = ref::check_gradients(
      {ref::random_tensor({3, 2}, rng)}, [&](Tape&, const auto& v) { return mse(v[0], target); },
      [&](const auto& x) {
        double a = 0;
        for (std::size_t i = 0; i < 6; ++i) a += (x[0][i] - target[i]) * (x[0][i] - target[i]);
        return Vec{a / 6.0};
      });
  EXPECT_LT(m.worst_relative, kGradTol);

  const Tensor y({5}, {0, 1, 1, 0, 1}), w({5}, {0, 1, 2, 1, 0.5f});
  const auto b = ref::check_gradients(
      {ref::random_tensor({5}, rng, -3, 3)}, [&](Tape&, const auto& v) { return bce_with_logits(v[0], y, w); },
      [&](const auto& x) {
        double a = 0, ws = 0;
        for (std::size_t i = 0; i < 5; ++i) {
          const double p = ref::sigmoid(x[0][i]);
          a -= w[i] * (y[i] * std::log(p) + (1 - y[i]) * std::log(1 - p));
          ws += w[i];
        }
        return Vec{a / ws};
      });
  EXPECT_LT(b.worst_relative, kGradTol);
  EXPECT_LT(b.forward_error, 1e-5);
}

TEST(Backward, SumOfParameterGivesOnes) {
  ParameterSet ps;
  auto& w = ps.add("w", Tensor({2, 3}, 0.3f));
  auto& unused = ps.add("u", Tensor({2}, 1.0f));
  Tape tape;
  tape.param(unused);
  tape.backward(sum(tape.param(w)));
  EXPECT_EQ(w.grad, Tensor({2, 3}, 1.0f));
  for (float g : unused.grad.data()) EXPECT_EQ(g, 0.0f);
}

TEST(Backward, RejectsNonScalarLoss) {
  ParameterSet ps;
  auto& w = ps.add("w", Tensor({2}, 1.0f));
  Tape tape;
  EXPECT_THROW(tape.backward(tape.param(w)), UsageError);
}

TEST(Backward, FrozenParameterGetsNoGradient) {
  ParameterSet ps;
  auto& w = ps.add("w", Tensor({2}, 1.0f));
  w.frozen = true;
  Tape tape;
  tape.backward(sum(tape.param(w)));
  for (float g : w.grad.data()) EXPECT_EQ(g, 0.0f);
}

TEST(Backward, ThreeLayerMlpMatchesFiniteDifferences) {
  auto rng = rng_for("mlp");
  const Tensor x = ref::random_tensor({4, 5}, rng);
  const auto r = ref::check_gradients(
      {ref::random_tensor({5, 6}, rng), ref::random_tensor({6}, rng), ref::random_tensor({6, 6}, rng),
       ref::random_tensor({6}, rng), ref::random_tensor({6, 2}, rng), ref::random_tensor({2}, rng)},
      [&](Tape& t, const auto& v) {
        Var h = ad::tanh(add_bias(matmul(t.constant(x), v[0]), v[1]));
        h = sigmoid(add_bias(matmul(h, v[2]), v[3]));
        return add_bias(matmul(h, v[4]), v[5]);
      },
      [&](const auto& p) {
        auto layer = [](const Vec& in, const Vec& w, const Vec& b, int n, int k, int m, double (*f)(double)) {
          Vec o = ref::matmul(in, w, n, k, m);
          for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(o[i] + b[i % m]);
          return o;
        };
        Vec h = layer(ref::to_vec(x), p[0], p[1], 4, 5, 6, [](double e) { return std::tanh(e); });
        h = layer(h, p[2], p[3], 4, 6, 6, &ref::sigmoid);
        return layer(h, p[4], p[5], 4, 6, 2, [](double e) { return e; });
      });
  EXPECT_LT(r.worst_relative, kGradTol);
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  ParameterSet ps;
  auto& w = ps.add("w", Tensor({3}, {1, -2, 3}));
  w.grad = Tensor({3});
  AdamState st;
  adam_step(ps, st);
  EXPECT_EQ(w.value, Tensor({3}, {1, -2, 3}));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepsMatchHandRecurrence) {
  ParameterSet ps;
  auto& w = ps.add("w", Tensor({2}, {0.5f, -0.5f}));
  AdamState st;
  const double g[2] = {0.3, -2.0};
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {0.5, -0.5};
  for (int step = 1; step <= 3; ++step) {
    w.grad = Tensor({2}, {static_cast<float>(g[0]), static_cast<float>(g[1])});
    adam_step(ps, st);
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(0.9, step)), vh = v[i] / (1 - std::pow(0.999, step));
      x[i] -= 1e-3 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(w.value[static_cast<std::size_t>(i)], x[i], 1e-6);
    }
    if (step == 1) {
      EXPECT_NEAR(std::abs(w.value[0] - 0.5), 1e-3, 1e-6);
    }
  }
}

TEST(Adam, ShapeMismatchAndFrozen) {
  ParameterSet ps;
  auto& w = ps.add("w", Tensor({2}, 1.0f));
  auto& f = ps.add("f", Tensor({2}, 1.0f));
  f.frozen = true;
  f.grad = Tensor({2}, 5.0f);
  w.grad = Tensor({2}, 1.0f);
  AdamState st;
  adam_step(ps, st);
  EXPECT_EQ(f.value, Tensor({2}, 1.0f));
  w.grad = Tensor({3}, 1.0f);
  EXPECT_THROW(adam_step(ps, st), DimensionError);
}

TEST(Adam, DeterministicAcrossRuns) {
  auto run = [] {
    Rng rng(99);
    ParameterSet ps;
    add_dense(ps, "l", 4, 3, rng);
    AdamState st;
    for (int k = 0; k < 5; ++k) {
      ps.zero_grad();
      Tape tape;
      const Var y = dense(tape, ps, "l", tape.constant(Tensor({2, 4}, 0.5f)));
      tape.backward(mean(square(y)));
      adam_step(ps, st);
    }
    return ps.get("l.w").value;
  };
  EXPECT_EQ(run(), run());
}

TEST(Xavier, BoundDeterminismAndMean) {
  const Tensor a = xavier_init(100, 100, 5);
  const double bound = std::sqrt(6.0 / 200.0);
  for (float v : a.data()) EXPECT_LE(std::abs(v), bound);
  EXPECT_EQ(a, xavier_init(100, 100, 5));
  EXPECT_NE(a, xavier_init(100, 100, 6));

  const Tensor big = xavier_init(500, 200, 11);  // 10^5 draws
  double mean = 0.0;
  for (float v : big.data()) mean += v;
  mean /= static_cast<double>(big.size());
  const double a7 = std::sqrt(6.0 / 700.0);
  const double se = a7 / std::sqrt(3.0) / std::sqrt(static_cast<double>(big.size()));
  EXPECT_LT(std::abs(mean), 3.0 * se);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(3);
  ParameterSet ps;
  add_dense(ps, "enc", 5, 4, rng);
  add_conv(ps, "conv", 3, 2, 6, rng);
  ps.get("enc.b").frozen = true;
  const auto dir = std::filesystem::temp_directory_path() / "rlrn_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "model", ps, {"unit", 42, 7});
  const Checkpoint ck = load_checkpoint(dir / "model");
  EXPECT_EQ(ck.meta.stage, "unit");
  EXPECT_EQ(ck.meta.seed, 42u);
  EXPECT_EQ(ck.meta.step, 7);
  ASSERT_EQ(ck.params.size(), ps.size());
  for (const auto& p : ps) {
    EXPECT_EQ(ck.params.get(p.name).value, p.value) << p.name;
    EXPECT_EQ(ck.params.get(p.name).frozen, p.frozen);
  }
  std::filesystem::resize_file(blob_path(dir / "model"), 12);
  EXPECT_ANY_THROW(load_checkpoint(dir / "model"));
  std::filesystem::remove_all(dir);
}
