#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "reference.hpp"
#include "rlrn/errors.hpp"
#include "rlrn/relation_graph.hpp"

using namespace rlrn;
using namespace rlrn::ad;
using namespace rlrn::model;
using Positions = std::vector<std::array<float, 2>>;

namespace {

std::mt19937_64 rng_for(const char* name) { return std::mt19937_64(fnv1a64(name)); }

Positions random_positions(int n, std::mt19937_64& rng, double spread = 12.0) {
  std::uniform_real_distribution<float> u(static_cast<float>(-spread), static_cast<float>(spread));
  Positions p{{0.0f, 0.0f}};
  for (int i = 1; i < n; ++i) p.push_back({u(rng), u(rng)});
  return p;
}

AttentionGraph single(const AdjacencyGraph& g, GatTarget target) {
  AttentionGraph a;
  append_graph(a, g, 0, target);
  return a;
}

// Double-precision attention over a prebuilt neighbourhood list.
ref::Vec attention_ref(const ref::Vec& k, const ref::Vec& q, const ref::Vec& v, const AttentionGraph& g, const GatConfig& c) {
  const int width = c.out_dim();
  ref::Vec y(static_cast<std::size_t>(g.target_count()) * width, 0.0);
  for (int t = 0; t < g.target_count(); ++t) {
    const int i = g.targets[t], b = g.offsets[t], e = g.offsets[t + 1];
    for (int w = 0; w < c.heads; ++w) {
      std::vector<double> s;
      for (int n = b; n < e; ++n) {
        double dot = 0.0;
        for (int d = 0; d < c.head_dim; ++d) dot += k[i * width + w * c.head_dim + d] * q[g.neighbors[n] * width + w * c.head_dim + d];
        s.push_back(c.normalized ? dot + std::log(static_cast<double>(g.weights[n])) : dot);
      }
      const double mx = *std::max_element(s.begin(), s.end());
      double z = 0.0;
      for (double& x : s) z += (x = std::exp(x - mx));
      for (int n = b; n < e; ++n) {
        const double a = s[n - b] / z * (c.normalized ? 1.0 : g.weights[n]);
        for (int d = 0; d < c.head_dim; ++d)
          y[t * width + w * c.head_dim + d] += a * v[g.neighbors[n] * width + w * c.head_dim + d];
      }
    }
  }
  return y;
}

}  // namespace

TEST(Adjacency, FormulaValues) {
  EXPECT_EQ(edge_weight(0.0, 10.0), 1.0f);
  EXPECT_EQ(edge_weight(10.0, 10.0), 0.0f);
  EXPECT_EQ(edge_weight(5.0, 10.0), 0.5f);
  EXPECT_EQ(edge_weight(10.5, 10.0), 0.0f);
  EXPECT_THROW(edge_weight(1.0, 0.0), UsageError);

  const Positions p{{0, 0}, {3, 4}, {0, 20}};
  const auto g = build_local_graph(p, 10.0);
  EXPECT_EQ(g.at(0, 1), 0.5f);
  EXPECT_EQ(g.at(0, 2), 0.0f);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(g.at(i, i), 1.0f);
}

TEST(Adjacency, LocalGraphSymmetricAndBounded) {
  auto rng = rng_for("local-sym");
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = build_local_graph(random_positions(7, rng), 10.0);
    for (int i = 0; i < g.n; ++i)
      for (int j = 0; j < g.n; ++j) {
        EXPECT_EQ(g.at(i, j), g.at(j, i));
        EXPECT_GE(g.at(i, j), 0.0f);
        EXPECT_LE(g.at(i, j), 1.0f);
      }
  }
}

TEST(Adjacency, StarGraph) {
  const Positions ego{{0, 0}};
  const auto g0 = build_star_graph(ego, 10.0);
  ASSERT_EQ(g0.n, 1);
  EXPECT_EQ(g0.at(0, 0), 1.0f);

  auto rng = rng_for("star");
  const auto p = random_positions(6, rng);
  const auto star = build_star_graph(p, 10.0), local = build_local_graph(p, 10.0);
  for (int j = 0; j < star.n; ++j) EXPECT_EQ(star.at(0, j), local.at(0, j));
  for (int i = 1; i < star.n; ++i)
    for (int j = 0; j < star.n; ++j) EXPECT_EQ(star.at(i, j), 0.0f);
}

TEST(Attention, SingleNodeReturnsValueProjection) {
  auto rng = rng_for("single-node");
  Rng init(3);
  ParameterSet params;
  const GatConfig cfg{1, 5, false};
  add_gat(params, "g", 4, cfg, init);
  Tape tape;
  const Tensor x = ref::random_tensor({1, 4}, rng);
  const Positions p{{0, 0}};
  const Var y = gat_layer(tape, params, "g", tape.constant(x), single(build_local_graph(p, 10.0), GatTarget::AllNodes), cfg);
  const Var fv = matmul(tape.constant(x), tape.param(params.get("g.wv")));
  EXPECT_EQ(y.value(), fv.value());
}

TEST(Attention, SymmetricNodesGetIdenticalOutputs) {
  Rng init(4);
  ParameterSet params;
  const GatConfig cfg;
  add_gat(params, "g", 6, cfg, init);
  auto rng = rng_for("sym-nodes");
  const Tensor row = ref::random_tensor({1, 6}, rng);
  Tensor x({2, 6});
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 6; ++c) x.at(r, c) = row.at(0, c);
  const Positions p{{0, 0}, {3, 1}};
  Tape tape;
  const Tensor y = gat_layer(tape, params, "g", tape.constant(x), single(build_local_graph(p, 10.0), GatTarget::AllNodes), cfg).value();
  for (int c = 0; c < y.dim(1); ++c) EXPECT_NEAR(y.at(0, c), y.at(1, c), 1e-6);  // summation order differs per node
}

TEST(Attention, WeightsSumToOneBeforeScaling) {
  // Coincident nodes (all e = 1) with unit values: each output equals the sum of the softmax weights.
  auto rng = rng_for("attn-sum");
  const GatConfig cfg{3, 2, false};
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 6;
    const Positions p(static_cast<std::size_t>(n), {1.0f, 1.0f});
    const auto g = single(build_local_graph(p, 10.0), GatTarget::AllNodes);
    Tape tape;
    const Var k = tape.constant(ref::random_tensor({n, cfg.out_dim()}, rng, -3, 3));
    const Var q = tape.constant(ref::random_tensor({n, cfg.out_dim()}, rng, -3, 3));
    const Var v = tape.constant(Tensor({n, cfg.out_dim()}, 1.0f));
    const Tensor y = graph_attention(k, q, v, g, cfg).value();
    for (float s : y.data()) EXPECT_NEAR(s, 1.0f, 1e-6);
  }
}

TEST(Attention, ZeroWeightNeighbourIsIrrelevant) {
  Rng init(5);
  ParameterSet params;
  const GatConfig cfg;
  add_gat(params, "g", 6, cfg, init);
  auto rng = rng_for("zero-edge");
  const Positions near{{0, 0}, {4, 1}, {-3, 2}};
  Positions far = near;
  far.push_back({40, 40});
  const Tensor x3 = ref::random_tensor({3, 6}, rng);
  Tensor x4({4, 6});
  std::copy(x3.data().begin(), x3.data().end(), x4.data().begin());
  for (int c = 0; c < 6; ++c) x4.at(3, c) = 5.0f;

  for (GatTarget mode : {GatTarget::AllNodes, GatTarget::EgoOnly}) {
    const auto build = mode == GatTarget::AllNodes ? build_local_graph : build_star_graph;
    Tape tape;
    const Tensor a = gat_layer(tape, params, "g", tape.constant(x3), single(build(near, 10.0), mode), cfg).value();
    const Tensor b = gat_layer(tape, params, "g", tape.constant(x4), single(build(far, 10.0), mode), cfg).value();
    for (int r = 0; r < a.dim(0); ++r)
      for (int c = 0; c < a.dim(1); ++c) EXPECT_EQ(a.at(r, c), b.at(r, c));
  }
}

TEST(Attention, EgoOutputInvariantToNeighbourOrder) {
  Rng init(6);
  ParameterSet params;
  const GatConfig cfg;
  add_gat(params, "g", 8, cfg, init);
  auto rng = rng_for("perm");
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6;
    const Positions p = random_positions(n, rng, 7.0);
    const Tensor x = ref::random_tensor({n, 8}, rng);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin() + 1, perm.end(), rng);
    Positions pp(n);
    Tensor xp({n, 8});
    for (int i = 0; i < n; ++i) {
      pp[i] = p[perm[i]];
      for (int c = 0; c < 8; ++c) xp.at(i, c) = x.at(perm[i], c);
    }
    Tape tape;
    const Tensor a = gat_layer(tape, params, "g", tape.constant(x), single(build_star_graph(p, 10.0), GatTarget::EgoOnly), cfg).value();
    const Tensor b = gat_layer(tape, params, "g", tape.constant(xp), single(build_star_graph(pp, 10.0), GatTarget::EgoOnly), cfg).value();
    for (int c = 0; c < a.dim(1); ++c) EXPECT_NEAR(a.at(0, c), b.at(0, c), 1e-6);

    // All-nodes mode is equivariant.
    const Tensor ya = gat_layer(tape, params, "g", tape.constant(x), single(build_local_graph(p, 10.0), GatTarget::AllNodes), cfg).value();
    const Tensor yb = gat_layer(tape, params, "g", tape.constant(xp), single(build_local_graph(pp, 10.0), GatTarget::AllNodes), cfg).value();
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < ya.dim(1); ++c) EXPECT_NEAR(yb.at(i, c), ya.at(perm[i], c), 1e-6);
  }
}

TEST(Attention, EmptyNeighbourhoodAndShapeErrors) {
  AttentionGraph g;
  g.nodes = 1;
  g.targets = {0};
  g.offsets = {0, 0};
  const GatConfig cfg{1, 2, false};
  Tape tape;
  const Var z = tape.constant(Tensor({1, 2}, 1.0f));
  EXPECT_THROW(graph_attention(z, z, z, g, cfg), EmptyNeighborhoodError);

  Rng init(1);
  ParameterSet params;
  add_gat(params, "g", 4, cfg, init);
  const Positions p{{0, 0}, {1, 1}};
  const auto two = single(build_local_graph(p, 10.0), GatTarget::AllNodes);
  EXPECT_THROW(gat_layer(tape, params, "g", tape.constant(Tensor({2, 3})), two, cfg), DimensionError);
  EXPECT_THROW(gat_layer(tape, params, "g", tape.constant(Tensor({3, 4})), two, cfg), DimensionError);
}

class AttentionGrad : public ::testing::TestWithParam<std::tuple<bool, GatTarget>> {};

TEST_P(AttentionGrad, MatchesDoubleReference) {
  const auto [normalized, mode] = GetParam();
  auto rng = rng_for("attn-grad");
  const GatConfig cfg{2, 3, normalized};
  // Two stacked samples, as in a mini-batch.
  AttentionGraph g;
  const Positions a = random_positions(4, rng, 6.0), b = random_positions(3, rng, 6.0);
  const auto build = mode == GatTarget::AllNodes ? build_local_graph : build_star_graph;
  append_graph(g, build(a, 10.0), 0, mode);
  append_graph(g, build(b, 10.0), 4, mode);
  const int n = 7;
  const std::vector<Tensor> inputs{ref::random_tensor({n, 6}, rng), ref::random_tensor({n, 6}, rng), ref::random_tensor({n, 6}, rng)};
  const auto result = ref::check_gradients(
      inputs, [&](Tape&, const std::vector<Var>& x) { return graph_attention(x[0], x[1], x[2], g, cfg); },
      [&](const std::vector<ref::Vec>& x) { return attention_ref(x[0], x[1], x[2], g, cfg); });
  EXPECT_LT(result.worst_relative, 1e-4);
  EXPECT_LT(result.forward_error, 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Modes, AttentionGrad,
                         ::testing::Combine(::testing::Bool(), ::testing::Values(GatTarget::AllNodes, GatTarget::EgoOnly)));

TEST(Attention, LayerGradientThroughProjections) {
  auto rng = rng_for("gat-layer-grad");
  const GatConfig cfg{2, 3, false};
  const Positions p = random_positions(5, rng, 6.0);
  const auto g = single(build_local_graph(p, 10.0), GatTarget::AllNodes);
  const std::vector<Tensor> inputs{ref::random_tensor({5, 4}, rng), ref::random_tensor({4, 6}, rng), ref::random_tensor({4, 6}, rng),
                                   ref::random_tensor({4, 6}, rng)};
  const auto result = ref::check_gradients(
      inputs,
      [&](Tape&, const std::vector<Var>& x) { return graph_attention(matmul(x[0], x[1]), matmul(x[0], x[2]), matmul(x[0], x[3]), g, cfg); },
      [&](const std::vector<ref::Vec>& x) {
        return attention_ref(ref::matmul(x[0], x[1], 5, 4, 6), ref::matmul(x[0], x[2], 5, 4, 6), ref::matmul(x[0], x[3], 5, 4, 6), g, cfg);
      });
  EXPECT_LT(result.worst_relative, 1e-4);
}
