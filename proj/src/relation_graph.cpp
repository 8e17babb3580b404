#include "rlrn/relation_graph.hpp"

#include <cmath>
#include <memory>

#include "rlrn/errors.hpp"

namespace rlrn::model {

using namespace rlrn::ad;

float edge_weight(double distance, double range) {
  if (!(range > 0.0)) throw UsageError("graph range must be positive");
  return distance <= range ? static_cast<float>((range - distance) / range) : 0.0f;
}

AdjacencyGraph build_local_graph(std::span<const std::array<float, 2>> positions, double range) {
  AdjacencyGraph g{static_cast<int>(positions.size()), {}};
  g.e.assign(static_cast<std::size_t>(g.n) * g.n, 0.0f);
  for (int i = 0; i < g.n; ++i) {
    g.at(i, i) = 1.0f;
    for (int j = i + 1; j < g.n; ++j) {
      const double dx = positions[i][0] - positions[j][0], dy = positions[i][1] - positions[j][1];
      g.at(i, j) = g.at(j, i) = edge_weight(std::hypot(dx, dy), range);
    }
  }
  return g;
}

AdjacencyGraph build_star_graph(std::span<const std::array<float, 2>> positions, double range) {
  if (positions.empty()) throw UsageError("build_star_graph: the ego node is required");
  const AdjacencyGraph local = build_local_graph(positions, range);
  AdjacencyGraph g{local.n, std::vector<float>(local.e.size(), 0.0f)};
  for (int j = 0; j < g.n; ++j) g.at(0, j) = local.at(0, j);
  return g;
}

void append_graph(AttentionGraph& out, const AdjacencyGraph& g, int row_offset, GatTarget target) {
  if (g.n <= 0 || g.e.size() != static_cast<std::size_t>(g.n) * g.n) throw DimensionError("append_graph: malformed graph");
  const int rows = target == GatTarget::AllNodes ? g.n : 1;
  for (int i = 0; i < rows; ++i) {
    out.targets.push_back(row_offset + i);
    for (int j = 0; j < g.n; ++j) {
      const float e = g.at(i, j);
      if (e > 0.0f) {
        out.neighbors.push_back(row_offset + j);
        out.weights.push_back(e);
      }
    }
    out.offsets.push_back(static_cast<int>(out.neighbors.size()));
  }
  out.nodes = std::max(out.nodes, row_offset + g.n);
}

Var graph_attention(const Var& keys, const Var& queries, const Var& values, const AttentionGraph& graph,
                    const GatConfig& config) {
  const int width = config.out_dim();
  for (const Var* v : {&keys, &queries, &values})
    if (v->value().rank() != 2 || v->dim(0) != graph.nodes || v->dim(1) != width)
      throw DimensionError("graph_attention: projection " + shape_str(v->shape()) + " does not match [" +
                           std::to_string(graph.nodes) + ", " + std::to_string(width) + "]");
  if (graph.offsets.size() != graph.targets.size() + 1) throw DimensionError("graph_attention: malformed graph");

  const int targets = graph.target_count(), heads = config.heads, dh = config.head_dim;
  const Tensor &k = keys.value(), &q = queries.value(), &v = values.value();
  // Softmax weights per (edge, head), kept for the backward pass.
  auto alpha = std::make_shared<std::vector<float>>(graph.neighbors.size() * static_cast<std::size_t>(heads));
  Tensor y({targets, width});
  std::vector<double> s;
  for (int t = 0; t < targets; ++t) {
    const int i = graph.targets[static_cast<std::size_t>(t)];
    const int b = graph.offsets[static_cast<std::size_t>(t)], e = graph.offsets[static_cast<std::size_t>(t) + 1];
    if (e == b) throw EmptyNeighborhoodError("graph attention: node " + std::to_string(i) + " has no neighbours");
    s.resize(static_cast<std::size_t>(e - b));
    for (int w = 0; w < heads; ++w) {
      const float* ki = k.ptr() + (static_cast<std::size_t>(i) * width + w * dh);
      double mx = -INFINITY;
      for (int n = b; n < e; ++n) {
        const float* qj = q.ptr() + (static_cast<std::size_t>(graph.neighbors[n]) * width + w * dh);
        double dot = 0.0;
        for (int d = 0; d < dh; ++d) dot += static_cast<double>(ki[d]) * qj[d];
        if (config.normalized) dot += std::log(static_cast<double>(graph.weights[n]));
        s[n - b] = dot;
        mx = std::max(mx, dot);
      }
      double z = 0.0;
      for (double& x : s) z += (x = std::exp(x - mx));
      float* yt = &y[static_cast<std::size_t>(t) * width + w * dh];
      for (int n = b; n < e; ++n) {
        const float a = static_cast<float>(s[n - b] / z);
        (*alpha)[static_cast<std::size_t>(n) * heads + w] = a;
        const float c = config.normalized ? a : a * graph.weights[n];
        const float* vj = v.ptr() + (static_cast<std::size_t>(graph.neighbors[n]) * width + w * dh);
        for (int d = 0; d < dh; ++d) yt[d] += c * vj[d];
      }
    }
  }

  const int ik = keys.id(), iq = queries.id(), iv = values.id();
  const bool normalized = config.normalized;
  auto g = std::make_shared<const AttentionGraph>(graph);
  return keys.tape()->record(std::move(y), {ik, iq, iv}, [=](Tape& tape, int self) {
    const Tensor& gy = tape.grad(self);
    const Tensor &k = tape.value(ik), &q = tape.value(iq), &v = tape.value(iv);
    const bool need_k = tape.requires_grad(ik), need_q = tape.requires_grad(iq), need_v = tape.requires_grad(iv);
    Tensor* gk = need_k ? &tape.grad_buffer(ik) : nullptr;
    Tensor* gq = need_q ? &tape.grad_buffer(iq) : nullptr;
    Tensor* gv = need_v ? &tape.grad_buffer(iv) : nullptr;
    std::vector<float> da;
    for (int t = 0; t < g->target_count(); ++t) {
      const int i = g->targets[static_cast<std::size_t>(t)];
      const int b = g->offsets[static_cast<std::size_t>(t)], e = g->offsets[static_cast<std::size_t>(t) + 1];
      da.resize(static_cast<std::size_t>(e - b));
      for (int w = 0; w < heads; ++w) {
        const float* gt = gy.ptr() + (static_cast<std::size_t>(t) * width + w * dh);
        float dot = 0.0f;
        for (int n = b; n < e; ++n) {
          const std::size_t jo = static_cast<std::size_t>(g->neighbors[n]) * width + w * dh;
          const float a = (*alpha)[static_cast<std::size_t>(n) * heads + w];
          const float ew = normalized ? 1.0f : g->weights[n];
          float dc = 0.0f;
          for (int d = 0; d < dh; ++d) dc += gt[d] * v[jo + d];
          if (gv)
            for (int d = 0; d < dh; ++d) (*gv)[jo + d] += a * ew * gt[d];
          da[n - b] = dc * ew;
          dot += a * da[n - b];
        }
        if (!gk && !gq) continue;
        const std::size_t io = static_cast<std::size_t>(i) * width + w * dh;
        for (int n = b; n < e; ++n) {
          const std::size_t jo = static_cast<std::size_t>(g->neighbors[n]) * width + w * dh;
          const float ds = (*alpha)[static_cast<std::size_t>(n) * heads + w] * (da[n - b] - dot);
          if (gk)
            for (int d = 0; d < dh; ++d) (*gk)[io + d] += ds * q[jo + d];
          if (gq)
            for (int d = 0; d < dh; ++d) (*gq)[jo + d] += ds * k[io + d];
        }
      }
    }
  });
}

void add_gat(ParameterSet& params, const std::string& prefix, int in, const GatConfig& config, Rng& rng) {
  if (in <= 0 || config.heads <= 0 || config.head_dim <= 0) throw DimensionError("add_gat: dimensions must be positive");
  const int out = config.out_dim();
  for (const char* p : {".wk", ".wq", ".wv"}) params.add(prefix + p, xavier_uniform({in, out}, in, out, rng));
}

Var gat_layer(Tape& tape, ParameterSet& params, const std::string& prefix, const Var& x, const AttentionGraph& graph,
              const GatConfig& config) {
  Parameter& wk = params.get(prefix + ".wk");
  if (x.value().rank() != 2 || x.dim(1) != wk.value.dim(0))
    throw DimensionError(prefix + ": input " + shape_str(x.shape()) + " does not match projection " +
                         shape_str(wk.value.shape()));
  if (wk.value.dim(1) != config.out_dim()) throw DimensionError(prefix + ": projection width differs from head layout");
  if (x.dim(0) != graph.nodes)
    throw DimensionError(prefix + ": " + std::to_string(x.dim(0)) + " feature rows for a graph of " +
                         std::to_string(graph.nodes) + " nodes");
  const Var k = matmul(x, tape.param(wk));
  const Var q = matmul(x, tape.param(params.get(prefix + ".wq")));
  const Var v = matmul(x, tape.param(params.get(prefix + ".wv")));
  return graph_attention(k, q, v, graph, config);
}

}  // namespace rlrn::model
