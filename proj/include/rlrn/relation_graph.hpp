#pragma once

// Distance-decay graphs and the multi-head graph-attention operator shared by
// the confidence stage (all nodes, local graph) and the relation stage (ego
// only, star graph).

#include <array>
#include <span>
#include <string>
#include <vector>

#include "rlrn/nn.hpp"

namespace rlrn::model {

using ad::ParameterSet;
using ad::Tape;
using ad::Var;

// Dense (n+1) x (n+1) edge weights, ego = node 0.
struct AdjacencyGraph {
  int n = 0;
  std::vector<float> e;

  float at(int i, int j) const { return e[static_cast<std::size_t>(i) * n + j]; }
  float& at(int i, int j) { return e[static_cast<std::size_t>(i) * n + j]; }
};

// e_ij = (D - d_ij) / D for d_ij <= D, else 0.
float edge_weight(double distance, double range);

AdjacencyGraph build_local_graph(std::span<const std::array<float, 2>> positions, double range);
// Ego linked to every vehicle by the local-graph weight, e_00 = 1, nothing else.
AdjacencyGraph build_star_graph(std::span<const std::array<float, 2>> positions, double range);

// Target rows and their weighted neighbourhoods (e > 0) over a stacked batch
// of node features. Neighbour lists keep graph column order.
struct AttentionGraph {
  int nodes = 0;
  std::vector<int> targets;
  std::vector<int> offsets{0};  // CSR, size targets + 1
  std::vector<int> neighbors;
  std::vector<float> weights;

  int target_count() const { return static_cast<int>(targets.size()); }
};

enum class GatTarget { AllNodes, EgoOnly };

// Appends one graph whose nodes occupy rows [row_offset, row_offset + g.n).
void append_graph(AttentionGraph& out, const AdjacencyGraph& g, int row_offset, GatTarget target);

struct GatConfig {
  int heads = 4;
  int head_dim = 16;
  // false: softmax(s) * e as in the literal formula (weights need not sum to 1).
  // true: softmax(s + log e).
  bool normalized = false;
  int out_dim() const { return heads * head_dim; }
};

// Attention given projected keys/queries/values, each [nodes, heads*head_dim].
// Output row t is for graph.targets[t]. Throws EmptyNeighborhoodError for a
// target without neighbours and DimensionError on shape mismatches.
Var graph_attention(const Var& keys, const Var& queries, const Var& values, const AttentionGraph& graph,
                    const GatConfig& config);

// "<prefix>.wk", "<prefix>.wq", "<prefix>.wv": [in, heads*head_dim], no bias.
void add_gat(ParameterSet& params, const std::string& prefix, int in, const GatConfig& config, Rng& rng);
Var gat_layer(Tape& tape, ParameterSet& params, const std::string& prefix, const Var& x, const AttentionGraph& graph,
              const GatConfig& config);

}  // namespace rlrn::model
