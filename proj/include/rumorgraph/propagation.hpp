// Copyright 2026 The rumorgraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "rumorgraph/dataio.hpp"
#include "rumorgraph/errors.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tensor.hpp"

namespace rumorgraph {

/// Undirected reply topology with self-loops.
///
/// Node i is the i-th post of the event (claim = 0). edges holds each reply
/// relation once as (parent, child). adjacency is symmetric 0/1 with a unit
/// diagonal; normalized is D^{-1/2} A D^{-1/2}.
struct PropagationGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  Tensor<double> adjacency;
  Tensor<double> normalized;

  std::vector<double> degrees() const {
    std::vector<double> d(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i] += adjacency(i, j);
    return d;
  }
};

/// Symmetric normalization A[i][j] / sqrt(d_i d_j). Self-loops keep every
/// degree at least 1.
inline Tensor<double> normalize(const Tensor<double>& adjacency) {
  const std::size_t n = adjacency.rows();
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += adjacency(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Tensor<double> out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (adjacency(i, j) != 0.0) out(i, j) = adjacency(i, j) * inv_sqrt[i] * inv_sqrt[j];
  return out;
}

inline PropagationGraph graph_from_edges(std::size_t n,
                                         std::vector<std::pair<std::size_t, std::size_t>> edges) {
  PropagationGraph g;
  g.n = n;
  g.adjacency = Tensor<double>::identity(n);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n || a == b) throw ShapeError("graph edge out of range or self-referential");
    g.adjacency(a, b) = 1.0;
    g.adjacency(b, a) = 1.0;
  }
  g.edges = std::move(edges);
  g.normalized = normalize(g.adjacency);
  return g;
}

/// One undirected edge per reply relation, indexed by sorted post order.
inline PropagationGraph build_graph(const Event& e) {
  const auto parents = e.parent_indices();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t i = 1; i < parents.size(); ++i)
    edges.emplace_back(static_cast<std::size_t>(parents[i]), i);
  return graph_from_edges(e.size(), std::move(edges));
}

/// Removes each reply edge independently with probability rate, both
/// directions at once. Self-loops always survive.
inline PropagationGraph dropedge(const PropagationGraph& g, double rate, RandomStream& stream) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("dropedge rate must lie in [0, 1]");
  std::vector<std::pair<std::size_t, std::size_t>> kept;
  for (const auto& e : g.edges)
    if (!stream.bernoulli(rate)) kept.push_back(e);
  return graph_from_edges(g.n, std::move(kept));
}

}  // namespace rumorgraph
