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


// Shared fixtures for the test suites.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rumorgraph/rumorgraph.hpp"

namespace rumorgraph::testing {

inline Tensor<double> random_tensor(std::size_t r, std::size_t c, RandomStream& rng,
                                    double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(r, c);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// ||a - b|| / max(||a||, ||b||); differences below 1e-9 in norm count as
/// exact so that vanishing gradients do not divide by zero.
inline double relative_error(const Tensor<double>& a, const Tensor<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  diff = std::sqrt(diff);
  if (diff < 1e-9) return 0.0;
  return diff / std::max(std::sqrt(na), std::sqrt(nb));
}

/// Builds a scalar on a fresh tape from parameter variables.
using ScalarFn = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

/// Largest relative error between tape gradients and central differences
/// over all inputs.
inline double gradcheck(const ScalarFn& f, std::vector<Tensor<double>> inputs, double h = 1e-5) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.parameter(t));
  Var<double> out = f(tape, vars);
  tape.backward(out);
  std::vector<Tensor<double>*> ptrs;
  for (auto& t : inputs) ptrs.push_back(&t);
  auto loss = [&]() {
    Tape<double> t2;
    std::vector<Var<double>> v2;
    for (const auto& t : inputs) v2.push_back(t2.parameter(t));
    return f(t2, v2).value()[0];
  };
  const auto numeric = finite_diff_grad<double>(loss, ptrs, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < vars.size(); ++i)
    worst = std::max(worst, relative_error(tape.grad(vars[i]), numeric[i]));
  return worst;
}

/// Random reply tree on n posts; parent of post k is uniform over earlier
/// posts and timestamps increase with k.
inline Event random_event(const std::string& id, std::size_t n, RandomStream& rng,
                          Label label = Label::kRumor) {
  Event e;
  e.event_id = id;
  e.label = label;
  for (std::size_t k = 0; k < n; ++k) {
    Post p;
    p.post_id = id + "_p" + std::to_string(k);
    if (k > 0) p.parent_id = id + "_p" + std::to_string(rng.below(k));
    p.timestamp = static_cast<std::int64_t>(10 * k);
    p.text = "w" + std::to_string(rng.below(50)) + " w" + std::to_string(rng.below(50)) +
             (label == Label::kRumor ? " fake" : " true");
    e.posts.push_back(std::move(p));
  }
  return e;
}

inline Event chain_event(const std::string& id, std::size_t n, Label label = Label::kRumor) {
  Event e;
  e.event_id = id;
  e.label = label;
  for (std::size_t k = 0; k < n; ++k) {
    Post p;
    p.post_id = id + "_p" + std::to_string(k);
    if (k > 0) p.parent_id = id + "_p" + std::to_string(k - 1);
    p.timestamp = static_cast<std::int64_t>(60 * k);
    p.text = "post " + std::to_string(k);
    e.posts.push_back(std::move(p));
  }
  return e;
}

/// Tiny model configuration used for gradient checks.
inline ModelConfig tiny_model(std::size_t d_in = 6) {
  ModelConfig c;
  c.d_in = d_in;
  c.d_hidden = 5;
  c.d_out = 4;
  return c;
}

// Every tensor filled with non-trivial values so that gains, biases and the
// ReLU pattern all matter.
inline ModelParams<double> random_params(const ModelConfig& c, RandomStream& rng) {
  auto p = init_params<double>(c, rng);
  for (auto* t : p.tensors()) *t = random_tensor(t->rows(), t->cols(), rng, -0.8, 0.8);
  for (auto& v : p.ln1_gain.values()) v += 1.0;
  for (auto& v : p.ln2_gain.values()) v += 1.0;
  return p;
}

inline PreparedEvent<double> random_prepared(const std::string& id, std::size_t n,
                                             std::size_t d_in, int label, RandomStream& rng) {
  Event e = random_event(id, n, rng, static_cast<Label>(label));
  PreparedEvent<double> p;
  p.event_id = id;
  p.label = label;
  p.x = random_tensor(n, d_in, rng);
  p.graph = build_graph(e);
  p.a_hat = p.graph.normalized;
  return p;
}

}  // namespace rumorgraph::testing
