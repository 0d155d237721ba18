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
#include <span>
#include <string>
#include <vector>

#include "rumorgraph/errors.hpp"
#include "rumorgraph/model.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tape.hpp"
#include "rumorgraph/propagation.hpp"

namespace rumorgraph {

enum class AugmentKind { kAdversarial, kFeatureDropout, kGraphDropedge };

inline std::string to_string(AugmentKind k) {
  switch (k) {
    case AugmentKind::kAdversarial: return "adversarial";
    case AugmentKind::kFeatureDropout: return "feature_dropout";
    case AugmentKind::kGraphDropedge: return "graph_dropedge";
  }
  return "?";
}

inline AugmentKind parse_augment_kind(const std::string& s) {
  if (s == "adversarial") return AugmentKind::kAdversarial;
  if (s == "feature_dropout") return AugmentKind::kFeatureDropout;
  if (s == "graph_dropedge") return AugmentKind::kGraphDropedge;
  throw ConfigError("unknown augmentation '" + s +
                    "' (expected adversarial, feature_dropout or graph_dropedge)");
}

struct AugmentConfig {
  AugmentKind kind = AugmentKind::kAdversarial;
  double epsilon = 0.5;          // adversarial step length
  double feature_dropout = 0.2;  // per-coordinate drop probability
  double dropedge = 0.2;         // per-edge removal probability

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("adversarial epsilon must be positive");
    if (!(feature_dropout >= 0.0 && feature_dropout <= 1.0))
      throw ConfigError("feature_dropout must lie in [0, 1]");
    if (!(dropedge >= 0.0 && dropedge <= 1.0)) throw ConfigError("dropedge must lie in [0, 1]");
  }
};

/// Fast-gradient-value step o + eps * g / |g|. Gradients below 1e-12 in norm
/// leave o unchanged.
template <typename T>
std::vector<T> adversarial(std::span<const T> o, std::span<const T> grad, T epsilon) {
  if (o.size() != grad.size()) throw ShapeError("adversarial: gradient width mismatch");
  std::vector<T> out(o.begin(), o.end());
  const T n = linalg::norm2(grad);
  if (!(n >= T(1e-12))) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += epsilon * grad[i] / n;
  return out;
}

/// Gradient of one sample's cross-entropy with respect to its representation,
/// Wc (softmax(o Wc + bc) - onehot(label)).
template <typename T>
std::vector<T> classification_gradient(const ModelParams<T>& params, std::span<const T> o,
                                       int label) {
  const Tensor<T>& wc = params.wc;
  const std::size_t d = wc.rows(), c = wc.cols();
  if (o.size() != d) throw ShapeError("classification_gradient: representation width mismatch");
  Tensor<T> logits(1, c);
  for (std::size_t k = 0; k < c; ++k) {
    T acc = params.bc[k];
    for (std::size_t i = 0; i < d; ++i) acc += o[i] * wc(i, k);
    logits[k] = acc;
  }
  Tensor<T> p = linalg::softmax_rows(logits);
  p[static_cast<std::size_t>(label)] -= T{1};
  std::vector<T> g(d, T{0});
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < c; ++k) g[i] += wc(i, k) * p[k];
  return g;
}

/// Tape version of the adversarial view: the perturbation is a constant, so
/// gradients reach the parameters through o only.
template <typename T>
Var<T> adversarial_view(Var<T> o, const ModelParams<T>& params, int label, T epsilon) {
  const auto& ov = o.value();
  const auto g = classification_gradient(params, ov.row(0), label);
  const auto moved = adversarial<T>(ov.row(0), g, epsilon);
  Tensor<T> delta(1, ov.cols());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = moved[i] - ov[i];
  return ops::add(o, o.tape->constant(std::move(delta)));
}

/// Zeroes each coordinate with probability p; survivors keep their value.
template <typename T>
Tensor<T> feature_dropout_mask(std::size_t d, double p, RandomStream& stream) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("feature dropout probability must lie in [0, 1]");
  Tensor<T> m(1, d, T{1});
  for (auto& v : m.values())
    if (stream.bernoulli(p)) v = T{0};
  return m;
}

template <typename T>
std::vector<T> feature_dropout(std::span<const T> o, double p, RandomStream& stream) {
  const auto m = feature_dropout_mask<T>(o.size(), p, stream);
  std::vector<T> out(o.begin(), o.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
  return out;
}

template <typename T>
Var<T> feature_dropout_view(Var<T> o, double p, RandomStream& stream) {
  return ops::mask(o, feature_dropout_mask<T>(o.cols(), p, stream));
}

/// Second encoder pass over a dropedge-deformed copy of the event graph.
template <typename T>
Var<T> dropedge_view(const ParamVars<T>& params, const ModelConfig& cfg, const Tensor<T>& x,
                     const PropagationGraph& graph, double p, RandomStream& edge_stream,
                     Mode mode, RandomStream* dropout = nullptr) {
  const PropagationGraph deformed = dropedge(graph, p, edge_stream);
  return encode(params, cfg, x, deformed.normalized.template cast<T>(), mode, dropout)
      .representation;
}

}  // namespace rumorgraph
