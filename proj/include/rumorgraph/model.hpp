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

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumorgraph/errors.hpp"
#include "rumorgraph/numcore/optim.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tape.hpp"
#include "rumorgraph/numcore/tensor.hpp"

namespace rumorgraph {

struct ModelConfig {
  std::size_t d_in = 768;
  std::size_t d_hidden = 512;
  std::size_t d_out = 128;
  std::size_t classes = 2;
  std::size_t layers = 2;
  double dropout = 0.2;
  double layer_norm_eps = 1e-5;

  /// Width of the pooled event representation.
  std::size_t representation_dim() const { return d_out + d_hidden; }

  void validate() const {
    if (d_in == 0 || d_hidden == 0 || d_out == 0 || classes == 0)
      throw ConfigError("model dimensions must be >= 1");
    if (layers != 2) throw ConfigError("only two graph-convolution layers are supported");
    if (!(dropout >= 0.0 && dropout <= 1.0)) throw ConfigError("dropout must lie in [0, 1]");
    if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"d_in", c.d_in},       {"d_hidden", c.d_hidden}, {"d_out", c.d_out},
          {"classes", c.classes}, {"layers", c.layers},     {"dropout", c.dropout},
          {"layer_norm_eps", c.layer_norm_eps}};
}

/// Closed-form trainable parameter count for a configuration.
constexpr std::size_t param_count(std::size_t d_in, std::size_t d_hidden, std::size_t d_out,
                                  std::size_t classes) {
  return d_in * d_hidden + d_hidden                // first convolution
         + 2 * (d_hidden + d_in)                   // first LayerNorm
         + (d_hidden + d_in) * d_out + d_out       // second convolution
         + 2 * (d_out + d_hidden)                  // second LayerNorm
         + (d_out + d_hidden) * classes + classes;  // classifier
}

inline std::size_t param_count(const ModelConfig& c) {
  return param_count(c.d_in, c.d_hidden, c.d_out, c.classes);
}

inline constexpr std::array<const char*, 10> kParamNames = {
    "W0", "b0", "ln1_gain", "ln1_bias", "W1", "b1", "ln2_gain", "ln2_bias", "Wc", "bc"};

/// Weights of the two-layer multi-scale GCN and its classifier head, in the
/// fixed serialization order.
template <typename T>
struct ModelParams {
  Tensor<T> w0, b0, ln1_gain, ln1_bias, w1, b1, ln2_gain, ln2_bias, wc, bc;

  std::array<Tensor<T>*, 10> tensors() {
    return {&w0, &b0, &ln1_gain, &ln1_bias, &w1, &b1, &ln2_gain, &ln2_bias, &wc, &bc};
  }
  std::array<const Tensor<T>*, 10> tensors() const {
    return {&w0, &b0, &ln1_gain, &ln1_bias, &w1, &b1, &ln2_gain, &ln2_bias, &wc, &bc};
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += t->size();
    return n;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    auto dst = out.tensors();
    auto src = tensors();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<U>();
    return out;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Glorot weights, zero biases, unit LayerNorm gains.
template <typename T>
ModelParams<T> init_params(const ModelConfig& c, RandomStream& stream) {
  c.validate();
  const std::size_t cat1 = c.d_hidden + c.d_in;
  const std::size_t cat2 = c.d_out + c.d_hidden;
  ModelParams<T> p;
  p.w0 = glorot_uniform<T>(c.d_in, c.d_hidden, stream);
  p.b0 = Tensor<T>(1, c.d_hidden);
  p.ln1_gain = Tensor<T>(1, cat1, T{1});
  p.ln1_bias = Tensor<T>(1, cat1);
  p.w1 = glorot_uniform<T>(cat1, c.d_out, stream);
  p.b1 = Tensor<T>(1, c.d_out);
  p.ln2_gain = Tensor<T>(1, cat2, T{1});
  p.ln2_bias = Tensor<T>(1, cat2);
  p.wc = glorot_uniform<T>(cat2, c.classes, stream);
  p.bc = Tensor<T>(1, c.classes);
  return p;
}

template <typename T>
struct ParamVars {
  Var<T> w0, b0, ln1_gain, ln1_bias, w1, b1, ln2_gain, ln2_bias, wc, bc;

  std::array<Var<T>, 10> vars() const {
    return {w0, b0, ln1_gain, ln1_bias, w1, b1, ln2_gain, ln2_bias, wc, bc};
  }
};

/// Places the parameters on a tape, as gradient-carrying leaves when
/// trainable.
template <typename T>
ParamVars<T> bind(Tape<T>& tape, const ModelParams<T>& p, bool trainable) {
  auto leaf = [&](const Tensor<T>& t) { return trainable ? tape.parameter(t) : tape.constant(t); };
  return {leaf(p.w0),  leaf(p.b0),       leaf(p.ln1_gain), leaf(p.ln1_bias), leaf(p.w1),
          leaf(p.b1),  leaf(p.ln2_gain), leaf(p.ln2_bias), leaf(p.wc),       leaf(p.bc)};
}

enum class Mode { kTrain, kEval };

template <typename T>
struct Encoding {
  Var<T> node_states;     // LayerNormed output of the second layer, n x (d_out + d_hidden)
  Var<T> representation;  // 1 x (d_out + d_hidden)
};

/// Two graph convolutions, each followed by concatenation of the claim's
/// pre-concatenation state and a LayerNorm, then mean pooling over nodes.
///
/// In train mode a dropout mask (drawn from `dropout`) zeroes entries of the
/// first layer's normalized output; survivors are not rescaled.
template <typename T>
Encoding<T> encode(const ParamVars<T>& p, const ModelConfig& cfg, const Tensor<T>& x,
                   const Tensor<T>& a_hat, Mode mode, RandomStream* dropout = nullptr) {
  if (x.rows() == 0) throw ShapeError("encode: event without posts");
  if (a_hat.rows() != x.rows() || a_hat.cols() != x.rows()) {
    throw ShapeError("encode: adjacency " + a_hat.shape_string() + " does not match " +
                     std::to_string(x.rows()) + " posts");
  }
  if (x.cols() != cfg.d_in) {
    throw ShapeError("encode: embedding width " + std::to_string(x.cols()) +
                     " does not match d_in " + std::to_string(cfg.d_in));
  }
  Tape<T>& tape = *p.w0.tape;
  const T eps = static_cast<T>(cfg.layer_norm_eps);
  Var<T> a = tape.constant(a_hat);
  Var<T> h0 = tape.constant(x);

  // A(XW) rather than (AX)W: post embeddings are typically sparse and the
  // product kernels skip zero entries.
  Var<T> h1 = ops::relu(ops::add_row(ops::matmul(a, ops::matmul(h0, p.w0)), p.b0));
  Var<T> h1_tilde =
      ops::layer_norm(ops::concat_broadcast_row(h1, h0, 0), p.ln1_gain, p.ln1_bias, eps);
  if (mode == Mode::kTrain && cfg.dropout > 0.0) {
    if (dropout == nullptr) throw ConfigError("encode: train mode needs a dropout stream");
    Tensor<T> m(h1_tilde.rows(), h1_tilde.cols(), T{1});
    for (auto& v : m.values())
      if (dropout->bernoulli(cfg.dropout)) v = T{0};
    h1_tilde = ops::mask(h1_tilde, std::move(m));
  }
  Var<T> h2 = ops::relu(ops::add_row(ops::matmul(a, ops::matmul(h1_tilde, p.w1)), p.b1));
  Var<T> h2_tilde =
      ops::layer_norm(ops::concat_broadcast_row(h2, h1, 0), p.ln2_gain, p.ln2_bias, eps);
  return {h2_tilde, ops::mean_rows(h2_tilde)};
}

/// Affine classifier head: reps (N x D) -> logits (N x classes).
template <typename T>
Var<T> classify(const ParamVars<T>& p, Var<T> reps) {
  return ops::add_row(ops::matmul(reps, p.wc), p.bc);
}

template <typename T>
struct ForwardResult {
  Tensor<T> node_states;
  Tensor<T> representation;
  Tensor<T> probabilities;  // 1 x classes
};

/// Deterministic evaluation-mode forward pass of a single event.
template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, const ModelConfig& cfg, const Tensor<T>& x,
                         const Tensor<T>& a_hat) {
  Tape<T> tape;
  auto p = bind(tape, params, false);
  auto enc = encode(p, cfg, x, a_hat, Mode::kEval);
  auto logits = classify(p, enc.representation);
  return {enc.node_states.value(), enc.representation.value(),
          linalg::softmax_rows(logits.value())};
}

// --- snapshots ---------------------------------------------------------------

inline constexpr int kSnapshotFormatVersion = 1;

struct SnapshotHeader {
  ModelConfig config;
  std::uint64_t seed = 0;
  std::string embedding;  // provider description used to build inputs
};

namespace detail {

inline void write_f64_le(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

inline double read_f64_le(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw FormatError("snapshot truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.d_in = j.at("d_in").get<std::size_t>();
    c.d_hidden = j.at("d_hidden").get<std::size_t>();
    c.d_out = j.at("d_out").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("snapshot config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace detail

/// Header JSON line, then every parameter as little-endian float64 in
/// kParamNames order.
template <typename T>
void write_snapshot(std::ostream& out, const SnapshotHeader& h, const ModelParams<T>& params) {
  nlohmann::json j = {{"format", "rumorgraph-snapshot"},
                      {"format_version", kSnapshotFormatVersion},
                      {"config", to_json(h.config)},
                      {"seed", h.seed},
                      {"embedding", h.embedding},
                      {"tensors", nlohmann::json::array()}};
  const auto ts = params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i)
    j["tensors"].push_back({{"name", kParamNames[i]}, {"shape", {ts[i]->rows(), ts[i]->cols()}}});
  out << j.dump() << '\n';
  for (const auto* t : ts)
    for (T v : t->values()) detail::write_f64_le(out, static_cast<double>(v));
}

template <typename T>
void write_snapshot(const std::string& path, const SnapshotHeader& h, const ModelParams<T>& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write snapshot '" + path + "'");
  write_snapshot(out, h, params);
}

template <typename T>
struct Snapshot {
  SnapshotHeader header;
  ModelParams<T> params;
};

template <typename T>
Snapshot<T> read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("snapshot: missing header");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("snapshot: invalid header: ") + e.what());
  }
  if (j.value("format", "") != "rumorgraph-snapshot")
    throw FormatError("snapshot: not a rumorgraph snapshot");
  if (j.value("format_version", 0) != kSnapshotFormatVersion)
    throw FormatError("snapshot: unsupported format version");
  Snapshot<T> s;
  s.header.config = detail::model_config_from_json(j.at("config"));
  s.header.seed = j.value("seed", std::uint64_t{0});
  s.header.embedding = j.value("embedding", "");
  RandomStream unused(0);
  s.params = init_params<T>(s.header.config, unused);
  for (auto* t : s.params.tensors())
    for (auto& v : t->values()) v = static_cast<T>(detail::read_f64_le(in));
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("snapshot: trailing bytes");
  return s;
}

template <typename T>
Snapshot<T> read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open snapshot '" + path + "'");
  return read_snapshot<T>(in);
}

}  // namespace rumorgraph
