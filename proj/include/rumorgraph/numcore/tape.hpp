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

#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rumorgraph/errors.hpp"
#include "rumorgraph/numcore/tensor.hpp"

namespace rumorgraph {

template <typename T>
class Tape;

/// Handle to a value recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(*this); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Reverse-mode differentiation tape.
///
/// Nodes are appended in evaluation order, so node ids are already a
/// topological order and the backward sweep walks them in reverse. Nodes
/// whose inputs are all constants record no backward rule, which makes
/// evaluation-only passes cheap and value-identical to training passes.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Tensor<T>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, {}); }

  Var<T> parameter(Tensor<T> value) { return push(std::move(value), true, {}); }

  /// Records an op result. The rule is dropped when no input needs a gradient.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs, Backward rule) {
    bool needs = false;
    for (const auto& v : inputs) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs, needs ? std::move(rule) : Backward{});
  }

  Var<T> record(Tensor<T> value, const std::vector<Var<T>>& inputs, Backward rule) {
    bool needs = false;
    for (const auto& v : inputs) needs = needs || nodes_[v.id].requires_grad;
    return push(std::move(value), needs, needs ? std::move(rule) : Backward{});
  }

  const Tensor<T>& value(Var<T> v) const { return nodes_[v.id].value; }
  bool requires_grad(Var<T> v) const { return nodes_[v.id].requires_grad; }

  /// Gradient of the last backward root with respect to v; zeros if v was
  /// not reached.
  Tensor<T> grad(Var<T> v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.empty() && !n.value.empty()) return Tensor<T>(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void accumulate(Var<T> v, const Tensor<T>& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) {
      n.grad = g;
      return;
    }
    assert(n.grad.shape() == g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
  }

  // Row-sparse accumulation used by broadcasts and row selection.
  void accumulate_row(Var<T> v, std::size_t row, std::span<const T> g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) n.grad = Tensor<T>(n.value.rows(), n.value.cols());
    auto dst = n.grad.row(row);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }

  /// Seeds d(root)/d(root) = 1 and sweeps every recorded node once, newest
  /// first. root must be a 1 x 1 value.
  void backward(Var<T> root) {
    if (value(root).size() != 1) {
      throw ShapeError("backward: root must be scalar, got " + value(root).shape_string());
    }
    for (auto& n : nodes_) n.grad = Tensor<T>();
    nodes_[root.id].grad = Tensor<T>(1, 1, T{1});
    for (std::size_t i = root.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.rule || n.grad.empty()) continue;
      n.rule(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward rule;
  };

  Var<T> push(Tensor<T> value, bool requires_grad, Backward rule) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), requires_grad, std::move(rule)});
    return Var<T>{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

namespace ops {

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tape = *a.tape;
  return tape.record(linalg::matmul(a.value(), b.value()), {a, b},
                     [a, b](Tape<T>& t, const Tensor<T>& g) {
                       if (t.requires_grad(a)) t.accumulate(a, linalg::matmul_nt(g, t.value(b)));
                       if (t.requires_grad(b)) t.accumulate(b, linalg::matmul_tn(t.value(a), g));
                     });
}

template <typename T>
Var<T> transpose(Var<T> a) {
  return a.tape->record(linalg::transpose(a.value()), {a}, [a](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, linalg::transpose(g));
  });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  linalg::require_same_shape(a.value(), b.value(), "add");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename T>
Var<T> scale(Var<T> a, T c) {
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= c;
  return a.tape->record(std::move(out), {a}, [a, c](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T> ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= c;
    t.accumulate(a, ga);
  });
}

/// x (n x d) plus a 1 x d bias broadcast over rows.
template <typename T>
Var<T> add_row(Var<T> x, Var<T> bias) {
  const auto& xv = x.value();
  const auto& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != xv.cols()) {
    throw ShapeError("add_row: bias " + bv.shape_string() + " does not fit " + xv.shape_string());
  }
  Tensor<T> out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto o = out.row(r);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] += bv[c];
  }
  return x.tape->record(std::move(out), {x, bias}, [x, bias](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, g);
    if (t.requires_grad(bias)) {
      Tensor<T> gb(1, g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += g(r, c);
      t.accumulate(bias, gb);
    }
  });
}

template <typename T>
Var<T> relu(Var<T> x) {
  Tensor<T> out = x.value();
  // NaN passes through so that bad inputs stay visible downstream.
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] < T{0} ? T{0} : out[i];
  return x.tape->record(std::move(out), {x}, [x](Tape<T>& t, const Tensor<T>& g) {
    const auto& xv = t.value(x);
    Tensor<T> gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (!(xv[i] > T{0})) gx[i] = T{0};
    t.accumulate(x, gx);
  });
}

/// [x || source.row(r)] with the selected row broadcast to every row of x.
template <typename T>
Var<T> concat_broadcast_row(Var<T> x, Var<T> source, std::size_t r) {
  const auto& xv = x.value();
  const auto& sv = source.value();
  if (r >= sv.rows()) throw ShapeError("concat_broadcast_row: row index out of range");
  const std::size_t a = xv.cols(), b = sv.cols();
  Tensor<T> out(xv.rows(), a + b);
  auto srow = sv.row(r);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    auto o = out.row(i);
    auto in = xv.row(i);
    std::copy(in.begin(), in.end(), o.begin());
    std::copy(srow.begin(), srow.end(), o.begin() + static_cast<std::ptrdiff_t>(a));
  }
  return x.tape->record(std::move(out), {x, source},
                        [x, source, r, a, b](Tape<T>& t, const Tensor<T>& g) {
                          if (t.requires_grad(x)) {
                            Tensor<T> gx(g.rows(), a);
                            for (std::size_t i = 0; i < g.rows(); ++i)
                              for (std::size_t c = 0; c < a; ++c) gx(i, c) = g(i, c);
                            t.accumulate(x, gx);
                          }
                          if (t.requires_grad(source)) {
                            std::vector<T> gs(b, T{0});
                            for (std::size_t i = 0; i < g.rows(); ++i)
                              for (std::size_t c = 0; c < b; ++c) gs[c] += g(i, a + c);
                            t.accumulate_row(source, r, gs);
                          }
                        });
}

/// Row-wise LayerNorm with learnable gain and bias (both 1 x d).
template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const auto& xv = x.value();
  const std::size_t n = xv.rows(), d = xv.cols();
  Tensor<T> out = linalg::layer_norm(xv, gain.value(), bias.value(), eps);
  // Normalized activations and inverse deviations, kept for the backward rule.
  Tensor<T> xhat(n, d);
  std::vector<T> inv(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto in = xv.row(r);
    T mean{0};
    for (T v : in) mean += v;
    mean /= static_cast<T>(d);
    T var{0};
    for (T v : in) var += (v - mean) * (v - mean);
    var /= static_cast<T>(d);
    inv[r] = T{1} / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) xhat(r, c) = (in[c] - mean) * inv[r];
  }
  return x.tape->record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, xhat = std::move(xhat), inv = std::move(inv)](Tape<T>& t,
                                                                  const Tensor<T>& g) {
        const std::size_t n = g.rows(), d = g.cols();
        const auto& gv = t.value(gain);
        if (t.requires_grad(x)) {
          Tensor<T> gx(n, d);
          std::vector<T> dxhat(d);
          for (std::size_t r = 0; r < n; ++r) {
            T mean_d{0}, mean_dx{0};
            for (std::size_t c = 0; c < d; ++c) {
              dxhat[c] = g(r, c) * gv[c];
              mean_d += dxhat[c];
              mean_dx += dxhat[c] * xhat(r, c);
            }
            mean_d /= static_cast<T>(d);
            mean_dx /= static_cast<T>(d);
            for (std::size_t c = 0; c < d; ++c)
              gx(r, c) = inv[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
          }
          t.accumulate(x, gx);
        }
        if (t.requires_grad(gain) || t.requires_grad(bias)) {
          Tensor<T> gg(1, d), gb(1, d);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) {
              gg[c] += g(r, c) * xhat(r, c);
              gb[c] += g(r, c);
            }
          t.accumulate(gain, gg);
          t.accumulate(bias, gb);
        }
      });
}

/// Elementwise product with a fixed 0/1 (or arbitrary constant) mask.
template <typename T>
Var<T> mask(Var<T> x, Tensor<T> m) {
  linalg::require_same_shape(x.value(), m, "mask");
  Tensor<T> out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
  return x.tape->record(std::move(out), {x}, [x, m = std::move(m)](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T> gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= m[i];
    t.accumulate(x, gx);
  });
}

/// Column-wise mean over rows: n x d -> 1 x d.
template <typename T>
Var<T> mean_rows(Var<T> x) {
  const auto& xv = x.value();
  const std::size_t n = xv.rows(), d = xv.cols();
  if (n == 0) throw ShapeError("mean_rows: empty input");
  Tensor<T> out(1, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) out[c] += xv(r, c);
  for (std::size_t c = 0; c < d; ++c) out[c] /= static_cast<T>(n);
  return x.tape->record(std::move(out), {x}, [x, n, d](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T> gx(n, d);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) gx(r, c) = g[c] / static_cast<T>(n);
    t.accumulate(x, gx);
  });
}

template <typename T>
Var<T> sum(Var<T> x) {
  T acc{0};
  for (T v : x.value().values()) acc += v;
  const auto r = x.rows(), c = x.cols();
  return x.tape->record(Tensor<T>(1, 1, acc), {x}, [x, r, c](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(x, Tensor<T>(r, c, g[0]));
  });
}

/// Vertically stacks row blocks with equal width.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t d = parts.front().cols();
  std::size_t n = 0;
  for (const auto& p : parts) {
    if (p.cols() != d) throw ShapeError("concat_rows: width mismatch");
    n += p.rows();
  }
  Tensor<T> out(n, d);
  std::size_t at = 0;
  for (const auto& p : parts) {
    const auto& pv = p.value();
    std::copy(pv.values().begin(), pv.values().end(), out.data() + at * d);
    at += pv.rows();
  }
  return parts.front().tape->record(std::move(out), parts,
                                    [parts](Tape<T>& t, const Tensor<T>& g) {
                                      std::size_t at = 0;
                                      const std::size_t d = g.cols();
                                      for (const auto& p : parts) {
                                        const std::size_t rows = t.value(p).rows();
                                        if (t.requires_grad(p)) {
                                          Tensor<T> gp(rows, d);
                                          std::copy(g.data() + at * d, g.data() + (at + rows) * d,
                                                    gp.data());
                                          t.accumulate(p, gp);
                                        }
                                        at += rows;
                                      }
                                    });
}

/// Rows scaled to unit Euclidean norm. A zero row has no direction and is
/// rejected.
template <typename T>
Var<T> l2_normalize_rows(Var<T> x) {
  const auto& xv = x.value();
  Tensor<T> out(xv.rows(), xv.cols());
  std::vector<T> norms(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    norms[r] = linalg::norm2(xv.row(r));
    if (!(norms[r] > T{0})) {
      throw SimilarityError("cosine similarity undefined for zero vector (row " +
                            std::to_string(r) + ")");
    }
    for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(r, c) / norms[r];
  }
  Tensor<T> unit = out;
  return x.tape->record(std::move(out), {x},
                        [x, unit = std::move(unit), norms = std::move(norms)](
                            Tape<T>& t, const Tensor<T>& g) {
                          Tensor<T> gx(g.rows(), g.cols());
                          for (std::size_t r = 0; r < g.rows(); ++r) {
                            const T proj = linalg::dot(unit.row(r), g.row(r));
                            for (std::size_t c = 0; c < g.cols(); ++c)
                              gx(r, c) = (g(r, c) - unit(r, c) * proj) / norms[r];
                          }
                          t.accumulate(x, gx);
                        });
}

/// Weighted log-softmax likelihood over a masked score matrix.
///
///   loss = -(1/divisor) * sum_i sum_j w_ij * (s_ij - logsumexp_{k in mask_i} s_ik)
///
/// Rows with no weight contribute nothing. A weighted entry does not have to
/// be part of its row's mask. Supervised, cross-domain and instance-wise
/// contrastive terms are all instances of this form.
template <typename T>
Var<T> masked_log_likelihood(Var<T> scores, Tensor<T> weights, std::vector<unsigned char> in_mask,
                             T divisor) {
  const auto& s = scores.value();
  const std::size_t n = s.rows(), m = s.cols();
  linalg::require_same_shape(s, weights, "masked_log_likelihood");
  if (in_mask.size() != n * m) throw ShapeError("masked_log_likelihood: mask size mismatch");
  Tensor<T> soft(n, m);
  std::vector<T> row_weight(n, T{0});
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) row_weight[i] += weights(i, j);
    if (row_weight[i] == T{0}) continue;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < m; ++k)
      if (in_mask[i * m + k]) mx = std::max(mx, s(i, k));
    if (!std::isfinite(mx)) throw ShapeError("masked_log_likelihood: weighted row with empty mask");
    T z{0};
    for (std::size_t k = 0; k < m; ++k)
      if (in_mask[i * m + k]) z += std::exp(s(i, k) - mx);
    const T lse = mx + std::log(z);
    for (std::size_t k = 0; k < m; ++k)
      if (in_mask[i * m + k]) soft(i, k) = std::exp(s(i, k) - lse);
    T row{0};
    for (std::size_t j = 0; j < m; ++j)
      if (weights(i, j) != T{0}) row += weights(i, j) * (s(i, j) - lse);
    total += row;
  }
  return scores.tape->record(
      Tensor<T>(1, 1, -total / divisor), {scores},
      [scores, weights = std::move(weights), soft = std::move(soft),
       row_weight = std::move(row_weight), divisor](Tape<T>& t, const Tensor<T>& g) {
        const std::size_t n = soft.rows(), m = soft.cols();
        Tensor<T> gs(n, m);
        const T c = g[0] / divisor;
        for (std::size_t i = 0; i < n; ++i) {
          if (row_weight[i] == T{0}) continue;
          for (std::size_t j = 0; j < m; ++j)
            gs(i, j) = c * (row_weight[i] * soft(i, j) - weights(i, j));
        }
        t.accumulate(scores, gs);
      });
}

/// Mean negative log-probability of the labelled class; log-probabilities
/// are clamped at log(floor).
template <typename T>
Var<T> cross_entropy(Var<T> logits, std::span<const int> labels, T floor = T(1e-12)) {
  const auto& lv = logits.value();
  if (labels.size() != lv.rows()) throw ShapeError("cross_entropy: label count mismatch");
  const std::size_t n = lv.rows(), c = lv.cols();
  Tensor<T> probs = linalg::softmax_rows(lv);
  const T log_floor = std::log(floor);
  std::vector<unsigned char> clamped(n, 0);
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= c) throw ShapeError("cross_entropy: label out of range");
    auto row = lv.row(i);
    const T mx = *std::max_element(row.begin(), row.end());
    T z{0};
    for (T v : row) z += std::exp(v - mx);
    T logp = row[y] - mx - std::log(z);
    if (logp < log_floor) {
      logp = log_floor;
      clamped[i] = 1;
    }
    total -= logp;
  }
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape->record(
      Tensor<T>(1, 1, total / static_cast<T>(n)), {logits},
      [logits, probs = std::move(probs), ys = std::move(ys), clamped = std::move(clamped)](
          Tape<T>& t, const Tensor<T>& g) {
        const std::size_t n = probs.rows(), c = probs.cols();
        Tensor<T> gl(n, c);
        const T k = g[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i) {
          if (clamped[i]) continue;
          for (std::size_t j = 0; j < c; ++j)
            gl(i, j) = k * (probs(i, j) - (static_cast<int>(j) == ys[i] ? T{1} : T{0}));
        }
        t.accumulate(logits, gl);
      });
}

}  // namespace ops
}  // namespace rumorgraph
