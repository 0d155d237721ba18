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

#include <json.hpp>

#include "rumorgraph/errors.hpp"
#include "rumorgraph/log.hpp"
#include "rumorgraph/numcore/tape.hpp"
#include "rumorgraph/numcore/tensor.hpp"

namespace rumorgraph {

/// Temperature-scaled cosine similarity u.v / (|u||v| tau).
template <typename T>
T sim(std::span<const T> u, std::span<const T> v, T tau) {
  if (u.size() != v.size()) throw ShapeError("sim: vector widths differ");
  if (!(tau > T{0})) throw SimilarityError("sim: temperature must be positive");
  const T nu = linalg::norm2(u), nv = linalg::norm2(v);
  if (!(nu > T{0}) || !(nv > T{0})) throw SimilarityError("sim: zero vector");
  return linalg::dot(u, v) / (nu * nv * tau);
}

namespace losses {

/// Pairwise similarity matrix sim(u_i, v_j) for the rows of u and v.
template <typename T>
Var<T> similarity(Var<T> u, Var<T> v, T tau) {
  if (!(tau > T{0})) throw SimilarityError("temperature must be positive");
  Var<T> un = ops::l2_normalize_rows(u);
  Var<T> vn = u.id == v.id ? un : ops::l2_normalize_rows(v);
  return ops::scale(ops::matmul(un, ops::transpose(vn)), T{1} / tau);
}

template <typename T>
Var<T> zero(Tape<T>& tape) {
  return tape.constant(Tensor<T>(1, 1));
}

/// Mean negative log-probability of the true class (probabilities floored at
/// 1e-12).
template <typename T>
Var<T> ce(Var<T> logits, std::span<const int> labels) {
  return ops::cross_entropy(logits, labels, T(1e-12));
}

/// Supervised contrastive loss within the source batch. Anchors without a
/// same-label peer contribute 0; the outer mean still divides by N.
template <typename T>
Var<T> scl_source(Var<T> reps, std::span<const int> labels, T tau) {
  const std::size_t n = reps.rows();
  if (labels.size() != n) throw ShapeError("scl_source: label count mismatch");
  if (n < 2) {
    warn("scl_source: batch smaller than 2, term skipped");
    return zero(*reps.tape);
  }
  Var<T> s = similarity(reps, reps, tau);
  Tensor<T> w(n, n);
  std::vector<unsigned char> m(n * n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    m[i * n + i] = 0;
    std::size_t same = 0;
    for (std::size_t j = 0; j < n; ++j) same += labels[j] == labels[i] ? 1 : 0;
    if (same < 2) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) w(i, j) = T{1} / static_cast<T>(same - 1);
  }
  return ops::masked_log_likelihood(s, std::move(w), std::move(m), static_cast<T>(n));
}

/// Cross-domain contrastive loss: target anchors against all source samples,
/// same-label source samples being the positives.
template <typename T>
Var<T> scl_cross(Var<T> target, std::span<const int> target_labels, Var<T> source,
                 std::span<const int> source_labels, T tau) {
  const std::size_t nt = target.rows(), ns = source.rows();
  if (target_labels.size() != nt || source_labels.size() != ns)
    throw ShapeError("scl_cross: label count mismatch");
  if (nt == 0 || ns == 0) return zero(*target.tape);
  Var<T> s = similarity(target, source, tau);
  Tensor<T> w(nt, ns);
  std::vector<unsigned char> m(nt * ns, 1);
  for (std::size_t i = 0; i < nt; ++i) {
    std::size_t same = 0;
    for (std::size_t j = 0; j < ns; ++j) same += source_labels[j] == target_labels[i] ? 1 : 0;
    if (same == 0) continue;
    for (std::size_t j = 0; j < ns; ++j)
      if (source_labels[j] == target_labels[i]) w(i, j) = T{1} / static_cast<T>(same);
  }
  return ops::masked_log_likelihood(s, std::move(w), std::move(m), static_cast<T>(nt));
}

/// Target-wise contrastive loss: each target representation must pick out
/// its augmented view against the other 2(N-1) views. With
/// include_positive=false the positive pair is absent from the denominator,
/// so the value can be negative.
template <typename T>
Var<T> tcl(Var<T> target, Var<T> augmented, T tau, bool include_positive = false) {
  const std::size_t n = target.rows();
  if (augmented.rows() != n || augmented.cols() != target.cols())
    throw ShapeError("tcl: augmented views do not match targets");
  if (n < 2) {
    warn("tcl: target batch smaller than 2, term skipped");
    return zero(*target.tape);
  }
  Var<T> views = ops::concat_rows(std::vector<Var<T>>{target, augmented});
  Var<T> un = ops::l2_normalize_rows(target);
  Var<T> vn = ops::l2_normalize_rows(views);
  Var<T> s = ops::scale(ops::matmul(un, ops::transpose(vn)), T{1} / tau);
  const std::size_t m = 2 * n;
  Tensor<T> w(n, m);
  std::vector<unsigned char> mask(n * m, 1);
  for (std::size_t i = 0; i < n; ++i) {
    w(i, n + i) = T{1};
    mask[i * m + i] = 0;
    mask[i * m + n + i] = include_positive ? 1 : 0;
  }
  return ops::masked_log_likelihood(s, std::move(w), std::move(mask), static_cast<T>(n));
}

}  // namespace losses

/// All loss components of one optimization step.
struct LossReport {
  double ce_source = 0.0;
  double ce_target = 0.0;
  double scl_source = 0.0;
  double scl_target = 0.0;
  double tcl_target = 0.0;
  double source_total = 0.0;
  double target_total = 0.0;
  double total = 0.0;
  double alpha = 0.5;
  double tau = 0.5;

  /// Name of the first non-finite field, or empty.
  std::string first_non_finite() const {
    const std::pair<const char*, double> fields[] = {
        {"ce_source", ce_source},   {"ce_target", ce_target},       {"scl_source", scl_source},
        {"scl_target", scl_target}, {"tcl_target", tcl_target},     {"source_total", source_total},
        {"target_total", target_total}, {"total", total}};
    for (const auto& [name, v] : fields)
      if (!std::isfinite(v)) return name;
    return {};
  }
};

inline nlohmann::json to_json(const LossReport& r) {
  return {{"ce_source", r.ce_source},       {"ce_target", r.ce_target},
          {"scl_source", r.scl_source},     {"scl_target", r.scl_target},
          {"tcl_target", r.tcl_target},     {"source_total", r.source_total},
          {"target_total", r.target_total}, {"total", r.total},
          {"alpha", r.alpha},               {"tau", r.tau}};
}

/// Joint objective: L_s = (1-a) CE_s + a SCL_s, L_t = (1-a) CE_t + a (SCL_t +
/// TCL_t), L = (L_s + L_t) / 2.
inline LossReport joint(double ce_source, double ce_target, double scl_source, double scl_target,
                        double tcl_target, double alpha, double tau = 0.5) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  LossReport r{ce_source, ce_target, scl_source, scl_target, tcl_target, 0, 0, 0, alpha, tau};
  r.source_total = (1.0 - alpha) * ce_source + alpha * scl_source;
  r.target_total = (1.0 - alpha) * ce_target + alpha * (scl_target + tcl_target);
  r.total = (r.source_total + r.target_total) / 2.0;
  return r;
}

/// Tape-level joint objective; mirrors joint() on recorded scalars.
template <typename T>
Var<T> joint(Var<T> ce_source, Var<T> ce_target, Var<T> scl_source, Var<T> scl_target,
             Var<T> tcl_target, T alpha) {
  const T one_minus = T{1} - alpha;
  Var<T> ls = ops::add(ops::scale(ce_source, one_minus), ops::scale(scl_source, alpha));
  Var<T> lt = ops::add(ops::scale(ce_target, one_minus),
                       ops::scale(ops::add(scl_target, tcl_target), alpha));
  return ops::scale(ops::add(ls, lt), T{0.5});
}

// --- batch-level entry points --------------------------------------------------

namespace detail {
template <typename T>
Tensor<T> stack(const std::vector<std::vector<T>>& rows) {
  if (rows.empty()) return {};
  Tensor<T> out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != out.cols()) throw ShapeError("representations have different widths");
    std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  }
  return out;
}
}  // namespace detail

/// Mean -log p_i of the true class from given probability rows.
template <typename T>
T ce_loss(const std::vector<std::vector<T>>& probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size()) throw ShapeError("ce_loss: label count mismatch");
  if (probabilities.empty()) return T{0};
  T total{0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const T p = probabilities[i].at(static_cast<std::size_t>(labels[i]));
    total -= std::log(std::max(p, T(1e-12)));
  }
  return total / static_cast<T>(labels.size());
}

template <typename T>
T scl_source_loss(const std::vector<std::vector<T>>& reps, std::span<const int> labels, T tau) {
  if (reps.size() < 2) {
    warn("scl_source: batch smaller than 2, term skipped");
    return T{0};
  }
  Tape<T> tape;
  return losses::scl_source(tape.constant(detail::stack(reps)), labels, tau).value()[0];
}

template <typename T>
T scl_cross_loss(const std::vector<std::vector<T>>& target, std::span<const int> target_labels,
                 const std::vector<std::vector<T>>& source, std::span<const int> source_labels,
                 T tau) {
  if (target.empty() || source.empty()) return T{0};
  Tape<T> tape;
  return losses::scl_cross(tape.constant(detail::stack(target)), target_labels,
                           tape.constant(detail::stack(source)), source_labels, tau)
      .value()[0];
}

template <typename T>
T tcl_loss(const std::vector<std::vector<T>>& target, const std::vector<std::vector<T>>& augmented,
           T tau, bool include_positive = false) {
  if (target.size() != augmented.size()) throw ShapeError("tcl: one augmented view per target");
  if (target.size() < 2) {
    warn("tcl: target batch smaller than 2, term skipped");
    return T{0};
  }
  Tape<T> tape;
  return losses::tcl(tape.constant(detail::stack(target)), tape.constant(detail::stack(augmented)),
                     tau, include_positive)
      .value()[0];
}

}  // namespace rumorgraph
