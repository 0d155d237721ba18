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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumorgraph/dataio.hpp"
#include "rumorgraph/embed.hpp"
#include "rumorgraph/errors.hpp"
#include "rumorgraph/model.hpp"
#include "rumorgraph/numcore/tensor.hpp"
#include "rumorgraph/propagation.hpp"

namespace rumorgraph {

// --- metrics -----------------------------------------------------------------

struct ClassCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  /// 2PR / (P + R), with 0/0 taken as 0.
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct Metrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double f1_rumor = 0.0;
  double f1_nonrumor = 0.0;
  ClassCounts rumor;
  ClassCounts nonrumor;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Accuracy, per-class F1 and their unweighted mean. Labels and predictions
/// are class indices (1 = rumor, 0 = non-rumor).
inline Metrics compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw ShapeError("compute_metrics: " + std::to_string(predictions.size()) +
                     " predictions for " + std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw ShapeError("compute_metrics: nothing to evaluate");
  Metrics m;
  m.count = labels.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pr = predictions[i] == 1, yr = labels[i] == 1;
    correct += pr == yr ? 1 : 0;
    auto tally = [](ClassCounts& c, bool pred, bool truth) {
      if (pred && truth) ++c.tp;
      else if (pred) ++c.fp;
      else if (truth) ++c.fn;
      else ++c.tn;
    };
    tally(m.rumor, pr, yr);
    tally(m.nonrumor, !pr, !yr);
  }
  m.accuracy = double(correct) / double(labels.size());
  m.f1_rumor = m.rumor.f1();
  m.f1_nonrumor = m.nonrumor.f1();
  m.macro_f1 = (m.f1_rumor + m.f1_nonrumor) / 2.0;
  return m;
}

inline nlohmann::json to_json(const ClassCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

inline nlohmann::json to_json(const Metrics& m) {
  return {{"count", m.count},
          {"accuracy", m.accuracy},
          {"macro_f1", m.macro_f1},
          {"f1_rumor", m.f1_rumor},
          {"f1_nonrumor", m.f1_nonrumor},
          {"confusion", {{"rumor", to_json(m.rumor)}, {"non_rumor", to_json(m.nonrumor)}}}};
}

/// "Acc. 0.895  Mac-F1 0.883  F1(R) ...  F1(N) ..." with three decimals.
inline std::string format_metrics(const Metrics& m) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << "Acc. " << m.accuracy << "  Mac-F1 " << m.macro_f1
     << "  F1(R) " << m.f1_rumor << "  F1(N) " << m.f1_nonrumor;
  return os.str();
}

/// Field-wise mean over folds; confusion counts are summed.
inline Metrics mean_metrics(std::span<const Metrics> folds) {
  Metrics out;
  if (folds.empty()) return out;
  for (const auto& m : folds) {
    out.count += m.count;
    out.accuracy += m.accuracy;
    out.macro_f1 += m.macro_f1;
    out.f1_rumor += m.f1_rumor;
    out.f1_nonrumor += m.f1_nonrumor;
    for (auto [dst, src] : {std::pair{&out.rumor, &m.rumor}, std::pair{&out.nonrumor, &m.nonrumor}}) {
      dst->tp += src->tp;
      dst->fp += src->fp;
      dst->fn += src->fn;
      dst->tn += src->tn;
    }
  }
  const double k = static_cast<double>(folds.size());
  out.accuracy /= k;
  out.macro_f1 /= k;
  out.f1_rumor /= k;
  out.f1_nonrumor /= k;
  return out;
}

// --- inference -----------------------------------------------------------------

/// An event with its embedding matrix and graph, ready for the encoder.
template <typename T>
struct PreparedEvent {
  std::string event_id;
  int label = 0;
  Tensor<T> x;
  PropagationGraph graph;
  Tensor<T> a_hat;
};

template <typename T>
PreparedEvent<T> prepare_event(const Event& e, const EmbeddingProvider& provider) {
  PreparedEvent<T> p;
  p.event_id = e.event_id;
  p.label = static_cast<int>(e.label);
  p.x = embed_event<T>(e, provider).rows;
  p.graph = build_graph(e);
  p.a_hat = p.graph.normalized.template cast<T>();
  return p;
}

template <typename T>
std::vector<PreparedEvent<T>> prepare_events(const std::vector<Event>& events,
                                             const EmbeddingProvider& provider) {
  std::vector<PreparedEvent<T>> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(prepare_event<T>(e, provider));
  return out;
}

template <typename T>
int predict_one(const ModelParams<T>& params, const ModelConfig& cfg, const PreparedEvent<T>& e) {
  const auto r = forward(params, cfg, e.x, e.a_hat);
  auto row = r.probabilities.row(0);
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

template <typename T>
std::vector<int> predict(const ModelParams<T>& params, const ModelConfig& cfg,
                         std::span<const PreparedEvent<T>> events) {
  std::vector<int> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(predict_one(params, cfg, e));
  return out;
}

template <typename T>
Metrics evaluate(const ModelParams<T>& params, const ModelConfig& cfg,
                 std::span<const PreparedEvent<T>> events) {
  std::vector<int> labels;
  for (const auto& e : events) labels.push_back(e.label);
  const auto preds = predict(params, cfg, events);
  return compute_metrics(preds, labels);
}

// --- early detection -------------------------------------------------------------

struct EarlyDetectionCurve {
  CheckpointSpec spec;
  std::vector<Metrics> rows;  // one per checkpoint, in checkpoint order
};

/// Re-evaluates the test events with only the posts available at each
/// checkpoint; truncated events are re-embedded from their surviving posts.
template <typename T>
EarlyDetectionCurve early_detection(const ModelParams<T>& params, const ModelConfig& cfg,
                                    const std::vector<Event>& events, const CheckpointSpec& spec,
                                    const EmbeddingProvider& provider) {
  spec.validate();
  EarlyDetectionCurve curve{spec, {}};
  for (double value : spec.values) {
    std::vector<Event> truncated;
    truncated.reserve(events.size());
    for (const auto& e : events) truncated.push_back(truncate_event(e, spec.mode, value));
    const auto prepared = prepare_events<T>(truncated, provider);
    curve.rows.push_back(evaluate<T>(params, cfg, prepared));
  }
  return curve;
}

inline std::string format_checkpoint(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os << std::setprecision(15) << v;
  return os.str();
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV: checkpoint,accuracy,macro_f1,f1_rumor,f1_nonrumor
inline void write_curve_csv(std::ostream& out, const EarlyDetectionCurve& c) {
  out << "checkpoint,accuracy,macro_f1,f1_rumor,f1_nonrumor\n";
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    const auto& m = c.rows[i];
    out << format_checkpoint(c.spec.values[i]) << ',' << format_double(m.accuracy) << ','
        << format_double(m.macro_f1) << ',' << format_double(m.f1_rumor) << ','
        << format_double(m.f1_nonrumor) << '\n';
  }
}

// --- PCA -------------------------------------------------------------------------

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Tensor<double> vectors;      // column k pairs with values[k]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm falls below
/// tol times the matrix norm. Eigenpairs are returned in descending order.
inline SymmetricEigen jacobi_eigen(Tensor<double> a, double tol = 1e-12,
                                   std::size_t max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw ShapeError("jacobi_eigen: matrix must be square");
  Tensor<double> v = Tensor<double>::identity(n);
  double total = 0.0;
  for (double x : a.values()) total += x * x;
  const double scale = std::sqrt(total);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= tol * std::max(scale, std::numeric_limits<double>::min())) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  SymmetricEigen out{std::vector<double>(n), Tensor<double>(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

struct ProjectedFeatures {
  Tensor<double> coordinates;       // N x out_dim
  std::vector<double> explained;    // variance fraction per component, descending
  Tensor<double> components;        // D x out_dim, unit columns
};

/// Flips each column so its largest-magnitude entry is positive (first such
/// entry on ties).
inline void canonicalize_signs(Tensor<double>& vectors) {
  for (std::size_t k = 0; k < vectors.cols(); ++k) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < vectors.rows(); ++r)
      if (std::abs(vectors(r, k)) > std::abs(vectors(best, k))) best = r;
    if (vectors(best, k) < 0.0)
      for (std::size_t r = 0; r < vectors.rows(); ++r) vectors(r, k) = -vectors(r, k);
  }
}

/// Principal-component projection of the rows of data. With fewer samples
/// than features the eigenproblem is solved on the N x N Gram matrix and the
/// feature-space directions recovered from it.
inline ProjectedFeatures pca_project(const Tensor<double>& data, std::size_t out_dim = 2) {
  const std::size_t n = data.rows(), d = data.cols();
  if (n < 2) throw DegenerateDataError("PCA needs at least two samples");
  if (d < out_dim) throw DegenerateDataError("PCA needs at least as many features as components");
  Tensor<double> centered = data;
  double magnitude = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += data(r, c);
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
      centered(r, c) -= mean;
      magnitude = std::max(magnitude, std::abs(data(r, c)));
    }
  }
  double trace = 0.0;
  for (double x : centered.values()) trace += x * x;
  trace /= static_cast<double>(n - 1);
  if (!(trace > 1e-24 * std::max(1.0, magnitude * magnitude)))
    throw DegenerateDataError("PCA input has zero variance");

  Tensor<double> components(d, out_dim);
  std::vector<double> variances(out_dim);
  if (n >= d) {
    Tensor<double> cov = linalg::matmul_tn(centered, centered);
    for (auto& x : cov.values()) x /= static_cast<double>(n - 1);
    const auto eig = jacobi_eigen(std::move(cov));
    for (std::size_t k = 0; k < out_dim; ++k) {
      variances[k] = std::max(0.0, eig.values[k]);
      for (std::size_t r = 0; r < d; ++r) components(r, k) = eig.vectors(r, k);
    }
  } else {
    Tensor<double> gram = linalg::matmul_nt(centered, centered);
    for (auto& x : gram.values()) x /= static_cast<double>(n - 1);
    const auto eig = jacobi_eigen(std::move(gram));
    for (std::size_t k = 0; k < out_dim; ++k) {
      variances[k] = std::max(0.0, eig.values[k]);
      double norm = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < n; ++r) acc += centered(r, c) * eig.vectors(r, k);
        components(c, k) = acc;
        norm += acc * acc;
      }
      norm = std::sqrt(norm);
      if (norm > 0.0)
        for (std::size_t c = 0; c < d; ++c) components(c, k) /= norm;
    }
  }
  canonicalize_signs(components);
  ProjectedFeatures out;
  out.coordinates = linalg::matmul(centered, components);
  out.components = std::move(components);
  for (double v : variances) out.explained.push_back(std::min(1.0, v / trace));
  return out;
}

/// CSV event_id,label,x,y for a two-component projection.
inline void write_pca_csv(std::ostream& out, const ProjectedFeatures& f,
                          std::span<const std::string> event_ids, std::span<const int> labels) {
  out << "event_id,label,x,y\n";
  for (std::size_t i = 0; i < event_ids.size(); ++i) {
    out << event_ids[i] << ',' << to_string(static_cast<Label>(labels[i])) << ','
        << format_double(f.coordinates(i, 0)) << ',' << format_double(f.coordinates(i, 1)) << '\n';
  }
}

inline nlohmann::json pca_sidecar(const ProjectedFeatures& f) {
  return {{"schema_version", 1}, {"explained_variance", f.explained}};
}

}  // namespace rumorgraph
