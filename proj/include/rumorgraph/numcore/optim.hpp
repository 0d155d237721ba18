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
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rumorgraph/errors.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tensor.hpp"

namespace rumorgraph {

/// Glorot-uniform weights: U(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
template <typename T>
Tensor<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, RandomStream& stream) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> out(fan_in, fan_out);
  for (auto& v : out.values()) v = static_cast<T>(stream.uniform(-bound, bound));
  return out;
}

struct AdamWConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

/// Adam with decoupled weight decay. Moments are kept per parameter tensor
/// in the order the parameters are handed to step().
template <typename T>
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(AdamWConfig cfg) : cfg_(cfg) {}

  const AdamWConfig& config() const { return cfg_; }
  std::uint64_t steps() const { return step_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }

  void restore(std::uint64_t step, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v) {
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
  }

  /// Applies one update. names label parameters in error messages.
  void step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>> grads,
            std::span<const std::string> names = {}) {
    if (params.size() != grads.size()) throw ShapeError("adamw: parameter/gradient count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
      if (params[i]->shape() != grads[i].shape()) {
        throw ShapeError("adamw: gradient shape " + grads[i].shape_string() +
                         " does not match parameter " + name + " " + params[i]->shape_string());
      }
      if (!grads[i].all_finite()) throw TrainingError("adamw: non-finite gradient for " + name);
    }
    if (m_.empty()) {
      for (const auto* p : params) {
        m_.emplace_back(p->rows(), p->cols());
        v_.emplace_back(p->rows(), p->cols());
      }
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T lr = static_cast<T>(cfg_.learning_rate);
    const T decay = static_cast<T>(cfg_.learning_rate * cfg_.weight_decay);
    const T eps = static_cast<T>(cfg_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Tensor<T>& p = *params[i];
      const Tensor<T>& g = grads[i];
      Tensor<T>& m = m_[i];
      Tensor<T>& v = v_[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = b1 * m[k] + (T{1} - b1) * g[k];
        v[k] = b2 * v[k] + (T{1} - b2) * g[k] * g[k];
        const T mhat = m[k] / static_cast<T>(bc1);
        const T vhat = v[k] / static_cast<T>(bc2);
        p[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        p[k] -= decay * p[k];
      }
    }
  }

 private:
  AdamWConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

/// Central-difference gradient estimate (L(p+h) - L(p-h)) / 2h for every
/// coordinate of every tensor in params. loss must be deterministic.
template <typename T>
std::vector<Tensor<T>> finite_diff_grad(const std::function<T()>& loss,
                                        std::span<Tensor<T>* const> params, T h) {
  std::vector<Tensor<T>> out;
  for (Tensor<T>* p : params) {
    Tensor<T> g(p->rows(), p->cols());
    for (std::size_t k = 0; k < p->size(); ++k) {
      const T saved = (*p)[k];
      (*p)[k] = saved + h;
      const T up = loss();
      (*p)[k] = saved - h;
      const T down = loss();
      (*p)[k] = saved;
      g[k] = (up - down) / (T{2} * h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace rumorgraph
