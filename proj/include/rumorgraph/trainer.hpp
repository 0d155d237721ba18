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
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumorgraph/augment.hpp"
#include "rumorgraph/dataio.hpp"
#include "rumorgraph/errors.hpp"
#include "rumorgraph/evalkit.hpp"
#include "rumorgraph/log.hpp"
#include "rumorgraph/model.hpp"
#include "rumorgraph/numcore/optim.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tape.hpp"
#include "rumorgraph/objectives.hpp"

namespace rumorgraph {

struct TrainConfig {
  double alpha = 0.5;
  double tau = 0.5;
  double learning_rate = 1e-4;
  double weight_decay = 0.0;
  std::size_t source_batch_size = 32;
  std::size_t target_batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  double validation_fraction = 0.1;
  /// false drops every contrastive term (classification-only objective).
  bool contrastive = true;
  /// false drops the target-wise term and its augmented views.
  bool target_contrastive = true;
  bool tcl_include_positive = false;
  AugmentConfig augment;
  ModelConfig model;
  std::uint64_t seed = 0;

  /// Augmented views are generated only when the target-wise term carries
  /// weight.
  bool uses_augmentation() const { return contrastive && target_contrastive && alpha > 0.0; }

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (source_batch_size < 1 || target_batch_size < 1)
      throw ConfigError("batch sizes must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (!(validation_fraction >= 0.0 && validation_fraction <= 1.0))
      throw ConfigError("validation_fraction must lie in [0, 1]");
    augment.validate();
    model.validate();
  }
};

/// Receives one JSON record per optimization step and per epoch.
using TrainLogger = std::function<void(const nlohmann::json&)>;

struct EpochRecord {
  std::size_t epoch = 0;
  double score = 0.0;      // validation macro-F1, or -loss when no validation split
  double mean_loss = 0.0;  // mean joint loss over the epoch's steps
  std::size_t steps = 0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

template <typename T>
struct TrainState {
  ModelParams<T> params;
  AdamW<T> optimizer;
  RngStreams rng;
  std::size_t epoch = 0;
  std::uint64_t steps = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t since_improvement = 0;
  bool finished = false;
  ModelParams<T> best_params;
  std::vector<EpochRecord> history;
};

template <typename T>
TrainState<T> initial_state(const TrainConfig& cfg) {
  TrainState<T> s;
  s.rng = RngStreams(cfg.seed);
  s.params = init_params<T>(cfg.model, s.rng[Stream::kInit]);
  s.best_params = s.params;
  s.optimizer = AdamW<T>(AdamWConfig{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});
  return s;
}

// --- state serialization ------------------------------------------------------

template <typename T>
void save_state(std::ostream& out, const TrainState<T>& s) {
  nlohmann::json h;
  h["format"] = "rumorgraph-train-state";
  h["epoch"] = s.epoch;
  h["steps"] = s.steps;
  h["best_score"] = std::isfinite(s.best_score) ? nlohmann::json(s.best_score) : nlohmann::json();
  h["since_improvement"] = s.since_improvement;
  h["finished"] = s.finished;
  h["optimizer_steps"] = s.optimizer.steps();
  h["has_moments"] = !s.optimizer.first_moments().empty();
  h["rng_seed"] = s.rng.seed();
  h["rng"] = s.rng.serialize();
  h["history"] = nlohmann::json::array();
  for (const auto& e : s.history)
    h["history"].push_back({e.epoch, e.score, e.mean_loss, e.steps});
  out << h.dump() << '\n';
  auto put = [&](const Tensor<T>& t) {
    for (T v : t.values()) detail::write_f64_le(out, static_cast<double>(v));
  };
  for (const auto* t : s.params.tensors()) put(*t);
  for (const auto* t : s.best_params.tensors()) put(*t);
  for (const auto& t : s.optimizer.first_moments()) put(t);
  for (const auto& t : s.optimizer.second_moments()) put(t);
}

template <typename T>
TrainState<T> load_state(std::istream& in, const TrainConfig& cfg) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("train state: missing header");
  const auto h = nlohmann::json::parse(line);
  if (h.value("format", "") != "rumorgraph-train-state") throw FormatError("not a train state");
  TrainState<T> s = initial_state<T>(cfg);
  s.epoch = h.at("epoch").get<std::size_t>();
  s.steps = h.at("steps").get<std::uint64_t>();
  s.best_score = h.at("best_score").is_null() ? -std::numeric_limits<double>::infinity()
                                              : h.at("best_score").get<double>();
  s.since_improvement = h.at("since_improvement").get<std::size_t>();
  s.finished = h.at("finished").get<bool>();
  s.rng = RngStreams(h.at("rng_seed").get<std::uint64_t>());
  s.rng.deserialize(h.at("rng").get<std::vector<std::string>>());
  for (const auto& e : h.at("history"))
    s.history.push_back({e[0].get<std::size_t>(), e[1].get<double>(), e[2].get<double>(),
                         e[3].get<std::size_t>()});
  auto get = [&](Tensor<T>& t) {
    for (auto& v : t.values()) v = static_cast<T>(detail::read_f64_le(in));
  };
  for (auto* t : s.params.tensors()) get(*t);
  for (auto* t : s.best_params.tensors()) get(*t);
  if (h.at("has_moments").get<bool>()) {
    std::vector<Tensor<T>> m, v;
    for (const auto* t : s.params.tensors()) {
      m.emplace_back(t->rows(), t->cols());
      get(m.back());
    }
    for (const auto* t : s.params.tensors()) {
      v.emplace_back(t->rows(), t->cols());
      get(v.back());
    }
    s.optimizer.restore(h.at("optimizer_steps").get<std::uint64_t>(), std::move(m), std::move(v));
  }
  return s;
}

// --- one optimization step ----------------------------------------------------

template <typename T>
struct StepOutcome {
  LossReport report;
  std::vector<Tensor<T>> grads;  // in kParamNames order
};

/// Builds the joint objective on a fresh tape and returns its value and
/// parameter gradients without touching the optimizer.
template <typename T>
StepOutcome<T> joint_gradient(std::span<const PreparedEvent<T>* const> source,
                              std::span<const PreparedEvent<T>* const> target,
                              const ModelParams<T>& params, RngStreams& rng,
                              const TrainConfig& cfg, Mode mode = Mode::kTrain) {
  if (source.empty() || target.empty()) throw TrainingError("train_step: empty mini-batch");
  Tape<T> tape;
  const auto pv = bind(tape, params, true);
  const T tau = static_cast<T>(cfg.tau);
  RandomStream* dropout = &rng[Stream::kDropout];

  std::vector<Var<T>> src_reps, tgt_reps;
  std::vector<int> ys, yt;
  for (const auto* e : source) {
    src_reps.push_back(encode(pv, cfg.model, e->x, e->a_hat, mode, dropout).representation);
    ys.push_back(e->label);
  }
  for (const auto* e : target) {
    tgt_reps.push_back(encode(pv, cfg.model, e->x, e->a_hat, mode, dropout).representation);
    yt.push_back(e->label);
  }
  auto check = [](const std::vector<Var<T>>& reps, std::span<const PreparedEvent<T>* const> events) {
    for (std::size_t i = 0; i < reps.size(); ++i)
      for (T v : reps[i].value().values())
        if (!std::isfinite(static_cast<double>(v)))
          throw TrainingError("non-finite representation for event '" + events[i]->event_id + "'");
  };
  check(src_reps, source);
  check(tgt_reps, target);
  Var<T> os = ops::concat_rows(src_reps);
  Var<T> ot = ops::concat_rows(tgt_reps);
  auto finite = [](Var<T> v, const char* term) {
    if (!std::isfinite(static_cast<double>(v.value()[0])))
      throw TrainingError(std::string("non-finite loss term '") + term + "'");
    return v;
  };
  Var<T> ce_s = finite(losses::ce(classify(pv, os), std::span<const int>(ys)), "ce_source");

  Var<T> zero = losses::zero(tape);
  Var<T> ce_t = zero, scl_s = zero, scl_t = zero, tcl_t = zero;
  if (cfg.uses_augmentation()) {
    std::vector<Var<T>> aug;
    for (std::size_t i = 0; i < target.size(); ++i) {
      switch (cfg.augment.kind) {
        case AugmentKind::kAdversarial:
          aug.push_back(adversarial_view(tgt_reps[i], params, yt[i],
                                         static_cast<T>(cfg.augment.epsilon)));
          break;
        case AugmentKind::kFeatureDropout:
          aug.push_back(feature_dropout_view(tgt_reps[i], cfg.augment.feature_dropout,
                                             rng[Stream::kFeatureDropout]));
          break;
        case AugmentKind::kGraphDropedge:
          aug.push_back(dropedge_view(pv, cfg.model, target[i]->x, target[i]->graph,
                                      cfg.augment.dropedge, rng[Stream::kDropedge], mode,
                                      dropout));
          break;
      }
    }
    Var<T> oa = ops::concat_rows(aug);
    std::vector<int> yy = yt;
    yy.insert(yy.end(), yt.begin(), yt.end());
    ce_t = finite(losses::ce(classify(pv, ops::concat_rows(std::vector<Var<T>>{ot, oa})),
                             std::span<const int>(yy)),
                  "ce_target");
    tcl_t = losses::tcl(ot, oa, tau, cfg.tcl_include_positive);
  } else {
    ce_t = finite(losses::ce(classify(pv, ot), std::span<const int>(yt)), "ce_target");
  }
  if (cfg.contrastive) {
    scl_s = losses::scl_source(os, std::span<const int>(ys), tau);
    scl_t = losses::scl_cross(ot, std::span<const int>(yt), os, std::span<const int>(ys), tau);
  }
  Var<T> total = joint(ce_s, ce_t, scl_s, scl_t, tcl_t, static_cast<T>(cfg.alpha));

  StepOutcome<T> out;
  out.report = joint(ce_s.value()[0], ce_t.value()[0], scl_s.value()[0], scl_t.value()[0],
                     tcl_t.value()[0], cfg.alpha, cfg.tau);
  out.report.total = static_cast<double>(total.value()[0]);
  if (auto bad = out.report.first_non_finite(); !bad.empty())
    throw TrainingError("non-finite loss term '" + bad + "'");
  tape.backward(total);
  for (const auto& v : pv.vars()) out.grads.push_back(tape.grad(v));
  return out;
}

/// One joint optimization step over a (source, target) mini-batch pair.
template <typename T>
LossReport train_step(std::span<const PreparedEvent<T>* const> source,
                      std::span<const PreparedEvent<T>* const> target, TrainState<T>& state,
                      const TrainConfig& cfg) {
  auto out = joint_gradient(source, target, state.params, state.rng, cfg, Mode::kTrain);
  auto ptrs = state.params.tensors();
  std::vector<std::string> names(kParamNames.begin(), kParamNames.end());
  state.optimizer.step(std::span<Tensor<T>* const>(ptrs.data(), ptrs.size()), out.grads, names);
  ++state.steps;
  return out.report;
}

inline std::size_t batch_count(std::size_t n, std::size_t b) { return (n + b - 1) / b; }

/// Every target mini-batch is paired with every source mini-batch. Target
/// order is reshuffled each epoch; source order is shuffled once per epoch.
/// Returns the mean joint loss and the step count.
template <typename T>
std::pair<double, std::size_t> train_epoch(std::span<const PreparedEvent<T>> source,
                                           std::span<const PreparedEvent<T>* const> target,
                                           TrainState<T>& state, const TrainConfig& cfg,
                                           const TrainLogger& log = {}) {
  if (source.empty() || target.empty()) throw TrainingError("train_epoch: empty dataset");
  std::vector<const PreparedEvent<T>*> tgt(target.begin(), target.end());
  std::vector<const PreparedEvent<T>*> src;
  for (const auto& e : source) src.push_back(&e);
  RandomStream& shuffle = state.rng[Stream::kShuffle];
  shuffle.shuffle(tgt.begin(), tgt.end());
  shuffle.shuffle(src.begin(), src.end());
  const std::size_t bt = cfg.target_batch_size, bs = cfg.source_batch_size;
  double loss_sum = 0.0;
  std::size_t steps = 0;
  for (std::size_t t0 = 0; t0 < tgt.size(); t0 += bt) {
    std::span<const PreparedEvent<T>* const> tb(tgt.data() + t0, std::min(bt, tgt.size() - t0));
    for (std::size_t s0 = 0; s0 < src.size(); s0 += bs) {
      std::span<const PreparedEvent<T>* const> sb(src.data() + s0, std::min(bs, src.size() - s0));
      const LossReport r = train_step(sb, tb, state, cfg);
      loss_sum += r.total;
      ++steps;
      if (log) {
        nlohmann::json rec = to_json(r);
        rec["epoch"] = state.epoch + 1;
        rec["step"] = state.steps;
        log(rec);
      }
    }
  }
  return {steps == 0 ? 0.0 : loss_sum / static_cast<double>(steps), steps};
}

/// Stratified validation carve: round(fraction * n_c) events per class, at
/// least one, leaving at least one for training. Empty when some class has
/// fewer than two events or the fraction is zero.
inline std::vector<std::size_t> carve_validation(std::span<const int> labels, double fraction,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> out;
  if (fraction <= 0.0) return out;
  RandomStream rng(splitmix64(seed ^ fnv1a64("validation")));
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(i);
    if (idx.size() < 2) return {};
    rng.shuffle(idx.begin(), idx.end());
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
    out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

template <typename T>
struct FitResult {
  ModelParams<T> params;  // best-validation snapshot
  std::vector<EpochRecord> history;
  double best_score = -std::numeric_limits<double>::infinity();
};

/// Early-stopped training of one target fold together with the whole source
/// set. A state may be resumed; max_new_epochs bounds the epochs run by this
/// call.
template <typename T>
class Trainer {
 public:
  Trainer(std::span<const PreparedEvent<T>> source, std::span<const PreparedEvent<T>> target,
          TrainConfig cfg, TrainLogger log = {})
      : source_(source), cfg_(std::move(cfg)), log_(std::move(log)) {
    cfg_.validate();
    if (source_.empty()) throw TrainingError("fit: empty source dataset");
    if (target.empty()) throw TrainingError("fit: empty target fold");
    std::vector<int> labels;
    for (const auto& e : target) labels.push_back(e.label);
    const auto val = carve_validation(labels, cfg_.validation_fraction, cfg_.seed);
    if (val.empty()) {
      warn("target fold too small for a validation split; monitoring target training loss");
    }
    std::size_t v = 0;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (v < val.size() && val[v] == i) {
        validation_.push_back(target[i]);
        ++v;
      } else {
        train_.push_back(&target[i]);
      }
    }
  }

  const std::vector<PreparedEvent<T>>& validation() const { return validation_; }
  std::size_t train_size() const { return train_.size(); }
  const TrainConfig& config() const { return cfg_; }

  FitResult<T> run(TrainState<T>& state,
                   std::size_t max_new_epochs = std::numeric_limits<std::size_t>::max()) const {
    std::size_t ran = 0;
    while (!state.finished && ran < max_new_epochs) {
      if (state.epoch >= cfg_.max_epochs) {
        state.finished = true;
        break;
      }
      const auto [mean_loss, steps] = train_epoch<T>(source_, train_, state, cfg_, log_);
      ++state.epoch;
      ++ran;
      const double score = validation_.empty()
                               ? -mean_loss
                               : evaluate<T>(state.params, cfg_.model, validation_).macro_f1;
      state.history.push_back({state.epoch, score, mean_loss, steps});
      if (log_) log_({{"epoch", state.epoch}, {"val_macro_f1", score}, {"mean_loss", mean_loss}});
      if (score > state.best_score) {
        state.best_score = score;
        state.best_params = state.params;
        state.since_improvement = 0;
      } else if (++state.since_improvement >= cfg_.patience) {
        state.finished = true;
      }
      if (state.epoch >= cfg_.max_epochs) state.finished = true;
    }
    return {state.best_params, state.history, state.best_score};
  }

 private:
  std::span<const PreparedEvent<T>> source_;
  std::vector<const PreparedEvent<T>*> train_;
  std::vector<PreparedEvent<T>> validation_;
  TrainConfig cfg_;
  TrainLogger log_;
};

template <typename T>
FitResult<T> fit(std::span<const PreparedEvent<T>> source, std::span<const PreparedEvent<T>> target,
                 const TrainConfig& cfg, const TrainLogger& log = {}) {
  Trainer<T> trainer(source, target, cfg, log);
  auto state = initial_state<T>(cfg);
  return trainer.run(state);
}

template <typename T>
struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_events = 0;
  std::size_t test_events = 0;
  Metrics metrics;
  FitResult<T> fit;
};

template <typename T>
struct CrossValidation {
  FoldPlan plan;
  std::vector<FoldResult<T>> folds;
  Metrics mean;
};

/// Seed for fold f's training run.
inline std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  return splitmix64(seed + 0x51ed2701ULL * (fold + 1));
}

/// Few-shot protocol: each fold in turn is the (small) target training set,
/// the remaining k-1 folds are the test set.
template <typename T>
CrossValidation<T> cross_validate(std::span<const PreparedEvent<T>> source,
                                  const Dataset& target_dataset,
                                  std::span<const PreparedEvent<T>> target, std::size_t k,
                                  const TrainConfig& cfg, const TrainLogger& log = {}) {
  if (target.size() != target_dataset.events.size())
    throw ShapeError("cross_validate: prepared target does not match dataset");
  CrossValidation<T> cv;
  cv.plan = split_folds(target_dataset, k, cfg.seed);
  std::vector<Metrics> per_fold;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<PreparedEvent<T>> train, test;
    for (std::size_t i = 0; i < target.size(); ++i) {
      if (cv.plan.assignment.at(target[i].event_id) == f) train.push_back(target[i]);
      else test.push_back(target[i]);
    }
    TrainConfig fcfg = cfg;
    fcfg.seed = fold_seed(cfg.seed, f);
    TrainLogger flog;
    if (log) {
      flog = [&log, f](const nlohmann::json& rec) {
        nlohmann::json r = rec;
        r["fold"] = f;
        log(r);
      };
    }
    FoldResult<T> fr;
    fr.fold = f;
    fr.train_events = train.size();
    fr.test_events = test.size();
    fr.fit = fit<T>(source, train, fcfg, flog);
    fr.metrics = evaluate<T>(fr.fit.params, cfg.model, test);
    per_fold.push_back(fr.metrics);
    cv.folds.push_back(std::move(fr));
  }
  cv.mean = mean_metrics(per_fold);
  return cv;
}

}  // namespace rumorgraph
