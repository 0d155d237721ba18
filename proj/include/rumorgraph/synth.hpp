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
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumorgraph/dataio.hpp"
#include "rumorgraph/errors.hpp"
#include "rumorgraph/numcore/rng.hpp"

namespace rumorgraph {

/// Knobs of the synthetic source/target benchmark.
///
/// Both domains share class-conditional reply behaviour: rumor threads draw
/// mostly "denial" replies that answer other replies (deep chains), non-rumor
/// threads mostly "support" replies to the claim (stars). Reply stances speak
/// through class-indicative tokens. In the target domain a fraction
/// shift_strength of those tokens, and of the background vocabulary, is
/// swapped for target-only tokens.
struct SynthSpec {
  std::size_t source_events = 240;
  std::size_t target_events = 100;
  double rumor_fraction = 0.5;
  std::size_t vocab_size = 300;
  std::size_t class_tokens = 16;      // indicative tokens per stance
  double shift_strength = 0.5;
  double signal_rate = 0.3;           // chance a reply token is stance-indicative
  double stance_purity = 0.75;        // chance a reply takes its thread's stance
  double structural_signal = 0.8;     // chance a thread follows its class's shape
  std::size_t min_replies = 2;
  std::size_t max_replies = 12;
  std::size_t min_tokens = 4;
  std::size_t max_tokens = 10;
  std::uint64_t seed = 7;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    prob(rumor_fraction, "rumor_fraction");
    prob(shift_strength, "shift_strength");
    prob(signal_rate, "signal_rate");
    prob(stance_purity, "stance_purity");
    prob(structural_signal, "structural_signal");
    auto per_class = [&](std::size_t n, const char* name) {
      const auto rumors = static_cast<std::size_t>(std::llround(rumor_fraction * double(n)));
      if (rumors < 2 || n - rumors < 2)
        throw ConfigError(std::string(name) + " must give at least 2 events per class");
    };
    per_class(source_events, "source_events");
    per_class(target_events, "target_events");
    if (vocab_size < 1 || class_tokens < 1) throw ConfigError("vocabularies must be non-empty");
    if (min_replies > max_replies || min_tokens > max_tokens || min_tokens < 1)
      throw ConfigError("min/max ranges are inverted");
  }
};

inline const char* const kSynthSpecKeys[] = {
    "source_events", "target_events", "rumor_fraction",    "vocab_size",  "class_tokens",
    "shift_strength", "signal_rate",  "stance_purity",     "structural_signal",
    "min_replies",   "max_replies",   "min_tokens",        "max_tokens",  "seed"};

inline SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("synth spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : kSynthSpecKeys) known = known || key == k;
    if (!known) throw ConfigError("unknown synth spec key '" + key + "'");
  }
  SynthSpec s;
  try {
    s.source_events = j.value("source_events", s.source_events);
    s.target_events = j.value("target_events", s.target_events);
    s.rumor_fraction = j.value("rumor_fraction", s.rumor_fraction);
    s.vocab_size = j.value("vocab_size", s.vocab_size);
    s.class_tokens = j.value("class_tokens", s.class_tokens);
    s.shift_strength = j.value("shift_strength", s.shift_strength);
    s.signal_rate = j.value("signal_rate", s.signal_rate);
    s.stance_purity = j.value("stance_purity", s.stance_purity);
    s.structural_signal = j.value("structural_signal", s.structural_signal);
    s.min_replies = j.value("min_replies", s.min_replies);
    s.max_replies = j.value("max_replies", s.max_replies);
    s.min_tokens = j.value("min_tokens", s.min_tokens);
    s.max_tokens = j.value("max_tokens", s.max_tokens);
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth spec: ") + e.what());
  }
  s.validate();
  return s;
}

inline nlohmann::json to_json(const SynthSpec& s) {
  return {{"source_events", s.source_events}, {"target_events", s.target_events},
          {"rumor_fraction", s.rumor_fraction}, {"vocab_size", s.vocab_size},
          {"class_tokens", s.class_tokens},   {"shift_strength", s.shift_strength},
          {"signal_rate", s.signal_rate},     {"stance_purity", s.stance_purity},
          {"structural_signal", s.structural_signal}, {"min_replies", s.min_replies},
          {"max_replies", s.max_replies},     {"min_tokens", s.min_tokens},
          {"max_tokens", s.max_tokens},       {"seed", s.seed}};
}

namespace detail {

enum class Stance { kDeny, kSupport };

class SynthDomain {
 public:
  SynthDomain(const SynthSpec& spec, bool target, RandomStream& rng)
      : spec_(spec), rng_(rng) {
    const auto shifted = static_cast<std::size_t>(
        std::llround(spec.shift_strength * static_cast<double>(spec.class_tokens)));
    const auto shifted_vocab = static_cast<std::size_t>(
        std::llround(spec.shift_strength * static_cast<double>(spec.vocab_size)));
    for (std::size_t k = 0; k < spec.class_tokens; ++k) {
      const bool swap = target && k < shifted;
      deny_.push_back((swap ? "tdeny" : "deny") + std::to_string(k));
      support_.push_back((swap ? "tsupp" : "supp") + std::to_string(k));
    }
    for (std::size_t k = 0; k < spec.vocab_size; ++k) {
      const bool swap = target && k < shifted_vocab;
      background_.push_back((swap ? "tw" : "w") + std::to_string(k));
    }
  }

  Event make(const std::string& id, Label label) {
    Event e;
    e.event_id = id;
    e.label = label;
    const bool rumor = label == Label::kRumor;
    // Thread shape: rumor -> chains, non-rumor -> stars, unless flipped.
    const bool deep = rng_.bernoulli(spec_.structural_signal) ? rumor : !rumor;
    const Stance thread = rumor ? Stance::kDeny : Stance::kSupport;
    const Stance other = rumor ? Stance::kSupport : Stance::kDeny;

    e.posts.push_back(Post{id + "-c", std::nullopt, sentence(thread, 0.5 * spec_.signal_rate), 0});
    const std::size_t replies =
        spec_.min_replies + rng_.below(spec_.max_replies - spec_.min_replies + 1);
    for (std::size_t r = 0; r < replies; ++r) {
      std::size_t parent = 0;
      if (deep && r > 0 && rng_.bernoulli(0.8)) {
        // Answer one of the two newest posts, growing a chain.
        parent = e.posts.size() - 1 - rng_.below(std::min<std::size_t>(2, e.posts.size() - 1));
      } else if (!rng_.bernoulli(deep ? 0.5 : 0.9)) {
        parent = rng_.below(e.posts.size());
      }
      const Stance stance = rng_.bernoulli(spec_.stance_purity) ? thread : other;
      const std::int64_t ts = e.posts[parent].timestamp + 1 + static_cast<std::int64_t>(rng_.below(3600));
      e.posts.push_back(Post{id + "-r" + std::to_string(r), e.posts[parent].post_id,
                             sentence(stance, spec_.signal_rate), ts});
    }
    return normalize_event(std::move(e));
  }

 private:
  std::string sentence(Stance stance, double rate) {
    const auto& indicative = stance == Stance::kDeny ? deny_ : support_;
    const std::size_t n = spec_.min_tokens + rng_.below(spec_.max_tokens - spec_.min_tokens + 1);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      if (rng_.bernoulli(rate)) out += indicative[rng_.below(indicative.size())];
      else out += background_[rng_.below(background_.size())];
    }
    return out;
  }

  const SynthSpec& spec_;
  RandomStream& rng_;
  std::vector<std::string> deny_, support_, background_;
};

inline Dataset synth_dataset(const SynthSpec& spec, bool target, RandomStream& rng) {
  SynthDomain domain(spec, target, rng);
  const std::size_t n = target ? spec.target_events : spec.source_events;
  const auto rumors = static_cast<std::size_t>(std::llround(spec.rumor_fraction * double(n)));
  Dataset d;
  d.role = target ? DatasetRole::kTarget : DatasetRole::kSource;
  d.domain = target ? "synthetic-target" : "synthetic-source";
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "%s%04zu", target ? "tgt" : "src", i);
    d.events.push_back(domain.make(id, i < rumors ? Label::kRumor : Label::kNonRumor));
  }
  return d;
}

}  // namespace detail

struct SynthData {
  Dataset source;
  Dataset target;
};

/// Generates the source and target datasets; deterministic in spec.seed.
inline SynthData generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  RngStreams streams(spec.seed);
  RandomStream& rng = streams[Stream::kSynth];
  SynthData out;
  out.source = detail::synth_dataset(spec, false, rng);
  out.target = detail::synth_dataset(spec, true, rng);
  return out;
}

}  // namespace rumorgraph
