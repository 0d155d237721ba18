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
#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rumorgraph/errors.hpp"

namespace rumorgraph {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t basis = 0xcbf29ce484222325ULL) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// One reproducible random stream. mt19937_64 output is fixed by the
/// standard; the distributions below are written out by hand because the
/// standard library's are implementation-defined.
class RandomStream {
 public:
  RandomStream() = default;
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n) by rejection, free of modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const auto j = below(i);
      std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                     first + static_cast<std::ptrdiff_t>(j));
    }
  }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> engine_;
    if (!is) throw FormatError("corrupt random stream state");
  }

  friend bool operator==(const RandomStream& a, const RandomStream& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

enum class Stream : std::size_t { kInit, kShuffle, kDropout, kDropedge, kFeatureDropout, kSynth };

inline constexpr std::array<std::string_view, 6> kStreamNames = {
    "init", "shuffle", "dropout", "dropedge", "feature_dropout", "synth"};

/// Named substreams derived from a single master seed. Each substream is
/// seeded from (master seed, name), so draws on one never shift another.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t master_seed = 0) : seed_(master_seed) {
    for (std::size_t i = 0; i < kStreamNames.size(); ++i) {
      streams_[i] = RandomStream(splitmix64(master_seed ^ fnv1a64(kStreamNames[i])));
    }
  }

  std::uint64_t seed() const { return seed_; }
  RandomStream& operator[](Stream s) { return streams_[static_cast<std::size_t>(s)]; }
  const RandomStream& operator[](Stream s) const { return streams_[static_cast<std::size_t>(s)]; }

  std::vector<std::string> serialize() const {
    std::vector<std::string> out;
    for (const auto& s : streams_) out.push_back(s.serialize());
    return out;
  }

  void deserialize(const std::vector<std::string>& states) {
    if (states.size() != streams_.size()) throw FormatError("wrong random stream count");
    for (std::size_t i = 0; i < states.size(); ++i) streams_[i].deserialize(states[i]);
  }

  friend bool operator==(const RngStreams& a, const RngStreams& b) {
    return a.seed_ == b.seed_ && a.streams_ == b.streams_;
  }

 private:
  std::uint64_t seed_;
  std::array<RandomStream, kStreamNames.size()> streams_;
};

}  // namespace rumorgraph
