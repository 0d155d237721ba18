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

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rumorgraph/dataio.hpp"
#include "rumorgraph/errors.hpp"
#include "rumorgraph/numcore/rng.hpp"
#include "rumorgraph/numcore/tensor.hpp"

namespace rumorgraph {

namespace text {

/// Decodes UTF-8 into code points; malformed bytes become U+FFFD.
inline std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    int len = b < 0x80 ? 1 : (b >> 5) == 0x6 ? 2 : (b >> 4) == 0xe ? 3 : (b >> 3) == 0x1e ? 4 : 0;
    if (len == 0 || i + static_cast<std::size_t>(len) > s.size()) {
      out.push_back(0xfffd);
      ++i;
      continue;
    }
    char32_t cp = len == 1 ? b : len == 2 ? (b & 0x1f) : len == 3 ? (b & 0x0f) : (b & 0x07);
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto c = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((c >> 6) != 0x2) ok = false;
      cp = (cp << 6) | (c & 0x3f);
    }
    if (!ok) {
      out.push_back(0xfffd);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

inline bool is_cjk(char32_t cp) {
  return (cp >= 0x4e00 && cp <= 0x9fff) || (cp >= 0x3400 && cp <= 0x4dbf) ||
         (cp >= 0x20000 && cp <= 0x2a6df) || (cp >= 0xf900 && cp <= 0xfaff) ||
         (cp >= 0x3040 && cp <= 0x30ff) || (cp >= 0xac00 && cp <= 0xd7af);
}

inline bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<unsigned char>(cp);
    return !(std::isalnum(c) || c == '_');
  }
  // General punctuation, CJK punctuation, full-width forms punctuation.
  return (cp >= 0x2000 && cp <= 0x206f) || (cp >= 0x3000 && cp <= 0x303f) ||
         (cp >= 0xff00 && cp <= 0xff0f) || (cp >= 0xff1a && cp <= 0xff20) || cp == 0x00a0 ||
         (cp >= 0x00a1 && cp <= 0x00bf) || cp == 0xfffd;
}

/// Lowercases ASCII, splits on whitespace and punctuation, and emits each
/// CJK code point as its own token.
inline std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char32_t cp : decode_utf8(s)) {
    if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
    if (is_separator(cp)) {
      flush();
    } else if (is_cjk(cp)) {
      flush();
      append_utf8(current, cp);
      flush();
    } else {
      append_utf8(current, cp);
    }
  }
  flush();
  return tokens;
}

}  // namespace text

/// Signed feature hashing of a post's tokens into d buckets, L2-normalized.
/// The 64-bit FNV-1a state is salted with the seed's little-endian bytes.
inline std::vector<double> hashed_embed(std::string_view s, std::size_t d, std::uint64_t seed) {
  if (d == 0) throw ConfigError("hashed embedding dimension must be >= 1");
  std::vector<double> v(d, 0.0);
  std::string salt(8, '\0');
  for (int i = 0; i < 8; ++i) salt[static_cast<std::size_t>(i)] = static_cast<char>((seed >> (8 * i)) & 0xff);
  const std::uint64_t basis = fnv1a64(salt);
  for (const auto& tok : text::tokenize(s)) {
    const std::uint64_t h = fnv1a64(tok, basis);
    const std::size_t bucket = static_cast<std::size_t>(h % d);
    v[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  if (n2 > 0.0) {
    const double n = std::sqrt(n2);
    for (double& x : v) x /= n;
  }
  return v;
}

/// Maps a post to a fixed-width vector.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> embed(const Post& post) const = 0;
  /// Short description, e.g. "hashed:32:0" or "file:/path".
  virtual std::string describe() const = 0;
};

class HashedProvider final : public EmbeddingProvider {
 public:
  HashedProvider(std::size_t d, std::uint64_t seed = 0) : d_(d), seed_(seed) {
    if (d == 0) throw ConfigError("hashed embedding dimension must be >= 1");
  }
  std::size_t dimension() const override { return d_; }
  std::vector<double> embed(const Post& post) const override {
    return hashed_embed(post.text, d_, seed_);
  }
  std::string describe() const override {
    return "hashed:" + std::to_string(d_) + ":" + std::to_string(seed_);
  }

 private:
  std::size_t d_;
  std::uint64_t seed_;
};

/// Vectors produced offline by an external sentence encoder.
class PrecomputedProvider final : public EmbeddingProvider {
 public:
  PrecomputedProvider(std::size_t d, std::unordered_map<std::string, std::vector<double>> table,
                      std::string origin)
      : d_(d), table_(std::move(table)), origin_(std::move(origin)) {}

  std::size_t dimension() const override { return d_; }
  std::size_t count() const { return table_.size(); }

  std::vector<double> embed(const Post& post) const override {
    auto it = table_.find(post.post_id);
    if (it == table_.end())
      throw ResolutionError("no embedding for post '" + post.post_id + "' in " + origin_);
    return it->second;
  }
  std::string describe() const override { return "file:" + origin_; }

 private:
  std::size_t d_;
  std::unordered_map<std::string, std::vector<double>> table_;
  std::string origin_;
};

/// Loads an embedding file: header {"dim", "count"} then one
/// {"post_id", "vector"} record per line.
inline std::unique_ptr<PrecomputedProvider> load_precomputed(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path + ":1: invalid JSON header: " + e.what());
  }
  if (!header.is_object() || !header.contains("dim") || !header["dim"].is_number_integer())
    throw FormatError(path + ":1: header must carry an integer 'dim'");
  const auto dim = header["dim"].get<std::int64_t>();
  if (dim <= 0) throw FormatError(path + ":1: header dimension must be positive");
  std::unordered_map<std::string, std::vector<double>> table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + ": invalid JSON: " + e.what());
    }
    if (!rec.contains("post_id") || !rec["post_id"].is_string() || !rec.contains("vector") ||
        !rec["vector"].is_array()) {
      throw FormatError(where + ": record needs 'post_id' and 'vector'");
    }
    std::vector<double> v;
    for (const auto& x : rec["vector"]) {
      if (!x.is_number()) throw FormatError(where + ": non-numeric vector entry");
      v.push_back(x.get<double>());
      if (!std::isfinite(v.back())) throw FormatError(where + ": non-finite vector entry");
    }
    if (v.size() != static_cast<std::size_t>(dim)) {
      throw FormatError(where + ": vector length " + std::to_string(v.size()) +
                        " does not match header dim " + std::to_string(dim));
    }
    table[rec["post_id"].get<std::string>()] = std::move(v);
  }
  if (header.contains("count") && header["count"].is_number_integer() &&
      header["count"].get<std::size_t>() != table.size()) {
    throw FormatError(path + ": header count " + std::to_string(header["count"].get<std::size_t>()) +
                      " does not match " + std::to_string(table.size()) + " records");
  }
  return std::make_unique<PrecomputedProvider>(static_cast<std::size_t>(dim), std::move(table), path);
}

/// Parses "hashed:<dim>[:<seed>]", "file:<path>" or a bare path to an
/// embedding file.
inline std::unique_ptr<EmbeddingProvider> make_provider(const std::string& spec) {
  if (spec.rfind("hashed:", 0) == 0) {
    const std::string rest = spec.substr(7);
    const auto colon = rest.find(':');
    try {
      const std::size_t d = std::stoul(rest.substr(0, colon));
      const std::uint64_t seed = colon == std::string::npos ? 0 : std::stoull(rest.substr(colon + 1));
      return std::make_unique<HashedProvider>(d, seed);
    } catch (const std::logic_error&) {
      throw ConfigError("bad hashed embedding spec '" + spec + "'");
    }
  }
  if (spec.rfind("file:", 0) == 0) return load_precomputed(spec.substr(5));
  return load_precomputed(spec);
}

/// Post embeddings of one event, row 0 being the claim.
template <typename T>
struct EmbeddingMatrix {
  std::string event_id;
  Tensor<T> rows;
  std::string provenance;
};

template <typename T>
EmbeddingMatrix<T> embed_event(const Event& e, const EmbeddingProvider& p) {
  const std::size_t d = p.dimension();
  Tensor<T> x(e.size(), d);
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto v = p.embed(e.posts[i]);
    if (v.size() != d) throw FormatError("provider returned a vector of the wrong width");
    for (std::size_t c = 0; c < d; ++c) x(i, c) = static_cast<T>(v[c]);
  }
  return {e.event_id, std::move(x), p.describe()};
}

}  // namespace rumorgraph
