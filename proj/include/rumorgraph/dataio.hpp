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
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rumorgraph/errors.hpp"
#include "rumorgraph/log.hpp"
#include "rumorgraph/numcore/rng.hpp"

namespace rumorgraph {

/// Class index 0 is non-rumor, 1 is rumor.
enum class Label : int { kNonRumor = 0, kRumor = 1 };

inline constexpr int kNumClasses = 2;

inline std::string to_string(Label l) { return l == Label::kRumor ? "rumor" : "non-rumor"; }

inline Label parse_label(const std::string& s) {
  if (s == "rumor") return Label::kRumor;
  if (s == "non-rumor") return Label::kNonRumor;
  throw FormatError("unknown label '" + s + "' (expected \"rumor\" or \"non-rumor\")");
}

struct Post {
  std::string post_id;
  std::optional<std::string> parent_id;  // empty only for the claim
  std::string text;
  std::int64_t timestamp = 0;            // seconds since the claim

  friend bool operator==(const Post&, const Post&) = default;
};

/// A claim with its reply tree. posts[0] is the claim; replies follow in
/// (timestamp, post_id) order, so every parent precedes its children.
struct Event {
  std::string event_id;
  Label label = Label::kNonRumor;
  std::vector<Post> posts;

  const Post& claim() const { return posts.front(); }
  std::size_t size() const { return posts.size(); }

  /// Index of each post's parent in posts; -1 for the claim.
  std::vector<int> parent_indices() const {
    std::unordered_map<std::string, int> index;
    std::vector<int> out(posts.size(), -1);
    for (std::size_t i = 0; i < posts.size(); ++i) {
      if (posts[i].parent_id) out[i] = index.at(*posts[i].parent_id);
      index.emplace(posts[i].post_id, static_cast<int>(i));
    }
    return out;
  }

  /// Longest claim-to-leaf path length in edges.
  int depth() const {
    const auto parents = parent_indices();
    std::vector<int> d(posts.size(), 0);
    int best = 0;
    for (std::size_t i = 1; i < posts.size(); ++i) {
      d[i] = d[static_cast<std::size_t>(parents[i])] + 1;
      best = std::max(best, d[i]);
    }
    return best;
  }

  friend bool operator==(const Event&, const Event&) = default;
};

enum class DatasetRole { kSource, kTarget };

struct Dataset {
  std::vector<Event> events;
  DatasetRole role = DatasetRole::kSource;
  std::string language;
  std::string domain;

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [l](const Event& e) { return e.label == l; }));
  }
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* key,
                                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FormatError(where + ": missing field '" + key + "'");
  return *it;
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
  const auto& v = require_field(obj, key, where);
  if (!v.is_string()) throw FormatError(where + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::int64_t require_int(const nlohmann::json& obj, const char* key,
                                const std::string& where) {
  const auto& v = require_field(obj, key, where);
  if (!v.is_number_integer()) throw FormatError(where + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

/// Sorts replies chronologically and checks every tree invariant. Timestamps
/// are shifted so the claim sits at 0.
inline Event normalize_event(Event e) {
  const std::string where = "event '" + e.event_id + "'";
  if (e.event_id.empty()) throw FormatError("event with empty event_id");
  if (e.posts.empty()) throw StructuralError(where + ": no posts");
  if (e.posts.front().parent_id) throw StructuralError(where + ": claim must not have a parent");
  const std::int64_t origin = e.posts.front().timestamp;
  std::set<std::string> ids;
  for (auto& p : e.posts) {
    if (p.post_id.empty()) throw StructuralError(where + ": empty post_id");
    if (!ids.insert(p.post_id).second)
      throw StructuralError(where + ": duplicate post_id '" + p.post_id + "'");
    p.timestamp -= origin;
  }
  for (std::size_t i = 1; i < e.posts.size(); ++i) {
    if (!e.posts[i].parent_id)
      throw StructuralError(where + ": post '" + e.posts[i].post_id + "' has no parent_id");
  }
  std::stable_sort(e.posts.begin() + 1, e.posts.end(), [](const Post& a, const Post& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.post_id < b.post_id;
  });
  std::unordered_map<std::string, std::size_t> seen;
  seen.emplace(e.posts[0].post_id, 0);
  for (std::size_t i = 1; i < e.posts.size(); ++i) {
    const Post& p = e.posts[i];
    if (!ids.count(*p.parent_id)) {
      throw StructuralError(where + ": post '" + p.post_id + "' references unknown parent '" +
                            *p.parent_id + "'");
    }
    auto it = seen.find(*p.parent_id);
    if (it == seen.end()) {
      throw StructuralError(where + ": post '" + p.post_id + "' precedes its parent '" +
                            *p.parent_id + "' (parent timestamp later than child)");
    }
    if (e.posts[it->second].timestamp > p.timestamp) {
      throw StructuralError(where + ": parent '" + *p.parent_id + "' is later than child '" +
                            p.post_id + "'");
    }
    seen.emplace(p.post_id, i);
  }
  return e;
}

inline Event parse_event_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected a JSON object");
  Event e;
  e.event_id = detail::require_string(j, "event_id", where);
  const std::string ew = where + " event '" + e.event_id + "'";
  e.label = parse_label(detail::require_string(j, "label", ew));
  const auto& claim = detail::require_field(j, "claim", ew);
  if (!claim.is_object()) throw FormatError(ew + ": claim must be an object");
  if (claim.contains("parent_id") && !claim["parent_id"].is_null())
    throw StructuralError(ew + ": claim must not have a parent");
  e.posts.push_back(Post{detail::require_string(claim, "post_id", ew + " claim"), std::nullopt,
                         detail::require_string(claim, "text", ew + " claim"),
                         detail::require_int(claim, "timestamp", ew + " claim")});
  if (j.contains("posts")) {
    const auto& posts = j["posts"];
    if (!posts.is_array()) throw FormatError(ew + ": posts must be an array");
    for (const auto& p : posts) {
      if (!p.is_object()) throw FormatError(ew + ": post must be an object");
      const std::string pid = detail::require_string(p, "post_id", ew + " post");
      const std::string pw = ew + " post '" + pid + "'";
      if (!p.contains("parent_id") || p["parent_id"].is_null())
        throw StructuralError(pw + ": missing parent_id");
      e.posts.push_back(Post{pid, detail::require_string(p, "parent_id", pw),
                             detail::require_string(p, "text", pw),
                             detail::require_int(p, "timestamp", pw)});
    }
  }
  return normalize_event(std::move(e));
}

inline nlohmann::json event_to_json(const Event& e) {
  nlohmann::json j;
  j["event_id"] = e.event_id;
  j["label"] = to_string(e.label);
  const Post& c = e.claim();
  j["claim"] = {{"post_id", c.post_id}, {"text", c.text}, {"timestamp", c.timestamp}};
  j["posts"] = nlohmann::json::array();
  for (std::size_t i = 1; i < e.posts.size(); ++i) {
    const Post& p = e.posts[i];
    j["posts"].push_back({{"post_id", p.post_id},
                          {"parent_id", *p.parent_id},
                          {"text", p.text},
                          {"timestamp", p.timestamp}});
  }
  return j;
}

inline Dataset read_events(std::istream& in, const std::string& name = "<stream>",
                           DatasetRole role = DatasetRole::kSource) {
  Dataset d;
  d.role = role;
  std::set<std::string> event_ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& err) {
      throw FormatError(where + ": invalid JSON: " + err.what());
    }
    Event e = parse_event_json(j, where);
    if (!event_ids.insert(e.event_id).second)
      throw StructuralError(where + ": duplicate event_id '" + e.event_id + "'");
    d.events.push_back(std::move(e));
  }
  if (!d.events.empty() && (d.count(Label::kRumor) == 0 || d.count(Label::kNonRumor) == 0)) {
    warn(name + ": dataset contains a single label");
  }
  return d;
}

/// Reads a JSONL event file, one event per line.
inline Dataset parse_events(const std::string& path, DatasetRole role = DatasetRole::kSource) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open event file '" + path + "'");
  return read_events(in, path, role);
}

inline void write_events(std::ostream& out, const Dataset& d) {
  for (const auto& e : d.events) out << event_to_json(e).dump() << '\n';
}

inline void write_events(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write event file '" + path + "'");
  write_events(out, d);
}

struct DatasetStats {
  std::size_t events = 0;
  std::size_t tree_nodes = 0;
  std::size_t rumors = 0;
  std::size_t non_rumors = 0;
  double avg_depth = 0.0;
  double avg_posts = 0.0;
};

inline DatasetStats dataset_stats(const Dataset& d) {
  DatasetStats s;
  s.events = d.events.size();
  double depth = 0.0;
  for (const auto& e : d.events) {
    s.tree_nodes += e.size();
    depth += e.depth();
  }
  s.rumors = d.count(Label::kRumor);
  s.non_rumors = d.count(Label::kNonRumor);
  if (s.events > 0) {
    s.avg_depth = depth / static_cast<double>(s.events);
    s.avg_posts = static_cast<double>(s.tree_nodes) / static_cast<double>(s.events);
  }
  return s;
}

struct FoldPlan {
  std::size_t k = 0;
  std::map<std::string, std::size_t> assignment;  // event_id -> fold
  bool stratified = true;
  std::uint64_t seed = 0;

  /// Dataset indices of the events in fold f, in dataset order.
  std::vector<std::size_t> fold_indices(const Dataset& d, std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < d.events.size(); ++i)
      if (assignment.at(d.events[i].event_id) == f) out.push_back(i);
    return out;
  }

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Assigns events to k folds. Each class is shuffled on the shuffle stream and
/// dealt round-robin, continuing the deal across classes so fold totals stay
/// balanced as well.
inline FoldPlan split_folds(const Dataset& d, std::size_t k, std::uint64_t seed,
                            bool stratified = true) {
  if (k < 2) throw StratificationError("fold count must be at least 2");
  if (d.events.size() < k) {
    throw StratificationError("cannot split " + std::to_string(d.events.size()) +
                              " events into " + std::to_string(k) + " non-empty folds");
  }
  RngStreams streams(seed);
  RandomStream& rng = streams[Stream::kShuffle];
  FoldPlan plan{k, {}, stratified, seed};
  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    for (Label l : {Label::kNonRumor, Label::kRumor}) {
      std::vector<std::size_t> g;
      for (std::size_t i = 0; i < d.events.size(); ++i)
        if (d.events[i].label == l) g.push_back(i);
      if (!g.empty() && g.size() < k) {
        warn("class '" + to_string(l) + "' has " + std::to_string(g.size()) +
             " events, fewer than the fold count " + std::to_string(k));
      }
      groups.push_back(std::move(g));
    }
  } else {
    std::vector<std::size_t> g(d.events.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = i;
    groups.push_back(std::move(g));
  }
  std::size_t next = 0;
  for (auto& g : groups) {
    rng.shuffle(g.begin(), g.end());
    for (std::size_t idx : g) {
      plan.assignment[d.events[idx].event_id] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

enum class CheckpointMode { kElapsedTime, kPostCount };

/// Ascending checkpoint grid. An infinite value means "no truncation".
struct CheckpointSpec {
  CheckpointMode mode = CheckpointMode::kPostCount;
  std::vector<double> values;

  void validate() const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double v = values[i];
      if (std::isnan(v) || !(v > 0.0)) throw ConfigError("checkpoint values must be positive");
      if (mode == CheckpointMode::kPostCount && std::isfinite(v) &&
          (v < 1.0 || v != std::floor(v))) {
        throw ConfigError("post_count checkpoints must be integers >= 1");
      }
      if (i > 0 && !(values[i - 1] < v)) throw ConfigError("checkpoints must be strictly ascending");
    }
  }
};

/// Keeps the posts available at a checkpoint. The claim always survives; the
/// parent-before-child order makes every prefix and time filter a valid tree.
inline Event truncate_event(const Event& e, CheckpointMode mode, double value) {
  Event out;
  out.event_id = e.event_id;
  out.label = e.label;
  if (mode == CheckpointMode::kPostCount) {
    const std::size_t n =
        std::isinf(value) ? e.posts.size()
                          : std::min(e.posts.size(), std::max<std::size_t>(1, static_cast<std::size_t>(value)));
    out.posts.assign(e.posts.begin(), e.posts.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    out.posts.push_back(e.posts.front());
    for (std::size_t i = 1; i < e.posts.size(); ++i)
      if (static_cast<double>(e.posts[i].timestamp) <= value) out.posts.push_back(e.posts[i]);
  }
  return out;
}

}  // namespace rumorgraph
