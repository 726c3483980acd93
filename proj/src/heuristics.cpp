/*
 * Copyright 2026 The Librarian Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "librarian/heuristics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <regex>
#include <set>

#include "librarian/errors.hpp"

namespace librarian {

using nlohmann::json;

std::vector<VersionHeuristic> load_builtin_heuristics() {
  // Alternations are split into separate patterns; joined with '|' they give
  // back the original expressions. The Firebase pattern escapes the literal
  // "C++", which is otherwise a nested quantifier.
  return {
      {"Jpeg-turbo", {R"(Jpeg-turbo version 1(\.[0-9]{1,})*)"}},
      {"FFmpeg", {R"(ffmpeg-([0-9]\.)*[0-9])", R"(FFmpeg version ([0-9]\.)*[0-9])"}},
      {"Firebase", {R"(Firebase C\+\+ [0-9]+(\.[0-9])*)"}},
      {"Libavcodec", {R"(Lavc5[0-9](\.[0-9]{1,}))"}},
      {"Libavfilter", {R"(Lavf5[0-9](\.[0-9]{1,}))"}},
      {"Libpng", {R"(Libpng version 1(\.[0-9]{1,})*)"}},
      {"Libglog", {R"(glog-[0-9]+(\.[0-9])*)"}},
      {"Libvpx", {R"(WebM Project VP(.*))"}},
      {"OpenCV", {R"(General configuration for OpenCV [0-9]+(\.[0-9])*)", R"(opencv-[0-9]+(\.[0-9])*)"}},
      {"OpenSSL", {R"(openssl-1(\.[0-9])*[a-z])", R"(^OpenSSL 1(\.[0-9])*[a-z])"}},
      {"Speex", {R"(speex-(.*))"}},
      {"SQLite3", {R"(^3\.([0-9]{1,}\.)+[0-9])"}, "numeric", MatchMode::Full},
      {"Unity3D", {R"(([0-9]+\.)+([0-9]+)[a-z][0-9])", R"(Expected version:(.*))"}},
      {"Vorbis", {R"(Xiph.Org Vorbis 1.(.*))"}},
      {"XML2", {R"(GITv2.[0-9]+(\.[0-9]))"}},
  };
}

json heuristics_to_json(std::span<const VersionHeuristic> heuristics) {
  json arr = json::array();
  for (const auto& h : heuristics) {
    json item{{"library", h.library}, {"patterns", h.patterns}, {"version_group", h.version_group}};
    if (h.match == MatchMode::Full) item["match"] = "full";
    arr.push_back(std::move(item));
  }
  return arr;
}

std::vector<VersionHeuristic> heuristics_from_json(const json& doc) {
  if (!doc.is_array()) throw SchemaError("heuristics: document must be an array");
  std::vector<VersionHeuristic> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    const std::string where = "heuristics[" + std::to_string(i) + "]";
    if (!item.is_object()) throw SchemaError(where + ": must be an object");
    VersionHeuristic h;
    auto lib = item.find("library");
    if (lib == item.end() || !lib->is_string()) throw SchemaError(where + ": library must be a string");
    h.library = lib->get<std::string>();
    auto pats = item.find("patterns");
    if (pats == item.end() || !pats->is_array() || pats->empty()) {
      throw SchemaError(where + ": patterns must be a non-empty array");
    }
    for (const auto& p : *pats) {
      if (!p.is_string()) throw SchemaError(where + ": patterns must be strings");
      h.patterns.push_back(p.get<std::string>());
    }
    if (auto g = item.find("version_group"); g != item.end()) {
      if (!g->is_string()) throw SchemaError(where + ": version_group must be a string");
      h.version_group = g->get<std::string>();
    }
    if (auto m = item.find("match"); m != item.end()) {
      if (*m == "full") h.match = MatchMode::Full;
      else if (*m == "search") h.match = MatchMode::Search;
      else throw SchemaError(where + ": match must be \"search\" or \"full\"");
    }
    out.push_back(std::move(h));
  }
  return out;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Length of the version token beginning at s[pos] (which must be a digit).
std::size_t token_length(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i < s.size() && is_digit(s[i])) ++i;
  while (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
    ++i;
    while (i < s.size() && is_digit(s[i])) ++i;
  }
  std::size_t j = i;
  while (j < s.size() && is_lower(s[j])) ++j;
  if (j > i) {
    while (j < s.size() && is_digit(s[j])) ++j;
    i = j;
  }
  return i - pos;
}

struct GroupSpec {
  bool numeric = true;
  std::size_t group = 0;
};

GroupSpec parse_group(const std::string& library, const std::string& spec) {
  if (spec == "numeric") return {};
  std::size_t g = 0;
  auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), g);
  if (ec != std::errc() || ptr != spec.data() + spec.size()) {
    throw SchemaError("heuristic " + library + ": version_group must be \"numeric\" or a group number");
  }
  return {false, g};
}

}  // namespace

std::string numeric_version_token(std::string_view s, std::size_t begin, std::size_t end) {
  std::string first_bare;
  for (std::size_t p = begin; p < end && p < s.size(); ++p) {
    if (!is_digit(s[p]) || (p > 0 && is_digit(s[p - 1]))) continue;
    std::string tok(s.substr(p, token_length(s, p)));
    if (tok.find('.') != std::string::npos) return tok;
    if (first_bare.empty()) first_bare = std::move(tok);
  }
  return first_bare;
}

struct HeuristicSet::Compiled {
  std::string library;
  std::vector<std::regex> regexes;
  GroupSpec group;
  MatchMode match = MatchMode::Search;
};

HeuristicSet::HeuristicSet() : compiled_(std::make_shared<std::vector<Compiled>>()) {}

HeuristicSet::HeuristicSet(std::vector<VersionHeuristic> heuristics) : heuristics_(std::move(heuristics)) {
  auto compiled = std::make_shared<std::vector<Compiled>>();
  for (const auto& h : heuristics_) {
    Compiled c;
    c.library = h.library;
    c.group = parse_group(h.library, h.version_group);
    c.match = h.match;
    for (const auto& p : h.patterns) {
      try {
        c.regexes.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
      } catch (const std::regex_error& e) {
        throw SchemaError("heuristic " + h.library + ": pattern \"" + p + "\" does not compile: " + e.what());
      }
    }
    compiled->push_back(std::move(c));
  }
  compiled_ = std::move(compiled);
}

HeuristicSet::~HeuristicSet() = default;
HeuristicSet::HeuristicSet(HeuristicSet&&) noexcept = default;
HeuristicSet& HeuristicSet::operator=(HeuristicSet&&) noexcept = default;
HeuristicSet::HeuristicSet(const HeuristicSet&) = default;
HeuristicSet& HeuristicSet::operator=(const HeuristicSet&) = default;

HeuristicSet HeuristicSet::builtin() { return HeuristicSet(load_builtin_heuristics()); }

const std::vector<VersionHeuristic>& HeuristicSet::heuristics() const { return heuristics_; }

std::vector<HeuristicHit> HeuristicSet::scan_string(std::string_view s) const {
  std::vector<HeuristicHit> hits;
  for (const auto& c : *compiled_) {
    std::optional<HeuristicHit> best;
    for (const auto& re : c.regexes) {
      std::match_results<std::string_view::const_iterator> m;
      const bool ok = c.match == MatchMode::Full ? std::regex_match(s.begin(), s.end(), m, re)
                                                 : std::regex_search(s.begin(), s.end(), m, re);
      if (!ok) continue;
      const auto begin = static_cast<std::size_t>(m.position(0));
      const auto length = static_cast<std::size_t>(m.length(0));
      std::string version;
      if (c.group.numeric) {
        version = numeric_version_token(s, begin, begin + length);
      } else if (c.group.group < m.size()) {
        version = m.str(c.group.group);
      }
      if (version.empty()) continue;
      if (!best || length > best->matched_text.size()) {
        best = HeuristicHit{c.library, std::string(s.substr(begin, length)), std::move(version), std::string(s), 0};
      }
    }
    if (best) hits.push_back(std::move(*best));
  }
  std::stable_sort(hits.begin(), hits.end(), [](const HeuristicHit& a, const HeuristicHit& b) {
    if (a.matched_text.size() != b.matched_text.size()) return a.matched_text.size() > b.matched_text.size();
    return a.library < b.library;
  });
  return hits;
}

std::vector<HeuristicHit> HeuristicSet::scan(std::span<const std::string> strings) const {
  std::vector<HeuristicHit> out;
  for (std::size_t i = 0; i < strings.size(); ++i) {
    auto hits = scan_string(strings[i]);
    for (auto& h : hits) {
      h.source_index = i;
      out.push_back(std::move(h));
    }
  }
  return out;
}

std::vector<std::string> library_aliases(std::string_view library) {
  static const std::map<std::string, std::vector<std::string>> kShipped = {
      {"jpeg-turbo", {"libjpeg-turbo", "jpeg"}},
      {"xml2", {"libxml", "libxml2"}},
      {"libavcodec", {"lavc"}},
      {"libavformat", {"lavf"}},
      {"libavfilter", {"lavfi", "lavf"}},
      {"libavutil", {"lavu"}},
      {"libswscale", {"swscale"}},
      {"libswresample", {"swr", "swresample"}},
      {"libvpx", {"webm", "vpx"}},
      {"vorbis", {"xiph"}},
      {"unity3d", {"unity"}},
      {"sqlite3", {"sqlite"}},
      {"giflib", {"gif"}},
      {"webp", {"libwebp"}},
  };
  std::set<std::string> out;
  const std::string name = lower(library);
  if (name.empty()) return {};
  out.insert(name);
  if (name.starts_with("lib") && name.size() > 3) out.insert(name.substr(3));
  std::string stem = name;
  while (!stem.empty() && is_digit(stem.back())) stem.pop_back();
  if (stem.size() >= 3) out.insert(stem);
  if (auto it = kShipped.find(name); it != kShipped.end()) out.insert(it->second.begin(), it->second.end());
  return {out.begin(), out.end()};
}

namespace {

std::string regex_escape(std::string_view s) {
  static constexpr std::string_view kMeta = R"(\^$.|?*+()[]{})";
  std::string out;
  for (char c : s) {
    if (kMeta.find(c) != std::string_view::npos) out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

bool contains_any(std::string_view text, const std::vector<std::string>& needles) {
  const std::string l = lower(text);
  return std::any_of(needles.begin(), needles.end(),
                     [&](const std::string& n) { return l.find(n) != std::string::npos; });
}

// Occurrence of `version` in `s` at `pos` that is not part of a longer
// version token.
bool at_token_boundary(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos > 0 && (is_digit(s[pos - 1]) || s[pos - 1] == '.')) return false;
  const std::size_t after = pos + len;
  if (after < s.size()) {
    const char c = s[after];
    if (is_digit(c) || is_lower(c)) return false;
    if (c == '.' && after + 1 < s.size() && is_digit(s[after + 1])) return false;
  }
  return true;
}

// The library-name-bearing side of a string around the version occurrence;
// the other side (build dates, compiler banners) is free to vary.
struct Anchor {
  bool prefix = true;
  std::string text;
  auto operator<=>(const Anchor&) const = default;
};

std::set<Anchor> anchors_for(std::string_view version, std::span<const std::string> strings,
                             const std::vector<std::string>& aliases) {
  std::set<Anchor> out;
  for (const auto& s : strings) {
    for (std::size_t pos = s.find(version); pos != std::string::npos; pos = s.find(version, pos + 1)) {
      if (!at_token_boundary(s, pos, version.size())) continue;
      const std::string_view sv(s);
      const auto before = sv.substr(0, pos);
      const auto after = sv.substr(pos + version.size());
      if (contains_any(before, aliases)) out.insert({true, std::string(before)});
      else if (contains_any(after, aliases)) out.insert({false, std::string(after)});
      break;
    }
  }
  return out;
}

}  // namespace

std::optional<VersionHeuristic> derive_heuristic(std::string_view library,
                                                 std::span<const VersionedStrings> versions) {
  // Merge records that share a version (e.g. several architectures).
  std::map<std::string, std::set<Anchor>> by_version;
  const auto aliases = library_aliases(library);
  for (const auto& v : versions) {
    if (v.version.empty()) continue;
    auto anchors = anchors_for(v.version, v.strings, aliases);
    by_version[v.version].insert(anchors.begin(), anchors.end());
  }
  if (by_version.size() < 2) return std::nullopt;

  std::set<Anchor> common = by_version.begin()->second;
  for (const auto& [ver, anchors] : by_version) {
    std::set<Anchor> next;
    std::set_intersection(common.begin(), common.end(), anchors.begin(), anchors.end(),
                          std::inserter(next, next.begin()));
    common = std::move(next);
  }
  if (common.empty()) return std::nullopt;

  VersionHeuristic h;
  h.library = std::string(library);
  h.version_group = "1";
  const std::string capture = "(" + std::string(kDerivedVersionPattern) + ")";
  for (const auto& a : common) {
    h.patterns.push_back(a.prefix ? regex_escape(a.text) + capture : capture + regex_escape(a.text));
  }
  return h;
}

}  // namespace librarian
