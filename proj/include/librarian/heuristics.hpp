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

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace librarian {

// How a pattern is applied to a harvested string.
enum class MatchMode {
  Search,  // anywhere in the string
  Full,    // the whole string must match
};

// Per-library regular expressions that locate version-bearing strings.
//
// `version_group` selects how the version text is taken from a match:
//   "numeric"  the first dotted numeric token starting inside the match,
//              extended to its full length in the source string (a token
//              with a dot is preferred over a bare number). Tokens look like
//              1.0.2, 1.0.2k, 1.2rc1 or 2017.4.10f1.
//   "<N>"      capture group N verbatim.
struct VersionHeuristic {
  std::string library;
  std::vector<std::string> patterns;
  std::string version_group = "numeric";
  MatchMode match = MatchMode::Search;

  bool operator==(const VersionHeuristic&) const = default;
};

struct HeuristicHit {
  std::string library;
  std::string matched_text;
  std::string version;
  std::string source;  // the harvested string the pattern ran over
  std::size_t source_index = 0;

  bool operator==(const HeuristicHit&) const = default;
};

// The fifteen heuristics shipped with the tool.
std::vector<VersionHeuristic> load_builtin_heuristics();

nlohmann::json heuristics_to_json(std::span<const VersionHeuristic> heuristics);
// Throws SchemaError.
std::vector<VersionHeuristic> heuristics_from_json(const nlohmann::json& doc);

// Compiled, immutable heuristic set. Safe to share between threads.
class HeuristicSet {
 public:
  HeuristicSet();
  // Throws SchemaError naming the library and pattern that fails to compile.
  explicit HeuristicSet(std::vector<VersionHeuristic> heuristics);
  ~HeuristicSet();
  HeuristicSet(HeuristicSet&&) noexcept;
  HeuristicSet& operator=(HeuristicSet&&) noexcept;
  HeuristicSet(const HeuristicSet&);
  HeuristicSet& operator=(const HeuristicSet&);

  static HeuristicSet builtin();

  const std::vector<VersionHeuristic>& heuristics() const;

  // All hits on one string, best first: longest matched span, then library
  // name. At most one hit per heuristic.
  std::vector<HeuristicHit> scan_string(std::string_view s) const;

  // Hits over all strings, in string order and best-first within a string.
  std::vector<HeuristicHit> scan(std::span<const std::string> strings) const;

 private:
  struct Compiled;
  std::vector<VersionHeuristic> heuristics_;
  std::shared_ptr<const std::vector<Compiled>> compiled_;
};

// The numeric version token rule described on VersionHeuristic, applied to
// `s` with the match occupying [begin, end). Empty when no digit is found.
std::string numeric_version_token(std::string_view s, std::size_t begin, std::size_t end);

// Version pattern substituted for the concrete version by derivation.
inline constexpr std::string_view kDerivedVersionPattern = "[0-9]+(\\.[0-9]+)*[a-z]?";

struct VersionedStrings {
  std::string version;
  std::span<const std::string> strings;
};

// Learns a heuristic from the rodata strings of several versions of one
// library. Returns nullopt when fewer than two distinct versions are given or
// when no string family carries the version next to the library name.
std::optional<VersionHeuristic> derive_heuristic(std::string_view library,
                                                 std::span<const VersionedStrings> versions);

// Lowercase names under which `library` may appear in its own strings.
std::vector<std::string> library_aliases(std::string_view library);

}  // namespace librarian
