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

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "librarian/feature_vector.hpp"
#include "librarian/heuristics.hpp"
#include "librarian/index.hpp"

namespace librarian {

inline constexpr double kDefaultThreshold = 0.85;

// Which metadata set a feature came from. Similarity is computed over
// (tag, name) pairs so an exported function never matches a dependency of
// the same name.
enum class FeatureTag { ExpFunc, ImpFunc, ExpGlob, ImpGlob, Dep };
inline constexpr std::array<FeatureTag, 5> kAllTags = {FeatureTag::ExpFunc, FeatureTag::ImpFunc, FeatureTag::ExpGlob,
                                                       FeatureTag::ImpGlob, FeatureTag::Dep};
std::string_view tag_name(FeatureTag tag);

using TaggedFeature = std::pair<FeatureTag, std::string>;

struct TaggedFeatureSet {
  std::set<TaggedFeature> elements;

  static TaggedFeatureSet from(const FeatureVector& fv);
};

const std::set<std::string>& feature_set(const FeatureVector& fv, FeatureTag tag);

// Jaccard coefficient over tagged metadata features. Two empty vectors
// score 0.
double bin2sim(const FeatureVector& a, const FeatureVector& b);

struct ContributionReport {
  std::array<double, 5> shares{};  // indexed by FeatureTag
  std::size_t intersection_size = 0;

  double share(FeatureTag tag) const { return shares[static_cast<std::size_t>(tag)]; }
};

// Fraction of the tagged intersection contributed by each feature type.
ContributionReport contribution_factors(const FeatureVector& a, const FeatureVector& b);

enum class MatchStatus { Identified, Tied, LowConfidence, Unknown };
enum class MatchMethod { Metadata, Strings, Both, Hash };

std::string_view status_name(MatchStatus s);
std::string_view method_name(MatchMethod m);

struct Candidate {
  std::string library;
  std::string version;
  Arch arch = Arch::Other;
  double score = 0.0;

  bool operator==(const Candidate&) const = default;
};

struct StringEvidence {
  std::string library;       // heuristic that fired
  std::string matched_text;
  std::string version;       // extracted version
  bool conflict = false;     // same library as the metadata answer, other version

  bool operator==(const StringEvidence&) const = default;
};

struct MatchResult {
  MatchStatus status = MatchStatus::Unknown;
  std::vector<Candidate> candidates;  // score desc, then (library, version, arch)
  std::optional<MatchMethod> method;  // set for Identified only
  bool confirmed_by_strings = false;
  std::vector<StringEvidence> string_evidence;

  bool operator==(const MatchResult&) const = default;
};

// Identifies one binary against the index.
//
// Metadata route: every record is scored with bin2sim. A top score strictly
// above `threshold` identifies the record; when several (library, version)
// pairs share that score the binary's sha256 is compared with the tied
// records' hashes, and without an exact match the result is Tied.
// Strings route: heuristics run over the rodata strings. They confirm a
// metadata answer (method Both), are recorded as a conflict when they
// disagree, and identify the binary on their own when no record scores above
// the threshold. Throws EmptyIndex.
MatchResult identify(const FeatureVector& fv, const IndexStore& store, const HeuristicSet& heuristics,
                     double threshold = kDefaultThreshold);

struct MethodTally {
  std::map<MatchMethod, std::size_t> methods;
  std::map<MatchStatus, std::size_t> statuses;
  std::size_t total = 0;

  // Share of all inputs identified by `m`.
  double method_share(MatchMethod m) const;
};

struct BatchResult {
  std::vector<MatchResult> results;  // input order
  MethodTally tally;
};

// Throws EmptyIndex. `jobs` caps the worker threads.
BatchResult batch_identify(std::span<const FeatureVector> fvs, const IndexStore& store,
                           const HeuristicSet& heuristics, double threshold = kDefaultThreshold,
                           unsigned jobs = 1);

nlohmann::json to_json(const MatchResult& r);
MatchResult match_result_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ContributionReport& r);
nlohmann::json to_json(const MethodTally& t);

}  // namespace librarian
