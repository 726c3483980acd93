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

#include "librarian/matcher.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <exception>
#include <mutex>
#include <thread>

#include "librarian/errors.hpp"

namespace librarian {

using nlohmann::json;

std::string_view tag_name(FeatureTag tag) {
  switch (tag) {
    case FeatureTag::ExpFunc:
      return "exported_functions";
    case FeatureTag::ImpFunc:
      return "imported_functions";
    case FeatureTag::ExpGlob:
      return "exported_globals";
    case FeatureTag::ImpGlob:
      return "imported_globals";
    case FeatureTag::Dep:
      return "dependencies";
  }
  return "?";
}

std::string_view status_name(MatchStatus s) {
  switch (s) {
    case MatchStatus::Identified:
      return "Identified";
    case MatchStatus::Tied:
      return "Tied";
    case MatchStatus::LowConfidence:
      return "LowConfidence";
    case MatchStatus::Unknown:
      return "Unknown";
  }
  return "?";
}

std::string_view method_name(MatchMethod m) {
  switch (m) {
    case MatchMethod::Metadata:
      return "metadata";
    case MatchMethod::Strings:
      return "strings";
    case MatchMethod::Both:
      return "both";
    case MatchMethod::Hash:
      return "hash";
  }
  return "?";
}

const std::set<std::string>& feature_set(const FeatureVector& fv, FeatureTag tag) {
  switch (tag) {
    case FeatureTag::ExpFunc:
      return fv.exported_functions;
    case FeatureTag::ImpFunc:
      return fv.imported_functions;
    case FeatureTag::ExpGlob:
      return fv.exported_globals;
    case FeatureTag::ImpGlob:
      return fv.imported_globals;
    case FeatureTag::Dep:
      break;
  }
  return fv.dependencies;
}

TaggedFeatureSet TaggedFeatureSet::from(const FeatureVector& fv) {
  TaggedFeatureSet out;
  for (FeatureTag tag : kAllTags) {
    for (const auto& name : feature_set(fv, tag)) out.elements.emplace(tag, name);
  }
  return out;
}

namespace {

std::size_t intersection_count(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

struct Scored {
  const KnownLibVersion* record;
  double score;
};

bool candidate_order(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.library != b.library) return a.library < b.library;
  if (a.version != b.version) return a.version < b.version;
  return arch_name(a.arch) < arch_name(b.arch);
}

Candidate to_candidate(const Scored& s) {
  return {s.record->library, s.record->version, s.record->arch, s.score};
}

// Candidates are unique per (library, version, arch).
void push_unique(std::vector<Candidate>& out, Candidate c) {
  auto same = [&](const Candidate& x) {
    return x.library == c.library && x.version == c.version && x.arch == c.arch;
  };
  if (std::none_of(out.begin(), out.end(), same)) out.push_back(std::move(c));
}

bool better_hit(const HeuristicHit& a, const HeuristicHit& b) {
  if (a.matched_text.size() != b.matched_text.size()) return a.matched_text.size() > b.matched_text.size();
  if (a.library != b.library) return a.library < b.library;
  if (a.version != b.version) return a.version < b.version;
  return a.source_index < b.source_index;
}

}  // namespace

double bin2sim(const FeatureVector& a, const FeatureVector& b) {
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (FeatureTag tag : kAllTags) {
    const auto& sa = feature_set(a, tag);
    const auto& sb = feature_set(b, tag);
    const std::size_t n = intersection_count(sa, sb);
    inter += n;
    uni += sa.size() + sb.size() - n;
  }
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

ContributionReport contribution_factors(const FeatureVector& a, const FeatureVector& b) {
  ContributionReport report;
  std::array<std::size_t, 5> counts{};
  for (FeatureTag tag : kAllTags) {
    counts[static_cast<std::size_t>(tag)] = intersection_count(feature_set(a, tag), feature_set(b, tag));
    report.intersection_size += counts[static_cast<std::size_t>(tag)];
  }
  if (report.intersection_size == 0) return report;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    report.shares[i] = static_cast<double>(counts[i]) / static_cast<double>(report.intersection_size);
  }
  return report;
}

MatchResult identify(const FeatureVector& fv, const IndexStore& store, const HeuristicSet& heuristics,
                     double threshold) {
  if (store.empty()) throw EmptyIndex();

  std::vector<Scored> scored;
  for (const auto* r : store.candidates(fv.binary.arch)) scored.push_back({r, bin2sim(fv, r->fv)});
  // Stable: within equal scores the query's architecture comes first.
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });
  const double top = scored.front().score;

  MatchResult res;
  const auto hits = heuristics.scan(fv.rodata_strings);
  for (const auto& h : hits) {
    StringEvidence e{h.library, h.matched_text, h.version, false};
    if (std::find(res.string_evidence.begin(), res.string_evidence.end(), e) == res.string_evidence.end()) {
      res.string_evidence.push_back(std::move(e));
    }
  }

  if (top > threshold) {
    std::vector<Scored> tied;
    for (const auto& s : scored) {
      if (s.score != top) break;
      tied.push_back(s);
    }
    const bool one_version = std::all_of(tied.begin(), tied.end(), [&](const Scored& s) {
      return s.record->library == tied.front().record->library && s.record->version == tied.front().record->version;
    });
    if (one_version) {
      res.status = MatchStatus::Identified;
      res.method = MatchMethod::Metadata;
      res.candidates.push_back(to_candidate(tied.front()));
    } else {
      auto exact = std::find_if(tied.begin(), tied.end(),
                                [&](const Scored& s) { return s.record->sha256 == fv.binary.file_sha256; });
      if (exact != tied.end()) {
        res.status = MatchStatus::Identified;
        res.method = MatchMethod::Hash;
        res.candidates.push_back(to_candidate(*exact));
      } else {
        res.status = MatchStatus::Tied;
        for (const auto& s : tied) push_unique(res.candidates, to_candidate(s));
      }
    }

    if (res.status == MatchStatus::Identified) {
      const Candidate& answer = res.candidates.front();
      bool agreed = false;
      for (auto& e : res.string_evidence) {
        if (!iequals(e.library, answer.library)) continue;
        if (e.version == answer.version) agreed = true;
        else e.conflict = true;
      }
      res.confirmed_by_strings = agreed;
      if (agreed && res.method == MatchMethod::Metadata) res.method = MatchMethod::Both;
    }
  } else {
    if (!hits.empty()) {
      const HeuristicHit& best = *std::min_element(hits.begin(), hits.end(), better_hit);
      double score = 0.0;
      for (const auto& s : scored) {
        if (iequals(s.record->library, best.library) && s.record->version == best.version) {
          score = std::max(score, s.score);
        }
      }
      res.status = MatchStatus::Identified;
      res.method = MatchMethod::Strings;
      res.candidates.push_back({best.library, best.version, fv.binary.arch, score});
    } else if (top > 0.0) {
      res.status = MatchStatus::LowConfidence;
      for (const auto& s : scored) {
        if (res.candidates.size() == 3) break;
        push_unique(res.candidates, to_candidate(s));
      }
    } else {
      res.status = MatchStatus::Unknown;
    }
  }
  std::stable_sort(res.candidates.begin(), res.candidates.end(), candidate_order);
  return res;
}

double MethodTally::method_share(MatchMethod m) const {
  if (total == 0) return 0.0;
  auto it = methods.find(m);
  return it == methods.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

BatchResult batch_identify(std::span<const FeatureVector> fvs, const IndexStore& store,
                           const HeuristicSet& heuristics, double threshold, unsigned jobs) {
  if (store.empty()) throw EmptyIndex();
  BatchResult out;
  out.results.resize(fvs.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < fvs.size(); i = next++) {
      try {
        out.results[i] = identify(fvs[i], store, heuristics, threshold);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(fvs.size())));
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  for (const auto& r : out.results) {
    ++out.tally.total;
    ++out.tally.statuses[r.status];
    if (r.method) ++out.tally.methods[*r.method];
  }
  return out;
}

json to_json(const MatchResult& r) {
  json candidates = json::array();
  for (const auto& c : r.candidates) {
    candidates.push_back({{"library", c.library}, {"version", c.version}, {"arch", arch_name(c.arch)}, {"score", c.score}});
  }
  json evidence = json::array();
  for (const auto& e : r.string_evidence) {
    evidence.push_back({{"library", e.library}, {"matched_text", e.matched_text}, {"version", e.version}, {"conflict", e.conflict}});
  }
  return {{"status", status_name(r.status)},
          {"method", r.method ? json(method_name(*r.method)) : json(nullptr)},
          {"confirmed_by_strings", r.confirmed_by_strings},
          {"candidates", std::move(candidates)},
          {"evidence", std::move(evidence)}};
}

MatchResult match_result_from_json(const json& doc) {
  try {
    MatchResult r;
    const auto status = doc.at("status").get<std::string>();
    bool found = false;
    for (auto s : {MatchStatus::Identified, MatchStatus::Tied, MatchStatus::LowConfidence, MatchStatus::Unknown}) {
      if (status_name(s) == status) {
        r.status = s;
        found = true;
      }
    }
    if (!found) throw SchemaError("match result: unknown status " + status);
    if (!doc.at("method").is_null()) {
      const auto method = doc.at("method").get<std::string>();
      for (auto m : {MatchMethod::Metadata, MatchMethod::Strings, MatchMethod::Both, MatchMethod::Hash}) {
        if (method_name(m) == method) r.method = m;
      }
      if (!r.method) throw SchemaError("match result: unknown method " + method);
    }
    r.confirmed_by_strings = doc.at("confirmed_by_strings").get<bool>();
    for (const auto& c : doc.at("candidates")) {
      auto arch = parse_arch(c.at("arch").get<std::string>());
      if (!arch) throw SchemaError("match result: unknown arch");
      r.candidates.push_back({c.at("library").get<std::string>(), c.at("version").get<std::string>(), *arch,
                              c.at("score").get<double>()});
    }
    for (const auto& e : doc.at("evidence")) {
      r.string_evidence.push_back({e.at("library").get<std::string>(), e.at("matched_text").get<std::string>(),
                                   e.at("version").get<std::string>(), e.at("conflict").get<bool>()});
    }
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("match result: ") + e.what());
  }
}

json to_json(const ContributionReport& r) {
  json shares = json::object();
  for (FeatureTag tag : kAllTags) shares[std::string(tag_name(tag))] = r.share(tag);
  return {{"intersection_size", r.intersection_size}, {"shares", std::move(shares)}};
}

json to_json(const MethodTally& t) {
  json methods = json::object();
  for (auto m : {MatchMethod::Metadata, MatchMethod::Strings, MatchMethod::Both, MatchMethod::Hash}) {
    auto it = t.methods.find(m);
    methods[std::string(method_name(m))] = it == t.methods.end() ? 0 : it->second;
  }
  json statuses = json::object();
  for (auto s : {MatchStatus::Identified, MatchStatus::Tied, MatchStatus::LowConfidence, MatchStatus::Unknown}) {
    auto it = t.statuses.find(s);
    statuses[std::string(status_name(s))] = it == t.statuses.end() ? 0 : it->second;
  }
  return {{"total", t.total}, {"methods", std::move(methods)}, {"statuses", std::move(statuses)}};
}

}  // namespace librarian
