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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "librarian/dates.hpp"

namespace librarian {

struct CveEntry {
  std::string cve_id;
  std::string library;
  // Exact version strings in the library's own scheme, e.g. "1.0.2k".
  std::vector<std::string> affected_versions;
  Date disclosure_date;
  std::string patch_version;
  Date patch_release_date;
  std::string severity;
  std::string description;

  bool affects(const std::string& library, const std::string& version) const;
  bool operator==(const CveEntry&) const = default;
};

// Parses and validates a CVE database (JSON array). Throws SchemaError naming
// the offending entry index.
std::vector<CveEntry> load_cvedb(const nlohmann::json& doc);
std::vector<CveEntry> load_cvedb_file(const std::filesystem::path& path);
nlohmann::json to_json(const CveEntry& cve);

// Entries whose library matches case-insensitively and whose affected list
// contains `version` exactly.
std::vector<CveEntry> flag_vulnerable(const std::string& library, const std::string& version,
                                      std::span<const CveEntry> cvedb);

struct LibraryVersion {
  std::string library;
  std::string version;

  auto operator<=>(const LibraryVersion&) const = default;
};

struct AppVersion {
  std::int64_t version_code = 0;
  Date release_date;
  std::vector<LibraryVersion> identified_libs;

  bool operator==(const AppVersion&) const = default;
};

struct AppTimeline {
  std::string app_id;
  std::vector<AppVersion> versions;  // increasing version_code

  bool operator==(const AppTimeline&) const = default;
};

// Throws SchemaError when fields are missing or version codes are not
// strictly increasing with non-decreasing release dates.
AppTimeline parse_timeline(const nlohmann::json& doc);
nlohmann::json to_json(const AppTimeline& timeline);

// Builds one timeline per app from scan reports that carry app_id,
// version_code and release_date. Only Identified entries contribute.
std::vector<AppTimeline> assemble_timelines(std::span<const nlohmann::json> scan_reports);

enum class FixKind { Updated, Removed, StillPresent };
std::string_view fix_kind_name(FixKind k);

// Residency of one library version in one app: a maximal run of consecutive
// app versions that contain it.
struct LibrarySpan {
  std::string app_id;
  std::string library;
  std::string lib_version;
  Date first_seen;
  Date last_seen;
  std::optional<Date> fix_date;  // release of the first app version after the run
  FixKind fix_kind = FixKind::StillPresent;

  bool operator==(const LibrarySpan&) const = default;
};

std::vector<LibrarySpan> compute_spans(const AppTimeline& timeline);

// Days from disclosure to patch availability; negative when the patch
// predates disclosure.
long long ttrp(const CveEntry& cve);

// Days from patch availability to the fixing app release; nullopt while the
// version is still present. Throws InvalidPair when `cve` does not affect
// the span's library version.
std::optional<long long> ttaf(const LibrarySpan& span, const CveEntry& cve);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean; 0 for n < 2
  std::size_t n = 0;

  bool operator==(const MeanSe&) const = default;
};

// Values are summed in ascending order so the result does not depend on the
// input permutation.
MeanSe mean_se(std::vector<double> values);

struct SpanCveRow {
  std::string app_id;
  std::string library;
  std::string lib_version;
  std::string cve_id;
  Date disclosure_date;
  Date patch_release_date;
  long long ttrp_days = 0;
  Date first_seen;
  Date last_seen;
  std::optional<Date> fix_date;
  FixKind fix_kind = FixKind::StillPresent;
  std::optional<long long> ttaf_days;
  // Removed before the CVE was disclosed; kept in the table, left out of the
  // TTAF statistics.
  bool excluded = false;

  bool operator==(const SpanCveRow&) const = default;
};

struct GroupStat {
  std::string key;
  MeanSe ttaf;

  bool operator==(const GroupStat&) const = default;
};

struct StudyReport {
  Date as_of;
  std::vector<SpanCveRow> rows;
  MeanSe ttrp;                 // over distinct CVEs present in rows
  MeanSe ttaf;                 // over (span, cve) pairs
  MeanSe ttaf_app_weighted;    // over per-app means
  std::vector<GroupStat> per_app;      // mean TTAF desc
  std::vector<GroupStat> per_library;  // mean TTAF desc
  std::size_t vulnerable_spans = 0;
  std::size_t still_vulnerable_spans = 0;
  std::size_t apps_still_vulnerable = 0;
  MeanSe still_vulnerable_outdated_days;  // as_of - earliest patch release

  bool operator==(const StudyReport&) const = default;
};

// Joins spans with the CVE database and computes TTRP/TTAF statistics.
// Permutation-invariant in both inputs.
StudyReport aggregate(std::span<const LibrarySpan> spans, std::span<const CveEntry> cvedb, Date as_of);

nlohmann::json to_json(const StudyReport& report);
// One row per (span, cve) pair.
std::string rows_csv(const StudyReport& report);
std::string groups_csv(std::span<const GroupStat> groups, std::string_view key_name);
std::string summary_csv(const StudyReport& report);

}  // namespace librarian
