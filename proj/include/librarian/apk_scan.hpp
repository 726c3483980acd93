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
#include <vector>

#include <json.hpp>

#include "librarian/dates.hpp"
#include "librarian/feature_vector.hpp"
#include "librarian/heuristics.hpp"
#include "librarian/index.hpp"
#include "librarian/matcher.hpp"
#include "librarian/vuln.hpp"

namespace librarian {

enum class Abi { Armeabi, ArmeabiV7a, Arm64V8a, X86, X86_64, Other };

std::string_view abi_name(Abi abi);
// Maps a `lib/<abi>/` directory name; unknown names map to Other.
Abi parse_abi(std::string_view dir);
Arch abi_arch(Abi abi);

struct ApkEntry {
  Abi abi = Abi::Other;
  std::string inner_path;
  std::uint64_t size = 0;
  std::string sha256;

  bool operator==(const ApkEntry&) const = default;
};

// Identity of the app an APK belongs to.
struct AppMetadata {
  std::string app_id;
  std::optional<std::int64_t> version_code;
  std::optional<Date> release_date;

  bool operator==(const AppMetadata&) const = default;
};

struct ApkInventory {
  std::string apk_path;
  std::string apk_sha256;
  AppMetadata app;
  std::vector<ApkEntry> entries;  // central directory order

  bool operator==(const ApkInventory&) const = default;
};

// Reads `<apk>.meta.json` when present, else parses `<app_id>-<version_code>.apk`,
// else uses the file stem as app_id. Throws SchemaError for a bad sidecar.
AppMetadata read_app_metadata(const std::filesystem::path& apk);

// True for `lib/<abi>/...*.so` entry names.
bool is_native_library_path(std::string_view name);

// Lists and hashes every native library in the archive. Entry data is
// streamed, never written to disk. Throws NotAZip, CorruptArchive, IoError.
ApkInventory scan_apk(const std::filesystem::path& path);

// Outcome for one inventory entry; exactly one of `match` and `error_kind`
// is set.
struct ApkEntryResult {
  ApkEntry entry;
  std::optional<FeatureVector> fv;
  std::optional<MatchResult> match;
  std::string error_kind;
  std::string error_message;
};

struct ApkIdentification {
  ApkInventory inventory;
  std::vector<ApkEntryResult> results;  // inventory order, one per entry
};

// Builds a feature vector for every native library; `match` stays empty.
// Entries that fail to parse are kept with their error.
ApkIdentification extract_apk(const std::filesystem::path& path, const NoiseFilter& filter);

// Extracts and identifies every native library. Entries that fail are kept
// with their error. Throws EmptyIndex and whole-archive errors.
ApkIdentification identify_apk(const std::filesystem::path& path, const IndexStore& store,
                               const HeuristicSet& heuristics, const NoiseFilter& filter,
                               double threshold = kDefaultThreshold, unsigned jobs = 1);

// {apk, apk_sha256, app_id, version_code, release_date,
//  entries: [{inner_path, abi, size, sha256, match, error, cves}]}
nlohmann::json scan_report_json(const ApkIdentification& scan, std::span<const CveEntry> cvedb);

}  // namespace librarian
