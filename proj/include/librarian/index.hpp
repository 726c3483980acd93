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

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "librarian/feature_vector.hpp"
#include "librarian/heuristics.hpp"

namespace librarian {

// A ground-truth binary with its authoritative library name and version.
struct KnownLibVersion {
  std::string library;
  std::string version;
  Arch arch = Arch::Other;
  FeatureVector fv;
  std::string sha256;
  std::string source;

  bool operator==(const KnownLibVersion&) const = default;
};

// Directory-backed corpus of known library versions.
//
// Layout under the root directory:
//   manifest.json                               record list
//   heuristics.json                             version heuristics
//   <library>/<version>/<arch>-<sha8>.json      one feature vector per record
//
// Records are kept in (library, version, arch, sha256) order, which is also
// the manifest order, so save/load cycles are byte-stable.
class IndexStore {
 public:
  // An empty in-memory store rooted at `root`; nothing is read.
  explicit IndexStore(std::filesystem::path root = {});

  // Loads the store at `root`. A missing directory or manifest yields an
  // empty store with the builtin heuristics. Throws SchemaError/IoError.
  static IndexStore open(const std::filesystem::path& root);

  // Extracts, labels and registers a binary. Adding the same bytes with the
  // same labels again is a no-op. Throws MalformedElf, UnsupportedClass or
  // ConflictingLabel. The reference stays valid until the next mutation.
  const KnownLibVersion& add(ByteView bytes, const std::string& file_name, const std::string& library,
                             const std::string& version, const std::string& source,
                             const NoiseFilter& filter);

  // Registers an already-extracted record (fv.library is set from labels).
  const KnownLibVersion& add_record(KnownLibVersion record);

  // Writes manifest, heuristics and every record file. Record files of
  // records no longer present are left untouched.
  void save() const;

  // All records; records of `arch` first, each group in store order.
  std::vector<const KnownLibVersion*> candidates(std::optional<Arch> arch = std::nullopt) const;

  const KnownLibVersion* find_by_hash(const std::string& sha256) const;
  std::vector<const KnownLibVersion*> find(const std::string& library, const std::string& version) const;
  const KnownLibVersion* find(const std::string& library, const std::string& version, Arch arch) const;

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::filesystem::path& root() const { return root_; }

  // Libraries present in the store, sorted.
  std::vector<std::string> libraries() const;

  const std::vector<VersionHeuristic>& heuristics() const { return heuristics_; }
  void set_heuristics(std::vector<VersionHeuristic> heuristics) { heuristics_ = std::move(heuristics); }

  // Relative path of a record file.
  static std::filesystem::path record_path(const KnownLibVersion& record);

  nlohmann::json manifest_json() const;

 private:
  using Key = std::tuple<std::string, std::string, std::string, std::string>;
  static Key key_of(const KnownLibVersion& r);

  std::filesystem::path root_;
  std::map<Key, KnownLibVersion> records_;
  std::unordered_map<std::string, Key> by_hash_;
  std::vector<VersionHeuristic> heuristics_;
};

// Derives a heuristic from all records of one library.
std::optional<VersionHeuristic> derive_heuristic(std::span<const KnownLibVersion* const> records);

// Exclusive advisory lock on <root>/manifest.lock, held for the object's
// lifetime. Serialises writers of one index directory.
class ManifestLock {
 public:
  explicit ManifestLock(const std::filesystem::path& root);
  ~ManifestLock();
  ManifestLock(const ManifestLock&) = delete;
  ManifestLock& operator=(const ManifestLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace librarian
