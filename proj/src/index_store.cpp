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

#include "librarian/index.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <set>

#include "librarian/errors.hpp"

namespace librarian {

using nlohmann::json;

namespace {

constexpr int kManifestSchemaVersion = 1;

std::string path_component(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-' || c == '+';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == ".." || out == "manifest.json" || out == "heuristics.json") {
    out.insert(out.begin(), '_');
  }
  return out;
}

std::string manifest_string(const json& item, const char* key, std::size_t i) {
  auto it = item.find(key);
  if (it == item.end() || !it->is_string()) {
    throw SchemaError("manifest records[" + std::to_string(i) + "]: " + key + " must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

IndexStore::IndexStore(std::filesystem::path root)
    : root_(std::move(root)), heuristics_(load_builtin_heuristics()) {}

IndexStore::Key IndexStore::key_of(const KnownLibVersion& r) {
  return {r.library, r.version, std::string(arch_name(r.arch)), r.sha256};
}

std::filesystem::path IndexStore::record_path(const KnownLibVersion& r) {
  return std::filesystem::path(path_component(r.library)) / path_component(r.version) /
         (std::string(arch_name(r.arch)) + "-" + r.sha256.substr(0, 8) + ".json");
}

IndexStore IndexStore::open(const std::filesystem::path& root) {
  IndexStore store(root);
  const auto heuristics_file = root / "heuristics.json";
  if (std::filesystem::exists(heuristics_file)) {
    store.heuristics_ = heuristics_from_json(read_json_file(heuristics_file));
  }
  const auto manifest_file = root / "manifest.json";
  if (!std::filesystem::exists(manifest_file)) return store;

  const json manifest = read_json_file(manifest_file);
  if (!manifest.is_object() || !manifest.contains("records") || !manifest["records"].is_array()) {
    throw SchemaError("manifest: records must be an array");
  }
  if (manifest.value("schema_version", 0) != kManifestSchemaVersion) {
    throw SchemaError("manifest: unsupported schema_version");
  }
  const json& records = manifest["records"];
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& item = records[i];
    KnownLibVersion r;
    r.library = manifest_string(item, "library", i);
    r.version = manifest_string(item, "version", i);
    auto arch = parse_arch(manifest_string(item, "arch", i));
    if (!arch) throw SchemaError("manifest records[" + std::to_string(i) + "]: unknown arch");
    r.arch = *arch;
    r.sha256 = manifest_string(item, "sha256", i);
    r.source = manifest_string(item, "source", i);
    r.fv = read_fv_file(root / manifest_string(item, "path", i));
    if (r.fv.binary.file_sha256 != r.sha256) {
      throw SchemaError("manifest records[" + std::to_string(i) + "]: feature vector hash does not match");
    }
    store.add_record(std::move(r));
  }
  return store;
}

const KnownLibVersion& IndexStore::add(ByteView bytes, const std::string& file_name, const std::string& library,
                                       const std::string& version, const std::string& source,
                                       const NoiseFilter& filter) {
  const std::string sha = sha256_hex(bytes);
  if (auto it = by_hash_.find(sha); it != by_hash_.end()) {
    const KnownLibVersion& existing = records_.at(it->second);
    if (existing.library == library && existing.version == version) return existing;
    throw ConflictingLabel("binary " + sha + " is already indexed as " + existing.library + " " +
                           existing.version + ", refusing " + library + " " + version);
  }
  ElfImage image = parse_elf(bytes, file_name);
  KnownLibVersion r;
  r.library = library;
  r.version = version;
  r.arch = image.machine.arch;
  r.sha256 = image.file_sha256;
  r.source = source;
  r.fv = build_feature_vector(image, filter);
  return add_record(std::move(r));
}

const KnownLibVersion& IndexStore::add_record(KnownLibVersion record) {
  if (record.sha256.empty()) record.sha256 = record.fv.binary.file_sha256;
  if (record.fv.binary.file_sha256 != record.sha256) {
    throw SchemaError("record " + record.library + " " + record.version + ": feature vector hash mismatch");
  }
  record.fv.library = LibraryLabel{record.library, record.version};
  if (auto it = by_hash_.find(record.sha256); it != by_hash_.end()) {
    const KnownLibVersion& existing = records_.at(it->second);
    if (existing.library == record.library && existing.version == record.version) return existing;
    throw ConflictingLabel("binary " + record.sha256 + " is already indexed as " + existing.library + " " +
                           existing.version + ", refusing " + record.library + " " + record.version);
  }
  Key key = key_of(record);
  by_hash_.emplace(record.sha256, key);
  return records_.emplace(std::move(key), std::move(record)).first->second;
}

json IndexStore::manifest_json() const {
  json records = json::array();
  for (const auto& [key, r] : records_) {
    records.push_back({{"library", r.library},
                       {"version", r.version},
                       {"arch", arch_name(r.arch)},
                       {"sha256", r.sha256},
                       {"source", r.source},
                       {"path", record_path(r).generic_string()}});
  }
  return {{"schema_version", kManifestSchemaVersion}, {"records", std::move(records)}};
}

void IndexStore::save() const {
  if (root_.empty()) throw IoError("index store has no root directory");
  std::filesystem::create_directories(root_);
  for (const auto& [key, r] : records_) write_fv_file(root_ / record_path(r), r.fv);
  write_text_file(root_ / "heuristics.json", dump_json(heuristics_to_json(heuristics_)));
  write_text_file(root_ / "manifest.json", dump_json(manifest_json()));
}

std::vector<const KnownLibVersion*> IndexStore::candidates(std::optional<Arch> arch) const {
  std::vector<const KnownLibVersion*> first;
  std::vector<const KnownLibVersion*> rest;
  for (const auto& [key, r] : records_) {
    (arch && r.arch == *arch ? first : rest).push_back(&r);
  }
  first.insert(first.end(), rest.begin(), rest.end());
  return first;
}

const KnownLibVersion* IndexStore::find_by_hash(const std::string& sha256) const {
  auto it = by_hash_.find(sha256);
  return it == by_hash_.end() ? nullptr : &records_.at(it->second);
}

std::vector<const KnownLibVersion*> IndexStore::find(const std::string& library, const std::string& version) const {
  std::vector<const KnownLibVersion*> out;
  for (auto it = records_.lower_bound(Key{library, version, "", ""});
       it != records_.end() && std::get<0>(it->first) == library && std::get<1>(it->first) == version; ++it) {
    out.push_back(&it->second);
  }
  return out;
}

const KnownLibVersion* IndexStore::find(const std::string& library, const std::string& version, Arch arch) const {
  for (const auto* r : find(library, version)) {
    if (r->arch == arch) return r;
  }
  return nullptr;
}

std::vector<std::string> IndexStore::libraries() const {
  std::set<std::string> names;
  for (const auto& [key, r] : records_) names.insert(r.library);
  return {names.begin(), names.end()};
}

std::optional<VersionHeuristic> derive_heuristic(std::span<const KnownLibVersion* const> records) {
  if (records.empty()) return std::nullopt;
  std::vector<VersionedStrings> versions;
  versions.reserve(records.size());
  for (const auto* r : records) {
    if (r->library != records.front()->library) return std::nullopt;
    versions.push_back({r->version, r->fv.rodata_strings});
  }
  return derive_heuristic(records.front()->library, versions);
}

ManifestLock::ManifestLock(const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  const auto path = (root / "manifest.lock").string();
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  while (::flock(fd_, LOCK_EX) != 0) {
    if (errno != EINTR) {
      ::close(fd_);
      throw IoError("cannot lock " + path + ": " + std::strerror(errno));
    }
  }
}

ManifestLock::~ManifestLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace librarian
