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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "librarian/elf_reader.hpp"

namespace librarian {

inline constexpr int kFeatureSchemaVersion = 1;

struct BinaryMeta {
  std::string file_name;
  std::string file_sha256;
  Arch arch = Arch::Other;
  std::uint64_t file_size = 0;

  bool operator==(const BinaryMeta&) const = default;
};

// Ground-truth label carried by indexed feature vectors.
struct LibraryLabel {
  std::string name;
  std::string version;

  bool operator==(const LibraryLabel&) const = default;
};

// Fingerprint of one binary: five metadata sets used for similarity, plus the
// harvested read-only strings used by version heuristics.
struct FeatureVector {
  std::set<std::string> exported_functions;
  std::set<std::string> imported_functions;
  std::set<std::string> exported_globals;
  std::set<std::string> imported_globals;
  std::set<std::string> dependencies;
  std::vector<std::string> rodata_strings;
  BinaryMeta binary;
  std::optional<LibraryLabel> library;

  std::size_t metadata_size() const {
    return exported_functions.size() + imported_functions.size() + exported_globals.size() +
           imported_globals.size() + dependencies.size();
  }

  bool operator==(const FeatureVector&) const = default;
};

// Drops toolchain, runtime and platform symbols that would otherwise make
// feature vectors depend on the compiler or target architecture.
class NoiseFilter {
 public:
  NoiseFilter() = default;
  NoiseFilter(std::vector<std::string> prefixes, std::set<std::string> exact,
              std::set<std::string> dependency_denylist);

  static NoiseFilter builtin();
  // Throws SchemaError on missing or mistyped keys.
  static NoiseFilter from_json(const nlohmann::json& doc);
  static NoiseFilter load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  bool drops_symbol(std::string_view name) const;
  bool drops_dependency(std::string_view name) const;

  // Removes filtered entries from the five metadata sets. Idempotent.
  void apply(FeatureVector& fv) const;

  const std::vector<std::string>& prefixes() const { return prefixes_; }
  const std::set<std::string>& exact() const { return exact_; }
  const std::set<std::string>& dependency_denylist() const { return dependency_denylist_; }

 private:
  std::vector<std::string> prefixes_;
  std::set<std::string> exact_;
  std::set<std::string> dependency_denylist_;
};

// Replaces each ill-formed UTF-8 sequence with U+FFFD. Names are stored in
// this form so feature vectors survive JSON serialisation unchanged.
std::string valid_utf8(std::string_view s);

FeatureVector build_feature_vector(const ElfImage& image, const NoiseFilter& filter);

nlohmann::json serialize_fv(const FeatureVector& fv);
FeatureVector parse_fv(const nlohmann::json& doc);

// Canonical text form: two-space indented JSON with a trailing newline.
std::string dump_json(const nlohmann::json& doc);

void write_fv_file(const std::filesystem::path& path, const FeatureVector& fv);
FeatureVector read_fv_file(const std::filesystem::path& path);

// Small file helpers shared by the other modules. Throw IoError.
Bytes read_file_bytes(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace librarian
