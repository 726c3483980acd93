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

#include "librarian/apk_scan.hpp"

#include <array>
#include <fstream>
#include <utility>

#include "librarian/elf_reader.hpp"
#include "librarian/errors.hpp"
#include "librarian/zip_reader.hpp"

namespace librarian {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<std::string_view, Abi>, 5> kAbiDirs = {{
    {"armeabi", Abi::Armeabi},
    {"armeabi-v7a", Abi::ArmeabiV7a},
    {"arm64-v8a", Abi::Arm64V8a},
    {"x86", Abi::X86},
    {"x86_64", Abi::X86_64},
}};

std::string abi_dir_of(std::string_view name) {
  const auto rest = name.substr(4);
  return std::string(rest.substr(0, rest.find('/')));
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Sha256 h;
  std::vector<std::uint8_t> buf(64 * 1024);
  while (in) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    const auto n = static_cast<std::size_t>(in.gcount());
    if (n > 0) h.update(ByteView(buf.data(), n));
  }
  if (in.bad()) throw IoError("read failed for " + path.string());
  return h.hex_digest();
}

std::vector<const ZipEntry*> library_entries(const ZipReader& zip) {
  std::vector<const ZipEntry*> out;
  for (const auto& e : zip.entries()) {
    if (is_native_library_path(e.name)) out.push_back(&e);
  }
  return out;
}

ApkInventory base_inventory(const std::filesystem::path& path) {
  ApkInventory inv;
  inv.apk_path = path.string();
  inv.apk_sha256 = hash_file(path);
  inv.app = read_app_metadata(path);
  return inv;
}

std::string file_name_of(std::string_view inner_path) {
  const auto slash = inner_path.rfind('/');
  return std::string(slash == std::string_view::npos ? inner_path : inner_path.substr(slash + 1));
}

}  // namespace

std::string_view abi_name(Abi abi) {
  for (const auto& [name, value] : kAbiDirs) {
    if (value == abi) return name;
  }
  return "other";
}

Abi parse_abi(std::string_view dir) {
  for (const auto& [name, value] : kAbiDirs) {
    if (name == dir) return value;
  }
  return Abi::Other;
}

Arch abi_arch(Abi abi) {
  switch (abi) {
    case Abi::Armeabi:
    case Abi::ArmeabiV7a:
      return Arch::Arm;
    case Abi::Arm64V8a:
      return Arch::Arm64;
    case Abi::X86:
      return Arch::X86;
    case Abi::X86_64:
      return Arch::X86_64;
    case Abi::Other:
      break;
  }
  return Arch::Other;
}

bool is_native_library_path(std::string_view name) {
  if (!name.starts_with("lib/") || !name.ends_with(".so")) return false;
  const auto rest = name.substr(4);
  const auto slash = rest.find('/');
  return slash != std::string_view::npos && slash > 0 && slash + 1 < rest.size() && !name.ends_with("/.so");
}

AppMetadata read_app_metadata(const std::filesystem::path& apk) {
  AppMetadata meta;
  const std::filesystem::path sidecar = apk.string() + ".meta.json";
  if (std::filesystem::exists(sidecar)) {
    const json doc = read_json_file(sidecar);
    const std::string where = sidecar.string();
    if (!doc.is_object()) throw SchemaError(where + ": must be an object");
    auto id = doc.find("app_id");
    if (id == doc.end() || !id->is_string() || id->get<std::string>().empty()) {
      throw SchemaError(where + ": app_id must be a non-empty string");
    }
    meta.app_id = id->get<std::string>();
    if (auto code = doc.find("version_code"); code != doc.end() && !code->is_null()) {
      if (!code->is_number_integer()) throw SchemaError(where + ": version_code must be an integer");
      meta.version_code = code->get<std::int64_t>();
    }
    if (auto date = doc.find("release_date"); date != doc.end() && !date->is_null()) {
      auto d = date->is_string() ? parse_date(date->get<std::string>()) : std::nullopt;
      if (!d) throw SchemaError(where + ": release_date must be YYYY-MM-DD");
      meta.release_date = *d;
    }
    return meta;
  }
  const std::string stem = apk.stem().string();
  const auto dash = stem.rfind('-');
  if (dash != std::string::npos && dash > 0 && dash + 1 < stem.size() &&
      stem.find_first_not_of("0123456789", dash + 1) == std::string::npos && stem.size() - dash - 1 <= 18) {
    meta.app_id = stem.substr(0, dash);
    meta.version_code = std::stoll(stem.substr(dash + 1));
  } else {
    meta.app_id = stem;
  }
  return meta;
}

ApkInventory scan_apk(const std::filesystem::path& path) {
  ZipReader zip(path);
  ApkInventory inv = base_inventory(path);
  for (const ZipEntry* e : library_entries(zip)) {
    Sha256 h;
    zip.stream(*e, [&](ByteView chunk) { h.update(chunk); });
    inv.entries.push_back({parse_abi(abi_dir_of(e->name)), e->name, e->uncompressed_size, h.hex_digest()});
  }
  return inv;
}

ApkIdentification extract_apk(const std::filesystem::path& path, const NoiseFilter& filter) {
  ZipReader zip(path);
  ApkIdentification out;
  out.inventory = base_inventory(path);
  for (const ZipEntry* e : library_entries(zip)) {
    ApkEntryResult r;
    r.entry.abi = parse_abi(abi_dir_of(e->name));
    r.entry.inner_path = e->name;
    r.entry.size = e->uncompressed_size;
    try {
      const Bytes bytes = zip.read(*e);
      r.entry.sha256 = sha256_hex(bytes);
      r.fv = build_feature_vector(parse_elf(bytes, file_name_of(e->name)), filter);
    } catch (const Error& err) {
      r.error_kind = err.kind();
      r.error_message = err.what();
    }
    out.inventory.entries.push_back(r.entry);
    out.results.push_back(std::move(r));
  }
  return out;
}

ApkIdentification identify_apk(const std::filesystem::path& path, const IndexStore& store,
                               const HeuristicSet& heuristics, const NoiseFilter& filter, double threshold,
                               unsigned jobs) {
  if (store.empty()) throw EmptyIndex();
  ApkIdentification out = extract_apk(path, filter);
  std::vector<FeatureVector> fvs;
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < out.results.size(); ++i) {
    if (out.results[i].fv) {
      fvs.push_back(*out.results[i].fv);
      slots.push_back(i);
    }
  }
  BatchResult batch = batch_identify(fvs, store, heuristics, threshold, jobs);
  for (std::size_t k = 0; k < slots.size(); ++k) out.results[slots[k]].match = std::move(batch.results[k]);
  return out;
}

json scan_report_json(const ApkIdentification& scan, std::span<const CveEntry> cvedb) {
  const auto& app = scan.inventory.app;
  json entries = json::array();
  for (const auto& r : scan.results) {
    json cves = json::array();
    if (r.match && r.match->status == MatchStatus::Identified) {
      const auto& top = r.match->candidates.front();
      for (const auto& c : flag_vulnerable(top.library, top.version, cvedb)) cves.push_back(c.cve_id);
    }
    json error = nullptr;
    if (!r.error_kind.empty()) error = {{"kind", r.error_kind}, {"message", r.error_message}};
    entries.push_back({{"inner_path", r.entry.inner_path},
                       {"abi", abi_name(r.entry.abi)},
                       {"size", r.entry.size},
                       {"sha256", r.entry.sha256},
                       {"match", r.match ? to_json(*r.match) : json(nullptr)},
                       {"error", std::move(error)},
                       {"cves", std::move(cves)}});
  }
  return {{"apk", std::filesystem::path(scan.inventory.apk_path).filename().string()},
          {"apk_sha256", scan.inventory.apk_sha256},
          {"app_id", app.app_id},
          {"version_code", app.version_code ? json(*app.version_code) : json(nullptr)},
          {"release_date", app.release_date ? json(format_date(*app.release_date)) : json(nullptr)},
          {"entries", std::move(entries)}};
}

}  // namespace librarian
