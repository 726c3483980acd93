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

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "librarian/apk_scan.hpp"
#include "librarian/errors.hpp"
#include "librarian/sha256.hpp"
#include "librarian/zip_reader.hpp"
#include "support/test_support.hpp"

using namespace librarian;
using librarian::testing::fixture;
using librarian::testing::kToyVersions;
using librarian::testing::TempDir;

namespace fs = std::filesystem;

namespace {

nlohmann::json oracles() { return read_json_file(fixture("oracles.json")); }

void write_bytes(const fs::path& p, const Bytes& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

IndexStore toy_index() {
  IndexStore store;
  for (const auto& v : kToyVersions) {
    const auto p = fixture("toy/x86_64/libtoy-" + v + ".so");
    store.add(read_file_bytes(p), p.filename().string(), "libtoy", v, "fixture", NoiseFilter::builtin());
  }
  return store;
}

std::uint32_t le32(const Bytes& b, std::size_t at) {
  std::uint32_t v = 0;
  std::memcpy(&v, b.data() + at, 4);
  return v;
}

std::size_t find_eocd(const Bytes& b) {
  for (std::size_t i = b.size() - 22;; --i) {
    if (le32(b, i) == 0x06054b50u) return i;
    if (i == 0) break;
  }
  return std::string::npos;
}

}  // namespace

TEST_CASE("ABI names") {
  CHECK(parse_abi("armeabi") == Abi::Armeabi);
  CHECK(parse_abi("armeabi-v7a") == Abi::ArmeabiV7a);
  CHECK(parse_abi("arm64-v8a") == Abi::Arm64V8a);
  CHECK(parse_abi("x86") == Abi::X86);
  CHECK(parse_abi("x86_64") == Abi::X86_64);
  CHECK(parse_abi("mips") == Abi::Other);
  for (Abi a : {Abi::Armeabi, Abi::ArmeabiV7a, Abi::Arm64V8a, Abi::X86, Abi::X86_64}) {
    CHECK(parse_abi(abi_name(a)) == a);
  }
  CHECK(abi_arch(Abi::Armeabi) == Arch::Arm);
  CHECK(abi_arch(Abi::ArmeabiV7a) == Arch::Arm);
  CHECK(abi_arch(Abi::Arm64V8a) == Arch::Arm64);
  CHECK(abi_arch(Abi::X86) == Arch::X86);
  CHECK(abi_arch(Abi::X86_64) == Arch::X86_64);
  CHECK(abi_arch(Abi::Other) == Arch::Other);
}

TEST_CASE("native library paths") {
  CHECK(is_native_library_path("lib/x86/libfoo.so"));
  CHECK(is_native_library_path("lib/mips/libfoo.so"));
  CHECK_FALSE(is_native_library_path("lib/x86/readme.txt"));
  CHECK_FALSE(is_native_library_path("lib/libfoo.so"));
  CHECK_FALSE(is_native_library_path("assets/lib/x86/libfoo.so"));
  CHECK_FALSE(is_native_library_path("lib/x86/"));
}

TEST_CASE("app metadata from sidecar, file name or stem") {
  const AppMetadata side = read_app_metadata(fixture("apk/com.example.toyapp-3.apk"));
  CHECK(side.app_id == "com.example.toyapp");
  CHECK(side.version_code == 3);
  REQUIRE(side.release_date.has_value());
  CHECK(format_date(*side.release_date) == "2020-03-01");

  const AppMetadata named = read_app_metadata(fixture("apk/com.example.pair-12.apk"));
  CHECK(named.app_id == "com.example.pair");
  CHECK(named.version_code == 12);
  CHECK_FALSE(named.release_date.has_value());

  const AppMetadata stem = read_app_metadata("/nowhere/some-app.apk");
  CHECK(stem.app_id == "some-app");
  CHECK_FALSE(stem.version_code.has_value());

  TempDir dir;
  const fs::path apk = dir.path() / "x-1.apk";
  fs::copy_file(fixture("apk/com.example.plain-7.apk"), apk);
  write_text_file(dir.path() / "x-1.apk.meta.json", R"({"version_code": 2})");
  CHECK_THROWS_AS(read_app_metadata(apk), SchemaError);
  write_text_file(dir.path() / "x-1.apk.meta.json", R"({"app_id": "x", "release_date": "2020-02-30"})");
  CHECK_THROWS_AS(read_app_metadata(apk), SchemaError);
}

TEST_CASE("inventory lists native libraries in directory order") {
  const ApkInventory inv = scan_apk(fixture("apk/com.example.toyapp-3.apk"));
  CHECK(inv.app.app_id == "com.example.toyapp");
  CHECK(inv.apk_sha256 == sha256_hex(read_file_bytes(fixture("apk/com.example.toyapp-3.apk"))));
  REQUIRE(inv.entries.size() == 3);
  CHECK(inv.entries[0].inner_path == "lib/arm64-v8a/libtoy.so");
  CHECK(inv.entries[0].abi == Abi::Arm64V8a);
  CHECK(inv.entries[1].inner_path == "lib/armeabi-v7a/libtoy.so");
  CHECK(inv.entries[1].abi == Abi::ArmeabiV7a);
  CHECK(inv.entries[2].inner_path == "lib/x86/libbroken.so");
  CHECK(inv.entries[2].size == 1024);

  const auto o = oracles();
  CHECK(inv.entries[0].sha256 == o["toy/arm64/libtoy-1.0.so"]["sha256"].get<std::string>());
  CHECK(inv.entries[1].sha256 == o["toy/arm/libtoy-3.0.so"]["sha256"].get<std::string>());
  CHECK(inv.entries[0].size == fs::file_size(fixture("toy/arm64/libtoy-1.0.so")));
}

TEST_CASE("entry hashes equal the extracted files' hashes") {
  const ApkInventory inv = scan_apk(fixture("apk/com.example.pair-12.apk"));
  const auto o = oracles();
  REQUIRE(inv.entries.size() == 3);
  CHECK(inv.entries[0].sha256 == o["toy/arm/libtoy-2.0.so"]["sha256"].get<std::string>());
  CHECK(inv.entries[1].sha256 == o["toy/x86/libtoy-2.0.so"]["sha256"].get<std::string>());
  CHECK(inv.entries[2].sha256 == o["answer/libanswer-mips.so"]["sha256"].get<std::string>());
  CHECK(inv.entries[2].abi == Abi::Other);
}

TEST_CASE("APK without native code") {
  const ApkInventory inv = scan_apk(fixture("apk/com.example.plain-7.apk"));
  CHECK(inv.entries.empty());
  const ApkIdentification id = identify_apk(fixture("apk/com.example.plain-7.apk"), toy_index(),
                                            HeuristicSet::builtin(), NoiseFilter::builtin());
  CHECK(id.results.empty());
  const auto report = scan_report_json(id, {});
  CHECK(report["entries"].empty());
  CHECK(report["version_code"] == 7);
}

TEST_CASE("ZIP64 archive") {
  const fs::path apk = fixture("apk/com.example.wide-5.apk");
  ZipReader zip(apk);
  REQUIRE(zip.entries().size() == 3);
  const ApkInventory inv = scan_apk(apk);
  REQUIRE(inv.entries.size() == 2);
  const auto o = oracles();
  CHECK(inv.entries[0].sha256 == o["toy/arm64/libtoy-2.1.so"]["sha256"].get<std::string>());
  CHECK(inv.entries[1].sha256 == o["toy/x86_64/libtoy-2.1.so"]["sha256"].get<std::string>());
  CHECK(inv.entries[1].abi == Abi::X86_64);
}

TEST_CASE("every library of a large APK is processed") {
  const ApkIdentification id = extract_apk(fixture("apk/com.example.many-1.apk"), NoiseFilter::builtin());
  CHECK(id.inventory.entries.size() == 141);
  REQUIRE(id.results.size() == 141);
  for (const auto& r : id.results) {
    CHECK(r.error_kind.empty());
    CHECK(r.fv.has_value());
  }
}

TEST_CASE("identification keeps per-entry failures") {
  const IndexStore store = toy_index();
  const ApkIdentification id = identify_apk(fixture("apk/com.example.toyapp-3.apk"), store, HeuristicSet::builtin(),
                                            NoiseFilter::builtin());
  REQUIRE(id.results.size() == 3);
  REQUIRE(id.results[0].match.has_value());
  CHECK(id.results[0].match->status == MatchStatus::Identified);
  CHECK(id.results[0].match->candidates[0].version == "1.0");
  REQUIRE(id.results[1].match.has_value());
  CHECK(id.results[1].match->candidates[0].version == "3.0");
  CHECK_FALSE(id.results[2].match.has_value());
  CHECK(id.results[2].error_kind == "MalformedElf");
  CHECK_FALSE(id.results[2].error_message.empty());

  const auto cvedb = load_cvedb_file(librarian::testing::data_dir() / "fixture_cvedb.json");
  const auto report = scan_report_json(id, cvedb);
  CHECK(report["app_id"] == "com.example.toyapp");
  CHECK(report["release_date"] == "2020-03-01");
  CHECK(report["entries"][0]["cves"] == nlohmann::json::array({"FIXTURE-0001"}));
  CHECK(report["entries"][1]["cves"].empty());
  CHECK(report["entries"][2]["match"].is_null());
  CHECK(report["entries"][2]["error"]["kind"] == "MalformedElf");

  const ApkIdentification par = identify_apk(fixture("apk/com.example.toyapp-3.apk"), store, HeuristicSet::builtin(),
                                             NoiseFilter::builtin(), kDefaultThreshold, 4);
  CHECK(scan_report_json(par, cvedb) == report);
}

TEST_CASE("archive errors") {
  CHECK_THROWS_AS(scan_apk(fixture("broken/not_elf.txt")), NotAZip);
  CHECK_THROWS_AS(scan_apk(fixture("toy/x86_64/libtoy-1.0.so")), NotAZip);
  CHECK_THROWS_AS(scan_apk("/nonexistent/app.apk"), IoError);

  TempDir dir;
  const Bytes good = read_file_bytes(fixture("apk/com.example.pair-12.apk"));

  Bytes truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(good.size() / 2));
  write_bytes(dir.path() / "truncated.apk", truncated);
  CHECK_THROWS_AS(scan_apk(dir.path() / "truncated.apk"), NotAZip);

  Bytes bad_offset = good;
  const std::size_t eocd = find_eocd(bad_offset);
  REQUIRE(eocd != std::string::npos);
  const std::uint32_t huge = static_cast<std::uint32_t>(good.size() + 1000);
  std::memcpy(bad_offset.data() + eocd + 16, &huge, 4);
  write_bytes(dir.path() / "offset.apk", bad_offset);
  CHECK_THROWS_AS(scan_apk(dir.path() / "offset.apk"), CorruptArchive);

  ZipReader zip(fixture("apk/com.example.pair-12.apk"));
  const ZipEntry& first = zip.entries()[0];
  const std::size_t name_len = first.name.size();
  Bytes flipped = good;
  const std::size_t data_at = first.local_header_offset + 30 + name_len + first.compressed_size / 2;
  flipped[data_at] ^= 0xFF;
  write_bytes(dir.path() / "flipped.apk", flipped);
  try {
    scan_apk(dir.path() / "flipped.apk");
    FAIL("expected CorruptArchive");
  } catch (const CorruptArchive& e) {
    CHECK(std::string(e.kind()) == "CorruptArchive");
  }
}
