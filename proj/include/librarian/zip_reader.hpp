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
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "librarian/sha256.hpp"

namespace librarian {

struct ZipEntry {
  std::string name;
  std::uint16_t method = 0;  // 0 stored, 8 deflate
  std::uint32_t crc32 = 0;
  std::uint64_t compressed_size = 0;
  std::uint64_t uncompressed_size = 0;
  std::uint64_t local_header_offset = 0;
  std::uint64_t central_header_offset = 0;
};

// Read-only ZIP archive access straight from the file: the central
// directory is read once and entry data is inflated on demand in chunks.
// Supports stored and deflated entries and ZIP64 sizes/offsets.
class ZipReader {
 public:
  // Throws NotAZip when no end-of-central-directory record is found and
  // CorruptArchive for inconsistent directory data.
  explicit ZipReader(const std::filesystem::path& path);

  const std::vector<ZipEntry>& entries() const { return entries_; }
  std::uint64_t archive_size() const { return size_; }

  // Feeds the uncompressed bytes of `entry` to `sink` chunk by chunk and
  // verifies size and CRC-32. Throws CorruptArchive.
  void stream(const ZipEntry& entry, const std::function<void(ByteView)>& sink);
  Bytes read(const ZipEntry& entry);

 private:
  void read_at(std::uint64_t offset, void* out, std::size_t n);
  void load_central_directory();

  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::vector<ZipEntry> entries_;
};

}  // namespace librarian
