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

#include "librarian/zip_reader.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <optional>

#include "librarian/errors.hpp"

namespace librarian {

namespace {

constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kEocd64Sig = 0x06064b50;
constexpr std::uint32_t kEocd64LocatorSig = 0x07064b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::size_t kEocdSize = 22;
constexpr std::size_t kMaxComment = 0xFFFF;
constexpr std::size_t kChunk = 64 * 1024;

std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint64_t le64(const std::uint8_t* p) {
  return static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
}

}  // namespace

ZipReader::ZipReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open " + path.string());
  in_.seekg(0, std::ios::end);
  size_ = static_cast<std::uint64_t>(in_.tellg());
  if (size_ < kEocdSize) throw NotAZip(path.string() + ": too small to be a ZIP archive");
  load_central_directory();
}

void ZipReader::read_at(std::uint64_t offset, void* out, std::size_t n) {
  if (offset > size_ || n > size_ - offset) throw CorruptArchive("read past end of archive", offset);
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(offset));
  in_.read(static_cast<char*>(out), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) throw CorruptArchive("short read", offset);
}

void ZipReader::load_central_directory() {
  const std::size_t tail_len = static_cast<std::size_t>(std::min<std::uint64_t>(size_, kEocdSize + kMaxComment));
  const std::uint64_t tail_off = size_ - tail_len;
  std::vector<std::uint8_t> tail(tail_len);
  read_at(tail_off, tail.data(), tail_len);

  std::optional<std::size_t> eocd;
  for (std::size_t i = tail_len - kEocdSize + 1; i-- > 0;) {
    if (le32(&tail[i]) == kEocdSig) {
      eocd = i;
      break;
    }
  }
  if (!eocd) throw NotAZip(path_.string() + ": no end of central directory record");

  const std::uint8_t* e = &tail[*eocd];
  const std::uint64_t eocd_pos = tail_off + *eocd;
  std::uint64_t count = le16(e + 10);
  std::uint64_t cd_size = le32(e + 12);
  std::uint64_t cd_off = le32(e + 16);

  if (count == 0xFFFF || cd_size == 0xFFFFFFFF || cd_off == 0xFFFFFFFF) {
    if (eocd_pos < 20) throw CorruptArchive("missing ZIP64 locator", eocd_pos);
    std::array<std::uint8_t, 20> loc{};
    read_at(eocd_pos - 20, loc.data(), loc.size());
    if (le32(loc.data()) != kEocd64LocatorSig) throw CorruptArchive("missing ZIP64 locator", eocd_pos - 20);
    const std::uint64_t e64_pos = le64(loc.data() + 8);
    std::array<std::uint8_t, 56> e64{};
    read_at(e64_pos, e64.data(), e64.size());
    if (le32(e64.data()) != kEocd64Sig) throw CorruptArchive("bad ZIP64 end of central directory", e64_pos);
    count = le64(e64.data() + 32);
    cd_size = le64(e64.data() + 40);
    cd_off = le64(e64.data() + 48);
  }
  if (cd_off > size_ || cd_size > size_ - cd_off) {
    throw CorruptArchive("central directory lies outside the archive", eocd_pos);
  }

  std::vector<std::uint8_t> cd(static_cast<std::size_t>(cd_size));
  if (cd_size > 0) read_at(cd_off, cd.data(), cd.size());
  std::size_t p = 0;
  entries_.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, cd_size / 46 + 1)));
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t at = cd_off + p;
    if (p + 46 > cd.size() || le32(&cd[p]) != kCentralSig) throw CorruptArchive("bad central directory entry", at);
    const std::uint8_t* h = &cd[p];
    ZipEntry z;
    z.central_header_offset = at;
    const std::uint16_t flags = le16(h + 8);
    z.method = le16(h + 10);
    z.crc32 = le32(h + 16);
    z.compressed_size = le32(h + 20);
    z.uncompressed_size = le32(h + 24);
    const std::size_t name_len = le16(h + 28);
    const std::size_t extra_len = le16(h + 30);
    const std::size_t comment_len = le16(h + 32);
    z.local_header_offset = le32(h + 42);
    if (p + 46 + name_len + extra_len + comment_len > cd.size()) {
      throw CorruptArchive("central directory entry overruns directory", at);
    }
    z.name.assign(reinterpret_cast<const char*>(h + 46), name_len);

    // ZIP64 extended information replaces saturated fields, in order.
    const std::uint8_t* extra = h + 46 + name_len;
    for (std::size_t x = 0; x + 4 <= extra_len;) {
      const std::uint16_t id = le16(extra + x);
      const std::uint16_t len = le16(extra + x + 2);
      if (x + 4 + len > extra_len) break;
      if (id == 0x0001) {
        const std::uint8_t* f = extra + x + 4;
        std::size_t used = 0;
        auto take = [&](std::uint64_t& field) {
          if (field != 0xFFFFFFFF) return;
          if (used + 8 > len) throw CorruptArchive("truncated ZIP64 extra field", at);
          field = le64(f + used);
          used += 8;
        };
        take(z.uncompressed_size);
        take(z.compressed_size);
        take(z.local_header_offset);
      }
      x += 4 + len;
    }
    if (flags & 1u) throw CorruptArchive("encrypted entry " + z.name + " is not supported", at);
    entries_.push_back(std::move(z));
    p += 46 + name_len + extra_len + comment_len;
  }
}

void ZipReader::stream(const ZipEntry& entry, const std::function<void(ByteView)>& sink) {
  std::array<std::uint8_t, 30> local{};
  read_at(entry.local_header_offset, local.data(), local.size());
  if (le32(local.data()) != kLocalSig) {
    throw CorruptArchive("bad local header for " + entry.name, entry.local_header_offset);
  }
  const std::uint64_t data_off = entry.local_header_offset + 30 + le16(local.data() + 26) + le16(local.data() + 28);
  if (data_off > size_ || entry.compressed_size > size_ - data_off) {
    throw CorruptArchive("entry data for " + entry.name + " lies outside the archive", entry.local_header_offset);
  }

  uLong crc = crc32(0L, Z_NULL, 0);
  std::uint64_t produced = 0;
  auto emit = [&](const std::uint8_t* data, std::size_t n) {
    crc = crc32(crc, data, static_cast<uInt>(n));
    produced += n;
    sink(ByteView(data, n));
  };

  std::vector<std::uint8_t> in(kChunk);
  if (entry.method == 0) {
    for (std::uint64_t done = 0; done < entry.compressed_size;) {
      const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, entry.compressed_size - done));
      read_at(data_off + done, in.data(), n);
      emit(in.data(), n);
      done += n;
    }
  } else if (entry.method == 8) {
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw CorruptArchive("inflate init failed", data_off);
    std::vector<std::uint8_t> out(kChunk);
    std::uint64_t consumed = 0;
    int rc = Z_OK;
    try {
      while (rc != Z_STREAM_END) {
        if (zs.avail_in == 0) {
          const std::size_t n =
              static_cast<std::size_t>(std::min<std::uint64_t>(kChunk, entry.compressed_size - consumed));
          if (n == 0) throw CorruptArchive("deflate stream for " + entry.name + " ends early", data_off + consumed);
          read_at(data_off + consumed, in.data(), n);
          consumed += n;
          zs.next_in = in.data();
          zs.avail_in = static_cast<uInt>(n);
        }
        zs.next_out = out.data();
        zs.avail_out = static_cast<uInt>(out.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
          throw CorruptArchive("corrupt deflate data in " + entry.name, data_off + consumed);
        }
        emit(out.data(), out.size() - zs.avail_out);
      }
    } catch (...) {
      inflateEnd(&zs);
      throw;
    }
    inflateEnd(&zs);
  } else {
    throw CorruptArchive("unsupported compression method " + std::to_string(entry.method) + " for " + entry.name,
                         entry.central_header_offset);
  }

  if (produced != entry.uncompressed_size) {
    throw CorruptArchive("size mismatch for " + entry.name, entry.central_header_offset);
  }
  if (static_cast<std::uint32_t>(crc) != entry.crc32) {
    throw CorruptArchive("CRC mismatch for " + entry.name, entry.central_header_offset);
  }
}

Bytes ZipReader::read(const ZipEntry& entry) {
  Bytes out;
  out.reserve(static_cast<std::size_t>(entry.uncompressed_size));
  stream(entry, [&](ByteView chunk) { out.insert(out.end(), chunk.begin(), chunk.end()); });
  return out;
}

}  // namespace librarian
