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

#include "librarian/elf_reader.hpp"

#include <elf.h>

#include <algorithm>
#include <cstring>
#include <limits>

#include "librarian/errors.hpp"

namespace librarian {

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::X86:
      return "x86";
    case Arch::X86_64:
      return "x86_64";
    case Arch::Arm:
      return "arm";
    case Arch::Arm64:
      return "arm64";
    case Arch::Other:
      break;
  }
  return "other";
}

std::optional<Arch> parse_arch(std::string_view name) {
  for (Arch a : {Arch::X86, Arch::X86_64, Arch::Arm, Arch::Arm64, Arch::Other}) {
    if (arch_name(a) == name) return a;
  }
  return std::nullopt;
}

namespace {

// Bounds-checked, endian-aware view over the raw file.
class ElfData {
 public:
  ElfData(ByteView bytes, bool big_endian, bool is64)
      : bytes_(bytes), big_(big_endian), is64_(is64) {}

  std::uint64_t size() const { return bytes_.size(); }
  bool is64() const { return is64_; }

  void require(std::uint64_t offset, std::uint64_t length, const char* what) const {
    if (offset > bytes_.size() || length > bytes_.size() - offset) {
      throw MalformedElf(std::string(what) + " extends past end of file", offset);
    }
  }

  template <typename T>
  T read(std::uint64_t offset) const {
    require(offset, sizeof(T), "field");
    T value;
    std::memcpy(&value, bytes_.data() + offset, sizeof(T));
    if (big_ && sizeof(T) > 1) value = swap(value);
    return value;
  }

  std::uint16_t u16(std::uint64_t off) const { return read<std::uint16_t>(off); }
  std::uint32_t u32(std::uint64_t off) const { return read<std::uint32_t>(off); }
  std::uint64_t u64(std::uint64_t off) const { return read<std::uint64_t>(off); }
  std::uint8_t u8(std::uint64_t off) const { return read<std::uint8_t>(off); }

  // Address-sized word (4 bytes for ELF32, 8 for ELF64).
  std::uint64_t word(std::uint64_t off) const { return is64_ ? u64(off) : u32(off); }

  ByteView slice(std::uint64_t offset, std::uint64_t length, const char* what) const {
    require(offset, length, what);
    return bytes_.subspan(offset, length);
  }

 private:
  template <typename T>
  static T swap(T v) {
    T out;
    auto* src = reinterpret_cast<const std::uint8_t*>(&v);
    auto* dst = reinterpret_cast<std::uint8_t*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
  }

  ByteView bytes_;
  bool big_;
  bool is64_;
};

struct SectionHeader {
  std::string name;
  std::uint32_t name_offset = 0;
  std::uint32_t type = 0;
  std::uint64_t flags = 0;
  std::uint64_t addr = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
  std::uint32_t link = 0;
  std::uint64_t entsize = 0;
  std::uint64_t header_pos = 0;
};

struct ProgramHeader {
  std::uint32_t type = 0;
  std::uint32_t flags = 0;
  std::uint64_t offset = 0;
  std::uint64_t vaddr = 0;
  std::uint64_t filesz = 0;
  std::uint64_t header_pos = 0;
};

struct FileHeader {
  std::uint16_t machine = 0;
  std::uint64_t phoff = 0;
  std::uint64_t shoff = 0;
  std::uint16_t phentsize = 0;
  std::uint16_t phnum = 0;
  std::uint16_t shentsize = 0;
  std::uint32_t shnum = 0;
  std::uint32_t shstrndx = 0;
};

Machine map_machine(std::uint16_t code) {
  switch (code) {
    case EM_386:
      return {Arch::X86, code};
    case EM_X86_64:
      return {Arch::X86_64, code};
    case EM_ARM:
      return {Arch::Arm, code};
    case EM_AARCH64:
      return {Arch::Arm64, code};
    default:
      return {Arch::Other, code};
  }
}

FileHeader read_file_header(const ElfData& d) {
  FileHeader h;
  const bool is64 = d.is64();
  d.require(0, is64 ? sizeof(Elf64_Ehdr) : sizeof(Elf32_Ehdr), "ELF header");
  h.machine = d.u16(18);
  if (is64) {
    h.phoff = d.u64(32);
    h.shoff = d.u64(40);
    h.phentsize = d.u16(54);
    h.phnum = d.u16(56);
    h.shentsize = d.u16(58);
    h.shnum = d.u16(60);
    h.shstrndx = d.u16(62);
  } else {
    h.phoff = d.u32(28);
    h.shoff = d.u32(32);
    h.phentsize = d.u16(42);
    h.phnum = d.u16(44);
    h.shentsize = d.u16(46);
    h.shnum = d.u16(48);
    h.shstrndx = d.u16(50);
  }
  return h;
}

std::string read_cstring(const ElfData& d, std::uint64_t table_off, std::uint64_t table_size,
                         std::uint64_t index) {
  if (index >= table_size) {
    throw MalformedElf("string index " + std::to_string(index) + " outside string table",
                       table_off);
  }
  ByteView table = d.slice(table_off, table_size, "string table");
  auto begin = table.begin() + static_cast<std::ptrdiff_t>(index);
  auto nul = std::find(begin, table.end(), std::uint8_t{0});
  if (nul == table.end()) {
    throw MalformedElf("unterminated string in string table", table_off + index);
  }
  return std::string(begin, nul);
}

std::vector<SectionHeader> read_section_headers(const ElfData& d, FileHeader& h) {
  std::vector<SectionHeader> out;
  if (h.shoff == 0) return out;
  const std::uint64_t min_ent = d.is64() ? sizeof(Elf64_Shdr) : sizeof(Elf32_Shdr);
  if (h.shentsize < min_ent) {
    throw MalformedElf("section header entry size too small", d.is64() ? 58 : 46);
  }
  // Extended numbering: counts live in section header 0.
  if (h.shnum == 0 || h.shstrndx == SHN_XINDEX) {
    d.require(h.shoff, min_ent, "section header 0");
    if (h.shnum == 0) h.shnum = static_cast<std::uint32_t>(d.is64() ? d.u64(h.shoff + 32) : d.u32(h.shoff + 20));
    if (h.shstrndx == SHN_XINDEX) h.shstrndx = d.u32(h.shoff + (d.is64() ? 40 : 24));
  }
  if (h.shnum == 0) return out;
  d.require(h.shoff, static_cast<std::uint64_t>(h.shnum) * h.shentsize, "section header table");

  out.reserve(h.shnum);
  for (std::uint32_t i = 0; i < h.shnum; ++i) {
    const std::uint64_t p = h.shoff + static_cast<std::uint64_t>(i) * h.shentsize;
    SectionHeader s;
    s.header_pos = p;
    s.name_offset = d.u32(p);
    s.type = d.u32(p + 4);
    if (d.is64()) {
      s.flags = d.u64(p + 8);
      s.addr = d.u64(p + 16);
      s.offset = d.u64(p + 24);
      s.size = d.u64(p + 32);
      s.link = d.u32(p + 40);
      s.entsize = d.u64(p + 56);
    } else {
      s.flags = d.u32(p + 8);
      s.addr = d.u32(p + 12);
      s.offset = d.u32(p + 16);
      s.size = d.u32(p + 20);
      s.link = d.u32(p + 24);
      s.entsize = d.u32(p + 36);
    }
    if (s.type != SHT_NOBITS && s.type != SHT_NULL) {
      if (s.offset > d.size() || s.size > d.size() - s.offset) {
        throw MalformedElf("section " + std::to_string(i) + " data out of bounds", p);
      }
    }
    out.push_back(s);
  }

  if (h.shstrndx != SHN_UNDEF && h.shstrndx < out.size()) {
    const SectionHeader& strtab = out[h.shstrndx];
    for (auto& s : out) {
      s.name = read_cstring(d, strtab.offset, strtab.size, s.name_offset);
    }
  }
  return out;
}

std::vector<ProgramHeader> read_program_headers(const ElfData& d, const FileHeader& h) {
  std::vector<ProgramHeader> out;
  if (h.phoff == 0 || h.phnum == 0) return out;
  const std::uint64_t min_ent = d.is64() ? sizeof(Elf64_Phdr) : sizeof(Elf32_Phdr);
  if (h.phentsize < min_ent) {
    throw MalformedElf("program header entry size too small", d.is64() ? 54 : 42);
  }
  d.require(h.phoff, static_cast<std::uint64_t>(h.phnum) * h.phentsize, "program header table");
  for (std::uint32_t i = 0; i < h.phnum; ++i) {
    const std::uint64_t p = h.phoff + static_cast<std::uint64_t>(i) * h.phentsize;
    ProgramHeader ph;
    ph.header_pos = p;
    ph.type = d.u32(p);
    if (d.is64()) {
      ph.flags = d.u32(p + 4);
      ph.offset = d.u64(p + 8);
      ph.vaddr = d.u64(p + 16);
      ph.filesz = d.u64(p + 32);
    } else {
      ph.offset = d.u32(p + 4);
      ph.vaddr = d.u32(p + 8);
      ph.filesz = d.u32(p + 16);
      ph.flags = d.u32(p + 24);
    }
    if (ph.offset > d.size() || ph.filesz > d.size() - ph.offset) {
      throw MalformedElf("segment " + std::to_string(i) + " data out of bounds", p);
    }
    out.push_back(ph);
  }
  return out;
}

SymbolType map_type(unsigned t) {
  switch (t) {
    case STT_FUNC:
    case STT_GNU_IFUNC:
      return SymbolType::Func;
    case STT_OBJECT:
    case STT_COMMON:
      return SymbolType::Object;
    case STT_NOTYPE:
      return SymbolType::NoType;
    case STT_TLS:
      return SymbolType::Tls;
    default:
      return SymbolType::Other;
  }
}

SymbolBinding map_binding(unsigned b) {
  switch (b) {
    case STB_GLOBAL:
    case STB_GNU_UNIQUE:
      return SymbolBinding::Global;
    case STB_WEAK:
      return SymbolBinding::Weak;
    case STB_LOCAL:
      return SymbolBinding::Local;
    default:
      return SymbolBinding::Other;
  }
}

SymbolVisibility map_visibility(unsigned v) {
  switch (v & 3) {
    case STV_PROTECTED:
      return SymbolVisibility::Protected;
    case STV_HIDDEN:
      return SymbolVisibility::Hidden;
    case STV_INTERNAL:
      return SymbolVisibility::Internal;
    default:
      return SymbolVisibility::Default;
  }
}

// Reads `count` symbols starting at file offset `symoff`. Index 0 (the null
// symbol) and unnamed symbols are skipped.
std::vector<RawSymbol> read_symbols(const ElfData& d, std::uint64_t symoff, std::uint64_t count,
                                    std::uint64_t entsize, std::uint64_t stroff,
                                    std::uint64_t strsize) {
  const std::uint64_t min_ent = d.is64() ? sizeof(Elf64_Sym) : sizeof(Elf32_Sym);
  if (entsize < min_ent) throw MalformedElf("symbol entry size too small", symoff);
  if (count > 0) d.require(symoff, count * entsize, "symbol table");

  std::vector<RawSymbol> out;
  for (std::uint64_t i = 1; i < count; ++i) {
    const std::uint64_t p = symoff + i * entsize;
    std::uint32_t name_idx = d.u32(p);
    std::uint8_t info = 0;
    std::uint8_t other = 0;
    std::uint16_t shndx = 0;
    if (d.is64()) {
      info = d.u8(p + 4);
      other = d.u8(p + 5);
      shndx = d.u16(p + 6);
    } else {
      info = d.u8(p + 12);
      other = d.u8(p + 13);
      shndx = d.u16(p + 14);
    }
    if (name_idx == 0) continue;
    RawSymbol sym;
    sym.name = read_cstring(d, stroff, strsize, name_idx);
    if (sym.name.empty()) continue;
    sym.type = map_type(info & 0xF);
    sym.binding = map_binding(info >> 4);
    sym.defined = shndx != SHN_UNDEF;
    sym.visibility = map_visibility(other);
    out.push_back(std::move(sym));
  }
  return out;
}

bool is_readonly_data(const SectionHeader& s) {
  if (s.type == SHT_NOBITS || s.type == SHT_NULL || s.size == 0) return false;
  if (s.name == ".comment" || s.name.starts_with(".rodata")) return true;
  return s.type == SHT_PROGBITS && (s.flags & SHF_ALLOC) && !(s.flags & SHF_WRITE) &&
         !(s.flags & SHF_EXECINSTR);
}

// Dynamic-segment view used when section headers are missing.
class SegmentView {
 public:
  SegmentView(const ElfData& d, const std::vector<ProgramHeader>& phdrs) : d_(d) {
    for (const auto& p : phdrs) {
      if (p.type == PT_LOAD) loads_.push_back(p);
      if (p.type == PT_DYNAMIC) dynamic_ = p;
    }
  }

  bool has_dynamic() const { return dynamic_.has_value(); }

  std::optional<std::uint64_t> to_offset(std::uint64_t vaddr) const {
    for (const auto& l : loads_) {
      if (vaddr >= l.vaddr && vaddr - l.vaddr < l.filesz) return l.offset + (vaddr - l.vaddr);
    }
    return std::nullopt;
  }

  std::uint64_t require_offset(std::uint64_t vaddr, const char* what) const {
    auto off = to_offset(vaddr);
    if (!off) throw MalformedElf(std::string(what) + " address not mapped by any PT_LOAD", dynamic_->header_pos);
    return *off;
  }

  std::vector<std::pair<std::int64_t, std::uint64_t>> entries() const {
    std::vector<std::pair<std::int64_t, std::uint64_t>> out;
    if (!dynamic_) return out;
    const std::uint64_t ent = d_.is64() ? 16 : 8;
    for (std::uint64_t p = dynamic_->offset; p + ent <= dynamic_->offset + dynamic_->filesz; p += ent) {
      std::int64_t tag = d_.is64() ? static_cast<std::int64_t>(d_.u64(p))
                                   : static_cast<std::int32_t>(d_.u32(p));
      std::uint64_t val = d_.word(p + (d_.is64() ? 8 : 4));
      if (tag == DT_NULL) break;
      out.emplace_back(tag, val);
    }
    return out;
  }

 private:
  const ElfData& d_;
  std::vector<ProgramHeader> loads_;
  std::optional<ProgramHeader> dynamic_;
};

std::uint64_t count_from_gnu_hash(const ElfData& d, std::uint64_t off) {
  const std::uint32_t nbuckets = d.u32(off);
  const std::uint32_t symoffset = d.u32(off + 4);
  const std::uint32_t bloom_size = d.u32(off + 8);
  const std::uint64_t word = d.is64() ? 8 : 4;
  const std::uint64_t buckets = off + 16 + static_cast<std::uint64_t>(bloom_size) * word;
  d.require(buckets, static_cast<std::uint64_t>(nbuckets) * 4, "GNU hash buckets");
  std::uint32_t max_bucket = 0;
  for (std::uint32_t i = 0; i < nbuckets; ++i) max_bucket = std::max(max_bucket, d.u32(buckets + 4ull * i));
  if (max_bucket < symoffset) return symoffset;
  const std::uint64_t chains = buckets + 4ull * nbuckets;
  std::uint64_t idx = max_bucket;
  while (true) {
    std::uint32_t h = d.u32(chains + 4ull * (idx - symoffset));
    if (h & 1u) break;
    ++idx;
  }
  return idx + 1;
}

void parse_dynamic_segment(const ElfData& d, const SegmentView& seg, ElfImage& img, bool want_symbols,
                           bool want_needed) {
  std::optional<std::uint64_t> strtab, strsz, symtab, syment, hash, gnu_hash;
  std::vector<std::uint64_t> needed;
  for (auto [tag, val] : seg.entries()) {
    switch (tag) {
      case DT_STRTAB:
        strtab = val;
        break;
      case DT_STRSZ:
        strsz = val;
        break;
      case DT_SYMTAB:
        symtab = val;
        break;
      case DT_SYMENT:
        syment = val;
        break;
      case DT_HASH:
        hash = val;
        break;
      case DT_GNU_HASH:
        gnu_hash = val;
        break;
      case DT_NEEDED:
        needed.push_back(val);
        break;
      default:
        break;
    }
  }
  if (!strtab || !strsz) {
    if (!needed.empty() || symtab) img.warnings.push_back("dynamic segment lacks DT_STRTAB/DT_STRSZ");
    return;
  }
  const std::uint64_t str_off = seg.require_offset(*strtab, "DT_STRTAB");
  if (want_needed) {
    for (std::uint64_t n : needed) img.needed_libraries.push_back(read_cstring(d, str_off, *strsz, n));
  }
  if (!want_symbols || !symtab) return;

  const std::uint64_t sym_off = seg.require_offset(*symtab, "DT_SYMTAB");
  const std::uint64_t ent = syment.value_or(d.is64() ? sizeof(Elf64_Sym) : sizeof(Elf32_Sym));
  std::uint64_t count = 0;
  if (hash) {
    count = d.u32(seg.require_offset(*hash, "DT_HASH") + 4);
  } else if (gnu_hash) {
    count = count_from_gnu_hash(d, seg.require_offset(*gnu_hash, "DT_GNU_HASH"));
  } else if (*strtab > *symtab) {
    // Linkers place .dynstr directly after .dynsym.
    count = (*strtab - *symtab) / ent;
    img.warnings.push_back("symbol count estimated from DT_STRTAB placement");
  } else {
    img.warnings.push_back("cannot determine dynamic symbol count");
  }
  img.dynamic_symbols = read_symbols(d, sym_off, count, ent, str_off, *strsz);
}

}  // namespace

ElfImage parse_elf(ByteView bytes, std::string file_name) {
  if (bytes.size() < EI_NIDENT || std::memcmp(bytes.data(), ELFMAG, SELFMAG) != 0) {
    throw MalformedElf("bad ELF magic", 0);
  }
  ElfImage img;
  img.file_name = std::move(file_name);
  img.file_size = bytes.size();
  img.file_sha256 = sha256_hex(bytes);

  switch (bytes[EI_CLASS]) {
    case ELFCLASS32:
      img.elf_class = ElfClass::Elf32;
      break;
    case ELFCLASS64:
      img.elf_class = ElfClass::Elf64;
      break;
    default:
      throw UnsupportedClass("unsupported ELF class " + std::to_string(bytes[EI_CLASS]));
  }
  switch (bytes[EI_DATA]) {
    case ELFDATA2LSB:
      img.endianness = Endianness::Little;
      break;
    case ELFDATA2MSB:
      img.endianness = Endianness::Big;
      img.warnings.push_back("big-endian object; no Android ABI uses this byte order");
      break;
    default:
      throw MalformedElf("invalid data encoding " + std::to_string(bytes[EI_DATA]), EI_DATA);
  }

  const ElfData d(bytes, img.endianness == Endianness::Big, img.elf_class == ElfClass::Elf64);
  FileHeader h = read_file_header(d);
  img.machine = map_machine(h.machine);
  if (img.machine.arch == Arch::Other) {
    img.warnings.push_back("unrecognised machine " + std::to_string(h.machine));
  }

  const auto sections = read_section_headers(d, h);
  const auto phdrs = read_program_headers(d, h);
  img.has_section_headers = !sections.empty();

  bool found_dynsym = false;
  bool found_dynamic = false;
  for (const auto& s : sections) {
    if (s.type == SHT_DYNSYM || s.type == SHT_SYMTAB) {
      if (s.link >= sections.size()) throw MalformedElf("symbol table links to missing string table", s.header_pos);
      const auto& str = sections[s.link];
      std::uint64_t ent = s.entsize ? s.entsize : (d.is64() ? sizeof(Elf64_Sym) : sizeof(Elf32_Sym));
      auto syms = read_symbols(d, s.offset, s.size / ent, ent, str.offset, str.size);
      if (s.type == SHT_DYNSYM) {
        found_dynsym = true;
        img.dynamic_symbols = std::move(syms);
      } else {
        img.static_symbols = std::move(syms);
      }
    } else if (s.type == SHT_DYNAMIC) {
      if (s.link >= sections.size()) throw MalformedElf("dynamic section links to missing string table", s.header_pos);
      found_dynamic = true;
      const auto& str = sections[s.link];
      const std::uint64_t ent = d.is64() ? 16 : 8;
      for (std::uint64_t p = s.offset; p + ent <= s.offset + s.size; p += ent) {
        std::int64_t tag = d.is64() ? static_cast<std::int64_t>(d.u64(p)) : static_cast<std::int32_t>(d.u32(p));
        if (tag == DT_NULL) break;
        if (tag == DT_NEEDED) {
          img.needed_libraries.push_back(read_cstring(d, str.offset, str.size, d.word(p + (d.is64() ? 8 : 4))));
        }
      }
    } else if (is_readonly_data(s)) {
      auto data = d.slice(s.offset, s.size, "section");
      img.rodata.push_back({s.name, Bytes(data.begin(), data.end())});
    }
  }

  if (!found_dynsym || !found_dynamic) {
    SegmentView seg(d, phdrs);
    if (seg.has_dynamic()) parse_dynamic_segment(d, seg, img, !found_dynsym, !found_dynamic);
  }

  if (sections.empty()) {
    for (std::size_t i = 0; i < phdrs.size(); ++i) {
      const auto& p = phdrs[i];
      if (p.type == PT_LOAD && (p.flags & PF_R) && !(p.flags & (PF_W | PF_X)) && p.filesz > 0) {
        auto data = d.slice(p.offset, p.filesz, "segment");
        img.rodata.push_back({"segment[" + std::to_string(i) + "]", Bytes(data.begin(), data.end())});
      }
    }
  }
  return img;
}

std::vector<std::string> extract_strings(ByteView bytes) {
  std::vector<std::string> out;
  std::size_t run_start = 0;
  std::size_t run_len = 0;
  for (std::size_t i = 0; i <= bytes.size(); ++i) {
    if (i < bytes.size() && bytes[i] >= 0x20 && bytes[i] <= 0x7E) {
      if (run_len == 0) run_start = i;
      ++run_len;
      continue;
    }
    const bool terminated = i == bytes.size() || bytes[i] == 0;
    if (terminated && run_len >= 4) {
      out.emplace_back(reinterpret_cast<const char*>(bytes.data() + run_start), run_len);
    }
    run_len = 0;
  }
  return out;
}

}  // namespace librarian
