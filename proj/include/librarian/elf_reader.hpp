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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "librarian/sha256.hpp"

namespace librarian {

enum class ElfClass { Elf32, Elf64 };
enum class Endianness { Little, Big };

// Architectures the pipeline distinguishes. Anything else is Other and keeps
// its raw e_machine code in Machine::code.
enum class Arch { X86, X86_64, Arm, Arm64, Other };

std::string_view arch_name(Arch arch);
std::optional<Arch> parse_arch(std::string_view name);

struct Machine {
  Arch arch = Arch::Other;
  std::uint16_t code = 0;

  bool operator==(const Machine&) const = default;
};

enum class SymbolType { Func, Object, NoType, Tls, Other };
enum class SymbolBinding { Global, Weak, Local, Other };
enum class SymbolVisibility { Default, Protected, Hidden, Internal };

struct RawSymbol {
  std::string name;
  SymbolType type = SymbolType::Other;
  SymbolBinding binding = SymbolBinding::Other;
  bool defined = false;
  SymbolVisibility visibility = SymbolVisibility::Default;

  bool operator==(const RawSymbol&) const = default;
};

// Bytes of one read-only data region. In section mode `name` is the section
// name; when section headers are absent it is "segment[<phdr index>]".
struct DataSection {
  std::string name;
  Bytes bytes;

  bool operator==(const DataSection&) const = default;
};

struct ElfImage {
  ElfClass elf_class = ElfClass::Elf64;
  Endianness endianness = Endianness::Little;
  Machine machine;
  std::vector<RawSymbol> dynamic_symbols;
  // Parsed from .symtab when present. Never used for features since it is
  // stripped from release builds.
  std::vector<RawSymbol> static_symbols;
  std::vector<std::string> needed_libraries;
  std::vector<DataSection> rodata;
  std::string file_sha256;
  std::string file_name;
  std::uint64_t file_size = 0;
  bool has_section_headers = true;
  std::vector<std::string> warnings;

  bool operator==(const ElfImage&) const = default;
};

// Parses an ELF shared object. Throws MalformedElf or UnsupportedClass.
ElfImage parse_elf(ByteView bytes, std::string file_name);

// Every maximal run of printable ASCII (0x20..0x7E) of length >= 4 that is
// terminated by a NUL byte or by the end of `bytes`, in byte order.
std::vector<std::string> extract_strings(ByteView bytes);

}  // namespace librarian
