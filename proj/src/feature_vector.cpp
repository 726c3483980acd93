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

#include "librarian/feature_vector.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "librarian/errors.hpp"

namespace librarian {

using nlohmann::json;

namespace {

const char* const kDefaultPrefixes[] = {
    "_ZSt",   "_ZNSt",      "_ZNKSt",   "_ZTVSt",   "_ZTISt",  "_ZTSSt",
    "__cxa_", "__cxxabi",   "__gxx_",   "_Unwind_", "__aeabi_", "__gnu_",
    "__emutls_", "__stack_chk", "__atomic_", "__sync_", "$",
};

// Runtime, linker and code-generation symbols. Calls the compiler emits on
// its own (block moves, integer division helpers, fortify checks) differ
// between targets and optimisation levels.
const char* const kDefaultExact[] = {
    "__bss_start", "__bss_start__", "__bss_end__", "_bss_end__", "__end__", "_edata", "_end",
    "_etext", "__dso_handle", "_init", "_fini", "__gmon_start__", "_ITM_registerTMCloneTable",
    "_ITM_deregisterTMCloneTable", "_Jv_RegisterClasses", "__register_frame_info",
    "__deregister_frame_info", "__libc_init", "__libc_start_main", "__errno", "__errno_location",
    "__assert", "__assert2", "__assert_fail", "abort", "atexit", "dl_iterate_phdr",
    "dl_unwind_find_exidx", "memcpy", "memmove", "memset", "memcmp", "bzero", "__memcpy_chk",
    "__memmove_chk", "__memset_chk", "__strlen_chk", "__strcpy_chk", "__strcat_chk",
    "__strchr_chk", "__strrchr_chk", "__vsnprintf_chk", "__vsprintf_chk", "__snprintf_chk",
    "__sprintf_chk", "__read_chk", "__FD_SET_chk", "__FD_ISSET_chk", "__FD_CLR_chk", "__divdi3",
    "__udivdi3", "__moddi3", "__umoddi3", "__divsi3", "__udivsi3", "__modsi3", "__umodsi3",
    "__popcountsi2", "__popcountdi2", "__clzsi2", "__clzdi2", "__ctzsi2", "__ctzdi2",
};

const char* const kDefaultDependencies[] = {
    "libc",        "libc.so",          "libm",         "libm.so",    "libdl",
    "libdl.so",    "liblog",           "liblog.so",    "libstdc++",  "libstdc++.so",
    "libc++_shared", "libc++_shared.so", "libandroid", "libandroid.so",
};

std::vector<std::string> string_array(const json& parent, const char* key, const char* where) {
  auto it = parent.find(key);
  if (it == parent.end()) throw SchemaError(std::string(where) + ": missing field \"" + key + "\"");
  if (!it->is_array()) throw SchemaError(std::string(where) + ": field \"" + key + "\" must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw SchemaError(std::string(where) + ": field \"" + key + "\" must contain only strings");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

const json& object_field(const json& parent, const char* key, const char* where) {
  auto it = parent.find(key);
  if (it == parent.end()) throw SchemaError(std::string(where) + ": missing field \"" + key + "\"");
  if (!it->is_object()) throw SchemaError(std::string(where) + ": field \"" + key + "\" must be an object");
  return *it;
}

std::string string_field(const json& parent, const char* key, const char* where) {
  auto it = parent.find(key);
  if (it == parent.end()) throw SchemaError(std::string(where) + ": missing field \"" + key + "\"");
  if (!it->is_string()) throw SchemaError(std::string(where) + ": field \"" + key + "\" must be a string");
  return it->get<std::string>();
}

std::set<std::string> to_set(std::vector<std::string> v) { return {v.begin(), v.end()}; }

template <typename Pred>
void erase_if_set(std::set<std::string>& s, Pred pred) {
  for (auto it = s.begin(); it != s.end();) {
    it = pred(*it) ? s.erase(it) : std::next(it);
  }
}

}  // namespace

std::string valid_utf8(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    unsigned char lo = 0x80, hi = 0xBF;
    if (b0 < 0x80) len = 1;
    else if (b0 >= 0xC2 && b0 <= 0xDF) len = 2;
    else if (b0 >= 0xE0 && b0 <= 0xEF) {
      len = 3;
      if (b0 == 0xE0) lo = 0xA0;
      if (b0 == 0xED) hi = 0x9F;
    } else if (b0 >= 0xF0 && b0 <= 0xF4) {
      len = 4;
      if (b0 == 0xF0) lo = 0x90;
      if (b0 == 0xF4) hi = 0x8F;
    }
    std::size_t ok = len == 0 ? 0 : 1;
    for (std::size_t k = 1; k < len && i + k < s.size(); ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if (b < (k == 1 ? lo : 0x80) || b > (k == 1 ? hi : 0xBF)) break;
      ++ok;
    }
    if (len != 0 && ok == len) {
      out.append(s.substr(i, len));
      i += len;
    } else {
      out += "\xEF\xBF\xBD";
      i += std::max<std::size_t>(ok, 1);
    }
  }
  return out;
}

NoiseFilter::NoiseFilter(std::vector<std::string> prefixes, std::set<std::string> exact,
                         std::set<std::string> dependency_denylist)
    : prefixes_(std::move(prefixes)),
      exact_(std::move(exact)),
      dependency_denylist_(std::move(dependency_denylist)) {}

NoiseFilter NoiseFilter::builtin() {
  return NoiseFilter({std::begin(kDefaultPrefixes), std::end(kDefaultPrefixes)},
                     {std::begin(kDefaultExact), std::end(kDefaultExact)},
                     {std::begin(kDefaultDependencies), std::end(kDefaultDependencies)});
}

NoiseFilter NoiseFilter::from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("noise filter: document must be an object");
  return NoiseFilter(string_array(doc, "prefixes", "noise filter"),
                     to_set(string_array(doc, "exact", "noise filter")),
                     to_set(string_array(doc, "dependency_denylist", "noise filter")));
}

NoiseFilter NoiseFilter::load(const std::filesystem::path& path) { return from_json(read_json_file(path)); }

json NoiseFilter::to_json() const {
  return json{{"prefixes", prefixes_}, {"exact", exact_}, {"dependency_denylist", dependency_denylist_}};
}

bool NoiseFilter::drops_symbol(std::string_view name) const {
  if (exact_.contains(std::string(name))) return true;
  return std::any_of(prefixes_.begin(), prefixes_.end(),
                     [&](const std::string& p) { return name.starts_with(p); });
}

bool NoiseFilter::drops_dependency(std::string_view name) const {
  return dependency_denylist_.contains(std::string(name));
}

void NoiseFilter::apply(FeatureVector& fv) const {
  auto sym = [this](const std::string& n) { return drops_symbol(n); };
  erase_if_set(fv.exported_functions, sym);
  erase_if_set(fv.imported_functions, sym);
  erase_if_set(fv.exported_globals, sym);
  erase_if_set(fv.imported_globals, sym);
  erase_if_set(fv.dependencies, [this](const std::string& n) { return drops_dependency(n); });
}

FeatureVector build_feature_vector(const ElfImage& image, const NoiseFilter& filter) {
  FeatureVector fv;
  fv.binary = {valid_utf8(image.file_name), image.file_sha256, image.machine.arch, image.file_size};

  for (const auto& s : image.dynamic_symbols) {
    const bool bound = s.binding == SymbolBinding::Global || s.binding == SymbolBinding::Weak;
    const bool visible =
        s.visibility == SymbolVisibility::Default || s.visibility == SymbolVisibility::Protected;
    if (!bound || !visible) continue;
    const bool data = s.type == SymbolType::Object || s.type == SymbolType::Tls;
    std::string name = valid_utf8(s.name);
    if (s.defined) {
      if (s.type == SymbolType::Func) fv.exported_functions.insert(std::move(name));
      else if (data) fv.exported_globals.insert(std::move(name));
    } else {
      if (s.type == SymbolType::Func || s.type == SymbolType::NoType) fv.imported_functions.insert(std::move(name));
      else if (data) fv.imported_globals.insert(std::move(name));
    }
  }
  for (const auto& n : image.needed_libraries) fv.dependencies.insert(valid_utf8(n));
  for (const auto& section : image.rodata) {
    auto strings = extract_strings(section.bytes);
    fv.rodata_strings.insert(fv.rodata_strings.end(), std::make_move_iterator(strings.begin()),
                             std::make_move_iterator(strings.end()));
  }
  filter.apply(fv);
  return fv;
}

json serialize_fv(const FeatureVector& fv) {
  json doc;
  doc["schema_version"] = kFeatureSchemaVersion;
  doc["binary"] = {{"file_name", fv.binary.file_name},
                   {"sha256", fv.binary.file_sha256},
                   {"arch", arch_name(fv.binary.arch)},
                   {"file_size", fv.binary.file_size}};
  doc["features"] = {{"exported_functions", fv.exported_functions},
                     {"imported_functions", fv.imported_functions},
                     {"exported_globals", fv.exported_globals},
                     {"imported_globals", fv.imported_globals},
                     {"dependencies", fv.dependencies}};
  doc["rodata_strings"] = fv.rodata_strings;
  if (fv.library) doc["library"] = {{"name", fv.library->name}, {"version", fv.library->version}};
  return doc;
}

FeatureVector parse_fv(const json& doc) {
  constexpr const char* where = "feature vector";
  if (!doc.is_object()) throw SchemaError("feature vector: document must be an object");
  auto ver = doc.find("schema_version");
  if (ver == doc.end()) throw SchemaError("feature vector: missing field \"schema_version\"");
  if (!ver->is_number_integer()) throw SchemaError("feature vector: schema_version must be an integer");
  if (ver->get<long long>() != kFeatureSchemaVersion) {
    throw SchemaError("feature vector: unsupported schema_version " + std::to_string(ver->get<long long>()));
  }

  FeatureVector fv;
  const json& binary = object_field(doc, "binary", where);
  fv.binary.file_name = string_field(binary, "file_name", "feature vector binary");
  fv.binary.file_sha256 = string_field(binary, "sha256", "feature vector binary");
  auto arch = parse_arch(string_field(binary, "arch", "feature vector binary"));
  if (!arch) throw SchemaError("feature vector binary: unknown arch");
  fv.binary.arch = *arch;
  auto size = binary.find("file_size");
  if (size == binary.end() || !size->is_number_unsigned()) {
    throw SchemaError("feature vector binary: file_size must be a non-negative integer");
  }
  fv.binary.file_size = size->get<std::uint64_t>();

  const json& features = object_field(doc, "features", where);
  fv.exported_functions = to_set(string_array(features, "exported_functions", where));
  fv.imported_functions = to_set(string_array(features, "imported_functions", where));
  fv.exported_globals = to_set(string_array(features, "exported_globals", where));
  fv.imported_globals = to_set(string_array(features, "imported_globals", where));
  fv.dependencies = to_set(string_array(features, "dependencies", where));
  fv.rodata_strings = string_array(doc, "rodata_strings", where);

  if (auto lib = doc.find("library"); lib != doc.end() && !lib->is_null()) {
    if (!lib->is_object()) throw SchemaError("feature vector: library must be an object");
    fv.library = LibraryLabel{string_field(*lib, "name", "feature vector library"),
                              string_field(*lib, "version", "feature vector library")};
  }
  return fv;
}

std::string dump_json(const json& doc) {
  return doc.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

void write_fv_file(const std::filesystem::path& path, const FeatureVector& fv) {
  write_text_file(path, dump_json(serialize_fv(fv)));
}

FeatureVector read_fv_file(const std::filesystem::path& path) { return parse_fv(read_json_file(path)); }

Bytes read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write-then-rename so readers never observe a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

}  // namespace librarian
