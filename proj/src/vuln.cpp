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

#include "librarian/vuln.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "librarian/errors.hpp"
#include "librarian/feature_vector.hpp"

namespace librarian {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string require_string(const json& obj, const char* key, const std::string& where, bool allow_empty = false) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) throw SchemaError(where + ": " + key + " must be a string");
  auto s = it->get<std::string>();
  if (!allow_empty && s.empty()) throw SchemaError(where + ": " + key + " must not be empty");
  return s;
}

Date require_date(const json& obj, const char* key, const std::string& where) {
  auto s = require_string(obj, key, where);
  auto d = parse_date(s);
  if (!d) throw SchemaError(where + ": " + key + " is not an ISO-8601 date: " + s);
  return *d;
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw SchemaError(where + ": " + key + " must be a string");
  return it->get<std::string>();
}

void validate_timeline(const AppTimeline& t) {
  for (std::size_t i = 1; i < t.versions.size(); ++i) {
    const auto& prev = t.versions[i - 1];
    const auto& cur = t.versions[i];
    if (cur.version_code <= prev.version_code) {
      throw SchemaError("timeline " + t.app_id + ": version_code " + std::to_string(cur.version_code) +
                        " does not increase");
    }
    if (cur.release_date < prev.release_date) {
      throw SchemaError("timeline " + t.app_id + ": release_date of version_code " +
                        std::to_string(cur.version_code) + " precedes its predecessor");
    }
  }
}

}  // namespace

bool CveEntry::affects(const std::string& lib, const std::string& version) const {
  return lower(library) == lower(lib) &&
         std::find(affected_versions.begin(), affected_versions.end(), version) != affected_versions.end();
}

std::vector<CveEntry> load_cvedb(const json& doc) {
  if (!doc.is_array()) throw SchemaError("cvedb: document must be an array");
  std::vector<CveEntry> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string where = "cvedb[" + std::to_string(i) + "]";
    const json& item = doc[i];
    if (!item.is_object()) throw SchemaError(where + ": must be an object");
    CveEntry e;
    e.cve_id = require_string(item, "cve_id", where);
    e.library = require_string(item, "library", where);
    auto affected = item.find("affected_versions");
    if (affected == item.end() || !affected->is_array()) throw SchemaError(where + ": affected_versions must be an array");
    for (const auto& v : *affected) {
      if (!v.is_string()) throw SchemaError(where + ": affected_versions must contain strings");
      e.affected_versions.push_back(v.get<std::string>());
    }
    e.disclosure_date = require_date(item, "disclosure_date", where);
    e.patch_version = require_string(item, "patch_version", where);
    e.patch_release_date = require_date(item, "patch_release_date", where);
    e.severity = optional_string(item, "severity", where);
    e.description = optional_string(item, "description", where);
    if (std::find(e.affected_versions.begin(), e.affected_versions.end(), e.patch_version) != e.affected_versions.end()) {
      throw SchemaError(where + ": patch_version " + e.patch_version + " is listed as affected");
    }
    if (!seen.emplace(e.cve_id, lower(e.library)).second) {
      throw SchemaError(where + ": duplicate " + e.cve_id + " for library " + e.library);
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<CveEntry> load_cvedb_file(const std::filesystem::path& path) { return load_cvedb(read_json_file(path)); }

json to_json(const CveEntry& c) {
  return {{"cve_id", c.cve_id},
          {"library", c.library},
          {"affected_versions", c.affected_versions},
          {"disclosure_date", format_date(c.disclosure_date)},
          {"patch_version", c.patch_version},
          {"patch_release_date", format_date(c.patch_release_date)},
          {"severity", c.severity},
          {"description", c.description}};
}

std::vector<CveEntry> flag_vulnerable(const std::string& library, const std::string& version,
                                      std::span<const CveEntry> cvedb) {
  std::vector<CveEntry> out;
  for (const auto& c : cvedb) {
    if (c.affects(library, version)) out.push_back(c);
  }
  return out;
}

AppTimeline parse_timeline(const json& doc) {
  if (!doc.is_object()) throw SchemaError("timeline: document must be an object");
  AppTimeline t;
  t.app_id = require_string(doc, "app_id", "timeline");
  auto versions = doc.find("versions");
  if (versions == doc.end() || !versions->is_array()) throw SchemaError("timeline " + t.app_id + ": versions must be an array");
  for (std::size_t i = 0; i < versions->size(); ++i) {
    const json& v = (*versions)[i];
    const std::string where = "timeline " + t.app_id + " versions[" + std::to_string(i) + "]";
    if (!v.is_object()) throw SchemaError(where + ": must be an object");
    AppVersion av;
    auto code = v.find("version_code");
    if (code == v.end() || !code->is_number_integer()) throw SchemaError(where + ": version_code must be an integer");
    av.version_code = code->get<std::int64_t>();
    av.release_date = require_date(v, "release_date", where);
    auto libs = v.find("identified_libs");
    if (libs == v.end() || !libs->is_array()) throw SchemaError(where + ": identified_libs must be an array");
    for (const auto& l : *libs) {
      if (!l.is_object()) throw SchemaError(where + ": identified_libs entries must be objects");
      av.identified_libs.push_back({require_string(l, "library", where), require_string(l, "version", where)});
    }
    t.versions.push_back(std::move(av));
  }
  validate_timeline(t);
  return t;
}

json to_json(const AppTimeline& t) {
  json versions = json::array();
  for (const auto& v : t.versions) {
    json libs = json::array();
    for (const auto& l : v.identified_libs) libs.push_back({{"library", l.library}, {"version", l.version}});
    versions.push_back({{"version_code", v.version_code},
                        {"release_date", format_date(v.release_date)},
                        {"identified_libs", std::move(libs)}});
  }
  return {{"app_id", t.app_id}, {"versions", std::move(versions)}};
}

std::vector<AppTimeline> assemble_timelines(std::span<const json> scan_reports) {
  struct Slot {
    Date release;
    std::set<LibraryVersion> libs;
  };
  std::map<std::string, std::map<std::int64_t, Slot>> apps;
  for (std::size_t i = 0; i < scan_reports.size(); ++i) {
    const json& r = scan_reports[i];
    const std::string where = "scan report " + std::to_string(i);
    if (!r.is_object()) throw SchemaError(where + ": must be an object");
    const std::string app = require_string(r, "app_id", where);
    auto code = r.find("version_code");
    if (code == r.end() || !code->is_number_integer()) throw SchemaError(where + ": version_code is required");
    const Date release = require_date(r, "release_date", where);
    auto [it, inserted] = apps[app].try_emplace(code->get<std::int64_t>(), Slot{release, {}});
    if (!inserted) it->second.release = std::min(it->second.release, release);
    auto entries = r.find("entries");
    if (entries == r.end() || !entries->is_array()) throw SchemaError(where + ": entries must be an array");
    for (const auto& e : *entries) {
      auto m = e.find("match");
      if (m == e.end() || m->is_null()) continue;
      if (m->value("status", "") != "Identified") continue;
      const auto& c = m->at("candidates").at(0);
      it->second.libs.insert({c.at("library").get<std::string>(), c.at("version").get<std::string>()});
    }
  }
  std::vector<AppTimeline> out;
  for (auto& [app, versions] : apps) {
    AppTimeline t;
    t.app_id = app;
    for (auto& [code, slot] : versions) {
      t.versions.push_back({code, slot.release, {slot.libs.begin(), slot.libs.end()}});
    }
    validate_timeline(t);
    out.push_back(std::move(t));
  }
  return out;
}

std::string_view fix_kind_name(FixKind k) {
  switch (k) {
    case FixKind::Updated:
      return "updated";
    case FixKind::Removed:
      return "removed";
    case FixKind::StillPresent:
      break;
  }
  return "still_present";
}

std::vector<LibrarySpan> compute_spans(const AppTimeline& timeline) {
  struct Open {
    std::size_t first_index;
    Date first;
    Date last;
  };
  std::map<LibraryVersion, Open> active;
  std::vector<std::pair<std::size_t, LibrarySpan>> closed;

  auto close = [&](const LibraryVersion& lv, const Open& o, std::optional<Date> fix, FixKind kind) {
    closed.push_back({o.first_index, {timeline.app_id, lv.library, lv.version, o.first, o.last, fix, kind}});
  };

  for (std::size_t i = 0; i < timeline.versions.size(); ++i) {
    const auto& v = timeline.versions[i];
    const std::set<LibraryVersion> present(v.identified_libs.begin(), v.identified_libs.end());
    std::set<std::string> libraries;
    for (const auto& lv : present) libraries.insert(lv.library);

    for (auto it = active.begin(); it != active.end();) {
      if (present.contains(it->first)) {
        ++it;
        continue;
      }
      close(it->first, it->second, v.release_date,
            libraries.contains(it->first.library) ? FixKind::Updated : FixKind::Removed);
      it = active.erase(it);
    }
    for (const auto& lv : present) {
      auto [it, inserted] = active.try_emplace(lv, Open{i, v.release_date, v.release_date});
      if (!inserted) it->second.last = v.release_date;
    }
  }
  for (const auto& [lv, o] : active) close(lv, o, std::nullopt, FixKind::StillPresent);

  std::stable_sort(closed.begin(), closed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    if (a.second.library != b.second.library) return a.second.library < b.second.library;
    return a.second.lib_version < b.second.lib_version;
  });
  std::vector<LibrarySpan> out;
  out.reserve(closed.size());
  for (auto& [idx, span] : closed) out.push_back(std::move(span));
  return out;
}

long long ttrp(const CveEntry& cve) { return days_between(cve.disclosure_date, cve.patch_release_date); }

std::optional<long long> ttaf(const LibrarySpan& span, const CveEntry& cve) {
  if (!cve.affects(span.library, span.lib_version)) {
    throw InvalidPair(cve.cve_id + " does not affect " + span.library + " " + span.lib_version);
  }
  if (span.fix_kind == FixKind::StillPresent || !span.fix_date) return std::nullopt;
  // Exposure is counted from patch availability whether the span began
  // before or after the patch release.
  return days_between(cve.patch_release_date, *span.fix_date);
}

MeanSe mean_se(std::vector<double> values) {
  MeanSe out;
  out.n = values.size();
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  out.se = sd / std::sqrt(static_cast<double>(values.size()));
  return out;
}

StudyReport aggregate(std::span<const LibrarySpan> spans, std::span<const CveEntry> cvedb, Date as_of) {
  StudyReport report;
  report.as_of = as_of;

  std::map<std::pair<std::string, std::string>, long long> ttrp_by_cve;
  std::vector<double> outdated;
  std::set<std::string> apps_still_vulnerable;

  for (const auto& span : spans) {
    std::optional<Date> earliest_patch;
    for (const auto& cve : cvedb) {
      if (!cve.affects(span.library, span.lib_version)) continue;
      SpanCveRow row;
      row.app_id = span.app_id;
      row.library = span.library;
      row.lib_version = span.lib_version;
      row.cve_id = cve.cve_id;
      row.disclosure_date = cve.disclosure_date;
      row.patch_release_date = cve.patch_release_date;
      row.ttrp_days = ttrp(cve);
      row.first_seen = span.first_seen;
      row.last_seen = span.last_seen;
      row.fix_date = span.fix_date;
      row.fix_kind = span.fix_kind;
      row.ttaf_days = ttaf(span, cve);
      row.excluded = span.fix_date && *span.fix_date < cve.disclosure_date;
      report.rows.push_back(std::move(row));
      ttrp_by_cve[{lower(cve.library), cve.cve_id}] = ttrp(cve);
      if (!earliest_patch || cve.patch_release_date < *earliest_patch) earliest_patch = cve.patch_release_date;
    }
    if (!earliest_patch) continue;
    ++report.vulnerable_spans;
    if (span.fix_kind == FixKind::StillPresent) {
      ++report.still_vulnerable_spans;
      apps_still_vulnerable.insert(span.app_id);
      outdated.push_back(static_cast<double>(days_between(*earliest_patch, as_of)));
    }
  }

  std::sort(report.rows.begin(), report.rows.end(), [](const SpanCveRow& a, const SpanCveRow& b) {
    return std::tie(a.app_id, a.library, a.lib_version, a.first_seen, a.cve_id) <
           std::tie(b.app_id, b.library, b.lib_version, b.first_seen, b.cve_id);
  });

  std::vector<double> ttrps;
  for (const auto& [key, days] : ttrp_by_cve) ttrps.push_back(static_cast<double>(days));
  report.ttrp = mean_se(std::move(ttrps));

  std::vector<double> all;
  std::map<std::string, std::vector<double>> by_app;
  std::map<std::string, std::vector<double>> by_library;
  for (const auto& row : report.rows) {
    if (!row.ttaf_days || row.excluded) continue;
    const double v = static_cast<double>(*row.ttaf_days);
    all.push_back(v);
    by_app[row.app_id].push_back(v);
    by_library[row.library].push_back(v);
  }
  report.ttaf = mean_se(std::move(all));

  auto groups = [](std::map<std::string, std::vector<double>>& m) {
    std::vector<GroupStat> out;
    for (auto& [key, values] : m) out.push_back({key, mean_se(std::move(values))});
    std::stable_sort(out.begin(), out.end(), [](const GroupStat& a, const GroupStat& b) {
      if (a.ttaf.mean != b.ttaf.mean) return a.ttaf.mean > b.ttaf.mean;
      return a.key < b.key;
    });
    return out;
  };
  report.per_app = groups(by_app);
  report.per_library = groups(by_library);

  std::vector<double> app_means;
  for (const auto& g : report.per_app) app_means.push_back(g.ttaf.mean);
  report.ttaf_app_weighted = mean_se(std::move(app_means));

  report.apps_still_vulnerable = apps_still_vulnerable.size();
  report.still_vulnerable_outdated_days = mean_se(std::move(outdated));
  return report;
}

}  // namespace librarian
