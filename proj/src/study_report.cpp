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

#include <cstdio>
#include <sstream>

namespace librarian {

using nlohmann::json;

namespace {

json stat_json(const MeanSe& s) { return {{"mean", s.mean}, {"se", s.se}, {"n", s.n}}; }

json opt_date(const std::optional<Date>& d) { return d ? json(format_date(*d)) : json(nullptr); }

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

json groups_json(std::span<const GroupStat> groups) {
  json out = json::array();
  for (const auto& g : groups) out.push_back({{"key", g.key}, {"ttaf", stat_json(g.ttaf)}});
  return out;
}

}  // namespace

json to_json(const StudyReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"app_id", row.app_id},
                    {"library", row.library},
                    {"lib_version", row.lib_version},
                    {"cve_id", row.cve_id},
                    {"disclosure_date", format_date(row.disclosure_date)},
                    {"patch_release_date", format_date(row.patch_release_date)},
                    {"ttrp_days", row.ttrp_days},
                    {"first_seen", format_date(row.first_seen)},
                    {"last_seen", format_date(row.last_seen)},
                    {"fix_date", opt_date(row.fix_date)},
                    {"fix_kind", fix_kind_name(row.fix_kind)},
                    {"ttaf_days", row.ttaf_days ? json(*row.ttaf_days) : json(nullptr)},
                    {"excluded", row.excluded}});
  }
  return {{"as_of", format_date(r.as_of)},
          {"summary",
           {{"ttrp", stat_json(r.ttrp)},
            {"ttaf", stat_json(r.ttaf)},
            {"ttaf_app_weighted", stat_json(r.ttaf_app_weighted)},
            {"vulnerable_spans", r.vulnerable_spans},
            {"still_vulnerable_spans", r.still_vulnerable_spans},
            {"apps_still_vulnerable", r.apps_still_vulnerable},
            {"still_vulnerable_outdated_days", stat_json(r.still_vulnerable_outdated_days)}}},
          {"per_app", groups_json(r.per_app)},
          {"per_library", groups_json(r.per_library)},
          {"rows", std::move(rows)}};
}

std::string rows_csv(const StudyReport& r) {
  std::ostringstream out;
  out << "app_id,library,lib_version,cve_id,disclosure_date,patch_release_date,ttrp_days,first_seen,last_seen,"
         "fix_date,fix_kind,ttaf_days,excluded\n";
  for (const auto& row : r.rows) {
    out << csv_field(row.app_id) << ',' << csv_field(row.library) << ',' << csv_field(row.lib_version) << ','
        << csv_field(row.cve_id) << ',' << format_date(row.disclosure_date) << ','
        << format_date(row.patch_release_date) << ',' << row.ttrp_days << ',' << format_date(row.first_seen) << ','
        << format_date(row.last_seen) << ',' << (row.fix_date ? format_date(*row.fix_date) : "") << ','
        << fix_kind_name(row.fix_kind) << ',' << (row.ttaf_days ? std::to_string(*row.ttaf_days) : "") << ','
        << (row.excluded ? "true" : "false") << '\n';
  }
  return out.str();
}

std::string groups_csv(std::span<const GroupStat> groups, std::string_view key_name) {
  std::ostringstream out;
  out << csv_field(key_name) << ",ttaf_mean,ttaf_se,n\n";
  for (const auto& g : groups) {
    out << csv_field(g.key) << ',' << num(g.ttaf.mean) << ',' << num(g.ttaf.se) << ',' << g.ttaf.n << '\n';
  }
  return out.str();
}

std::string summary_csv(const StudyReport& r) {
  std::ostringstream out;
  out << "metric,mean,se,n\n";
  auto line = [&](std::string_view name, const MeanSe& s) {
    out << name << ',' << num(s.mean) << ',' << num(s.se) << ',' << s.n << '\n';
  };
  line("ttrp_days", r.ttrp);
  line("ttaf_days", r.ttaf);
  line("ttaf_days_app_weighted", r.ttaf_app_weighted);
  line("still_vulnerable_outdated_days", r.still_vulnerable_outdated_days);
  out << "vulnerable_spans," << r.vulnerable_spans << ",,\n";
  out << "still_vulnerable_spans," << r.still_vulnerable_spans << ",,\n";
  out << "apps_still_vulnerable," << r.apps_still_vulnerable << ",,\n";
  return out.str();
}

}  // namespace librarian
