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

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "librarian/apk_scan.hpp"
#include "librarian/dates.hpp"
#include "librarian/elf_reader.hpp"
#include "librarian/errors.hpp"
#include "librarian/feature_vector.hpp"
#include "librarian/heuristics.hpp"
#include "librarian/index.hpp"
#include "librarian/matcher.hpp"
#include "librarian/vuln.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace librarian;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitAmbiguous = 3;
constexpr int kExitUnknown = 4;

struct Config {
  std::string index_dir = "index";
  double threshold = kDefaultThreshold;
  std::string filter_path;
  std::string cvedb_path;
  unsigned jobs = 0;
  std::string as_of;
  std::string output_format = "json";
  std::string output;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

unsigned worker_count(const Config& cfg) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cfg.jobs == 0 ? hw : std::min(hw, cfg.jobs);
}

NoiseFilter load_filter(const Config& cfg) {
  return cfg.filter_path.empty() ? NoiseFilter::builtin() : NoiseFilter::load(cfg.filter_path);
}

std::vector<CveEntry> load_cvedb_opt(const Config& cfg) {
  if (cfg.cvedb_path.empty()) return {};
  return load_cvedb_file(cfg.cvedb_path);
}

Date as_of_date(const Config& cfg) {
  if (cfg.as_of.empty()) return today_utc();
  auto d = parse_date(cfg.as_of);
  if (!d) throw UsageError("--as-of must be YYYY-MM-DD, got " + cfg.as_of);
  return *d;
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.output.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(cfg.output, text);
  }
}

bool looks_like_zip(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && magic[0] == 'P' && magic[1] == 'K' && magic[2] == 3 && magic[3] == 4;
}

bool looks_like_elf(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && magic[0] == 0x7f && magic[1] == 'E' && magic[2] == 'L' && magic[3] == 'F';
}

// A query is an ELF file or a previously extracted feature-vector JSON.
FeatureVector load_query(const fs::path& path, const NoiseFilter& filter) {
  if (path.extension() == ".json") return read_fv_file(path);
  const Bytes bytes = read_file_bytes(path);
  return build_feature_vector(parse_elf(bytes, path.filename().string()), filter);
}

void report_error(const std::string& subject, const std::exception& e) {
  if (const auto* le = dynamic_cast<const Error*>(&e)) {
    std::cerr << subject << ": " << le->kind() << ": " << le->what() << '\n';
  } else {
    std::cerr << subject << ": " << e.what() << '\n';
  }
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

int status_exit_code(MatchStatus s) {
  switch (s) {
    case MatchStatus::Identified:
      return kExitOk;
    case MatchStatus::Tied:
    case MatchStatus::LowConfidence:
      return kExitAmbiguous;
    case MatchStatus::Unknown:
      break;
  }
  return kExitUnknown;
}

std::string describe(const MatchResult& r) {
  std::ostringstream os;
  os << status_name(r.status);
  if (r.method) os << " via " << method_name(*r.method);
  for (const auto& c : r.candidates) {
    os << "\n  " << c.library << ' ' << c.version << " (" << arch_name(c.arch) << ") score=" << fixed(c.score, 4);
  }
  for (const auto& e : r.string_evidence) {
    os << "\n  string: \"" << e.matched_text << "\" -> " << e.library << ' ' << e.version
       << (e.conflict ? " [conflict]" : "");
  }
  return os.str();
}

// ---- extract ---------------------------------------------------------------

int cmd_extract(const Config& cfg, const std::vector<std::string>& paths, const std::string& out_dir) {
  const NoiseFilter filter = load_filter(cfg);
  const fs::path out = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(out);
  int rc = kExitOk;
  for (const auto& p : paths) {
    const fs::path path(p);
    try {
      if (!fs::is_regular_file(path)) throw IoError("no such file " + p);
      if (looks_like_zip(path)) {
        const ApkIdentification apk = extract_apk(path, filter);
        const fs::path dir = out / path.filename();
        for (const auto& r : apk.results) {
          if (!r.fv) {
            std::cerr << p << "!" << r.entry.inner_path << ": " << r.error_kind << ": " << r.error_message << '\n';
            rc = kExitIo;
            continue;
          }
          const fs::path target = dir / (r.entry.inner_path.substr(4) + ".fv.json");
          fs::create_directories(target.parent_path());
          write_fv_file(target, *r.fv);
        }
      } else {
        const FeatureVector fv = load_query(path, filter);
        write_fv_file(out / (path.filename().string() + ".fv.json"), fv);
      }
    } catch (const std::exception& e) {
      report_error(p, e);
      rc = kExitIo;
    }
  }
  return rc;
}

// ---- index -----------------------------------------------------------------

int cmd_index_add(const Config& cfg, const std::string& file, const std::string& library, const std::string& version,
                  const std::string& source) {
  const NoiseFilter filter = load_filter(cfg);
  const Bytes bytes = read_file_bytes(file);
  ManifestLock lock(cfg.index_dir);
  IndexStore store = IndexStore::open(cfg.index_dir);
  const auto& rec = store.add(bytes, fs::path(file).filename().string(), library, version, source, filter);
  store.save();
  std::cerr << "added " << rec.library << ' ' << rec.version << ' ' << arch_name(rec.arch) << ' '
            << rec.sha256.substr(0, 8) << '\n';
  return kExitOk;
}

// Ground truth layout: <dir>/<library>/<version>/**/<binary>.
int cmd_index_build(const Config& cfg, const std::string& dir, const std::string& source) {
  const NoiseFilter filter = load_filter(cfg);
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && looks_like_elf(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  ManifestLock lock(cfg.index_dir);
  IndexStore store = IndexStore::open(cfg.index_dir);
  int rc = kExitOk;
  std::size_t added = 0;
  for (const auto& f : files) {
    const fs::path rel = fs::relative(f, dir);
    auto it = rel.begin();
    if (std::distance(rel.begin(), rel.end()) < 3) {
      std::cerr << f.string() << ": expected <library>/<version>/<file>\n";
      rc = kExitIo;
      continue;
    }
    const std::string library = (it++)->string();
    const std::string version = (it++)->string();
    try {
      store.add(read_file_bytes(f), f.filename().string(), library, version, source, filter);
      ++added;
    } catch (const std::exception& e) {
      report_error(f.string(), e);
      rc = kExitIo;
    }
  }
  store.save();
  std::cerr << "indexed " << added << " binaries; index holds " << store.size() << " records\n";
  return rc;
}

int cmd_index_derive(const Config& cfg) {
  ManifestLock lock(cfg.index_dir);
  IndexStore store = IndexStore::open(cfg.index_dir);
  std::vector<VersionHeuristic> derived;
  for (const auto& lib : store.libraries()) {
    std::vector<const KnownLibVersion*> records;
    for (const auto* r : store.candidates()) {
      if (r->library == lib) records.push_back(r);
    }
    if (auto h = derive_heuristic(records)) derived.push_back(std::move(*h));
  }
  std::vector<VersionHeuristic> merged;
  for (const auto& h : store.heuristics()) {
    const bool replaced = std::any_of(derived.begin(), derived.end(), [&](const VersionHeuristic& d) {
      return d.library == h.library && d.version_group == h.version_group;
    });
    if (!replaced) merged.push_back(h);
  }
  merged.insert(merged.end(), derived.begin(), derived.end());
  HeuristicSet check(merged);
  store.set_heuristics(std::move(merged));
  store.save();
  emit(cfg, dump_json(heuristics_to_json(derived)));
  return kExitOk;
}

IndexStore open_nonempty(const Config& cfg) {
  IndexStore store = IndexStore::open(cfg.index_dir);
  if (store.empty()) throw EmptyIndex();
  return store;
}

// ---- identify --------------------------------------------------------------

int cmd_identify(const Config& cfg, const std::vector<std::string>& paths) {
  const NoiseFilter filter = load_filter(cfg);
  const IndexStore store = open_nonempty(cfg);
  const HeuristicSet heuristics(store.heuristics());

  std::vector<FeatureVector> fvs;
  for (const auto& p : paths) fvs.push_back(load_query(p, filter));
  const BatchResult batch = batch_identify(fvs, store, heuristics, cfg.threshold, worker_count(cfg));

  int rc = kExitOk;
  for (const auto& r : batch.results) rc = std::max(rc, status_exit_code(r.status));

  std::string text;
  if (cfg.output_format == "csv") {
    text = "path,status,method,confirmed_by_strings,library,version,arch,score\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto& r = batch.results[i];
      text += csv_field(paths[i]) + ',' + std::string(status_name(r.status)) + ',' +
              (r.method ? std::string(method_name(*r.method)) : "") + ',' + (r.confirmed_by_strings ? "true" : "false");
      if (r.candidates.empty()) {
        text += ",,,,\n";
      } else {
        const auto& c = r.candidates.front();
        text += ',' + csv_field(c.library) + ',' + csv_field(c.version) + ',' + std::string(arch_name(c.arch)) + ',' +
                fixed(c.score) + '\n';
      }
    }
  } else if (cfg.output_format == "human") {
    for (std::size_t i = 0; i < paths.size(); ++i) text += paths[i] + ": " + describe(batch.results[i]) + '\n';
  } else if (paths.size() == 1) {
    text = dump_json(to_json(batch.results.front()));
  } else {
    json arr = json::array();
    for (std::size_t i = 0; i < paths.size(); ++i) arr.push_back({{"path", paths[i]}, {"result", to_json(batch.results[i])}});
    text = dump_json({{"results", std::move(arr)}, {"tally", to_json(batch.tally)}});
  }
  emit(cfg, text);
  return rc;
}

// ---- scan ------------------------------------------------------------------

int cmd_scan(const Config& cfg, const std::vector<std::string>& apks, const std::string& report_dir) {
  const NoiseFilter filter = load_filter(cfg);
  const IndexStore store = open_nonempty(cfg);
  const HeuristicSet heuristics(store.heuristics());
  const std::vector<CveEntry> cvedb = load_cvedb_opt(cfg);

  std::vector<std::optional<json>> reports(apks.size());
  std::vector<std::string> failures(apks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < apks.size(); i = next++) {
      try {
        if (!fs::is_regular_file(apks[i])) throw IoError("no such file " + apks[i]);
        reports[i] = scan_report_json(identify_apk(apks[i], store, heuristics, filter, cfg.threshold, 1), cvedb);
      } catch (const Error& e) {
        failures[i] = std::string(e.kind()) + ": " + e.what();
      } catch (const std::exception& e) {
        failures[i] = std::string("Error: ") + e.what();
      }
    }
  };
  const unsigned n = std::min<unsigned>(worker_count(cfg), std::max<std::size_t>(1, apks.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int rc = kExitOk;
  json all = json::array();
  json failed = json::array();
  for (std::size_t i = 0; i < apks.size(); ++i) {
    if (!reports[i]) {
      std::cerr << apks[i] << ": " << failures[i] << '\n';
      failed.push_back({{"apk", apks[i]}, {"error", failures[i]}});
      rc = kExitIo;
      continue;
    }
    for (const auto& e : (*reports[i])["entries"]) {
      if (!e["error"].is_null()) {
        std::cerr << apks[i] << "!" << e["inner_path"].get<std::string>() << ": "
                  << e["error"]["kind"].get<std::string>() << ": " << e["error"]["message"].get<std::string>() << '\n';
      }
    }
    if (!report_dir.empty()) {
      fs::create_directories(report_dir);
      write_text_file(fs::path(report_dir) / (fs::path(apks[i]).filename().string() + ".scan.json"),
                      dump_json(*reports[i]));
    }
    all.push_back(std::move(*reports[i]));
  }

  std::string text;
  if (cfg.output_format == "csv") {
    text = "apk,app_id,version_code,inner_path,abi,sha256,status,method,library,version,score,error,cves\n";
    for (const auto& r : all) {
      for (const auto& e : r["entries"]) {
        std::string cves;
        for (const auto& c : e["cves"]) cves += (cves.empty() ? "" : ";") + c.get<std::string>();
        std::string status, method, library, version, score;
        if (!e["match"].is_null()) {
          const auto& m = e["match"];
          status = m["status"].get<std::string>();
          if (!m["method"].is_null()) method = m["method"].get<std::string>();
          if (!m["candidates"].empty()) {
            library = m["candidates"][0]["library"].get<std::string>();
            version = m["candidates"][0]["version"].get<std::string>();
            score = fixed(m["candidates"][0]["score"].get<double>());
          }
        }
        const std::string error = e["error"].is_null() ? "" : e["error"]["kind"].get<std::string>();
        text += csv_field(r["apk"].get<std::string>()) + ',' + csv_field(r["app_id"].get<std::string>()) + ',' +
                (r["version_code"].is_null() ? "" : std::to_string(r["version_code"].get<std::int64_t>())) + ',' +
                csv_field(e["inner_path"].get<std::string>()) + ',' + e["abi"].get<std::string>() + ',' +
                e["sha256"].get<std::string>() + ',' + status + ',' + method + ',' + csv_field(library) + ',' +
                csv_field(version) + ',' + score + ',' + error + ',' + csv_field(cves) + '\n';
      }
    }
  } else if (cfg.output_format == "human") {
    for (const auto& r : all) {
      text += r["apk"].get<std::string>() + " (" + r["app_id"].get<std::string>() + ")\n";
      for (const auto& e : r["entries"]) {
        text += "  " + e["inner_path"].get<std::string>() + " [" + e["abi"].get<std::string>() + "] ";
        if (!e["error"].is_null()) {
          text += "error: " + e["error"]["kind"].get<std::string>() + '\n';
          continue;
        }
        const auto& m = e["match"];
        text += m["status"].get<std::string>();
        if (!m["candidates"].empty()) {
          text += ' ' + m["candidates"][0]["library"].get<std::string>() + ' ' +
                  m["candidates"][0]["version"].get<std::string>();
        }
        for (const auto& c : e["cves"]) text += ' ' + c.get<std::string>();
        text += '\n';
      }
    }
  } else {
    text = dump_json({{"reports", std::move(all)}, {"failures", std::move(failed)}});
  }
  emit(cfg, text);
  return rc;
}

// ---- study -----------------------------------------------------------------

std::string human_summary(const StudyReport& r) {
  auto line = [](std::string_view name, const MeanSe& s) {
    return std::string(name) + ": " + fixed(s.mean, 2) + " +/- " + fixed(s.se, 2) + " days (n=" + std::to_string(s.n) +
           ")\n";
  };
  std::string out = "as of " + format_date(r.as_of) + '\n';
  out += line("TTRP", r.ttrp);
  out += line("TTAF", r.ttaf);
  out += line("TTAF (per-app weighted)", r.ttaf_app_weighted);
  out += "vulnerable spans: " + std::to_string(r.vulnerable_spans) + '\n';
  out += "still vulnerable spans: " + std::to_string(r.still_vulnerable_spans) + " in " +
         std::to_string(r.apps_still_vulnerable) + " apps\n";
  out += line("still-vulnerable outdatedness", r.still_vulnerable_outdated_days);
  return out;
}

int cmd_study(const Config& cfg, const std::string& timelines_dir, const std::string& out_dir) {
  if (cfg.cvedb_path.empty()) throw UsageError("study requires --cvedb");
  if (!fs::is_directory(timelines_dir)) throw IoError("not a directory: " + timelines_dir);
  const std::vector<CveEntry> cvedb = load_cvedb_file(cfg.cvedb_path);
  const Date as_of = as_of_date(cfg);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(timelines_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<AppTimeline> timelines;
  std::vector<json> scan_reports;
  for (const auto& f : files) {
    json doc = read_json_file(f);
    if (doc.is_object() && doc.contains("entries")) {
      scan_reports.push_back(std::move(doc));
    } else {
      timelines.push_back(parse_timeline(doc));
    }
  }
  for (auto& t : assemble_timelines(scan_reports)) timelines.push_back(std::move(t));

  std::vector<LibrarySpan> spans;
  for (const auto& t : timelines) {
    for (auto& s : compute_spans(t)) spans.push_back(std::move(s));
  }
  const StudyReport report = aggregate(spans, cvedb, as_of);

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path out(out_dir);
    write_text_file(out / "study.json", dump_json(to_json(report)));
    write_text_file(out / "rows.csv", rows_csv(report));
    write_text_file(out / "per_app.csv", groups_csv(report.per_app, "app_id"));
    write_text_file(out / "per_library.csv", groups_csv(report.per_library, "library"));
    write_text_file(out / "summary.csv", summary_csv(report));
  }
  if (cfg.output_format == "csv") {
    emit(cfg, rows_csv(report));
  } else if (cfg.output_format == "human") {
    emit(cfg, human_summary(report));
  } else {
    emit(cfg, dump_json(to_json(report)));
  }
  return kExitOk;
}

// ---- contrib ---------------------------------------------------------------

json pooled_shares(const std::array<std::size_t, 5>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  json shares = json::object();
  for (FeatureTag tag : kAllTags) {
    const auto c = counts[static_cast<std::size_t>(tag)];
    shares[std::string(tag_name(tag))] = total == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(total);
  }
  return {{"intersection_size", total}, {"shares", std::move(shares)}};
}

void accumulate(std::array<std::size_t, 5>& counts, const FeatureVector& a, const FeatureVector& b) {
  for (FeatureTag tag : kAllTags) {
    const auto& x = feature_set(a, tag);
    const auto& y = feature_set(b, tag);
    counts[static_cast<std::size_t>(tag)] +=
        static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [&](const std::string& s) { return y.contains(s); }));
  }
}

int cmd_contrib(const Config& cfg, const std::vector<std::string>& paths, bool against_index) {
  const NoiseFilter filter = load_filter(cfg);
  json doc;
  if (!against_index) {
    if (paths.size() != 2) throw UsageError("contrib takes two binaries, or --against-index with queries");
    const FeatureVector a = load_query(paths[0], filter);
    const FeatureVector b = load_query(paths[1], filter);
    doc = to_json(contribution_factors(a, b));
    doc["similarity"] = bin2sim(a, b);
  } else {
    const IndexStore store = open_nonempty(cfg);
    const HeuristicSet heuristics(store.heuristics());
    std::vector<FeatureVector> fvs;
    for (const auto& p : paths) fvs.push_back(load_query(p, filter));
    const BatchResult batch = batch_identify(fvs, store, heuristics, cfg.threshold, worker_count(cfg));
    std::array<std::size_t, 5> counts{};
    json pairs = json::array();
    for (std::size_t i = 0; i < fvs.size(); ++i) {
      const auto& r = batch.results[i];
      if (r.status != MatchStatus::Identified || r.method == MatchMethod::Strings) continue;
      const auto& top = r.candidates.front();
      const KnownLibVersion* rec = store.find(top.library, top.version, top.arch);
      if (rec == nullptr) continue;
      accumulate(counts, fvs[i], rec->fv);
      json one = to_json(contribution_factors(fvs[i], rec->fv));
      one["path"] = paths[i];
      one["library"] = top.library;
      one["version"] = top.version;
      pairs.push_back(std::move(one));
    }
    doc = pooled_shares(counts);
    doc["pairs"] = std::move(pairs);
  }
  if (cfg.output_format == "csv") {
    std::string text = "feature,share\n";
    for (FeatureTag tag : kAllTags) {
      text += std::string(tag_name(tag)) + ',' + fixed(doc["shares"][std::string(tag_name(tag))].get<double>()) + '\n';
    }
    emit(cfg, text);
  } else if (cfg.output_format == "human") {
    std::string text = "intersection size: " + std::to_string(doc["intersection_size"].get<std::size_t>()) + '\n';
    for (FeatureTag tag : kAllTags) {
      text += std::string(tag_name(tag)) + ": " +
              fixed(100.0 * doc["shares"][std::string(tag_name(tag))].get<double>(), 2) + "%\n";
    }
    emit(cfg, text);
  } else {
    emit(cfg, dump_json(doc));
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Identify native library versions in Android apps and measure patch latency"};
  app.require_subcommand(1);
  app.fallthrough();

  Config cfg;
  app.add_option("--index", cfg.index_dir, "Index directory")->capture_default_str();
  app.add_option("--threshold", cfg.threshold, "Metadata match threshold in (0, 1]")->capture_default_str();
  app.add_option("--filter", cfg.filter_path, "Noise filter JSON (default: builtin)");
  app.add_option("--cvedb", cfg.cvedb_path, "CVE database JSON");
  app.add_option("--jobs", cfg.jobs, "Maximum worker threads")->check(CLI::PositiveNumber);
  app.add_option("--as-of", cfg.as_of, "Reference date YYYY-MM-DD (default: today)");
  app.add_option("--output-format", cfg.output_format, "json, csv or human")
      ->check(CLI::IsMember({"json", "csv", "human"}))
      ->capture_default_str();
  app.add_option("-o,--output", cfg.output, "Write the result here instead of stdout");

  std::vector<std::string> paths;
  std::string out_dir;

  auto* extract = app.add_subcommand("extract", "Write feature-vector JSON for ELF files and APKs");
  extract->add_option("paths", paths, "ELF or APK files")->required();
  extract->add_option("--out-dir", out_dir, "Output directory (default: .)");

  auto* index = app.add_subcommand("index", "Manage the ground-truth index");
  index->require_subcommand(1);
  std::string file, library, version, source = "local";
  auto* add = index->add_subcommand("add", "Add one labelled binary");
  add->add_option("file", file, "ELF file")->required();
  add->add_option("--library", library, "Library name")->required();
  add->add_option("--version", version, "Library version")->required();
  add->add_option("--source", source, "Provenance note")->capture_default_str();
  std::string gt_dir;
  auto* build = index->add_subcommand("build", "Add every binary under <dir>/<library>/<version>/");
  build->add_option("dir", gt_dir, "Ground-truth directory")->required();
  build->add_option("--source", source, "Provenance note")->capture_default_str();
  auto* derive = index->add_subcommand("derive-heuristics", "Learn version heuristics from indexed strings");

  auto* identify = app.add_subcommand("identify", "Identify library versions of binaries");
  identify->add_option("paths", paths, "ELF or feature-vector JSON files")->required();

  std::string report_dir;
  auto* scan = app.add_subcommand("scan", "Identify native libraries in APKs and flag CVEs");
  scan->add_option("apks", paths, "APK files")->required();
  scan->add_option("--report-dir", report_dir, "Also write one <apk>.scan.json per APK here");

  std::string timelines_dir;
  auto* study = app.add_subcommand("study", "Compute TTRP/TTAF over app timelines");
  study->add_option("--timelines", timelines_dir, "Directory of timeline or scan report JSON")->required();
  study->add_option("--out", out_dir, "Write study.json and CSV tables here");

  bool against_index = false;
  auto* contrib = app.add_subcommand("contrib", "Per-feature contribution to matches");
  contrib->add_option("paths", paths, "Two binaries, or queries with --against-index")->required();
  contrib->add_flag("--against-index", against_index, "Pool contributions of queries against their matches");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) {
    std::cerr << "--threshold must be in (0, 1], got " << cfg.threshold << '\n';
    return kExitUsage;
  }

  try {
    if (*extract) return cmd_extract(cfg, paths, out_dir);
    if (*add) return cmd_index_add(cfg, file, library, version, source);
    if (*build) return cmd_index_build(cfg, gt_dir, source);
    if (*derive) return cmd_index_derive(cfg);
    if (*identify) return cmd_identify(cfg, paths);
    if (*scan) return cmd_scan(cfg, paths, report_dir);
    if (*study) return cmd_study(cfg, timelines_dir, out_dir);
    if (*contrib) return cmd_contrib(cfg, paths, against_index);
  } catch (const UsageError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error("error", e);
    return kExitIo;
  }
  return kExitUsage;
}
