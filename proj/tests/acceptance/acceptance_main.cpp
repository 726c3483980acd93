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

// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "librarian/apk_scan.hpp"
#include "librarian/elf_reader.hpp"
#include "librarian/errors.hpp"
#include "librarian/feature_vector.hpp"
#include "librarian/heuristics.hpp"
#include "librarian/index.hpp"
#include "librarian/matcher.hpp"
#include "librarian/vuln.hpp"
#include "support/test_support.hpp"

using namespace librarian;
using librarian::testing::fixture;
using librarian::testing::kToyVersions;
using librarian::testing::TempDir;

namespace fs = std::filesystem;

namespace {

constexpr double kLawSuiteSeconds = 5.0;
constexpr int kLawSuiteCases = 20000;
constexpr double kCorpusAccuracy = 0.90;
constexpr double kCorpusSeconds = 120.0;
constexpr double kTableSeconds = 1.0;
constexpr double kMeanRelTolerance = 1e-9;
constexpr double kShareSumTolerance = 1e-12;
constexpr double kBigExtractionSeconds = 5.0;
constexpr double kBatchSeconds = 60.0;
constexpr std::size_t kBatchQueries = 100;
constexpr std::size_t kBatchRecords = 50;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      if (failures_.size() < 5) failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }

  Outcome outcome() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < notes_.size(); ++i) out << (i ? ", " : "") << notes_[i];
    for (const auto& f : failures_) out << (out.tellp() > 0 ? "; " : "") << "failed: " << f;
    return {pass_, out.str()};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

FeatureVector fv_of(const fs::path& p) {
  return build_feature_vector(parse_elf(read_file_bytes(p), p.filename().string()), NoiseFilter::builtin());
}

FeatureVector fv_from_mask(std::uint32_t mask) {
  FeatureVector fv;
  for (int k = 0; k < 20; ++k) {
    if (!(mask & (1u << k))) continue;
    const std::string name = "s" + std::to_string(k / 5);
    std::set<std::string>* sets[] = {&fv.exported_functions, &fv.imported_functions, &fv.exported_globals,
                                     &fv.imported_globals, &fv.dependencies};
    sets[k % 5]->insert(name);
  }
  return fv;
}

std::uint32_t random_mask(std::mt19937& rng, int max_size) {
  std::uniform_int_distribution<int> size(0, max_size);
  std::uniform_int_distribution<int> elem(0, 19);
  std::uint32_t mask = 0;
  for (int n = size(rng); n > 0; --n) mask |= 1u << elem(rng);
  return mask;
}

FeatureVector exported(int count) {
  FeatureVector fv;
  for (int i = 0; i < count; ++i) fv.exported_functions.insert("f" + std::to_string(i));
  return fv;
}

KnownLibVersion synthetic_record(FeatureVector fv, const std::string& sha) {
  KnownLibVersion r;
  r.library = "lib";
  r.version = "1";
  r.arch = Arch::X86_64;
  fv.binary.arch = Arch::X86_64;
  fv.binary.file_sha256 = sha;
  r.fv = std::move(fv);
  r.sha256 = sha;
  r.source = "synthetic";
  return r;
}

void add_file(IndexStore& store, const fs::path& p, const std::string& lib, const std::string& ver) {
  store.add(read_file_bytes(p), p.filename().string(), lib, ver, "fixture", NoiseFilter::builtin());
}

std::map<std::string, Bytes> tree_bytes(const fs::path& root) {
  std::map<std::string, Bytes> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.lock") {
      out[fs::relative(e.path(), root).string()] = read_file_bytes(e.path());
    }
  }
  return out;
}

Outcome c1_jaccard_laws() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  FeatureVector abc, bcd;
  abc.exported_functions = {"a", "b", "c"};
  bcd.exported_functions = {"b", "c", "d"};
  c.expect(bin2sim(abc, bcd) == 0.5, "{a,b,c}/{b,c,d} == 0.5");
  c.expect(bin2sim(abc, abc) == 1.0, "identity == 1");
  c.expect(bin2sim(abc, exported(0)) == 0.0, "empty == 0");
  FeatureVector xyz;
  xyz.exported_functions = {"x", "y", "z"};
  c.expect(bin2sim(abc, xyz) == 0.0, "disjoint == 0");

  std::mt19937 rng(1);
  int cases = 0;
  for (; cases < kLawSuiteCases; ++cases) {
    const std::uint32_t ma = random_mask(rng, 8);
    const std::uint32_t mb = random_mask(rng, 8);
    const auto a = fv_from_mask(ma);
    const auto b = fv_from_mask(mb);
    const int uni = std::popcount(ma | mb);
    const double oracle = uni == 0 ? 0.0 : static_cast<double>(std::popcount(ma & mb)) / uni;
    const double s = bin2sim(a, b);
    c.expect(s == oracle, "oracle equality");
    c.expect(s == bin2sim(b, a), "symmetry");
    c.expect(s >= 0.0 && s <= 1.0, "bounds");
    if (ma != 0) c.expect(bin2sim(a, a) == 1.0, "identity");
    if ((ma & mb) == 0) c.expect(s == 0.0, "disjoint");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < kLawSuiteSeconds, "runtime < " + fmt(kLawSuiteSeconds, 0) + "s");
  c.note(std::to_string(cases) + " random cases");
  c.note(fmt(secs) + "s");
  return c.outcome();
}

Outcome c2_threshold() {
  Check c;
  const HeuristicSet none(std::vector<VersionHeuristic>{});
  IndexStore s20;
  s20.add_record(synthetic_record(exported(20), std::string(64, 'a')));
  const FeatureVector q17 = exported(17);
  const double at = bin2sim(q17, s20.candidates()[0]->fv);
  c.expect(at == 0.85, "constructed score == 0.85");
  const MatchResult r85 = identify(q17, s20, none);
  c.expect(r85.status != MatchStatus::Identified, "0.85 is not a match");

  IndexStore s50;
  s50.add_record(synthetic_record(exported(50), std::string(64, 'b')));
  const FeatureVector q43 = exported(43);
  const double above = bin2sim(q43, s50.candidates()[0]->fv);
  c.expect(above == 0.86, "constructed score == 0.86");
  const MatchResult r86 = identify(q43, s50, none);
  c.expect(r86.status == MatchStatus::Identified && r86.method == MatchMethod::Metadata, "0.86 is a metadata match");
  c.note("0.85 -> " + std::string(status_name(r85.status)));
  c.note("0.86 -> " + std::string(status_name(r86.status)));
  return c.outcome();
}

Outcome c3_heuristics() {
  Check c;
  const HeuristicSet set = HeuristicSet::builtin();
  c.expect(set.heuristics().size() == 15, "15 shipped heuristics");
  struct Case {
    std::string library, positive, version, negative;
  };
  const std::vector<Case> cases = {
      {"Jpeg-turbo", "Jpeg-turbo version 1.5.2", "1.5.2", "Jpeg-turbo version 2.0.0"},
      {"FFmpeg", "FFmpeg version 3.1.11", "3.1.11", "ffmpeg version 3.1"},
      {"Firebase", "Firebase C++ 5.4.3", "5.4.3", "Firebase Unity 5.4.3"},
      {"Libavcodec", "Lavc57.64.101", "57.64.101", "Lavc46.1"},
      {"Libavfilter", "Lavf57.56.100", "57.56.100", "Lavf46.2"},
      {"Libpng", "Libpng version 1.6.34 - September 29, 2017", "1.6.34", "Libpng version 2.0"},
      {"Libglog", "glog-0.3.5", "0.3.5", "glog version"},
      {"Libvpx", "WebM Project VP8 Encoder v1.6.1", "1.6.1", "WebM Project"},
      {"OpenCV", "General configuration for OpenCV 2.4.11", "2.4.11", "opencv_core"},
      {"OpenSSL", "OpenSSL 1.0.2k  26 Jan 2017", "1.0.2k", "OpenSSL 3.0.2 15 Mar 2022"},
      {"Speex", "speex-1.2rc1", "1.2rc1", "speexdsp"},
      {"SQLite3", "3.20.1", "3.20.1", "13.20.1"},
      {"Unity3D", "2017.4.10f1", "2017.4.10f1", "2017.4"},
      {"Vorbis", "Xiph.Org Vorbis 1.3.5", "1.3.5", "Xiph.Org libVorbis I 20150105"},
      {"XML2", "GITv2.9.4", "2.9.4", "GITv1.2.3"},
  };
  std::set<std::string> covered;
  for (const auto& k : cases) {
    std::optional<std::string> pos, neg;
    for (const auto& h : set.scan_string(k.positive)) {
      if (h.library == k.library) {
        pos = h.version;
        break;
      }
    }
    for (const auto& h : set.scan_string(k.negative)) {
      if (h.library == k.library) neg = h.version;
    }
    c.expect(pos == k.version, k.library + " accepts \"" + k.positive + "\"");
    c.expect(!neg.has_value(), k.library + " rejects \"" + k.negative + "\"");
    covered.insert(k.library);
  }
  c.expect(covered.size() == 15, "all 15 heuristics covered");
  c.note(std::to_string(covered.size()) + " heuristics, " + std::to_string(cases.size()) + " positive/negative pairs");
  return c.outcome();
}

Outcome c4_desk_corpus() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  TempDir tmp;
  const fs::path out = tmp.path() / "fixtures";
  const std::string cmd = std::string("\"") + LIBRARIAN_PYTHON + "\" \"" + LIBRARIAN_FIXTURE_SCRIPT + "\" \"" +
                          out.string() + "\" --clang \"" + LIBRARIAN_CLANG + "\" > /dev/null";
  const int rc = std::system(cmd.c_str());
  const double build_secs = seconds_since(t0);
  c.expect(rc == 0, "fixture build");
  if (rc != 0) return c.outcome();

  const std::vector<std::string> arches = {"x86_64", "arm64", "x86", "arm"};
  std::map<std::pair<std::string, std::string>, FeatureVector> fvs;
  for (const auto& a : arches) {
    for (const auto& v : kToyVersions) fvs[{a, v}] = fv_of(out / "toy" / a / ("libtoy-" + v + ".so"));
  }
  const HeuristicSet heuristics = HeuristicSet::builtin();
  std::size_t correct = 0, total = 0;
  double worst = 1.0;
  for (const auto& held : arches) {
    IndexStore store;
    for (const auto& a : arches) {
      if (a == held) continue;
      for (const auto& v : kToyVersions) add_file(store, out / "toy" / a / ("libtoy-" + v + ".so"), "libtoy", v);
    }
    const std::string ref_arch = held == "x86_64" ? "arm64" : "x86_64";
    std::size_t ok = 0;
    for (const auto& v : kToyVersions) {
      std::set<std::string> tie_class;
      for (const auto& w : kToyVersions) {
        if (bin2sim(fvs[{ref_arch, v}], fvs[{ref_arch, w}]) == 1.0) tie_class.insert(w);
      }
      const MatchResult r = identify(fvs[{held, v}], store, heuristics);
      std::set<std::string> answered;
      for (const auto& cand : r.candidates) answered.insert(cand.version);
      bool hit = false;
      if (r.status == MatchStatus::Identified) hit = tie_class.count(r.candidates.front().version) > 0;
      if (r.status == MatchStatus::Tied) hit = answered == tie_class;
      ok += hit ? 1 : 0;
    }
    correct += ok;
    total += kToyVersions.size();
    worst = std::min(worst, static_cast<double>(ok) / static_cast<double>(kToyVersions.size()));
  }
  const double secs = seconds_since(t0);
  const double accuracy = static_cast<double>(correct) / static_cast<double>(total);
  c.expect(kToyVersions.size() >= 6, ">= 6 versions");
  c.expect(worst >= kCorpusAccuracy, "held-out accuracy >= 90% for every architecture");
  c.expect(secs < kCorpusSeconds, "runtime < 120s including compilation");
  c.note(std::to_string(kToyVersions.size()) + " versions x 4 arches");
  c.note("accuracy " + std::to_string(correct) + "/" + std::to_string(total) + " = " + fmt(accuracy * 100, 2) + "%");
  c.note("worst held-out arch " + fmt(worst * 100, 2) + "%");
  c.note("compile " + fmt(build_secs, 1) + "s, total " + fmt(secs, 1) + "s");
  return c.outcome();
}

Outcome c5_hash_tiebreak() {
  Check c;
  IndexStore store;
  add_file(store, fixture("twin/libtwin-4.0.so"), "libtwin", "4.0");
  add_file(store, fixture("twin/libtwin-4.1.so"), "libtwin", "4.1");
  const auto recs = store.candidates();
  c.expect(recs.size() == 2 && recs[0]->fv.exported_functions == recs[1]->fv.exported_functions &&
               bin2sim(recs[0]->fv, recs[1]->fv) == 1.0,
           "indexed twins share feature vectors");
  c.expect(recs.size() == 2 && recs[0]->sha256 != recs[1]->sha256, "twins differ in bytes");
  const HeuristicSet h = HeuristicSet::builtin();
  const MatchResult exact = identify(fv_of(fixture("twin/query-identical-4.0.so")), store, h);
  c.expect(exact.status == MatchStatus::Identified && exact.method == MatchMethod::Hash &&
               exact.candidates.front().version == "4.0",
           "bit-identical query identified by hash");
  const MatchResult neither = identify(fv_of(fixture("twin/libtwin-4.2.so")), store, h);
  std::set<std::string> versions;
  for (const auto& cand : neither.candidates) versions.insert(cand.version);
  c.expect(neither.status == MatchStatus::Tied && versions == std::set<std::string>{"4.0", "4.1"},
           "unrelated bytes tied with both");
  c.note("identical -> " + std::string(status_name(exact.status)) + "/" +
         (exact.method ? std::string(method_name(*exact.method)) : "-"));
  c.note("neither -> " + std::string(status_name(neither.status)) + " (" + std::to_string(neither.candidates.size()) +
         " candidates)");
  return c.outcome();
}

Outcome c6_string_fallback() {
  Check c;
  IndexStore store;
  for (const auto& v : kToyVersions) add_file(store, fixture("toy/x86_64/libtoy-" + v + ".so"), "libtoy", v);
  add_file(store, fixture("twin/libtwin-4.0.so"), "libtwin", "4.0");
  const FeatureVector fv = fv_of(fixture("opencv/libopencv_core.so"));
  c.expect(fv.exported_functions == std::set<std::string>{"cv_dispatch"}, "single exported dispatch function");
  double best = 0.0;
  for (const auto* r : store.candidates()) best = std::max(best, bin2sim(fv, r->fv));
  c.expect(best <= 0.85, "metadata score <= 0.85");
  const MatchResult r = identify(fv, store, HeuristicSet::builtin());
  c.expect(r.status == MatchStatus::Identified && r.method == MatchMethod::Strings, "identified via strings");
  c.expect(!r.candidates.empty() && r.candidates.front().library == "OpenCV" &&
               r.candidates.front().version == "2.4.11",
           "OpenCV 2.4.11");
  c.note("best metadata score " + fmt(best));
  if (!r.candidates.empty()) c.note("-> " + r.candidates.front().library + " " + r.candidates.front().version);
  return c.outcome();
}

Outcome c7_ttrp_ttaf() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<long long> ttrp_expected = {12, 12, 87, 91, 12, 330, 4, 41, 12, 41, 12, 87, 41, 87, 2};
  const std::vector<long long> ttaf_expected = {1956, 1704, 1429, 1323, 1086, 1019, 1001, 905,
                                                902,  830,  670,  665,  662,  457,  267};
  const auto table = librarian::testing::load_app_fix_table();
  c.expect(table.size() == 15, "15 table rows");
  const auto study = librarian::testing::build_app_fix_study(table);
  std::vector<LibrarySpan> spans;
  for (const auto& t : study.timelines) {
    const auto s = compute_spans(t);
    spans.insert(spans.end(), s.begin(), s.end());
  }
  const StudyReport report = aggregate(spans, study.cvedb, parse_date("2021-01-01").value());
  std::size_t exact = 0;
  for (std::size_t i = 0; i < table.size() && i < ttaf_expected.size(); ++i) {
    const auto& row = table[i];
    auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const SpanCveRow& r) {
      return r.app_id == row.app && r.library == row.library && r.lib_version == row.version;
    });
    const bool ok = it != report.rows.end() && it->ttrp_days == ttrp_expected[i] && it->ttaf_days &&
                    *it->ttaf_days == ttaf_expected[i];
    c.expect(ok, row.app + " TTRP/TTAF");
    exact += ok ? 1 : 0;
  }
  long long sum = 0;
  for (long long v : ttaf_expected) sum += v;
  const double hand_mean = static_cast<double>(sum) / 15.0;
  const double rel = std::abs(report.ttaf.mean - hand_mean) / hand_mean;
  c.expect(report.ttaf.n == 15 && rel <= kMeanRelTolerance, "TTAF mean equals hand-computed mean");
  const double secs = seconds_since(t0);
  c.expect(secs < kTableSeconds, "runtime < 1s");
  c.note(std::to_string(exact) + "/15 rows exact");
  c.note("mean " + fmt(report.ttaf.mean, 6) + " vs " + std::to_string(sum) + "/15");
  c.note(fmt(secs, 4) + "s");
  return c.outcome();
}

Outcome c8_contribution() {
  Check c;
  FeatureVector a, b;
  a.exported_functions = {"a", "b", "x"};
  a.dependencies = {"c"};
  a.imported_functions = {"d"};
  b.exported_functions = {"a", "b", "y"};
  b.dependencies = {"c", "z"};
  b.imported_functions = {"d"};
  const ContributionReport ex = contribution_factors(a, b);
  c.expect(ex.intersection_size == 4 && ex.share(FeatureTag::ExpFunc) == 0.5 && ex.share(FeatureTag::Dep) == 0.25 &&
               ex.share(FeatureTag::ImpFunc) == 0.25,
           "(0.5, 0.25, 0.25) example");
  std::mt19937 rng(8);
  double worst = 0.0;
  int non_empty = 0;
  for (int i = 0; i < 5000; ++i) {
    const auto r = contribution_factors(fv_from_mask(random_mask(rng, 12)), fv_from_mask(random_mask(rng, 12)));
    if (r.intersection_size == 0) continue;
    double sum = 0.0;
    for (double s : r.shares) sum += s;
    worst = std::max(worst, std::abs(sum - 1.0));
    ++non_empty;
  }
  for (const auto& f : {"toy/x86_64/libtoy-1.0.so", "toy/arm/libtoy-2.0.so", "answer/libanswer.so"}) {
    const auto fv = fv_of(fixture(f));
    const auto r = contribution_factors(fv, fv_of(fixture("toy/arm64/libtoy-2.1.so")));
    if (r.intersection_size == 0) continue;
    double sum = 0.0;
    for (double s : r.shares) sum += s;
    worst = std::max(worst, std::abs(sum - 1.0));
    ++non_empty;
  }
  c.expect(worst <= kShareSumTolerance, "shares sum to 1 within 1e-12");
  c.note(std::to_string(non_empty) + " non-empty intersections");
  c.note("max |sum-1| " + fmt(worst, 17));
  return c.outcome();
}

Outcome c9_round_trips() {
  Check c;
  std::size_t files = 0;
  TempDir tmp;
  for (const auto& a : {"x86_64", "arm64", "x86", "arm"}) {
    for (const auto& v : kToyVersions) {
      const auto fv = fv_of(fixture(std::string("toy/") + a + "/libtoy-" + v + ".so"));
      const std::string j1 = dump_json(serialize_fv(fv));
      const FeatureVector back = parse_fv(nlohmann::json::parse(j1));
      c.expect(back == fv, "feature vector JSON lossless");
      const FeatureVector again = fv_of(fixture(std::string("toy/") + a + "/libtoy-" + v + ".so"));
      c.expect(dump_json(serialize_fv(again)) == j1 && dump_json(serialize_fv(back)) == j1,
               "feature vector JSON byte-deterministic");
      const fs::path p = tmp.path() / "fv.json";
      write_fv_file(p, fv);
      c.expect(read_fv_file(p) == fv, "feature vector file lossless");
      ++files;
    }
  }
  auto build = [&](const fs::path& root) {
    IndexStore store(root);
    for (const auto& a : {"x86_64", "arm64"}) {
      for (const auto& v : kToyVersions) add_file(store, fixture(std::string("toy/") + a + "/libtoy-" + v + ".so"), "libtoy", v);
    }
    add_file(store, fixture("opencv/libopencv_core.so"), "OpenCV", "2.4.11");
    store.save();
    return store;
  };
  const IndexStore first = build(tmp.path() / "run1");
  build(tmp.path() / "run2");
  c.expect(tree_bytes(tmp.path() / "run1") == tree_bytes(tmp.path() / "run2"), "two index builds byte-identical");
  const IndexStore loaded = IndexStore::open(tmp.path() / "run1");
  bool same = loaded.size() == first.size() && loaded.heuristics() == first.heuristics();
  const auto la = loaded.candidates();
  const auto fa = first.candidates();
  for (std::size_t i = 0; same && i < la.size(); ++i) same = *la[i] == *fa[i];
  c.expect(same, "index load lossless");
  fs::copy(tmp.path() / "run1", tmp.path() / "run3", fs::copy_options::recursive);
  IndexStore copy = IndexStore::open(tmp.path() / "run3");
  copy.save();
  c.expect(tree_bytes(tmp.path() / "run3") == tree_bytes(tmp.path() / "run1"), "load/save byte-stable");
  c.note(std::to_string(files) + " feature vectors");
  c.note(std::to_string(first.size()) + " index records");
  return c.outcome();
}

Outcome c10_apk_pipeline() {
  Check c;
  IndexStore store;
  for (const auto& v : kToyVersions) add_file(store, fixture("toy/x86_64/libtoy-" + v + ".so"), "libtoy", v);
  const auto cvedb = load_cvedb_file(librarian::testing::data_dir() / "fixture_cvedb.json");
  const ApkIdentification id = identify_apk(fixture("apk/com.example.toyapp-3.apk"), store, HeuristicSet::builtin(),
                                            NoiseFilter::builtin());
  const nlohmann::json report = scan_report_json(id, cvedb);
  const auto& entries = report["entries"];
  c.expect(entries.size() == 3, "3 results");
  std::vector<std::string> abis;
  std::size_t flags = 0, errors = 0;
  for (const auto& e : entries) {
    abis.push_back(e["abi"].get<std::string>());
    flags += e["cves"].size();
    if (!e["error"].is_null()) ++errors;
  }
  c.expect(abis == std::vector<std::string>{"arm64-v8a", "armeabi-v7a", "x86"}, "ABI tags");
  c.expect(flags == 1 && entries.size() == 3 && entries[0]["cves"][0] == "FIXTURE-0001", "one CVE flag");
  c.expect(errors == 1 && entries.size() == 3 && entries[2]["error"]["kind"] == "MalformedElf",
           "truncated entry reported");
  std::string joined;
  for (const auto& a : abis) joined += (joined.empty() ? "" : ",") + a;
  c.note(std::to_string(entries.size()) + " entries [" + joined + "]");
  c.note(std::to_string(flags) + " CVE flag, " + std::to_string(errors) + " entry error");
  return c.outcome();
}

Outcome c11_throughput() {
  Check c;
  const fs::path big = fixture("big/libbig.so");
  const auto t0 = std::chrono::steady_clock::now();
  const FeatureVector big_fv = fv_of(big);
  const double extract_secs = seconds_since(t0);
  c.expect(fs::file_size(big) >= 4'500'000, "big fixture is ~5 MB");
  c.expect(big_fv.metadata_size() > 0, "big fixture has features");
  c.expect(extract_secs < kBigExtractionSeconds, "extraction < 5s");

  const auto t1 = std::chrono::steady_clock::now();
  IndexStore store;
  std::vector<FeatureVector> queries;
  for (const auto& a : {"x86_64", "arm64", "x86", "arm"}) {
    const fs::path dir = fixture("bulk") / a;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    const bool indexed = std::string(a) == "x86_64" || std::string(a) == "arm64";
    for (const auto& f : files) {
      const std::string lib = f.stem().string();
      if (indexed) add_file(store, f, lib, "1.0");
      queries.push_back(fv_of(f));
    }
  }
  const BatchResult batch = batch_identify(queries, store, HeuristicSet::builtin());
  const double batch_secs = seconds_since(t1);
  std::size_t identified = batch.tally.statuses.count(MatchStatus::Identified)
                               ? batch.tally.statuses.at(MatchStatus::Identified)
                               : 0;
  c.expect(store.size() == kBatchRecords, "50-record index");
  c.expect(queries.size() == kBatchQueries && batch.results.size() == kBatchQueries, "100 queries");
  c.expect(batch_secs < kBatchSeconds, "batch < 60s");
  c.note(fmt(fs::file_size(big) / 1e6, 1) + " MB extracted in " + fmt(extract_secs) + "s");
  c.note(std::to_string(queries.size()) + " queries x " + std::to_string(store.size()) + " records in " +
         fmt(batch_secs) + "s (" + std::to_string(identified) + " identified)");
  return c.outcome();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1 similarity laws", c1_jaccard_laws},
      {"C2 threshold semantics", c2_threshold},
      {"C3 version heuristics", c3_heuristics},
      {"C4 desk-scale identification", c4_desk_corpus},
      {"C5 hash tie-break", c5_hash_tiebreak},
      {"C6 string fallback", c6_string_fallback},
      {"C7 TTRP/TTAF arithmetic", c7_ttrp_ttaf},
      {"C8 contribution factors", c8_contribution},
      {"C9 round-trips", c9_round_trips},
      {"C10 APK pipeline", c10_apk_pipeline},
      {"C11 throughput", c11_throughput},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
