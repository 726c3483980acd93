#!/usr/bin/env python3
#
# Copyright 2026 The Librarian Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
#
# SPDX-License-Identifier: Apache-2.0

"""End-to-end tests of the librarian command-line tool."""

import argparse
import csv
import datetime
import io
import json
import os
import shutil
import subprocess
import sys
import tempfile
import unittest

ARGS = None


def run(*argv, check=None):
    proc = subprocess.run([ARGS.cli, *argv], capture_output=True, text=True)
    if check is not None and proc.returncode != check:
        raise AssertionError("%s exited %d, expected %d\nstdout:\n%s\nstderr:\n%s"
                             % (" ".join(argv), proc.returncode, check, proc.stdout, proc.stderr))
    return proc


def fx(*parts):
    return os.path.join(ARGS.fixtures, *parts)


class Base(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp(prefix="librarian-cli-")
        self.index = os.path.join(self.tmp, "index")

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def build_index(self, arch="x86_64"):
        run("--index", self.index, "index", "build", fx("groundtruth", arch), check=0)


class UsageTests(Base):
    def test_no_subcommand(self):
        self.assertEqual(run().returncode, 1)

    def test_unknown_subcommand(self):
        self.assertEqual(run("frobnicate").returncode, 1)

    def test_threshold_out_of_range(self):
        for value in ("1.01", "0", "-0.5"):
            proc = run("--threshold", value, "identify", fx("answer", "libanswer.so"))
            self.assertEqual(proc.returncode, 1, value)
            self.assertIn("--threshold must be in (0, 1]", proc.stderr)

    def test_study_requires_cvedb(self):
        self.assertEqual(run("study", "--timelines", self.tmp).returncode, 1)

    def test_empty_index(self):
        proc = run("--index", self.index, "identify", fx("answer", "libanswer.so"))
        self.assertEqual(proc.returncode, 2)
        self.assertIn("EmptyIndex", proc.stderr)


class ExtractTests(Base):
    def test_elf(self):
        out = os.path.join(self.tmp, "fv")
        run("extract", fx("answer", "libanswer.so"), "--out-dir", out, check=0)
        with open(os.path.join(out, "libanswer.so.fv.json")) as f:
            doc = json.load(f)
        self.assertEqual(doc["features"]["exported_functions"], ["answer"])
        self.assertEqual(doc["features"]["imported_functions"], ["printf"])
        self.assertEqual(doc["binary"]["arch"], "x86_64")

    def test_extract_is_deterministic(self):
        a, b = os.path.join(self.tmp, "a"), os.path.join(self.tmp, "b")
        run("extract", fx("toy", "arm", "libtoy-2.0.so"), "--out-dir", a, check=0)
        run("extract", fx("toy", "arm", "libtoy-2.0.so"), "--out-dir", b, check=0)
        with open(os.path.join(a, "libtoy-2.0.so.fv.json"), "rb") as fa, \
                open(os.path.join(b, "libtoy-2.0.so.fv.json"), "rb") as fb:
            self.assertEqual(fa.read(), fb.read())

    def test_malformed_file(self):
        proc = run("extract", fx("broken", "libtruncated.so"), "--out-dir", self.tmp)
        self.assertEqual(proc.returncode, 2)
        self.assertIn("MalformedElf", proc.stderr)

    def test_apk_keeps_going_after_a_bad_entry(self):
        out = os.path.join(self.tmp, "apk")
        proc = run("extract", fx("apk", "com.example.toyapp-3.apk"), "--out-dir", out)
        self.assertEqual(proc.returncode, 2)
        base = os.path.join(out, "com.example.toyapp-3.apk")
        self.assertTrue(os.path.exists(os.path.join(base, "arm64-v8a", "libtoy.so.fv.json")))
        self.assertTrue(os.path.exists(os.path.join(base, "armeabi-v7a", "libtoy.so.fv.json")))
        self.assertFalse(os.path.exists(os.path.join(base, "x86", "libbroken.so.fv.json")))


class IdentifyTests(Base):
    def test_index_build(self):
        self.build_index()
        with open(os.path.join(self.index, "manifest.json")) as f:
            manifest = json.load(f)
        self.assertEqual(len(manifest["records"]), 7)

    def test_status_exit_codes(self):
        self.build_index()
        identified = run("--index", self.index, "identify", fx("toy", "arm64", "libtoy-2.0.so"), check=0)
        doc = json.loads(identified.stdout)
        self.assertEqual(doc["status"], "Identified")
        self.assertEqual(doc["candidates"][0]["version"], "2.0")
        tied = run("--index", self.index, "identify", fx("toy", "arm64", "libtoy-1.1.so"), check=3)
        self.assertEqual(json.loads(tied.stdout)["status"], "Tied")
        unknown = run("--index", self.index, "identify", fx("answer", "libanswer.so"), check=4)
        self.assertEqual(json.loads(unknown.stdout)["status"], "Unknown")

    def test_feature_vector_input_matches_elf_input(self):
        self.build_index()
        out = os.path.join(self.tmp, "fv")
        run("extract", fx("toy", "x86", "libtoy-3.0.so"), "--out-dir", out, check=0)
        from_elf = run("--index", self.index, "identify", fx("toy", "x86", "libtoy-3.0.so"), check=0)
        from_fv = run("--index", self.index, "identify", os.path.join(out, "libtoy-3.0.so.fv.json"), check=0)
        self.assertEqual(json.loads(from_elf.stdout), json.loads(from_fv.stdout))

    def test_batch_tally_and_worst_exit(self):
        self.build_index()
        proc = run("--index", self.index, "--jobs", "3", "identify", fx("toy", "arm", "libtoy-1.0.so"),
                   fx("toy", "arm", "libtoy-1.2.so"), fx("opencv", "libopencv_core.so"), check=3)
        doc = json.loads(proc.stdout)
        self.assertEqual([r["result"]["status"] for r in doc["results"]], ["Identified", "Tied", "Identified"])
        self.assertEqual(doc["results"][2]["result"]["method"], "strings")
        self.assertEqual(doc["results"][0]["path"], fx("toy", "arm", "libtoy-1.0.so"))
        self.assertEqual(doc["tally"]["total"], 3)

    def test_threshold_one_still_matches_identical_metadata(self):
        self.build_index()
        run("--index", self.index, "--threshold", "1", "identify", fx("toy", "arm", "libtoy-2.1.so"), check=3)


class ScanTests(Base):
    def test_scan_flags_exactly_one_vulnerable_library(self):
        self.build_index()
        reports = os.path.join(self.tmp, "reports")
        proc = run("--index", self.index, "--cvedb", os.path.join(ARGS.data, "fixture_cvedb.json"), "scan",
                   fx("apk", "com.example.toyapp-3.apk"), fx("apk", "com.example.pair-12.apk"),
                   "--report-dir", reports, check=0)
        doc = json.loads(proc.stdout)
        flagged = set()
        for report in doc["reports"]:
            for entry in report["entries"]:
                if entry["match"] is None:
                    continue
                for cve in entry["cves"]:
                    flagged.add((report["app_id"], entry["match"]["candidates"][0]["library"], cve))
        self.assertEqual(flagged, {("com.example.toyapp", "libtoy", "FIXTURE-0001")})
        self.assertEqual(sorted(os.listdir(reports)),
                         ["com.example.pair-12.apk.scan.json", "com.example.toyapp-3.apk.scan.json"])
        toy = doc["reports"][0]
        self.assertEqual([e["abi"] for e in toy["entries"]], ["arm64-v8a", "armeabi-v7a", "x86"])
        self.assertEqual(toy["entries"][2]["error"]["kind"], "MalformedElf")

    def test_not_a_zip(self):
        self.build_index()
        proc = run("--index", self.index, "scan", fx("broken", "not_elf.txt"))
        self.assertEqual(proc.returncode, 2)
        self.assertIn("NotAZip", proc.stdout + proc.stderr)


def table_rows():
    with open(os.path.join(ARGS.data, "app_fix_table.json")) as f:
        return json.load(f)["rows"]


def day(s):
    return datetime.date.fromisoformat(s)


def write_study_inputs(root):
    """CVE database and one two-version timeline per published table row."""
    cves = {}
    timelines = os.path.join(root, "timelines")
    os.makedirs(timelines)
    for i, row in enumerate(table_rows()):
        disclosure = day(row["disclosure_date"])
        patch_release = disclosure + datetime.timedelta(days=row["ttrp_days"])
        cve = cves.setdefault(row["cve_id"], {
            "cve_id": row["cve_id"], "library": row["library"], "affected_versions": [],
            "disclosure_date": disclosure.isoformat(), "patch_version": row["patch_version"],
            "patch_release_date": patch_release.isoformat(), "severity": "unrated", "description": "table row"})
        if row["version"] not in cve["affected_versions"]:
            cve["affected_versions"].append(row["version"])
        fix = patch_release + datetime.timedelta(days=row["ttaf_days"])
        timeline = {"app_id": row["app"], "versions": [
            {"version_code": 1, "release_date": (disclosure - datetime.timedelta(days=30)).isoformat(),
             "identified_libs": [{"library": row["library"], "version": row["version"]}]},
            {"version_code": 2, "release_date": fix.isoformat(),
             "identified_libs": [{"library": row["library"], "version": row["patch_version"]}]}]}
        with open(os.path.join(timelines, "%02d.json" % i), "w") as f:
            json.dump(timeline, f)
    cvedb = os.path.join(root, "cvedb.json")
    with open(cvedb, "w") as f:
        json.dump(list(cves.values()), f)
    return cvedb, timelines


class StudyTests(Base):
    def study(self, *extra, check=0):
        root = tempfile.mkdtemp(dir=self.tmp)
        cvedb, timelines = write_study_inputs(root)
        return run("--cvedb", cvedb, "--as-of", "2021-01-01", *extra, "study", "--timelines", timelines,
                   check=check)

    def test_csv_rows_reproduce_table(self):
        proc = self.study("--output-format", "csv")
        rows = list(csv.DictReader(io.StringIO(proc.stdout)))
        self.assertEqual(len(rows), 15)
        got = {(r["app_id"], r["library"], r["lib_version"]): (int(r["ttrp_days"]), int(r["ttaf_days"]))
               for r in rows}
        for row in table_rows():
            self.assertEqual(got[(row["app"], row["library"], row["version"])],
                             (row["ttrp_days"], row["ttaf_days"]))

    def test_json_summary_and_csv_agree(self):
        doc = json.loads(self.study().stdout)
        expected = sum(r["ttaf_days"] for r in table_rows()) / 15.0
        self.assertEqual(doc["summary"]["ttaf"]["n"], 15)
        self.assertAlmostEqual(doc["summary"]["ttaf"]["mean"], expected, delta=expected * 1e-9)
        rows = list(csv.DictReader(io.StringIO(self.study("--output-format", "csv").stdout)))
        by_key = {(r["app_id"], r["cve_id"]): int(r["ttaf_days"]) for r in rows}
        self.assertEqual(by_key, {(r["app_id"], r["cve_id"]): r["ttaf_days"] for r in doc["rows"]})

    def test_output_directory_is_reproducible(self):
        a, b = os.path.join(self.tmp, "a"), os.path.join(self.tmp, "b")
        cvedb, timelines = write_study_inputs(os.path.join(self.tmp, "in"))
        for out in (a, b):
            run("--cvedb", cvedb, "--as-of", "2021-01-01", "study", "--timelines", timelines, "--out", out, check=0)
        names = sorted(os.listdir(a))
        self.assertEqual(names, ["per_app.csv", "per_library.csv", "rows.csv", "study.json", "summary.csv"])
        for name in names:
            with open(os.path.join(a, name), "rb") as fa, open(os.path.join(b, name), "rb") as fb:
                self.assertEqual(fa.read(), fb.read(), name)

    def test_study_over_scan_reports(self):
        self.build_index()
        reports = os.path.join(self.tmp, "reports")
        cvedb = os.path.join(ARGS.data, "fixture_cvedb.json")
        run("--index", self.index, "--cvedb", cvedb, "scan", fx("apk", "com.example.toyapp-3.apk"),
            "--report-dir", reports, check=0)
        proc = run("--cvedb", cvedb, "--as-of", "2020-06-01", "study", "--timelines", reports, check=0)
        doc = json.loads(proc.stdout)
        self.assertEqual(len(doc["rows"]), 1)
        row = doc["rows"][0]
        self.assertEqual((row["app_id"], row["lib_version"], row["cve_id"]),
                         ("com.example.toyapp", "1.0", "FIXTURE-0001"))
        self.assertIsNone(row["ttaf_days"])
        self.assertEqual(doc["summary"]["apps_still_vulnerable"], 1)


class ContribTests(Base):
    def test_pair(self):
        proc = run("contrib", fx("toy", "x86_64", "libtoy-2.0.so"), fx("toy", "arm", "libtoy-2.0.so"), check=0)
        doc = json.loads(proc.stdout)
        self.assertAlmostEqual(sum(doc["shares"].values()), 1.0, delta=1e-12)


def main():
    global ARGS
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--fixtures", required=True)
    parser.add_argument("--data", required=True)
    ARGS, rest = parser.parse_known_args()
    unittest.main(argv=[sys.argv[0], *rest], verbosity=2)


if __name__ == "__main__":
    main()
