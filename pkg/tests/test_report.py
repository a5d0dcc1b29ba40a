# Licensed to the Apache Software Foundation (ASF) under one or more
# contributor license agreements.  See the NOTICE file distributed with
# this work for additional information regarding copyright ownership.
# The ASF licenses this file to You under the Apache License, Version 2.0
# (the "License"); you may not use this file except in compliance with
# the License.  You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import csv
import io
import tempfile
import unittest
from pathlib import Path

from pyquermass.exceptions import ConfigError
from pyquermass.report import (
    PointwiseReport,
    PointwiseRow,
    ProfileReport,
    ProfileRow,
    VerificationReport,
    VerifyRow,
    compare,
    ensure_writable,
)


def verify_row(scenario="euclid_shell(a=0.5,b=1,n=3)", r=0, passed=True):
    return VerifyRow(
        scenario=scenario,
        r=r,
        passed=passed,
        lhs=9.42477796076938,
        rhs=9.424777960769381,
        lhs_exact=9.42477796076938,
        abs_error=1e-15,
        rel_error=1e-16,
        grid=[8, 16],
        t_nodes=8,
        convergence_order=None,
    )


class TestCompare(unittest.TestCase):
    def test_relative(self):
        abs_error, rel_error, passed = compare(2.0, 2.002, 1e-4, 1e-9, 1e-6)

        self.assertAlmostEqual(abs_error, 0.002)
        self.assertAlmostEqual(rel_error, 0.002 / 2.002)
        self.assertFalse(passed)

    def test_near_zero_rows_use_absolute_error(self):
        self.assertTrue(compare(3e-10, -2e-10, 1e-4, 1e-9, 1e-6)[2])
        self.assertFalse(compare(3e-7, 0.0, 1e-4, 1e-9, 1e-6)[2])

    def test_both_zero(self):
        self.assertEqual(compare(0.0, 0.0, 1e-4, 1e-9, 1e-6), (0.0, 0.0, True))


class TestReport(unittest.TestCase):
    def test_rows_are_sorted(self):
        rows = [verify_row("sphere_annulus(n=3)", 1), verify_row(r=2), verify_row(r=0)]

        report = VerificationReport.assemble(rows, {"tol": 1e-4})

        self.assertEqual(
            [(row.scenario[:6], row.r) for row in report.rows], [("euclid", 0), ("euclid", 2), ("sphere", 1)]
        )
        self.assertEqual(report.config, {"tol": 1e-4})

    def test_profile_rows_sort_by_level(self):
        rows = [ProfileRow(scenario="s", r=0, t=t) for t in (1.0, 0.0, 0.5)]

        report = ProfileReport.assemble(rows)

        self.assertEqual([row.t for row in report.rows], [0.0, 0.5, 1.0])

    def test_passed(self):
        self.assertTrue(VerificationReport.assemble([]).passed)
        self.assertTrue(VerificationReport.assemble([verify_row()]).passed)
        self.assertFalse(VerificationReport.assemble([verify_row(), verify_row(r=1, passed=False)]).passed)

    def test_failed_row(self):
        row = PointwiseRow.failed("warped_tilted(n=4)", 2, 10, 1e-3, "boom")

        self.assertEqual(row.status, "FAIL")
        self.assertIsNone(row.max_residual)
        self.assertFalse(PointwiseReport.assemble([row]).passed)

    def test_json(self):
        report = VerificationReport.assemble([verify_row(), verify_row(r=1)], {"scenarios": []})

        parsed = VerificationReport.model_validate_json(report.to_json())

        self.assertEqual(parsed, report)
        self.assertIsInstance(parsed.rows[0], VerifyRow)

    def test_csv(self):
        report = VerificationReport.assemble([verify_row(), VerifyRow.failed("x", 1, [4, 8], 4, (0.0, 1.0), "boom")])

        records = list(csv.DictReader(io.StringIO(report.to_csv())))

        self.assertEqual(list(records[0])[:4], ["scenario", "r", "passed", "wall_time"])
        self.assertEqual(list(records[0])[-1], "error")
        self.assertEqual(records[0]["grid"], "8 16")
        self.assertEqual(records[0]["convergence_order"], "")
        self.assertEqual(records[1]["error"], "boom")
        self.assertEqual(records[1]["passed"], "False")

    def test_render(self):
        report = PointwiseReport.assemble([])

        self.assertTrue(report.render("json").startswith("{"))
        self.assertTrue(report.render("csv").startswith("scenario,r,passed"))
        with self.assertRaises(ConfigError):
            report.render("xml")

    def test_write(self):
        report = VerificationReport.assemble([verify_row()])

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "report.csv"
            report.write(path, "csv")
            self.assertEqual(path.read_text(), report.to_csv())

            with self.assertRaises(ConfigError):
                report.write(Path(tmp) / "missing" / "report.json")

    def test_failed_profile_row(self):
        row = ProfileRow.failed("euclid_shell(a=0.5,b=1,n=3)", 1, 0.25, "degenerate patch")

        self.assertFalse(row.passed)
        self.assertIsNone(row.value)
        self.assertFalse(ProfileReport.assemble([row]).passed)


class TestEnsureWritable(unittest.TestCase):
    def test_writable(self):
        with tempfile.TemporaryDirectory() as tmp:
            ensure_writable(Path(tmp) / "report.json")

    def test_not_writable(self):
        with tempfile.TemporaryDirectory() as tmp:
            for path, message in ((Path(tmp), "is a directory"), (Path(tmp) / "no" / "r.json", "no directory")):
                with self.subTest(path=path):
                    with self.assertRaisesRegex(ConfigError, message):
                        ensure_writable(path)
