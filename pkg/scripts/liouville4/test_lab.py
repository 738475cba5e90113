import contextlib
import csv
import io
import json
import os
import tempfile
import unittest

import lab
from entire_solutions import QUANTUM


class TestLab(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.out = os.path.join(self.temp_dir.name, "out")

    def tearDown(self):
        self.temp_dir.cleanup()

    def run_lab(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with contextlib.redirect_stdout(stdout), contextlib.redirect_stderr(stderr):
            code = lab.main([*argv, "--out", self.out])
        self.stdout, self.stderr = stdout.getvalue(), stderr.getvalue()
        return code

    def load(self, name):
        with open(os.path.join(self.out, name)) as f:
            return json.load(f)

    def test_shoot_beta_star(self):
        self.assertEqual(self.run_lab("shoot", "--beta", "0.816496580927726", "--rmax", "50"), 0)
        summary = self.load("shoot_0.816496580927726.json")
        self.assertEqual(summary["class"], "LogEntire")
        self.assertLess(abs(summary["energy"] / QUANTUM - 1.0), 1e-3)
        manifest = self.load("manifest.json")
        self.assertEqual([f["path"] for f in manifest["files"]],
                         ["shoot_0.816496580927726.csv", "shoot_0.816496580927726.json"])

    def test_shoot_range(self):
        self.assertEqual(self.run_lab("shoot", "--beta-range", "1.0:2.0:0.5", "--rmax", "20"), 0)
        with open(os.path.join(self.out, "shoot_scan.csv")) as f:
            rows = list(csv.DictReader(f))
        self.assertEqual([row["beta"] for row in rows], ["1.0", "1.5", "2.0"])
        self.assertTrue(all(row["class"] == "QuadraticEntire" for row in rows))

    def test_shoot_bad_beta(self):
        self.assertEqual(self.run_lab("shoot", "--beta", "abc"), 2)
        self.assertIn("usage", self.stderr)

    def test_shoot_needs_beta(self):
        self.assertEqual(self.run_lab("shoot"), 2)

    def test_family_log(self):
        self.assertEqual(self.run_lab("family", "--kind", "log", "--k", "8,16,32", "--delta", "0.5"), 0)
        summary = self.load("regime_log.json")
        self.assertEqual(summary["regime"]["regime"], "ii.a")
        self.assertTrue(os.path.exists(os.path.join(self.out, "members", "log_k16.csv")))
        with open(os.path.join(self.out, "series_log.csv")) as f:
            self.assertEqual(f.readline().strip(), "k,mu,d_k,mass_delta")

    def test_family_quad2(self):
        self.assertEqual(self.run_lab("family", "--kind", "quad2", "--k", "2,3,4"), 0)
        self.assertEqual(self.load("regime_quad2.json")["regime"]["regime"], "ii.c")

    def test_family_quad2_two_members(self):
        self.assertEqual(self.run_lab("family", "--kind", "quad2", "--k", "2,3"), 0)
        regime = self.load("regime_quad2.json")["regime"]
        self.assertEqual(regime["regime"], "ii.c")
        self.assertFalse(regime["confident"])
        self.assertIn("regime ii.c", self.stdout)

    def test_quad1_without_beta(self):
        self.assertEqual(self.run_lab("family", "--kind", "quad1", "--k", "8,16"), 2)
        self.assertIn("ERROR:", self.stderr)

    def test_empty_k_list(self):
        self.assertEqual(self.run_lab("family", "--kind", "log", "--k", ""), 2)

    def test_verify_subset(self):
        self.assertEqual(self.run_lab("verify", "--only", "quantization,log_mass"), 0)
        report = self.load("verify.json")
        self.assertTrue(report["valid"])
        self.assertEqual(sorted(report["criteria"]), ["log_mass", "quantization"])
        self.assertIn("PASSED", self.stdout)

    def test_verify_forced_failure(self):
        self.assertEqual(self.run_lab("verify", "--only", "quantization", "--tol", "1e-30"), 1)
        self.assertIn("criterion failed: quantization", self.stderr)
        self.assertFalse(self.load("verify.json")["valid"])

    def test_verify_unknown_criterion(self):
        self.assertEqual(self.run_lab("verify", "--only", "nonsense"), 2)

    def test_json_copy(self):
        path = os.path.join(self.temp_dir.name, "summary.json")
        self.assertEqual(self.run_lab("classify", "--beta", "0.5,1.5", "--rmax", "20", "--json", path), 0)
        with open(path) as f:
            summary = json.load(f)
        self.assertEqual([row["class"] for row in summary["rows"]], ["Growth", "QuadraticEntire"])

    def test_repeat_runs_identical(self):
        manifests = []
        for _ in range(2):
            self.assertEqual(self.run_lab("family", "--kind", "log", "--k", "8,16,32"), 0)
            with open(os.path.join(self.out, "manifest.json"), "rb") as f:
                manifests.append(f.read())
        self.assertEqual(manifests[0], manifests[1])


if __name__ == "__main__":
    unittest.main()
