import contextlib
import hashlib
import io
import json
import math
import os
import tempfile
import unittest

import numpy as np

import entire_solutions
import export
import families
from entire_solutions import ScanRow


class TestFormatting(unittest.TestCase):
    def test_numbers(self):
        self.assertEqual(export.format_number(0.1), "0.1")
        self.assertEqual(export.format_number(np.float64(1.0 / 3.0)), "0.3333333333333333")
        self.assertEqual(export.format_number(np.int64(7)), "7")
        self.assertEqual(export.format_number(None), "")
        self.assertEqual(export.format_number(True), "true")
        self.assertEqual(export.format_number(math.inf), "inf")

    def test_round_trip_digits(self):
        x = 157.91367041742973
        self.assertEqual(float(export.format_number(x)), x)

    def test_json_sanitized(self):
        text = export.dumps_json({"b": np.float64(2.5), "a": [math.inf, np.int32(3)], "c": None})
        self.assertEqual(json.loads(text), {"a": ["inf", 3], "b": 2.5, "c": None})
        self.assertTrue(text.endswith("}\n"))
        self.assertLess(text.index('"a"'), text.index('"b"'))

    def test_k_label(self):
        self.assertEqual(export.k_label(8.0), "8")
        self.assertEqual(export.k_label(2.5), "2p5")


class TestOutputDir(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        with contextlib.redirect_stdout(io.StringIO()):
            self.out = export.OutputDir(os.path.join(self.temp_dir.name, "run"))

    def tearDown(self):
        self.temp_dir.cleanup()

    def read(self, name):
        with open(os.path.join(self.out.root, name), "rb") as f:
            return f.read()

    def test_csv_bytes(self):
        with contextlib.redirect_stdout(io.StringIO()):
            self.out.write_csv("t.csv", ("r", "u"), [(0.0, 1.5), (0.25, None)])
        self.assertEqual(self.read("t.csv"), b"r,u\n0.0,1.5\n0.25,\n")

    def test_row_width_checked(self):
        with self.assertRaises(export.ExportError):
            self.out.write_csv("t.csv", ("r", "u"), [(0.0,)])

    def test_name_must_stay_inside(self):
        with self.assertRaises(export.ExportError):
            self.out.write_json("../escape.json", {})

    def test_manifest_lists_every_file(self):
        with contextlib.redirect_stdout(io.StringIO()) as buf:
            self.out.write_json("z.json", {"x": 1})
            self.out.write_csv("sub/a.csv", ("k",), [(1,)])
            path = self.out.write_manifest({"seed": 1})
        self.assertIn("Wrote", buf.getvalue())
        with open(path) as f:
            manifest = json.load(f)
        self.assertEqual(manifest["tool"], export.TOOL_NAME)
        self.assertEqual(manifest["config"], {"seed": 1})
        self.assertEqual([entry["path"] for entry in manifest["files"]], ["sub/a.csv", "z.json"])
        for entry in manifest["files"]:
            data = self.read(entry["path"])
            self.assertEqual(entry["sha256"], hashlib.sha256(data).hexdigest())
            self.assertEqual(entry["size"], len(data))
        self.assertNotIn("built_at", manifest)

    def test_compute_sha256(self):
        with contextlib.redirect_stdout(io.StringIO()):
            path = self.out.write_json("x.json", [1, 2])
        self.assertEqual(export.compute_sha256(path), hashlib.sha256(b"[\n  1,\n  2\n]\n").hexdigest())


class TestRows(unittest.TestCase):
    def test_profile_rows(self):
        rows = export.profile_rows(entire_solutions.bubble_profile(5.0, 11))
        self.assertEqual(len(rows), 11)
        self.assertEqual(len(rows[0]), len(export.PROFILE_COLUMNS))
        self.assertEqual(rows[0][:2], (0.0, 0.0))

    def test_scan_rows(self):
        rows = export.scan_rows([ScanRow(1.0, "QuadraticEntire", 0.1, 100.0, 1e-9, None), ScanRow(0.0, error="x")])
        self.assertEqual(rows[0], (1.0, "QuadraticEntire", 0.1, 100.0, 1e-9, None))
        self.assertEqual(rows[1], (0.0, None, None, None, None, None))

    def test_member_rows(self):
        member = families.log_family(8)
        rows = export.member_rows(member, export.member_grid(member, 0.5))
        r, u, V, e4u = rows[-1]
        self.assertEqual(r, 0.5)
        self.assertEqual(V, 1.0)
        self.assertAlmostEqual(e4u, math.exp(4.0 * u), places=12)

    def test_member_grid(self):
        grid = export.member_grid(families.log_family(64), 0.5)
        self.assertEqual(grid[0], 0.0)
        self.assertEqual(grid[-1], 0.5)
        self.assertTrue(np.all(np.diff(grid) > 0.0))
        self.assertLess(grid[1], 1.0 / 64.0)

    def test_shoot_summary(self):
        summary = export.shoot_summary(entire_solutions.shoot(1.5))
        self.assertEqual(summary["class"], entire_solutions.QUADRATIC_ENTIRE)
        self.assertIn("slope_fit", summary)
        self.assertGreater(summary["a"], 0.0)


if __name__ == "__main__":
    unittest.main()
