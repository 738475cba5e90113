import contextlib
import io
import json
import os
import tempfile
import unittest

import runconfig
from runconfig import ConfigError


def resolve(overrides=None, environ=None, config=None):
    return runconfig.resolve(config or runconfig.load_config(), overrides, environ or {})


class TestParsing(unittest.TestCase):
    def test_inclusive_range(self):
        self.assertEqual(runconfig.parse_range("1.0:2.0:0.5"), (1.0, 1.5, 2.0))

    def test_range_tolerates_rounding(self):
        self.assertEqual(len(runconfig.parse_range("0:1:0.1")), 11)

    def test_single_value(self):
        self.assertEqual(runconfig.parse_range("0.75"), (0.75,))

    def test_bad_ranges(self):
        for text in ("abc", "1:2", "2:1:0.5", "1:2:0", "1:2:-1"):
            with self.assertRaises(ConfigError):
                runconfig.parse_range(text)

    def test_list(self):
        self.assertEqual(runconfig.parse_list("4,8, 16"), (4.0, 8.0, 16.0))
        self.assertEqual(runconfig.parse_list([2, 3]), (2.0, 3.0))
        self.assertEqual(runconfig.parse_list(""), ())
        with self.assertRaises(ConfigError):
            runconfig.parse_list("4,x")


class TestLoadConfig(unittest.TestCase):
    def setUp(self):
        self.temp_dir = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.temp_dir.name, "config.json")

    def tearDown(self):
        self.temp_dir.cleanup()

    def write(self, data):
        with open(self.path, "w") as f:
            f.write(data if isinstance(data, str) else json.dumps(data))

    def test_defaults_without_file(self):
        self.assertEqual(runconfig.load_config(None), runconfig.DEFAULTS)

    def test_file_overrides_defaults(self):
        self.write({"families": {"kind": "quad2", "k": [2, 3, 4]}, "ode": {"r_max": 20.0}})
        cfg = resolve(config=runconfig.load_config(self.path))
        self.assertEqual(cfg.family_kind, "quad2")
        self.assertEqual(cfg.k_values, (2.0, 3.0, 4.0))
        self.assertEqual(cfg.ode.r_max, 20.0)
        self.assertEqual(cfg.ode.rtol, 1e-10)

    def test_unknown_keys_warn(self):
        self.write({"ode": {"rtol": 1e-9, "colour": "red"}, "extra": 1})
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            config = runconfig.load_config(self.path)
        self.assertEqual(config["ode"]["rtol"], 1e-9)
        self.assertIn("ode.colour", buf.getvalue())
        self.assertIn("extra", buf.getvalue())

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            runconfig.load_config(os.path.join(self.temp_dir.name, "absent.json"))

    def test_invalid_json(self):
        self.write("{not json")
        with self.assertRaises(ConfigError):
            runconfig.load_config(self.path)

    def test_section_must_be_object(self):
        self.write({"ode": 3})
        with self.assertRaises(ConfigError):
            runconfig.load_config(self.path)


class TestResolve(unittest.TestCase):
    def test_defaults(self):
        cfg = resolve()
        self.assertEqual(cfg.family_kind, "log")
        self.assertEqual(cfg.k_values, (8.0, 16.0, 32.0, 64.0))
        self.assertEqual(cfg.scan_betas[0], 0.0)
        self.assertEqual(cfg.scan_betas[-1], 2.0)
        self.assertEqual(cfg.workers, 1)
        self.assertEqual(cfg.output_dir, "lab_output")

    def test_flags_beat_environment(self):
        env = {runconfig.OUTPUT_ENV: "/tmp/from-env", "PARALLEL": "4"}
        self.assertEqual(resolve(environ=env).output_dir, "/tmp/from-env")
        self.assertEqual(resolve(environ=env).workers, 4)
        cfg = resolve({"output_dir": "/tmp/from-flag", "workers": 2}, env)
        self.assertEqual(cfg.output_dir, "/tmp/from-flag")
        self.assertEqual(cfg.workers, 2)

    def test_unset_flags_keep_config(self):
        cfg = resolve({"families": {"kind": None, "delta": 0.25}})
        self.assertEqual(cfg.family_kind, "log")
        self.assertEqual(cfg.delta, 0.25)

    def test_bad_parallel(self):
        with self.assertRaises(ConfigError):
            resolve(environ={"PARALLEL": "many"})

    def test_empty_k_list(self):
        with self.assertRaises(ConfigError):
            resolve({"families": {"k": ""}})

    def test_quad1_needs_beta(self):
        with self.assertRaises(ConfigError):
            resolve({"families": {"kind": "quad1"}})
        with self.assertRaises(ConfigError):
            resolve({"families": {"kind": "quad1", "beta": 0.5}})
        self.assertEqual(resolve({"families": {"kind": "quad1", "beta": 1.5}}).beta, 1.5)

    def test_rejects_out_of_range(self):
        for overrides in ({"families": {"delta": 1.0}}, {"families": {"k": "0.5,2"}},
                          {"ode": {"rtol": 0.0}}, {"diagnostics": {"eta": 2.0}},
                          {"verify": {"tol": -1.0}}, {"workers": 0}):
            with self.assertRaises(ConfigError, msg=repr(overrides)):
                resolve(overrides)

    def test_as_dict_omits_run_placement(self):
        a = resolve({"output_dir": "one", "workers": 1}).as_dict()
        b = resolve({"output_dir": "two", "workers": 3}).as_dict()
        self.assertEqual(a, b)
        self.assertEqual(sorted(a), ["classify", "diagnostics", "families", "ode", "scan", "verify"])


if __name__ == "__main__":
    unittest.main()
