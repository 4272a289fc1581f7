#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试命令行入口
"""

import io
import math
import os
import sys
import json
import shutil
import logging
import tempfile
import unittest
import numpy as np
from contextlib import redirect_stderr, redirect_stdout

# 添加项目路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from main import parse_and_dispatch
from manifoldkde.report import read_csv


class TestCommandLine(unittest.TestCase):
    """测试子命令与退出码"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.output_path = os.path.join(self.temp_dir, "output")
        self.config_path = os.path.join(self.temp_dir, "config.json")
        config = {
            "log_file": os.path.join(self.temp_dir, "logs", "kde.log"),
            "output_path": self.output_path,
            "progress": False,
            "workers": 2,
            "quadrature": {"sphere_resolution": 32, "curve_resolution": 1024},
            "report": {"gnuplot": True, "matplotlib": False, "summary": True},
        }
        with open(self.config_path, "w", encoding="utf-8") as f:
            json.dump(config, f)

    def tearDown(self):
        for handler in list(logging.getLogger('').handlers):
            handler.close()
            logging.getLogger('').removeHandler(handler)
        shutil.rmtree(self.temp_dir)

    def run_cli(self, *argv):
        stdout, stderr = io.StringIO(), io.StringIO()
        with redirect_stdout(stdout), redirect_stderr(stderr):
            code = parse_and_dispatch([argv[0], "-c", self.config_path, *argv[1:]] if argv else [])
        return code, stdout.getvalue()

    def test_no_command(self):
        code, _ = self.run_cli()
        self.assertEqual(code, 1)

    def test_partition(self):
        code, out = self.run_cli("partition", "--kernel", "uniform:rho=1", "--gamma", "0.1", "--dlip", "1", "--d", "1")
        self.assertEqual(code, 0)
        self.assertIn("uniform:rho=1", out)
        self.assertFalse(os.path.exists(self.output_path))

    def test_partition_budget_exceeded(self):
        code, _ = self.run_cli("partition", "--kernel", "irregular", "--gamma", "0.5", "--dlip", "1",
                               "--budget", "64")
        self.assertEqual(code, 2)

    def test_unknown_descriptor(self):
        code, _ = self.run_cli("partition", "--kernel", "banana", "--gamma", "0.1", "--dlip", "1")
        self.assertEqual(code, 1)

    def test_missing_flag_writes_nothing(self):
        code, _ = self.run_cli("eval", "--manifold", "circle", "--eps", "0.3")
        self.assertEqual(code, 1)
        self.assertFalse(os.path.exists(os.path.join(self.output_path, "eval.csv")))

    def test_eval(self):
        code, _ = self.run_cli("eval", "--manifold", "circle", "--eps", "0.3", "--n", "200", "--grid", "64")
        self.assertEqual(code, 0)
        frame = read_csv(os.path.join(self.output_path, "eval.csv"))
        self.assertEqual(list(frame.columns), ["point_index", "u0", "estimate", "exact_density", "expected_kde"])
        self.assertEqual(len(frame), 64)
        self.assertEqual(frame["point_index"].tolist(), list(range(64)))
        # 均匀密度下精确期望接近 1/(2π)
        np.testing.assert_allclose(frame["exact_density"], 1.0 / (2.0 * math.pi))
        np.testing.assert_allclose(frame["expected_kde"], 1.0 / (2.0 * math.pi), rtol=0.05)

    def test_geomcheck(self):
        target = os.path.join(self.temp_dir, "geo.csv")
        code, out = self.run_cli("geomcheck", "--manifold", "sphere:d=2", "--out", target)
        self.assertEqual(code, 0)
        self.assertIn("max_residual", out)
        self.assertEqual(len(read_csv(target)), 3)

    def test_converge_full(self):
        code, _ = self.run_cli("converge", "--manifold", "circle", "--density", "uniform", "--kernel", "uniform",
                               "--n-list", "100,200,400", "--eps", "0.3", "--replicates", "1", "--grid", "64")
        self.assertEqual(code, 0)
        for name in ("converge.csv", "converge.dat", "converge.gp", "converge.md", "converge.html"):
            self.assertTrue(os.path.exists(os.path.join(self.output_path, name)), name)
        with open(os.path.join(self.output_path, "converge.csv"), encoding="utf-8") as f:
            self.assertTrue(f.read().rstrip().split("\n")[-1].startswith("# slopes: "))

    def test_converge_from_plan(self):
        plan_path = os.path.join(self.temp_dir, "plan.json")
        with open(plan_path, "w", encoding="utf-8") as f:
            json.dump({"manifold": "circle", "density": "uniform", "kernel": "uniform",
                       "n_list": [100, 200], "eps": 0.3, "grid": 64}, f)
        target = os.path.join(self.temp_dir, "stability.csv")
        code, _ = self.run_cli("converge", "--plan", plan_path, "--channel", "stability", "--out", target)
        self.assertEqual(code, 0)
        self.assertIn("relative_change", read_csv(target).columns)

    def test_bad_plan(self):
        code, _ = self.run_cli("converge", "--plan", os.path.join(self.temp_dir, "missing.json"))
        self.assertEqual(code, 1)

    def test_integrability(self):
        code, _ = self.run_cli("integrability", "--manifold", "circle", "--x", "0.3,0", "--levels", "6",
                               "--critical-h", "0.2")
        self.assertEqual(code, 0)
        self.assertEqual(len(read_csv(os.path.join(self.output_path, "integrability.csv"))), 6)
        self.assertTrue(os.path.exists(os.path.join(self.output_path, "integrability_critical.csv")))

    def test_integrability_wrong_point(self):
        code, _ = self.run_cli("integrability", "--manifold", "circle", "--x", "0.3,0,0")
        self.assertEqual(code, 1)

    def test_covering(self):
        code, _ = self.run_cli("covering", "--kernel", "box:lo=0,hi=0.1", "--deltas", "0.05",
                               "--eps-metric", "0.3", "--nodes", "500")
        self.assertEqual(code, 0)
        self.assertEqual(len(read_csv(os.path.join(self.output_path, "covering.csv"))), 10)
        packing = read_csv(os.path.join(self.output_path, "covering_packing.csv"))
        self.assertEqual(packing["grid"].tolist(), [34])


if __name__ == '__main__':
    unittest.main()
