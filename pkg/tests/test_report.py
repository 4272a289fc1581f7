#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试结果输出
"""

import os
import sys
import json
import shutil
import tempfile
import unittest
import pandas as pd

# 添加项目路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from manifoldkde import __version__
from manifoldkde.report import ResultWriter, RunManifest, format_frame, read_csv


class TestResultWriter(unittest.TestCase):
    """测试结果写出器"""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.config = {"output_path": os.path.join(self.temp_dir, "out"), "report": {"chart_dpi": 60}}
        self.manifest = RunManifest("converge", self.config, 42, {"channel": "full"})
        self.writer = ResultWriter(self.config, self.manifest)
        self.frame = pd.DataFrame({"n": [100, 400], "sup_err": [0.1, 1.0 / 3.0]})

    def tearDown(self):
        shutil.rmtree(self.temp_dir)

    def test_manifest_header(self):
        lines = self.manifest.header_lines()
        self.assertEqual(lines[0], "# kde converge")
        data = json.loads(lines[1][len("# manifest: "):])
        self.assertEqual(data["seed"], 42)
        self.assertEqual(data["version"], __version__)
        self.assertEqual(data["arguments"], {"channel": "full"})

    def test_csv_roundtrip(self):
        path = self.writer.write_csv(self.frame, "converge.csv", trailer={"sup_err": [-0.5, 0.1, 0.01]})
        self.assertEqual(path, os.path.join(self.config["output_path"], "converge.csv"))
        with open(path, encoding="utf-8") as f:
            lines = f.read().split("\n")
        self.assertTrue(lines[0].startswith("# kde converge"))
        self.assertEqual(lines[2], "n,sup_err")
        self.assertEqual(lines[4], "400,0.33333333333333331")
        self.assertTrue(lines[5].startswith("# slopes: "))
        back = read_csv(path)
        self.assertEqual(back["n"].tolist(), [100, 400])
        self.assertEqual(back["sup_err"].tolist()[1], 1.0 / 3.0)
        self.assertIn(path, self.manifest.outputs)

    def test_explicit_out(self):
        target = os.path.join(self.temp_dir, "nested", "result.csv")
        writer = ResultWriter(self.config, self.manifest, out=target)
        self.assertEqual(writer.write_csv(self.frame, "ignored.csv"), target)
        self.assertEqual(writer.sibling(target, "_critical.csv"), os.path.join(self.temp_dir, "nested", "result_critical.csv"))

    def test_gnuplot(self):
        base = self.writer.resolve("converge.csv")
        dat, gp = self.writer.write_gnuplot(base, [100, 400], [0.1, 0.05], "sup_err", "n", "error")
        with open(gp, encoding="utf-8") as f:
            script = f.read()
        self.assertIn("set logscale xy", script)
        self.assertIn("converge.dat", script)
        with open(dat, encoding="utf-8") as f:
            rows = [line for line in f.read().splitlines() if not line.startswith("#")]
        self.assertEqual(rows, ["100 0.10000000000000001", "400 0.050000000000000003"])

    def test_summary_and_chart(self):
        base = self.writer.resolve("converge.csv")
        chart = self.writer.write_chart(base, [100, 400], {"sup_err": [0.1, 0.05]}, "误差", "n", "error")
        self.assertTrue(os.path.exists(chart))
        md, html = self.writer.write_summary(
            base, "收敛实验",
            [{"heading": "斜率", "columns": ["通道", "斜率"], "rows": [["sup_err", -0.4987654321]],
              "chart": os.path.basename(chart)}],
            warnings=["带宽过大"])
        with open(md, encoding="utf-8") as f:
            content = f.read()
        self.assertIn("# 收敛实验", content)
        self.assertIn("-0.498765", content)
        self.assertIn("带宽过大", content)
        with open(html, encoding="utf-8") as f:
            self.assertIn("<table>", f.read())

    def test_format_frame(self):
        text = format_frame(pd.DataFrame({"x": [float("nan"), 0.5]}))
        self.assertEqual(text, "x\nnan\n0.5\n")


if __name__ == '__main__':
    unittest.main()
