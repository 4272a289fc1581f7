#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试平移族的 L² 距离与装填数
"""

import os
import sys
import math
import unittest
import numpy as np

# 添加项目路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from manifoldkde.covering import (CoveringProbe, l2_translate_distance, non_vc_witness, packing_lower_bound,
                                  packing_number)
from manifoldkde.errors import ArgumentError
from manifoldkde.kernels import IrregularKernel, make_box_profile


class TestDistance(unittest.TestCase):
    """测试平移距离"""

    def setUp(self):
        self.probe = CoveringProbe(make_box_profile(0.0, 0.1))

    def test_shifted_box(self):
        # 两个平移的对称差测度为 0.1
        self.assertAlmostEqual(l2_translate_distance(self.probe, 0.0, 0.05), math.sqrt(0.1), places=3)
        self.assertEqual(self.probe.distance(0.3, 0.3), 0.0)

    def test_wide_box_is_constant(self):
        probe = CoveringProbe(make_box_profile(-1.0, 1.0))
        self.assertAlmostEqual(probe.distance(0.2, 0.3), 0.0)

    def test_out_of_range(self):
        with self.assertRaises(ArgumentError):
            self.probe.distance(-0.1, 0.5)
        with self.assertRaises(ArgumentError):
            self.probe.distance(0.5, 1.5)
        with self.assertRaises(ArgumentError):
            CoveringProbe(make_box_profile(), nodes=0)

    def test_matrix_matches_pairwise(self):
        anchors = np.linspace(0.0, 1.0, 7)
        matrix = self.probe.distance_matrix(anchors)
        np.testing.assert_allclose(matrix, matrix.T)
        np.testing.assert_array_equal(np.diag(matrix), 0.0)
        self.assertAlmostEqual(matrix[1, 4], self.probe.distance(anchors[1], anchors[4]), places=9)

    def test_irregular_distance_converges(self):
        # 振荡区按均方值 1/2 计入，加密求积后距离稳定
        for a, b in [(0.2, 0.8), (0.3, 0.31)]:
            values = [CoveringProbe(IrregularKernel(), nodes=n).distance(a, b) for n in (2000, 8000, 32000)]
            self.assertAlmostEqual(values[0], values[2], delta=1e-3)
            self.assertAlmostEqual(values[1], values[2], delta=1e-3)
        self.assertAlmostEqual(CoveringProbe(IrregularKernel(), nodes=8000).distance(0.2, 0.8), 1.0, delta=0.05)

    def test_metric_axioms(self):
        probe = CoveringProbe(IrregularKernel(), nodes=2000)
        rng = np.random.default_rng(7)
        for a, b, c in rng.random((20, 3)):
            ab, bc, ac = probe.distance(a, b), probe.distance(b, c), probe.distance(a, c)
            self.assertEqual(ab, probe.distance(b, a))
            self.assertLessEqual(ac, ab + bc + 1e-9)


class TestPacking(unittest.TestCase):
    """测试贪心装填"""

    def test_box_packing(self):
        probe = CoveringProbe(make_box_profile(0.0, 0.1), nodes=2000)
        result = packing_number(probe, 0.2)
        self.assertEqual(result.grid, 50)
        self.assertFalse(result.coarse)
        self.assertGreaterEqual(result.count, 2)
        distances = probe.distance_matrix(result.anchors)
        off = distances[~np.eye(result.count, dtype=bool)]
        self.assertTrue(np.all(off > 0.2))

    def test_box_packing_fine_radius(self):
        probe = CoveringProbe(make_box_profile(0.0, 0.1), nodes=2000)
        result = packing_number(probe, 0.1)
        self.assertGreaterEqual(result.count, 9)
        distances = probe.distance_matrix(result.anchors)
        off = distances[~np.eye(result.count, dtype=bool)]
        self.assertTrue(np.all(off > 0.1))

    def test_irregular_packing(self):
        probe = CoveringProbe(IrregularKernel(), nodes=2000)
        result = packing_number(probe, 0.005)
        self.assertFalse(result.coarse)
        self.assertGreaterEqual(result.count, 50)
        coarser = packing_number(probe, 0.05, grid=result.grid)
        self.assertLessEqual(coarser.count, result.count)

    def test_coarse_grid_warns(self):
        probe = CoveringProbe(make_box_profile(0.0, 0.1), nodes=1000)
        result = packing_number(probe, 0.2, grid=10)
        self.assertTrue(result.coarse)
        self.assertEqual(result.to_dict()["coarse_grid"], True)
        with self.assertRaises(ArgumentError):
            packing_number(probe, 0.0)

    def test_lower_bound(self):
        self.assertAlmostEqual(packing_lower_bound(0.01), 0.5 * math.exp(0.625))
        self.assertEqual(packing_lower_bound(1e-6), math.inf)


class TestWitness(unittest.TestCase):
    """测试不规则核的非 VC 见证"""

    def test_irregular_kernel_passes(self):
        rows = non_vc_witness(CoveringProbe(IrregularKernel()), [0.01, 0.003])
        self.assertEqual(len(rows), 20)
        self.assertTrue(all(row["pass"] for row in rows))
        self.assertAlmostEqual(rows[0]["rhs"], -1.0 / (160.0 * math.log(0.01)))
        self.assertAlmostEqual(rows[-1]["a"], 1.0 - 0.003)

    def test_delta_range(self):
        with self.assertRaises(ArgumentError):
            non_vc_witness(CoveringProbe(IrregularKernel()), [0.2])


if __name__ == '__main__':
    unittest.main()
