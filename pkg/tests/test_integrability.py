#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试 Darboux 可积性与临界点集检测
"""

import os
import sys
import math
import unittest
import numpy as np

# 添加项目路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from manifoldkde.errors import ArgumentError, UnsupportedError
from manifoldkde.geometry import Circle, FatCantorCurve, Sphere
from manifoldkde.integrability import (DarbouxReport, IntegrabilityVerdict, JordanVerdict, _merge_cells,
                                       cantor_threshold, critical_set, darboux_report, darboux_sums,
                                       integrability_verdict)
from manifoldkde.kernels import CantorExampleKernel, IrregularKernel

OFF_CENTER = np.array([0.3, 0.0])


class TestVerdict(unittest.TestCase):
    """测试间隙序列的判定规则"""

    def test_geometric_decay(self):
        gaps = [0.8 / 2 ** k for k in range(8)]
        self.assertEqual(integrability_verdict(gaps, 0.01), IntegrabilityVerdict.INTEGRABLE)

    def test_plateau(self):
        self.assertEqual(integrability_verdict([0.5, 0.52, 0.51, 0.5], 0.26), IntegrabilityVerdict.NOT_INTEGRABLE)

    def test_inconclusive(self):
        self.assertEqual(integrability_verdict([1.0, 0.9], 0.1), IntegrabilityVerdict.INCONCLUSIVE)
        self.assertEqual(integrability_verdict([0.011, 0.0105, 0.0102, 0.0099], 0.01),
                         IntegrabilityVerdict.INCONCLUSIVE)
        self.assertEqual(integrability_verdict([1.0, 0.5, 0.3, 0.2], 0.1), IntegrabilityVerdict.INCONCLUSIVE)

    def test_every_ratio_must_shrink(self):
        # 几何平均足够大，但中间一次加倍几乎没有缩小
        self.assertEqual(integrability_verdict([0.8, 0.1, 0.09, 0.009], 0.01), IntegrabilityVerdict.INCONCLUSIVE)
        self.assertEqual(integrability_verdict([0.08, 0.04, 0.02, 0.0], 0.01), IntegrabilityVerdict.INTEGRABLE)
        self.assertEqual(integrability_verdict([0.08, 0.04, 0.0, 0.005], 0.01), IntegrabilityVerdict.INCONCLUSIVE)

    def test_limit_gap(self):
        report = DarbouxReport([{"gap": 0.4}, {"gap": 0.3}])
        self.assertAlmostEqual(report.limit_gap, 0.2)
        self.assertAlmostEqual(DarbouxReport([{"gap": 0.4}, {"gap": 0.1}]).limit_gap, 0.0)

    def test_cantor_threshold(self):
        self.assertAlmostEqual(cantor_threshold(1.0, 1.0), 1.0 / 3.0)
        self.assertAlmostEqual(cantor_threshold(0.5, 2.0), 0.25)
        with self.assertRaises(ArgumentError):
            cantor_threshold(0.3, 1.0)


class TestDarbouxSums(unittest.TestCase):
    """测试上下和"""

    def setUp(self):
        self.circle = Circle()
        self.kernel = CantorExampleKernel()

    def test_brackets_integral(self):
        # 离心点到圆周的距离在 [0.7, 1.3] 内，只在两点处等于 1
        for m in (16, 256, 4096):
            upper, lower = darboux_sums(self.circle, self.kernel, 1.0, OFF_CENTER, m)
            self.assertLessEqual(lower, 2.0 * math.pi / 3.0 + 1e-9)
            self.assertGreaterEqual(upper, 2.0 * math.pi / 3.0 - 1e-9)

    def test_off_center_circle_is_integrable(self):
        report = darboux_report(self.circle, self.kernel, 1.0, OFF_CENTER, 12)
        self.assertEqual(len(report.rows), 12)
        self.assertLess(report.gaps[-1], 0.01)
        self.assertEqual(integrability_verdict(report, 0.01), IntegrabilityVerdict.INTEGRABLE)

    def test_fat_cantor_is_not_integrable(self):
        curve = FatCantorCurve(depth=8, cdf_nodes=4096, reference_resolution=1024, volume_nodes=2 ** 16)
        report = darboux_report(curve, self.kernel, 1.0, np.zeros(2), 12)
        threshold = cantor_threshold(1.0, curve.retained_arclength)
        self.assertGreater(report.gaps[-1], threshold)
        self.assertEqual(integrability_verdict(report, threshold), IntegrabilityVerdict.NOT_INTEGRABLE)

    def test_dyadic_refinement_is_monotone(self):
        report = darboux_report(self.circle, self.kernel, 1.0, OFF_CENTER, 12)
        uppers = [row["upper"] for row in report.rows]
        lowers = [row["lower"] for row in report.rows]
        for coarse, fine in zip(uppers[:-1], uppers[1:]):
            self.assertLessEqual(fine, coarse + 1e-12)
        for coarse, fine in zip(lowers[:-1], lowers[1:]):
            self.assertGreaterEqual(fine, coarse - 1e-12)
        self.assertTrue(all(gap >= 0 for gap in report.gaps))

    def test_irregular_gap_vanishes_on_circle(self):
        report = darboux_report(self.circle, IrregularKernel(), 1.0, OFF_CENTER, 14)
        gaps = report.gaps
        self.assertLess(gaps[-1], gaps[-2])
        self.assertLess(gaps[-2], gaps[-3])
        self.assertLess(gaps[-1], 0.5 * gaps[-4])
        self.assertLess(gaps[-1], 0.5)

    def test_invalid_arguments(self):
        with self.assertRaises(ArgumentError):
            darboux_sums(self.circle, self.kernel, 1.0, OFF_CENTER, 3)
        with self.assertRaises(ArgumentError):
            darboux_sums(self.circle, self.kernel, 0.0, OFF_CENTER, 4)
        with self.assertRaises(UnsupportedError):
            darboux_sums(Sphere(2), self.kernel, 1.0, np.zeros(3), 4)


class TestCriticalSet(unittest.TestCase):
    """测试临界点集"""

    def test_merge_cells(self):
        mask = np.array([True, True, False, True])
        self.assertEqual(_merge_cells(mask, 1.0), [(0.0, 2.0), (3.0, 4.0)])
        self.assertEqual(_merge_cells(np.zeros(3, dtype=bool), 1.0), [])

    def test_circle_has_isolated_critical_points(self):
        report = critical_set(Circle(), OFF_CENTER, 0.1)
        self.assertEqual(report.verdict, JordanVerdict.JORDAN_MEASURABLE_LIKELY)
        self.assertEqual(report.steps, [0.1, 0.05, 0.025])
        self.assertLess(report.boundary_measures[-1], report.boundary_measures[0])
        # θ = 0 与 θ = π 处 D' = 0
        covered = [any(a <= t <= b for a, b in report.intervals) for t in (0.0, math.pi)]
        self.assertEqual(covered, [True, True])
        self.assertLess(report.cover_measure, 0.2)

    def test_centered_circle_is_all_critical(self):
        # 圆心处 D 恒为 1，整条曲线都是临界点且边界为空
        report = critical_set(Circle(), np.zeros(2), 0.1)
        self.assertEqual(report.verdict, JordanVerdict.JORDAN_MEASURABLE_LIKELY)
        self.assertEqual(report.boundary_measures, [0.0, 0.0, 0.0])
        self.assertAlmostEqual(report.cover_measure, 2.0 * math.pi, places=9)

    def test_fat_cantor_boundary_persists(self):
        curve = FatCantorCurve(depth=10, cdf_nodes=4096, reference_resolution=1024, volume_nodes=2 ** 16)
        report = critical_set(curve, np.zeros(2), 0.05)
        self.assertEqual(report.verdict, JordanVerdict.NOT_JORDAN_MEASURABLE_LIKELY)
        self.assertGreater(report.boundary_measures[-1], curve.retained_measure)

    def test_invalid_step(self):
        with self.assertRaises(ArgumentError):
            critical_set(Circle(), OFF_CENTER, 0.0)


if __name__ == '__main__':
    unittest.main()
