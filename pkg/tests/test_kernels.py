#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
测试核函数与划分数
"""

import os
import sys
import math
import unittest
import numpy as np

# 添加项目路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from manifoldkde.errors import (ArgumentError, DegenerateKernelError, DescriptorError,
                                DivergentIntegralError, PartitionNotFoundError)
from manifoldkde.kernels import (CantorExampleKernel, IrregularKernel, PowerKernel, StepKernel,
                                 TruncatedGaussianKernel, bandwidth_ceiling, lle_radius, make_box_profile,
                                 make_cube_chart_kernel, make_kernel, make_lle_sphere_kernel, make_power_kernel,
                                 make_truncated_gaussian, make_uniform_kernel, normalization_integral, normalize,
                                 oscillation_sum, partition_number)


class TestProfiles(unittest.TestCase):
    """测试核剖面取值"""

    def test_uniform_height(self):
        kernel = make_uniform_kernel(1.0, 1)
        self.assertAlmostEqual(kernel(0.3), 0.5)
        self.assertAlmostEqual(kernel(-0.3), 0.5)
        self.assertAlmostEqual(kernel(1.0), 0.5)
        self.assertEqual(kernel(1.01), 0.0)
        self.assertAlmostEqual(make_uniform_kernel(2.0, 2)(0.0), 1.0 / (4.0 * math.pi))

    def test_cantor_values(self):
        kernel = CantorExampleKernel()
        self.assertAlmostEqual(kernel(0.0), 1.0 / 3.0)
        self.assertAlmostEqual(kernel(1.0), 1.0)
        self.assertAlmostEqual(kernel(1.5), 1.0 / 3.0)
        self.assertAlmostEqual(kernel(2.0), 0.25)
        self.assertAlmostEqual(kernel(3.0), 1.0 / 9.0)
        self.assertEqual(kernel(1.7), 0.0)

    def test_irregular_values(self):
        kernel = IrregularKernel()
        self.assertAlmostEqual(kernel(1.0), math.sin(math.exp(math.e)))
        self.assertEqual(kernel(0.0), 0.0)
        self.assertEqual(kernel(1.2), 0.0)
        values = kernel(np.linspace(0.01, 1.0, 1000))
        self.assertTrue(np.all(np.abs(values) <= 1.0))
        self.assertTrue(np.all(np.isfinite(values)))

    def test_box_is_one_sided(self):
        box = make_box_profile(0.0, 0.1)
        self.assertEqual(box(0.05), 1.0)
        self.assertEqual(box(-0.05), 0.0)

    def test_power_tail(self):
        kernel = PowerKernel(3.0, 1.0)
        self.assertAlmostEqual(kernel(0.5), 1.0)
        self.assertAlmostEqual(kernel(2.0), 0.125)
        t = np.linspace(1.0, 50.0, 200)
        self.assertTrue(np.all(kernel(t) <= t ** -3.0 + 1e-15))

    def test_step_rejects_negative_interval(self):
        with self.assertRaises(ArgumentError):
            StepKernel([(1.0, 0.5, 0.2)])
        with self.assertRaises(ArgumentError):
            make_kernel("step:c=1;a=0.5;b=0.2")

    def test_scaled_kernel(self):
        kernel = make_uniform_kernel(1.0, 1).scaled(-1.0)
        self.assertAlmostEqual(kernel.k_sup, 0.5)
        self.assertAlmostEqual(kernel(0.2), -0.5)
        sup, inf = kernel.oscillation(0.5, 1.5)
        self.assertAlmostEqual(sup, 0.0)
        self.assertAlmostEqual(inf, -0.5)


class TestOscillation(unittest.TestCase):
    """测试振荡预言"""

    def test_step_jump(self):
        kernel = make_uniform_kernel(1.0, 1)
        self.assertEqual(kernel.oscillation(0.2, 0.8), (0.5, 0.5))
        self.assertEqual(kernel.oscillation(0.9, 1.0), (0.5, 0.5))
        self.assertEqual(kernel.oscillation(0.9, 1.1), (0.5, 0.0))

    def test_even_extension(self):
        kernel = TruncatedGaussianKernel(3.0)
        sup, inf = kernel.oscillation(-0.5, 0.2)
        self.assertAlmostEqual(sup, 1.0)
        self.assertAlmostEqual(inf, math.exp(-0.25))

    def test_cantor_jumps(self):
        kernel = CantorExampleKernel()
        self.assertEqual(kernel.oscillation(0.5, 1.2), (1.0, 1.0 / 3.0))
        self.assertEqual(kernel.oscillation(1.6, 1.9), (0.0, 0.0))
        self.assertEqual(kernel.oscillation(1.6, 2.1), (0.25, 0.0))
        self.assertEqual(kernel.oscillation(2.0, 2.0), (0.25, 0.25))
        self.assertAlmostEqual(kernel.oscillation(2.5, 3.5)[0], 1.0 / 9.0)

    def test_irregular_full_swing(self):
        kernel = IrregularKernel()
        self.assertEqual(kernel.oscillation(0.2, 0.3), (1.0, -1.0))
        sup, inf = kernel.oscillation(0.99, 1.0)
        a, b = kernel(0.99), kernel(1.0)
        self.assertAlmostEqual(sup, max(a, b))
        self.assertAlmostEqual(inf, min(a, b))

    def test_oscillation_brackets_samples(self):
        kernel = IrregularKernel()
        rng = np.random.default_rng(0)
        t0 = rng.uniform(0.3, 1.0, 200)
        t1 = t0 + rng.uniform(0.0, 0.02, 200)
        sup, inf = kernel.oscillation(t0, t1)
        for k in range(200):
            values = kernel(np.linspace(t0[k], t1[k], 50))
            self.assertLessEqual(float(np.max(values)), sup[k] + 1e-12)
            self.assertGreaterEqual(float(np.min(values)), inf[k] - 1e-12)

    def test_reversed_interval(self):
        with self.assertRaises(ArgumentError):
            make_uniform_kernel().oscillation(1.0, 0.5)


class TestCellMoments(unittest.TestCase):
    """测试小区间上的平均值与均方值"""

    def test_irregular_regimes(self):
        kernel = IrregularKernel()
        t = np.array([0.05, 0.3, 0.95, 1.0, 1.5])
        np.testing.assert_array_equal(kernel.cell_regime(t, 1e-3), [2, 2, 0, 1, 0])
        mean, meansq = kernel.moments(t, 1e-3)
        np.testing.assert_array_equal(mean[:2], 0.0)
        np.testing.assert_array_equal(meansq[:2], 0.5)
        self.assertEqual(mean[2], kernel(0.95))
        self.assertEqual(meansq[2], kernel(0.95) ** 2)
        # 跨过 t = 1 的小区间一半落在支撑外
        self.assertAlmostEqual(mean[3], 0.5 * kernel(1.0 - 2.5e-4), delta=2e-3)
        self.assertEqual((mean[4], meansq[4]), (0.0, 0.0))

    def test_scaled_oscillating_meansq(self):
        _, meansq = IrregularKernel().scaled(2.0).moments(np.array([0.2]), 1e-3)
        self.assertAlmostEqual(meansq[0], 2.0)

    def test_box_edge_cell(self):
        mean, meansq = make_box_profile(0.0, 0.1).moments(np.array([0.05, 0.1]), 0.01)
        np.testing.assert_allclose(mean, [1.0, 0.5])
        np.testing.assert_allclose(meansq, [1.0, 0.5])


class TestNormalization(unittest.TestCase):
    """测试归一化积分"""

    def test_uniform_is_normalized(self):
        for d in (1, 2, 3):
            self.assertAlmostEqual(normalization_integral(make_uniform_kernel(1.0, d), d), 1.0, places=10)

    def test_gaussian(self):
        self.assertAlmostEqual(normalization_integral(make_truncated_gaussian(10.0), 1), math.sqrt(math.pi), places=8)

    def test_power_kernel(self):
        self.assertAlmostEqual(normalization_integral(make_power_kernel(3.0, 1.0), 1), 3.0, places=8)
        with self.assertRaises(DivergentIntegralError):
            normalization_integral(PowerKernel(3.0, 1.0), 3)

    def test_cantor_on_curve(self):
        self.assertAlmostEqual(normalization_integral(CantorExampleKernel(), 1), 1.0, places=8)

    def test_normalize(self):
        kernel = normalize(TruncatedGaussianKernel(3.0), 2)
        self.assertAlmostEqual(normalization_integral(kernel, 2), 1.0, places=10)

    def test_degenerate(self):
        with self.assertRaises(DegenerateKernelError):
            normalize(make_kernel("step:c=1,-1;a=0,0.5;b=0.5,1"), 1)

    def test_bandwidth_ceiling(self):
        self.assertEqual(bandwidth_ceiling(make_uniform_kernel(), 0.1, 1),
                         {"eps_bias": 0.1 ** 2, "eps_variance": None})
        shape = bandwidth_ceiling(PowerKernel(3.0, 1.0), 0.1, 1)
        self.assertAlmostEqual(shape["eps_bias"], 0.1 ** 3)
        self.assertAlmostEqual(shape["eps_variance"], 0.1 ** 0.5)


class TestLLEKernel(unittest.TestCase):
    """测试球面 LLE 核"""

    def test_radius(self):
        self.assertAlmostEqual(lle_radius(1.0), math.pi / 3)
        with self.assertRaises(ArgumentError):
            lle_radius(math.sqrt(2.0))

    def test_companion(self):
        chart, companion = make_lle_sphere_kernel(0.5, 1.0)
        self.assertAlmostEqual(companion(1.0), 1.0 - 0.125)
        self.assertEqual(companion(1.01), 0.0)
        self.assertAlmostEqual(chart.halfwidth, lle_radius(0.5) / 0.5)
        self.assertAlmostEqual(float(chart.profile(np.array([[0.0, 0.0]]))[0]), 1.0)
        self.assertEqual(make_kernel("lle:eps=0.5,a=1").descriptor, companion.descriptor)


class TestPartition(unittest.TestCase):
    """测试划分数搜索"""

    def test_uniform_on_support(self):
        report = partition_number(make_uniform_kernel(1.0, 1), 0.1, 1.0, 1)
        self.assertEqual(report.N, 1)
        self.assertLess(report.osc_sum, 0.01)

    def test_uniform_brute_force(self):
        kernel = make_uniform_kernel(1.0, 1)
        report = partition_number(kernel, 0.11, 1.5, 1)
        # 振荡和恰为 3/m
        self.assertEqual(report.m, 248)
        self.assertAlmostEqual(report.osc_sum, 3.0 / 248)
        self.assertGreaterEqual(report.coarser_osc_sum, 0.0121)
        for m in range(1, 248, 7):
            self.assertGreaterEqual(oscillation_sum(kernel, m, 1.5, 1), 0.0121)

    def test_two_dimensional_sum_matches_direct(self):
        kernel = make_uniform_kernel(1.0, 2)
        m, halfwidth = 9, 1.5
        direct = 0.0
        edges = np.linspace(-halfwidth, halfwidth, m + 1)
        for i in range(m):
            for j in range(m):
                lo = [0.0 if edges[k] <= 0 <= edges[k + 1] else min(abs(edges[k]), abs(edges[k + 1]))
                      for k in (i, j)]
                hi = [max(abs(edges[k]), abs(edges[k + 1])) for k in (i, j)]
                sup, inf = kernel.oscillation(math.hypot(*lo), math.hypot(*hi))
                direct += (sup - inf) * (2 * halfwidth / m) ** 2
        self.assertAlmostEqual(oscillation_sum(kernel, m, halfwidth, 2), direct, places=12)

    def test_cube_chart_kernel(self):
        kernel = make_cube_chart_kernel(2.0, 1.0)
        self.assertEqual(float(kernel.profile(np.array([[0.5, 0.5]]))[0]), 2.0)
        self.assertEqual(float(kernel.profile(np.array([[1.5, 0.0]]))[0]), 0.0)
        self.assertEqual(partition_number(kernel, 0.5, 1.0, 2).N, 1)

    def test_irregular_exceeds_budget(self):
        with self.assertRaises(PartitionNotFoundError) as ctx:
            partition_number(IrregularKernel(), 0.5, 1.0, 1, budget=64)
        self.assertEqual(ctx.exception.exit_code, 2)
        self.assertEqual(ctx.exception.last_tested, 64)

    def test_valid_and_minimal_for_shipped_kernels(self):
        descriptors = ["uniform", "step:c=2,-1;a=0,0.5;b=0.5,1", "cantor", "lle:eps=0.5,a=1",
                       "quadratic:eps=0.5,a=1", "gauss", "power", "box"]
        for descriptor in descriptors:
            kernel = make_kernel(descriptor)
            for gamma in (0.2, 0.1, 0.05):
                report = partition_number(kernel, gamma, 1.0, 1)
                label = f"{descriptor} γ={gamma}"
                recomputed = oscillation_sum(kernel, report.m, report.domain_halfwidth, 1)
                self.assertAlmostEqual(recomputed, report.osc_sum, places=12, msg=label)
                self.assertLess(recomputed, gamma ** 2, label)
                if report.m > 1:
                    coarser = oscillation_sum(kernel, report.m - 1, report.domain_halfwidth, 1)
                    self.assertGreaterEqual(coarser, gamma ** 2, label)

    def test_step_kernel_scaling(self):
        kernel = make_kernel("step:c=2,-1;a=0,0.5;b=0.5,1")
        gammas = np.array([0.2, 0.1, 0.05])
        counts = np.array([partition_number(kernel, g, 1.0, 1).N for g in gammas])
        slope = np.polyfit(np.log(1.0 / gammas ** 2), np.log(counts), 1)[0]
        self.assertGreaterEqual(slope, 0.8)
        self.assertLessEqual(slope, 1.2)
        for coarse, fine in zip(counts[:-1], counts[1:]):
            self.assertAlmostEqual(fine / coarse, 4.0, delta=0.5)

    def test_invalid_arguments(self):
        with self.assertRaises(ArgumentError):
            partition_number(make_uniform_kernel(), 1.5, 1.0, 1)
        with self.assertRaises(ArgumentError):
            partition_number(make_uniform_kernel(), 0.1, 0.5, 1)


class TestMakeKernel(unittest.TestCase):
    """测试核描述符"""

    def test_descriptors(self):
        self.assertIsInstance(make_kernel("cantor"), CantorExampleKernel)
        self.assertIsInstance(make_kernel("power:alpha=4,rho=0.5"), PowerKernel)
        self.assertEqual(make_kernel("gauss:cut=2").cut, 2.0)
        step = make_kernel("step:c=2,-1;a=0,0.5;b=0.5,1")
        self.assertAlmostEqual(step(0.25), 2.0)
        self.assertAlmostEqual(step(0.75), -1.0)
        self.assertAlmostEqual(step(0.5), 1.0)

    def test_unknown(self):
        with self.assertRaises(DescriptorError):
            make_kernel("banana")
        with self.assertRaises(DescriptorError):
            make_kernel("gauss:cut=3,foo=2")


if __name__ == '__main__':
    unittest.main()
