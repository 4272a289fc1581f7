#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 估计器模块

三种估计器：各向同性核（环境空间距离）、坐标卡核（局部坐标）与配对核，
以及用求积网格计算的精确期望 E K_n(x)。
"""

import math
import itertools
import logging
from collections import defaultdict
import numpy as np

from manifoldkde.errors import ArgumentError, ConfigError, UnsupportedError
from manifoldkde.geometry import sphere_area
from manifoldkde.kernels import lle_radius

logger = logging.getLogger(__name__)

# 每个分块矩阵的元素上限
_BLOCK = 1 << 22

# 期望积分要求支撑内至少有这么多个求积节点
MIN_SUPPORT_NODES = 32


def check_bandwidth(eps, manifold):
    """
    检查带宽 ε

    Returns:
        str: 警告消息；无警告时为 None
    """
    if not eps > 0:
        raise ArgumentError(f"带宽必须为正: {eps}")
    if eps > manifold.diameter:
        message = f"带宽 ε={eps:g} 超过流形直径 {manifold.diameter:.6g}"
        logger.warning(message)
        return message
    return None


class GridIndex:
    """
    环境空间网格桶索引：单元边长 cell，查询半径不超过 cell 时只需检查 3^p 个相邻单元
    """

    def __init__(self, ambient, cell):
        if cell <= 0:
            raise ArgumentError(f"网格单元边长必须为正: {cell}")
        self.ambient = ambient
        self.cell = float(cell)
        self.buckets = defaultdict(list)
        keys = np.floor(ambient / self.cell).astype(np.int64)
        for index, key in enumerate(map(tuple, keys)):
            self.buckets[key].append(index)
        self.offsets = list(itertools.product((-1, 0, 1), repeat=ambient.shape[1]))

    def _to_cell(self, point):
        return tuple(np.floor(point / self.cell).astype(np.int64))

    def candidates(self, point):
        """相邻单元中的样本下标（升序）"""
        key = self._to_cell(point)
        found = []
        for offset in self.offsets:
            found.extend(self.buckets.get(tuple(k + o for k, o in zip(key, offset)), ()))
        return np.array(sorted(found), dtype=np.int64)

    def range_query(self, point, radius):
        if radius > self.cell:
            raise ArgumentError(f"查询半径 {radius} 超过网格单元 {self.cell}")
        idx = self.candidates(point)
        if len(idx) == 0:
            return idx
        dist = np.linalg.norm(self.ambient[idx] - point, axis=-1)
        return idx[dist <= radius]


class PairKernel:
    """
    配对核 K_ε(x, y)，在流形点（参数表示）上求值

    Attributes:
        alpha: 爆破指数，0 ≤ K_ε ≤ K_sup/ε^α
        normalized_per_x: 对每个 x 关于 y 积分为 1
    """

    def __init__(self, name, manifold, eps, evaluate_fn, alpha, k_sup, normalized_per_x):
        self.name = name
        self.manifold = manifold
        self.eps = float(eps)
        self._evaluate = evaluate_fn
        self.alpha = float(alpha)
        self.k_sup = float(k_sup)
        self.normalized_per_x = normalized_per_x

    def __repr__(self):
        return f"<PairKernel {self.name} eps={self.eps:g}>"

    def evaluate(self, x, y):
        """返回形状 (len(x), len(y)) 的核值矩阵"""
        return self._evaluate(self.manifold._points(x), self.manifold._points(y))


def make_ball_pair_kernel(manifold, eps):
    """归一化测地球指示函数 χ{d_g(x,y) ≤ ε}/Vol(B_ε)，α = d"""
    if eps >= manifold.injectivity_radius:
        raise ArgumentError(f"测地球半径 {eps} 必须小于注入半径")
    volume = manifold.geodesic_ball_volume(eps)
    d = manifold.intrinsic_dim

    def evaluate(x, y):
        geo = manifold._geodesic(x[:, None, :], y[None, :, :])
        return np.where(geo <= eps, 1.0 / volume, 0.0)

    return PairKernel(f"ball:eps={eps:g}", manifold, eps, evaluate, d, eps ** d / volume, True)


def make_isotropic_pair_kernel(kernel, manifold, eps):
    """K_ε(x, y) = K(‖ι(x)−ι(y)‖/ε)/ε^d"""
    d = manifold.intrinsic_dim

    def evaluate(x, y):
        dist = np.linalg.norm(manifold._embed(x)[:, None, :] - manifold._embed(y)[None, :, :], axis=-1)
        return kernel.profile(dist / eps) / eps ** d

    return PairKernel(f"iso:{kernel.descriptor}", manifold, eps, evaluate, d, kernel.k_sup, False)


class KernelEstimator:
    """
    估计器基类

    子类实现 block(x_points, x_ambient, y_points, y_ambient)，返回每个 (x, y) 对的贡献，
    已除以 ε^d 与 U_x(0)；估计值是样本上的平均，期望是求积网格上对 P·dV 的积分。
    """

    flavor = None

    def __init__(self, manifold, eps):
        self.manifold = manifold
        self.eps = float(eps)
        self.warning = check_bandwidth(eps, manifold)

    @property
    def support_radius(self):
        """贡献非零的环境距离上界"""
        raise NotImplementedError

    def block(self, x_points, x_ambient, y_points, y_ambient):
        raise NotImplementedError

    def _rows(self, width):
        return max(1, _BLOCK // max(width, 1))

    def estimate(self, samples, x):
        """
        在点 x 处求估计值

        Args:
            samples (SampleSet): 样本集
            x: 求值点（参数表示）

        Returns:
            ndarray: 每个求值点的估计值
        """
        if samples.n == 0:
            raise ArgumentError("样本集为空")
        x = self.manifold._points(x)
        x_ambient = self.manifold._embed(x)
        out = np.empty(len(x))
        rows = self._rows(samples.n)
        for start in range(0, len(x), rows):
            stop = min(start + rows, len(x))
            values = self.block(x[start:stop], x_ambient[start:stop], samples.points, samples.ambient)
            out[start:stop] = np.sum(values, axis=1) / samples.n
        return out

    def expected(self, density, x, grid):
        """
        E K_n(x) = ∫ K_ε(x, y) P(y) dV(y)，在求积网格上计算

        Raises:
            ConfigError: 支撑内的求积节点少于 32 个
        """
        x = self.manifold._points(x)
        x_ambient = self.manifold._embed(x)
        mass = grid.weights * density.evaluate(grid.points)
        radius = self.support_radius
        out = np.empty(len(x))
        rows = self._rows(len(grid))
        for start in range(0, len(x), rows):
            stop = min(start + rows, len(x))
            dist = np.linalg.norm(x_ambient[start:stop, None, :] - grid.ambient[None, :, :], axis=-1)
            counts = np.sum(dist <= radius, axis=1)
            if np.min(counts) < MIN_SUPPORT_NODES:
                raise ConfigError(
                    f"求积分辨率 {grid.resolution} 过粗：核支撑内最少只有 {int(np.min(counts))} 个节点，"
                    f"至少需要 {MIN_SUPPORT_NODES} 个")
            values = self.block(x[start:stop], x_ambient[start:stop], grid.points, grid.ambient)
            out[start:stop] = values @ mass
        return out


class IsotropicEstimator(KernelEstimator):
    """K_n(x) = (1/(nε^d)) Σ K(‖ι(x_i)−ι(x)‖/ε)"""

    flavor = "isotropic"

    def __init__(self, manifold, kernel, eps, use_index=False):
        super().__init__(manifold, eps)
        self.kernel = kernel
        self.d = manifold.intrinsic_dim
        self.use_index = use_index and kernel.compact

    @property
    def support_radius(self):
        return self.eps * self.kernel.support_radius

    def block(self, x_points, x_ambient, y_points, y_ambient):
        dist = np.linalg.norm(x_ambient[:, None, :] - y_ambient[None, :, :], axis=-1)
        return self.kernel.profile(dist / self.eps) / self.eps ** self.d

    def estimate(self, samples, x):
        if not self.use_index:
            return super().estimate(samples, x)
        if samples.n == 0:
            raise ArgumentError("样本集为空")
        index = GridIndex(samples.ambient, self.support_radius)
        x_ambient = self.manifold.embed(x)
        out = np.empty(len(x_ambient))
        for i, point in enumerate(x_ambient):
            idx = index.candidates(point)
            if len(idx) == 0:
                out[i] = 0.0
                continue
            dist = np.linalg.norm(samples.ambient[idx] - point, axis=-1)
            out[i] = np.sum(self.kernel.profile(dist / self.eps)) / self.eps ** self.d / samples.n
        return out


class ChartEstimator(KernelEstimator):
    """K_n(x) = (1/(nε^d U_x(0))) Σ K(Φ_x^{-1}(x_i)/ε)，坐标卡外的样本贡献为 0"""

    flavor = "chart"

    def __init__(self, manifold, chart_kernel, eps, chart_radius):
        super().__init__(manifold, eps)
        self.chart_kernel = chart_kernel
        self.chart_radius = float(chart_radius)
        self.d = manifold.intrinsic_dim
        probe = manifold.build_chart(manifold.anchor(), self.chart_radius)
        self.bilipschitz = probe.bilipschitz_bound
        # 径向核的支撑是半径 R 的球，立方体核是 [−R, R]^d
        extent = chart_kernel.halfwidth if chart_kernel.radial is not None \
            else chart_kernel.halfwidth * math.sqrt(self.d)
        self.reach = self.eps * extent * self.bilipschitz
        if not self.chart_radius > self.reach:
            raise ConfigError(
                f"坐标卡半径 {self.chart_radius:g} 必须大于 ε·R·D_1 = {self.reach:.6g}，核支撑才能落在坐标卡内")

    @property
    def support_radius(self):
        return self.reach

    def block(self, x_points, x_ambient, y_points, y_ambient):
        out = np.zeros((len(x_points), len(y_points)))
        for row, center in enumerate(x_points):
            chart = self.manifold.build_chart(center, self.chart_radius)
            coords, mask = chart.inverse(y_ambient)
            if np.any(mask):
                values = self.chart_kernel.profile(coords[mask] / self.eps)
                out[row, mask] = values / (self.eps ** self.d * chart.volume_density_at_zero)
        return out


class PairEstimator(KernelEstimator):
    """K_{n,ε}(x) = (1/n) Σ K_ε(x, x_i)"""

    flavor = "pair"

    def __init__(self, manifold, pair_kernel):
        super().__init__(manifold, pair_kernel.eps)
        self.pair_kernel = pair_kernel

    @property
    def support_radius(self):
        return self.eps

    def block(self, x_points, x_ambient, y_points, y_ambient):
        return self.pair_kernel._evaluate(x_points, y_points)


class LLESphereEstimator(KernelEstimator):
    """
    球面 S^{p−1} 上的 LLE 核估计
    (p−1)/(|S^{p−2}| n ε^{p−1}) Σ [1−a+a·cos θ_i] χ{θ_i ≤ r(ε)}，θ_i 为测地距离
    """

    flavor = "lle"

    def __init__(self, manifold, eps, a):
        if manifold.kind != "sphere":
            raise UnsupportedError("LLE 核估计只支持球面")
        super().__init__(manifold, eps)
        self.a = float(a)
        self.cap = lle_radius(eps)
        p = manifold.ambient_dim
        self.factor = (p - 1) / (sphere_area(p - 2) * self.eps ** (p - 1))

    @property
    def support_radius(self):
        return self.eps

    def block(self, x_points, x_ambient, y_points, y_ambient):
        theta = self.manifold._geodesic(x_points[:, None, :], y_points[None, :, :])
        return self.factor * np.where(theta <= self.cap, 1.0 - self.a + self.a * np.cos(theta), 0.0)


def kde_isotropic(samples, kernel, eps, x, use_index=False):
    return IsotropicEstimator(samples.manifold, kernel, eps, use_index).estimate(samples, x)


def kde_chart(samples, chart_kernel, eps, x, chart_radius):
    return ChartEstimator(samples.manifold, chart_kernel, eps, chart_radius).estimate(samples, x)


def kde_pair(samples, pair_kernel, x):
    return PairEstimator(samples.manifold, pair_kernel).estimate(samples, x)


def kde_lle_sphere(samples, eps, a, x):
    return LLESphereEstimator(samples.manifold, eps, a).estimate(samples, x)


def expected_kde(estimator, density, x, grid=None):
    """
    估计器的精确期望

    Args:
        estimator (KernelEstimator): 估计器
        density (DensityModel): 密度
        x: 求值点
        grid (QuadratureGrid): 求积网格，默认参考分辨率
    """
    if grid is None:
        grid = estimator.manifold.quadrature_grid()
    return estimator.expected(density, x, grid)


def make_estimator(flavor, manifold, kernel_descriptor, eps, chart_radius=None, use_index=False):
    """
    按类型构造估计器

    Args:
        flavor (str): isotropic、chart、pair、lle
        manifold: 流形
        kernel_descriptor (str): 核描述符；pair 类型下 ball 表示测地球核
        eps (float): 带宽
        chart_radius (float): 坐标卡半径（chart 类型需要）
        use_index (bool): 是否使用网格索引
    """
    from manifoldkde.kernels import make_kernel, make_chart_kernel, normalize
    from manifoldkde.utils import parse_descriptor

    d = manifold.intrinsic_dim
    if flavor == "isotropic":
        kernel = make_kernel(kernel_descriptor, d)
        name, _ = parse_descriptor(kernel_descriptor)
        if name not in ("lle", "quadratic"):
            kernel = normalize(kernel, d)
        return IsotropicEstimator(manifold, kernel, eps, use_index)
    if flavor == "chart":
        if chart_radius is None:
            raise ConfigError("chart 估计器需要 chart_radius")
        return ChartEstimator(manifold, make_chart_kernel(kernel_descriptor, d), eps, chart_radius)
    if flavor == "pair":
        name, params = parse_descriptor(kernel_descriptor)
        if name == "ball":
            return PairEstimator(manifold, make_ball_pair_kernel(manifold, eps))
        kernel = normalize(make_kernel(kernel_descriptor, d), d)
        return PairEstimator(manifold, make_isotropic_pair_kernel(kernel, manifold, eps))
    if flavor == "lle":
        name, params = parse_descriptor(kernel_descriptor)
        return LLESphereEstimator(manifold, eps, float(params.get("a", 1.0)))
    raise ConfigError(f"未知的估计器类型: {flavor}")
