#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 采样模块

密度模型（均匀、Hölder、分段常数）与基于计数器随机数发生器的拒绝采样。
"""

import math
import logging
import numpy as np

from manifoldkde.errors import ArgumentError, ConfigError, DescriptorError
from manifoldkde.utils import parse_descriptor

logger = logging.getLogger(__name__)


class DensityModel:
    """
    流形上的概率密度 P

    Attributes:
        p_max: P 的上界
        holder_c, holder_kappa: |P(x)−P(y)| ≤ C_P·d(x,y)^κ 中的常数与指数
        normalization_witness: 参考求积网格上 ∫P dV 的值
    """

    def __init__(self, manifold, descriptor, evaluate_fn, p_max, holder_c, holder_kappa):
        self.manifold = manifold
        self.descriptor = descriptor
        self._evaluate = evaluate_fn
        self.p_max = float(p_max)
        self.holder_c = float(holder_c)
        self.holder_kappa = float(holder_kappa)
        grid = manifold.quadrature_grid()
        self.normalization_witness = grid.integrate(self.evaluate(grid.points))

    def __repr__(self):
        return f"<DensityModel {self.descriptor} on {self.manifold.descriptor}>"

    def evaluate(self, points):
        points = self.manifold._points(points)
        return self._evaluate(points)

    __call__ = evaluate

    @property
    def is_continuous(self):
        return math.isfinite(self.holder_c)


def uniform_density(manifold):
    """P ≡ 1/Vol(M)"""
    value = 1.0 / manifold.volume
    return DensityModel(manifold, "uniform", lambda points: np.full(len(points), value), value, 0.0, 1.0)


def holder_density(manifold, kappa=1.0, strength=0.5, anchor=None):
    """
    P(x) = (1 + strength·d_g(x, x₀)^κ)/Z

    Args:
        manifold: 流形
        kappa (float): Hölder 指数 κ ∈ (0, 1]
        strength (float): 强度，需保证 P > 0
        anchor: 锚点 x₀，默认为流形的标准锚点

    Returns:
        DensityModel: 密度模型，C_P = |strength|/Z
    """
    if not 0 < kappa <= 1:
        raise ArgumentError(f"Hölder 指数必须在 (0, 1] 内: {kappa}")
    reach = manifold.diameter ** kappa
    if 1.0 + min(strength, 0.0) * reach <= 0:
        raise ArgumentError(f"strength={strength} 会使密度非正")
    anchor = manifold.anchor() if anchor is None else manifold._points(anchor)

    def raw(points):
        return 1.0 + strength * manifold._geodesic(points, anchor) ** kappa

    grid = manifold.quadrature_grid()
    z = grid.integrate(raw(grid.points))
    p_max = (1.0 + max(strength, 0.0) * reach) / z
    descriptor = f"holder:kappa={kappa:g},strength={strength:g}"
    model = DensityModel(manifold, descriptor, lambda points: raw(points) / z, p_max, abs(strength) / z, kappa)
    model.normalizer = z
    return model


def _upper_half(manifold, points):
    if manifold.kind == "sphere":
        return points[:, -1] > 0
    return points[:, 0] < math.pi


def piecewise_density(manifold, low=0.5, high=1.5):
    """
    有界、不连续的分段常数密度：曲线与环面上第一个参数 < π 的部分（球面上 z > 0 的半球）
    取 high，其余取 low，再按体积归一化
    """
    if low < 0 or high < 0 or low + high == 0:
        raise ArgumentError(f"分段密度要求非负且不全为 0: low={low}, high={high}")

    def raw(points):
        return np.where(_upper_half(manifold, points), float(high), float(low))

    grid = manifold.quadrature_grid()
    z = grid.integrate(raw(grid.points))
    descriptor = f"piecewise:low={low:g},high={high:g}"
    return DensityModel(manifold, descriptor, lambda points: raw(points) / z, max(low, high) / z, math.inf, 1.0)


class SampleSet:
    """一次独立同分布采样的结果"""

    def __init__(self, points, manifold, seed, stream, density=None, proposals=None):
        self.points = points
        self.manifold = manifold
        self.ambient = manifold._embed(points)
        self.n = len(points)
        self.seed = seed
        self.stream = stream
        self.density = density
        self.proposals = proposals if proposals is not None else self.n

    def __len__(self):
        return self.n

    @property
    def acceptance_rate(self):
        return self.n / self.proposals if self.proposals else 0.0

    def concat(self, other):
        """合并两个样本集（按顺序拼接）"""
        if other.manifold is not self.manifold:
            raise ArgumentError("只能合并同一流形上的样本集")
        merged = SampleSet(np.concatenate([self.points, other.points]), self.manifold, self.seed,
                           (self.stream, other.stream), self.density, self.proposals + other.proposals)
        return merged


def make_rng(seed, stream=()):
    """
    由 (seed, stream) 派生计数器型随机数发生器

    Args:
        seed (int): 基础种子
        stream: 流标识（整数或整数元组），如 (replicate, n)
    """
    if isinstance(stream, int):
        stream = (stream,)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(stream))))


def sample(density, n, seed, stream=(), min_acceptance=1e-4):
    """
    拒绝采样：按体积均匀提议，以概率 P(x)/P_max 接受

    Args:
        density (DensityModel): 密度模型
        n (int): 样本数
        seed (int): 基础种子
        stream: 流标识
        min_acceptance (float): 最低接受率

    Returns:
        SampleSet: 样本集
    """
    if n < 1:
        raise ArgumentError(f"样本数必须 ≥ 1: {n}")
    manifold = density.manifold
    expected = 1.0 / (density.p_max * manifold.volume)
    if expected < min_acceptance:
        raise ConfigError(f"预计接受率 {expected:.3g} 低于下限 {min_acceptance:.3g}")

    rng = make_rng(seed, stream)
    chunks = []
    count = 0
    proposals = 0
    while count < n:
        remaining = n - count
        batch = min(1 << 22, int(math.ceil(1.1 * remaining / min(expected, 1.0))) + 16)
        x = manifold.sample_uniform(batch, rng)
        u = rng.random(batch)
        accepted = np.flatnonzero(u * density.p_max < density.evaluate(x))
        if len(accepted) >= remaining:
            last = accepted[remaining - 1]
            chunks.append(x[accepted[:remaining]])
            proposals += int(last) + 1
            count = n
        else:
            chunks.append(x[accepted])
            proposals += batch
            count += len(accepted)

    rate = n / proposals
    if rate < min_acceptance:
        raise ConfigError(f"接受率 {rate:.3g} 低于下限 {min_acceptance:.3g}")
    logger.debug(f"采样 n={n} seed={seed} stream={stream}: 提议 {proposals} 次，接受率 {rate:.4f}")
    return SampleSet(np.concatenate(chunks), manifold, seed, stream, density, proposals)


def _build_uniform(manifold, params):
    return uniform_density(manifold)


def _build_holder(manifold, params):
    return holder_density(manifold, float(params.pop("kappa", 1.0)), float(params.pop("strength", 0.5)))


def _build_piecewise(manifold, params):
    return piecewise_density(manifold, float(params.pop("low", 0.5)), float(params.pop("high", 1.5)))


def make_density(descriptor, manifold):
    """
    由描述符构造密度：uniform、holder:kappa=0.5,strength=0.5、piecewise:low=0.5,high=1.5
    """
    name, params = parse_descriptor(descriptor)
    builder = globals().get(f"_build_{name}")
    if builder is None:
        raise DescriptorError(name, "密度")
    density = builder(manifold, params)
    if params:
        raise DescriptorError(", ".join(sorted(params)), "密度参数")
    return density
