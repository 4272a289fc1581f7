#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 覆盖数模块

[0,1] 上均匀测度下的 L² 距离、核平移族的贪心装填数，以及不规则核的非 VC 见证。
"""

import math
import logging
import numpy as np

from manifoldkde.errors import ArgumentError

logger = logging.getLogger(__name__)

# 见证不等式中的平移点个数
WITNESS_ANCHORS = 10


class CoveringProbe:
    """
    平移族 F(A) = {z ↦ K(z − a) : a ∈ [0, 1]}，P 为 [0,1] 上的均匀分布

    L² 积分把 [0,1] 分成 nodes 个小区间，每个小区间用核的平均值与均方值：
    平方差的期望为 meansq_a + meansq_b − 2·mean_a·mean_b。两个平移都需要子采样的小区间里，
    distance 在同一组子采样点上直接求平方差的平均。
    """

    def __init__(self, kernel, nodes=4000):
        if nodes < 1:
            raise ArgumentError(f"求积节点数必须 ≥ 1: {nodes}")
        self.kernel = kernel
        self.nodes = int(nodes)
        self.step = 1.0 / self.nodes
        self.z = (np.arange(self.nodes) + 0.5) * self.step

    def __repr__(self):
        return f"<CoveringProbe {self.kernel.descriptor} nodes={self.nodes}>"

    def translate(self, a):
        """
        f_a = K(· − a) 在各小区间上的 (平均值, 均方值)
        """
        return self.kernel.moments(self.z - float(a), self.step)

    def translates(self, anchors):
        pairs = [self.translate(a) for a in np.atleast_1d(anchors)]
        return np.stack([p[0] for p in pairs]), np.stack([p[1] for p in pairs])

    def distance(self, a, b):
        """d_{L²(P)}(K(· − a), K(· − b))"""
        for value in (a, b):
            if not 0.0 <= value <= 1.0:
                raise ArgumentError(f"平移参数必须在 [0, 1] 内: {value}")
        if a == b:
            return 0.0
        t_a = self.z - float(a)
        t_b = self.z - float(b)
        mean_a, meansq_a = self.kernel.moments(t_a, self.step)
        mean_b, meansq_b = self.kernel.moments(t_b, self.step)
        squared = meansq_a + meansq_b - 2.0 * mean_a * mean_b

        regime_a = self.kernel.cell_regime(t_a, self.step)
        regime_b = self.kernel.cell_regime(t_b, self.step)
        joint = (regime_a == 1) & (regime_b == 1)
        if np.any(joint):
            diff = self.kernel.subsample(t_a[joint], self.step) - self.kernel.subsample(t_b[joint], self.step)
            squared[joint] = (diff * diff).mean(axis=1)
        return math.sqrt(max(self.step * float(np.sum(squared)), 0.0))

    def distance_matrix(self, anchors):
        """
        候选平移点两两距离（Gram 矩阵展开）

        两个平移同时需要子采样的小区间里，交叉项取平均值之积。
        """
        means, meansqs = self.translates(anchors)
        energy = meansqs.sum(axis=1)
        gram = means @ means.T
        squared = self.step * (energy[:, None] + energy[None, :] - 2.0 * gram)
        distances = np.sqrt(np.maximum(squared, 0.0))
        np.fill_diagonal(distances, 0.0)
        return distances


def l2_translate_distance(probe, a, b):
    return probe.distance(a, b)


class PackingResult:
    """贪心装填结果，count 是真实装填数的下界"""

    def __init__(self, eps_metric, grid, count, anchors, theory_bound, warnings):
        self.eps_metric = eps_metric
        self.grid = grid
        self.count = count
        self.anchors = anchors
        self.theory_bound = theory_bound
        self.warnings = warnings

    @property
    def coarse(self):
        return bool(self.warnings)

    def to_dict(self):
        return {
            "eps_metric": self.eps_metric,
            "grid": self.grid,
            "packing": self.count,
            "theory_bound": self.theory_bound,
            "coarse_grid": self.coarse,
        }


def packing_lower_bound(eps_metric):
    """(1/2)·exp(1/(160 ε))，溢出时为 +∞"""
    try:
        return 0.5 * math.exp(1.0 / (160.0 * eps_metric))
    except OverflowError:
        return math.inf


def packing_number(probe, eps_metric, grid=None):
    """
    候选网格上的贪心最远点装填

    每次选取到已选集合距离最大的候选点，直到该距离不超过 eps_metric。
    选出的点两两距离都大于 eps_metric。

    Args:
        probe (CoveringProbe): 探针
        eps_metric (float): 度量半径
        grid (int): 候选平移点个数，默认 ⌈10/ε⌉

    Returns:
        PackingResult: 装填结果
    """
    if eps_metric <= 0:
        raise ArgumentError(f"度量半径必须为正: {eps_metric}")
    needed = int(math.ceil(10.0 / eps_metric))
    grid = needed if grid is None else int(grid)
    warnings = []
    if grid < needed:
        message = f"候选网格 {grid} 小于 10/ε = {needed}，装填数可能偏小"
        logger.warning(message)
        warnings.append(message)

    anchors = np.linspace(0.0, 1.0, grid)
    distances = probe.distance_matrix(anchors)
    chosen = [0]
    nearest = distances[0].copy()
    while True:
        best = int(np.argmax(nearest))
        if nearest[best] <= eps_metric:
            break
        chosen.append(best)
        nearest = np.minimum(nearest, distances[best])

    theory = packing_lower_bound(eps_metric)
    logger.info(f"装填数 ε={eps_metric:g}: {len(chosen)}（网格 {grid}）")
    return PackingResult(eps_metric, grid, len(chosen), anchors[chosen], theory, warnings)


def non_vc_witness(probe, deltas):
    """
    对每个 δ 检验 d(K(a+δ−·), K(a−·)) > −1/(160 ln δ)，a 取 [0, 1−δ] 上 10 个等距点

    Returns:
        list: 每行 {delta, a, lhs, rhs, pass}
    """
    rows = []
    for delta in deltas:
        delta = float(delta)
        if not 0.0 < delta <= 0.1:
            raise ArgumentError(f"δ 必须在 (0, 0.1] 内: {delta}")
        rhs = -1.0 / (160.0 * math.log(delta))
        for k in range(WITNESS_ANCHORS):
            a = k * (1.0 - delta) / (WITNESS_ANCHORS - 1)
            lhs = probe.distance(a, min(a + delta, 1.0))
            rows.append({"delta": delta, "a": a, "lhs": lhs, "rhs": rhs, "pass": lhs > rhs})
    failed = sum(1 for row in rows if not row["pass"])
    if failed:
        logger.info(f"见证不等式有 {failed} 个点不成立（核 {probe.kernel.descriptor}）")
    return rows
