#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 可积性检测模块

曲线上 g(θ) = K(‖γ(θ)−x‖/ε)·|γ'(θ)| 的 Darboux 上下和，以及距离函数临界点集的
Jordan 可测性检测。
"""

import math
import logging
from enum import Enum
import numpy as np

from manifoldkde.errors import ArgumentError, UnsupportedError

logger = logging.getLogger(__name__)

# 每个单元内的子采样数
SUBSAMPLES = 8

# |D'| 低于该值视为零
FLAT_TOL = 1e-10

# 由采样得到的导数界的放大系数
BOUND_MARGIN = 1.25


class IntegrabilityVerdict(Enum):
    INTEGRABLE = "integrable"
    NOT_INTEGRABLE = "not_integrable"
    INCONCLUSIVE = "inconclusive"


class JordanVerdict(Enum):
    JORDAN_MEASURABLE_LIKELY = "JordanMeasurableLikely"
    NOT_JORDAN_MEASURABLE_LIKELY = "NotJordanMeasurableLikely"
    INCONCLUSIVE = "Inconclusive"


class CellSamples:
    """
    参数区间 [0, 2π] 等分为 m 个单元，每个单元取 SUBSAMPLES+1 个等距点，
    记录距离 D、导数 D' 与速率 |γ'|

    second_bound 为 |D''| 的采样上界，用于判定单元内 D' 是否保号或恒为零。
    """

    def __init__(self, manifold, center, m, subsamples=SUBSAMPLES):
        if not manifold.is_curve:
            raise UnsupportedError(f"{manifold.descriptor} 不是曲线，只支持一维流形")
        self.m = int(m)
        self.subsamples = subsamples
        self.width = 2.0 * math.pi / self.m
        offsets = np.linspace(0.0, self.width, subsamples + 1)
        self.theta = (self.width * np.arange(self.m))[:, None] + offsets[None, :]
        center = np.asarray(center, dtype=float).reshape(-1)
        diff = manifold.curve_point(self.theta) - center
        velocity = manifold.curve_velocity(self.theta)
        self.distance = np.linalg.norm(diff, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            slope = np.sum(diff * velocity, axis=-1) / self.distance
        self.slope = np.where(self.distance > 0, slope, 0.0)
        self.speed = np.linalg.norm(velocity, axis=-1)

        spacing = self.width / subsamples
        self.pad = 0.5 * spacing
        self.slope_bound = BOUND_MARGIN * float(np.max(np.abs(self.slope)))
        self.second_bound = BOUND_MARGIN * float(np.max(np.abs(np.diff(self.slope, axis=1)))) / spacing
        self.speed_slope = BOUND_MARGIN * float(np.max(np.abs(np.diff(self.speed, axis=1)))) / spacing

    def classify(self):
        """
        Returns:
            tuple: (flat, monotone) 两个布尔数组
                flat：单元内 |D'| 的上界低于 FLAT_TOL
                monotone：单元内 D' 保号且远离 0
        """
        slack = self.second_bound * self.pad
        upper = np.max(np.abs(self.slope), axis=1) + slack
        flat = upper < FLAT_TOL
        positive = np.min(self.slope, axis=1) - slack > 0
        negative = np.max(self.slope, axis=1) + slack < 0
        return flat, positive | negative


class DarbouxReport:
    """各细分层的上下和"""

    def __init__(self, rows):
        self.rows = rows

    @property
    def gaps(self):
        return [row["gap"] for row in self.rows]

    @property
    def limit_gap(self):
        """由最后两层外推的间隙极限估计"""
        gaps = self.gaps
        if len(gaps) < 2:
            return gaps[-1] if gaps else None
        return max(0.0, 2.0 * gaps[-1] - gaps[-2])


def darboux_sums(manifold, kernel, eps, center, m):
    """
    第 m 层划分的 Darboux 上下和

    D' 保号的单元取端点像；其余单元取采样范围并按 |D'| 的采样上界补宽。

    Args:
        manifold: 曲线流形
        kernel (IsotropicKernel): 核
        eps (float): 带宽
        center: 嵌入空间中的点 ι(x)（可以不在曲线上）
        m (int): 单元数（2 的幂）

    Returns:
        tuple: (U_m, L_m)
    """
    if m < 1 or m & (m - 1):
        raise ArgumentError(f"单元数必须是 2 的幂: {m}")
    if eps <= 0:
        raise ArgumentError(f"带宽必须为正: {eps}")
    cells = CellSamples(manifold, center, m)
    _, monotone = cells.classify()

    ends_lo = np.minimum(cells.distance[:, 0], cells.distance[:, -1])
    ends_hi = np.maximum(cells.distance[:, 0], cells.distance[:, -1])
    pad = cells.slope_bound * cells.pad
    sampled_lo = np.maximum(np.min(cells.distance, axis=1) - pad, 0.0)
    sampled_hi = np.max(cells.distance, axis=1) + pad
    d_lo = np.where(monotone, ends_lo, sampled_lo)
    d_hi = np.where(monotone, ends_hi, sampled_hi)

    k_sup, k_inf = kernel.oscillation(d_lo / eps, d_hi / eps)
    speed_pad = cells.speed_slope * cells.pad
    s_lo = np.maximum(np.min(cells.speed, axis=1) - speed_pad, 0.0)
    s_hi = np.max(cells.speed, axis=1) + speed_pad

    g_sup = np.where(k_sup >= 0, k_sup * s_hi, k_sup * s_lo)
    g_inf = np.where(k_inf >= 0, k_inf * s_lo, k_inf * s_hi)
    upper = float(np.sum(g_sup) * cells.width)
    lower = float(np.sum(g_inf) * cells.width)
    return upper, lower


def darboux_report(manifold, kernel, eps, center, levels):
    """
    m = 2^1, …, 2^levels 的上下和

    Returns:
        DarbouxReport: 每层 level、m、upper、lower、gap
    """
    rows = []
    for level in range(1, int(levels) + 1):
        m = 2 ** level
        upper, lower = darboux_sums(manifold, kernel, eps, center, m)
        rows.append({"level": level, "m": m, "upper": upper, "lower": lower, "gap": upper - lower})
        logger.debug(f"Darboux 第 {level} 层: U={upper:.6g}, L={lower:.6g}")
    return DarbouxReport(rows)


def integrability_verdict(report, threshold):
    """
    由间隙序列给出可积性判断

    Args:
        report: DarbouxReport 或间隙列表
        threshold (float): 阈值

    Returns:
        IntegrabilityVerdict: 判断结果
    """
    gaps = report.gaps if isinstance(report, DarbouxReport) else list(report)
    if len(gaps) < 4:
        return IntegrabilityVerdict.INCONCLUSIVE
    last = gaps[-1]
    if last < threshold:
        if last <= 0:
            return IntegrabilityVerdict.INTEGRABLE
        # 最后三次加倍中每次间隙都至少缩小 1.5 倍
        if all(cur <= 0 or prev / cur >= 1.5 for prev, cur in zip(gaps[-4:-1], gaps[-3:])):
            return IntegrabilityVerdict.INTEGRABLE
        return IntegrabilityVerdict.INCONCLUSIVE
    tail = gaps[-3:]
    if min(tail) > 0 and max(tail) / min(tail) <= 1.25:
        return IntegrabilityVerdict.NOT_INTEGRABLE
    return IntegrabilityVerdict.INCONCLUSIVE


def cantor_threshold(eps, arclength):
    """
    康托例子核在 ε = 1/k 时的判定阈值 0.5·跳跃·arclength(C′)，
    k = 1 时跳跃为 2/3，k ≥ 2 时为 1/k²
    """
    if eps <= 0:
        raise ArgumentError(f"带宽必须为正: {eps}")
    k = round(1.0 / eps)
    if k < 1 or abs(1.0 / eps - k) > 1e-9:
        raise ArgumentError(f"ε 必须形如 1/k: {eps}")
    jump = 2.0 / 3.0 if k == 1 else 1.0 / k ** 2
    return 0.5 * jump * arclength


class CriticalSetReport:
    """临界点集报告"""

    def __init__(self, center, intervals, steps, boundary_measures, verdict):
        self.center = center
        self.intervals = intervals
        self.steps = steps
        self.boundary_measures = boundary_measures
        self.verdict = verdict

    @property
    def cover_measure(self):
        return sum(b - a for a, b in self.intervals)


def _merge_cells(mask, width):
    """把相邻的选中单元合并为参数区间"""
    intervals = []
    start = None
    for i, selected in enumerate(mask):
        if selected and start is None:
            start = i
        elif not selected and start is not None:
            intervals.append((start * width, i * width))
            start = None
    if start is not None:
        intervals.append((start * width, len(mask) * width))
    return intervals


def _boundary_cells(manifold, center, h):
    m = max(1, int(math.ceil(2.0 * math.pi / h)))
    cells = CellSamples(manifold, center, m)
    flat, monotone = cells.classify()
    undetermined = ~flat & ~monotone
    regular = monotone
    # 周期邻接
    near_regular = np.roll(regular, 1) | np.roll(regular, -1)
    boundary = undetermined | (flat & near_regular)
    return cells, flat | undetermined, boundary


def critical_set(manifold, center, h):
    """
    D_x(θ) = ‖γ(θ) − ι(x)‖ 的临界点集及其边界外测度

    单元分三类：D' 上界低于 FLAT_TOL 的平坦单元、D' 保号的正则单元、其余为未定单元。
    边界由未定单元与紧邻正则单元的平坦单元覆盖，在 h、h/2、h/4 三个分辨率下估计外测度。

    Args:
        manifold: 曲线流形
        center: 嵌入空间中的点
        h (float): 参数步长

    Returns:
        CriticalSetReport: 报告
    """
    if h <= 0:
        raise ArgumentError(f"步长必须为正: {h}")
    steps = [h, h / 2.0, h / 4.0]
    measures = []
    intervals = []
    for step in steps:
        cells, critical, boundary = _boundary_cells(manifold, center, step)
        measures.append(float(np.sum(boundary)) * cells.width)
        intervals = _merge_cells(critical, cells.width)

    first, last = measures[0], measures[-1]
    if last == 0:
        verdict = JordanVerdict.JORDAN_MEASURABLE_LIKELY
    elif first > 0 and last / first <= 0.4:
        verdict = JordanVerdict.JORDAN_MEASURABLE_LIKELY
    elif first > 0 and last / first >= 0.7:
        verdict = JordanVerdict.NOT_JORDAN_MEASURABLE_LIKELY
    else:
        verdict = JordanVerdict.INCONCLUSIVE
    return CriticalSetReport(np.asarray(center, dtype=float), intervals, steps, measures, verdict)
