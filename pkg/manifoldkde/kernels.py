#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 核函数模块

各向同性核（阶梯核、康托例子核、不规则振荡核、截断高斯核、多项式衰减核、
LLE 伴随二次核）、坐标卡核、归一化积分以及划分数 N(γ) 的搜索。
"""

import copy
import math
import logging
import numpy as np
from scipy.integrate import quad

from manifoldkde.errors import (ArgumentError, ConfigError, DescriptorError, DegenerateKernelError,
                                DivergentIntegralError, PartitionNotFoundError)
from manifoldkde.geometry import sphere_area
from manifoldkde.utils import parse_descriptor, as_list

logger = logging.getLogger(__name__)

# 阶梯核断点两侧取值的偏移量（相对）
_SIDE = 1e-12


def _side_offset(b):
    return _SIDE * max(1.0, abs(b))


class IsotropicKernel:
    """
    各向同性核 K(t)，t = ‖ι(x)−ι(y)‖/ε

    子类实现 _profile(t)（t ≥ 0，偶延拓由基类处理）。在相邻断点之间剖面单调，
    基类据此给出精确的振荡预言 oscillation(t0, t1)。
    """

    name = "kernel"
    even = True

    # 子采样点数；振荡区间内 K²/scale² 的平均值
    SUBSAMPLES = 64
    OSCILLATING_MEANSQ = 0.5

    def __init__(self, k_sup, support_radius, decay_exponent=math.inf, breakpoints=(), scale=1.0):
        self.base_sup = float(k_sup)
        self.support_radius = float(support_radius)
        self.decay_exponent = float(decay_exponent)
        self.breakpoints = np.array(sorted(set(float(b) for b in breakpoints)))
        self.scale = float(scale)
        self.descriptor = self.name

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.descriptor} scale={self.scale:.6g}>"

    @property
    def k_sup(self):
        return abs(self.scale) * self.base_sup

    @property
    def compact(self):
        return math.isinf(self.decay_exponent)

    def _profile(self, t):
        raise NotImplementedError

    def profile(self, t):
        """K(t)，向量化；标量输入返回 float"""
        arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.even:
            arr = np.abs(arr)
        out = self.scale * self._profile(arr)
        if np.ndim(t) == 0:
            return float(out[0])
        return out.reshape(np.shape(t))

    __call__ = profile

    def _raw_oscillation(self, t0, t1):
        """未缩放剖面在 [t0, t1] 上的 (sup, inf)，区间端点已按 t0 ≤ t1 排好"""
        v0 = self._profile(t0)
        v1 = self._profile(t1)
        sup = np.maximum(v0, v1)
        inf = np.minimum(v0, v1)
        for b in self.breakpoints:
            inside = (t0 <= b) & (b <= t1)
            if not np.any(inside):
                continue
            delta = _side_offset(b)
            candidates = [(inside, self._profile(np.full(t0.shape, b)))]
            candidates.append((inside & (b - delta >= t0), self._profile(np.full(t0.shape, b - delta))))
            candidates.append((inside & (b + delta <= t1), self._profile(np.full(t0.shape, b + delta))))
            for mask, value in candidates:
                sup = np.where(mask, np.maximum(sup, value), sup)
                inf = np.where(mask, np.minimum(inf, value), inf)
        return sup, inf

    def oscillation(self, t0, t1):
        """
        剖面在 [t0, t1] 上的上下确界

        Args:
            t0: 区间左端（标量或数组）
            t1: 区间右端

        Returns:
            tuple: (sup, inf)
        """
        a = np.atleast_1d(np.asarray(t0, dtype=float))
        b = np.atleast_1d(np.asarray(t1, dtype=float))
        a, b = np.broadcast_arrays(a, b)
        if np.any(b < a):
            raise ArgumentError("振荡区间要求 t0 ≤ t1")
        if self.even:
            # 偶延拓：[a, b] 在 |t| 下的像
            lo = np.where((a <= 0) & (b >= 0), 0.0, np.minimum(np.abs(a), np.abs(b)))
            hi = np.maximum(np.abs(a), np.abs(b))
            a, b = lo, hi
        sup, inf = self._raw_oscillation(a.astype(float), b.astype(float))
        if self.scale < 0:
            sup, inf = inf, sup
        sup, inf = self.scale * sup, self.scale * inf
        if np.ndim(t0) == 0 and np.ndim(t1) == 0:
            return float(sup[0]), float(inf[0])
        return sup, inf

    def cube_oscillation(self, lo_abs, hi_abs):
        """
        立方体上的 (sup, inf)：按坐标 |v| 的范围取径向像 [t_min, t_max]

        Args:
            lo_abs (ndarray): (k, d) 每个坐标绝对值的下界
            hi_abs (ndarray): (k, d) 每个坐标绝对值的上界
        """
        t_min = np.sqrt(np.sum(lo_abs ** 2, axis=-1))
        t_max = np.sqrt(np.sum(hi_abs ** 2, axis=-1))
        return self.oscillation(t_min, t_max)

    def cell_regime(self, t, step):
        """
        以 t 为中心、宽度为 step 的小区间的求值方式

        Returns:
            ndarray: 0 取中点值，1 子采样，2 按振荡统计平均
        """
        t = np.asarray(t, dtype=float)
        x = np.abs(t) if self.even else t
        regime = np.zeros(x.shape, dtype=int)
        half = 0.5 * step
        for b in self.breakpoints:
            regime[(x - half < b) & (b < x + half)] = 1
        return regime

    def subsample(self, t, step):
        """小区间内 SUBSAMPLES 个等距中点上的剖面值，形状 (len(t), SUBSAMPLES)"""
        offsets = ((np.arange(self.SUBSAMPLES) + 0.5) / self.SUBSAMPLES - 0.5) * step
        return self.profile(np.asarray(t, dtype=float)[:, None] + offsets[None, :])

    def moments(self, t, step):
        """
        宽度为 step 的小区间内 K 的平均值与均方值

        Returns:
            tuple: (mean, meansq)
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        regime = self.cell_regime(t, step)
        mean = self.profile(t)
        meansq = mean * mean
        fine = regime == 1
        if np.any(fine):
            values = self.subsample(t[fine], step)
            mean[fine] = values.mean(axis=1)
            meansq[fine] = (values * values).mean(axis=1)
        wild = regime == 2
        mean[wild] = 0.0
        meansq[wild] = self.OSCILLATING_MEANSQ * self.scale ** 2
        return mean, meansq

    def scaled(self, factor):
        clone = copy.copy(self)
        clone.scale = self.scale * float(factor)
        return clone

    def integration_pieces(self):
        """径向积分的分段点（从 0 到支撑末端）"""
        end = max(self.support_radius, float(self.breakpoints[-1]) if len(self.breakpoints) else 0.0)
        points = [0.0] + [b for b in self.breakpoints.tolist() if 0.0 < b < end] + [end]
        return points

    def radial_integral(self, d):
        """∫₀^∞ K(t) t^{d−1} dt（未缩放）"""
        def integrand(t):
            return float(self._profile(np.array([t]))[0]) * t ** (d - 1)

        pieces = self.integration_pieces()
        total = 0.0
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            if hi > lo:
                value, _ = quad(integrand, lo, hi, epsabs=0.0, epsrel=1e-12, limit=200)
                total += value
        if not self.compact:
            value, _ = quad(integrand, pieces[-1], np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
            total += value
        return total


class StepKernel(IsotropicKernel):
    """K(t) = Σ_j c_j χ_{[a_j, b_j]}(t)"""

    name = "step"

    def __init__(self, levels):
        if not levels:
            raise ArgumentError("阶梯核至少需要一级")
        self.levels = []
        for c, a, b in levels:
            c, a, b = float(c), float(a), float(b)
            if b - a < 0:
                raise ArgumentError(f"阶梯区间长度为负: [{a}, {b}]")
            if a < 0:
                raise ArgumentError(f"阶梯区间必须位于 t ≥ 0: [{a}, {b}]")
            self.levels.append((c, a, b))
        edges = sorted(set([a for _, a, _ in self.levels] + [b for _, _, b in self.levels]))
        probes = edges + [0.5 * (lo + hi) for lo, hi in zip(edges[:-1], edges[1:])]
        k_sup = max(abs(v) for v in self._profile(np.array(probes)))
        super().__init__(k_sup, max(edges), math.inf, edges)
        self.descriptor = "step:c={};a={};b={}".format(
            ",".join(f"{c:g}" for c, _, _ in self.levels),
            ",".join(f"{a:g}" for _, a, _ in self.levels),
            ",".join(f"{b:g}" for _, _, b in self.levels))

    def _profile(self, t):
        out = np.zeros_like(t, dtype=float)
        for c, a, b in self.levels:
            out += c * ((t >= a) & (t <= b))
        return out


class CantorExampleKernel(IsotropicKernel):
    """
    K(t) = 1/3，t ∈ [0,1)∪(1,3/2]；K(k) = 1/k²，k 为正整数；其余为 0

    t=1 处跳跃 2/3，整数 k ≥ 2 处跳跃 1/k²。|K(t)| ≤ t^{-2}（t ≥ 3/2）。
    """

    name = "cantor"

    def __init__(self):
        super().__init__(1.0, 1.5, 2.0, [1.0, 1.5])

    def _profile(self, t):
        out = np.where(t <= 1.5, 1.0 / 3.0, 0.0)
        integer = (t >= 1) & (t == np.round(t))
        with np.errstate(divide="ignore"):
            out = np.where(integer, 1.0 / np.maximum(t, 1.0) ** 2, out)
        return out

    def _raw_oscillation(self, t0, t1):
        sup, inf = super()._raw_oscillation(t0, t1)
        k = np.maximum(2.0, np.ceil(t0))
        hit = k <= t1
        sup = np.where(hit, np.maximum(sup, 1.0 / k ** 2), sup)
        # 区间完全落在 (1.5, ∞) 中时，非整数点取 0
        open_part = (t1 > t0) | ~hit
        inf = np.where(open_part & (t1 > 1.5), np.minimum(inf, 0.0), inf)
        return sup, inf


class IrregularKernel(IsotropicKernel):
    """
    K(t) = sin(exp(exp(1/t)))，0 < t ≤ 1；K(0) = 0，t > 1 时为 0

    相位在 t < 0.1523 左右溢出双精度，此处剖面记为 0。
    """

    name = "irregular"

    # 积分时最细的面板宽度
    MIN_PANEL = 1e-6

    def __init__(self):
        super().__init__(1.0, 1.0, math.inf, [1.0])

    @staticmethod
    def phase(t):
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.exp(np.exp(1.0 / t))

    @staticmethod
    def log_phase_rate(t):
        """log |dφ/dt| = e^{1/t} + 1/t − 2 ln t"""
        with np.errstate(over="ignore", divide="ignore"):
            return np.exp(1.0 / t) + 1.0 / t - 2.0 * np.log(t)

    def wavelength(self, t):
        with np.errstate(over="ignore"):
            return 2.0 * math.pi * np.exp(-self.log_phase_rate(t))

    def _profile(self, t):
        out = np.zeros_like(t, dtype=float)
        inside = (t > 0) & (t <= 1)
        if np.any(inside):
            phase = self.phase(t[inside])
            finite = np.isfinite(phase)
            values = np.zeros_like(phase)
            values[finite] = np.sin(phase[finite])
            out[inside] = values
        return out

    def _raw_oscillation(self, t0, t1):
        sup = np.zeros_like(t0)
        inf = np.zeros_like(t0)
        lo = np.maximum(t0, 0.0)
        hi = np.minimum(t1, 1.0)
        active = hi > lo
        point = (hi == lo) & (lo <= 1.0)
        if np.any(point):
            value = self._profile(lo[point])
            sup[point] = value
            inf[point] = value
        if np.any(active):
            a, b = lo[active], hi[active]
            phase_hi = self.phase(a)
            phase_lo = self.phase(b)
            full = (a <= 0) | ~np.isfinite(phase_hi) | (phase_hi - phase_lo >= 2.0 * math.pi)
            s = np.ones_like(a)
            i = -np.ones_like(a)
            part = ~full
            if np.any(part):
                p0, p1 = phase_lo[part], phase_hi[part]
                v0, v1 = np.sin(p0), np.sin(p1)
                top = np.ceil((p0 - math.pi / 2.0) / (2.0 * math.pi)) * 2.0 * math.pi + math.pi / 2.0
                bottom = np.ceil((p0 + math.pi / 2.0) / (2.0 * math.pi)) * 2.0 * math.pi - math.pi / 2.0
                s[part] = np.where(top <= p1, 1.0, np.maximum(v0, v1))
                i[part] = np.where(bottom <= p1, -1.0, np.minimum(v0, v1))
            sup[active] = s
            inf[active] = i
        # t = 0 与 t > 1 处取值为 0
        touches_zero = (t0 <= 0) | (t1 > 1)
        sup = np.where(touches_zero, np.maximum(sup, 0.0), sup)
        inf = np.where(touches_zero, np.minimum(inf, 0.0), inf)
        return sup, inf

    def cell_regime(self, t, step):
        """
        按小区间内端（振荡最快处）的波长 λ 分类：λ ≥ 64·step 取点值，
        step/2 ≤ λ < 64·step 子采样，λ < step/2（至少两个周期）时 sin 的相位近似均匀，
        平均值取 0、均方值取 1/2
        """
        regime = super().cell_regime(t, step)
        inner = np.maximum(np.abs(np.asarray(t, dtype=float)) - 0.5 * step, 0.0)
        inside = inner < 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            wavelength = np.where(inside, self.wavelength(inner), np.inf)
        wild = inside & (wavelength < 0.5 * step)
        regime[inside & ~wild & (wavelength < 64.0 * step)] = 1
        regime[wild] = 2
        return regime

    def resolved_panels(self):
        """从 t=1 向 0 推进的面板边界，面板宽度不超过局部波长的 1/8"""
        edges = [1.0]
        t = 1.0
        while True:
            h = min(0.01, float(self.wavelength(t)) / 8.0)
            if h < self.MIN_PANEL:
                break
            t -= h
            edges.append(t)
        return np.array(edges[::-1])

    def radial_integral(self, d):
        """
        分段 Gauss–Legendre 积分；无法分辨的振荡段（t 接近 0）贡献按 0 处理，
        绝对精度约 1e-4
        """
        edges = self.resolved_panels()
        nodes, weights = np.polynomial.legendre.leggauss(8)
        lo, hi = edges[:-1], edges[1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        t = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
        w = (half[:, None] * weights[None, :]).ravel()
        return float(np.sum(w * self._profile(t) * t ** (d - 1)))


class TruncatedGaussianKernel(IsotropicKernel):
    """K(t) = e^{−t²} χ_{[0, cut]}(t)"""

    name = "gauss"

    def __init__(self, cut=3.0):
        if cut <= 0:
            raise ArgumentError(f"截断半径必须为正: {cut}")
        self.cut = float(cut)
        super().__init__(1.0, self.cut, math.inf, [self.cut])
        self.descriptor = f"gauss:cut={self.cut:g}"

    def _profile(self, t):
        return np.where(t <= self.cut, np.exp(-t * t), 0.0)


class PowerKernel(IsotropicKernel):
    """K(t) = K0（t ≤ ρ），K0·(ρ/t)^α（t > ρ），K0 = min(1, ρ^{−α})"""

    name = "power"

    def __init__(self, alpha=3.0, rho=1.0):
        if alpha <= 0 or rho <= 0:
            raise ArgumentError(f"多项式衰减核要求 α > 0, ρ > 0: α={alpha}, ρ={rho}")
        self.alpha = float(alpha)
        self.rho = float(rho)
        self.k0 = min(1.0, self.rho ** (-self.alpha))
        super().__init__(self.k0, self.rho, self.alpha, [self.rho])
        self.descriptor = f"power:alpha={self.alpha:g},rho={self.rho:g}"

    def _profile(self, t):
        with np.errstate(divide="ignore"):
            tail = self.k0 * (self.rho / np.maximum(t, self.rho)) ** self.alpha
        return np.where(t <= self.rho, self.k0, tail)


class QuadraticKernel(IsotropicKernel):
    """
    LLE 核的各向同性等价形式 K̃(t) = [1 − (aε²/2)t²] χ_{[0,1]}(t)，t = 弦长/ε
    """

    name = "quadratic"

    def __init__(self, eps, a):
        _check_lle_eps(eps)
        self.eps = float(eps)
        self.a = float(a)
        self.coef = 0.5 * self.a * self.eps ** 2
        k_sup = max(1.0, abs(1.0 - self.coef))
        super().__init__(k_sup, 1.0, math.inf, [1.0])
        self.descriptor = f"quadratic:eps={self.eps:g},a={self.a:g}"

    def _profile(self, t):
        return np.where(t <= 1.0, 1.0 - self.coef * t * t, 0.0)


class CosineCapProfile(IsotropicKernel):
    """缩放坐标下 LLE 坐标卡核的径向剖面 1 − a + a·cos(εs)，s ≤ r(ε)/ε"""

    name = "cosinecap"

    def __init__(self, eps, a):
        _check_lle_eps(eps)
        self.eps = float(eps)
        self.a = float(a)
        self.cap = lle_radius(self.eps)
        halfwidth = self.cap / self.eps
        k_sup = max(1.0, abs(1.0 - self.a + self.a * math.cos(self.cap)))
        super().__init__(k_sup, halfwidth, math.inf, [halfwidth])

    def _profile(self, s):
        return np.where(s <= self.support_radius, 1.0 - self.a + self.a * np.cos(self.eps * s), 0.0)


class BoxProfile(IsotropicKernel):
    """实轴上的单侧指示函数 χ_{[lo, hi]}(t)，不做偶延拓"""

    name = "box"
    even = False

    def __init__(self, lo=0.0, hi=0.1):
        if hi < lo:
            raise ArgumentError(f"区间长度为负: [{lo}, {hi}]")
        self.lo = float(lo)
        self.hi = float(hi)
        super().__init__(1.0, max(abs(self.lo), abs(self.hi)), math.inf, [self.lo, self.hi])
        self.descriptor = f"box:lo={self.lo:g},hi={self.hi:g}"

    def _profile(self, t):
        return ((t >= self.lo) & (t <= self.hi)).astype(float)

    def integration_pieces(self):
        return [self.lo, self.hi]


class ChartKernel:
    """
    坐标卡核 K(u)，u ∈ R^d，支撑含于 [−R, R]^d

    radial 给出时 K(u) = radial(‖u‖)，振荡按立方体的径向像计算。
    """

    def __init__(self, name, halfwidth, k_sup, radial=None, value=None):
        self.name = name
        self.halfwidth = float(halfwidth)
        self.support_radius = self.halfwidth
        self.decay_exponent = math.inf
        self.k_sup = float(k_sup)
        self.radial = radial
        self.value = value
        self.descriptor = name

    def __repr__(self):
        return f"<ChartKernel {self.descriptor}>"

    def profile(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.radial is not None:
            return self.radial.profile(np.linalg.norm(u, axis=-1))
        inside = np.all(np.abs(u) <= self.halfwidth, axis=-1)
        return np.where(inside, self.value, 0.0)

    __call__ = profile

    def cube_oscillation(self, lo_abs, hi_abs):
        if self.radial is not None:
            return self.radial.cube_oscillation(lo_abs, hi_abs)
        inside = np.all(hi_abs <= self.halfwidth, axis=-1)
        outside = np.any(lo_abs > self.halfwidth, axis=-1)
        sup = np.where(outside, 0.0, np.where(inside, self.value, max(self.value, 0.0)))
        inf = np.where(outside, 0.0, np.where(inside, self.value, min(self.value, 0.0)))
        return sup, inf

    def scaled(self, factor):
        clone = copy.copy(self)
        if self.radial is not None:
            clone.radial = self.radial.scaled(factor)
        else:
            clone.value = self.value * float(factor)
        clone.k_sup = abs(float(factor)) * self.k_sup
        return clone


class PartitionReport:
    """划分数搜索结果"""

    def __init__(self, gamma, cubes_per_axis, dim, domain_halfwidth, osc_sum, coarser_osc_sum):
        self.gamma = gamma
        self.m = cubes_per_axis
        self.dim = dim
        self.N = cubes_per_axis ** dim
        self.cube_side = 2.0 * domain_halfwidth / cubes_per_axis
        self.domain_halfwidth = domain_halfwidth
        self.osc_sum = osc_sum
        self.coarser_osc_sum = coarser_osc_sum

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "N": self.N,
            "m": self.m,
            "cube_side": self.cube_side,
            "osc_sum": self.osc_sum,
            "domain_halfwidth": self.domain_halfwidth,
            "coarser_osc_sum": self.coarser_osc_sum,
        }


def lle_radius(eps):
    """r(ε) = arccos(1 − ε²/2)"""
    _check_lle_eps(eps)
    return math.acos(1.0 - eps * eps / 2.0)


def _check_lle_eps(eps):
    if not 0 < eps < math.sqrt(2.0):
        raise ArgumentError(f"LLE 核要求 0 < ε < √2: {eps}")


def make_step_kernel(levels):
    return StepKernel(levels)


def make_uniform_kernel(rho=1.0, d=1):
    """K(t) = d/(|S^{d−1}|ρ^d) χ_{[0,ρ]}(t)"""
    if rho <= 0:
        raise ArgumentError(f"支撑半径必须为正: {rho}")
    height = d / (sphere_area(d - 1) * rho ** d)
    kernel = StepKernel([(height, 0.0, rho)])
    kernel.descriptor = f"uniform:rho={rho:g}"
    return kernel


def make_cantor_example_kernel():
    return CantorExampleKernel()


def make_irregular_kernel():
    return IrregularKernel()


def make_truncated_gaussian(cutoff=3.0):
    return TruncatedGaussianKernel(cutoff)


def make_power_kernel(alpha=3.0, rho=1.0):
    """K(t) = K0 (t ≤ ρ)，K0·(ρ/t)^α (t > ρ)，K0 = min(1, ρ^{−α})"""
    return PowerKernel(alpha, rho)


def make_box_profile(lo=0.0, hi=0.1):
    return BoxProfile(lo, hi)


def make_lle_sphere_kernel(eps, a):
    """
    球面 LLE 核

    Returns:
        tuple: (ChartKernel，缩放坐标 u = v/ε 下；伴随的各向同性核 K̃)
    """
    cap = CosineCapProfile(eps, a)
    chart = ChartKernel(f"lle:eps={eps:g},a={a:g}", cap.support_radius, cap.k_sup, radial=cap)
    return chart, QuadraticKernel(eps, a)


def make_cube_chart_kernel(value, halfwidth):
    """常值坐标卡核 c·χ_{[−R,R]^d}"""
    if halfwidth <= 0:
        raise ArgumentError(f"支撑半宽必须为正: {halfwidth}")
    return ChartKernel(f"cube:c={value:g},R={halfwidth:g}", halfwidth, abs(value), value=float(value))


def normalization_integral(kernel, d):
    """
    |S^{d−1}|·∫₀^∞ K(t) t^{d−1} dt

    Args:
        kernel (IsotropicKernel): 核
        d (int): 内蕴维数

    Returns:
        float: 归一化积分
    """
    if not kernel.compact and kernel.decay_exponent <= d:
        raise DivergentIntegralError(f"衰减指数 α={kernel.decay_exponent} ≤ d={d}，尾部积分发散")
    return kernel.scale * sphere_area(d - 1) * kernel.radial_integral(d)


def normalize(kernel, d):
    integral = normalization_integral(kernel, d)
    if abs(integral) < 1e-12:
        raise DegenerateKernelError(f"核 {kernel.descriptor} 的积分接近 0: {integral:.3g}")
    return kernel.scaled(1.0 / integral)


def bandwidth_ceiling(kernel, gamma, d):
    """
    带宽条件的形状上限（常数取 1）

    Returns:
        dict: eps_bias（偏差条件）与 eps_variance（方差条件，紧支撑时为 None）
    """
    if not 0 < gamma < 1:
        raise ArgumentError(f"γ 必须在 (0, 1) 内: {gamma}")
    if kernel.compact:
        return {"eps_bias": gamma ** 2, "eps_variance": None}
    alpha = kernel.decay_exponent
    if alpha <= d:
        raise DivergentIntegralError(f"衰减指数 α={alpha} ≤ d={d}")
    return {"eps_bias": gamma ** (2.0 * alpha / (alpha - d)), "eps_variance": gamma ** (1.0 / (alpha - d))}


def _axis_ranges(m, halfwidth):
    """每个坐标方向上 m 个区间的 |v| 范围，利用镜像对称只保留一半并给出权重"""
    edges = -halfwidth + (2.0 * halfwidth / m) * np.arange(m + 1)
    left, right = edges[:-1], edges[1:]
    lo = np.where((left <= 0) & (right >= 0), 0.0, np.minimum(np.abs(left), np.abs(right)))
    hi = np.maximum(np.abs(left), np.abs(right))
    unique = (m + 1) // 2
    weight = np.full(unique, 2.0)
    if m % 2 == 1:
        weight[-1] = 1.0
    return lo[:unique], hi[:unique], weight


def oscillation_sum(kernel, m, halfwidth, d, chunk=1 << 20):
    """
    Σ_i (M_i − m_i) Vol(Q_i)，[−H, H]^d 等分为 m^d 个立方体

    Args:
        kernel: IsotropicKernel 或 ChartKernel
        m (int): 每个坐标方向的立方体个数
        halfwidth (float): H
        d (int): 维数
    """
    lo, hi, weight = _axis_ranges(m, halfwidth)
    volume = (2.0 * halfwidth / m) ** d
    unique = len(lo)
    total_cells = unique ** d
    total = 0.0
    for start in range(0, total_cells, chunk):
        flat = np.arange(start, min(start + chunk, total_cells))
        idx = np.unravel_index(flat, (unique,) * d)
        lo_abs = np.column_stack([lo[i] for i in idx])
        hi_abs = np.column_stack([hi[i] for i in idx])
        w = np.prod(np.column_stack([weight[i] for i in idx]), axis=1)
        sup, inf = kernel.cube_oscillation(lo_abs, hi_abs)
        total += float(np.sum(w * (np.asarray(sup) - np.asarray(inf))))
    return total * volume


def partition_domain(kernel, gamma, dlip):
    if math.isinf(kernel.decay_exponent):
        return dlip * kernel.support_radius
    return dlip * gamma ** (-1.0 / kernel.decay_exponent)


def partition_number(kernel, gamma, dlip, d, budget=2 ** 30):
    """
    划分数 N(γ)：[−H, H]^d 上使振荡和 < γ² 的最小均匀立方体划分

    先按每轴立方体数 m 加倍，再二分，保证 m−1 不满足条件而 m 满足。

    Args:
        kernel: IsotropicKernel 或 ChartKernel
        gamma (float): γ ∈ (0, 1)
        dlip (float): D_lip ≥ 1
        d (int): 维数
        budget (int): 立方体总数上限

    Returns:
        PartitionReport: 搜索结果
    """
    if not 0 < gamma < 1:
        raise ArgumentError(f"γ 必须在 (0, 1) 内: {gamma}")
    if dlip < 1:
        raise ArgumentError(f"D_lip 必须 ≥ 1: {dlip}")
    if d < 1:
        raise ArgumentError(f"维数必须 ≥ 1: {d}")
    halfwidth = partition_domain(kernel, gamma, dlip)
    target = gamma * gamma

    def osc(m):
        return oscillation_sum(kernel, m, halfwidth, d)

    first = osc(1)
    if first < target:
        return PartitionReport(gamma, 1, d, halfwidth, first, None)

    lo, hi = 1, 2
    cache = {1: first}
    while True:
        if hi ** d > budget:
            raise PartitionNotFoundError(
                f"划分搜索超出立方体预算 {budget}（γ={gamma}，最后测试 m={lo}）", last_tested=lo)
        cache[hi] = osc(hi)
        logger.debug(f"划分搜索 m={hi}: osc_sum={cache[hi]:.6g}")
        if cache[hi] < target:
            break
        lo, hi = hi, hi * 2

    while hi - lo > 1:
        mid = (lo + hi) // 2
        cache[mid] = osc(mid)
        if cache[mid] < target:
            hi = mid
        else:
            lo = mid

    coarser = cache[hi - 1] if hi - 1 in cache else osc(hi - 1)
    return PartitionReport(gamma, hi, d, halfwidth, cache[hi], coarser)


def _build_uniform(params, d):
    return make_uniform_kernel(float(params.pop("rho", 1.0)), d)


def _build_step(params, d):
    c = as_list(params.pop("c", None))
    a = as_list(params.pop("a", None))
    b = as_list(params.pop("b", None))
    if None in c or None in a or None in b or not (len(c) == len(a) == len(b)):
        raise ConfigError("阶梯核需要等长的 c、a、b 列表")
    return StepKernel(list(zip(c, a, b)))


def _build_cantor(params, d):
    return CantorExampleKernel()


def _build_irregular(params, d):
    return IrregularKernel()


def _build_lle(params, d):
    _, companion = make_lle_sphere_kernel(float(params.pop("eps", 0.5)), float(params.pop("a", 1.0)))
    return companion


def _build_quadratic(params, d):
    return QuadraticKernel(float(params.pop("eps", 0.5)), float(params.pop("a", 1.0)))


def _build_gauss(params, d):
    return make_truncated_gaussian(float(params.pop("cut", 3.0)))


def _build_power(params, d):
    return make_power_kernel(float(params.pop("alpha", 3.0)), float(params.pop("rho", 1.0)))


def _build_box(params, d):
    return make_box_profile(float(params.pop("lo", 0.0)), float(params.pop("hi", 0.1)))


def make_kernel(descriptor, d=1):
    """
    由描述符构造各向同性核，如 uniform:rho=1、step:c=2,-1;a=0,0.5;b=0.5,1、cantor、
    irregular、lle:eps=0.5,a=1（返回伴随核 K̃）、gauss:cut=3、power:alpha=3,rho=1、box:lo=0,hi=0.1

    Args:
        descriptor (str): 核描述符
        d (int): 内蕴维数（uniform 核的高度依赖于它）

    Returns:
        IsotropicKernel: 核对象（未自动归一化）
    """
    name, params = parse_descriptor(descriptor)
    builder = globals().get(f"_build_{name}")
    if builder is None:
        raise DescriptorError(name, "核")
    kernel = builder(params, d)
    if params:
        raise DescriptorError(", ".join(sorted(params)), "核参数")
    return kernel


def make_chart_kernel(descriptor, d=1):
    """
    坐标卡核：lle:eps,a → 缩放坐标下的 LLE 核；cube:c,R → 常值立方体核；
    其余描述符按 K(‖u‖) 包装各向同性核
    """
    name, params = parse_descriptor(descriptor)
    if name == "lle":
        chart, _ = make_lle_sphere_kernel(float(params.pop("eps", 0.5)), float(params.pop("a", 1.0)))
    elif name == "cube":
        chart = make_cube_chart_kernel(float(params.pop("c", 1.0)), float(params.pop("R", 1.0)))
    else:
        radial = make_kernel(descriptor, d)
        return ChartKernel(radial.descriptor, radial.support_radius, radial.k_sup, radial=radial)
    if params:
        raise DescriptorError(", ".join(sorted(params)), "核参数")
    return chart
