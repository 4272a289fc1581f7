#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 几何模块

提供球面、圆周、平坦环面和胖康托曲线四种嵌入流形：嵌入、距离、指数映射、
法坐标体积密度、弦长比诊断、求积网格与局部坐标卡。
"""

import math
import logging
import numpy as np
from scipy.special import gamma as gamma_fn

from manifoldkde.errors import ArgumentError, DomainError, DescriptorError, UnsupportedError
from manifoldkde.utils import parse_descriptor

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


def sphere_area(k):
    """单位球面 S^k 的面积 |S^k|"""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / gamma_fn((k + 1) / 2.0)


def _wrap_angle(theta):
    """把角度差折回 (-π, π]"""
    return np.pi - np.mod(np.pi - theta, TWO_PI)


def _circle_gap(a, b):
    """两个角度在圆周上的距离"""
    delta = np.mod(np.abs(a - b), TWO_PI)
    return np.minimum(delta, TWO_PI - delta)


class QuadratureGrid:
    """求积网格：参数点、权重与嵌入坐标"""

    def __init__(self, points, weights, ambient, resolution):
        self.points = points
        self.weights = weights
        self.ambient = ambient
        self.resolution = resolution

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        """对节点上的函数值求积"""
        return float(np.dot(self.weights, values))


class Chart:
    """
    以 center 为中心、半径为 r 的坐标卡

    forward 把 B_r(0) 中的坐标映到嵌入空间；inverse 把嵌入点映回坐标，
    并返回落在坐标卡内的掩码。
    """

    def __init__(self, manifold, center, radius, forward, inverse,
                 volume_density_at_zero, bilipschitz_bound, volume_lip_bound):
        self.manifold = manifold
        self.center = center
        self.radius = radius
        self._forward = forward
        self._inverse = inverse
        self.volume_density_at_zero = volume_density_at_zero
        self.bilipschitz_bound = bilipschitz_bound
        self.volume_lip_bound = volume_lip_bound

    @property
    def dim(self):
        return self.manifold.intrinsic_dim

    def forward(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if np.any(np.linalg.norm(coords, axis=1) >= self.radius):
            raise DomainError(f"坐标超出坐标卡半径 {self.radius}")
        return self._forward(coords)

    def inverse(self, ambient):
        """
        Returns:
            tuple: (坐标数组, 是否在坐标卡内的布尔掩码)
        """
        ambient = np.atleast_2d(np.asarray(ambient, dtype=float))
        return self._inverse(ambient)


class EmbeddedManifold:
    """紧致无边流形 M 通过 ι 嵌入 R^p 的公共接口"""

    kind = None

    def __init__(self, intrinsic_dim, ambient_dim, param_dim, volume,
                 injectivity_radius, diameter, descriptor, reference_resolution):
        if ambient_dim <= intrinsic_dim:
            raise ArgumentError("嵌入维数必须大于内蕴维数")
        self.intrinsic_dim = intrinsic_dim
        self.ambient_dim = ambient_dim
        self.param_dim = param_dim
        self.volume = float(volume)
        self.injectivity_radius = float(injectivity_radius)
        self.diameter = float(diameter)
        self.descriptor = descriptor
        self.reference_resolution = reference_resolution

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.descriptor}>"

    # ---- 点的规范化 ----

    def _points(self, points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 0:
            points = points.reshape(1, 1)
        elif points.ndim == 1:
            points = points.reshape(1, -1) if self.param_dim > 1 or points.size == 1 else points.reshape(-1, 1)
        if points.shape[-1] != self.param_dim:
            raise DomainError(f"点的维数应为 {self.param_dim}，实际为 {points.shape[-1]}")
        if not np.all(np.isfinite(points)):
            raise DomainError("点坐标包含非有限值")
        self._check_domain(points)
        return points

    def _check_domain(self, points):
        pass

    def _tangent(self, v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        elif v.ndim == 1:
            v = v.reshape(1, -1) if self.tangent_dim > 1 or v.size == 1 else v.reshape(-1, 1)
        return v

    @property
    def tangent_dim(self):
        return self.intrinsic_dim

    # ---- 公共操作 ----

    def embed(self, points):
        """ι(point)，结果形状为 (n, p)"""
        return self._embed(self._points(points))

    def ambient_distance(self, x, y):
        """‖ι(x) − ι(y)‖"""
        return np.linalg.norm(self.embed(x) - self.embed(y), axis=-1)

    def geodesic_distance(self, x, y):
        return self._geodesic(self._points(x), self._points(y))

    def exp_map(self, x, v):
        x = self._points(x)
        v = self._tangent(v)
        norms = self.tangent_norm(x, v)
        if np.any(norms >= self.injectivity_radius):
            raise DomainError(f"切向量长度超过注入半径 {self.injectivity_radius:.6g}")
        return self._exp(x, v)

    def log_map(self, x, y):
        x = self._points(x)
        y = self._points(y)
        if np.any(self._geodesic(x, y) >= self.injectivity_radius - 1e-12):
            raise DomainError(f"两点的测地距离超过注入半径 {self.injectivity_radius:.6g}")
        return self._log(x, y)

    def tangent_norm(self, x, v):
        return np.linalg.norm(v, axis=-1)

    def volume_density_in_normal_coords(self, x, v):
        """法坐标下的体积密度 U_x(v)"""
        x = self._points(x)
        t = self.tangent_norm(x, self._tangent(v))
        if np.any(t >= self.injectivity_radius):
            raise DomainError("切向量长度超过注入半径")
        return self._volume_density(t)

    def _volume_density(self, t):
        return np.ones_like(t, dtype=float)

    def second_fundamental_sq(self, x, direction):
        """‖II_x(θ,θ)‖²，θ 为单位切方向"""
        raise NotImplementedError

    def chord_ratio_check(self, x, direction, t):
        """
        弦长比诊断

        Returns:
            float: |‖ι∘exp_x(tθ) − ι(x)‖/t − (1 − ‖II(θ,θ)‖² t²/24)|
        """
        if t <= 0 or t >= self.injectivity_radius / 4.0:
            raise DomainError(f"t 必须在 (0, inj/4) 内: {t}")
        x = self._points(x)
        direction = self._unit_direction(x, self._tangent(direction))
        y = self._exp(x, t * direction)
        chord = np.linalg.norm(self._embed(y) - self._embed(x), axis=-1)
        second = self.second_fundamental_sq(x, direction)
        residual = np.abs(chord / t - (1.0 - second * t * t / 24.0))
        return float(residual[0]) if residual.size == 1 else residual

    def _unit_direction(self, x, direction):
        norms = self.tangent_norm(x, direction)
        if np.any(norms == 0):
            raise ArgumentError("方向向量不能为零")
        return direction / norms[:, None]

    def quadrature_grid(self, resolution=None):
        if resolution is None:
            resolution = self.reference_resolution
        resolution = int(resolution)
        if resolution < 8:
            raise ArgumentError(f"求积分辨率必须 ≥ 8: {resolution}")
        points, weights = self._quadrature(resolution)
        return QuadratureGrid(points, weights, self._embed(points), resolution)

    def build_chart(self, x, r):
        if r <= 0 or r >= self.injectivity_radius:
            raise DomainError(f"坐标卡半径必须在 (0, {self.injectivity_radius:.6g}) 内: {r}")
        return self._chart(self._points(x), float(r))

    def sample_uniform(self, n, rng):
        """按体积测度均匀采样 n 个点"""
        raise NotImplementedError

    def parameter_coords(self, points):
        return self._points(points)

    def anchor(self):
        """默认锚点，用于 Hölder 密度"""
        return np.zeros((1, self.param_dim))

    def geodesic_ball_volume(self, r):
        raise NotImplementedError

    # ---- 曲线专用 ----

    @property
    def is_curve(self):
        return False

    def curve_point(self, theta):
        raise UnsupportedError(f"{self.descriptor} 不是曲线")

    def curve_velocity(self, theta):
        raise UnsupportedError(f"{self.descriptor} 不是曲线")

    def estimate_dlip(self, n_pairs=2000, seed=0, radius=None):
        """
        估计 D_lip：在局部点对上最大化测地距离与弦长之比

        Args:
            n_pairs (int): 点对数量
            seed (int): 随机种子
            radius (float): 点对的最大测地距离，默认 inj/4

        Returns:
            float: 不小于 1 的畸变上界估计
        """
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        radius = self.injectivity_radius / 4.0 if radius is None else radius
        x = self.sample_uniform(n_pairs, rng)
        direction = rng.standard_normal((n_pairs, self.tangent_dim))
        direction = self._project_tangent(x, direction)
        norms = self.tangent_norm(x, direction)
        lengths = radius * rng.uniform(0.05, 1.0, n_pairs)
        y = self._exp(x, direction * (lengths / norms)[:, None])
        geo = self._geodesic(x, y)
        chord = np.linalg.norm(self._embed(x) - self._embed(y), axis=-1)
        mask = chord > 0
        return max(1.0, float(np.max(geo[mask] / chord[mask])))

    def _project_tangent(self, x, v):
        return v


class Sphere(EmbeddedManifold):
    """单位球面 S^d ⊂ R^{d+1}，点直接用单位向量表示"""

    kind = "sphere"

    def __init__(self, d=2, reference_resolution=128):
        if d not in (1, 2, 3):
            raise ArgumentError(f"球面维数仅支持 1、2、3: {d}")
        super().__init__(d, d + 1, d + 1, sphere_area(d), math.pi, math.pi,
                         f"sphere:d={d}", reference_resolution)

    @property
    def tangent_dim(self):
        return self.ambient_dim

    def _check_domain(self, points):
        if np.any(np.abs(np.linalg.norm(points, axis=-1) - 1.0) > 1e-9):
            raise DomainError("球面上的点必须是单位向量")

    def _embed(self, points):
        return np.array(points, dtype=float)

    def _geodesic(self, x, y):
        return 2.0 * np.arctan2(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))

    def _project_tangent(self, x, v):
        return v - np.sum(v * x, axis=-1, keepdims=True) * x

    def _exp(self, x, v):
        v = self._project_tangent(x, v)
        t = np.linalg.norm(v, axis=-1, keepdims=True)
        return np.cos(t) * x + np.sinc(t / np.pi) * v

    def _log(self, x, y):
        theta = self._geodesic(x, y)[:, None]
        w = y - np.sum(x * y, axis=-1, keepdims=True) * x
        return w / np.sinc(theta / np.pi)

    def tangent_norm(self, x, v):
        return np.linalg.norm(self._project_tangent(x, v), axis=-1)

    def _volume_density(self, t):
        return np.sinc(t / np.pi) ** (self.intrinsic_dim - 1)

    def second_fundamental_sq(self, x, direction):
        return 1.0

    def _quadrature(self, resolution):
        d = self.intrinsic_dim
        if d == 1:
            theta = TWO_PI * np.arange(resolution) / resolution
            points = np.column_stack([np.cos(theta), np.sin(theta)])
            weights = np.full(resolution, TWO_PI / resolution)
        elif d == 2:
            # 等面积纬度带：z 方向等分，每条带 2R 个经度
            z = -1.0 + (np.arange(resolution) + 0.5) * 2.0 / resolution
            phi = TWO_PI * np.arange(2 * resolution) / (2 * resolution)
            zz, pp = np.meshgrid(z, phi, indexing="ij")
            rho = np.sqrt(1.0 - zz ** 2)
            points = np.column_stack([(rho * np.cos(pp)).ravel(), (rho * np.sin(pp)).ravel(), zz.ravel()])
            weights = np.full(len(points), (2.0 / resolution) * (TWO_PI / (2 * resolution)))
        else:
            # S^3: u = sin²η 等分，dV = (1/2) du dξ1 dξ2
            u = (np.arange(resolution) + 0.5) / resolution
            xi = TWO_PI * np.arange(2 * resolution) / (2 * resolution)
            uu, x1, x2 = np.meshgrid(u, xi, xi, indexing="ij")
            c, s = np.sqrt(1.0 - uu), np.sqrt(uu)
            points = np.column_stack([(c * np.cos(x1)).ravel(), (c * np.sin(x1)).ravel(),
                                      (s * np.cos(x2)).ravel(), (s * np.sin(x2)).ravel()])
            weights = np.full(len(points), 0.5 / resolution * (TWO_PI / (2 * resolution)) ** 2)
        return points, weights

    def tangent_basis(self, x):
        """x 处切空间的标准正交基，形状 (p, d)"""
        x = self._points(x)[0]
        basis = np.column_stack([x, np.eye(self.ambient_dim)])
        q, _ = np.linalg.qr(basis)
        return q[:, 1:self.ambient_dim]

    def _chart(self, x, r):
        center = x[:1]
        basis = self.tangent_basis(center)
        d = self.intrinsic_dim

        def forward(coords):
            return self._exp(np.repeat(center, len(coords), axis=0), coords @ basis.T)

        def inverse(ambient):
            y = ambient / np.linalg.norm(ambient, axis=-1, keepdims=True)
            geo = self._geodesic(center, y)
            mask = geo < min(r, math.pi - 1e-12)
            coords = np.zeros((len(y), d))
            if np.any(mask):
                coords[mask] = self._log(np.repeat(center, int(mask.sum()), axis=0), y[mask]) @ basis
            return coords, mask

        t = np.linspace(0.0, r, 4097)[1:]
        d2 = float(np.max(np.abs(self._volume_density(t) - 1.0) / t))
        return Chart(self, center, r, forward, inverse, 1.0, r / math.sin(r), d2)

    def sample_uniform(self, n, rng):
        g = rng.standard_normal((n, self.ambient_dim))
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def parameter_coords(self, points):
        return self._points(points)

    def anchor(self):
        north = np.zeros((1, self.ambient_dim))
        north[0, -1] = 1.0
        return north

    def geodesic_ball_volume(self, r):
        d = self.intrinsic_dim
        if d == 1:
            return 2.0 * r
        if d == 2:
            return TWO_PI * (1.0 - math.cos(r))
        return TWO_PI * (r - math.sin(r) * math.cos(r))


class Circle(EmbeddedManifold):
    """单位圆周，参数 θ ∈ [0, 2π]"""

    kind = "circle"

    def __init__(self, reference_resolution=4096):
        super().__init__(1, 2, 1, TWO_PI, math.pi, math.pi, "circle", reference_resolution)

    def _check_domain(self, points):
        if np.any(points < -1e-12) or np.any(points > TWO_PI + 1e-12):
            raise DomainError("圆周参数必须在 [0, 2π] 内")

    def _embed(self, points):
        theta = points[:, 0]
        return np.column_stack([np.cos(theta), np.sin(theta)])

    def _geodesic(self, x, y):
        return _circle_gap(x[..., 0], y[..., 0])

    def _exp(self, x, v):
        return np.mod(x + v, TWO_PI)

    def _log(self, x, y):
        return _wrap_angle(y - x)

    def second_fundamental_sq(self, x, direction):
        return 1.0

    def _quadrature(self, resolution):
        theta = TWO_PI * np.arange(resolution) / resolution
        return theta[:, None], np.full(resolution, TWO_PI / resolution)

    def _chart(self, x, r):
        center = x[:1]

        def forward(coords):
            return self._embed(np.mod(center + coords, TWO_PI))

        def inverse(ambient):
            theta = np.mod(np.arctan2(ambient[:, 1], ambient[:, 0]), TWO_PI)
            coords = _wrap_angle(theta - center[0, 0])[:, None]
            return coords, np.abs(coords[:, 0]) < r

        return Chart(self, center, r, forward, inverse, 1.0, max(1.0, r / (math.pi - r)), 0.0)

    def sample_uniform(self, n, rng):
        return TWO_PI * rng.random((n, 1))

    def geodesic_ball_volume(self, r):
        return 2.0 * r

    @property
    def is_curve(self):
        return True

    def curve_point(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def curve_velocity(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


class FlatTorus(EmbeddedManifold):
    """d 个单位圆周的乘积，嵌入 R^{2d}"""

    kind = "torus"

    def __init__(self, d=2, reference_resolution=64):
        if d not in (1, 2, 3):
            raise ArgumentError(f"环面维数仅支持 1、2、3: {d}")
        super().__init__(d, 2 * d, d, TWO_PI ** d, math.pi, math.pi * math.sqrt(d),
                         f"torus:d={d}", reference_resolution)

    def _check_domain(self, points):
        if np.any(points < -1e-12) or np.any(points > TWO_PI + 1e-12):
            raise DomainError("环面参数必须在 [0, 2π]^d 内")

    def _embed(self, points):
        out = np.empty((len(points), self.ambient_dim))
        out[:, 0::2] = np.cos(points)
        out[:, 1::2] = np.sin(points)
        return out

    def _geodesic(self, x, y):
        return np.sqrt(np.sum(_circle_gap(x, y) ** 2, axis=-1))

    def _exp(self, x, v):
        return np.mod(x + v, TWO_PI)

    def _log(self, x, y):
        return _wrap_angle(y - x)

    def second_fundamental_sq(self, x, direction):
        return np.sum(direction ** 4, axis=-1)

    def _quadrature(self, resolution):
        axis = TWO_PI * np.arange(resolution) / resolution
        mesh = np.meshgrid(*([axis] * self.intrinsic_dim), indexing="ij")
        points = np.column_stack([m.ravel() for m in mesh])
        return points, np.full(len(points), (TWO_PI / resolution) ** self.intrinsic_dim)

    def _chart(self, x, r):
        center = x[:1]

        def forward(coords):
            return self._embed(np.mod(center + coords, TWO_PI))

        def inverse(ambient):
            theta = np.mod(np.arctan2(ambient[:, 1::2], ambient[:, 0::2]), TWO_PI)
            coords = _wrap_angle(theta - center)
            return coords, np.linalg.norm(coords, axis=-1) < r

        return Chart(self, center, r, forward, inverse, 1.0, max(1.0, r / (math.pi - r)), 0.0)

    def sample_uniform(self, n, rng):
        return TWO_PI * rng.random((n, self.intrinsic_dim))

    def geodesic_ball_volume(self, r):
        d = self.intrinsic_dim
        return math.pi ** (d / 2.0) / gamma_fn(d / 2.0 + 1.0) * r ** d


class FatCantorCurve(EmbeddedManifold):
    """
    胖康托曲线

    在 [0, π/2] 上用 Smith–Volterra–Cantor 方案（第 k 层从每段中间挖去长度 4^{-k}，
    按 π/2 缩放）构造保留集 C；在每个挖去的区间 (a, b) 上放置
    f(θ) = amp·(b−a)²·exp(−(b−a)²/((θ−a)(b−θ)))，
    曲线为极坐标图 r(θ)=1+f(θ)，θ∈[0, π/2]；其余部分 r(θ)=1−g(θ) 位于单位圆盘内部，
    g 是两端各阶导数为零的光滑鼓包，保证在 θ=π/2 与 θ=2π 处光滑闭合。
    """

    kind = "fatcantor"

    def __init__(self, depth=16, amp=0.05, closure=0.3, cdf_nodes=2 ** 14,
                 reference_resolution=4096, volume_nodes=2 ** 20):
        if depth < 1:
            raise ArgumentError(f"构造层数必须 ≥ 1: {depth}")
        if not 0 < amp < 0.5:
            raise ArgumentError(f"鼓包振幅必须在 (0, 0.5) 内: {amp}")
        if not 0 < closure < 1:
            raise ArgumentError(f"闭合段深度必须在 (0, 1) 内: {closure}")
        self.depth = int(depth)
        self.amp = float(amp)
        self.closure = float(closure)
        self.starts, self.ends = self._removed_intervals(self.depth)

        # 弧长表：θ_j → s_j，用于采样、测地距离和指数映射
        self.table_theta = np.linspace(0.0, TWO_PI, int(cdf_nodes) + 1)
        speed = self.speed(self.table_theta)
        steps = 0.5 * (speed[1:] + speed[:-1]) * np.diff(self.table_theta)
        self.table_arclength = np.concatenate([[0.0], np.cumsum(steps)])
        self.length = float(self.table_arclength[-1])

        fine = TWO_PI * np.arange(volume_nodes) / volume_nodes
        volume = float(np.sum(self.speed(fine)) * TWO_PI / volume_nodes)
        super().__init__(1, 2, 1, volume, self.length / 2.0, self.length / 2.0,
                         f"fatcantor:depth={self.depth},amp={self.amp:g}", reference_resolution)

    @staticmethod
    def _removed_intervals(depth):
        lo = np.array([0.0])
        hi = np.array([1.0])
        starts, ends = [], []
        for level in range(1, depth + 1):
            gap = 4.0 ** (-level)
            mid = 0.5 * (lo + hi)
            starts.append(mid - gap / 2.0)
            ends.append(mid + gap / 2.0)
            lo, hi = np.column_stack([lo, mid + gap / 2.0]).ravel(), np.column_stack([mid - gap / 2.0, hi]).ravel()
        starts = np.concatenate(starts) * (math.pi / 2.0)
        ends = np.concatenate(ends) * (math.pi / 2.0)
        order = np.argsort(starts)
        return starts[order], ends[order]

    @property
    def removed_intervals(self):
        return list(zip(self.starts.tolist(), self.ends.tolist()))

    @property
    def retained_measure(self):
        """保留集 C 的 Lebesgue 测度 (π/2)·(1 − Σ 挖去长度)"""
        removed = 0.5 * (1.0 - 2.0 ** (-self.depth))
        return (math.pi / 2.0) * (1.0 - removed)

    @property
    def retained_arclength(self):
        """C 上的弧长；C 上 f = f' = 0，|γ'| = 1，所以等于 C 的测度"""
        return self.retained_measure

    def _locate(self, theta):
        idx = np.searchsorted(self.starts, theta, side="right") - 1
        idx = np.clip(idx, 0, len(self.starts) - 1)
        a = self.starts[idx]
        b = self.ends[idx]
        inside = (theta > a) & (theta < b)
        return a, b, inside

    def bump(self, theta):
        """f(θ) 及其导数 f'(θ)，θ 在 [0, π/2] 之外时为 0；挖去区间中点处 f = amp·(b−a)²·e^{−4}"""
        theta = np.asarray(theta, dtype=float)
        a, b, inside = self._locate(theta)
        f = np.zeros_like(theta)
        df = np.zeros_like(theta)
        if np.any(inside):
            t = theta[inside]
            s2 = (b[inside] - a[inside]) ** 2
            q = (t - a[inside]) * (b[inside] - t)
            value = self.amp * s2 * np.exp(-s2 / q)
            f[inside] = value
            df[inside] = value * s2 * (a[inside] + b[inside] - 2.0 * t) / q ** 2
        return f, df

    def _closure(self, theta):
        span = 1.5 * math.pi
        u = (theta - math.pi / 2.0) / span
        g = np.zeros_like(theta)
        dg = np.zeros_like(theta)
        inside = (u > 0) & (u < 1)
        if np.any(inside):
            w = u[inside] * (1.0 - u[inside])
            value = self.closure * np.exp(4.0 - 1.0 / w)
            g[inside] = value
            dg[inside] = value * (1.0 - 2.0 * u[inside]) / w ** 2 / span
        return g, dg

    def radius(self, theta):
        """极径 r(θ) 及其导数"""
        theta = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        f, df = self.bump(theta)
        g, dg = self._closure(theta)
        return 1.0 + f - g, df - dg

    def speed(self, theta):
        r, dr = self.radius(theta)
        return np.sqrt(r * r + dr * dr)

    @property
    def is_curve(self):
        return True

    def curve_point(self, theta):
        theta = np.asarray(theta, dtype=float)
        r, _ = self.radius(theta)
        return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)

    def curve_velocity(self, theta):
        theta = np.asarray(theta, dtype=float)
        r, dr = self.radius(theta)
        c, s = np.cos(theta), np.sin(theta)
        return np.stack([dr * c - r * s, dr * s + r * c], axis=-1)

    def _check_domain(self, points):
        if np.any(points < -1e-12) or np.any(points > TWO_PI + 1e-12):
            raise DomainError("曲线参数必须在 [0, 2π] 内")

    def _embed(self, points):
        return self.curve_point(points[:, 0])

    def arclength_of(self, theta):
        return np.interp(np.mod(theta, TWO_PI), self.table_theta, self.table_arclength)

    def theta_of(self, s):
        return np.interp(np.mod(s, self.length), self.table_arclength, self.table_theta)

    def _geodesic(self, x, y):
        delta = np.mod(np.abs(self.arclength_of(x[..., 0]) - self.arclength_of(y[..., 0])), self.length)
        return np.minimum(delta, self.length - delta)

    def _exp(self, x, v):
        return self.theta_of(self.arclength_of(x[:, 0]) + v[:, 0])[:, None]

    def _log(self, x, y):
        delta = self.arclength_of(y[:, 0]) - self.arclength_of(x[:, 0])
        half = self.length / 2.0
        return (half - np.mod(half - delta, self.length))[:, None]

    def second_fundamental_sq(self, x, direction):
        theta = x[:, 0]
        h = 1e-6
        v = self.curve_velocity(theta)
        acc = (self.curve_velocity(theta + h) - self.curve_velocity(theta - h)) / (2.0 * h)
        cross = v[:, 0] * acc[:, 1] - v[:, 1] * acc[:, 0]
        curvature = cross / np.linalg.norm(v, axis=-1) ** 3
        return curvature ** 2

    def _quadrature(self, resolution):
        theta = TWO_PI * np.arange(resolution) / resolution
        return theta[:, None], self.speed(theta) * (TWO_PI / resolution)

    def _chart(self, x, r):
        center = x[:1]
        quarter = self.length / 4.0

        def forward(coords):
            return self._embed(self._exp(np.repeat(center, len(coords), axis=0), coords))

        def inverse(ambient):
            theta = np.mod(np.arctan2(ambient[:, 1], ambient[:, 0]), TWO_PI)[:, None]
            coords = self._log(np.repeat(center, len(theta), axis=0), theta)
            return coords, np.abs(coords[:, 0]) < r

        d1 = 1.0 if r <= quarter else r / (self.length / 2.0 - r)
        return Chart(self, center, r, forward, inverse, 1.0, d1, 0.0)

    def sample_uniform(self, n, rng):
        return self.theta_of(self.length * rng.random(n))[:, None]

    def geodesic_ball_volume(self, r):
        return 2.0 * r


def geometry_diagnostics(manifold, n_points=16, seed=0, probe_t=1e-2):
    """
    几何自检：随机点与方向上的弦长比残差，以及体积密度二次项系数

    Args:
        manifold: 流形
        n_points (int): 随机点个数
        seed (int): 随机种子
        probe_t (float): 有限差分估计二次系数所用的切向量长度

    Returns:
        dict: chord（每个 t 的最大残差及残差/t⁴）、volume（估计系数、理论值 −(d−1)/6、是否在 5% 内）
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    x = manifold.sample_uniform(n_points, rng)
    direction = manifold._project_tangent(x, rng.standard_normal((n_points, manifold.tangent_dim)))
    chord_rows = []
    for divisor in (8.0, 16.0, 32.0):
        t = manifold.injectivity_radius / divisor
        residual = np.atleast_1d(manifold.chord_ratio_check(x, direction, t))
        worst = float(np.max(residual))
        chord_rows.append({"t": t, "max_residual": worst, "scaled_residual": worst / t ** 4})

    unit = direction / manifold.tangent_norm(x, direction)[:, None]
    density = manifold.volume_density_in_normal_coords(x, probe_t * unit)
    estimate = float(np.mean((density - 1.0) / probe_t ** 2))
    expected = -(manifold.intrinsic_dim - 1) / 6.0
    if expected == 0:
        within = abs(estimate) < 1e-6
    else:
        within = abs(estimate - expected) <= 0.05 * abs(expected)
    return {
        "chord": chord_rows,
        "volume": {"estimate": estimate, "expected": expected, "within_tolerance": within},
    }


def _build_sphere(params, config):
    return Sphere(int(params.pop("d", 2)), config["quadrature"].get("sphere_resolution", 128))


def _build_circle(params, config):
    return Circle(config["quadrature"].get("curve_resolution", 4096))


def _build_torus(params, config):
    return FlatTorus(int(params.pop("d", 2)), config["quadrature"].get("torus_resolution", 64))


def _build_fatcantor(params, config):
    return FatCantorCurve(
        depth=int(params.pop("depth", 16)),
        amp=float(params.pop("amp", 0.05)),
        closure=float(params.pop("closure", 0.3)),
        cdf_nodes=int(config["sampling"].get("cdf_nodes", 2 ** 14)),
        reference_resolution=config["quadrature"].get("curve_resolution", 4096),
    )


def make_manifold(descriptor, config=None):
    """
    由描述符构造流形，如 sphere:d=2、circle、torus:d=2、fatcantor:depth=16,amp=0.05

    Args:
        descriptor (str): 流形描述符
        config (dict): 配置数据（求积分辨率等）

    Returns:
        EmbeddedManifold: 流形对象
    """
    from manifoldkde.utils import DEFAULT_CONFIG
    config = config or DEFAULT_CONFIG
    name, params = parse_descriptor(descriptor)
    builder = globals().get(f"_build_{name}")
    if builder is None:
        raise DescriptorError(name, "流形")
    manifold = builder(params, config)
    if params:
        raise DescriptorError(", ".join(sorted(params)), "流形参数")
    logger.debug(f"构造流形 {manifold.descriptor}")
    return manifold
