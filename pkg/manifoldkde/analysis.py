#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 收敛分析模块

按 (n, ε, 重复) 扫描实验单元，计算 sup/L1/方差/偏差误差，并在双对数坐标下拟合斜率。
"""

import sys
import math
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
import numpy as np
import pandas as pd
from scipy.stats import spearmanr
from tqdm import tqdm

from manifoldkde.errors import ArgumentError, ConfigError, ExperimentError, KDEError, NumericalError
from manifoldkde.estimators import IsotropicEstimator, make_estimator
from manifoldkde.geometry import make_manifold
from manifoldkde.kernels import normalize
from manifoldkde.sampling import make_density, sample
from manifoldkde.utils import DEFAULT_CONFIG, as_list

logger = logging.getLogger(__name__)

ROW_COLUMNS = ["n", "eps", "replicate", "sup_err", "l1_err", "sup_var", "sup_bias"]
CHANNELS = ["sup_err", "l1_err", "sup_var", "sup_bias"]

# 三角分解断言的容差
TRIANGLE_TOL = 1e-12


class ExperimentPlan:
    """实验计划"""

    FIELDS = ("manifold", "density", "kernel", "estimator", "n_list", "eps", "eps_rule", "eps_c",
              "eps_beta", "replicates", "grid", "quad_resolution", "seed", "chart_radius", "use_index")

    def __init__(self, manifold, density, kernel, n_list, estimator="isotropic", eps=None,
                 eps_rule=None, eps_c=1.0, eps_beta=None, replicates=1, grid=None,
                 quad_resolution=None, seed=42, chart_radius=None, use_index=False):
        self.manifold = manifold
        self.density = density
        self.kernel = kernel
        self.estimator = estimator
        self.n_list = [int(n) for n in as_list(n_list)]
        self.eps = eps
        self.eps_rule = eps_rule
        self.eps_c = float(eps_c)
        self.eps_beta = eps_beta
        self.replicates = int(replicates)
        self.grid = grid
        self.quad_resolution = quad_resolution
        self.seed = int(seed)
        self.chart_radius = chart_radius
        self.use_index = bool(use_index)
        self._validate()

    @classmethod
    def from_dict(cls, data):
        """
        由扁平键值字典构造

        Args:
            data (dict): 计划数据

        Returns:
            ExperimentPlan: 实验计划
        """
        unknown = sorted(set(data) - set(cls.FIELDS))
        if unknown:
            raise ConfigError(f"计划包含未知字段: {', '.join(unknown)}")
        for key in ("manifold", "density", "kernel", "n_list"):
            if data.get(key) is None:
                raise ConfigError(f"计划缺少字段: {key}")
        return cls(**{k: v for k, v in data.items() if v is not None})

    def to_dict(self):
        return {key: getattr(self, key) for key in self.FIELDS}

    def _validate(self):
        if not self.n_list or any(n < 1 for n in self.n_list):
            raise ConfigError("n_list 必须是正整数列表")
        if any(b <= a for a, b in zip(self.n_list[:-1], self.n_list[1:])):
            raise ConfigError(f"n_list 必须严格递增: {self.n_list}")
        if self.replicates < 1:
            raise ConfigError(f"replicates 必须 ≥ 1: {self.replicates}")
        if self.eps is None and self.eps_rule is None:
            raise ConfigError("计划需要 eps 或 eps_rule")
        if self.eps is not None:
            values = as_list(self.eps)
            if len(values) not in (1, len(self.n_list)):
                raise ConfigError("eps 列表长度必须为 1 或与 n_list 相同")
            if any(float(v) <= 0 for v in values):
                raise ConfigError("eps 必须为正")
        else:
            if self.eps_rule not in ("power", "logpower"):
                raise ConfigError(f"未知的带宽规则: {self.eps_rule}")
            if self.eps_beta is None or float(self.eps_beta) <= 0:
                raise ConfigError("带宽规则要求 eps_beta > 0")
            if self.eps_c <= 0:
                raise ConfigError("带宽规则要求 eps_c > 0")
        if self.estimator not in ("isotropic", "chart", "pair", "lle"):
            raise ConfigError(f"未知的估计器类型: {self.estimator}")

    def eps_for(self, n):
        """第 n 个样本量对应的带宽 ε_n"""
        if self.eps is not None:
            values = as_list(self.eps)
            if len(values) == 1:
                return float(values[0])
            return float(values[self.n_list.index(n)])
        beta = float(self.eps_beta)
        if self.eps_rule == "power":
            return self.eps_c * n ** (-beta)
        if n < 2:
            raise ConfigError("logpower 规则要求 n ≥ 2")
        return self.eps_c * (math.log(n) / n) ** beta

    @property
    def fixed_eps(self):
        return len(set(self.eps_for(n) for n in self.n_list)) == 1


class RateReport:
    """实验结果：逐行误差与拟合斜率"""

    def __init__(self, plan, rows, grid_resolution, warnings=None):
        self.plan = plan
        self.rows = sorted(rows, key=lambda row: (row["n"], row["eps"], row["replicate"]))
        self.grid_resolution = grid_resolution
        self.warnings = list(warnings or [])

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=ROW_COLUMNS)

    def medians(self):
        return summarize(self)

    def slopes(self):
        """
        各误差通道对 n 与对 ε 的中位数斜率

        Returns:
            dict: {通道: {"vs_n": [slope, intercept, stderr] 或 None, "vs_eps": ...}}
        """
        table = self.medians()
        result = {}
        for channel in CHANNELS:
            entry = {}
            for axis, column in (("vs_n", "n"), ("vs_eps", "eps")):
                pairs = list(zip(table[column].tolist(), table[channel].tolist()))
                try:
                    entry[axis] = list(fit_rate(pairs))
                except ArgumentError:
                    entry[axis] = None
            result[channel] = entry
        return result


def summarize(report):
    """按 (n, ε) 取重复的中位数"""
    frame = report.to_frame()
    grouped = frame.groupby(["n", "eps"], sort=True)[CHANNELS].median().reset_index()
    return grouped


def fit_rate(pairs):
    """
    对 (scale, error) 在双对数坐标下做普通最小二乘

    Args:
        pairs (list): (scale, error) 对，至少 3 个，且全部为正

    Returns:
        tuple: (slope, intercept, stderr)
    """
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ArgumentError(f"拟合至少需要 3 个点，实际 {len(pairs)} 个")
    data = np.asarray(pairs, dtype=float)
    if not np.all(np.isfinite(data)) or np.any(data <= 0):
        raise ArgumentError("拟合数据必须为正的有限值")
    x = np.log(data[:, 0])
    y = np.log(data[:, 1])
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx == 0:
        raise ArgumentError("拟合的自变量全部相同")
    slope = float(np.dot(xc, y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    residual = y - (intercept + slope * x)
    dof = len(x) - 2
    stderr = math.sqrt(float(np.dot(residual, residual)) / dof / sxx) if dof > 0 else 0.0
    return slope, intercept, stderr


def sup_deviation(values, reference):
    """网格上的 sup |values − reference|"""
    return float(np.max(np.abs(np.asarray(values) - np.asarray(reference))))


class _Context:
    """一次实验共享的只读对象"""

    def __init__(self, plan, config, grid_resolution=None):
        config = config or DEFAULT_CONFIG
        self.plan = plan
        self.config = config
        self.manifold = make_manifold(plan.manifold, config)
        self.density = make_density(plan.density, self.manifold)
        self.eval_grid = self.manifold.quadrature_grid(grid_resolution or plan.grid)
        self.quad_grid = self.manifold.quadrature_grid(plan.quad_resolution)
        self.truth = self.density.evaluate(self.eval_grid.points)
        self.min_acceptance = config["sampling"].get("min_acceptance", 1e-4)
        self.estimators = {}
        self.expected = {}
        self.sup_bias = {}
        self.warnings = []

    def prepare(self, eps):
        if eps in self.estimators:
            return
        estimator = make_estimator(self.plan.estimator, self.manifold, self.plan.kernel, eps,
                                   self.plan.chart_radius, self.plan.use_index)
        if estimator.warning:
            self.warnings.append(estimator.warning)
        expected = estimator.expected(self.density, self.eval_grid.points, self.quad_grid)
        self.estimators[eps] = estimator
        self.expected[eps] = expected
        self.sup_bias[eps] = sup_deviation(expected, self.truth)

    def run_cell(self, n, eps, replicate):
        samples = sample(self.density, n, self.plan.seed, stream=(replicate, n),
                         min_acceptance=self.min_acceptance)
        estimate = self.estimators[eps].estimate(samples, self.eval_grid.points)
        error = estimate - self.truth
        sup_err = float(np.max(np.abs(error)))
        l1_err = float(np.dot(self.eval_grid.weights, np.abs(error)))
        sup_var = sup_deviation(estimate, self.expected[eps])
        sup_bias = self.sup_bias[eps]
        if sup_err > sup_var + sup_bias + TRIANGLE_TOL * max(1.0, sup_err):
            raise NumericalError(f"三角分解不成立: sup_err={sup_err!r} > sup_var+sup_bias={sup_var + sup_bias!r}")
        return {"n": n, "eps": eps, "replicate": replicate, "sup_err": sup_err,
                "l1_err": l1_err, "sup_var": sup_var, "sup_bias": sup_bias}


def run_experiment(plan, workers=1, config=None, progress=False, grid_resolution=None):
    """
    运行实验计划

    Args:
        plan (ExperimentPlan): 实验计划
        workers (int): 工作线程数
        config (dict): 配置数据
        progress (bool): 是否在 stderr 上显示单元计数
        grid_resolution (int): 覆盖计划中的求值网格分辨率

    Returns:
        RateReport: 实验报告
    """
    context = _Context(plan, config, grid_resolution)
    for n in plan.n_list:
        eps = plan.eps_for(n)
        try:
            context.prepare(eps)
        except KDEError as e:
            raise ExperimentError(n, None, e)

    cells = [(n, plan.eps_for(n), r) for n in plan.n_list for r in range(plan.replicates)]
    rows = {}
    with tqdm(total=len(cells), file=sys.stderr, disable=not progress, desc="单元") as bar:
        with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
            futures = {pool.submit(context.run_cell, *cell): cell for cell in cells}
            for future in as_completed(futures):
                n, eps, replicate = futures[future]
                try:
                    rows[(n, eps, replicate)] = future.result()
                except Exception as e:
                    for pending in futures:
                        pending.cancel()
                    raise ExperimentError(n, replicate, e)
                bar.update(1)

    logger.info(f"实验完成: {len(cells)} 个单元，{plan.manifold} / {plan.kernel} / {plan.density}")
    return RateReport(plan, [rows[key] for key in sorted(rows)], context.eval_grid.resolution,
                      context.warnings)


def variance_channel(plan, workers=1, config=None, progress=False):
    """
    固定 ε 下 sup|K_n − E K_n| 对 n 的斜率（理论 −1/2，相差对数因子）

    Returns:
        dict: slope、stderr、medians 与 report
    """
    if not plan.fixed_eps:
        raise ConfigError("方差通道要求各 n 使用同一个 ε")
    report = run_experiment(plan, workers, config, progress)
    table = report.medians()
    slope, intercept, stderr = fit_rate(zip(table["n"], table["sup_var"]))
    return {"slope": slope, "intercept": intercept, "stderr": stderr,
            "medians": table["sup_var"].tolist(), "report": report}


def bias_channel(manifold, density, kernel, eps_list, eval_points=None, quadrature=None, flat_level=1e-3):
    """
    sup|E K_n − P| 对 ε 的斜率

    Args:
        manifold: 流形
        density (DensityModel): 密度
        kernel (IsotropicKernel): 紧支撑核（会被归一化）
        eps_list (list): 带宽列表
        eval_points: 求值点，默认 64 分辨率网格
        quadrature (QuadratureGrid): 期望积分网格，默认参考分辨率
        flat_level (float): 所有偏差都低于该值时视为平坦通道，跳过拟合

    Returns:
        dict: eps、sup_bias、slope（平坦时为 None）、flat
    """
    if not kernel.compact:
        raise ConfigError("偏差通道要求紧支撑核")
    cap = manifold.injectivity_radius / 2.0
    for eps in eps_list:
        if eps * kernel.support_radius > cap:
            raise ConfigError(f"ε·ρ = {eps * kernel.support_radius:g} 超过上限 inj/2 = {cap:g}")
    d = manifold.intrinsic_dim
    kernel = normalize(kernel, d)
    if eval_points is None:
        eval_points = manifold.quadrature_grid(64).points
    if quadrature is None:
        quadrature = manifold.quadrature_grid()
    truth = density.evaluate(eval_points)
    biases = []
    for eps in eps_list:
        estimator = IsotropicEstimator(manifold, kernel, eps)
        biases.append(sup_deviation(estimator.expected(density, eval_points, quadrature), truth))
    flat = all(b < flat_level for b in biases)
    result = {"eps": list(eps_list), "sup_bias": biases, "flat": flat, "slope": None, "stderr": None}
    if not flat:
        slope, _, stderr = fit_rate(zip(eps_list, biases))
        result["slope"] = slope
        result["stderr"] = stderr
    return result


def check_schedule(plan, alpha=None, d=None):
    """
    带宽条件：log n/(nε^d)（各向同性核 L∞/L1）与 log n/(nε^{2α−d})（配对核 L1）

    Returns:
        tuple: (逐 n 的条件值列表, 警告列表)
    """
    entries = []
    for n in plan.n_list:
        eps = plan.eps_for(n)
        entry = {"n": n, "eps": eps, "variance_term": math.log(n) / (n * eps ** d)}
        if alpha is not None:
            entry["l1_term"] = math.log(n) / (n * eps ** (2.0 * alpha - d))
        entries.append(entry)
    warnings = []
    key = "l1_term" if alpha is not None else "variance_term"
    if len(entries) >= 2 and entries[-1][key] >= entries[0][key]:
        message = f"带宽序列不满足 {key} → 0 的趋势: {entries[0][key]:.3g} → {entries[-1][key]:.3g}"
        logger.warning(message)
        warnings.append(message)
    return entries, warnings


def l1_channel(plan, workers=1, config=None, progress=False):
    """
    L1 误差随 n 的单调下降趋势（Spearman 秩相关），不拟合速率

    Returns:
        dict: n、l1 中位数、spearman、decreasing、schedule、warnings、report
    """
    context_manifold = make_manifold(plan.manifold, config or DEFAULT_CONFIG)
    d = context_manifold.intrinsic_dim
    alpha = d if plan.estimator == "pair" else None
    schedule, warnings = check_schedule(plan, alpha, d)
    report = run_experiment(plan, workers, config, progress)
    report.warnings.extend(warnings)
    table = report.medians()
    l1 = table["l1_err"].tolist()
    rho = None
    if len(l1) >= 2:
        rho = float(spearmanr(table["n"].tolist(), l1)[0])
    decreasing = all(b < a for a, b in zip(l1[:-1], l1[1:]))
    return {"n": table["n"].tolist(), "l1": l1, "spearman": rho, "decreasing": decreasing,
            "schedule": schedule, "warnings": report.warnings, "report": report}


def grid_stability(plan, workers=1, config=None):
    """
    求值网格加倍后 sup_err 的相对变化（第一个 n、第一个重复）

    Returns:
        dict: base、doubled、relative_change、stable（< 10%）
    """
    first = plan.n_list[0]
    single = ExperimentPlan.from_dict({**plan.to_dict(), "n_list": [first], "eps": plan.eps_for(first),
                                       "eps_rule": None, "replicates": 1})
    base_manifold = make_manifold(plan.manifold, config or DEFAULT_CONFIG)
    base_resolution = plan.grid or base_manifold.reference_resolution
    base = run_experiment(single, workers, config, grid_resolution=base_resolution).rows[0]["sup_err"]
    doubled = run_experiment(single, workers, config, grid_resolution=2 * base_resolution).rows[0]["sup_err"]
    change = abs(doubled - base) / base if base > 0 else 0.0
    return {"base": base, "doubled": doubled, "relative_change": change, "stable": change < 0.1}
