#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计工具 - 主入口文件
支持密度估计、收敛实验、划分数、可积性、覆盖数与几何自检
"""

import sys
import argparse
import traceback
import numpy as np
import pandas as pd
import pyfiglet
from colorama import Fore, Style, init
from tabulate import tabulate

from manifoldkde import __version__
from manifoldkde.analysis import (ExperimentPlan, bias_channel, grid_stability, l1_channel,
                                  run_experiment, variance_channel)
from manifoldkde.covering import CoveringProbe, non_vc_witness, packing_number
from manifoldkde.errors import ConfigError, KDEError
from manifoldkde.estimators import expected_kde, make_estimator
from manifoldkde.geometry import geometry_diagnostics, make_manifold
from manifoldkde.integrability import (cantor_threshold, critical_set, darboux_report,
                                       integrability_verdict)
from manifoldkde.kernels import make_kernel, partition_number
from manifoldkde.report import ResultWriter, RunManifest
from manifoldkde.sampling import make_density, sample
from manifoldkde.utils import (load_config, load_plan, parse_descriptor, parse_float_list, pretty_print,
                               resolve_workers, setup_logging)

# 初始化colorama
init()

# converge 子命令中与计划字段同名的命令行参数
PLAN_FLAGS = ("manifold", "density", "kernel", "estimator", "n_list", "eps", "eps_rule", "eps_c",
              "eps_beta", "replicates", "grid", "quad_resolution", "chart_radius", "use_index")


class KDEArgumentParser(argparse.ArgumentParser):
    """用法错误转为 ConfigError，由入口统一按退出码返回"""

    def error(self, message):
        raise ConfigError(f"命令行参数错误: {message}")


def show_banner():
    """显示程序横幅"""
    banner = pyfiglet.figlet_format("Manifold KDE", font="slant")
    print(f"{Fore.CYAN}{banner}{Style.RESET_ALL}", file=sys.stderr)
    print(f"{Fore.LIGHTBLACK_EX}流形上的核密度估计与收敛实验 v{__version__}{Style.RESET_ALL}", file=sys.stderr)
    print(file=sys.stderr)


def _int_list(text):
    return [int(v) for v in parse_float_list(text)]


def build_parser():
    """创建命令行参数解析器"""
    common = KDEArgumentParser(add_help=False)
    common.add_argument("-c", "--config", default="config.json", help="配置文件路径，默认为config.json")
    common.add_argument("--seed", type=int, default=None, help="基础随机种子，默认取配置中的 seed")
    common.add_argument("--workers", type=int, default=None, help="工作线程数")
    common.add_argument("--out", default=None, help="主输出文件路径")
    common.add_argument("--plan", default=None, help="扁平 JSON 实验计划，命令行参数覆盖其中同名值")

    parser = KDEArgumentParser(prog="kde", description="流形上的核密度估计工具")
    subparsers = parser.add_subparsers(dest="command", help="子命令")

    # 单次估计
    p = subparsers.add_parser("eval", parents=[common], help="采样并在网格上求值估计量")
    p.add_argument("--manifold", required=True, help="流形描述符，如 sphere:d=2")
    p.add_argument("--density", default="uniform", help="密度描述符")
    p.add_argument("--kernel", default="uniform:rho=1", help="核描述符")
    p.add_argument("--estimator", default="isotropic", choices=["isotropic", "chart", "pair", "lle"])
    p.add_argument("--eps", type=float, required=True, help="带宽 ε")
    p.add_argument("--n", type=int, required=True, help="样本数")
    p.add_argument("--grid", type=int, default=64, help="求值网格分辨率")
    p.add_argument("--chart-radius", type=float, default=None)
    p.add_argument("--use-index", action="store_true", help="紧支撑核使用网格索引")

    # 收敛实验
    p = subparsers.add_parser("converge", parents=[common], help="运行收敛实验并拟合速率")
    p.add_argument("--channel", default="full", choices=["full", "variance", "bias", "l1", "stability"])
    p.add_argument("--manifold")
    p.add_argument("--density")
    p.add_argument("--kernel")
    p.add_argument("--estimator", choices=["isotropic", "chart", "pair", "lle"])
    p.add_argument("--n-list", dest="n_list", type=_int_list, help="样本量列表，如 1000,4000,16000")
    p.add_argument("--eps", type=parse_float_list, help="带宽（单个或与 n 一一对应）")
    p.add_argument("--eps-rule", dest="eps_rule", choices=["power", "logpower"])
    p.add_argument("--eps-c", dest="eps_c", type=float)
    p.add_argument("--eps-beta", dest="eps_beta", type=float)
    p.add_argument("--replicates", type=int)
    p.add_argument("--grid", type=int, help="求值网格分辨率")
    p.add_argument("--quad-resolution", dest="quad_resolution", type=int, help="期望积分网格分辨率")
    p.add_argument("--chart-radius", dest="chart_radius", type=float)
    p.add_argument("--use-index", dest="use_index", action="store_true", default=None)

    # 划分数
    p = subparsers.add_parser("partition", parents=[common], help="计算核的划分数 N(γ)")
    p.add_argument("--kernel", required=True, help="核描述符")
    p.add_argument("--gamma", type=float, required=True, help="γ ∈ (0, 1)")
    p.add_argument("--dlip", type=float, default=None, help="D_lip，未给出时由 --manifold 估计")
    p.add_argument("--manifold", default=None, help="用于估计 D_lip 的流形")
    p.add_argument("--d", type=int, default=None, help="维数，默认取流形的内蕴维数或 1")
    p.add_argument("--budget", type=int, default=None, help="立方体总数上限")

    # 可积性
    p = subparsers.add_parser("integrability", parents=[common], help="曲线上的 Darboux 和与临界点集检测")
    p.add_argument("--manifold", default="fatcantor", help="曲线描述符")
    p.add_argument("--kernel", default="cantor", help="核描述符")
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--x", type=parse_float_list, default=None, help="嵌入空间中的点，默认原点")
    p.add_argument("--levels", type=int, default=12, help="细分层数 k，m = 2^k")
    p.add_argument("--threshold", type=float, default=None, help="判定阈值")
    p.add_argument("--critical-h", dest="critical_h", type=float, default=None,
                   help="同时检测临界点集，参数步长 h")

    # 覆盖数
    p = subparsers.add_parser("covering", parents=[common], help="L² 平移族的非 VC 见证与装填数")
    p.add_argument("--kernel", default="irregular", help="核描述符")
    p.add_argument("--deltas", type=parse_float_list, default=[0.01, 0.003], help="δ 列表")
    p.add_argument("--eps-metric", dest="eps_metric", type=parse_float_list, default=None,
                   help="装填数的度量半径列表")
    p.add_argument("--grid", type=int, default=None, help="候选平移点个数")
    p.add_argument("--nodes", type=int, default=None, help="L² 求积节点数")

    # 几何自检
    p = subparsers.add_parser("geomcheck", parents=[common], help="弦长比与体积密度自检")
    p.add_argument("--manifold", required=True, help="流形描述符")
    p.add_argument("--points", type=int, default=16, help="随机点个数")

    return parser


def _print_table(rows, headers="keys"):
    print(tabulate(rows, headers=headers, tablefmt="github", floatfmt=".6g"))


def _run_eval(args, config, manifest):
    """单次估计：在求值网格上输出估计值、真实密度与估计量的精确期望"""
    manifold = make_manifold(args.manifold, config)
    density = make_density(args.density, manifold)
    estimator = make_estimator(args.estimator, manifold, args.kernel, args.eps, args.chart_radius, args.use_index)
    samples = sample(density, args.n, manifest.seed, stream=(0, args.n),
                     min_acceptance=config["sampling"].get("min_acceptance", 1e-4))
    grid = manifold.quadrature_grid(args.grid)
    estimate = estimator.estimate(samples, grid.points)
    truth = density.evaluate(grid.points)
    expected = expected_kde(estimator, density, grid.points)
    abs_err = np.abs(estimate - truth)

    coords = manifold.parameter_coords(grid.points)
    frame = pd.DataFrame({"point_index": np.arange(len(grid))})
    for i in range(coords.shape[1]):
        frame[f"u{i}"] = coords[:, i]
    frame["estimate"] = estimate
    frame["exact_density"] = truth
    frame["expected_kde"] = expected

    writer = ResultWriter(config, manifest, args.out)
    path = writer.write_csv(frame, "eval.csv")
    _print_table([{
        "manifold": manifold.descriptor, "n": args.n, "eps": args.eps,
        "sup_err": float(abs_err.max()),
        "sup_var": float(np.max(np.abs(estimate - expected))),
        "l1_err": float(np.dot(grid.weights, abs_err)),
        "acceptance": samples.acceptance_rate,
    }])
    if estimator.warning:
        pretty_print(estimator.warning, "warning")
    pretty_print(f"结果已写入: {path}", "success")
    return 0


def _load_experiment(args, config, manifest):
    data = load_plan(args.plan) if args.plan else {}
    for key in PLAN_FLAGS:
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.seed is not None or "seed" not in data:
        data["seed"] = manifest.seed
    manifest.seed = data["seed"]
    manifest.arguments["plan"] = dict(data)
    return ExperimentPlan.from_dict(data)


def _write_extras(writer, path, frame, x_column, y_columns, title, xlabel):
    """按配置附加 gnuplot 数据、PNG 图与 Markdown 汇总"""
    report_config = writer.report_config
    chart = None
    if report_config.get("gnuplot", True):
        writer.write_gnuplot(path, frame[x_column], frame[y_columns[0]], title, xlabel, y_columns[0])
    if report_config.get("matplotlib", False):
        chart = writer.write_chart(path, frame[x_column], {c: frame[c] for c in y_columns}, title, xlabel, "误差")
    return chart


def _run_converge(args, config, manifest):
    """收敛实验"""
    plan = _load_experiment(args, config, manifest)
    workers = resolve_workers(args.workers, config)
    progress = bool(config.get("progress", True))
    writer = ResultWriter(config, manifest, args.out)
    warnings = []

    if args.channel == "full":
        report = run_experiment(plan, workers, config, progress)
        warnings = report.warnings
        frame = report.to_frame()
        table = report.medians()
        path = writer.write_csv(frame, "converge.csv", trailer=report.slopes())
        chart = _write_extras(writer, path, table, "n", ["sup_err", "l1_err", "sup_var"], "收敛", "n")
        _print_table(table.to_dict("records"))
        if writer.report_config.get("summary", True):
            writer.write_summary(path, "收敛实验汇总", [
                {"heading": "中位数", "columns": list(table.columns), "rows": table.values.tolist(), "chart": chart},
                {"heading": "斜率", "text": "```\n" + str(report.slopes()) + "\n```"},
            ], warnings)
    elif args.channel == "variance":
        result = variance_channel(plan, workers, config, progress)
        warnings = result["report"].warnings
        trailer = {"sup_var": {"vs_n": [result["slope"], result["intercept"], result["stderr"]]}}
        path = writer.write_csv(result["report"].to_frame(), "variance.csv", trailer=trailer)
        _print_table([{"slope": result["slope"], "stderr": result["stderr"]}])
    elif args.channel == "l1":
        result = l1_channel(plan, workers, config, progress)
        warnings = result["warnings"]
        trailer = {"l1_err": {"spearman": result["spearman"], "decreasing": result["decreasing"]}}
        path = writer.write_csv(result["report"].to_frame(), "l1.csv", trailer=trailer)
        _print_table([{"n": n, "l1_err": v} for n, v in zip(result["n"], result["l1"])])
    elif args.channel == "bias":
        manifold = make_manifold(plan.manifold, config)
        density = make_density(plan.density, manifold)
        kernel = make_kernel(plan.kernel, manifold.intrinsic_dim)
        eps_list = sorted(set(plan.eps_for(n) for n in plan.n_list))
        result = bias_channel(manifold, density, kernel, eps_list,
                              quadrature=manifold.quadrature_grid(plan.quad_resolution))
        frame = pd.DataFrame({"eps": result["eps"], "sup_bias": result["sup_bias"]})
        trailer = {"sup_bias": {"vs_eps": [result["slope"], None, result["stderr"]], "flat": result["flat"]}}
        path = writer.write_csv(frame, "bias.csv", trailer=trailer)
        _write_extras(writer, path, frame, "eps", ["sup_bias"], "偏差", "eps")
        _print_table(frame.to_dict("records"))
    else:
        result = grid_stability(plan, workers, config)
        path = writer.write_csv(pd.DataFrame([result]), "stability.csv")
        _print_table([result])
        if not result["stable"]:
            pretty_print(f"网格加倍后 sup_err 变化 {result['relative_change']:.1%}，超过 10%", "warning")

    for warning in warnings:
        pretty_print(warning, "warning")
    pretty_print(f"结果已写入: {path}", "success")
    return 0


def _run_partition(args, config, manifest):
    """划分数"""
    manifold = make_manifold(args.manifold, config) if args.manifold else None
    d = args.d or (manifold.intrinsic_dim if manifold else 1)
    dlip = args.dlip
    if dlip is None:
        if manifold is None:
            raise ConfigError("需要 --dlip 或 --manifold")
        dlip = manifold.estimate_dlip(seed=manifest.seed)
        pretty_print(f"估计 D_lip = {dlip:.6g}", "info")
    budget = args.budget or config["partition"].get("cube_budget", 2 ** 30)
    kernel = make_kernel(args.kernel, d)
    report = partition_number(kernel, args.gamma, dlip, d, budget)
    row = {"kernel": kernel.descriptor, "d": d, "dlip": dlip, **report.to_dict()}
    _print_table([row])
    if args.out:
        ResultWriter(config, manifest, args.out).write_csv(pd.DataFrame([row]), "partition.csv")
    return 0


def _run_integrability(args, config, manifest):
    """Darboux 和与可积性判断"""
    manifold = make_manifold(args.manifold, config)
    kernel = make_kernel(args.kernel, manifold.intrinsic_dim)
    center = np.zeros(manifold.ambient_dim) if args.x is None else np.asarray(args.x, dtype=float)
    if center.shape != (manifold.ambient_dim,):
        raise ConfigError(f"--x 需要 {manifold.ambient_dim} 个坐标")

    threshold = args.threshold
    if threshold is None:
        kernel_name, _ = parse_descriptor(args.kernel)
        if kernel_name == "cantor" and hasattr(manifold, "retained_arclength"):
            threshold = cantor_threshold(args.eps, manifold.retained_arclength)
        else:
            threshold = 0.01

    report = darboux_report(manifold, kernel, args.eps, center, args.levels)
    verdict = integrability_verdict(report, threshold)
    frame = pd.DataFrame(report.rows, columns=["level", "m", "upper", "lower", "gap"])
    writer = ResultWriter(config, manifest, args.out)
    path = writer.write_csv(frame, "integrability.csv",
                            trailer={"verdict": verdict.value, "threshold": threshold,
                                     "limit_gap": report.limit_gap})
    _print_table(report.rows[-4:])
    pretty_print(f"判断: {verdict.value}（阈值 {threshold:.6g}，外推间隙 {report.limit_gap:.6g}）", "special")

    if args.critical_h is not None:
        critical = critical_set(manifold, center, args.critical_h)
        rows = [{"h": h, "boundary_measure": m} for h, m in zip(critical.steps, critical.boundary_measures)]
        writer.write_csv(pd.DataFrame(rows), "critical.csv", path=writer.sibling(path, "_critical.csv"),
                         trailer={"verdict": critical.verdict.value, "cover_measure": critical.cover_measure})
        _print_table(rows)
        pretty_print(f"临界点集: {critical.verdict.value}", "special")

    pretty_print(f"结果已写入: {path}", "success")
    return 0


def _run_covering(args, config, manifest):
    """非 VC 见证与装填数"""
    kernel = make_kernel(args.kernel, 1)
    nodes = args.nodes or config["quadrature"].get("covering_nodes", 4000)
    probe = CoveringProbe(kernel, nodes)
    rows = non_vc_witness(probe, args.deltas)
    writer = ResultWriter(config, manifest, args.out)
    frame = pd.DataFrame(rows, columns=["delta", "a", "lhs", "rhs", "pass"])
    path = writer.write_csv(frame, "covering.csv")
    _print_table(rows)

    if args.eps_metric:
        packing = [packing_number(probe, eps, args.grid).to_dict() for eps in args.eps_metric]
        writer.write_csv(pd.DataFrame(packing), "packing.csv", path=writer.sibling(path, "_packing.csv"))
        _print_table(packing)

    failed = int((~frame["pass"]).sum())
    level = "success" if failed == 0 else "warning"
    pretty_print(f"见证不等式: {len(rows) - failed}/{len(rows)} 成立", level)
    pretty_print(f"结果已写入: {path}", "success")
    return 0


def _run_geomcheck(args, config, manifest):
    """几何自检"""
    manifold = make_manifold(args.manifold, config)
    result = geometry_diagnostics(manifold, args.points, manifest.seed)
    dlip = manifold.estimate_dlip(seed=manifest.seed)
    _print_table(result["chord"])
    _print_table([{**result["volume"], "dlip": dlip}])
    if args.out:
        frame = pd.DataFrame(result["chord"])
        ResultWriter(config, manifest, args.out).write_csv(frame, "geomcheck.csv",
                                                           trailer={"volume": result["volume"], "dlip": dlip})
    if not result["volume"]["within_tolerance"]:
        pretty_print("体积密度二次系数偏离 −(d−1)/6 超过 5%", "warning")
    return 0


def parse_and_dispatch(argv=None):
    """
    解析命令行并分派到子命令

    Args:
        argv (list): 命令行参数（不含程序名）

    Returns:
        int: 退出码，0 成功、1 配置错误、2 数值失败
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return 1
        config = load_config(args.config)
        setup_logging(config)
        seed = args.seed if args.seed is not None else config.get("seed", 42)
        arguments = {k: v for k, v in vars(args).items() if k not in ("config", "out")}
        manifest = RunManifest(args.command, config, seed, arguments)
        handler = globals()[f"_run_{args.command}"]
        return handler(args, config, manifest)
    except KDEError as e:
        pretty_print(f"{e.__class__.__name__}: {e}", "error")
        return e.exit_code
    except Exception as e:
        pretty_print(f"发生错误: {e}", "error")
        traceback.print_exc()
        return 1


def main():
    """主程序"""
    show_banner()
    return parse_and_dispatch(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
