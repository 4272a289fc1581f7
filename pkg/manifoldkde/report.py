#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 结果输出模块
支持 CSV（带运行清单注释头）、gnuplot 数据与脚本、PNG 图表和 Markdown/HTML 汇总
"""

import os
import json
import time
import logging
import datetime
import markdown
import pandas as pd
from jinja2 import Template

from manifoldkde import __version__
from manifoldkde.utils import ensure_dir_exists

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

SUMMARY_TEMPLATE = """# {{ title }}

## 运行信息

- **子命令**: {{ manifest.subcommand }}
- **基础种子**: {{ manifest.seed }}
- **版本**: {{ manifest.version }}
- **耗时**: {{ "%.2f"|format(manifest.duration) }} 秒
{% for section in sections %}
## {{ section.heading }}
{% if section.text %}
{{ section.text }}
{% endif %}
{% if section.columns %}
| {{ section.columns|join(" | ") }} |
| {% for _ in section.columns %}---- | {% endfor %}
{% for row in section.rows %}| {{ row|join(" | ") }} |
{% endfor %}
{% endif %}
{% if section.chart %}
![{{ section.heading }}]({{ section.chart }})
{% endif %}
{% endfor %}
{% if warnings %}
## 警告
{% for warning in warnings %}
- {{ warning }}
{% endfor %}
{% endif %}

---
生成时间: {{ now }}
"""

GNUPLOT_TEMPLATE = """set terminal pngcairo size 800,600
set output '{{ png }}'
set title '{{ title }}'
set xlabel '{{ xlabel }}'
set ylabel '{{ ylabel }}'
{% if logscale %}set logscale xy
{% endif %}set grid
plot '{{ dat }}' using 1:2 with linespoints title '{{ ylabel }}'
"""


class RunManifest:
    """一次运行的清单：子命令、解析后的配置、基础种子、版本、耗时与输出文件"""

    def __init__(self, subcommand, config, seed, arguments=None):
        self.subcommand = subcommand
        self.config = config
        self.seed = seed
        self.arguments = dict(arguments or {})
        self.version = __version__
        self.started = time.time()
        self.outputs = []

    @property
    def duration(self):
        return time.time() - self.started

    def to_dict(self):
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "arguments": self.arguments,
            "seed": self.seed,
            "version": self.version,
            "duration": round(self.duration, 3),
            "outputs": list(self.outputs),
        }

    def header_lines(self):
        manifest = json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, default=str)
        return [f"# kde {self.subcommand}", f"# manifest: {manifest}"]


class ResultWriter:
    """结果写出器"""

    def __init__(self, config, manifest, out=None):
        """
        初始化写出器

        Args:
            config (dict): 配置信息
            manifest (RunManifest): 运行清单
            out (str): 主输出文件路径，未指定时写到 output_path 下
        """
        self.config = config
        self.manifest = manifest
        self.out = out
        self.output_path = config.get("output_path", "./output")
        self.report_config = config.get("report", {})

    def resolve(self, name):
        """主输出文件名解析为完整路径，并确保目录存在"""
        path = self.out if self.out else os.path.join(self.output_path, name)
        ensure_dir_exists(os.path.dirname(path))
        return path

    def sibling(self, path, suffix):
        """与主输出同目录、同名但扩展名不同的附属文件"""
        root, _ = os.path.splitext(path)
        return root + suffix

    def write_csv(self, frame, name, trailer=None, path=None):
        """
        写 CSV：注释头 + 数据段 + 可选的 "# slopes:" 尾注

        Args:
            frame (pandas.DataFrame): 数据
            name (str): 默认文件名
            trailer (dict): 写在数据段之后的 JSON
            path (str): 显式路径（附属文件），默认由 name 解析

        Returns:
            str: 文件路径
        """
        path = path or self.resolve(name)
        self.manifest.outputs.append(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in self.manifest.header_lines():
                f.write(line + "\n")
            f.write(format_frame(frame))
            if trailer is not None:
                f.write("# slopes: " + json.dumps(trailer, sort_keys=True, default=_json_default) + "\n")
        logger.info(f"写出 CSV: {path}")
        return path

    def write_gnuplot(self, base_path, x, y, title, xlabel, ylabel, logscale=True):
        """
        两列 .dat 数据与 .gp 脚本

        Returns:
            tuple: (dat 路径, gp 路径)
        """
        dat_path = self.sibling(base_path, ".dat")
        gp_path = self.sibling(base_path, ".gp")
        with open(dat_path, "w", encoding="utf-8", newline="\n") as f:
            for line in self.manifest.header_lines():
                f.write(line + "\n")
            for a, b in zip(x, y):
                f.write(f"{FLOAT_FORMAT % a} {FLOAT_FORMAT % b}\n")
        script = Template(GNUPLOT_TEMPLATE).render(
            png=os.path.basename(self.sibling(base_path, "_gnuplot.png")),
            dat=os.path.basename(dat_path), title=title, xlabel=xlabel, ylabel=ylabel, logscale=logscale)
        with open(gp_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(script)
        self.manifest.outputs.extend([dat_path, gp_path])
        return dat_path, gp_path

    def write_chart(self, base_path, x, series, title, xlabel, ylabel, logscale=True):
        """
        matplotlib PNG 图（延迟导入，使用 Agg 后端）

        Args:
            series (dict): {标签: y 值列表}
        """
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        path = self.sibling(base_path, ".png")
        fig, ax = plt.subplots(figsize=(8, 6))
        for label, values in series.items():
            ax.plot(x, values, marker="o", label=label)
        if logscale:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.savefig(path, bbox_inches="tight", dpi=self.report_config.get("chart_dpi", 120))
        plt.close(fig)
        self.manifest.outputs.append(path)
        return path

    def write_summary(self, base_path, title, sections, warnings=None):
        """
        Markdown 汇总，并转换为 HTML

        Args:
            sections (list): 每项 {heading, text, columns, rows, chart}

        Returns:
            tuple: (md 路径, html 路径)
        """
        md_path = self.sibling(base_path, ".md")
        html_path = self.sibling(base_path, ".html")
        content = Template(SUMMARY_TEMPLATE).render(
            title=title,
            manifest=self.manifest,
            sections=[_section(s) for s in sections],
            warnings=warnings or [],
            now=datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S"),
        )
        with open(md_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(content)
        html = markdown.markdown(content, extensions=["tables"])
        with open(html_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{title}</title></head>"
                    f"<body>\n{html}\n</body></html>\n")
        self.manifest.outputs.extend([md_path, html_path])
        return md_path, html_path


def format_frame(frame):
    """数据段：逗号分隔、LF 行尾，浮点数 17 位有效数字"""
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="nan")


def _section(section):
    return {
        "heading": section.get("heading", ""),
        "text": section.get("text"),
        "columns": section.get("columns"),
        "rows": [[_cell(v) for v in row] for row in section.get("rows", [])],
        "chart": section.get("chart"),
    }


def _cell(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return value


def _json_default(value):
    if hasattr(value, "item"):
        return value.item()
    return str(value)


def read_csv(path):
    """读回 CSV 的数据段（跳过 # 注释行）"""
    return pd.read_csv(path, comment="#")
