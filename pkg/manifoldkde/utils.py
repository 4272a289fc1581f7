#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 工具函数模块
"""

import os
import re
import sys
import copy
import json
import logging
from datetime import datetime
from colorama import Fore, Style, init
from dotenv import load_dotenv

from manifoldkde.errors import ConfigError, DescriptorError

# 初始化colorama
init()

# 颜色常量
COLORS = {
    "info": Fore.BLUE,
    "success": Fore.GREEN,
    "warning": Fore.YELLOW,
    "error": Fore.RED,
    "debug": Fore.MAGENTA,
    "special": Fore.CYAN
}

DEFAULT_CONFIG = {
    "log_file": "./logs/kde.log",
    "log_level": "INFO",
    "output_path": "./output",
    "workers": None,
    "seed": 42,
    "progress": True,
    "quadrature": {
        "sphere_resolution": 128,
        "curve_resolution": 4096,
        "torus_resolution": 64,
        "covering_nodes": 4000
    },
    "partition": {
        "cube_budget": 2 ** 30
    },
    "sampling": {
        "cdf_nodes": 2 ** 14,
        "min_acceptance": 1e-4
    },
    "report": {
        "gnuplot": True,
        "matplotlib": False,
        "summary": True,
        "chart_dpi": 120
    }
}

# 描述符中键值对的分隔：逗号或分号，且其后紧跟 "键="
_PAIR_SPLIT = re.compile(r"[;,](?=\s*[A-Za-z_][A-Za-z0-9_]*\s*=)")


def _deep_merge(base, override):
    """把 override 递归合并进 base 的副本"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path="config.json"):
    """
    加载配置文件

    Args:
        config_path (str): 配置文件路径

    Returns:
        dict: 与默认配置合并后的配置数据
    """
    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            return _deep_merge(DEFAULT_CONFIG, json.load(f))
    except FileNotFoundError:
        pretty_print(f"配置文件 {config_path} 未找到，使用默认配置", "warning")
        return copy.deepcopy(DEFAULT_CONFIG)
    except json.JSONDecodeError:
        pretty_print(f"配置文件 {config_path} 格式错误，使用默认配置", "error")
        return copy.deepcopy(DEFAULT_CONFIG)


def load_plan(plan_path):
    """
    读取实验计划文件（扁平的键值 JSON）

    Args:
        plan_path (str): 计划文件路径

    Returns:
        dict: 计划数据
    """
    try:
        with open(plan_path, 'r', encoding='utf-8') as f:
            plan = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"计划文件 {plan_path} 未找到")
    except json.JSONDecodeError as e:
        raise ConfigError(f"计划文件 {plan_path} 格式错误: {e}")
    if not isinstance(plan, dict):
        raise ConfigError(f"计划文件 {plan_path} 必须是键值对象")
    for key, value in plan.items():
        if isinstance(value, dict):
            raise ConfigError(f"计划文件必须是扁平结构，键 {key} 的值是嵌套对象")
    return plan


def setup_logging(config):
    """
    设置日志记录

    Args:
        config (dict): 配置数据
    """
    log_file = config.get("log_file", "./logs/kde.log")
    log_level = config.get("log_level", "INFO")

    # 确保日志目录存在
    log_dir = os.path.dirname(log_file)
    if log_dir:
        ensure_dir_exists(log_dir)

    # 设置日志级别
    level_map = {
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
        "CRITICAL": logging.CRITICAL
    }

    log_level = level_map.get(str(log_level).upper(), logging.INFO)

    root = logging.getLogger('')
    for handler in list(root.handlers):
        root.removeHandler(handler)

    # 配置日志
    logging.basicConfig(
        filename=log_file,
        level=log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # 控制台处理器写 stderr，stdout 只留给结果
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(max(log_level, logging.WARNING))
    formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
    console.setFormatter(formatter)
    root.addHandler(console)


def pretty_print(message, level="info"):
    """
    格式化输出消息

    Args:
        message (str): 消息内容
        level (str): 消息级别 (info, success, warning, error, debug, special)
    """
    color = COLORS.get(level, Fore.WHITE)
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    print(f"{Fore.LIGHTBLACK_EX}[{timestamp}]{Style.RESET_ALL} {color}{message}{Style.RESET_ALL}", file=sys.stderr)


def ensure_dir_exists(directory):
    """
    确保目录存在，不存在则创建

    Args:
        directory (str): 目录路径
    """
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
        pretty_print(f"创建目录: {directory}", "info")


def resolve_workers(cli_value=None, config=None):
    """
    确定工作线程数

    优先级：命令行 > 配置文件 > 环境变量 KDE_WORKERS（可写在 .env 中）> CPU 核数

    Args:
        cli_value (int): 命令行 --workers 的值
        config (dict): 配置数据

    Returns:
        int: 工作线程数
    """
    if cli_value is not None:
        value = cli_value
    elif config and config.get("workers"):
        value = config["workers"]
    else:
        load_dotenv()
        env_value = os.environ.get("KDE_WORKERS")
        value = env_value if env_value else (os.cpu_count() or 1)
    try:
        value = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"无效的工作线程数: {value}")
    if value < 1:
        raise ConfigError(f"工作线程数必须 ≥ 1: {value}")
    return value


def _parse_value(text):
    """把描述符中的值解析为数字、数字列表或字符串"""
    parts = [p.strip() for p in text.split(",")]
    values = []
    for part in parts:
        try:
            number = float(part)
        except ValueError:
            return text.strip()
        values.append(int(number) if number.is_integer() and "." not in part and "e" not in part.lower() else number)
    return values[0] if len(values) == 1 else values


def parse_descriptor(descriptor):
    """
    解析描述符，如 sphere:d=2、step:c=2,-1;a=0,0.5;b=0.5,1

    Args:
        descriptor (str): 描述符字符串

    Returns:
        tuple: (名称, 参数字典)
    """
    if not isinstance(descriptor, str) or not descriptor.strip():
        raise DescriptorError(descriptor)
    name, _, body = descriptor.strip().partition(":")
    name = name.strip().lower()
    if not re.fullmatch(r"[a-z][a-z0-9_]*", name):
        raise DescriptorError(descriptor)

    params = {}
    if body.strip():
        for chunk in _PAIR_SPLIT.split(body):
            key, sep, value = chunk.partition("=")
            key = key.strip()
            if not sep or not key or not value.strip():
                raise DescriptorError(chunk.strip() or descriptor)
            params[key] = _parse_value(value)
    return name, params


def parse_float_list(text):
    """
    解析逗号分隔的数字列表

    Args:
        text (str): 如 "0.01,0.003"

    Returns:
        list: 浮点数列表
    """
    try:
        return [float(part) for part in str(text).split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"无效的数字列表: {text}")


def as_list(value):
    """标量转为单元素列表"""
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]
