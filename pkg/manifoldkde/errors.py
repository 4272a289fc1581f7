#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形核密度估计 - 异常定义模块

每个异常类携带 exit_code，命令行入口据此返回退出码：
1 表示配置或参数错误，2 表示数值失败。
"""


class KDEError(Exception):
    """所有异常的基类"""

    exit_code = 1


class ConfigError(KDEError):
    """配置、计划文件或命令行参数错误"""

    exit_code = 1


class DescriptorError(ConfigError):
    """无法识别的描述符字符串"""

    def __init__(self, token, kind="描述符"):
        self.token = token
        super().__init__(f"无法识别的{kind}: {token}")


class ArgumentError(KDEError):
    """违反前置条件的参数"""

    exit_code = 1


class DomainError(ArgumentError):
    """点不在参数域内，或半径超过注入半径"""


class UnsupportedError(ArgumentError):
    """当前流形不支持该操作"""


class NumericalError(KDEError):
    """数值计算失败"""

    exit_code = 2


class DegenerateKernelError(NumericalError):
    """核的归一化积分接近 0"""


class DivergentIntegralError(NumericalError):
    """尾部积分发散（α ≤ d）"""


class PartitionNotFoundError(NumericalError):
    """划分搜索超出立方体预算"""

    def __init__(self, message, last_tested=None):
        self.last_tested = last_tested
        super().__init__(message)


class ExperimentError(NumericalError):
    """实验单元中的子操作失败，附带 (n, replicate) 上下文"""

    def __init__(self, n, replicate, cause):
        self.n = n
        self.replicate = replicate
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
        super().__init__(f"n={n}, replicate={replicate}: {cause}")
