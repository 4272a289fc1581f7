"""
流形核密度估计工具测试包
"""
