#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
流形上的核密度估计工具
"""

__version__ = '0.1.0'
__author__ = 'Your Name'
