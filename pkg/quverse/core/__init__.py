"""
核心算法模块
"""
