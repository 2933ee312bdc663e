"""
数据模式定义模块
输入文件与输出记录
"""
