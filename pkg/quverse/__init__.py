"""
quverse: 阶段展开、互模拟与谱选择模拟器
"""

__version__ = "1.0.0"
