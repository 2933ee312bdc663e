"""
输出记录的数据模式
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class CodeParameters(BaseModel):
    """码字参数 [n', N, e]"""
    length: int = Field(..., description="码字长度 n'")
    count: int = Field(..., description="码字个数 N")
    min_distance: int = Field(..., description="最小汉明距离 d_m")
    correction: int = Field(..., description="纠错能力 e = floor((d_m - 1) / 2)")
    degenerate: bool = Field(False, description="存在重复码字 (d_m = 0)")


class StageRecord(BaseModel):
    """运行轨迹中的单阶段记录"""
    alpha: int
    n: int = Field(..., description="维数 N = Z_U(alpha)")
    z_u: int
    selected_world: str
    selected_weight: float
    weights: List[float]
    psi: List[float]
    eigenvalues: List[float]
    degeneracy_flags: List[List[int]] = Field(default_factory=list)
    non_degenerate: bool = True
    schoenberg_positive: int = Field(..., description="大于 +1e-9 谱半径的特征值个数")
    schoenberg_ok: bool
    bisimulation_ok: bool
    p_continuous: bool
    nesting_ok: bool
    born_identity_residual: float
    weight_sum: float
    code: Optional[CodeParameters] = None


class BisimulationReport(BaseModel):
    """互模拟报告"""
    success: bool
    strict: bool = False
    pairs: List[List[str]]
    violations: List[Dict[str, Any]] = Field(default_factory=list)
    maximal_pairs: Optional[List[List[str]]] = Field(None, description="最大互模拟（可选）")


class PredictionReport(BaseModel):
    """预测报告：Born权重与广义Born规则"""
    alpha: int
    worlds: List[str]
    weights: List[float]
    generalized: List[float]


class ExplanationReport(BaseModel):
    """解释报告：旧基上的贝叶斯后验与信任后验"""
    alpha: int
    old_worlds: List[str]
    prior: List[float]
    likelihoods: List[float]
    likelihood_sum: float
    posteriors: List[float]
    belief_posteriors: List[float]
