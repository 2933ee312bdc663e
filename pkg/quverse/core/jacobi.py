"""
循环Jacobi特征值求解
对称实矩阵，固定的 (p, q) 扫描顺序，结果与平台和线程数无关
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np

from quverse.config.settings import get_settings
from quverse.utils.exceptions import NumericalError

logger = logging.getLogger(__name__)

# 非对角范数相对Frobenius范数的收敛阈值
CONVERGENCE_TOL = 1e-13
STAGNATION_TOL = 1e-10


def check_symmetric(matrix: np.ndarray, tolerance: Optional[float] = None) -> np.ndarray:
    """校验方阵对称，返回float副本"""
    tolerance = get_settings().numeric.symmetry_tol if tolerance is None else tolerance
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NumericalError(f"不是方阵: {a.shape}", details={"shape": list(a.shape)})
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > tolerance:
        raise NumericalError(f"矩阵不对称，偏差 {asym:.3e}", details={"asymmetry": asym})
    return (a + a.T) / 2.0


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """消去 a[p, q]：a <- J^T a J，v <- v J"""
    apq = a[p, q]
    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c

    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    a[p, q] = a[q, p] = 0.0

    vec_p = v[:, p].copy()
    vec_q = v[:, q].copy()
    v[:, p] = c * vec_p - s * vec_q
    v[:, q] = s * vec_p + c * vec_q


def jacobi_eigh(matrix: np.ndarray, max_sweeps: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    循环Jacobi对角化

    Args:
        matrix: 对称实矩阵
        max_sweeps: 最大扫描轮数，缺省取 numeric.jacobi_max_sweeps

    Returns:
        Tuple: (未排序的特征值, 特征向量列, 扫描轮数)
    """
    max_sweeps = get_settings().numeric.jacobi_max_sweeps if max_sweeps is None else max_sweeps
    a = check_symmetric(matrix)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if n <= 1 or scale == 0.0:
        return np.diag(a).copy(), v, 0

    previous = _off_norm(a)
    for sweep in range(1, max_sweeps + 1):
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _rotate(a, v, p, q)
        off = _off_norm(a)
        # 达到阈值，或已进入舍入误差平台
        if off <= CONVERGENCE_TOL * scale or (off <= STAGNATION_TOL * scale and off >= previous):
            logger.debug(f"Jacobi收敛 - 维数: {n}, 扫描轮数: {sweep}")
            return np.diag(a).copy(), v, sweep
        previous = off

    off = _off_norm(a)
    raise NumericalError(
        f"Jacobi在 {max_sweeps} 轮扫描后未收敛",
        details={"sweeps": max_sweeps, "off_norm": off, "dim": n}
    )
