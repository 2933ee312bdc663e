"""
码字嵌入与谱分解
树度量的根路径码字（l1/汉明）、码参数、欧氏距离矩阵 D_2、对称特征分解与优选基
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from quverse.config.settings import PairingRule, get_settings
from quverse.core.jacobi import check_symmetric, jacobi_eigh
from quverse.core.proximity import ProximitySpace
from quverse.core.unfolding import UnfoldTree
from quverse.schemas.records import CodeParameters
from quverse.utils.exceptions import NotATreeError, NumericalError

logger = logging.getLogger(__name__)

# Schoenberg计数使用的相对阈值
SCHOENBERG_REL_TOL = 1e-9
# 简并子空间内重新正交化时，轴向投影剩余范数相对最长投影列的下限
_AXIS_REL_NORM = 1e-6
# 字典序比较前的舍入位数
_LEX_DECIMALS = 10


@dataclass(frozen=True)
class Codeword:
    """二值码字：第e位为1当且仅当树边e位于根到owner的路径上"""

    owner: str
    bits: Tuple[int, ...]

    def hamming(self, other: "Codeword") -> int:
        return sum(a != b for a, b in zip(self.bits, other.bits))

    def as_array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int64)

    def text(self) -> str:
        return "".join(str(b) for b in self.bits)


def codewords_from_edges(
    nodes: Sequence[str],
    edges: Sequence[Tuple[str, str]],
    root: str
) -> List[Codeword]:
    """
    根路径码字

    Args:
        nodes: 节点序列（输出顺序）
        edges: 父 -> 子 的树边，其位置即码字的位序
        root: 根节点

    Returns:
        List[Codeword]: 与 nodes 顺序一致的码字
    """
    parent_edge: Dict[str, Tuple[str, int]] = {}
    for position, (parent, child) in enumerate(edges):
        if child in parent_edge or child == root:
            raise NotATreeError(f"节点有多个父节点: {child}", details={"node": child})
        parent_edge[child] = (parent, position)

    width = len(edges)
    paths: Dict[str, Tuple[int, ...]] = {root: ()}

    def path_of(node: str) -> Tuple[int, ...]:
        chain = []
        current = node
        while current not in paths:
            if current not in parent_edge:
                raise NotATreeError(f"节点不可从根到达: {node}", details={"node": node})
            parent, position = parent_edge[current]
            chain.append((current, position))
            current = parent
            if len(chain) > width:
                raise NotATreeError("树边中存在环", details={"node": node})
        prefix = paths[current]
        for child, position in reversed(chain):
            prefix = prefix + (position,)
            paths[child] = prefix
        return paths[node]

    words = []
    for node in nodes:
        bits = [0] * width
        for position in path_of(node):
            bits[position] = 1
        words.append(Codeword(owner=node, bits=tuple(bits)))
    return words


def codewords(tree: UnfoldTree) -> List[Codeword]:
    """展开树的码字，位序为树边的规范顺序"""
    return codewords_from_edges(tree.keys, tree.tree_edges(), tree.root.walk_key)


def codewords_for_space(space: ProximitySpace, root: Optional[str] = None) -> List[Codeword]:
    """树形邻近空间的码字，树边按自根的BFS顺序编号"""
    g = space.graph()
    if not space.carrier or not nx.is_tree(g):
        raise NotATreeError("邻近关系的非自反部分不是树", details={"nodes": len(space.carrier)})
    root = space.check(root) if root is not None else space.carrier[0]
    edges = list(nx.bfs_edges(g, root, sort_neighbors=lambda ns: sorted(ns, key=space.index_of)))
    return codewords_from_edges(space.carrier, edges, root)


def hamming_matrix(words: Sequence[Codeword]) -> np.ndarray:
    """两两汉明距离（精确整数）"""
    if not words:
        return np.zeros((0, 0), dtype=np.int64)
    w = np.array([c.bits for c in words], dtype=np.int64).reshape(len(words), -1)
    return w @ (1 - w).T + (1 - w) @ w.T


def code_params(words: Sequence[Codeword]) -> CodeParameters:
    """
    码参数 [n', N, e] 与最小距离 d_m

    Args:
        words: 至少两个码字

    Returns:
        CodeParameters: d_m = 0 时标记为退化输入
    """
    if len(words) < 2:
        raise NumericalError(f"码字数不足: {len(words)}", details={"count": len(words)})
    distances = hamming_matrix(words)
    off_diagonal = distances[~np.eye(len(words), dtype=bool)]
    d_m = int(off_diagonal.min())
    return CodeParameters(
        length=len(words[0].bits),
        count=len(words),
        min_distance=d_m,
        correction=max((d_m - 1) // 2, 0),
        degenerate=d_m == 0,
    )


def norm_check(words: Sequence[Codeword]) -> bool:
    """每个码字都满足 ||x||_2 <= ||x||_1"""
    for c in words:
        x = c.as_array().astype(float)
        if np.linalg.norm(x, 2) > np.linalg.norm(x, 1):
            return False
    return True


def distance_matrix_d2(words: Sequence[Codeword]) -> np.ndarray:
    """欧氏距离矩阵，二值码字下 (D_2)_ij = sqrt(Hamming(i, j))"""
    return np.sqrt(hamming_matrix(words).astype(float))


# ---------------------------------------------------------------------------
# 谱分解
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """降序特征值、符号规范化的正交归一特征向量列与简并标记"""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_flags: Tuple[Tuple[int, int], ...] = ()
    sweeps: int = 0

    @property
    def dim(self) -> int:
        return int(self.eigenvalues.shape[0])

    @property
    def radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.dim else 0.0

    @property
    def non_degenerate(self) -> bool:
        return not self.degeneracy_flags

    def positive_count(self, rel_tol: float = SCHOENBERG_REL_TOL) -> int:
        """大于 +rel_tol * 谱半径 的特征值个数"""
        return int(np.sum(self.eigenvalues > rel_tol * self.radius))

    def projector(self, k: int) -> np.ndarray:
        u = self.eigenvectors[:, k]
        return np.outer(u, u)

    def reconstruct(self) -> np.ndarray:
        """Σ λ_k u_k u_k^T"""
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T

    def residual(self, matrix: np.ndarray) -> float:
        """max_k ||A u_k - λ_k u_k||_inf"""
        if not self.dim:
            return 0.0
        diff = np.asarray(matrix, dtype=float) @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.max(np.abs(diff)))

    def orthonormality_error(self) -> float:
        if not self.dim:
            return 0.0
        gram = self.eigenvectors.T @ self.eigenvectors
        return float(np.max(np.abs(gram - np.eye(self.dim))))


def sign_normalize(vector: np.ndarray) -> np.ndarray:
    """使第一个最大模分量为正"""
    magnitudes = np.abs(vector)
    if not magnitudes.size or magnitudes.max() == 0.0:
        return vector
    first = int(np.argmax(magnitudes >= magnitudes.max() - 1e-12))
    return -vector if vector[first] < 0 else vector


def _degenerate_clusters(values: np.ndarray, eps: float) -> List[List[int]]:
    """降序特征值中相邻差不超过 eps 的连续段"""
    clusters: List[List[int]] = []
    for i in range(values.shape[0]):
        if clusters and abs(values[clusters[-1][-1]] - values[i]) <= eps:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def _reorthonormalize(block: np.ndarray, eps_zero: float = 0.0) -> np.ndarray:
    """
    用坐标轴在子空间上的投影按序做Gram-Schmidt，得到确定的正交归一基

    剩余范数低于 max(eps_zero, _AXIS_REL_NORM × 最长投影列范数) 的轴被跳过。
    """
    n, k = block.shape
    projector = block @ block.T
    # 投影矩阵幂等对称，第i列范数的平方等于对角元
    scale = float(np.sqrt(np.max(np.clip(np.diag(projector), 0.0, None))))
    cutoff = max(eps_zero, _AXIS_REL_NORM * scale)
    chosen: List[np.ndarray] = []
    for i in range(n):
        u = projector[:, i].copy()
        for _ in range(2):
            for c in chosen:
                u -= np.dot(c, u) * c
        norm = np.linalg.norm(u)
        if norm > cutoff:
            chosen.append(u / norm)
        if len(chosen) == k:
            break
    if len(chosen) < k:
        raise NumericalError(
            f"简并子空间重新正交化失败: 需要 {k} 个向量, 得到 {len(chosen)} 个",
            details={"dim": k, "found": len(chosen), "cutoff": cutoff}
        )
    return np.column_stack(chosen)


def eigh(matrix: np.ndarray, eps_degenerate: Optional[float] = None) -> Spectrum:
    """
    对称实矩阵的特征分解

    特征值降序排列；简并段内先重新正交化，再按符号规范化后的特征向量字典序降序排列。

    Args:
        matrix: 对称实矩阵（容差 numeric.symmetry_tol）
        eps_degenerate: 相对谱半径的简并阈值，缺省取 numeric.eps_degenerate

    Returns:
        Spectrum: 特征值、特征向量与简并标记
    """
    numeric = get_settings().numeric
    eps_rel = numeric.eps_degenerate if eps_degenerate is None else eps_degenerate
    a = check_symmetric(matrix)
    raw_values, raw_vectors, sweeps = jacobi_eigh(a)

    order = sorted(range(raw_values.shape[0]), key=lambda i: -raw_values[i])
    values = raw_values[order]
    vectors = raw_vectors[:, order]
    n = values.shape[0]

    radius = float(np.max(np.abs(values))) if n else 0.0
    eps = eps_rel * radius

    columns: List[np.ndarray] = [None] * n
    for cluster in _degenerate_clusters(values, eps):
        block = vectors[:, cluster]
        if len(cluster) > 1:
            block = _reorthonormalize(block, numeric.eps_zero)
        normalized = [sign_normalize(block[:, j]) for j in range(block.shape[1])]
        if len(cluster) > 1:
            normalized.sort(key=lambda v: tuple(np.round(v, _LEX_DECIMALS)), reverse=True)
        for position, vec in zip(cluster, normalized):
            columns[position] = vec

    eigenvectors = np.column_stack(columns) if n else np.zeros((0, 0))
    flags = tuple(
        (i, j) for i in range(n) for j in range(i + 1, n) if abs(values[i] - values[j]) <= eps
    )
    if flags:
        logger.warning(f"谱存在简并 - 维数: {n}, 简并对数: {len(flags)}")
    return Spectrum(eigenvalues=values, eigenvectors=eigenvectors, degeneracy_flags=flags, sweeps=sweeps)


# ---------------------------------------------------------------------------
# 优选基
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreferredBasis:
    """
    优选基 b^α：世界与本征向量的双射

    assignment[w] 为世界 w 配对的特征向量列号；matrix 的第i列为第i个世界配对的向量。
    """

    worlds: Tuple[str, ...]
    spectrum: Spectrum
    assignment: Dict[str, int] = field(default_factory=dict)
    rule: PairingRule = PairingRule.POSITIONAL

    @property
    def matrix(self) -> np.ndarray:
        cols = [self.assignment[w] for w in self.worlds]
        return self.spectrum.eigenvectors[:, cols]

    def vector(self, world: str) -> np.ndarray:
        return self.spectrum.eigenvectors[:, self.assignment[world]]

    def eigenvalue(self, world: str) -> float:
        return float(self.spectrum.eigenvalues[self.assignment[world]])

    def sigma(self) -> np.ndarray:
        """自检算子 Σ^α = Σ λ_i P_i"""
        return self.spectrum.reconstruct()


def preferred_basis(
    worlds: Sequence[str],
    spectrum: Spectrum,
    rule: Optional[PairingRule] = None
) -> PreferredBasis:
    """
    构造世界与本征向量的配对

    Args:
        worlds: 规范BFS顺序的世界（点在最前）
        spectrum: 本阶段 D_2 的谱
        rule: positional（第i个世界配第i个特征向量）或 max-component
              （按特征向量顺序，贪心选取分量模最大的未配对世界，平局取序号小者）

    Returns:
        PreferredBasis: 优选基
    """
    rule = rule or get_settings().selection.pairing_rule
    worlds = tuple(worlds)
    if len(worlds) != spectrum.dim:
        raise NumericalError(
            f"维数不匹配: {len(worlds)} 个世界, {spectrum.dim} 个特征向量",
            details={"worlds": len(worlds), "dim": spectrum.dim}
        )

    if rule == PairingRule.POSITIONAL:
        assignment = {w: k for k, w in enumerate(worlds)}
    else:
        free = list(range(len(worlds)))
        assignment = {}
        for k in range(spectrum.dim):
            magnitudes = np.abs(spectrum.eigenvectors[free, k])
            best = float(magnitudes.max())
            pick = free[int(np.argmax(magnitudes >= best - 1e-12))]
            assignment[worlds[pick]] = k
            free.remove(pick)
    return PreferredBasis(worlds=worlds, spectrum=spectrum, assignment=assignment, rule=rule)
