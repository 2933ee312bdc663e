"""
证据理论内核
基本概率分配、信任/似然函数及其模态表示、Born权重、广义Born规则与后验
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from quverse.config.settings import get_settings
from quverse.core.formula import Evaluator, atom, box, diamond, triangle
from quverse.core.kripke import (
    WEIGHT_SUM_TOL,
    KripkeModel,
    check_sva,
    is_serial,
    sva_label,
    subset_formula,
)
from quverse.core.proximity import ElementId, ProximitySpace, quanta_containing
from quverse.utils.exceptions import DegenerateNormalizerError, EvidenceError, NumericalError

logger = logging.getLogger(__name__)

Subset = FrozenSet[str]


@dataclass(frozen=True)
class BPA:
    """基本概率分配：质量稀疏存储，键为框架子集"""

    frame: Tuple[str, ...]
    masses: Dict[Subset, float] = field(default_factory=dict)

    def __post_init__(self):
        frame_set = frozenset(self.frame)
        if len(frame_set) != len(self.frame):
            raise EvidenceError("框架元素重复", details={"frame": list(self.frame)})
        cleaned: Dict[Subset, float] = {}
        for subset, mass in self.masses.items():
            subset = frozenset(subset)
            outside = subset - frame_set
            if outside:
                raise EvidenceError(f"焦元超出框架: {sorted(outside)}", details={"outside": sorted(outside)})
            if mass < 0 or math.isnan(mass):
                raise EvidenceError(f"质量为负: {mass}", details={"set": sorted(subset), "mass": mass})
            if not subset and mass > 0:
                raise EvidenceError("空集质量必须为0", details={"mass": mass})
            if mass > 0:
                cleaned[subset] = cleaned.get(subset, 0.0) + mass
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise EvidenceError(f"质量之和不为1: {total}", details={"sum": total})
        object.__setattr__(self, "masses", cleaned)

    def mass(self, subset: Iterable[str]) -> float:
        return self.masses.get(frozenset(subset), 0.0)

    def encode(self, subset: Iterable[str]) -> List[str]:
        """子集的规范编码：按框架顺序排列的标签列表"""
        members = frozenset(subset)
        return [x for x in self.frame if x in members]

    def to_dict(self) -> Dict:
        return {
            "frame": list(self.frame),
            "masses": [{"set": self.encode(s), "mass": self.masses[s]} for s in focal_elements(self)],
        }


def _check_subset(frame: Sequence[str], subset: Iterable[str]) -> Subset:
    subset = frozenset(subset)
    outside = subset - frozenset(frame)
    if outside:
        raise EvidenceError(f"子集超出框架: {sorted(outside)}", details={"outside": sorted(outside)})
    return subset


def subsets(frame: Sequence[str], cap: Optional[int] = None) -> Iterator[Subset]:
    """按 (大小, 框架顺序) 枚举幂集"""
    cap = cap if cap is not None else get_settings().numeric.powerset_cap
    if len(frame) > cap:
        raise EvidenceError(
            f"框架大小 {len(frame)} 超过幂集枚举上限 {cap}",
            details={"size": len(frame), "cap": cap}
        )
    for size in range(len(frame) + 1):
        for combo in itertools.combinations(frame, size):
            yield frozenset(combo)


def focal_elements(b: BPA) -> List[Subset]:
    """质量为正的子集，按规范编码排序"""
    order = {x: i for i, x in enumerate(b.frame)}
    return sorted(b.masses, key=lambda s: (len(s), sorted(order[x] for x in s)))


def bel(b: BPA, subset: Iterable[str]) -> float:
    """Bel(A) = Σ_{B⊆A} m(B)"""
    a = _check_subset(b.frame, subset)
    return math.fsum(m for s, m in b.masses.items() if s <= a)


def pl(b: BPA, subset: Iterable[str]) -> float:
    """Pl(A) = 1 - Bel(c(A))"""
    a = _check_subset(b.frame, subset)
    return 1.0 - bel(b, frozenset(b.frame) - a)


def bel_table(b: BPA, cap: Optional[int] = None) -> List[Dict]:
    """全部子集的 m / Bel / Pl 表"""
    return [
        {"set": b.encode(s), "mass": b.mass(s), "bel": bel(b, s), "pl": pl(b, s)}
        for s in subsets(b.frame, cap)
    ]


def point_mass_bpa(frame: Sequence[str], weights: Sequence[float]) -> BPA:
    """单点质量的贝叶斯型BPA"""
    if len(frame) != len(weights):
        raise EvidenceError("权重与框架长度不一致", details={"frame": len(frame), "weights": len(weights)})
    return BPA(frame=tuple(frame), masses={frozenset((x,)): float(w) for x, w in zip(frame, weights)})


# ---------------------------------------------------------------------------
# 模态表示
# ---------------------------------------------------------------------------

def _check_modal_model(model: KripkeModel, frame: Sequence[str]) -> KripkeModel:
    """校验前提，返回把框架标签并入原子词汇的模型"""
    if model.weights is None:
        raise EvidenceError("模型缺少权重函数")
    if not check_sva(model, frame):
        raise EvidenceError("模型不满足SVA", details={"frame": list(frame)})
    if not is_serial(model):
        lonely = [w for w in model.worlds if not model.successors(w)]
        raise EvidenceError("可达关系不是持续的(serial)", details={"worlds": lonely})
    return model.with_atoms(frame)


def bpa_from_model(model: KripkeModel, frame: Sequence[str]) -> BPA:
    """
    由带权SVA模型导出BPA

    世界i的后继标签集恰为A时，ω_i 计入 m(A)，即 □phi_A ∧ ⋀◇phi_x 在i处成立。

    Args:
        model: 持续、满足SVA、带权重的Kripke模型
        frame: 有序框架

    Returns:
        BPA: 满足不变量的基本概率分配
    """
    _check_modal_model(model, frame)
    masses: Dict[Subset, float] = {}
    for w in model.worlds:
        seen = frozenset(sva_label(model, s, frame) for s in model.successors(w))
        masses[seen] = masses.get(seen, 0.0) + model.weight(w)
    return BPA(frame=tuple(frame), masses=masses)


def _modal_sum(model: KripkeModel, evaluator: Evaluator, formula) -> float:
    return math.fsum(model.weight(w) for w in model.worlds if evaluator.evaluate(w, formula))


def bel_modal(model: KripkeModel, frame: Sequence[str], subset: Iterable[str]) -> float:
    """Σ ω_i v_i(□phi_A)"""
    model = _check_modal_model(model, frame)
    return _modal_sum(model, Evaluator(model), box(subset_formula(subset, frame)))


def pl_modal(model: KripkeModel, frame: Sequence[str], subset: Iterable[str]) -> float:
    """Σ ω_i v_i(◇phi_A)"""
    model = _check_modal_model(model, frame)
    return _modal_sum(model, Evaluator(model), diamond(subset_formula(subset, frame)))


def modal_table(model: KripkeModel, frame: Sequence[str], cap: Optional[int] = None) -> List[Dict]:
    """
    全部子集上的模态 Bel/Pl 表

    与 bel_table 行顺序相同；所有子集共用一个求值器，备忘表在子集之间复用。

    Args:
        model: 持续、满足SVA、带权重的Kripke模型
        frame: 有序框架
        cap: 幂集枚举上限，缺省取配置 numeric.powerset_cap

    Returns:
        List[Dict]: 每行含 set / bel / pl
    """
    model = _check_modal_model(model, frame)
    evaluator = Evaluator(model)
    rows = []
    for s in subsets(frame, cap):
        phi = subset_formula(s, frame)
        rows.append({
            "set": [x for x in frame if x in s],
            "bel": _modal_sum(model, evaluator, box(phi)),
            "pl": _modal_sum(model, evaluator, diamond(phi)),
        })
    return rows


# ---------------------------------------------------------------------------
# Born规则
# ---------------------------------------------------------------------------

def check_orthonormal(basis: np.ndarray, tolerance: Optional[float] = None) -> None:
    """列向量在容差内正交归一，否则抛出 NumericalError"""
    tolerance = get_settings().numeric.orthonormal_tol if tolerance is None else tolerance
    gram = basis.conj().T @ basis
    residual = float(np.max(np.abs(gram - np.eye(gram.shape[0])))) if gram.size else 0.0
    if residual > tolerance:
        raise NumericalError(f"基不正交归一，残差 {residual:.3e}", details={"residual": residual})


def check_unit(vector: np.ndarray, tolerance: Optional[float] = None) -> None:
    tolerance = get_settings().numeric.orthonormal_tol if tolerance is None else tolerance
    norm = float(np.linalg.norm(vector))
    if abs(norm - 1.0) > tolerance:
        raise NumericalError(f"状态不是单位向量，范数 {norm}", details={"norm": norm})


def pad(vector: Sequence[float], dim: int) -> np.ndarray:
    """按规范世界前缀做零填充嵌入"""
    vector = np.asarray(vector, dtype=float)
    if vector.shape[0] > dim:
        raise NumericalError(
            f"维数不匹配: {vector.shape[0]} > {dim}",
            details={"old": int(vector.shape[0]), "new": dim}
        )
    padded = np.zeros(dim)
    padded[:vector.shape[0]] = vector
    return padded


def inclusion(vector: Sequence[float], old_keys: Sequence[str], new_keys: Sequence[str]) -> np.ndarray:
    """
    ℋ^α 到 ℋ^(α+1) 的嵌入 ι

    Args:
        vector: 旧空间中的坐标（按 old_keys 顺序）
        old_keys: 旧阶段的世界键
        new_keys: 新阶段的世界键，须包含全部旧键

    Returns:
        np.ndarray: 新空间中的坐标，旧键之外为0
    """
    vector = np.asarray(vector, dtype=float)
    if vector.shape[0] != len(old_keys):
        raise NumericalError("向量维数与旧世界数不一致",
                             details={"dim": int(vector.shape[0]), "worlds": len(old_keys)})
    position = {k: i for i, k in enumerate(new_keys)}
    missing = [k for k in old_keys if k not in position]
    if missing:
        raise NumericalError("旧世界不在新阶段中", details={"missing": missing[:10]})
    result = np.zeros(len(new_keys))
    for value, key in zip(vector, old_keys):
        result[position[key]] = value
    return result


def born_weights(psi_prev: Sequence[float], basis: np.ndarray) -> np.ndarray:
    """
    Born权重 ω_n = |<ψ_n, ι(Ψ_α)>|²

    Args:
        psi_prev: 上一阶段的单位状态（维数 N <= N'）
        basis: N' x N' 的正交归一列向量

    Returns:
        np.ndarray: 按基向量顺序的权重
    """
    basis = np.asarray(basis, dtype=float)
    check_orthonormal(basis)
    psi = pad(psi_prev, basis.shape[0])
    check_unit(psi)
    weights = np.abs(basis.T @ psi) ** 2
    total = math.fsum(weights)
    if abs(total - 1.0) > get_settings().numeric.orthonormal_tol:
        raise NumericalError(f"Born权重之和不为1: {total}", details={"sum": total})
    return weights


def modal_born_masses(model: KripkeModel, weights: Sequence[float]) -> List[float]:
    """
    由三角公式在带权 M_U 上计算每个世界的质量

    世界n对应 △{n 的全部后继标签}（含自环），质量为满足该公式的世界权重之和。

    Args:
        model: 展开模型 M_U（SVA，标签即世界键）
        weights: 与世界顺序一致的权重

    Returns:
        List[float]: 每个世界的质量
    """
    weights = np.asarray(weights, dtype=float)
    total = math.fsum(weights)
    weighted = model.with_weights({w: float(v) / total for w, v in zip(model.worlds, weights)})
    evaluator = Evaluator(weighted)
    masses = []
    for n in weighted.worlds:
        formula = triangle(atom(m) for m in weighted.successors(n))
        masses.append(math.fsum(
            weighted.weight(j) for j in weighted.worlds if evaluator.evaluate(j, formula)
        ))
    return masses


def generalized_born(space: ProximitySpace, weights: Sequence[float], psi: ElementId) -> float:
    """
    广义Born规则 P*(ψ) = Bel(Q)，Q 为包含 ψ 的全部量子之并

    Args:
        space: 基上的邻近空间
        weights: 与载体顺序一致的 ω
        psi: 目标元素

    Returns:
        float: Q 上的权重之和
    """
    if len(weights) != len(space.carrier):
        raise EvidenceError("权重与载体长度不一致",
                            details={"carrier": len(space.carrier), "weights": len(weights)})
    region = quanta_containing(space, psi)
    return math.fsum(float(weights[space.index_of(x)]) for x in region)


# ---------------------------------------------------------------------------
# 后验
# ---------------------------------------------------------------------------

def likelihoods(
    psi_next: Sequence[float],
    old_basis: np.ndarray,
    old_keys: Sequence[str],
    new_keys: Sequence[str]
) -> np.ndarray:
    """L_i = |<Ψ_(α+1), ι(ψ_i)>|²，按旧基向量顺序"""
    old_basis = np.asarray(old_basis, dtype=float)
    psi_next = np.asarray(psi_next, dtype=float)
    return np.array([
        float(np.dot(psi_next, inclusion(old_basis[:, i], old_keys, new_keys)) ** 2)
        for i in range(old_basis.shape[1])
    ])


def check_prior(prior: Sequence[float]) -> np.ndarray:
    prior = np.asarray(prior, dtype=float)
    if np.any(prior < 0) or abs(math.fsum(prior) - 1.0) > get_settings().numeric.orthonormal_tol:
        raise EvidenceError("先验不是概率向量", details={"prior": prior.tolist()})
    return prior


def bayes_posterior(
    prior: Sequence[float],
    likelihood: Sequence[float],
    target: int,
    tolerance: Optional[float] = None
) -> float:
    """
    贝叶斯后验 P(ψ|Ψ_(α+1))

    归一化项为两项形式：P(Ψ|ψ)P(ψ) + (1 - P(ψ)) Σ_{ψ'⊥ψ} |<Ψ, ψ'>|²。

    Args:
        prior: 旧基上的先验
        likelihood: 各旧基向量的似然 L_i
        target: 目标在旧基中的位置

    Returns:
        float: 后验
    """
    tolerance = get_settings().numeric.eps_zero if tolerance is None else tolerance
    prior = check_prior(prior)
    likelihood = np.asarray(likelihood, dtype=float)
    if prior.shape != likelihood.shape:
        raise NumericalError("先验与似然长度不一致",
                             details={"prior": int(prior.shape[0]), "likelihood": int(likelihood.shape[0])})
    if not 0 <= target < prior.shape[0]:
        raise EvidenceError(f"目标位置越界: {target}", details={"target": target})

    p = float(prior[target])
    numerator = float(likelihood[target]) * p
    others = math.fsum(float(v) for i, v in enumerate(likelihood) if i != target)
    normalizer = numerator + (1.0 - p) * others
    if normalizer <= tolerance:
        raise DegenerateNormalizerError(
            f"归一化项退化: {normalizer}",
            details={"target": target, "normalizer": normalizer}
        )
    return numerator / normalizer


def belief_posterior(space: ProximitySpace, posteriors: Sequence[float], target: ElementId) -> float:
    """以贝叶斯后验为点质量，对包含目标的全部量子之并求和"""
    return generalized_born(space, posteriors, target)
