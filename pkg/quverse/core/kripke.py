"""
有限Kripke结构
世界、可达关系、赋值与可选权重函数，以及SVA检查和子集命题
"""
import logging
import math
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from quverse.core.formula import Formula, atom, conj, disj, neg
from quverse.utils.exceptions import EvidenceError, ModelValidationError, UnknownWorldError

logger = logging.getLogger(__name__)

WorldId = str

# 权重之和的容差
WEIGHT_SUM_TOL = 1e-12


class KripkeModel(BaseModel):
    """Kripke模型 M = <W, R, V>，可附带权重函数"""

    worlds: Tuple[WorldId, ...] = Field(..., description="规范顺序的世界序列")
    access: FrozenSet[Tuple[WorldId, WorldId]] = Field(default_factory=frozenset, description="可达关系R")
    valuation: Dict[WorldId, FrozenSet[str]] = Field(default_factory=dict, description="每个世界为真的原子标签")
    weights: Optional[Dict[WorldId, float]] = Field(default=None, description="权重函数")
    atoms: FrozenSet[str] = Field(default_factory=frozenset, description="额外声明的原子词汇")

    model_config = ConfigDict(frozen=True)

    _index: Dict[WorldId, int] = PrivateAttr(default_factory=dict)
    _successors: Dict[WorldId, Tuple[WorldId, ...]] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _validate_structure(self) -> "KripkeModel":
        seen: Set[WorldId] = set()
        for w in self.worlds:
            if w in seen:
                raise ModelValidationError(f"世界重复声明: {w}", details={"world": w})
            seen.add(w)

        for src, dst in self.access:
            for end in (src, dst):
                if end not in seen:
                    raise ModelValidationError(
                        f"可达关系引用了未声明的世界: {end}",
                        details={"pair": [src, dst], "world": end}
                    )

        for w in self.valuation:
            if w not in seen:
                raise ModelValidationError(f"赋值引用了未声明的世界: {w}", details={"world": w})

        if self.weights is not None:
            missing = [w for w in self.worlds if w not in self.weights]
            extra = [w for w in self.weights if w not in seen]
            if missing or extra:
                raise ModelValidationError(
                    "权重必须恰好覆盖全部世界",
                    details={"missing": missing, "extra": extra}
                )
            for w, value in self.weights.items():
                if not (0.0 <= value <= 1.0) or math.isnan(value):
                    raise ModelValidationError(f"权重超出[0,1]: {w}={value}", details={"world": w, "weight": value})
            total = math.fsum(self.weights.values())
            if abs(total - 1.0) > WEIGHT_SUM_TOL:
                raise ModelValidationError(f"权重之和不为1: {total}", details={"sum": total})
        return self

    def model_post_init(self, __context) -> None:
        self._index = {w: i for i, w in enumerate(self.worlds)}
        succ: Dict[WorldId, List[WorldId]] = {w: [] for w in self.worlds}
        for src, dst in self.access:
            succ[src].append(dst)
        self._successors = {
            w: tuple(sorted(targets, key=self._index.__getitem__)) for w, targets in succ.items()
        }

    # ------------------------------------------------------------------

    def has_world(self, world: WorldId) -> bool:
        return world in self._index

    def index_of(self, world: WorldId) -> int:
        """世界在规范顺序中的位置"""
        try:
            return self._index[world]
        except KeyError:
            raise UnknownWorldError(f"未知世界: {world}", details={"world": world})

    def successors(self, world: WorldId) -> Tuple[WorldId, ...]:
        """R-后继，按规范顺序"""
        try:
            return self._successors[world]
        except KeyError:
            raise UnknownWorldError(f"未知世界: {world}", details={"world": world})

    def labels(self, world: WorldId) -> FrozenSet[str]:
        """世界上为真的原子标签"""
        if world not in self._index:
            raise UnknownWorldError(f"未知世界: {world}", details={"world": world})
        return self.valuation.get(world, frozenset())

    @property
    def atom_domain(self) -> FrozenSet[str]:
        """赋值域：所有出现过的原子标签加上声明的词汇"""
        domain: Set[str] = set(self.atoms)
        for tags in self.valuation.values():
            domain |= tags
        return frozenset(domain)

    def weight(self, world: WorldId) -> float:
        """权重，未设置时取均匀分布 1/|W|"""
        if world not in self._index:
            raise UnknownWorldError(f"未知世界: {world}", details={"world": world})
        if self.weights is None:
            return 1.0 / len(self.worlds)
        return self.weights[world]

    def access_matrix(self) -> np.ndarray:
        """可达关系的稠密矩阵 r_ij"""
        n = len(self.worlds)
        matrix = np.zeros((n, n), dtype=np.int8)
        for src, dst in self.access:
            matrix[self._index[src], self._index[dst]] = 1
        return matrix

    def with_weights(self, weights: Optional[Mapping[WorldId, float]]) -> "KripkeModel":
        """返回带新权重的模型副本（重新校验）"""
        return build_model(self.worlds, self.access, self.valuation, weights, self.atoms)

    def with_atoms(self, extra: Iterable[str]) -> "KripkeModel":
        """返回扩充了原子词汇的模型副本；词汇已包含时返回自身"""
        extra = frozenset(extra)
        if extra <= self.atom_domain:
            return self
        return build_model(self.worlds, self.access, self.valuation, self.weights, self.atoms | frozenset(extra))

    def to_dict(self) -> Dict:
        """导出为模型JSON结构"""
        data = {
            "worlds": list(self.worlds),
            "access": sorted(([s, d] for s, d in self.access),
                             key=lambda p: (self._index[p[0]], self._index[p[1]])),
            "valuation": {w: sorted(self.valuation.get(w, ())) for w in self.worlds},
        }
        if self.weights is not None:
            data["weights"] = {w: self.weights[w] for w in self.worlds}
        return data


def build_model(
    worlds: Sequence[WorldId],
    access: Iterable[Tuple[WorldId, WorldId]],
    valuation: Optional[Mapping[WorldId, Iterable[str]]] = None,
    weights: Optional[Mapping[WorldId, float]] = None,
    atoms: Iterable[str] = ()
) -> KripkeModel:
    """
    构建并校验Kripke模型

    Args:
        worlds: 世界序列（即规范顺序）
        access: 可达关系中的有序对
        valuation: 世界到为真原子标签的映射，缺省为空集
        weights: 可选权重，每个值在[0,1]内且总和为1
        atoms: 额外声明的原子词汇

    Returns:
        KripkeModel: 校验后的模型
    """
    valuation = valuation or {}
    return KripkeModel(
        worlds=tuple(worlds),
        access=frozenset((s, d) for s, d in access),
        valuation={
            **{w: frozenset() for w in worlds},
            **{w: frozenset(tags) for w, tags in valuation.items()},
        },
        weights=dict(weights) if weights is not None else None,
        atoms=frozenset(atoms),
    )


def check_sva(model: KripkeModel, frame: Sequence[str]) -> bool:
    """
    检查单值赋值(SVA)：每个世界恰好使框架中的一个标签为真

    Args:
        model: Kripke模型
        frame: 有序的原子标签框架

    Returns:
        bool: 是否满足SVA
    """
    frame_set = frozenset(frame)
    return all(len(model.labels(w) & frame_set) == 1 for w in model.worlds)


def sva_label(model: KripkeModel, world: WorldId, frame: Sequence[str]) -> str:
    """SVA模型中世界唯一为真的框架标签"""
    hits = model.labels(world) & frozenset(frame)
    if len(hits) != 1:
        raise EvidenceError(f"世界 {world} 不满足SVA", details={"world": world, "labels": sorted(hits)})
    return next(iter(hits))


def subset_formula(subset: Iterable[str], frame: Sequence[str]) -> Formula:
    """
    子集命题 phi_A

    Args:
        subset: 框架的子集A
        frame: 有序框架

    Returns:
        Formula: A非空时为单元素原子的析取；A为空时为框架上全部否定原子的合取
    """
    subset = frozenset(subset)
    outside = subset - frozenset(frame)
    if outside:
        raise EvidenceError(f"子集超出框架: {sorted(outside)}", details={"outside": sorted(outside)})
    if subset:
        return disj(atom(x) for x in subset)
    return conj(neg(atom(x)) for x in frame)


def is_serial(model: KripkeModel) -> bool:
    """每个世界至少有一个后继"""
    return all(model.successors(w) for w in model.worlds)
