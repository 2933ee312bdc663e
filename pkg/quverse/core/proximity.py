"""
邻近空间
量子、量子集、正交格运算（并、交、正交补）、分离、开路径、P-连续性与树度量
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from quverse.config.settings import get_settings
from quverse.core.formula import box, evaluate
from quverse.core.kripke import KripkeModel, build_model, subset_formula
from quverse.utils.exceptions import (
    ModelValidationError,
    NotATreeError,
    NumericalError,
    UnknownElementError,
)

logger = logging.getLogger(__name__)

ElementId = str


class ProximitySpace(BaseModel):
    """邻近空间 (X, P)：P 自反、对称，不要求传递"""

    carrier: Tuple[ElementId, ...] = Field(..., description="规范顺序的元素序列")
    relation: FrozenSet[Tuple[ElementId, ElementId]] = Field(
        default_factory=frozenset, description="两个方向的有序对，含全部自反对"
    )

    model_config = ConfigDict(frozen=True)

    _index: Dict[ElementId, int] = PrivateAttr(default_factory=dict)
    _neighbors: Dict[ElementId, FrozenSet[ElementId]] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _validate_relation(self) -> "ProximitySpace":
        seen = set(self.carrier)
        if len(seen) != len(self.carrier):
            raise ModelValidationError("元素重复声明", details={"carrier": list(self.carrier)})
        for a, b in self.relation:
            for end in (a, b):
                if end not in seen:
                    raise UnknownElementError(f"关系引用了未知元素: {end}", details={"element": end})
            if (b, a) not in self.relation:
                raise ModelValidationError(f"邻近关系不对称: ({a}, {b})", details={"pair": [a, b]})
        for x in self.carrier:
            if (x, x) not in self.relation:
                raise ModelValidationError(f"邻近关系不自反: {x}", details={"element": x})
        return self

    def model_post_init(self, __context) -> None:
        self._index = {x: i for i, x in enumerate(self.carrier)}
        neighbors: Dict[ElementId, Set[ElementId]] = {x: set() for x in self.carrier}
        for a, b in self.relation:
            neighbors[a].add(b)
        self._neighbors = {x: frozenset(ys) for x, ys in neighbors.items()}

    def check(self, x: ElementId) -> ElementId:
        if x not in self._index:
            raise UnknownElementError(f"未知元素: {x}", details={"element": x})
        return x

    def index_of(self, x: ElementId) -> int:
        return self._index[self.check(x)]

    def neighbors(self, x: ElementId) -> FrozenSet[ElementId]:
        return self._neighbors[self.check(x)]

    def ordered(self, subset: Iterable[ElementId]) -> List[ElementId]:
        """按规范顺序排列子集"""
        return sorted(subset, key=self.index_of)

    @property
    def full(self) -> FrozenSet[ElementId]:
        return frozenset(self.carrier)

    def edges(self) -> List[Tuple[ElementId, ElementId]]:
        """非自反的无序对，按规范顺序"""
        pairs = {
            tuple(sorted((a, b), key=self._index.__getitem__))
            for a, b in self.relation if a != b
        }
        return sorted(pairs, key=lambda p: (self._index[p[0]], self._index[p[1]]))

    def graph(self) -> nx.Graph:
        """P 的非自反部分构成的无向图"""
        g = nx.Graph()
        g.add_nodes_from(self.carrier)
        g.add_edges_from(self.edges())
        return g

    def to_dict(self) -> Dict:
        return {"carrier": list(self.carrier), "pairs": [list(p) for p in self.edges()]}


def build_space(carrier: Sequence[ElementId], pairs: Iterable[Tuple[ElementId, ElementId]] = ()) -> ProximitySpace:
    """
    构建邻近空间，自动补全对称对与自反对

    Args:
        carrier: 元素序列
        pairs: 无序元素对

    Returns:
        ProximitySpace: 校验后的空间
    """
    carrier = tuple(carrier)
    known = set(carrier)
    relation: Set[Tuple[ElementId, ElementId]] = {(x, x) for x in carrier}
    for a, b in pairs:
        for end in (a, b):
            if end not in known:
                raise UnknownElementError(f"关系引用了未知元素: {end}", details={"element": end})
        relation.add((a, b))
        relation.add((b, a))
    return ProximitySpace(carrier=carrier, relation=frozenset(relation))


def from_kripke(model: KripkeModel) -> ProximitySpace:
    """以模型的可达关系为邻近关系（可达关系须已自反且对称）"""
    return ProximitySpace(carrier=model.worlds, relation=model.access)


# ---------------------------------------------------------------------------
# 量子与量子集
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantumSet:
    """量子集：members 为 witness 中各元素量子的并"""

    members: FrozenSet[ElementId]
    witness: FrozenSet[ElementId] = field(default=frozenset(), compare=False)

    def __len__(self) -> int:
        return len(self.members)

    def __le__(self, other: "QuantumSet") -> bool:
        return self.members <= other.members


def quantum_of(space: ProximitySpace, x: ElementId) -> FrozenSet[ElementId]:
    """量子 Q_x = {y : xPy}"""
    return space.neighbors(x)


def _union_of_quanta(space: ProximitySpace, witness: Iterable[ElementId]) -> FrozenSet[ElementId]:
    acc: Set[ElementId] = set()
    for x in witness:
        acc |= space.neighbors(x)
    return frozenset(acc)


def _fitting(space: ProximitySpace, region: FrozenSet[ElementId]) -> FrozenSet[ElementId]:
    """region 内量子完全落在 region 中的生成元"""
    return frozenset(x for x in region if space.neighbors(x) <= region)


def quantum_set(space: ProximitySpace, subset: Iterable[ElementId]) -> Optional[QuantumSet]:
    """
    若子集是量子集则返回带见证的量子集

    Args:
        space: 邻近空间
        subset: 载体的子集

    Returns:
        Optional[QuantumSet]: 不是量子集时为None
    """
    region = frozenset(space.check(x) for x in subset)
    witness = _fitting(space, region)
    if _union_of_quanta(space, witness) != region:
        return None
    return QuantumSet(members=region, witness=witness)


def is_quantum_set(space: ProximitySpace, subset: Iterable[ElementId]) -> bool:
    """a = ∪{Q_x : x ∈ a, Q_x ⊆ a}"""
    return quantum_set(space, subset) is not None


def bottom(space: ProximitySpace) -> QuantumSet:
    return QuantumSet(members=frozenset(), witness=frozenset())


def top(space: ProximitySpace) -> QuantumSet:
    return QuantumSet(members=space.full, witness=space.full)


def quantum(space: ProximitySpace, x: ElementId) -> QuantumSet:
    """单个量子作为量子集"""
    return QuantumSet(members=quantum_of(space, x), witness=frozenset((x,)))


def join_p(space: ProximitySpace, q1: QuantumSet, q2: QuantumSet) -> QuantumSet:
    """并：集合并，见证合并"""
    return QuantumSet(members=q1.members | q2.members, witness=q1.witness | q2.witness)


def meet_p(space: ProximitySpace, q1: QuantumSet, q2: QuantumSet) -> QuantumSet:
    """交：集合交中全部量子的并"""
    # 落在交集内的量子必由交集中的元素生成
    witness = _fitting(space, q1.members & q2.members)
    return QuantumSet(members=_union_of_quanta(space, witness), witness=witness)


def ortho_p(space: ProximitySpace, q: QuantumSet) -> QuantumSet:
    """正交补 ⊥Q = {y : (∃x ∉ Q)(xPy)}"""
    witness = space.full - q.members
    return QuantumSet(members=_union_of_quanta(space, witness), witness=witness)


def separated(space: ProximitySpace, a: Iterable[ElementId], b: Iterable[ElementId]) -> bool:
    """A∩B = ∅ 且对所有 x ∈ A 有 Q_x ∩ B = ∅"""
    a = frozenset(space.check(x) for x in a)
    b = frozenset(space.check(x) for x in b)
    if a & b:
        return False
    return all(not (space.neighbors(x) & b) for x in a)


def quanta_containing(space: ProximitySpace, x: ElementId) -> FrozenSet[ElementId]:
    """包含 x 的全部量子之并（P 下半径为2的球）"""
    return _union_of_quanta(space, space.neighbors(x))


def quantum_sets(space: ProximitySpace, cap: Optional[int] = None) -> List[QuantumSet]:
    """
    枚举全部量子集（正交格的全部元素）

    Args:
        space: 邻近空间
        cap: 载体大小上限，缺省取 numeric.lattice_dump_cap

    Returns:
        List[QuantumSet]: 按 (大小, 规范元素序) 排序
    """
    cap = cap if cap is not None else get_settings().numeric.lattice_dump_cap
    if len(space.carrier) > cap:
        raise ModelValidationError(
            f"载体大小 {len(space.carrier)} 超过格枚举上限 {cap}",
            details={"size": len(space.carrier), "cap": cap}
        )
    regions: Set[FrozenSet[ElementId]] = {frozenset()}
    for x in space.carrier:
        q = space.neighbors(x)
        regions |= {r | q for r in regions}
    result = [quantum_set(space, r) for r in regions]
    return sorted(result, key=lambda s: (len(s.members), [space.index_of(x) for x in space.ordered(s.members)]))


# ---------------------------------------------------------------------------
# 开路径与树度量
# ---------------------------------------------------------------------------

def open_path(space: ProximitySpace, x: ElementId, y: ElementId) -> Optional[Tuple[ElementId, ...]]:
    """
    最短的无重复 P-链

    Returns:
        Optional[Tuple]: 从x到y的元素序列，不连通时为None；l(x,x)=0 对应 (x,)
    """
    space.check(x)
    space.check(y)
    if x == y:
        return (x,)
    try:
        return tuple(nx.shortest_path(space.graph(), x, y))
    except nx.NetworkXNoPath:
        return None


def path_length(path: Optional[Sequence[ElementId]]) -> Optional[int]:
    """l(x,y) = |{x, z_1, ..., y}| - 1"""
    return None if path is None else len(path) - 1


def is_p_continuous(space: ProximitySpace) -> bool:
    """任意两元素之间都存在开路径"""
    if not space.carrier:
        return True
    return nx.is_connected(space.graph())


def tree_metric(space: ProximitySpace) -> np.ndarray:
    """
    离散树度量 d_T

    Args:
        space: P 的非自反部分为树的邻近空间

    Returns:
        np.ndarray: 按规范顺序的对称整数矩阵
    """
    g = space.graph()
    if not space.carrier or not nx.is_tree(g):
        raise NotATreeError(
            "邻近关系的非自反部分不是树",
            details={"nodes": len(space.carrier), "edges": g.number_of_edges()}
        )
    n = len(space.carrier)
    metric = np.zeros((n, n), dtype=np.int64)
    for x in space.carrier:
        i = space.index_of(x)
        for y, dist in nx.single_source_shortest_path_length(g, x).items():
            metric[i, space.index_of(y)] = dist
    return metric


# ---------------------------------------------------------------------------
# 由谱与内积诱导的邻近关系
# ---------------------------------------------------------------------------

def _positional_carrier(n: int) -> Tuple[ElementId, ...]:
    return tuple(str(i + 1) for i in range(n))


def proximity_from_spectrum(eigenvalues: Sequence[float], epsilon: float) -> ProximitySpace:
    """
    实验上不可区分的谱值：xPy 当且仅当 |λ_x - λ_y| <= epsilon

    元素以 "1" 起的位置编号命名。
    """
    if epsilon < 0:
        raise NumericalError(f"epsilon不能为负: {epsilon}", details={"epsilon": epsilon})
    carrier = _positional_carrier(len(eigenvalues))
    values = [float(v) for v in eigenvalues]
    pairs = [
        (carrier[i], carrier[j])
        for i in range(len(values)) for j in range(i + 1, len(values))
        if abs(values[i] - values[j]) <= epsilon
    ]
    return build_space(carrier, pairs)


def proximity_from_inner_products(
    vectors: Sequence[Sequence[complex]],
    tolerance: Optional[float] = None
) -> ProximitySpace:
    """
    sPt 当且仅当 |<s,t>| 大于零容差

    Args:
        vectors: 非零向量族
        tolerance: 零容差，缺省取 numeric.eps_zero

    Returns:
        ProximitySpace: 以 "1" 起的位置编号为元素
    """
    tolerance = get_settings().numeric.eps_zero if tolerance is None else tolerance
    arrays = [np.asarray(v) for v in vectors]
    for i, v in enumerate(arrays):
        if np.linalg.norm(v) <= tolerance:
            raise NumericalError(f"第 {i + 1} 个向量为零向量", details={"index": i + 1})
    carrier = _positional_carrier(len(arrays))
    pairs = [
        (carrier[i], carrier[j])
        for i in range(len(arrays)) for j in range(i + 1, len(arrays))
        if abs(np.vdot(arrays[i], arrays[j])) > tolerance
    ]
    return build_space(carrier, pairs)


# ---------------------------------------------------------------------------
# 基上的Kripke结构
# ---------------------------------------------------------------------------

def proximity_model(space: ProximitySpace) -> KripkeModel:
    """可达关系为 P、SVA 赋值以元素自身命名的Kripke模型"""
    return build_model(space.carrier, space.relation, {x: (x,) for x in space.carrier})


def quantum_validates(space: ProximitySpace, x: ElementId, subset: Iterable[ElementId]) -> bool:
    """
    phi_a 在 x 处成立当且仅当 Q_x ⊆ a，按 [](phi_a) 在 proximity_model 上求值
    """
    model = proximity_model(space)
    return evaluate(model, space.check(x), box(subset_formula(subset, space.carrier)))
