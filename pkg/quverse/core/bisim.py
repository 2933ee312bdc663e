"""
互模拟
分区细化求最大互模拟、双射互模拟校验，以及由 M_U 构造邻近侧模型 M_Σ
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from quverse.core.kripke import KripkeModel, WorldId, build_model
from quverse.core.unfolding import StageModel
from quverse.utils.exceptions import BisimulationError

logger = logging.getLogger(__name__)

SIGMA_SUFFIX = "'"

# 不相交并中的节点：(侧, 世界)
_Node = Tuple[int, WorldId]


@dataclass(frozen=True)
class Bisimulation:
    """两个模型之间的互模拟关系"""

    pairs: FrozenSet[Tuple[WorldId, WorldId]]
    blocks: Tuple[Tuple[_Node, ...], ...] = ()
    rounds: int = 0

    def __contains__(self, pair: Tuple[WorldId, WorldId]) -> bool:
        return pair in self.pairs

    def related(self, world: WorldId) -> List[WorldId]:
        """与左侧世界互模拟的右侧世界"""
        return sorted(b for a, b in self.pairs if a == world)


@dataclass(frozen=True)
class Violation:
    """双射互模拟校验中的一条违反记录"""

    pair: Tuple[WorldId, WorldId]
    clause: str
    witness: Optional[WorldId] = None

    def to_dict(self) -> Dict:
        return {"pair": list(self.pair), "clause": self.clause, "witness": self.witness}


@dataclass(frozen=True)
class BisimulationCheck:
    """双射互模拟校验结果"""

    pairs: Tuple[Tuple[WorldId, WorldId], ...]
    violations: Tuple[Violation, ...] = ()
    strict: bool = False

    @property
    def success(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict:
        return {
            "success": self.success,
            "strict": self.strict,
            "pairs": [list(p) for p in self.pairs],
            "violations": [v.to_dict() for v in self.violations],
        }


@dataclass(frozen=True)
class SigmaModel:
    """
    邻近侧模型 M_Σ

    kripke 的可达关系为完整的邻近关系 P_Σ（自反且对称）；
    plus_model / minus_model 分别以 ⁺P、⁻P 为可达关系。
    """

    kripke: KripkeModel
    plus_model: KripkeModel
    minus_model: KripkeModel
    plus_pairs: FrozenSet[Tuple[WorldId, WorldId]]
    minus_pairs: FrozenSet[Tuple[WorldId, WorldId]]
    pairing: Dict[WorldId, WorldId] = field(default_factory=dict)

    @property
    def worlds(self) -> Tuple[WorldId, ...]:
        return self.kripke.worlds

    @property
    def relation(self) -> FrozenSet[Tuple[WorldId, WorldId]]:
        return self.kripke.access


def sigma_key(world: WorldId) -> WorldId:
    """M_U 世界在 M_Σ 中的镜像键"""
    return f"{world}{SIGMA_SUFFIX}"


# ---------------------------------------------------------------------------
# 最大互模拟
# ---------------------------------------------------------------------------

def _initial_key(model: KripkeModel, world: WorldId, labels: Optional[Mapping[WorldId, object]]):
    # 字面条款(a)：是否存在使之为真的赋值；SVA 下恒为真
    if labels is None:
        return bool(model.labels(world))
    return labels.get(world)


def _refine(
    nodes: List[_Node],
    block_of: Dict[_Node, int],
    successors: Dict[_Node, Tuple[_Node, ...]]
) -> Dict[_Node, int]:
    """一轮细化：按 (所在块, 后继块集合) 重新划分，块号按首次出现顺序分配"""
    signatures: Dict[tuple, int] = {}
    refined: Dict[_Node, int] = {}
    for node in nodes:
        signature = (block_of[node], frozenset(block_of[s] for s in successors[node]))
        if signature not in signatures:
            signatures[signature] = len(signatures)
        refined[node] = signatures[signature]
    return refined


def max_bisimulation(
    g: KripkeModel,
    h: KripkeModel,
    labels: Optional[Tuple[Mapping[WorldId, object], Mapping[WorldId, object]]] = None
) -> Bisimulation:
    """
    计算两个模型之间的最大互模拟

    在不相交并上做分区细化直到块数不再变化。

    Args:
        g: 左侧模型（可达关系即所用的边关系）
        h: 右侧模型
        labels: 严格模式下两侧世界的标签映射，用逐世界标签一致替换条款(a)

    Returns:
        Bisimulation: 最大互模拟
    """
    nodes: List[_Node] = [(0, w) for w in g.worlds] + [(1, w) for w in h.worlds]
    models = (g, h)
    successors = {
        (side, w): tuple((side, s) for s in models[side].successors(w)) for side, w in nodes
    }

    initial: Dict[object, int] = {}
    block_of: Dict[_Node, int] = {}
    for side, w in nodes:
        key = _initial_key(models[side], w, labels[side] if labels else None)
        if key not in initial:
            initial[key] = len(initial)
        block_of[(side, w)] = initial[key]

    rounds = 0
    count = len(initial)
    while True:
        refined = _refine(nodes, block_of, successors)
        rounds += 1
        new_count = len(set(refined.values()))
        block_of = refined
        if new_count == count:
            break
        count = new_count
    logger.debug(f"分区细化完成 - 轮数: {rounds}, 块数: {count}")

    members: Dict[int, List[_Node]] = {}
    for node in nodes:
        members.setdefault(block_of[node], []).append(node)
    pairs = frozenset(
        (a, b)
        for block in members.values()
        for side_a, a in block if side_a == 0
        for side_b, b in block if side_b == 1
    )
    blocks = tuple(tuple(members[i]) for i in sorted(members))
    return Bisimulation(pairs=pairs, blocks=blocks, rounds=rounds)


def is_stable(g: KripkeModel, h: KripkeModel, bisim: Bisimulation) -> bool:
    """不动点检查：再做一轮细化，块划分不再改变"""
    nodes: List[_Node] = [(0, w) for w in g.worlds] + [(1, w) for w in h.worlds]
    models = (g, h)
    block_of = {node: i for i, block in enumerate(bisim.blocks) for node in block}
    if set(block_of) != set(nodes):
        return False
    successors = {
        (side, w): tuple((side, s) for s in models[side].successors(w)) for side, w in nodes
    }
    refined = _refine(nodes, block_of, successors)
    return len(set(refined.values())) == len(bisim.blocks)


# ---------------------------------------------------------------------------
# 双射互模拟校验
# ---------------------------------------------------------------------------

def verify_bijective_bisimulation(
    g: KripkeModel,
    h: KripkeModel,
    pairing: Mapping[WorldId, WorldId],
    strict: bool = False
) -> BisimulationCheck:
    """
    校验给定双射是否为互模拟

    Args:
        g: 左侧模型
        h: 右侧模型
        pairing: 左侧世界 -> 右侧世界
        strict: 条款(a)改为标签在配对改名下逐世界一致

    Returns:
        BisimulationCheck: 配对列表与逐对违反记录
    """
    if len(g.worlds) != len(h.worlds):
        raise BisimulationError(
            f"世界数不一致: {len(g.worlds)} != {len(h.worlds)}",
            details={"left": len(g.worlds), "right": len(h.worlds)}
        )
    missing = [w for w in g.worlds if w not in pairing]
    images = [pairing[w] for w in g.worlds if w in pairing]
    if missing or len(set(images)) != len(images) or any(not h.has_world(y) for y in images):
        raise BisimulationError(
            "配对不是双射",
            details={"missing": missing, "images": sorted(set(images))}
        )
    inverse = {y: x for x, y in pairing.items()}

    violations: List[Violation] = []
    for x in g.worlds:
        y = pairing[x]
        if strict:
            renamed = frozenset(pairing.get(t, t) for t in g.labels(x))
            agree = renamed == h.labels(y)
        else:
            agree = bool(g.labels(x)) == bool(h.labels(y))
        if not agree:
            violations.append(Violation(pair=(x, y), clause="a"))

        h_succ = set(h.successors(y))
        for x2 in g.successors(x):
            if pairing[x2] not in h_succ:
                violations.append(Violation(pair=(x, y), clause="b", witness=x2))
        g_succ = set(g.successors(x))
        for y2 in h.successors(y):
            if inverse[y2] not in g_succ:
                violations.append(Violation(pair=(x, y), clause="c", witness=y2))

    if violations:
        logger.warning(f"双射互模拟校验失败 - 违反数: {len(violations)}")
    return BisimulationCheck(
        pairs=tuple((x, pairing[x]) for x in g.worlds),
        violations=tuple(violations),
        strict=strict,
    )


# ---------------------------------------------------------------------------
# M_Σ 构造
# ---------------------------------------------------------------------------

def build_sigma(stage: StageModel) -> SigmaModel:
    """
    由 M_U 构造 M_Σ

    ⁺P 为 R_U 的镜像（父->子 与全部自环），⁻P 为 ⁺P 非自反部分的逆，
    P_Σ = ⁺P ∪ ⁻P。

    Args:
        stage: 展开结果

    Returns:
        SigmaModel: 镜像世界、三种关系与规范键配对
    """
    m_u = stage.kripke
    pairing = {w: sigma_key(w) for w in m_u.worlds}
    worlds = [pairing[w] for w in m_u.worlds]
    valuation = {k: (k,) for k in worlds}

    plus = frozenset((pairing[a], pairing[b]) for a, b in m_u.access)
    minus = frozenset((b, a) for a, b in plus if a != b)
    full = plus | minus

    return SigmaModel(
        kripke=build_model(worlds, full, valuation),
        plus_model=build_model(worlds, plus, valuation),
        minus_model=build_model(worlds, minus, valuation),
        plus_pairs=plus,
        minus_pairs=minus,
        pairing=pairing,
    )


def verify_sigma(stage: StageModel, sigma: SigmaModel) -> BisimulationCheck:
    """M_U 与 ⁺M_Σ 之间规范配对的互模拟校验"""
    return verify_bijective_bisimulation(stage.kripke, sigma.plus_model, sigma.pairing)
