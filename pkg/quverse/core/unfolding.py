"""
结构展开引擎
把种子点图展开为深度alpha的展开树，计算公式标签、子节点集、Z_U以及Kripke模型 M_U
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from quverse.config.settings import UnfoldSettings, get_settings
from quverse.core.formula import Formula, TAG_PATTERN, atom, triangle
from quverse.core.kripke import KripkeModel, WorldId, build_model
from quverse.utils.exceptions import CapExceededError, SeedValidationError, UnknownWorldError

logger = logging.getLogger(__name__)

ROOT_KEY = "ε"
KEY_SEPARATOR = "/"


class SeedGraph(BaseModel):
    """种子点图：边的方向为 父集合 -> 成员"""

    nodes: Tuple[str, ...] = Field(..., description="节点标识")
    edges: Tuple[Tuple[str, str], ...] = Field(default=(), description="成员关系边，保留声明顺序")
    root: str = Field(..., description="点")
    atoms: FrozenSet[str] = Field(default_factory=frozenset, description="原子节点")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _validate_graph(self) -> "SeedGraph":
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise SeedValidationError("节点重复声明", details={"nodes": list(self.nodes)})
        for node in self.nodes:
            if TAG_PATTERN.fullmatch(node) is None:
                raise SeedValidationError(f"节点标识不合法: {node!r}", details={"node": node})
        if self.root not in node_set:
            raise SeedValidationError(f"根节点不存在: {self.root}", details={"root": self.root})
        for src, dst in self.edges:
            for end in (src, dst):
                if end not in node_set:
                    raise SeedValidationError(
                        f"边引用了未声明的节点: {end}",
                        details={"edge": [src, dst], "node": end}
                    )
        for a in self.atoms:
            if a not in node_set:
                raise SeedValidationError(f"原子节点未声明: {a}", details={"atom": a})
        for src, dst in self.edges:
            if src in self.atoms and src != dst:
                raise SeedValidationError(
                    f"原子节点只允许自环: {src} -> {dst}",
                    details={"edge": [src, dst]}
                )
        return self

    def out_edges(self, node: str) -> List[str]:
        """
        节点的有序出边目标

        原子节点不展开（自环仅由 R_U 中的自反对体现）；其余节点的出边
        按目标标识排序，再按声明顺序。
        """
        if node in self.atoms:
            return []
        indexed = [(dst, i) for i, (src, dst) in enumerate(self.edges) if src == node]
        return [dst for dst, _ in sorted(indexed)]

    def adjacency(self) -> Dict[str, List[str]]:
        """全部节点的有序出边表"""
        return {node: self.out_edges(node) for node in self.nodes}

    def to_dict(self) -> Dict:
        return {
            "nodes": list(self.nodes),
            "edges": [list(e) for e in self.edges],
            "root": self.root,
            "atoms": sorted(self.atoms),
        }


@dataclass(frozen=True)
class TreeNode:
    """展开树节点"""

    walk_key: str
    depth: int
    graph_node: str
    formula: Formula
    parent: Optional[str]
    children: Tuple[str, ...] = ()


@dataclass(frozen=True)
class UnfoldTree:
    """深度alpha的展开树，节点按规范BFS顺序排列"""

    alpha: int
    nodes: Tuple[TreeNode, ...]
    index: Dict[str, int] = field(default_factory=dict, compare=False)

    def node(self, walk_key: str) -> TreeNode:
        try:
            return self.nodes[self.index[walk_key]]
        except KeyError:
            raise UnknownWorldError(f"未知世界: {walk_key}", details={"world": walk_key})

    @property
    def keys(self) -> List[str]:
        return [n.walk_key for n in self.nodes]

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    def tree_edges(self) -> List[Tuple[str, str]]:
        """父 -> 子 边，按子节点的规范顺序"""
        return [(n.parent, n.walk_key) for n in self.nodes if n.parent is not None]


@dataclass(frozen=True)
class StageModel:
    """第alpha阶段的展开结果与Kripke模型 M_U"""

    alpha: int
    seed: SeedGraph
    tree: UnfoldTree
    kripke: KripkeModel
    z_u: int


def child_key(parent_key: str, ordinal: int) -> str:
    """子节点的行走键"""
    return f"{parent_key}{KEY_SEPARATOR}{ordinal}"


def projected_node_count(seed: SeedGraph, alpha: int) -> int:
    """不构造树，按层统计深度不超过alpha的行走数"""
    adjacency = seed.adjacency()
    level: Dict[str, int] = {seed.root: 1}
    total = 1
    for _ in range(alpha):
        nxt: Dict[str, int] = defaultdict(int)
        for node, count in level.items():
            for dst in adjacency[node]:
                nxt[dst] += count
        level = dict(nxt)
        if not level:
            break
        total += sum(level.values())
    return total


class _LabelBuilder:
    """自底向上的公式标签 phi^k_u，按 (u, k) 共享"""

    def __init__(self, seed: SeedGraph, realization: Optional[Mapping[str, str]] = None):
        self.seed = seed
        self.adjacency = seed.adjacency()
        self.realization = dict(realization or {})
        self._memo: Dict[Tuple[str, int], Formula] = {}

    def initial(self, node: str) -> Formula:
        """phi^0_u：不透明的原子常量"""
        return atom(self.realization.get(node, node))

    def label(self, node: str, k: int) -> Formula:
        key = (node, k)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        if k == 0 or node in self.seed.atoms:
            result = self.initial(node)
        else:
            # 自环种子会递归到自身的 k-1 层，深度有界
            result = triangle(self.label(dst, k - 1) for dst in self.adjacency[node])
        self._memo[key] = result
        return result


def unfold(
    seed: SeedGraph,
    alpha: int,
    settings: Optional[UnfoldSettings] = None,
    realization: Optional[Mapping[str, str]] = None
) -> StageModel:
    """
    结构展开

    Args:
        seed: 种子点图
        alpha: 展开阶段（有限序数）
        settings: 深度与节点上限，缺省取全局配置
        realization: 可选的 phi^0 原子标签覆盖（节点 -> 标签）

    Returns:
        StageModel: 展开树、M_U 与 Z_U
    """
    settings = settings or get_settings().unfold
    if alpha < 0:
        raise CapExceededError(f"展开阶段不能为负: {alpha}", details={"alpha": alpha})
    projected = projected_node_count(seed, alpha)
    if alpha > settings.depth_cap:
        raise CapExceededError(
            f"展开深度 {alpha} 超过上限 {settings.depth_cap}（预计节点数 {projected}）",
            details={"alpha": alpha, "depth_cap": settings.depth_cap, "projected": projected}
        )
    if projected > settings.node_cap:
        raise CapExceededError(
            f"预计节点数 {projected} 超过上限 {settings.node_cap}",
            details={"projected": projected, "node_cap": settings.node_cap, "alpha": alpha}
        )

    labels = _LabelBuilder(seed, realization)
    adjacency = labels.adjacency

    # 逐层BFS；同层按父节点顺序、再按出边序号排列
    records: List[dict] = [{
        "walk_key": ROOT_KEY, "depth": 0, "graph_node": seed.root, "parent": None, "children": []
    }]
    frontier = [0]
    for depth in range(1, alpha + 1):
        next_frontier = []
        for idx in frontier:
            parent = records[idx]
            for ordinal, dst in enumerate(adjacency[parent["graph_node"]]):
                key = child_key(parent["walk_key"], ordinal)
                parent["children"].append(key)
                records.append({
                    "walk_key": key, "depth": depth, "graph_node": dst,
                    "parent": parent["walk_key"], "children": []
                })
                next_frontier.append(len(records) - 1)
        frontier = next_frontier
        if not frontier:
            break

    nodes = tuple(
        TreeNode(
            walk_key=r["walk_key"],
            depth=r["depth"],
            graph_node=r["graph_node"],
            formula=labels.label(r["graph_node"], alpha - r["depth"]),
            parent=r["parent"],
            children=tuple(r["children"]),
        )
        for r in records
    )
    tree = UnfoldTree(alpha=alpha, nodes=nodes, index={n.walk_key: i for i, n in enumerate(nodes)})

    keys = tree.keys
    access = tree.tree_edges() + [(k, k) for k in keys]
    kripke = build_model(keys, access, {k: (k,) for k in keys})

    logger.debug(f"展开完成 - alpha: {alpha}, 节点数: {len(nodes)}")
    return StageModel(alpha=alpha, seed=seed, tree=tree, kripke=kripke, z_u=len(nodes))


def children_sets(stage: StageModel) -> List[List[Formula]]:
    """
    子节点集 ch^0 ... ch^alpha（按出现次数计数）

    Args:
        stage: 展开结果

    Returns:
        List[List[Formula]]: 第i项为深度i的全部节点标签
    """
    sets: List[List[Formula]] = [[] for _ in range(stage.alpha + 1)]
    for node in stage.tree.nodes:
        sets[node.depth].append(node.formula)
    return sets


def z_u(stage: StageModel) -> int:
    """Z_U = 1 + sum_{i>=1} |ch^i|"""
    return 1 + sum(len(ch) for ch in children_sets(stage)[1:])


def formula_at(stage: StageModel, world: WorldId) -> Formula:
    """世界对应的公式标签"""
    return stage.tree.node(world).formula


def point_world(stage: StageModel) -> WorldId:
    """点：唯一没有非自反前驱的世界"""
    return stage.tree.root.walk_key


def semantic_realization_model(stage: StageModel) -> KripkeModel:
    """
    phi^0 的语义实现模型

    严格成员关系树（不含自环），叶子世界使其 phi^0 原子标签为真；
    在该模型上每个世界都满足自身的公式标签。
    """
    tree = stage.tree
    valuation: Dict[str, Tuple[str, ...]] = {}
    for node in tree.nodes:
        if not node.children and node.formula.tag is not None:
            valuation[node.walk_key] = (node.formula.tag,)
    return build_model(tree.keys, tree.tree_edges(), valuation)


def is_prefix(smaller: StageModel, larger: StageModel) -> bool:
    """较低阶段的规范节点序列是否为较高阶段的前缀"""
    small_keys = smaller.tree.keys
    return larger.tree.keys[:len(small_keys)] == small_keys
