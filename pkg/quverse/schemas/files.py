"""
输入文件的数据模式
"""

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from quverse.core.evidence import BPA
from quverse.core.kripke import KripkeModel, build_model
from quverse.core.proximity import ProximitySpace, build_space
from quverse.core.unfolding import SeedGraph


class SeedFile(BaseModel):
    """种子点图文件"""
    nodes: List[str] = Field(..., description="节点标识")
    edges: List[Tuple[str, str]] = Field(default_factory=list, description="成员关系边 [父, 成员]")
    root: str = Field(..., description="点")
    atoms: List[str] = Field(default_factory=list, description="原子节点")

    def to_seed(self) -> SeedGraph:
        return SeedGraph(
            nodes=tuple(self.nodes),
            edges=tuple(self.edges),
            root=self.root,
            atoms=frozenset(self.atoms),
        )


class ModelFile(BaseModel):
    """Kripke模型文件"""
    worlds: List[str] = Field(..., min_length=1, description="规范顺序的世界序列，首个为根")
    access: List[Tuple[str, str]] = Field(default_factory=list)
    valuation: Dict[str, List[str]] = Field(default_factory=dict)
    weights: Optional[Dict[str, float]] = None

    def to_model(self) -> KripkeModel:
        return build_model(self.worlds, self.access, self.valuation, self.weights)


class MassEntry(BaseModel):
    set: List[str] = Field(..., description="焦元")
    mass: float


class BpaFile(BaseModel):
    """基本概率分配文件"""
    frame: List[str]
    masses: List[MassEntry] = Field(default_factory=list)

    def to_bpa(self) -> BPA:
        masses: Dict[frozenset, float] = {}
        for entry in self.masses:
            key = frozenset(entry.set)
            masses[key] = masses.get(key, 0.0) + entry.mass
        return BPA(frame=tuple(self.frame), masses=masses)


class ProximityFile(BaseModel):
    """邻近空间文件：载体与无序元素对"""
    carrier: List[str]
    pairs: List[Tuple[str, str]] = Field(default_factory=list)

    def to_space(self) -> ProximitySpace:
        return build_space(self.carrier, self.pairs)


class PriorFile(BaseModel):
    """旧基上的先验"""
    prior: List[float]
