"""
种子语料
验收与性质测试共用的种子点图，含有限良基集合、循环与自环种子
"""

from typing import Callable, Dict, List, Sequence, Tuple

from quverse.core.unfolding import SeedGraph


def _seed(root: str, edges: Sequence[Tuple[str, str]], atoms: Sequence[str] = (), extra: Sequence[str] = ()) -> SeedGraph:
    nodes: List[str] = [root]
    for src, dst in edges:
        for node in (src, dst):
            if node not in nodes:
                nodes.append(node)
    for node in list(atoms) + list(extra):
        if node not in nodes:
            nodes.append(node)
    return SeedGraph(nodes=tuple(nodes), edges=tuple(edges), root=root, atoms=frozenset(atoms))


def nested_atoms() -> SeedGraph:
    """U³ = {a1, {a2}, {a3, {a4}}}"""
    return _seed(
        "u",
        [("u", "a1"), ("u", "b"), ("u", "c"), ("b", "a2"), ("c", "a3"), ("c", "d"), ("d", "a4")],
        atoms=["a1", "a2", "a3", "a4"],
    )


def von_neumann(n: int) -> SeedGraph:
    """冯·诺依曼序数 n = {0, 1, ..., n-1}，空集共享为一个节点"""
    names = ["e"] + [f"n{k}" for k in range(1, n + 1)]
    edges = [(names[k], names[j]) for k in range(n, 0, -1) for j in range(k)]
    return _seed(names[n], edges, extra=names[:n])


def zermelo(n: int) -> SeedGraph:
    """Zermelo序数 {{...{∅}...}}"""
    names = ["e"] + [f"z{k}" for k in range(1, n + 1)]
    return _seed(names[n], [(names[k], names[k - 1]) for k in range(n, 0, -1)], extra=["e"])


CORPUS: Dict[str, Callable[[], SeedGraph]] = {
    "nested_atoms": nested_atoms,
    "von_neumann_3": lambda: von_neumann(3),
    "von_neumann_2": lambda: von_neumann(2),
    "von_neumann_4": lambda: von_neumann(4),
    "zermelo_3": lambda: zermelo(3),
    "empty": lambda: _seed("u", []),
    "single_atom": lambda: _seed("u", [("u", "a")], atoms=["a"]),
    "atom_self_loop": lambda: _seed("u", [("u", "a"), ("a", "a")], atoms=["a"]),
    "chain": lambda: _seed("r", [("r", "a"), ("a", "b")], atoms=["b"]),
    "deep_chain": lambda: _seed("c0", [(f"c{k}", f"c{k + 1}") for k in range(5)], atoms=["c5"]),
    "star": lambda: _seed("u", [("u", "a1"), ("u", "a2"), ("u", "a3")], atoms=["a1", "a2", "a3"]),
    "wide_star": lambda: _seed("u", [("u", f"a{k}") for k in range(1, 6)], atoms=[f"a{k}" for k in range(1, 6)]),
    "pair_shared_atom": lambda: _seed("u", [("u", "a"), ("u", "b"), ("b", "a")], atoms=["a"]),
    "diamond": lambda: _seed("u", [("u", "b"), ("u", "c"), ("b", "d"), ("c", "d")], atoms=["d"]),
    "binary_depth2": lambda: _seed(
        "u",
        [("u", "l"), ("u", "r"), ("l", "a1"), ("l", "a2"), ("r", "a3"), ("r", "a4")],
        atoms=["a1", "a2", "a3", "a4"],
    ),
    "quine_atom": lambda: _seed("u", [("u", "u")]),
    "quine_with_atom": lambda: _seed("u", [("u", "u"), ("u", "a")], atoms=["a"]),
    "two_cycle": lambda: _seed("u", [("u", "v"), ("v", "u")]),
    "three_cycle": lambda: _seed("u", [("u", "v"), ("v", "w"), ("w", "u")]),
    "cycle_with_atom": lambda: _seed("u", [("u", "v"), ("v", "u"), ("v", "a")], atoms=["a"]),
    "inner_cycle": lambda: _seed("u", [("u", "v"), ("v", "w"), ("w", "v")]),
    "root_loop_branch": lambda: _seed("u", [("u", "u"), ("u", "v"), ("v", "u")]),
}


def corpus() -> Dict[str, SeedGraph]:
    """全部语料种子"""
    return {name: factory() for name, factory in CORPUS.items()}
