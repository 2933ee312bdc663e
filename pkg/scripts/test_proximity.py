#!/usr/bin/env python3
"""
测试邻近空间、量子集正交格、开路径与树度量
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quverse.core.kripke import build_model
from quverse.core.proximity import (
    bottom,
    build_space,
    from_kripke,
    is_p_continuous,
    is_quantum_set,
    join_p,
    meet_p,
    open_path,
    ortho_p,
    path_length,
    proximity_from_inner_products,
    proximity_from_spectrum,
    quanta_containing,
    quantum,
    quantum_of,
    quantum_set,
    quantum_sets,
    quantum_validates,
    separated,
    top,
    tree_metric,
)
from quverse.core.unfolding import unfold
from quverse.schemas.corpus import CORPUS
from quverse.utils.exceptions import (
    ModelValidationError,
    NotATreeError,
    NumericalError,
    UnknownElementError,
)


@pytest.fixture
def path3():
    return build_space(["1", "2", "3"], [("1", "2"), ("2", "3")])


def random_trees(max_size):
    """按父节点数组生成的随机树空间"""
    return st.integers(min_value=1, max_value=max_size).flatmap(
        lambda n: st.tuples(*[st.integers(min_value=0, max_value=i - 1) for i in range(1, n)]).map(
            lambda parents: build_space(
                [str(i) for i in range(len(parents) + 1)],
                [(str(p), str(i + 1)) for i, p in enumerate(parents)],
            )
        )
    )


def test_space_validation():
    with pytest.raises(UnknownElementError):
        build_space(["1"], [("1", "9")])
    space = build_space(["1", "2"], [("1", "2")])
    assert ("2", "1") in space.relation
    assert ("1", "1") in space.relation
    with pytest.raises(UnknownElementError):
        space.check("9")


def test_quanta_on_path(path3):
    assert quantum_of(path3, "1") == {"1", "2"}
    assert quantum_of(path3, "2") == {"1", "2", "3"}
    assert quanta_containing(path3, "1") == {"1", "2", "3"}


def test_quantum_set_examples(path3):
    assert is_quantum_set(path3, {"1", "2"})
    assert is_quantum_set(path3, set())
    assert is_quantum_set(path3, {"1", "2", "3"})
    assert not is_quantum_set(path3, {"2"})
    assert not is_quantum_set(path3, {"1", "3"})
    found = quantum_set(path3, {"2", "3"})
    assert found.witness == {"3"}


def test_lattice_operations_on_path(path3):
    left, right = quantum(path3, "1"), quantum(path3, "3")
    assert join_p(path3, left, right).members == {"1", "2", "3"}
    assert meet_p(path3, left, right).members == frozenset()
    assert ortho_p(path3, left).members == {"2", "3"}
    assert ortho_p(path3, top(path3)).members == frozenset()
    assert ortho_p(path3, bottom(path3)).members == path3.full


def test_quantum_sets_enumeration(path3):
    found = quantum_sets(path3)
    assert [sorted(q.members) for q in found] == [[], ["1", "2"], ["2", "3"], ["1", "2", "3"]]
    with pytest.raises(ModelValidationError):
        quantum_sets(path3, cap=2)


def test_discrete_space_is_boolean():
    space = build_space(["a", "b", "c"])
    assert len(quantum_sets(space)) == 8
    q = quantum_set(space, {"a"})
    assert ortho_p(space, q).members == {"b", "c"}


def test_separated(path3):
    assert separated(path3, {"1"}, {"3"})
    assert not separated(path3, {"1"}, {"2"})
    assert not separated(path3, {"1"}, {"1"})


def test_open_paths(path3):
    assert open_path(path3, "1", "3") == ("1", "2", "3")
    assert path_length(open_path(path3, "1", "3")) == 2
    assert open_path(path3, "2", "2") == ("2",)
    assert path_length(open_path(path3, "2", "2")) == 0
    split = build_space(["a", "b"])
    assert open_path(split, "a", "b") is None
    assert path_length(None) is None
    assert not is_p_continuous(split)
    assert is_p_continuous(path3)


def test_tree_metric_examples(path3):
    np.testing.assert_array_equal(tree_metric(path3), [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    star = build_space(["c", "x", "y", "z"], [("c", "x"), ("c", "y"), ("c", "z")])
    metric = tree_metric(star)
    assert metric[1, 2] == 2
    assert metric[0, 3] == 1


def test_tree_metric_rejects_cycles_and_forests():
    cycle = build_space(["1", "2", "3"], [("1", "2"), ("2", "3"), ("3", "1")])
    with pytest.raises(NotATreeError):
        tree_metric(cycle)
    with pytest.raises(NotATreeError):
        tree_metric(build_space(["1", "2"]))


def test_proximity_from_spectrum():
    space = proximity_from_spectrum([1.0, 1.0 + 1e-9, 2.0], 1e-6)
    assert space.carrier == ("1", "2", "3")
    assert ("1", "2") in space.relation
    assert ("1", "3") not in space.relation
    with pytest.raises(NumericalError):
        proximity_from_spectrum([1.0], -1.0)


def test_proximity_from_inner_products():
    space = proximity_from_inner_products([[1, 0], [1, 1], [0, 1]])
    assert ("1", "2") in space.relation
    assert ("2", "3") in space.relation
    assert ("1", "3") not in space.relation
    with pytest.raises(NumericalError):
        proximity_from_inner_products([[1, 0], [0, 0]])


def test_quantum_validation_matches_containment(path3):
    for x in path3.carrier:
        for size in range(4):
            for subset in itertools.combinations(path3.carrier, size):
                expected = quantum_of(path3, x) <= frozenset(subset)
                assert quantum_validates(path3, x, subset) is expected


def test_stage_spaces_are_trees():
    stage = unfold(CORPUS["nested_atoms"](), 3)
    sigma_pairs = stage.kripke.access | {(b, a) for a, b in stage.kripke.access}
    space = from_kripke(build_model(stage.kripke.worlds, sigma_pairs))
    assert is_p_continuous(space)
    assert tree_metric(space)[0].max() == 3


# 同构意义下 n 点树的个数
TREE_COUNTS = {1: 1, 2: 1, 3: 1, 4: 2, 5: 3, 6: 6, 7: 11, 8: 23, 9: 47, 10: 106}


def trees_of_size(n):
    if n == 1:
        return [build_space(["0"])]
    return [
        build_space([str(v) for v in sorted(g.nodes)], [(str(u), str(v)) for u, v in g.edges])
        for g in nx.nonisomorphic_trees(n)
    ]


def check_ortholattice(space):
    elements = quantum_sets(space)
    members = {q.members for q in elements}
    full = space.full
    assert bottom(space).members in members and top(space).members in members
    ortho = {}
    for q in elements:
        orth = ortho_p(space, q)
        assert orth.members in members
        assert ortho_p(space, orth).members == q.members
        assert join_p(space, q, orth).members == full
        assert meet_p(space, q, orth).members == frozenset()
        ortho[q.members] = orth
    # 元素按大小排序，a ⊆ b 时 a 总在 b 之前出现
    for a, b in itertools.combinations_with_replacement(elements, 2):
        joined = join_p(space, a, b)
        met = meet_p(space, a, b)
        assert joined.members in members
        assert met.members in members
        assert ortho[joined.members].members == meet_p(space, ortho[a.members], ortho[b.members]).members
        assert ortho[met.members].members == join_p(space, ortho[a.members], ortho[b.members]).members
        for x in (a, b):
            assert join_p(space, x, met).members == x.members
            assert meet_p(space, x, joined).members == x.members
        if a <= b:
            assert ortho[b.members] <= ortho[a.members]
    if len(space.carrier) <= 6:
        for a, b, c in itertools.product(elements, repeat=3):
            assert meet_p(space, meet_p(space, a, b), c).members == meet_p(space, a, meet_p(space, b, c)).members
            assert join_p(space, join_p(space, a, b), c).members == join_p(space, a, join_p(space, b, c)).members


@pytest.mark.parametrize("size", sorted(TREE_COUNTS))
def test_ortholattice_laws_on_all_trees(size):
    """|X| ≤ 10 的全部树：全部量子集与全部二元组"""
    trees = trees_of_size(size)
    assert len(trees) == TREE_COUNTS[size]
    for space in trees:
        check_ortholattice(space)


def test_star_lattice_size():
    star = build_space([str(i) for i in range(10)], [("0", str(i)) for i in range(1, 10)])
    # ∅ 与每个非空叶子集 S 对应的 S ∪ {中心}
    assert len(quantum_sets(star)) == 2 ** 9


@settings(max_examples=30, derandomize=True, deadline=None)
@given(random_trees(12))
def test_tree_metric_axioms(space):
    metric = tree_metric(space)
    n = len(space.carrier)
    assert (metric == metric.T).all()
    assert (np.diag(metric) == 0).all()
    for i, j, k in itertools.product(range(n), repeat=3):
        assert metric[i, k] <= metric[i, j] + metric[j, k]
    for i, j in itertools.combinations(range(n), 2):
        assert metric[i, j] >= 1
        x, y = space.carrier[i], space.carrier[j]
        assert path_length(open_path(space, x, y)) == metric[i, j]
