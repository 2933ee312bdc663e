#!/usr/bin/env python3
"""
测试证据理论内核：BPA、信任/似然、模态表示、Born权重与后验
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quverse.core.evidence import (
    BPA,
    bayes_posterior,
    bel,
    bel_modal,
    bel_table,
    belief_posterior,
    born_weights,
    bpa_from_model,
    focal_elements,
    generalized_born,
    inclusion,
    likelihoods,
    modal_born_masses,
    modal_table,
    pl,
    pl_modal,
    point_mass_bpa,
    subsets,
)
from quverse.core.kripke import build_model
from quverse.core.proximity import build_space, quanta_containing
from quverse.core.unfolding import unfold
from quverse.schemas.corpus import nested_atoms
from quverse.utils.exceptions import DegenerateNormalizerError, EvidenceError, NumericalError

TOL = 1e-12


@pytest.fixture
def worked_model():
    return build_model(
        ["w1", "w2"],
        [("w1", "w1"), ("w1", "w2"), ("w2", "w2")],
        {"w1": ["x1"], "w2": ["x2"]},
        {"w1": 0.6, "w2": 0.4},
    )


def test_worked_example(worked_model):
    frame = ["x1", "x2"]
    b = bpa_from_model(worked_model, frame)
    assert b.mass({"x1", "x2"}) == pytest.approx(0.6)
    assert b.mass({"x2"}) == pytest.approx(0.4)
    assert b.mass({"x1"}) == 0.0
    assert bel(b, {"x1"}) == pytest.approx(0.0)
    assert pl(b, {"x1"}) == pytest.approx(0.6)
    assert bel(b, {"x2"}) == pytest.approx(0.4)
    assert pl(b, {"x2"}) == pytest.approx(1.0)
    assert bel_modal(worked_model, frame, {"x1"}) == pytest.approx(0.0)
    assert pl_modal(worked_model, frame, {"x1"}) == pytest.approx(0.6)
    assert bel_modal(worked_model, frame, set()) == 0.0
    assert bel_modal(worked_model, frame, frame) == pytest.approx(1.0)


def test_bpa_validation():
    with pytest.raises(EvidenceError):
        BPA(frame=("a", "b"), masses={frozenset({"a"}): 0.5})
    with pytest.raises(EvidenceError):
        BPA(frame=("a",), masses={frozenset(): 0.5, frozenset({"a"}): 0.5})
    with pytest.raises(EvidenceError):
        BPA(frame=("a",), masses={frozenset({"z"}): 1.0})
    with pytest.raises(EvidenceError):
        BPA(frame=("a", "a"), masses={frozenset({"a"}): 1.0})
    with pytest.raises(EvidenceError):
        BPA(frame=("a", "b"), masses={frozenset({"a"}): 1.5, frozenset({"b"}): -0.5})


def test_bel_outside_frame():
    b = point_mass_bpa(["a", "b"], [0.5, 0.5])
    with pytest.raises(EvidenceError):
        bel(b, {"c"})


def test_bayesian_special_case():
    """点质量BPA上 Bel = Pl = 概率测度"""
    b = point_mass_bpa(["a", "b", "c"], [0.2, 0.3, 0.5])
    for subset in subsets(b.frame):
        expected = math.fsum(w for x, w in zip(b.frame, [0.2, 0.3, 0.5]) if x in subset)
        assert bel(b, subset) == pytest.approx(expected, abs=TOL)
        assert pl(b, subset) == pytest.approx(expected, abs=TOL)


def test_bel_table_and_encoding():
    b = BPA(frame=("x1", "x2"), masses={frozenset({"x2", "x1"}): 0.6, frozenset({"x2"}): 0.4})
    rows = bel_table(b)
    assert [r["set"] for r in rows] == [[], ["x1"], ["x2"], ["x1", "x2"]]
    assert rows[2]["bel"] == pytest.approx(0.4)
    assert [b.encode(s) for s in focal_elements(b)] == [["x2"], ["x1", "x2"]]
    assert b.to_dict()["masses"][1] == {"set": ["x1", "x2"], "mass": 0.6}
    with pytest.raises(EvidenceError):
        list(subsets(["a", "b", "c"], cap=2))


def test_modal_preconditions():
    frame = ["x"]
    unweighted = build_model(["w"], [("w", "w")], {"w": ["x"]})
    with pytest.raises(EvidenceError):
        bel_modal(unweighted, frame, {"x"})
    not_serial = build_model(["w", "v"], [("w", "v")], {"w": ["x"], "v": ["x"]}, {"w": 0.5, "v": 0.5})
    with pytest.raises(EvidenceError):
        bpa_from_model(not_serial, frame)
    not_sva = build_model(["w"], [("w", "w")], {"w": []}, {"w": 1.0})
    with pytest.raises(EvidenceError):
        pl_modal(not_sva, frame, {"x"})


WEIGHT_VECTORS = 10


def _relation_classes(n):
    """n 个世界上的全部持续关系，世界重命名下每条轨道取一个代表"""
    worlds = [f"w{i}" for i in range(n)]
    cells = [(i, j) for i in range(n) for j in range(n)]
    moves = [[p[i] * n + p[j] for i, j in cells] for p in itertools.permutations(range(n))]
    row_mask = (1 << n) - 1
    seen = set()
    for mask in range(1 << (n * n)):
        if mask in seen:
            continue
        seen.update(sum(1 << move[b] for b in range(n * n) if mask >> b & 1) for move in moves)
        if all(mask >> (i * n) & row_mask for i in range(n)):
            yield [(worlds[i], worlds[j]) for b, (i, j) in enumerate(cells) if mask >> b & 1]


def _label_patterns(n):
    """世界到标签下标的映射，标签重命名下取限制增长串"""
    def grow(prefix, used):
        if len(prefix) == n:
            yield prefix
            return
        for x in range(used + 1):
            yield from grow(prefix + (x,), max(used, x + 1))
    return list(grow((), 0))


def _weight_vectors(rng, n):
    raw = rng.random((WEIGHT_VECTORS, n)) + 0.05
    return [[float(x) for x in row / row.sum()] for row in raw]


def _check_agreement(model, frame):
    b = bpa_from_model(model, frame)
    for subset in subsets(frame):
        assert abs(bel_modal(model, frame, subset) - bel(b, subset)) <= TOL
        assert abs(pl_modal(model, frame, subset) - pl(b, subset)) <= TOL


def _check_tables(model, frame):
    b = bpa_from_model(model, frame)
    for row in modal_table(model, frame):
        assert abs(row["bel"] - bel(b, row["set"])) <= TOL, (model.to_dict(), row)
        assert abs(row["pl"] - pl(b, row["set"])) <= TOL, (model.to_dict(), row)


def test_enumeration_sizes():
    assert [sum(1 for _ in _relation_classes(n)) for n in (1, 2, 3)] == [1, 6, 70]
    assert [len(_label_patterns(n)) for n in (1, 2, 3, 4)] == [1, 2, 5, 15]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_modal_agrees_with_subset_sums_small_models(n):
    """|W| ≤ 3：全部持续关系 × 全部SVA标注 × 框架 |X| ≤ 4（含未用标签）× 10组权重"""
    rng = np.random.default_rng(n)
    worlds = [f"w{i}" for i in range(n)]
    checked = 0
    for access in _relation_classes(n):
        for pattern in _label_patterns(n):
            for size in range(max(pattern) + 1, 5):
                frame = [f"x{k}" for k in range(1, size + 1)]
                valuation = {w: [frame[k]] for w, k in zip(worlds, pattern)}
                for weights in _weight_vectors(rng, n):
                    model = build_model(worlds, access, valuation, dict(zip(worlds, weights)), atoms=frame)
                    _check_agreement(model, frame)
                    _check_tables(model, frame)
                    checked += 1
    assert checked == {1: 4, 2: 6 * 7, 3: 70 * 15}[n] * WEIGHT_VECTORS


@pytest.mark.parametrize("blocks", [1, 2, 3, 4])
def test_modal_agrees_with_subset_sums_four_worlds(blocks):
    """|W| = 4：全部持续关系 × 恰用 blocks 个标签的全部SVA标注 × 10组权重"""
    n = 4
    rng = np.random.default_rng(40 + blocks)
    worlds = [f"w{i}" for i in range(n)]
    frame = [f"x{k}" for k in range(1, blocks + 1)]
    patterns = [p for p in _label_patterns(n) if max(p) + 1 == blocks]
    relations = list(_relation_classes(n))
    assert len(relations) == 2340
    for access in relations:
        for pattern in patterns:
            base = build_model(worlds, access, {w: [frame[k]] for w, k in zip(worlds, pattern)}, atoms=frame)
            for weights in _weight_vectors(rng, n):
                _check_tables(base.with_weights(dict(zip(worlds, weights))), frame)


def test_modal_table_matches_single_queries(worked_model):
    frame = ["x1", "x2"]
    rows = modal_table(worked_model, frame)
    assert [r["set"] for r in rows] == [[], ["x1"], ["x2"], ["x1", "x2"]]
    for row in rows:
        assert row["bel"] == bel_modal(worked_model, frame, row["set"])
        assert row["pl"] == pl_modal(worked_model, frame, row["set"])


@st.composite
def random_bpas(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    frame = [f"x{i}" for i in range(n)]
    entries = draw(st.lists(
        st.tuples(st.integers(min_value=1, max_value=(1 << n) - 1), st.integers(min_value=1, max_value=50)),
        min_size=1, max_size=8,
    ))
    total = sum(w for _, w in entries)
    masses = {}
    for mask, w in entries:
        key = frozenset(x for i, x in enumerate(frame) if mask >> i & 1)
        masses[key] = masses.get(key, 0.0) + w / total
    return BPA(frame=tuple(frame), masses=masses)


@settings(max_examples=200, derandomize=True, deadline=None)
@given(random_bpas())
def test_belief_axioms(b):
    frame = frozenset(b.frame)
    assert abs(bel(b, frame) - 1.0) <= TOL
    assert bel(b, set()) == 0.0
    all_subsets = list(subsets(b.frame))
    for a in all_subsets:
        assert bel(b, a) <= pl(b, a) + TOL
        assert bel(b, a) + bel(b, frame - a) <= 1.0 + TOL
        assert abs(pl(b, a) - (1.0 - bel(b, frame - a))) <= TOL
    for a, c in itertools.product(all_subsets, repeat=2):
        union, meet = a | c, a & c
        assert bel(b, union) + TOL >= bel(b, a) + bel(b, c) - bel(b, meet)
        assert pl(b, union) <= pl(b, a) + pl(b, c) - pl(b, meet) + TOL
        if a <= c:
            assert bel(b, a) <= bel(b, c) + TOL
            assert pl(b, a) <= pl(b, c) + TOL


def test_born_weights_examples():
    np.testing.assert_allclose(born_weights([1.0], np.eye(2)), [1.0, 0.0])
    basis = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2)
    np.testing.assert_allclose(born_weights([1.0], basis), [0.5, 0.5])
    with pytest.raises(NumericalError):
        born_weights([1.0], np.array([[1.0, 1.0], [0.0, 1.0]]))
    with pytest.raises(NumericalError):
        born_weights([2.0], np.eye(2))
    with pytest.raises(NumericalError):
        born_weights([1.0, 0.0, 0.0], np.eye(2))


def test_inclusion_maps_by_key():
    np.testing.assert_array_equal(inclusion([0.6, 0.8], ["a", "b"], ["a", "c", "b"]), [0.6, 0.0, 0.8])
    with pytest.raises(NumericalError):
        inclusion([1.0], ["z"], ["a", "b"])


def test_modal_born_masses_reproduce_weights():
    model = unfold(nested_atoms(), 2).kripke
    raw = np.arange(1, len(model.worlds) + 1, dtype=float)
    weights = raw / raw.sum()
    masses = modal_born_masses(model, weights)
    assert np.max(np.abs(np.array(masses) - weights)) <= TOL


def test_generalized_born_examples():
    chain = build_space(["1", "2", "3"], [("1", "2"), ("2", "3")])
    assert generalized_born(chain, [0.2, 0.3, 0.5], "1") == pytest.approx(1.0)
    path4 = build_space(["1", "2", "3", "4"], [("1", "2"), ("2", "3"), ("3", "4")])
    omega = [0.1, 0.2, 0.3, 0.4]
    assert generalized_born(path4, omega, "1") == pytest.approx(0.6)
    discrete = build_space(["1", "2", "3", "4"])
    for i, x in enumerate(discrete.carrier):
        assert generalized_born(discrete, omega, x) == pytest.approx(omega[i])
    star = build_space(["c", "x", "y"], [("c", "x"), ("c", "y")])
    assert generalized_born(star, [0.5, 0.25, 0.25], "x") == pytest.approx(1.0)
    with pytest.raises(EvidenceError):
        generalized_born(star, [1.0], "x")


def test_generalized_born_is_belief_of_region():
    path4 = build_space(["1", "2", "3", "4"], [("1", "2"), ("2", "3"), ("3", "4")])
    omega = [0.1, 0.2, 0.3, 0.4]
    b = point_mass_bpa(path4.carrier, omega)
    for x in path4.carrier:
        assert generalized_born(path4, omega, x) == pytest.approx(bel(b, quanta_containing(path4, x)))


def test_generalized_born_monotone_in_relation():
    omega = [0.1, 0.2, 0.3, 0.4]
    carrier = ["1", "2", "3", "4"]
    small = build_space(carrier, [("1", "2")])
    large = build_space(carrier, [("1", "2"), ("2", "3"), ("3", "4")])
    for x in carrier:
        assert generalized_born(small, omega, x) <= generalized_born(large, omega, x) + TOL


def test_likelihoods_sub_normalization():
    keys = ["a", "b"]
    new_keys = ["a", "b", "c"]
    spread = likelihoods(np.ones(3) / math.sqrt(3), np.eye(2), keys, new_keys)
    assert spread.sum() == pytest.approx(2 / 3)
    assert spread.sum() < 1.0
    inside = likelihoods([0.6, 0.8, 0.0], np.eye(2), keys, new_keys)
    assert inside.sum() == pytest.approx(1.0)


def test_bayes_posterior():
    assert bayes_posterior([0.5, 0.5], [1.0, 0.0], 0) == pytest.approx(1.0)
    assert bayes_posterior([0.5, 0.5], [0.5, 0.5], 0) == pytest.approx(0.5)
    # 两项归一化：0.3*0.8 / (0.3*0.8 + 0.7*0.2)
    assert bayes_posterior([0.3, 0.7], [0.8, 0.2], 0) == pytest.approx(0.24 / 0.38)
    with pytest.raises(DegenerateNormalizerError):
        bayes_posterior([0.5, 0.5], [0.0, 0.0], 0)
    with pytest.raises(EvidenceError):
        bayes_posterior([0.5, 0.6], [0.5, 0.5], 0)
    with pytest.raises(EvidenceError):
        bayes_posterior([0.5, 0.5], [0.5, 0.5], 2)


def test_belief_posterior_on_discrete_space():
    space = build_space(["1", "2"])
    assert belief_posterior(space, [0.25, 0.75], "2") == pytest.approx(0.75)
    joined = build_space(["1", "2"], [("1", "2")])
    assert belief_posterior(joined, [0.25, 0.75], "2") == pytest.approx(1.0)
