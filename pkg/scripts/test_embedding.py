#!/usr/bin/env python3
"""
测试码字嵌入、D_2、Jacobi特征分解与优选基
"""
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math

import networkx as nx
import numpy as np
import pytest

from quverse.config.settings import PairingRule
from quverse.core.embedding import (
    Codeword,
    _reorthonormalize,
    code_params,
    codewords,
    codewords_for_space,
    codewords_from_edges,
    distance_matrix_d2,
    eigh,
    hamming_matrix,
    norm_check,
    preferred_basis,
    sign_normalize,
)
from quverse.core.jacobi import check_symmetric, jacobi_eigh
from quverse.core.proximity import build_space, tree_metric
from quverse.core.unfolding import unfold
from quverse.schemas.corpus import nested_atoms
from quverse.utils.exceptions import NotATreeError, NumericalError


def random_tree(rng, n):
    carrier = [str(i) for i in range(n)]
    pairs = [(str(int(rng.integers(0, i))), str(i)) for i in range(1, n)]
    return build_space(carrier, pairs)


@pytest.fixture
def chain3():
    return build_space(["1", "2", "3"], [("1", "2"), ("2", "3")])


def test_chain_codewords(chain3):
    words = codewords_for_space(chain3)
    assert [w.text() for w in words] == ["00", "10", "11"]
    np.testing.assert_array_equal(hamming_matrix(words), tree_metric(chain3))


def test_star_codewords():
    star = build_space(["c", "x", "y", "z"], [("c", "x"), ("c", "y"), ("c", "z")])
    words = codewords_for_space(star)
    assert [w.text() for w in words] == ["000", "100", "010", "001"]
    assert words[1].hamming(words[2]) == 2


def test_codewords_reject_non_trees():
    with pytest.raises(NotATreeError):
        codewords_for_space(build_space(["1", "2"]))
    with pytest.raises(NotATreeError):
        codewords_from_edges(["r", "a"], [("r", "a"), ("a", "a")], "r")


def test_unfold_tree_codewords():
    stage = unfold(nested_atoms(), 3)
    words = codewords(stage.tree)
    assert words[0].bits == (0,) * 7
    assert len(words) == stage.z_u
    assert sum(words[-1].bits) == 3
    assert norm_check(words)


def test_code_params(chain3):
    params = code_params(codewords_for_space(chain3))
    assert (params.length, params.count, params.min_distance, params.correction) == (2, 3, 1, 0)
    assert not params.degenerate
    twins = [Codeword("a", (1, 0)), Codeword("b", (1, 0))]
    assert code_params(twins).degenerate
    with pytest.raises(NumericalError):
        code_params(twins[:1])


def test_d2_chain(chain3):
    d2 = distance_matrix_d2(codewords_for_space(chain3))
    expected = np.array([[0, 1, math.sqrt(2)], [1, 0, 1], [math.sqrt(2), 1, 0]])
    np.testing.assert_allclose(d2, expected, atol=1e-15)


def test_eigh_identity_is_fully_degenerate():
    spectrum = eigh(np.eye(3))
    np.testing.assert_allclose(spectrum.eigenvalues, [1, 1, 1])
    np.testing.assert_allclose(spectrum.eigenvectors, np.eye(3), atol=1e-12)
    assert spectrum.degeneracy_flags == ((0, 1), (0, 2), (1, 2))
    assert not spectrum.non_degenerate


def test_eigh_swap_matrix():
    spectrum = eigh(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(spectrum.eigenvalues, [1.0, -1.0], atol=1e-14)
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(spectrum.eigenvectors, [[s, s], [s, -s]], atol=1e-14)
    assert spectrum.non_degenerate


def _small_trees():
    """N ≤ 4 的全部树（同构意义下）"""
    yield build_space(["0"])
    for n in (2, 3, 4):
        for g in nx.nonisomorphic_trees(n):
            yield build_space([str(v) for v in sorted(g.nodes)], [(str(u), str(v)) for u, v in g.edges])


def test_eigh_against_characteristic_polynomial():
    """与特征多项式的根对照：N=1、N=2、三点链、四点链、三叶星"""
    trees = list(_small_trees())
    assert sorted(len(t.carrier) for t in trees) == [1, 2, 3, 4, 4]
    for space in trees:
        d2 = distance_matrix_d2(codewords_for_space(space))
        n = d2.shape[0]
        spectrum = eigh(d2)
        radius = spectrum.radius
        scale = max(1.0, radius)
        coeffs = np.poly(d2)
        oracle = np.sort(np.real(np.roots(coeffs)))[::-1]
        # 重根处 np.roots 只有约 sqrt(eps) 的精度，逐个根再用多项式取值收紧
        np.testing.assert_allclose(spectrum.eigenvalues, oracle, atol=1e-7 * scale)
        for lam in spectrum.eigenvalues:
            assert abs(np.polyval(coeffs, lam)) <= 1e-9 * scale ** n
        assert spectrum.residual(d2) <= 1e-9 * radius
        assert spectrum.positive_count() == (1 if n > 1 else 0)


def test_eigh_is_deterministic():
    rng = np.random.default_rng(7)
    m = rng.normal(size=(8, 8))
    m = m + m.T
    first, second = eigh(m), eigh(m.copy())
    assert first.eigenvalues.tobytes() == second.eigenvalues.tobytes()
    assert first.eigenvectors.tobytes() == second.eigenvectors.tobytes()


def test_sign_normalize():
    np.testing.assert_array_equal(sign_normalize(np.array([0.5, -1.0, 1.0])), [-0.5, 1.0, -1.0])
    np.testing.assert_array_equal(sign_normalize(np.zeros(2)), [0.0, 0.0])


def test_symmetry_and_convergence_errors():
    with pytest.raises(NumericalError):
        check_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(NumericalError):
        check_symmetric(np.zeros((2, 3)))
    rng = np.random.default_rng(0)
    m = rng.normal(size=(6, 6))
    with pytest.raises(NumericalError):
        jacobi_eigh(m + m.T, max_sweeps=1)
    values, vectors, sweeps = jacobi_eigh(np.array([[3.0]]))
    assert values.tolist() == [3.0] and sweeps == 0


def test_degenerate_star_still_orthonormal():
    star = build_space(["c", "x", "y", "z"], [("c", "x"), ("c", "y"), ("c", "z")])
    d2 = distance_matrix_d2(codewords_for_space(star))
    spectrum = eigh(d2)
    assert spectrum.degeneracy_flags
    assert spectrum.orthonormality_error() <= 1e-10
    assert spectrum.residual(d2) <= 1e-9 * spectrum.radius


@pytest.mark.parametrize("scale", [1e-6, 1.0, 1e6])
def test_large_degenerate_spectrum_orthonormal(scale):
    n = 30
    matrix = scale * (np.ones((n, n)) - np.eye(n))
    spectrum = eigh(matrix)
    np.testing.assert_allclose(spectrum.eigenvalues, [scale * (n - 1)] + [-scale] * (n - 1), rtol=1e-10)
    assert len(spectrum.degeneracy_flags) == (n - 1) * (n - 2) // 2
    assert spectrum.orthonormality_error() <= 1e-10
    assert spectrum.residual(matrix) <= 1e-9 * spectrum.radius


def test_wide_star_still_orthonormal():
    leaves = [f"x{i}" for i in range(20)]
    star = build_space(["c"] + leaves, [("c", x) for x in leaves])
    d2 = distance_matrix_d2(codewords_for_space(star))
    spectrum = eigh(d2)
    assert spectrum.degeneracy_flags
    assert spectrum.orthonormality_error() <= 1e-10
    assert spectrum.residual(d2) <= 1e-9 * spectrum.radius


def test_reorthonormalize_spans_same_subspace():
    rng = np.random.default_rng(11)
    block, _ = np.linalg.qr(rng.standard_normal((200, 40)))
    basis = _reorthonormalize(block)
    assert basis.shape == (200, 40)
    np.testing.assert_allclose(basis.T @ basis, np.eye(40), atol=1e-10)
    np.testing.assert_allclose(basis @ basis.T, block @ block.T, atol=1e-8)
    # 下限超过任何投影列范数时无法选出足够的轴
    with pytest.raises(NumericalError):
        _reorthonormalize(block, eps_zero=2.0)


def test_isometry_on_random_trees():
    """码字汉明距离等于树度量"""
    rng = np.random.default_rng(2024)
    for _ in range(100):
        space = random_tree(rng, int(rng.integers(1, 257)))
        words = codewords_for_space(space)
        np.testing.assert_array_equal(hamming_matrix(words), tree_metric(space))
        assert norm_check(words)


def test_schoenberg_on_random_trees():
    """D_2 恰有一个正特征值，且分解可精确重构"""
    rng = np.random.default_rng(11)
    sizes = [2, 3, 5, 8, 13, 21, 34, 64] + [int(rng.integers(2, 65)) for _ in range(4)]
    for n in sizes:
        space = random_tree(rng, n)
        d2 = distance_matrix_d2(codewords_for_space(space))
        spectrum = eigh(d2)
        radius = spectrum.radius
        assert spectrum.positive_count() == 1, n
        assert spectrum.residual(d2) <= 1e-9 * radius
        assert float(np.max(np.abs(spectrum.reconstruct() - d2))) <= 1e-8 * radius
        assert abs(float(np.sum(spectrum.eigenvalues))) <= 1e-9 * radius * n
        assert spectrum.orthonormality_error() <= 1e-10
        assert list(spectrum.eigenvalues) == sorted(spectrum.eigenvalues, reverse=True)


def test_preferred_basis_rules(chain3):
    spectrum = eigh(distance_matrix_d2(codewords_for_space(chain3)))
    worlds = ["ε", "ε/0", "ε/0/0"]
    positional = preferred_basis(worlds, spectrum, PairingRule.POSITIONAL)
    assert positional.assignment == {"ε": 0, "ε/0": 1, "ε/0/0": 2}
    np.testing.assert_array_equal(positional.matrix, spectrum.eigenvectors)
    assert positional.eigenvalue("ε") == spectrum.eigenvalues[0]

    greedy = preferred_basis(worlds, spectrum, PairingRule.MAX_COMPONENT)
    assert sorted(greedy.assignment.values()) == [0, 1, 2]
    np.testing.assert_allclose(greedy.sigma(), spectrum.reconstruct())

    with pytest.raises(NumericalError):
        preferred_basis(worlds[:2], spectrum)


def test_preferred_basis_single_world():
    spectrum = eigh(np.zeros((1, 1)))
    basis = preferred_basis(["ε"], spectrum)
    np.testing.assert_array_equal(basis.vector("ε"), [1.0])
    assert spectrum.positive_count() == 0
