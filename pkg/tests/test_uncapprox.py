from __future__ import annotations

import numpy as np
import pytest

from helpers import frozen_plant
from robregret.errors import DimensionMismatch, VertexError
from robregret.robsyn import factor_factory
from robregret.sscore import (
    BlockStructure,
    StateSpace,
    closed_loop,
    freq_response,
    series,
)
from robregret.uncapprox import (
    BlockIndexError,
    LinearizedInverse,
    approximation_error,
    assemble_M,
    build_augmented,
    close_M,
    linearize_inverse,
    m_block,
    vertex,
)

TH16 = np.linspace(0, 2 * np.pi, 16, endpoint=False)


@pytest.fixture(scope="module")
def lin375(plant):
    return linearize_inverse(factor_factory(plant, 3.75), plant.block)


# ---------------------------------------------------------------- vertex


def test_vertex_examples():
    np.testing.assert_array_equal(vertex(1, 1, BlockStructure((1,))), [[1.0]])
    b = BlockStructure((1, 2))
    np.testing.assert_array_equal(vertex(2, -1, b), np.diag([0.0, -1.0, -1.0]))
    for i in (1, 2):
        np.testing.assert_array_equal(vertex(i, 1, b) + vertex(i, -1, b), 0.0)


def test_vertex_bad_index():
    b = BlockStructure((1, 2))
    for i in (0, 3):
        with pytest.raises(BlockIndexError):
            vertex(i, 1, b)
    with pytest.raises(IndexError):
        vertex(-1, 1, b)


# ---------------------------------------------------------------- linearization


def test_independent_plant_has_no_slope():
    P = frozen_plant()
    lin = linearize_inverse(factor_factory(P, 2.0), P.block)
    assert np.max(np.abs(freq_response(lin.N[1], TH16))) < 1e-10


def test_slope_definition(plant, lin375):
    fac = factor_factory(plant, 3.75)
    plus = freq_response(fac(np.array([1.0])).Finv, TH16)
    minus = freq_response(fac(np.array([-1.0])).Finv, TH16)
    np.testing.assert_allclose(freq_response(lin375.N[1], TH16), 0.5 * (plus - minus), atol=1e-12)
    np.testing.assert_allclose(
        freq_response(lin375.N[0], TH16), freq_response(fac(np.array([0.0])).Finv, TH16), atol=0
    )


def test_vertex_failure_is_annotated(plant):
    base = factor_factory(plant, 3.75)

    def factory(d):
        if d[0] < 0:
            raise ValueError("boom")
        return base(d)

    with pytest.raises(VertexError, match="-E_1"):
        linearize_inverse(factory, plant.block)


def test_approximation_error_diagnostic(plant, lin375):
    rep = approximation_error(lin375, factor_factory(plant, 3.75), [-1, -0.5, 0, 0.5, 1])
    errs = dict(zip([d[0] for d in rep["deltas"]], rep["errors"]))
    # exact at the center, growing toward the ends of the box
    assert errs[0.0] < 1e-10
    assert 1e-6 < errs[0.5] < errs[1.0]
    assert 1e-6 < errs[-0.5] < errs[-1.0]
    assert rep["max"] == max(rep["errors"])


# ---------------------------------------------------------------- M


def static_lin(n0, n1):
    N = [StateSpace.static([[n0]]), StateSpace.static([[n1]])]
    return LinearizedInverse(N=N, gamma_R=1.0, block=BlockStructure((1,)))


def test_assemble_static_pattern():
    M = assemble_M(static_lin(0.7, -0.2))
    assert M.nx == 0
    np.testing.assert_array_equal(M.D, [[0.0, 1.0], [-0.2, 0.7]])


def test_M_zero_closure(lin375):
    M = assemble_M(lin375)
    np.testing.assert_allclose(
        freq_response(close_M(M, lin375, [0.0]), TH16), freq_response(lin375.N[0], TH16), atol=1e-13
    )


@pytest.mark.invariant
def test_M_affine_closure(rng):
    N = [StateSpace([[0.3]], [[1.0]], [[0.5]], [[1.2]])]
    for _ in range(2):
        N.append(StateSpace([[rng.uniform(-0.8, 0.8)]], [[1.0]], [[rng.standard_normal()]], [[rng.standard_normal()]]))
    lin = LinearizedInverse(N=N, gamma_R=1.0, block=BlockStructure((1, 1)))
    M = assemble_M(lin)
    n = 2 * lin.n_d
    # structural zeros of the uncertainty-to-uncertainty block
    np.testing.assert_array_equal(M.C[:n], 0.0)
    np.testing.assert_array_equal(M.D[:n, :n], 0.0)
    for _ in range(10):
        dl = rng.uniform(-1, 1, 2)
        np.testing.assert_allclose(freq_response(close_M(M, lin, dl), TH16), lin(dl, TH16), atol=1e-12)


@pytest.mark.invariant
def test_M_vertex_residual_is_curvature(plant, lin375):
    # the central-difference fit is exact at 0; at both vertices it misses by
    # the same second difference (F_+^{-1} + F_-^{-1}) / 2 - F_0^{-1}
    M = assemble_M(lin375)
    fac = factor_factory(plant, 3.75)
    F = {s: freq_response(fac(np.array([s])).Finv, TH16) for s in (-1.0, 0.0, 1.0)}
    curvature = 0.5 * (F[1.0] + F[-1.0]) - F[0.0]
    for s in (1.0, -1.0):
        miss = F[s] - freq_response(close_M(M, lin375, [s]), TH16)
        np.testing.assert_allclose(miss, curvature, atol=1e-10)
    assert np.max(np.abs(curvature)) > 1e-4


# ---------------------------------------------------------------- augmented plant


@pytest.mark.invariant
def test_augmented_structure(plant, lin375):
    M = assemble_M(lin375)
    aug = build_augmented(plant, M, m_block(lin375).sizes)
    assert aug.Phat.block.sizes == plant.block.sizes + plant.block.sizes
    assert aug.Phat.ss.nx == plant.ss.nx + M.nx
    assert (aug.Phat.n_d, aug.Phat.n_u, aug.Phat.n_e, aug.Phat.n_y) == (plant.n_d, plant.n_u, plant.n_e, plant.n_y)


def test_augmented_rejects_wrong_M(plant):
    with pytest.raises(DimensionMismatch):
        build_augmented(plant, StateSpace.static(np.eye(3)))


@pytest.mark.parametrize("delta", [0.0, 0.5, -0.8])
def test_augmented_composition(plant, lin375, delta):
    M = assemble_M(lin375)
    aug = build_augmented(plant, M)
    for K in (StateSpace.static([[-0.3, 0.0]]), StateSpace([[0.2]], [[1.0, 0.5]], [[-0.1]], [[-0.4, -0.2]])):
        lhs = closed_loop(aug.Phat, K, np.diag([delta, delta]))
        rhs = series(closed_loop(plant, K, [[delta]]), close_M(M, lin375, [delta]))
        np.testing.assert_allclose(freq_response(lhs, TH16), freq_response(rhs, TH16), atol=1e-10)
        direct = freq_response(closed_loop(plant, K, [[delta]]), TH16) @ lin375([delta], TH16)
        np.testing.assert_allclose(freq_response(lhs, TH16), direct, atol=1e-10)
