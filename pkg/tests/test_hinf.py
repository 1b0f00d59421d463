from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import random_stable
from robregret.errors import AssumptionViolated
from robregret.hinf import c2d, d2c, hinf_optimal, hinf_synthesize, verify
from robregret.sscore import StateSpace, freq_response, hinf_norm, is_schur, lft_lower

seeds = st.integers(min_value=0, max_value=2**31 - 1)


def scalar_loop():
    # x+ = 0.5 x + d + u,  e = (x, u),  y = x + d
    return StateSpace([[0.5]], [[1.0, 1.0]], [[1.0], [0.0], [1.0]], [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])


def test_zero_performance_path_is_feasible():
    # e = u only, d does not reach e or x
    G = StateSpace([[1.5]], [[0.0, 1.0]], [[0.0], [1.0]], [[0.0, 1.0], [0.0, 0.0]])
    for gamma in (1e-3, 1.0):
        K = hinf_synthesize(G, 1, 1, gamma)
        assert K is not None
        assert verify(G, K) < gamma


def test_scalar_loop_at_slack_level():
    G = scalar_loop()
    level, _ = hinf_optimal(G, 1, 1)
    K = hinf_synthesize(G, 1, 1, 1.05 * level)
    assert K is not None
    cl = lft_lower(G, K)
    assert is_schur(cl.A)
    assert hinf_norm(cl) < 1.05 * level


def test_unavoidable_feedthrough_is_infeasible():
    G = StateSpace([[0.5]], [[1.0, 1.0]], [[1.0], [1.0]], [[2.0, 0.0], [0.0, 0.0]])
    assert hinf_synthesize(G, 1, 1, 1.0) is None


def test_irregular_plant_named():
    G = StateSpace([[2.0]], [[1.0, 0.0]], [[1.0], [1.0]], [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(AssumptionViolated, match="stabilizable"):
        hinf_synthesize(G, 1, 1, 10.0)
    G = StateSpace([[2.0]], [[1.0, 1.0]], [[1.0], [0.0]], [[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(AssumptionViolated, match="detectable"):
        hinf_synthesize(G, 1, 1, 10.0)


def test_direct_measurement_feedthrough_rejected():
    G = StateSpace([[0.5]], [[1.0, 1.0]], [[1.0], [1.0]], [[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(AssumptionViolated):
        hinf_synthesize(G, 1, 1, 10.0)


def test_stabilizes_without_performance_channel():
    G = StateSpace([[2.0]], [[1.0]], [[1.0]], [[0.0]])
    K = hinf_synthesize(G, 1, 1, 1.0)
    assert K is not None
    assert is_schur(lft_lower(G, K).A)


def test_bilinear_pole_at_minus_one():
    with pytest.raises(AssumptionViolated):
        d2c(StateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.0]]))


# ---------------------------------------------------------------- properties


@given(seeds)
def test_bilinear_round_trip(seed):
    G = random_stable(np.random.default_rng(seed), 3, 2, 2)
    back = c2d(d2c(G))
    th = np.linspace(0, np.pi, 16)
    np.testing.assert_allclose(freq_response(back, th), freq_response(G, th), atol=1e-9)


@given(seeds)
def test_bilinear_preserves_norm(seed):
    G = random_stable(np.random.default_rng(seed), 2, 1, 2, radius=0.8)
    Gc = d2c(G)
    # continuous-time peak at s = j w corresponds to z = (1 + jw) / (1 - jw)
    w = np.tan(np.linspace(0, np.pi, 2001, endpoint=False)[1:] / 2)
    n = Gc.nx
    vals = [
        np.linalg.norm(Gc.C @ np.linalg.solve(1j * wk * np.eye(n) - Gc.A, Gc.B) + Gc.D, 2) for wk in w
    ]
    assert max(vals) == pytest.approx(hinf_norm(G), rel=1e-3)


@pytest.mark.invariant
@given(seeds)
def test_synthesized_controllers_verify(seed):
    rng = np.random.default_rng(seed)
    nx = int(rng.integers(1, 3))
    A = rng.standard_normal((nx, nx))
    B1, B2 = rng.standard_normal((nx, 1)), rng.standard_normal((nx, 1))
    C1 = np.vstack([rng.standard_normal((1, nx)), np.zeros((1, nx))])
    C2 = rng.standard_normal((1, nx))
    D = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    G = StateSpace(A, np.hstack([B1, B2]), np.vstack([C1, C2]), D)
    level, K = hinf_optimal(G, 1, 1)
    cl = lft_lower(G, K)
    assert is_schur(cl.A)
    assert hinf_norm(cl) == pytest.approx(level, rel=1e-6)
