from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import causal_state_feedback_cost, least_squares_cost, random_realized_plant
from robregret.baseline import (
    RealizedPlant,
    baseline_at,
    baseline_freq_map,
    build_baseline,
    noncausal_cost,
)
from robregret.errors import AssumptionViolated
from robregret.example import dare_closed_form
from robregret.sscore import Signal, StateSpace, UncertainPlant, closed_loop, simulate

seeds = st.integers(min_value=0, max_value=2**31 - 1)
S3 = np.sqrt(3.0)


def example_realized(B_d=5.0):
    return RealizedPlant(
        A=np.array([[0.5]]),
        B_d=np.array([[B_d]]),
        B_u=np.array([[1.0]]),
        C_e=np.array([[S3], [0.0]]),
        D_eu=np.array([[0.0], [1.0]]),
    )


def test_gains_example(plant):
    nc = baseline_at(plant)
    X = dare_closed_form(0.0)
    assert nc.K_v[0, 0] == pytest.approx(1 / (1 + X), abs=1e-12)
    assert nc.K_d[0, 0] == pytest.approx(5 * X / (1 + X), abs=1e-12)
    assert nc.K_v[0, 0] == pytest.approx(0.238645, abs=1e-6)
    assert nc.K_d[0, 0] == pytest.approx(3.806779, abs=1e-6)


def test_gains_recomputable(plant):
    nc = baseline_at(plant, [0.3])
    p, X = nc.plant, nc.dare.X
    W = p.cost.R + p.B_u.T @ X @ p.B_u
    np.testing.assert_allclose(nc.K_v, np.linalg.solve(W, p.B_u.T), rtol=1e-14)
    np.testing.assert_allclose(nc.K_d, np.linalg.solve(W, p.B_u.T @ X @ p.B_d), rtol=1e-14)


def test_zero_disturbance_input():
    nc = build_baseline(example_realized(B_d=0.0))
    assert np.all(nc.K_d == 0)
    np.testing.assert_allclose(baseline_freq_map(nc, np.linspace(0, 6, 9)), 0.0)


def test_missing_input_weight_is_rejected():
    p = RealizedPlant(
        A=np.array([[0.5]]), B_d=np.array([[1.0]]), B_u=np.array([[0.0]]), C_e=np.array([[1.0]]), D_eu=np.array([[0.0]])
    )
    with pytest.raises(AssumptionViolated):
        build_baseline(p)


def test_zero_disturbance_cost():
    nc = build_baseline(example_realized())
    _, _, cost = noncausal_cost(nc, Signal(0, np.zeros((4, 1))))
    assert cost == 0.0


def test_impulse_matches_least_squares():
    p = example_realized()
    nc = build_baseline(p)
    _, _, cost = noncausal_cost(nc, Signal.impulse(at=30))
    assert cost == pytest.approx(least_squares_cost(p, np.ones((1, 1)), 30, 60), rel=1e-8)


def test_beats_static_output_feedback(plant, rng):
    nc = baseline_at(plant)
    K = StateSpace.static([[-0.3, 0.0]])
    cl = closed_loop(plant, K)
    for _ in range(20):
        d = Signal(0, rng.standard_normal((int(rng.integers(1, 15)), 1)))
        _, _, j_nc = noncausal_cost(nc, d)
        _, j_k = simulate(cl, d)
        assert j_nc <= j_k + 1e-9


def test_dc_gain_matches_long_constant_disturbance():
    nc = build_baseline(example_realized())
    n = 400
    _, e, _ = noncausal_cost(nc, Signal(0, np.ones((n, 1))))
    # steady state in the middle of the window, far from both edges
    t_mid = n // 2 - e.start
    np.testing.assert_allclose(e.samples[t_mid], baseline_freq_map(nc, 0.0)[:, 0].real, atol=1e-6)


def test_freq_map_batched(plant):
    nc = baseline_at(plant, [-0.4])
    th = np.linspace(0, 2 * np.pi, 5)
    batch = baseline_freq_map(nc, th)
    for k, t in enumerate(th):
        np.testing.assert_allclose(batch[k], baseline_freq_map(nc, t), atol=1e-14)


# ---------------------------------------------------------------- invariants


@pytest.mark.invariant
@given(seeds)
def test_least_squares_equivalence(seed):
    rng = np.random.default_rng(seed)
    p = random_realized_plant(rng)
    nc = build_baseline(p, check=False)
    d = rng.standard_normal((10, p.B_d.shape[1]))
    _, _, cost = noncausal_cost(nc, Signal(30, d))
    assert cost == pytest.approx(least_squares_cost(p, d, 30, 60), rel=1e-6)


@pytest.mark.invariant
@given(seeds)
def test_optimality_against_causal_controllers(seed):
    rng = np.random.default_rng(seed)
    p = random_realized_plant(rng)
    nc = build_baseline(p, check=False)
    d = rng.standard_normal((8, p.B_d.shape[1]))
    _, _, j_nc = noncausal_cost(nc, Signal(0, d))
    for _ in range(5):
        Kx = nc.dare.K_x + 0.1 * rng.standard_normal(nc.dare.K_x.shape)
        if np.max(np.abs(np.linalg.eigvals(p.A - p.B_u @ Kx))) >= 0.98:
            continue
        Kd = nc.K_d + 0.1 * rng.standard_normal(nc.K_d.shape)
        assert j_nc <= causal_state_feedback_cost(p, Kx, Kd, d) + 1e-9


@pytest.mark.invariant
@given(seeds)
def test_freq_map_conjugate_symmetric(seed):
    rng = np.random.default_rng(seed)
    nc = build_baseline(random_realized_plant(rng), check=False)
    th = rng.uniform(0, np.pi, 8)
    np.testing.assert_allclose(baseline_freq_map(nc, -th), np.conj(baseline_freq_map(nc, th)), atol=1e-10)


@pytest.mark.invariant
@given(seeds)
def test_parseval_noncausal(seed):
    rng = np.random.default_rng(seed)
    nc = build_baseline(random_realized_plant(rng), check=False)
    n_d = nc.plant.B_d.shape[1]
    d = Signal(int(rng.integers(-3, 3)), rng.standard_normal((int(rng.integers(1, 10)), n_d)))
    _, _, cost = noncausal_cost(nc, d)
    th = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    E = baseline_freq_map(nc, th) @ d.dft(th)[:, :, None]
    assert cost == pytest.approx(float(np.mean(np.sum(np.abs(E) ** 2, axis=(1, 2)))), rel=1e-4)


def test_uncertain_plant_realization(plant):
    p = RealizedPlant.from_plant(plant, [1.0])
    assert p.A[0, 0] == pytest.approx(1.4)
    assert isinstance(plant, UncertainPlant)
