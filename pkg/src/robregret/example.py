"""The scalar uncertain plant used throughout the tests and scripts.

    x+ = (0.5 + 0.9 delta) x + 5 d + u,    e = [sqrt(3) x; u],    y = [x; d]

with a single real scalar uncertainty ``|delta| <= 1``. The controller
measures both the state and the current disturbance.
"""

from __future__ import annotations

import numpy as np

from .sscore import BlockStructure, UncertainPlant

A0 = 0.5
SPREAD = 0.9
B_D = 5.0
STATE_WEIGHT = 3.0


def scalar_plant() -> UncertainPlant:
    return UncertainPlant.from_blocks(
        A=[[A0]],
        B_w=[[SPREAD]],
        B_d=[[B_D]],
        B_u=[[1.0]],
        C_v=[[1.0]],
        C_e=[[np.sqrt(STATE_WEIGHT)], [0.0]],
        C_y=[[1.0], [0.0]],
        D_eu=[[0.0], [1.0]],
        D_yd=[[0.0], [1.0]],
        block=BlockStructure((1,)),
    )


def dare_closed_form(delta: float) -> float:
    """Positive root of ``X^2 - (a^2 + 2) X - 3 = 0`` with ``a = 0.5 + 0.9 delta``."""
    a = A0 + SPREAD * delta
    b = a * a + 2.0
    return (b + np.sqrt(b * b + 4.0 * STATE_WEIGHT)) / 2.0
