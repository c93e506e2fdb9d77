"""Shared fixtures and random-state helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from mhdsem.physics import PhysParams, prim_to_cons


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_states(rng, n, params: PhysParams, rho_span=(-2, 2), p_span=(-2, 2),
                  vb_scale=2.0):
    """Random admissible conservative states, shape (n, 9).

    rho and p are log-uniform over 10**span; velocities, magnetic field and
    psi are normal with the given scale.
    """
    rho = 10.0 ** rng.uniform(*rho_span, n)
    p = 10.0 ** rng.uniform(*p_span, n)
    v = rng.normal(0.0, vb_scale, (n, 3))
    B = rng.normal(0.0, vb_scale, (n, 3))
    psi = rng.normal(0.0, vb_scale, n)
    return prim_to_cons(rho, v, p, B, psi, params)


def moderate_states(rng, n, params: PhysParams):
    """Random states with O(1) quantities, for tight absolute tolerances."""
    return random_states(rng, n, params, rho_span=(-0.5, 0.5),
                         p_span=(-0.5, 0.5), vb_scale=1.0)
