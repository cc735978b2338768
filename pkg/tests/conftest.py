"""Shared fixtures: solved configurations are cached for the whole session."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from nbody_bnf.central_config import solve_euler3, solve_lagrange
from nbody_bnf.hamiltonian import build_hamiltonian, potential_expansion
from nbody_bnf.normal_form import birkhoff
from nbody_bnf.spectrum import diagonalize

LAGRANGE_MASSES = (0.98, 0.01, 0.01)


@functools.lru_cache(maxsize=None)
def pipeline(kind: str, masses: tuple):
    """``(config, frame, expansion, chart, normal form)`` for one mass vector."""
    c = solve_lagrange(masses) if kind == "lagrange" else solve_euler3(masses)
    f = potential_expansion(c)
    h = build_hamiltonian(c, f)
    ch = diagonalize(h)
    nf = birkhoff(h, ch)
    return c, f, h, ch, nf


@pytest.fixture(scope="session")
def lagrange_case():
    return pipeline("lagrange", LAGRANGE_MASSES)


@pytest.fixture(scope="session")
def euler_case():
    return pipeline("euler3", (1.0, 1.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
