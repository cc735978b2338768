import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbody_bnf.central_config import (
    MassSystem,
    asymptotic_iota,
    cascade_gap_constant,
    config_scale,
    euler_admissible,
    hessian_gradient_map,
    scale_ratios,
    solve_collinear,
    solve_euler3,
    solve_lagrange,
)
from nbody_bnf.errors import MassError

masses3 = st.tuples(*[st.floats(0.05, 1.0) for _ in range(3)])


def check_frame(c, tol=1e-12):
    assert c.residual() < tol * max(1.0, c.lam * math.sqrt(c.I))
    com = (c.points * c.masses[:, None]).sum(axis=0)
    assert np.abs(com).max() < 1e-12
    G = c.eigvecs @ (c.metric[:, None] * c.eigvecs.T)
    off = G - np.diag(np.diag(G))
    scale = np.sqrt(np.outer(c.gs, c.gs))
    assert np.abs(off / scale).max() < 1e-12
    assert np.allclose(np.diag(G), c.gs, rtol=1e-12)
    assert c.frame_residual() < 1e-11
    sI = math.sqrt(c.I)
    assert c.eigvals[0] == pytest.approx(sI * c.lam, rel=1e-12)
    assert c.eigvals[1] == pytest.approx(sI * c.lam, rel=1e-12)
    assert abs(c.eigvals[2]) < 1e-12 and abs(c.eigvals[3]) < 1e-12


# ----------------------------------------------------------------- masses
def test_mass_system_rejects_bad_input():
    with pytest.raises(MassError):
        MassSystem((1.0, -1.0, 1.0))
    with pytest.raises(MassError):
        MassSystem((1.0, 0.0, 1.0))
    assert MassSystem((1.0, 0.0, 1.0), allow_zero=True).total_mass == 2.0
    with pytest.raises(MassError):
        solve_lagrange((1.0, 0.0, 1.0))


# --------------------------------------------------------------- Lagrange
def test_lagrange_equal_masses():
    c = solve_lagrange((1 / 3, 1 / 3, 1 / 3))
    assert c.info["beta"] == pytest.approx(1 / 3)
    assert c.info["alpha"] == pytest.approx(0.0, abs=1e-12)
    assert c.lam == pytest.approx(3 ** -1.5, rel=1e-13)
    assert c.eigvals[4] == pytest.approx(1.5 * 3 ** -1.5, rel=1e-12)
    assert c.eigvals[5] == pytest.approx(1.5 * 3 ** -1.5, rel=1e-12)
    check_frame(c)


def test_lagrange_small_masses():
    c = solve_lagrange((0.98, 0.01, 0.01))
    beta = 0.98 * 0.02 + 0.0001
    assert c.info["beta"] == pytest.approx(0.0197, rel=1e-13)
    assert c.lam == pytest.approx(beta ** 1.5, rel=1e-12)
    assert c.lam == pytest.approx(0.002765, rel=1e-3)
    alpha = math.sqrt(1 - 3 * beta)
    assert c.eigvals[4] == pytest.approx(1.5 * (1 - alpha) * beta ** 1.5, rel=1e-10)
    assert c.eigvals[5] == pytest.approx(1.5 * (1 + alpha) * beta ** 1.5, rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(masses3)
def test_lagrange_invariants(m):
    c = solve_lagrange(m)
    check_frame(c)
    assert c.g3 == pytest.approx(1.0, abs=1e-12)
    assert abs(c.inner(c.eigvecs[4], c.eigvecs[5])) < 1e-12


# ------------------------------------------------------------------ Euler
def test_euler_equal_masses_centred():
    c = solve_euler3((1, 1, 1))
    assert c.info["sigma"] == pytest.approx(0.0, abs=1e-12)
    assert c.info["kappa"] > 2


@settings(max_examples=40, deadline=None)
@given(masses3)
def test_euler_invariants(m):
    c = solve_euler3(m)
    check_frame(c)
    sigma, kappa = c.info["sigma"], c.info["kappa"]
    assert -0.5 < sigma < 0.5 and kappa > 0
    assert euler_admissible(sigma, kappa)
    lam, l5, l6 = c.lam, c.eigvals[4], c.eigvals[5]
    assert l5 + 2 * l6 == pytest.approx(3 * lam, abs=1e-12)
    closed = (-64 * sigma**4 + 160 * sigma**2 + 28) / (kappa**5 * (4 * sigma**2 - 1) ** 3)
    assert l6 == pytest.approx(closed, rel=1e-10)


# -------------------------------------------------------------- collinear
def test_two_body_distance():
    c, _ = solve_collinear((1.0, 1.0))
    assert c.points[1, 0] - c.points[0, 0] == pytest.approx(2 ** (1 / 3), rel=1e-13)


@pytest.mark.parametrize("eps", [1e-3, 1e-5, 1e-7])
def test_two_body_small_mass(eps):
    c, _ = solve_collinear((1.0, eps))
    r12 = c.points[1, 0] - c.points[0, 0]
    assert abs(r12 - (1 + eps / 3)) < 2 * eps**2


def test_restricted_three_body_iota():
    errs = []
    for eps in (1e-4, 1e-6, 1e-8):
        _, sp = solve_collinear((1.0, eps, 0.0))
        errs.append(abs(sp.iotas[2] - (9 - 12 * 3 ** (-1 / 3) * eps ** (1 / 3))) / eps ** (2 / 3))
    assert max(errs) < 10


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.1, 1.0), min_size=3, max_size=5))
def test_collinear_invariants(m):
    c, sp = solve_collinear(m)
    check_frame(c, tol=1e-11)
    assert sp.iotas[0] == pytest.approx(1.0, abs=1e-10)
    assert sp.iotas[1] == pytest.approx(3.0, abs=1e-10)
    assert np.all(np.diff(sp.iotas) > 0)
    sg, lam = math.sqrt(c.g3), c.lam
    for k in range(2, len(m)):
        l_odd, l_even = c.eigvals[2 * k], c.eigvals[2 * k + 1]
        assert l_odd + 2 * l_even == pytest.approx(3 * sg * lam, abs=1e-12 * max(1.0, abs(l_odd)))
        assert l_odd > 3 * sg * lam
        assert l_odd == pytest.approx(sg * sp.iotas[k], rel=1e-12)


def test_collinear_reversal_equivariance():
    m = (1.0, 2.0, 3.0, 0.5)
    c1, s1 = solve_collinear(m)
    c2, s2 = solve_collinear(m[::-1])
    assert np.allclose(c1.points[:, 0], -c2.points[::-1, 0], atol=1e-12)
    assert np.allclose(s1.iotas, s2.iotas, rtol=1e-12)


# ---------------------------------------------------------- linearization
@pytest.mark.parametrize("solver", [lambda: solve_lagrange((0.5, 0.3, 0.2)),
                                    lambda: solve_euler3((1, 2, 3)),
                                    lambda: solve_collinear((1, 2, 3, 4))[0]])
def test_gradient_map(solver):
    c = solver()
    D = hessian_gradient_map(c)
    assert np.abs(D @ c.eigvecs[2]).max() < 1e-12
    assert np.abs(D @ c.eigvecs[3]).max() < 1e-12
    assert np.allclose(D @ c.eigvecs[0], math.sqrt(c.I) * c.lam * c.eigvecs[0], atol=1e-12)
    assert np.allclose(np.sort(np.linalg.eigvals(D).real), np.sort(c.eigvals), atol=1e-10)


# ------------------------------------------------------------- asymptotics
def test_asymptotic_iota_values():
    assert asymptotic_iota(2, [1e-6]) == 3.0
    assert asymptotic_iota(1, [1e-6]) == 1.0
    assert asymptotic_iota(3, [1e-6]) == pytest.approx(9 * (1 - 4 / 3 * 3 ** (-1 / 3) * 1e-2))
    # rounded value quoted to four decimals
    assert asymptotic_iota(3, [1e-6]) == pytest.approx(8.9169, abs=1.5e-4)
    for n in range(1, 6):
        assert cascade_gap_constant(n) == pytest.approx(3 ** (-n / 3))


# ----------------------------------------------------------------- scaling
def test_scaling():
    c, sp = solve_collinear((1.0, 2.0, 3.0))
    u = config_scale(c, "unit_norm")
    assert u.I == pytest.approx(1.0, rel=1e-14)
    uu = config_scale(u, "unit_norm")
    assert np.allclose(uu.points, u.points, rtol=1e-15)
    assert np.allclose(scale_ratios(u), scale_ratios(c), rtol=1e-13, atol=1e-13)
    s = 1 / math.sqrt(c.I)
    assert u.lam == pytest.approx(c.lam / s**3, rel=1e-13)
    back = config_scale(u, "unit_lambda")
    assert back.lam == pytest.approx(1.0, rel=1e-13)
    assert np.allclose(back.points, c.points, rtol=1e-12, atol=1e-12)


def test_json_export_digits():
    c = solve_lagrange((0.5, 0.3, 0.2))
    text = c.to_json()
    assert format(c.lam, ".17g") in text
