"""Reduced-dynamics integration, periodic families and Floquet diagnostics."""

from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import pipeline
from nbody_bnf.dynamics import (
    ExactField,
    PolynomialField,
    VelocityField,
    continue_family,
    floquet,
    gl4_step,
    integrate,
    linear_guess,
    nbody_angular_momentum,
    nbody_energy,
    nbody_integrate,
    orbit_theta_advance,
    read_orbit_archive,
    reconstruct_theta,
    shoot_periodic,
    write_orbit_archive,
)
from nbody_bnf.errors import StiffnessError
from nbody_bnf.hamiltonian import angular_momentum_reduced, full_state, state_from_canonical

LAGRANGE = ("lagrange", (0.98, 0.01, 0.01))
EULER = ("euler3", (1.0, 1.0, 1.0))


def _orbit(case, k, amp, field="exact"):
    c, f, h, ch, _ = pipeline(*case)
    fld = ExactField(f) if field == "exact" else PolynomialField(h)
    z0, T, anchor = linear_guess(ch, k, amp)
    return shoot_periodic(fld, z0, T, anchor, amp, index=k, expected_period=T), fld, T


@pytest.fixture(scope="module")
def omega2_orbit():
    return _orbit(LAGRANGE, 2, 1e-3)


@pytest.fixture(scope="module")
def omega2_branch():
    c, f, h, ch, _ = pipeline(*LAGRANGE)
    fld = ExactField(f)
    amp = 2e-4
    z0, T, anchor = linear_guess(ch, 2, amp)
    seed = shoot_periodic(fld, z0, T, anchor, amp, index=2)
    return continue_family(fld, seed, 9, amp, anchor), fld, T


# ------------------------------------------------------------- integration
@pytest.mark.parametrize("case", [LAGRANGE, EULER])
def test_equilibrium_is_fixed(case):
    c, f, h, _, _ = pipeline(*case)
    t = 100.0
    for fld in (ExactField(f), PolynomialField(h)):
        z = integrate(fld, np.zeros(fld.dim), t).final
        assert np.abs(z).max() < 1e-12 * t
    vf = VelocityField(c, f)
    s = integrate(vf, vf.equilibrium(), t).final
    assert np.abs(s - vf.equilibrium()).max() < 1e-12 * t


def test_gl4_energy_drift_bounded(omega2_orbit):
    orbit, _, _ = omega2_orbit
    h = pipeline(*LAGRANGE)[2]
    fld = PolynomialField(h)
    n_per = 40
    res = integrate(fld, orbit.state0, 100 * orbit.period, method="gl4", n_steps=100 * n_per)
    E = np.array([fld.energy(z) for z in res.z[::n_per]])
    dev = np.abs(E - E[0])
    scale = abs(E[0] - fld.energy(np.zeros(fld.dim)))
    assert dev.max() < 1e-8 * scale
    # no secular trend: the late excursions are no larger than the early ones
    half = len(dev) // 2
    assert dev[half:].max() < 3 * dev[:half].max() + 1e-15 * scale


def test_time_reversal(omega2_orbit):
    orbit, fld, _ = omega2_orbit
    T = orbit.period
    zT = integrate(fld, orbit.state0, T).final
    back = integrate(lambda t, z: -fld(t, z), zT, T).final
    assert np.abs(back - orbit.state0).max() < 1e-9 * T


def test_gl4_agrees_with_adaptive(omega2_orbit):
    orbit, fld, _ = omega2_orbit
    res = integrate(fld, orbit.state0, orbit.period, method="gl4", n_steps=3000)
    assert np.abs(res.final - orbit.state0).max() < 1e-8


def test_gl4_stiffness_error():
    with pytest.raises(StiffnessError), np.errstate(all="ignore"):
        gl4_step(lambda t, z: -1e6 * z, np.ones(2), 1.0)


def test_integrate_argument_errors():
    with pytest.raises(ValueError):
        integrate(lambda t, z: z, np.ones(2), 1.0, method="gl4")
    with pytest.raises(ValueError):
        integrate(lambda t, z: z, np.ones(2), 1.0, method="euler")


# --------------------------------------------------------- periodic orbits
def test_lagrange_omega2_orbit(omega2_orbit):
    orbit, _, T = omega2_orbit
    assert orbit.residual < 1e-10
    assert abs(orbit.period - T) / orbit.period < 5e-3
    assert orbit.amplitude == pytest.approx(1e-3, rel=1e-9)


def test_euler_omega1_orbit():
    orbit, _, T = _orbit(EULER, 1, 1e-3)
    assert orbit.residual < 1e-10
    assert orbit.period == pytest.approx(T, rel=5e-3)


def test_amplitude_zero_is_degenerate():
    _, f, _, ch, _ = pipeline(*LAGRANGE)
    fld = ExactField(f)
    z0, T, anchor = linear_guess(ch, 2, 0.0)
    o = shoot_periodic(fld, z0, T, anchor, 0.0, index=2)
    assert o.degenerate and o.period == T
    assert not o.state0.any()


def test_hyperbolic_mode_has_no_guess():
    ch = pipeline(*EULER)[3]
    with pytest.raises(ValueError):
        linear_guess(ch, 2, 1e-3)


def test_trivial_family_period_limit():
    _, f, _, ch, _ = pipeline(*LAGRANGE)
    d = ch.dof
    T0 = 2 * math.pi / ch.freq.values[0]
    errs = []
    for amp in (4e-3, 2e-3, 1e-3):
        o, _, _ = _orbit(LAGRANGE, 0, amp)
        # the radial family lives on x = y = 0
        assert np.abs(np.delete(o.state0, [0, d])).max() < 1e-10
        errs.append(abs(o.period - T0))
    assert errs[0] > errs[1] > errs[2]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)
    assert errs[2] / T0 < 1e-4


def test_branch_properties(omega2_branch):
    orbits, _, T = omega2_branch
    assert len(orbits) >= 10
    assert all(o.residual < 1e-10 for o in orbits)
    amps = np.array([o.amplitude for o in orbits])
    periods = np.array([o.period for o in orbits])
    energies = np.array([o.energy for o in orbits])
    assert np.all(np.diff(amps) > 0)
    assert abs(periods[0] / T - 1) < 0.01
    # T(0) from an even fit in the amplitude
    coef = np.polyfit(amps**2, periods, 2)
    assert coef[-1] == pytest.approx(T, rel=1e-6)
    assert np.all(np.diff(energies) > 0) or np.all(np.diff(energies) < 0)
    steps = [np.linalg.norm(b.state0 - a.state0) / abs(b.amplitude - a.amplitude)
             for a, b in zip(orbits, orbits[1:])]
    assert max(steps) < 3 * min(steps)


def test_amplitude_continuation_mode():
    c, f, h, ch, _ = pipeline(*LAGRANGE)
    fld = PolynomialField(h)
    z0, T, anchor = linear_guess(ch, 2, 2e-4)
    seed = shoot_periodic(fld, z0, T, anchor, 2e-4, index=2)
    orbits = continue_family(fld, seed, 3, 2e-4, anchor, mode="amplitude")
    assert [o.amplitude for o in orbits] == pytest.approx([2e-4, 4e-4, 6e-4, 8e-4], rel=1e-9)


# ---------------------------------------------------------------- floquet
def test_floquet_symplectic(omega2_branch):
    orbits, fld, _ = omega2_branch
    for o in (orbits[0], orbits[-1]):
        fl = floquet(o, fld)
        assert abs(fl["det"] - 1) < 1e-8
        assert fl["pairing_defect"] < 1e-6
        assert fl["trivial_pair_defect"] < 1e-6
        assert np.allclose(np.sort(np.abs(fl["multipliers"])), np.sort(np.abs(o.floquet)), atol=1e-8)


def test_trivial_family_multipliers():
    o, fld, _ = _orbit(LAGRANGE, 0, 1e-3)
    w = pipeline(*LAGRANGE)[3].freq.values
    mult = floquet(o, fld)["multipliers"]
    for wk in w[1:]:
        for sign in (1, -1):
            target = np.exp(sign * 2j * math.pi * wk / w[0])
            assert np.min(np.abs(mult - target)) < 1e-3


# ------------------------------------------------------------ rotation angle
def test_theta_at_equilibrium():
    c, f, _, _, _ = pipeline(*LAGRANGE)
    vf = VelocityField(c, f)
    ts = np.linspace(0, 50, 11)
    states = np.tile(vf.equilibrium(), (len(ts), 1))
    th = reconstruct_theta(c, f, ts, states)
    assert np.allclose(th, math.sqrt(c.lam) * ts, rtol=1e-14, atol=1e-14)


def test_theta_advance_of_lyapunov_orbit(omega2_orbit):
    orbit, fld, _ = omega2_orbit
    c, f, _, ch, _ = pipeline(*LAGRANGE)
    adv = orbit_theta_advance(c, f, orbit, fld)
    # at small amplitude the frame turns at the equilibrium rate
    assert adv == pytest.approx(ch.freq.values[0] * orbit.period, rel=1e-3)
    dth = math.fmod(adv, 2 * math.pi)
    assert 0 < dth < 2 * math.pi


def test_angular_momentum_constant_along_orbit(omega2_orbit):
    orbit, fld, _ = omega2_orbit
    c, f, _, _, _ = pipeline(*LAGRANGE)
    res = integrate(fld, orbit.state0, orbit.period, t_eval=np.linspace(0, orbit.period, 25))
    Js = []
    for z in res.z:
        c1, s = state_from_canonical(c, f, z)
        Js.append(angular_momentum_reduced(c1, f, s))
    assert np.ptp(Js) < 1e-9
    assert Js[0] == pytest.approx(c1.g3 * math.sqrt(c1.lam), rel=1e-9)


def test_full_nbody_conservation(omega2_orbit):
    orbit, _, _ = omega2_orbit
    c, f, _, _, _ = pipeline(*LAGRANGE)
    c1, s = state_from_canonical(c, f, orbit.state0)
    R, V = full_state(c1, f, s, 0.0)
    m = c1.masses
    ts, Rs, Vs = nbody_integrate(R, V, m, 10 * orbit.period, 20000, record_every=100)
    E = np.array([nbody_energy(a, b, m) for a, b in zip(Rs, Vs)])
    L = np.array([nbody_angular_momentum(a, b, m) for a, b in zip(Rs, Vs)])
    assert np.abs(E - E[0]).max() < 1e-9 * abs(E[0])
    assert np.abs(L - L[0]).max() < 1e-9 * abs(L[0])
    assert L[0] == pytest.approx(angular_momentum_reduced(c1, f, s), rel=1e-12)


def test_equilibrium_is_rigid_rotation():
    c, f, _, _, _ = pipeline(*LAGRANGE)
    c1, s = state_from_canonical(c, f, np.zeros(6))
    R, V = full_state(c1, f, s, 0.0)
    w = math.sqrt(c1.lam)
    t = 2 * math.pi / w / 4
    _, Rs, _ = nbody_integrate(R, V, c1.masses, t, 4000)
    R_ref, _ = full_state(c1, f, s, w * t)
    assert np.abs(Rs[-1] - R_ref).max() < 1e-10


# ---------------------------------------------------------------- archive
def test_archive_round_trip(tmp_path, omega2_orbit):
    orbit, _, _ = omega2_orbit
    orbit.delta_theta = 0.5
    path = tmp_path / "orbits.jsonl"
    write_orbit_archive(path, [orbit, orbit])
    rows = read_orbit_archive(path)
    assert len(rows) == 2
    r = rows[0]
    assert set(r) >= {"family", "amplitude", "period", "state0", "residual", "multipliers",
                      "energy", "delta_theta"}
    assert r["period"] == orbit.period
    assert np.array_equal(np.array(r["state0"]), orbit.state0)
    assert len(r["multipliers"]) == len(orbit.floquet)
