"""Lattice scans, the cascade sequence and the admissible Lagrange mass space."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbody_bnf.errors import BudgetError
from nbody_bnf.resonance import (
    AK_RATIO_BOUND,
    EXCLUDED_BETAS,
    M1_MIN,
    ak_sequence,
    diophantine_fit,
    lattice_size,
    lyapunov_admissible,
    lyapunov_exclusions,
    masses_from_beta_m1,
    beta_m1_from_masses,
    omega_ps_membership,
    sample_omega_ps,
    scan,
    verify_ak_nonresonant,
)
from nbody_bnf.spectrum import lagrange_frequencies


# ------------------------------------------------------------------- scan
def test_exact_one_to_two():
    rep = scan([1.0, 2.0], 3)
    ks = [k for k, _ in rep.offending]
    assert (-2, 1) in ks and (2, -1) in ks
    assert all(v == 0.0 for _, v in rep.offending)
    assert rep.min_divisor == 0.0
    assert rep.resonant


def test_irrational_ratio():
    rep = scan([1.0, math.sqrt(2)], 4, tol=1e-9)
    assert not rep.resonant
    assert rep.min_divisor == pytest.approx(min(abs(a + b * math.sqrt(2)) for a in range(-4, 5)
                                                for b in range(-4, 5) if 0 < abs(a) + abs(b) <= 4))


def test_lagrange_excluded_beta_fires():
    w0, w1, w2 = lagrange_frequencies(1 / 75)
    rep = scan([w0, -w1, w2], 4)
    assert rep.resonant
    ks = [k for k, _ in rep.offending]
    # omega2 = 3 omega1 at gamma = 4/5
    assert (0, 3, 1) in ks or (0, -3, -1) in ks
    assert all(1 <= sum(map(abs, k)) <= 4 for k in ks)


def test_lattice_is_exhaustive():
    for n, m in [(1, 5), (2, 3), (3, 4), (4, 2)]:
        rep = scan(np.linspace(1.0, 2.0, n) + 0.1234, m)
        brute = sum(1 for k in itertools.product(range(-m, m + 1), repeat=n) if 0 < sum(map(abs, k)) <= m)
        assert rep.n_checked == brute == lattice_size(n, m)


def test_min_divisor_is_true_minimum():
    w = [0.9, 1.37, 2.21]
    rep = scan(w, 4)
    brute = min(abs(np.dot(k, w)) for k in itertools.product(range(-4, 5), repeat=3)
                if 0 < sum(map(abs, k)) <= 4)
    assert rep.min_divisor == brute
    assert abs(np.dot(rep.argmin, w)) == brute


def test_offender_ordering_deterministic():
    rep = scan([1.0, 2.0, 3.0], 3)
    vals = [v for _, v in rep.offending]
    assert vals == sorted(vals)
    assert rep.offending == scan([1.0, 2.0, 3.0], 3).offending


def test_budget_errors():
    with pytest.raises(BudgetError) as err:
        scan(np.arange(1.0, 14.0), 2)
    assert err.value.required == lattice_size(13, 2)
    with pytest.raises(BudgetError):
        scan([1.0, 1.1, 1.2, 1.3, 1.4, 1.5], 12, budget=1000)
    with pytest.raises(BudgetError):
        verify_ak_nonresonant(41)


def test_report_serializations():
    rep = scan([1.0, 2.0], 3)
    d = rep.to_dict()
    assert d["offending"][0]["k"] in ([-2, 1], [2, -1])
    assert rep.to_csv().splitlines()[0] == "k,value"


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=4), st.integers(1, 4))
def test_scan_symmetric_under_negation(w, m):
    a = scan(w, m, tol=1e-3)
    b = scan([-x for x in w], m, tol=1e-3)
    assert {k for k, _ in a.offending} == {tuple(-x for x in k) for k, _ in b.offending}
    assert a.min_divisor == pytest.approx(b.min_divisor, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 5.0), min_size=1, max_size=4), st.integers(1, 4),
       st.sampled_from([0.25, 2.0, 8.0]))
def test_scan_homogeneous(w, m, s):
    a = scan(w, m, tol=1e-2)
    b = scan([s * x for x in w], m, tol=1e-2 * s)
    assert [k for k, _ in a.offending] == [k for k, _ in b.offending]
    assert b.min_divisor == pytest.approx(s * a.min_divisor, rel=1e-12, abs=1e-14)


def test_diophantine_fit_informational():
    fit = diophantine_fit([1.0, (1 + math.sqrt(5)) / 2], kmax=20)
    assert fit is not None
    c, ups = fit
    assert c > 0 and 0.5 < ups < 2.0
    assert diophantine_fit([1.0, 2.0]) is None
    assert scan([1.0, math.sqrt(3)], 3, fit=True).diophantine_fit is not None


# ------------------------------------------------------------ a_k sequence
def test_ak_first_values():
    a = ak_sequence(12)
    assert a[0] == 1.0
    assert a[1] == pytest.approx(math.sqrt(2 * math.sqrt(7) - 1), rel=1e-15)
    assert a[1] == pytest.approx(2.07159, abs=5e-6)
    assert AK_RATIO_BOUND == pytest.approx(1.76186, abs=5e-6)
    assert np.all(np.diff(a) > 0)


def test_ak_ratios():
    a = ak_sequence(30)
    r = [a[k + 1] / a[k] for k in range(1, len(a) - 1)]
    assert r[0] == pytest.approx(AK_RATIO_BOUND, rel=1e-14)
    assert all(math.sqrt(3) < x <= AK_RATIO_BOUND * (1 + 1e-15) for x in r)
    assert all(r[i + 1] < r[i] for i in range(len(r) - 1))


def test_ak_nmax_guard():
    with pytest.raises(ValueError):
        ak_sequence(1)


def test_ak_nonresonant_nmax_12():
    rep = verify_ak_nonresonant(12)
    assert rep["nonresonant"] and rep["offenders_total"] == 0
    assert set(rep["cases"]) == set("12345")
    for name, c in rep["cases"].items():
        assert c["offenders"] == []
        assert c["count"] > 0
        assert c["min_margin"] > 0, name
    assert rep["ratios_in_bounds"] and rep["ratios_decreasing"]
    assert rep["case2_gap_bound"]


def test_case2_bound_and_adjacent_triples():
    a = ak_sequence(20)
    # a_{k2} + a_{k1} < (3^{-1/2} + 3^{-1}) a_{k3} for gaps of one and two
    for k in range(1, 18):
        assert a[k + 1] + a[k] < (3 ** -0.5 + 3 ** -1.0) * a[k + 2]
    # four consecutive terms: the largest stays below the sum of the other three
    for k in range(0, 17):
        assert a[k + 3] < a[k + 2] + a[k + 1] + a[k]
    assert verify_ak_nonresonant(20)["nonresonant"]


# ------------------------------------------------------------- mass space
def test_membership_examples():
    m1 = 0.9705
    assert not omega_ps_membership(1 / 36, m1)
    assert omega_ps_membership(0.0197, 0.98)
    assert not omega_ps_membership(0.0197, M1_MIN)
    assert M1_MIN == pytest.approx((math.sqrt(69) + 9) / 18, rel=1e-16)


def test_membership_each_inequality():
    beta, m1 = 0.0197, 0.98
    assert 0 < beta < 1 / 27
    assert beta - m1 * (1 - m1) > 0
    assert 4 * beta <= 1 + 2 * m1 - 3 * m1 * m1
    assert M1_MIN < m1 < 1
    assert all(abs(beta - float(b)) > 1e-6 for b in EXCLUDED_BETAS)


@pytest.mark.parametrize("b", EXCLUDED_BETAS)
def test_excluded_betas_rejected(b):
    b = float(b)
    # any m1 on the slice of this beta
    for m1 in np.linspace(M1_MIN, 1, 2000)[1:-1]:
        if m1 * (1 - m1) < b <= (1 + 2 * m1 - 3 * m1 * m1) / 4:
            assert not omega_ps_membership(b, float(m1))


def test_boundaries_open():
    assert not omega_ps_membership(1 / 27, 0.962)
    assert not omega_ps_membership(0.0, 0.99)
    assert not omega_ps_membership(0.0099, 1.0)


def test_masses_round_trip():
    rng = np.random.default_rng(2)
    for beta, m1 in sample_omega_ps(rng, 50):
        m = masses_from_beta_m1(beta, m1)
        assert sum(m) == pytest.approx(1.0, abs=1e-15)
        assert m[0] >= m[1] >= m[2] > 0
        b2, m12 = beta_m1_from_masses(m)
        assert b2 == pytest.approx(beta, rel=1e-12) and m12 == m1


def test_lyapunov_first_family_integer_ratio():
    ex = lyapunov_exclusions(10)
    for n, beta in zip(ex["n"], ex["first"]):
        w0, w1, w2 = lagrange_frequencies(beta)
        assert w0 / w1 == pytest.approx(n, abs=1e-12)
        assert not lyapunov_admissible(beta)
    for n, beta in zip(ex["n"], ex["second"]):
        w0, w1, w2 = lagrange_frequencies(beta)
        assert w2 / w1 == pytest.approx(n, abs=1e-12)
    assert lyapunov_admissible(0.0197)
