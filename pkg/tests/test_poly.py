import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbody_bnf.errors import DimensionError
from nbody_bnf.poly import (
    TruncPoly,
    binomial_series,
    monomials,
    poly_add,
    poly_compose,
    poly_grade,
    poly_mul,
    poly_partial,
)


def var(n, d, i):
    return TruncPoly.variable(n, d, i)


def const(n, d, c):
    return TruncPoly.constant(n, d, c)


# ---------------------------------------------------------------- examples
def test_add_cancellation():
    x0, x1 = var(2, 3, 0), var(2, 3, 1)
    assert poly_add(x0 + x1, x0 - x1).allclose(x0.scale(2))
    assert len(poly_add(x0 + x1, x0 - x1).terms) == 1


def test_add_zero_identity():
    p = var(3, 4, 0) * var(3, 4, 2) + const(3, 4, 2.5)
    assert (p + TruncPoly.zero(3, 4)).terms == p.terms


def test_add_keeps_top_degree():
    x = var(1, 2, 0)
    assert (x * x + x * x).coeff((2,)) == 2


def test_mul_truncation():
    x = var(1, 1, 0)
    assert poly_mul(x, x).is_zero()


def test_mul_difference_of_squares():
    x = var(1, 3, 0)
    one = const(1, 3, 1.0)
    assert ((one + x) * (one - x)).allclose(one - x * x)


def test_mul_binomial_square():
    n = 7
    x5, x6 = var(n, 4, 5), var(n, 4, 6)
    sq = (x5 + x6) * (x5 + x6)
    assert sq.allclose(x5 * x5 + (x5 * x6).scale(2) + x6 * x6)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        poly_add(var(2, 3, 0), var(3, 3, 0))
    with pytest.raises(DimensionError):
        poly_mul(var(2, 3, 0), var(3, 3, 0))
    with pytest.raises(DimensionError):
        poly_compose(var(2, 3, 0), [var(2, 3, 0)])


def test_compose_square_of_sum():
    x = var(1, 4, 0)
    u, v = var(2, 4, 0), var(2, 4, 1)
    out = poly_compose(x * x, [u + v])
    assert out.allclose(u * u + (u * v).scale(2) + v * v)


def test_compose_identity():
    x = var(1, 4, 0)
    assert poly_compose(x, [x]).allclose(x)


def test_compose_requires_zero_constant_when_asked():
    x = var(1, 4, 0)
    with pytest.raises(ValueError):
        poly_compose(x * x, [x + const(1, 4, 1.0)], require_zero_constant=True)


def test_grade_examples():
    x0, x1 = var(2, 3, 0), var(2, 3, 1)
    p = const(2, 3, 1.0) + x0 + x0 * x1
    assert poly_grade(p, 2).allclose(x0 * x1)
    assert poly_grade(p, 0).allclose(const(2, 3, 1.0))


def test_partial_examples():
    x0, x1 = var(2, 3, 0), var(2, 3, 1)
    assert poly_partial(x0 * x0, 0).allclose(x0.scale(2))
    assert poly_partial(x0 * x1, 1).allclose(x0)
    assert poly_partial(const(2, 3, 4.0), 0).is_zero()


def test_binomial_series_matches_taylor():
    x = var(1, 4, 0)
    s = binomial_series(x, -2.0)
    assert np.allclose([s.coeff((k,)) for k in range(5)], [1, -2, 3, -4, 5])


def all_monomials(n, d):
    return [m for k in range(d + 1) for m in monomials(n, k)]


def test_monomial_count():
    assert sum(1 for _ in monomials(3, 4)) == 15
    assert len(all_monomials(3, 4)) == 35


def test_json_round_trip_is_byte_stable():
    rng = np.random.default_rng(0)
    p = TruncPoly(3, 4, {m: complex(*rng.normal(size=2)) for m in all_monomials(3, 4)})
    text = p.to_json()
    q = TruncPoly.from_json(text)
    assert q.to_json() == text
    doc = json.loads(text)
    assert doc["vars"] == 3 and doc["max_degree"] == 4
    degs = [sum(t["exps"]) for t in doc["terms"]]
    assert degs == sorted(degs)


def test_evaluation():
    x0, x1 = var(2, 4, 0), var(2, 4, 1)
    p = x0 * x0 * x1 + const(2, 4, 3.0)
    assert p(np.array([2.0, 5.0])) == pytest.approx(23.0)


def test_linear_compose_agrees_with_compose():
    rng = np.random.default_rng(3)
    p = TruncPoly(3, 4, {m: complex(rng.normal()) for m in all_monomials(3, 4) if sum(m) >= 1})
    A = rng.normal(size=(3, 3))
    subst = [TruncPoly.linear(A[i], 4) for i in range(3)]
    assert p.linear_compose(A).allclose(poly_compose(p, subst), atol=1e-11)


# -------------------------------------------------------------- properties
@st.composite
def poly_triples(draw):
    n = draw(st.integers(1, 6))
    d = 4
    mons = all_monomials(n, d)

    def one():
        idx = draw(st.lists(st.integers(0, len(mons) - 1), max_size=8, unique=True))
        coefs = draw(st.lists(st.floats(-1, 1, allow_nan=False), min_size=len(idx), max_size=len(idx)))
        return TruncPoly(n, d, {mons[i]: c for i, c in zip(idx, coefs)})

    return one(), one(), one()


@settings(max_examples=200, deadline=None)
@given(poly_triples())
def test_ring_axioms(ps):
    p, q, r = ps
    assert ((p + q) + r).allclose(p + (q + r), atol=1e-12)
    assert (p + q).allclose(q + p, atol=0)
    assert (p * q).allclose(q * p, atol=1e-12)
    assert (p * (q + r)).allclose(p * q + p * r, atol=1e-12)
    assert ((p * q) * r).allclose(p * (q * r), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(poly_triples(), st.integers(0, 5))
def test_leibniz_rule(ps, i):
    p, q, _ = ps
    i = i % p.nvars
    lhs = poly_partial(p * q, i)
    rhs = poly_partial(p, i) * q + p * poly_partial(q, i)
    assert lhs.allclose(rhs.truncate(p.max_degree - 1), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(poly_triples())
def test_identity_substitution(ps):
    p = ps[0]
    ident = [var(p.nvars, p.max_degree, i) for i in range(p.nvars)]
    assert poly_compose(p, ident).allclose(p, atol=1e-13)
