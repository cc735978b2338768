"""Sparse multivariate polynomials truncated at a fixed total degree.

A :class:`TruncPoly` maps exponent tuples to complex coefficients. All
arithmetic discards terms above ``max_degree`` and prunes coefficients that
are tiny relative to the largest one. Instances are never mutated after
construction.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import jsonio
from .errors import DimensionError

Monomial = tuple

DEFAULT_PRUNE = 1e-14


def _prune(terms: dict, prune: float) -> dict:
    if not terms:
        return terms
    big = max(abs(c) for c in terms.values())
    if big == 0.0:
        return {}
    cut = prune * big
    return {k: c for k, c in terms.items() if abs(c) > cut}


class TruncPoly:
    """Truncated polynomial in ``nvars`` variables with complex coefficients.

    Parameters
    ----------
    nvars : int
        Number of variables.
    max_degree : int
        Terms of higher total degree are dropped.
    terms : mapping, optional
        Exponent tuple to coefficient.
    prune : float
        Relative pruning threshold applied after every operation.
        Zero disables pruning except for exact zeros.
    """

    __slots__ = ("_nvars", "_maxdeg", "_terms", "_prune", "_cache")

    def __init__(
        self,
        nvars: int,
        max_degree: int,
        terms: Mapping[Monomial, complex] | None = None,
        prune: float = DEFAULT_PRUNE,
    ):
        if nvars < 0 or max_degree < 0:
            raise DimensionError("nvars and max_degree must be non-negative")
        self._nvars = int(nvars)
        self._maxdeg = int(max_degree)
        self._prune = float(prune)
        clean: dict = {}
        if terms:
            for exps, c in terms.items():
                exps = tuple(int(e) for e in exps)
                if len(exps) != self._nvars:
                    raise DimensionError(
                        f"monomial {exps} has {len(exps)} exponents, expected {self._nvars}"
                    )
                if min(exps, default=0) < 0:
                    raise DimensionError(f"negative exponent in {exps}")
                if sum(exps) > self._maxdeg:
                    continue
                c = complex(c)
                if c != 0:
                    clean[exps] = clean.get(exps, 0j) + c
        self._terms = _prune(clean, self._prune)
        self._cache: dict = {}

    # ------------------------------------------------------------------ basics
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def max_degree(self) -> int:
        return self._maxdeg

    @property
    def prune(self) -> float:
        return self._prune

    @property
    def terms(self) -> Mapping[Monomial, complex]:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __repr__(self) -> str:
        return f"TruncPoly(nvars={self._nvars}, max_degree={self._maxdeg}, nterms={len(self._terms)})"

    def coeff(self, exps: Sequence[int]) -> complex:
        return self._terms.get(tuple(exps), 0j)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Largest total degree present, -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def norm(self) -> float:
        """Max-abs coefficient norm."""
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def _new(self, terms: dict, max_degree: int | None = None) -> "TruncPoly":
        out = TruncPoly.__new__(TruncPoly)
        out._nvars = self._nvars
        out._maxdeg = self._maxdeg if max_degree is None else max_degree
        out._prune = self._prune
        out._terms = _prune({k: c for k, c in terms.items() if c != 0}, self._prune)
        out._cache = {}
        return out

    # --------------------------------------------------------------- factories
    @classmethod
    def zero(cls, nvars: int, max_degree: int, prune: float = DEFAULT_PRUNE) -> "TruncPoly":
        return cls(nvars, max_degree, prune=prune)

    @classmethod
    def constant(cls, nvars: int, max_degree: int, value: complex, prune: float = DEFAULT_PRUNE) -> "TruncPoly":
        return cls(nvars, max_degree, {(0,) * nvars: value}, prune=prune)

    @classmethod
    def variable(cls, nvars: int, max_degree: int, index: int, coeff: complex = 1.0,
                 prune: float = DEFAULT_PRUNE) -> "TruncPoly":
        if not 0 <= index < nvars:
            raise DimensionError(f"variable index {index} out of range")
        exps = [0] * nvars
        exps[index] = 1
        return cls(nvars, max_degree, {tuple(exps): coeff}, prune=prune)

    @classmethod
    def linear(cls, coeffs: Sequence[complex], max_degree: int, prune: float = DEFAULT_PRUNE) -> "TruncPoly":
        n = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            e = [0] * n
            e[i] = 1
            terms[tuple(e)] = c
        return cls(n, max_degree, terms, prune=prune)

    @classmethod
    def quadratic_form(cls, S: np.ndarray, max_degree: int, prune: float = DEFAULT_PRUNE) -> "TruncPoly":
        """Polynomial ``z^T S z / 2`` for a symmetric matrix ``S``."""
        S = np.asarray(S)
        n = S.shape[0]
        terms = {}
        for i in range(n):
            for j in range(i, n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                terms[tuple(e)] = S[i, i] / 2 if i == j else (S[i, j] + S[j, i]) / 2
        return cls(n, max_degree, terms, prune=prune)

    # -------------------------------------------------------------- arithmetic
    def _check(self, other: "TruncPoly") -> None:
        if not isinstance(other, TruncPoly):
            raise TypeError("operand is not a TruncPoly")
        if other._nvars != self._nvars:
            raise DimensionError(f"variable counts differ: {self._nvars} vs {other._nvars}")

    def __add__(self, other) -> "TruncPoly":
        if isinstance(other, (int, float, complex, np.number)):
            other = TruncPoly.constant(self._nvars, self._maxdeg, other)
        self._check(other)
        if other._maxdeg != self._maxdeg:
            raise DimensionError(f"max_degree differs: {self._maxdeg} vs {other._maxdeg}")
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0j) + c
        return self._new(out)

    __radd__ = __add__

    def __neg__(self) -> "TruncPoly":
        return self._new({k: -c for k, c in self._terms.items()})

    def __sub__(self, other) -> "TruncPoly":
        return self + (-other)

    def __rsub__(self, other) -> "TruncPoly":
        return (-self) + other

    def scale(self, s: complex) -> "TruncPoly":
        s = complex(s)
        if s == 0:
            return self._new({})
        return self._new({k: s * c for k, c in self._terms.items()})

    def __mul__(self, other) -> "TruncPoly":
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        self._check(other)
        md = min(self._maxdeg, other._maxdeg)
        out: dict = {}
        b_items = [(k, sum(k), c) for k, c in other._terms.items()]
        for ka, ca in self._terms.items():
            da = sum(ka)
            if da > md:
                continue
            for kb, db, cb in b_items:
                if da + db > md:
                    continue
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, 0j) + ca * cb
        return self._new(out, max_degree=md)

    __rmul__ = __mul__

    def __truediv__(self, s) -> "TruncPoly":
        return self.scale(1.0 / complex(s))

    def __pow__(self, n: int) -> "TruncPoly":
        if n < 0:
            raise ValueError("negative power")
        out = TruncPoly.constant(self._nvars, self._maxdeg, 1.0, self._prune)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncPoly):
            return NotImplemented
        return (self._nvars == other._nvars and self._maxdeg == other._maxdeg
                and self._terms == other._terms)

    __hash__ = None

    def allclose(self, other: "TruncPoly", atol: float = 1e-12, rtol: float = 0.0) -> bool:
        """Coefficientwise comparison with ``atol + rtol * max norm``."""
        self._check(other)
        tol = atol + rtol * max(self.norm(), other.norm())
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coeff(k) - other.coeff(k)) <= tol for k in keys)

    # -------------------------------------------------------------- structure
    def grade(self, d: int) -> "TruncPoly":
        if not 0 <= d <= self._maxdeg:
            raise DimensionError(f"grade {d} outside 0..{self._maxdeg}")
        return self._new({k: c for k, c in self._terms.items() if sum(k) == d})

    def truncate(self, d: int) -> "TruncPoly":
        """Same polynomial with a smaller ``max_degree``."""
        d = min(d, self._maxdeg)
        return self._new({k: c for k, c in self._terms.items() if sum(k) <= d}, max_degree=d)

    def with_max_degree(self, d: int) -> "TruncPoly":
        return self._new({k: c for k, c in self._terms.items() if sum(k) <= d}, max_degree=d)

    def partial(self, var: int) -> "TruncPoly":
        if not 0 <= var < self._nvars:
            raise DimensionError(f"variable index {var} out of range")
        out = {}
        for k, c in self._terms.items():
            e = k[var]
            if e:
                kk = list(k)
                kk[var] = e - 1
                out[tuple(kk)] = c * e
        return self._new(out)

    def conj(self) -> "TruncPoly":
        return self._new({k: c.conjugate() for k, c in self._terms.items()})

    def real(self) -> "TruncPoly":
        return self._new({k: complex(c.real) for k, c in self._terms.items()})

    def imag(self) -> "TruncPoly":
        return self._new({k: complex(c.imag) for k, c in self._terms.items()})

    def max_imag(self) -> float:
        return max((abs(c.imag) for c in self._terms.values()), default=0.0)

    def filter(self, pred) -> "TruncPoly":
        """Keep the terms whose exponent tuple satisfies ``pred``."""
        return self._new({k: c for k, c in self._terms.items() if pred(k)})

    def map_coeffs(self, fn) -> "TruncPoly":
        """Apply ``fn(exps, coeff)`` to every coefficient."""
        return self._new({k: fn(k, c) for k, c in self._terms.items()})

    def embed(self, nvars: int, positions: Sequence[int]) -> "TruncPoly":
        """Re-index into ``nvars`` variables; variable i goes to ``positions[i]``."""
        if len(positions) != self._nvars:
            raise DimensionError("positions must list one slot per variable")
        out = {}
        for k, c in self._terms.items():
            e = [0] * nvars
            for i, p in enumerate(positions):
                e[p] += k[i]
            out[tuple(e)] = out.get(tuple(e), 0j) + c
        return TruncPoly(nvars, self._maxdeg, out, prune=self._prune)

    # ------------------------------------------------------------ composition
    def compose(self, subst: Sequence["TruncPoly"], require_zero_constant: bool = False) -> "TruncPoly":
        """Replace variable ``i`` by ``subst[i]``.

        The result lives in the variable space of the substitutes and is
        truncated at the substitutes' ``max_degree``.
        """
        if len(subst) != self._nvars:
            raise DimensionError(f"need {self._nvars} substitutes, got {len(subst)}")
        if not subst:
            return self
        m = subst[0].nvars
        md = subst[0].max_degree
        for s in subst:
            if s.nvars != m:
                raise DimensionError("substitutes must share a variable count")
            md = min(md, s.max_degree)
            if require_zero_constant and abs(s.coeff((0,) * m)) > 0:
                raise ValueError("substitute has a nonzero constant term")
        if all(_is_linear_homogeneous(s) for s in subst):
            A = np.zeros((self._nvars, m), dtype=complex)
            for i, s in enumerate(subst):
                for k, c in s._terms.items():
                    A[i, k.index(1)] = c
            return self.linear_compose(A, max_degree=md)
        one = TruncPoly.constant(m, md, 1.0, self._prune)
        memo: dict = {(0,) * self._nvars: one}

        def power(k: tuple) -> TruncPoly:
            got = memo.get(k)
            if got is not None:
                return got
            i = max(j for j, e in enumerate(k) if e)
            kk = list(k)
            kk[i] -= 1
            got = power(tuple(kk)) * subst[i]
            memo[k] = got
            return got

        out: dict = {}
        for k in sorted(self._terms, key=lambda e: (sum(e), e)):
            c = self._terms[k]
            for kk, cc in power(k)._terms.items():
                out[kk] = out.get(kk, 0j) + c * cc
        return TruncPoly(m, md, out, prune=self._prune)

    def linear_compose(self, A: np.ndarray, max_degree: int | None = None) -> "TruncPoly":
        """Substitute ``x = A u`` (``A`` has shape ``(nvars, m)``).

        Each homogeneous grade is contracted as a dense tensor, which is much
        faster than expanding products of linear forms term by term.
        """
        A = np.asarray(A, dtype=complex)
        if A.shape[0] != self._nvars:
            raise DimensionError("substitution matrix has the wrong row count")
        m = A.shape[1]
        md = self._maxdeg if max_degree is None else max_degree
        out: dict = {}
        by_deg: dict[int, list] = {}
        for k, c in self._terms.items():
            d = sum(k)
            if d <= md:
                by_deg.setdefault(d, []).append((k, c))
        for d, items in by_deg.items():
            if d == 0:
                out[(0,) * m] = out.get((0,) * m, 0j) + items[0][1]
                continue
            T = np.zeros((self._nvars,) * d, dtype=complex)
            for k, c in items:
                idx = tuple(i for i, e in enumerate(k) for _ in range(e))
                T[idx] += c
            for _ in range(d):
                # contract the leading axis and append the new one at the end
                T = np.tensordot(T, A, axes=([0], [0]))
            codes, keys = _monomial_index(m, d)
            acc = np.zeros(len(keys), dtype=complex)
            np.add.at(acc, codes, T.ravel())
            for kk, c in zip(keys, acc):
                if c != 0:
                    out[kk] = out.get(kk, 0j) + c
        return TruncPoly(m, md, out, prune=self._prune)

    # ------------------------------------------------------------- evaluation
    def _arrays(self):
        got = self._cache.get("arrays")
        if got is None:
            if self._terms:
                E = np.array(list(self._terms.keys()), dtype=np.int64)
                C = np.array(list(self._terms.values()), dtype=complex)
            else:
                E = np.zeros((0, self._nvars), dtype=np.int64)
                C = np.zeros(0, dtype=complex)
            got = (E, C)
            self._cache["arrays"] = got
        return got

    def __call__(self, z) -> complex | np.ndarray:
        """Evaluate at a point ``z`` (shape ``(nvars,)``) or a batch ``(B, nvars)``."""
        E, C = self._arrays()
        z = np.asarray(z)
        single = z.ndim == 1
        Z = z[None, :] if single else z
        if E.shape[0] == 0:
            val = np.zeros(Z.shape[0], dtype=complex)
        else:
            maxe = int(E.max()) if E.size else 0
            P = np.ones((Z.shape[0], self._nvars, maxe + 1), dtype=np.result_type(Z, complex))
            for p in range(1, maxe + 1):
                P[:, :, p] = P[:, :, p - 1] * Z
            # gather z_i ** E[t, i] and multiply over i
            mono = np.ones((Z.shape[0], E.shape[0]), dtype=P.dtype)
            for i in range(self._nvars):
                mono *= P[:, i, E[:, i]]
            val = mono @ C
        return val[0] if single else val

    def gradient_polys(self) -> list["TruncPoly"]:
        got = self._cache.get("grad")
        if got is None:
            got = [self.partial(i) for i in range(self._nvars)]
            self._cache["grad"] = got
        return got

    # ---------------------------------------------------------- serialization
    def sorted_terms(self) -> list[tuple[Monomial, complex]]:
        """Terms in graded lexicographic order (x0 before x1 within a degree)."""
        return sorted(self._terms.items(), key=lambda kv: (sum(kv[0]), tuple(-e for e in kv[0])))

    def to_dict(self) -> dict:
        return {
            "vars": self._nvars,
            "max_degree": self._maxdeg,
            "terms": [
                {"exps": list(k), "re": c.real, "im": c.imag} for k, c in self.sorted_terms()
            ],
        }

    def to_json(self, indent: int | None = None) -> str:
        return jsonio.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict, prune: float = DEFAULT_PRUNE) -> "TruncPoly":
        terms = {tuple(t["exps"]): complex(t["re"], t["im"]) for t in d["terms"]}
        return cls(d["vars"], d["max_degree"], terms, prune=prune)

    @classmethod
    def from_json(cls, text: str, prune: float = DEFAULT_PRUNE) -> "TruncPoly":
        return cls.from_dict(jsonio.loads(text), prune=prune)


def _is_linear_homogeneous(p: TruncPoly) -> bool:
    return all(sum(k) == 1 for k in p.terms)


@lru_cache(maxsize=64)
def _monomial_index(m: int, d: int):
    """Map every flat index of an ``m**d`` tensor to its monomial id."""
    grid = np.indices((m,) * d).reshape(d, -1).T
    grid.sort(axis=1)
    counts = np.zeros((grid.shape[0], m), dtype=np.int64)
    for j in range(d):
        counts[np.arange(grid.shape[0]), grid[:, j]] += 1
    uniq, codes = np.unique(counts, axis=0, return_inverse=True)
    keys = [tuple(int(x) for x in row) for row in uniq]
    return codes.ravel(), keys


# ---------------------------------------------------------------- functional API
def poly_add(a: TruncPoly, b: TruncPoly) -> TruncPoly:
    """Coefficientwise sum; raises :class:`DimensionError` on mismatch."""
    return a + b


def poly_mul(a: TruncPoly, b: TruncPoly) -> TruncPoly:
    """Truncated product."""
    return a * b


def poly_compose(p: TruncPoly, subst: Sequence[TruncPoly], require_zero_constant: bool = False) -> TruncPoly:
    """Substitute ``subst[i]`` for variable ``i`` of ``p``."""
    return p.compose(subst, require_zero_constant=require_zero_constant)


def poly_grade(p: TruncPoly, d: int) -> TruncPoly:
    """Homogeneous degree-``d`` part."""
    return p.grade(d)


def poly_partial(p: TruncPoly, var: int) -> TruncPoly:
    """Formal partial derivative."""
    return p.partial(var)


def monomials(nvars: int, degree: int) -> Iterable[Monomial]:
    """All exponent tuples of the given total degree."""
    for combo in itertools.combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for i in combo:
            e[i] += 1
        yield tuple(e)


def multinomial(exps: Sequence[int]) -> int:
    """Factorial product ``prod(e_i!)`` used to turn coefficients into derivatives."""
    out = 1
    for e in exps:
        out *= math.factorial(e)
    return out


def binomial_series(u: TruncPoly, alpha: float) -> TruncPoly:
    """``(1 + u)**alpha`` for a polynomial ``u`` without constant term."""
    if abs(u.coeff((0,) * u.nvars)) > 0:
        raise ValueError("binomial_series needs u(0) = 0")
    md = u.max_degree
    out = TruncPoly.constant(u.nvars, md, 1.0, u.prune)
    term = TruncPoly.constant(u.nvars, md, 1.0, u.prune)
    coef = 1.0
    for k in range(1, md + 1):
        coef *= (alpha - k + 1) / k
        term = term * u
        if term.is_zero():
            break
        out = out + term.scale(coef)
    return out
