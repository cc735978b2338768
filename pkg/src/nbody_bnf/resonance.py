"""Integer relations among frequencies and the admissible Lagrange mass space."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.typing import NDArray

from . import jsonio
from .errors import BudgetError

__all__ = [
    "ResonanceReport",
    "lattice_size",
    "scan",
    "diophantine_fit",
    "ak_sequence",
    "bk_sequence",
    "AK_RATIO_BOUND",
    "verify_ak_nonresonant",
    "EXCLUDED_BETAS",
    "M1_MIN",
    "omega_ps_membership",
    "omega_membership",
    "masses_from_beta_m1",
    "beta_m1_from_masses",
    "sample_omega_ps",
    "lyapunov_exclusions",
    "lyapunov_admissible",
]

MAX_FREQS = 12
DEFAULT_BUDGET = 5_000_000


# ------------------------------------------------------------------ scanning
@dataclass(frozen=True)
class ResonanceReport:
    """Outcome of an exhaustive lattice scan.

    Attributes
    ----------
    order_checked : int
    freqs : list of float
    tol : float
        Absolute threshold used for ``|k . w|``.
    offending : list of (tuple, float)
        Integer vectors and their divisors, sorted by divisor then vector.
    min_divisor : float
        Smallest ``|k . w|`` over the whole scanned lattice.
    argmin : tuple
    diophantine_fit : tuple or None
        ``(c, upsilon)`` regression estimate, informational.
    """

    order_checked: int
    freqs: list
    tol: float
    offending: list
    min_divisor: float
    argmin: tuple
    n_checked: int
    diophantine_fit: tuple | None = None

    @property
    def resonant(self) -> bool:
        return bool(self.offending)

    def to_dict(self) -> dict:
        return {
            "order_checked": self.order_checked,
            "freqs": list(self.freqs),
            "tol": self.tol,
            "n_checked": self.n_checked,
            "min_divisor": self.min_divisor,
            "argmin": list(self.argmin),
            "offending": [{"k": list(k), "value": v} for k, v in self.offending],
            "diophantine_fit": None if self.diophantine_fit is None
            else {"c": self.diophantine_fit[0], "upsilon": self.diophantine_fit[1]},
        }

    def to_json(self, indent: int | None = None) -> str:
        return jsonio.dumps(self.to_dict(), indent=indent)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "value"])
        for k, v in self.offending:
            w.writerow([" ".join(str(x) for x in k), format(v, ".17g")])
        return buf.getvalue()


def lattice_size(n: int, m: int) -> int:
    """Number of nonzero integer vectors in ``Z^n`` with L1 norm at most ``m``."""
    # |{k : |k|_1 <= m}| = sum_i 2^i C(n, i) C(m, i)
    return sum(2**i * math.comb(n, i) * math.comb(m, i) for i in range(min(n, m) + 1)) - 1


def _shell(n: int, s: int) -> NDArray:
    """All integer vectors of L1 norm exactly ``s``, in lexicographic order."""
    if n == 1:
        return np.array([[-s], [s]] if s else [[0]], dtype=np.int64)
    rows = []
    for first in range(-s, s + 1):
        rest = _shell(n - 1, s - abs(first))
        rows.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(rows)


def _lattice(n: int, m: int) -> NDArray:
    return np.vstack([_shell(n, s) for s in range(1, m + 1)])


def scan(freqs, m: int, tol: float | None = None, budget: int = DEFAULT_BUDGET,
         fit: bool = False) -> ResonanceReport:
    """Exhaustive search for ``|k . w| < tol`` with ``1 <= |k|_1 <= m``.

    Both ``k`` and ``-k`` are reported. Offenders are ordered by divisor and
    then lexicographically.

    Parameters
    ----------
    freqs : sequence of float
    m : int
        Resonance order.
    tol : float, optional
        Absolute tolerance, default ``1e-9 * max|w|``.
    budget : int
        Maximum lattice size.

    Raises
    ------
    BudgetError
        When the lattice exceeds ``budget`` or more than 12 frequencies are given.
    """
    w = np.asarray(freqs, dtype=float)
    n = len(w)
    if n == 0 or m < 1:
        raise ValueError("need at least one frequency and m >= 1")
    if np.any(w == 0):
        raise ValueError("frequencies must be nonzero")
    size = lattice_size(n, m)
    if n > MAX_FREQS or size > budget:
        raise BudgetError(f"lattice of {size} vectors exceeds budget {budget}", required=size)
    if tol is None:
        tol = 1e-9 * float(np.abs(w).max())
    K = _lattice(n, m)
    vals = np.abs(K @ w)
    order = np.lexsort(tuple(K[:, j] for j in range(n - 1, -1, -1)) + (vals,))
    i0 = int(order[0])
    hits = [(tuple(int(x) for x in K[i]), float(vals[i])) for i in order if vals[i] < tol]
    dfit = diophantine_fit(w, budget=budget) if fit else None
    return ResonanceReport(order_checked=m, freqs=[float(x) for x in w], tol=float(tol),
                           offending=hits, min_divisor=float(vals[i0]),
                           argmin=tuple(int(x) for x in K[i0]), n_checked=int(len(K)),
                           diophantine_fit=dfit)


def diophantine_fit(freqs, kmax: int = 30, budget: int = DEFAULT_BUDGET):
    """Regress log of the running minimal divisor on ``log |k|``.

    Returns ``(c, upsilon)`` with ``|k . w| ~ c / |k|^upsilon``, or ``None``
    when too few shells fit the budget.
    """
    w = np.asarray(freqs, dtype=float)
    n = len(w)
    ks, mins = [], []
    best = math.inf
    total = 0
    for s in range(1, kmax + 1):
        total += lattice_size(n, s) - lattice_size(n, s - 1)
        if total > budget:
            break
        sh = _shell(n, s)
        best = min(best, float(np.abs(sh @ w).min()))
        if best > 0:
            ks.append(s)
            mins.append(best)
    if len(ks) < 3:
        return None
    slope, icpt = np.polyfit(np.log(ks), np.log(mins), 1)
    return float(math.exp(icpt)), float(-slope)


# ----------------------------------------------------------- cascade a_k
AK_RATIO_BOUND = math.sqrt((math.sqrt(1417) - 11) / (4 * math.sqrt(7) - 2))


def ak_sequence(nmax: int) -> list[float]:
    """``a_1..a_nmax`` of the cascade frequency limit (``a_1 = 1``)."""
    if nmax < 2:
        raise ValueError("nmax must be at least 2")
    out = [1.0]
    for k in range(2, nmax + 1):
        t = 3.0**k
        out.append(0.5 * math.sqrt(math.sqrt(3.0 ** (2 * k + 2) - 34 * t + 25) - t + 5))
    return out


def bk_sequence(nmax: int, c2: float) -> list[float]:
    """First-order corrections ``b_2..b_nmax`` (``b_1 = 0``)."""
    out = [0.0]
    for k in range(2, nmax + 1):
        t = 3.0**k
        r = math.sqrt(9.0 ** (k + 1) - 34 * t + 25)
        out.append(3.0 ** (k - 1) * ((17 - 3.0 ** (k + 2)) / r + 1) * c2 / math.sqrt(r - t + 5))
    return out


def verify_ak_nonresonant(nmax: int) -> dict:
    """Brute-force the five order-3/4 relation patterns among ``a_1..a_{nmax-1}``.

    Returns per-case offender lists, minimal margins, and the ratio and
    gap-bound checks the proof relies on.
    """
    if nmax > 40:
        raise BudgetError("nmax above 40 is outside the enumeration budget", required=nmax)
    a = ak_sequence(max(nmax - 1, 2))[: max(nmax - 1, 1)]
    n = len(a)
    rtol = 1e-12
    cases: dict[str, dict] = {}

    def record(name, idx, lhs, rhs):
        c = cases.setdefault(name, {"offenders": [], "min_margin": math.inf, "argmin": None, "count": 0})
        margin = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
        c["count"] += 1
        if margin < c["min_margin"]:
            c["min_margin"], c["argmin"] = margin, list(idx)
        if margin < rtol:
            c["offenders"].append(list(idx))

    for k1, k2 in itertools.combinations(range(n), 2):
        record("1", (k1 + 1, k2 + 1), a[k2], 2 * a[k1])
        record("3", (k1 + 1, k2 + 1), a[k2], 3 * a[k1])
    for k1, k2, k3 in itertools.combinations(range(n), 3):
        record("2", (k1 + 1, k2 + 1, k3 + 1), a[k3], a[k2] + a[k1])
        record("4", (k1 + 1, k2 + 1, k3 + 1), a[k3], a[k2] + 2 * a[k1])
        record("4", (k1 + 1, k2 + 1, k3 + 1), a[k3], 2 * a[k2] + a[k1])
        record("4", (k1 + 1, k2 + 1, k3 + 1), a[k3], 2 * a[k2] - a[k1])
    for k1, k2, k3, k4 in itertools.combinations(range(n), 4):
        record("5", (k1 + 1, k2 + 1, k3 + 1, k4 + 1), a[k4], a[k3] + a[k2] + a[k1])
    for name in "12345":
        cases.setdefault(name, {"offenders": [], "min_margin": math.inf, "argmin": None, "count": 0})

    ratios = [a[k + 1] / a[k] for k in range(1, n - 1)]
    ratio_ok = all(math.sqrt(3) < r <= AK_RATIO_BOUND * (1 + 1e-15) for r in ratios)
    decreasing = all(ratios[i + 1] < ratios[i] for i in range(len(ratios) - 1))
    gap_ok = all(
        a[k2] + a[k1] < (3 ** (-(k3 - k2) / 2) + 3 ** (-(k3 - k1) / 2)) * a[k3]
        for k1, k2, k3 in itertools.combinations(range(n), 3)
    )
    total = sum(len(c["offenders"]) for c in cases.values())
    return {
        "nmax": nmax,
        "a": a,
        "cases": {k: cases[k] for k in sorted(cases)},
        "offenders_total": total,
        "ratio_bound": AK_RATIO_BOUND,
        "ratios_in_bounds": ratio_ok,
        "ratios_decreasing": decreasing,
        "case2_gap_bound": gap_ok,
        "nonresonant": total == 0,
    }


# --------------------------------------------------------- mass space
EXCLUDED_BETAS = (Fraction(1, 75), Fraction(32, 2187), Fraction(16, 675), Fraction(1, 36), Fraction(64, 1875))
M1_MIN = (math.sqrt(69) + 9) / 18
BOUNDARY_TOL = 1e-12


def omega_membership(beta: float, m1: float, tol: float = BOUNDARY_TOL) -> bool:
    """Membership in the normalized three-body mass space ``(beta, m1)``.

    The non-strict inequality ``4 beta <= 1 + 2 m1 - 3 m1^2`` is tested with
    an absolute slack ``tol`` since it is met with equality when ``m2 = m3``.
    """
    return (0 < beta <= 1 / 3 and 1 / 3 <= m1 < 1 and beta - m1 * (1 - m1) > 0
            and 4 * beta <= 1 + 2 * m1 - 3 * m1 * m1 + tol)


def omega_ps_membership(beta: float, m1: float, tol: float = BOUNDARY_TOL,
                        exclusion_tol: float = 1e-12) -> bool:
    """Membership in the admissible Lagrange mass space.

    ``beta`` must lie in ``(0, 1/27)`` away from the five resonant values,
    and ``m1`` in the open interval ``(M1_MIN, 1)``.
    """
    if not omega_membership(beta, m1, tol):
        return False
    if not (0 < beta < 1 / 27 and M1_MIN < m1 < 1):
        return False
    return all(abs(beta - float(b)) > exclusion_tol * float(b) for b in EXCLUDED_BETAS)


def masses_from_beta_m1(beta: float, m1: float) -> tuple[float, float, float]:
    """Normalized masses ``m1 >= m2 >= m3`` from ``(beta, m1)``."""
    s = 1 - m1
    p = beta - m1 * s
    disc = max(s * s - 4 * p, 0.0)
    r = math.sqrt(disc)
    return m1, (s + r) / 2, (s - r) / 2


def beta_m1_from_masses(m) -> tuple[float, float]:
    m = np.sort(np.asarray(m, dtype=float))[::-1]
    m = m / m.sum()
    return float(m[0] * m[1] + m[1] * m[2] + m[0] * m[2]), float(m[0])


def sample_omega_ps(rng: np.random.Generator, n: int, margin: float = 1e-4) -> list[tuple[float, float]]:
    """Draw ``n`` points of the admissible space, avoiding excluded betas by ``margin``.

    ``m1`` is uniform on its interval and ``beta`` uniform on the allowed
    slice at that ``m1``.
    """
    out = []
    while len(out) < n:
        m1 = rng.uniform(M1_MIN, 1.0)
        lo = m1 * (1 - m1)
        hi = min((1 + 2 * m1 - 3 * m1 * m1) / 4, 1 / 27)
        if hi <= lo:
            continue
        beta = rng.uniform(lo, hi)
        if not omega_ps_membership(beta, m1):
            continue
        if min(abs(beta - float(b)) for b in EXCLUDED_BETAS) < margin or 1 / 27 - beta < margin:
            continue
        _, m2, m3 = masses_from_beta_m1(beta, m1)
        if m3 <= 0:
            continue
        out.append((float(beta), float(m1)))
    return out


def lyapunov_exclusions(nmax: int = 10) -> dict:
    """The two countable beta families where a linear frequency ratio is an integer.

    ``first`` makes ``omega0 / omega1 = n``; ``second`` makes
    ``omega2 / omega1 = n``.
    """
    first = [(1 - (1 - 2 / n**2) ** 2) / 27 for n in range(2, nmax + 1)]
    second = [(1 - (1 - 2 / (n**2 + 1)) ** 2) / 27 for n in range(2, nmax + 1)]
    return {"n": list(range(2, nmax + 1)), "first": first, "second": second}


def lyapunov_admissible(beta: float, nmax: int = 1000, tol: float = 1e-12) -> bool:
    ex = lyapunov_exclusions(nmax)
    return all(abs(beta - b) > tol * b for b in ex["first"] + ex["second"])
