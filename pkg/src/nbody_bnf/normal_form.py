"""Degree-4 Birkhoff normalization by generating functions.

The generating function ``G = sum u_j eta_j + S3(u, eta) + S4(u, eta)``
defines ``zeta = u + dS/deta`` and ``v = eta + dS/du``. With
``H2 = sum c_j zeta_j eta_j`` the homological equation for a monomial
``u^a eta^b`` has divisor ``sum_j c_j (b_j - a_j)``.

The normal form is written in real actions as
``sum s_j w_j rho_j + 1/2 sum omega_jk rho_j rho_k`` with ``rho_j = i u_j v_j``
for elliptic modes and ``rho_j = u_j v_j`` for hyperbolic modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.typing import NDArray

from . import jsonio
from .errors import DomainError, SmallDivisorError
from .hamiltonian import HamiltonianExpansion
from .poly import TruncPoly
from .spectrum import FrequencyData, SymplecticChart, complexify, diagonalize

__all__ = [
    "NormalForm",
    "CenterRestriction",
    "complex_hamiltonian",
    "solve_s3",
    "solve_s4_and_extract",
    "birkhoff",
    "restrict_center",
    "degeneracy_verdict",
    "normalizing_map",
    "verify_normal_form",
    "oracle_lagrange",
    "lagrange_f_deg",
    "lagrange_det_closed_form",
    "euler_tau",
    "oracle_euler_tau",
    "oracle_euler_block",
    "f_num_limit",
    "h_epsilon",
]

DEFAULT_DIVISOR_TOL = 1e-9


# ------------------------------------------------------------------ types
@dataclass(frozen=True)
class NormalForm:
    """Birkhoff normal form of degree 4.

    Attributes
    ----------
    freq : FrequencyData
    omega_jk : ndarray
        Symmetric matrix of second-order action coefficients.
    h_jk : ndarray
        Raw coefficients of ``(u_j v_j)(u_k v_k)`` in the complex normal form
        (upper triangle, ``j <= k``).
    S3, S4 : TruncPoly
        Generating-function pieces in ``(u, eta)``.
    K4 : TruncPoly
        Normalized quartic part in ``(u, v)``.
    min_divisor : float
        Smallest divisor actually used, relative to ``omega0``.
    """

    freq: FrequencyData
    omega_jk: NDArray
    h_jk: NDArray
    S3: TruncPoly
    S4: TruncPoly
    K4: TruncPoly
    min_divisor: float
    meta: dict = field(default_factory=dict)

    @property
    def signed_freq(self) -> list:
        return self.freq.signed

    @property
    def det_center(self) -> float:
        return degeneracy_verdict(restrict_center(self))[0]

    def to_dict(self) -> dict:
        det, ok = degeneracy_verdict(restrict_center(self))
        return {
            "freq": self.freq.signed,
            "kinds": list(self.freq.kinds),
            "omega_jk": self.omega_jk.tolist(),
            "det_center": det,
            "nondegenerate": ok,
            "resonant": {"flag": False, "kvec": None},
            "min_divisor": self.min_divisor,
            "residuals": dict(self.meta.get("residuals", {})),
        }

    def to_json(self, indent: int | None = None) -> str:
        return jsonio.dumps(self.to_dict(), indent=indent)


@dataclass(frozen=True)
class CenterRestriction:
    """Normal form restricted to the elliptic (center) directions."""

    indices: list
    reduced_freq: list
    reduced_matrix: NDArray

    @property
    def dims(self) -> int:
        return 2 * len(self.indices)


# ------------------------------------------------------------- pipeline
def complex_hamiltonian(h: HamiltonianExpansion, chart: SymplecticChart | None = None):
    """Pull ``H2, H3, H4`` back to the complex variables ``(zeta, eta)``."""
    if chart is None:
        chart = complexify(diagonalize(h))
    elif chart.Tc is None:
        chart = complexify(chart)
    M = chart.full
    return chart, h.H2.linear_compose(M), h.H3.linear_compose(M), h.H4.linear_compose(M)


def _split(k: tuple, d: int):
    return k[:d], k[d:]


def _homological(P: TruncPoly, c: NDArray, tol: float, scale: float, keep_resonant: bool):
    """Solve ``L S = -P`` off the kernel; return ``(S, kernel part, min divisor)``."""
    d = len(c)
    S, R = {}, {}
    big = max(P.norm(), 1e-300)
    dmin = math.inf
    for k, coef in P:
        a, b = _split(k, d)
        kv = tuple(bj - aj for aj, bj in zip(a, b))
        D = complex(np.dot(c, kv))
        if a == b and keep_resonant:
            R[k] = coef
            continue
        if abs(D) < tol * scale:
            if abs(coef) > 1e-12 * big:
                raise SmallDivisorError(f"small divisor {abs(D):.3e} for k={kv}", kvec=kv, divisor=abs(D))
            continue
        dmin = min(dmin, abs(D) / scale)
        S[k] = -coef / D
    S_poly = TruncPoly(P.nvars, P.max_degree, S, prune=0.0)
    R_poly = TruncPoly(P.nvars, P.max_degree, R, prune=0.0)
    return S_poly, R_poly, dmin


def solve_s3(freq: FrequencyData, H3: TruncPoly, tol: float = DEFAULT_DIVISOR_TOL) -> TruncPoly:
    """Cubic generating function removing ``H3``.

    Raises
    ------
    SmallDivisorError
        A needed divisor is below ``tol * omega0``.
    """
    S3, _, _ = _homological(H3, freq.divisor_coeffs(), tol, freq.omega0, keep_resonant=False)
    return S3


def _h3_to_4(H3: TruncPoly, S3: TruncPoly, d: int) -> TruncPoly:
    """Quartic part of ``H3(u + dS3/deta, eta)``."""
    out = TruncPoly.zero(H3.nvars, 4, prune=0.0)
    for j in range(d):
        dH = H3.partial(j)
        dS = S3.partial(d + j)
        if dH.is_zero() or dS.is_zero():
            continue
        out = out + (dH.with_max_degree(4) * dS.with_max_degree(4)).grade(4)
    return out


def _action_index(k: tuple, d: int):
    a, b = _split(k, d)
    if a != b:
        return None
    idx = [j for j in range(d) for _ in range(a[j])]
    return tuple(idx) if len(idx) == 2 else None


def _omega_matrix(K4: TruncPoly, freq: FrequencyData):
    d = freq.dof
    kappa = np.array([-1j if k == "elliptic" else 1.0 for k in freq.kinds])
    H = np.zeros((d, d), dtype=complex)
    W = np.zeros((d, d), dtype=complex)
    for k, coef in K4:
        jk = _action_index(k, d)
        if jk is None:
            continue
        j, l = jk
        H[j, l] = coef
        if j == l:
            W[j, j] = 2 * coef * kappa[j] ** 2
        else:
            W[j, l] = W[l, j] = coef * kappa[j] * kappa[l]
    return W, H


def solve_s4_and_extract(freq: FrequencyData, H3: TruncPoly, S3: TruncPoly, H4: TruncPoly,
                         tol: float = DEFAULT_DIVISOR_TOL):
    """Quartic step: returns ``(S4, K4, omega_jk, h_jk, min_divisor)``."""
    d = freq.dof
    P = _h3_to_4(H3, S3, d) + H4.with_max_degree(4).grade(4)
    P = TruncPoly(P.nvars, 4, dict(P.terms), prune=0.0)
    S4, K4, dmin = _homological(P, freq.divisor_coeffs(), tol, freq.omega0, keep_resonant=True)
    W, Hm = _omega_matrix(K4, freq)
    return S4, K4, W, Hm, dmin


def birkhoff(h: HamiltonianExpansion, chart: SymplecticChart | None = None,
             tol: float = DEFAULT_DIVISOR_TOL, verify: bool = True) -> NormalForm:
    """Full normalization pipeline: diagonalize, complexify, remove ``H3``, normalize ``H4``.

    Parameters
    ----------
    h : HamiltonianExpansion
    chart : SymplecticChart, optional
        Reuse a precomputed chart.
    tol : float
        Small-divisor threshold relative to ``omega0``.
    verify : bool
        Compose the explicit normalizing map and record residuals.
    """
    chart, H2c, H3c, H4c = complex_hamiltonian(h, chart)
    freq = chart.freq
    S3 = solve_s3(freq, H3c, tol)
    S4, K4, W, Hm, dmin4 = solve_s4_and_extract(freq, H3c, S3, H4c, tol)
    imag = float(np.abs(W.imag).max()) if W.size else 0.0
    scale = max(float(np.abs(W).max()), 1e-300)
    omega = W.real
    dmin3 = min((abs(complex(np.dot(freq.divisor_coeffs(), np.subtract(k[len(freq.kinds):], k[:len(freq.kinds)]))))
                 for k, _ in H3c), default=math.inf) / freq.omega0
    meta = {"imag_part_relative": imag / scale, "chart": chart.meta.get("method")}
    nf = NormalForm(freq=freq, omega_jk=omega, h_jk=Hm, S3=S3, S4=S4, K4=K4,
                    min_divisor=min(dmin3, dmin4), meta=meta)
    if verify:
        meta["residuals"] = verify_normal_form(nf, H2c, H3c, H4c)
    meta["H3c_norm"] = H3c.norm()
    meta["H4c_norm"] = H4c.norm()
    return nf


def _exact(p: TruncPoly, degree: int) -> TruncPoly:
    return TruncPoly(p.nvars, degree, dict(p.terms), prune=0.0)


def normalizing_map(nf: NormalForm) -> list[TruncPoly]:
    """Explicit ``(zeta, eta)`` as degree-3 polynomials in ``(u, v)``.

    Solves ``eta = v - dS/du(u, eta)`` by fixed-point iteration, then
    ``zeta = u + dS/deta(u, eta)``.
    """
    d = nf.freq.dof
    n = 2 * d
    S = _exact(nf.S3, 4) + _exact(nf.S4, 4)
    ids = [TruncPoly.variable(n, 3, i, prune=0.0) for i in range(n)]
    eta = ids[d:]
    Su = [S.partial(j) for j in range(d)]
    Se = [S.partial(d + j) for j in range(d)]
    for _ in range(3):
        args = ids[:d] + eta
        eta = [ids[d + j] - Su[j].with_max_degree(3).compose(args) for j in range(d)]
    args = ids[:d] + eta
    zeta = [ids[j] + Se[j].with_max_degree(3).compose(args) for j in range(d)]
    return zeta + eta


def verify_normal_form(nf: NormalForm, H2c: TruncPoly, H3c: TruncPoly, H4c: TruncPoly) -> dict:
    """Compose ``H`` with the normalizing map and measure what is left.

    Returns relative residuals of the cubic part and of the non-action
    quartic part, plus the mismatch between the recovered and predicted
    quartic normal form.
    """
    d = nf.freq.dof
    phi = [p.with_max_degree(4) for p in normalizing_map(nf)]
    H = _exact(H2c, 4) + _exact(H3c, 4) + _exact(H4c, 4)
    K = H.compose(phi)
    K3 = K.grade(3)
    K4 = K.grade(4)
    off = K4.filter(lambda k: _action_index(k, d) is None)
    act = K4.filter(lambda k: _action_index(k, d) is not None)
    diff = act - nf.K4.with_max_degree(4)
    K2 = K.grade(2) - H2c.grade(2)
    return {
        "grade2": K2.norm() / max(H2c.norm(), 1e-300),
        "grade3": K3.norm() / max(H3c.norm(), 1e-300),
        "grade4_off_action": off.norm() / max(H4c.norm(), 1e-300),
        "grade4_action_mismatch": diff.norm() / max(nf.K4.norm(), 1e-300),
    }


def restrict_center(nf: NormalForm) -> CenterRestriction:
    """Principal submatrix over the elliptic modes."""
    idx = nf.freq.center_indices
    return CenterRestriction(
        indices=idx,
        reduced_freq=[nf.freq.signed[i] for i in idx],
        reduced_matrix=nf.omega_jk[np.ix_(idx, idx)].copy(),
    )


def degeneracy_verdict(cr: CenterRestriction | NDArray, threshold: float = 1e-10) -> tuple[float, bool]:
    """Determinant of the center matrix and the nondegeneracy flag."""
    M = cr.reduced_matrix if isinstance(cr, CenterRestriction) else np.asarray(cr, dtype=float)
    det = float(np.linalg.det(M)) if M.size else 1.0
    return det, abs(det) > threshold


# ---------------------------------------------------------- closed forms
def lagrange_f_deg(beta: float, m1: float) -> float:
    """The polynomial whose zero set is the degenerate mass variety.

    Evaluated in exact rational arithmetic: the large integer coefficients
    cancel heavily in double precision.
    """
    b = Fraction(beta)
    m1 = Fraction(m1)
    t0 = 2 * (1 - 36 * b) ** 2 / 3 * (52542675 * b**3 + 178185258 * b**2 - 9896841 * b - 47632) * b**4
    t1 = -11 * (397050199920 * b**5 - 40790893923 * b**4 + 4055047758 * b**3
                - 243771759 * b**2 + 6417616 * b - 59392) * b**3 * m1
    t2 = (5465578392450 * b**6 + 19309935720393 * b**5 - 3995019640449 * b**4
          + 327340481715 * b**3 - 13039336341 * b**2 + 250520816 * b - 1857536) * b**2 * m1**2
    t3 = (2408448 - 15298708984020 * b**6 - 29436067209393 * b**5 + 7048034089254 * b**4
          - 562788423405 * b**3 + 20645100208 * b**2 - 359200768 * b) * b * m1**3
    t4 = 3 * ((1821859464150 * b**6 + 4980794507091 * b**5 - 1182106602432 * b**4
               + 94244985459 * b**3 - 3452615664 * b**2 + 59975680 * b - 401408)
              * m1**4 * (2 * b + m1**2 - 2 * m1 + 1))
    return float(t0 + t1 + t2 + t3 + t4)


def oracle_lagrange(beta: float, m1: float, check_domain: bool = True) -> dict:
    """Closed-form Lagrange normal-form coefficients at ``(beta, m1)``.

    Raises
    ------
    DomainError
        If ``(beta, m1)`` lies outside the admissible mass space.
    """
    from .resonance import masses_from_beta_m1, omega_ps_membership

    if check_domain and not omega_ps_membership(beta, m1):
        raise DomainError(f"(beta={beta!r}, m1={m1!r}) is outside the admissible mass space")
    m = masses_from_beta_m1(beta, m1)
    p = m[0] * m[1] * m[2]
    g = math.sqrt(1 - 27 * beta)
    b = beta
    w01 = -(math.sqrt(g + 1) * (21 * g**3 - 40 * g**2 + 15 * g + 4)
            / (12 * math.sqrt(6) * math.sqrt(b) * g * (2 * g - 1)))
    w02 = -(math.sqrt(g + 1) * (21 * g**2 + 19 * g - 4) / (4 * math.sqrt(2) * g * (2 * g + 1)))
    w12 = (math.sqrt(3 * b) / (4 * (18225 * b**2 - 1107 * b + 16) * p)
           * ((360855 * b**2 - 32265 * b + 624) * m1**3
              + (-360855 * b**2 + 32265 * b - 624) * m1**2
              + 3 * b * (120285 * b**2 - 10755 * b + 208) * m1
              - 4 * b**2 * (432 * b + 43)))
    w11 = ((g - 1) * (1211 * g**4 - 1336 * g**3 + 279 * g**2 + 158 * g - 76)
           / (72 * g**2 * (10 * g**2 - 11 * g + 3))
           - 3 * b**3 * (31 * g**2 + 286 * g - 236) / (8 * (g - 1) * g**2 * (5 * g - 3) * p))
    w22 = (-(g + 1) * (1211 * g**4 + 1336 * g**3 + 279 * g**2 - 158 * g - 76)
           / (72 * g**2 * (10 * g**2 + 11 * g + 3))
           - 3 * b**3 * (31 * g**2 - 286 * g - 236) / (8 * g**2 * (g + 1) * (5 * g + 3) * p))
    fdeg = lagrange_f_deg(b, m1)
    det = lagrange_det_closed_form(b, m1, masses=m, f_deg=fdeg)
    return {"beta": b, "m1": m1, "masses": list(m), "gamma": g,
            "omega00": -3.0, "omega01": w01, "omega02": w02, "omega12": w12,
            "omega11": w11, "omega22": w22, "f_deg": fdeg, "det": det}


def lagrange_det_closed_form(beta: float, m1: float, masses=None, f_deg: float | None = None) -> float:
    """Prefactor times ``f_deg``."""
    from .resonance import masses_from_beta_m1

    m = masses_from_beta_m1(beta, m1) if masses is None else masses
    p = m[0] * m[1] * m[2]
    g = math.sqrt(1 - 27 * beta)
    f = lagrange_f_deg(beta, m1) if f_deg is None else f_deg
    pre = -27 * beta / (128 * (16 - 675 * beta) ** 2 * (1 - 36 * beta) ** 2 * g**4 * p**2)
    return pre * f


def euler_tau(lam: float, lam6: float) -> float:
    r = lam6 / lam
    return 0.25 * (5 - 9 * r) + 0.75 * math.sqrt(9 * r * r - 10 * r + 1)


def oracle_euler_tau(lam: float, lam6: float, a30: float, a4: float) -> dict:
    """Closed-form three-body collinear center coefficients in ``tau``."""
    t = euler_tau(lam, lam6)
    P7 = 7 * t**4 + 42 * t**3 + 41 * t**2 - 76 * t - 28
    q = 8 * t**2 + 19 * t - 16
    w01 = -((2 * t - 1) * math.sqrt((2 * t**2 + 7 * t - 4) / t) * P7
            / ((t - 1) * (2 * t**2 + 7 * t + 2) * q))
    w11 = ((-16 * t**8 - 125 * t**7 + 58 * t**6 + 1436 * t**5 + 454 * t**4 - 2739 * t**3
            + 2640 * t**2 - 1140 * t + 128)
           / (2 * (t - 1) ** 2 * t * (t + 4) * (2 * t - 1) * q)
           + 27 * t * (9 * a30**2 * t * (28 * t**6 + 131 * t**5 + 434 * t**4 + 544 * t**3
                                          - 472 * t**2 + 140 * t - 120)
                       / ((4 * t + 1) * (4 * t**2 + 7 * t - 6))
                       - a4 * lam * (t + 4) * (3 * t**4 + 8 * t**3 + 24 * t**2 + 8))
           / (8 * lam**2 * (t + 4) ** 2 * (2 * t - 1) * (t**2 - 1) ** 2))
    det = (-(t + 4) * (2 * t - 1) ** 3 * P7**2
           / ((t - 1) ** 2 * t * (2 * t**2 + 7 * t + 2) ** 2 * q**2)
           + 3 / (8 * lam**2 * t * (t + 4) ** 2 * (2 * t - 1) * (4 * t + 1) * (t**2 - 1) ** 2
                  * (4 * t**2 + 7 * t - 6) * q)
           * (-243 * a30**2 * t**3 * (224 * t**8 + 1580 * t**7 + 5513 * t**6 + 10502 * t**5
                                      - 384 * t**4 - 16552 * t**3 + 9252 * t**2 - 4520 * t + 1920)
              + 27 * a4 * lam * t**2 * (384 * t**10 + 4240 * t**9 + 19016 * t**8 + 45319 * t**7
                                        + 49694 * t**6 - 16688 * t**5 - 54352 * t**4
                                        + 20392 * t**3 - 17776 * t**2 + 5824 * t + 3072)
              + 4 * lam**2 * (t + 1) ** 2 * (256 * t**12 + 3536 * t**11 + 12848 * t**10
                                             - 15853 * t**9 - 161192 * t**8 - 157864 * t**7
                                             + 277966 * t**6 + 136889 * t**5 - 377438 * t**4
                                             + 243876 * t**3 - 35208 * t**2 - 17888 * t + 3072)))
    return {"tau": t, "omega00": -3.0, "omega01": w01, "omega11": w11, "det": det}


def _delta(iota: float) -> float:
    v = (iota - 1) * (9 * iota - 25)
    if v < 0:
        raise DomainError(f"iota={iota!r} gives a complex square root")
    return math.sqrt(v)


def f_num(iota: float, c: float) -> float:
    D = _delta(iota)
    i = iota
    return (3 * c * i * (9 * (9 * D - 106) * i**4 - (165 * D + 1774) * i**3
                         + (1177 * D + 17576) * i**2 - 5 * (827 * D + 7161) * i
                         + 4450 * (D + 5) + 243 * i**5)
            + (-81 * (7 * D - 80) * i**4 + 3 * (363 * D + 4430) * i**3
               - (9097 * D + 131244) * i**2 + (30667 * D + 276755) * i
               - 36300 * (D + 5) - 1701 * i**5))


def f_den(iota: float) -> float:
    D = _delta(iota)
    i = iota
    return ((D - i + 5) ** 2 * (D + i - 5) * (5 * (D + 3) - 3 * i)
            * ((3 * D - 34) * i + 5 * (D + 5) + 9 * i**2) ** 3
            * ((3 * D + 34) * i + 5 * (D - 5) - 9 * i**2))


def f_num_limit(iota: float) -> float:
    """Leading behaviour of ``f_num`` in the cascade limit."""
    r = math.sqrt(9 * iota**2 - 34 * iota + 25)
    return 2 * (iota - 3) * (243 * iota**4 - 324 * iota**3 - 2310 * iota**2 + 6540 * iota - 3125
                             + r * (81 * iota**3 + 45 * iota**2 + 883 * iota - 625))


def oracle_euler_block(iota: float, c_ring: float, omega: float = 1.0, s1: float = 1.0) -> dict:
    """Printed coefficients of the outermost collinear block.

    Parameters
    ----------
    iota : float
        Eigenvalue ratio of the block (must exceed 25/9).
    c_ring : float
        ``s2 * omega**2 / s1**2``.
    omega : float
        Rotation frequency of the block.
    s1 : float
        Cubic coefficient scale (``sigma_1 / sqrt(eps)``).
    """
    if iota <= 25 / 9:
        raise DomainError("iota must exceed 25/9")
    i = iota
    fn = f_num(i, c_ring)
    fd = f_den(i)
    w_ee = -6144 * fn * i * (9 * i**3 - 61 * i**2 + 127 * i - 75) * s1**2 / (fd * omega**4)
    w_eh = (9 * math.sqrt(2) * s1**2
            / (i * math.sqrt((i - 3) * i) * (9 * i**2 - 34 * i + 25) * (27 * i**2 - 95 * i + 50) * omega**4)
            * (162 * i**4 - 1029 * i**3 + 2457 * i**2 - 2695 * i + 825
               - c_ring * i * (81 * i**4 - 555 * i**3 + 1397 * i**2 - 1545 * i + 550))) if i > 3 else math.nan
    return {"iota": i, "c_ring": c_ring, "f_num": fn, "f_den": fd,
            "omega_ee": w_ee, "omega_eh": w_eh}


def h_epsilon(omega: float, iota: float, s1: float, s2: float) -> HamiltonianExpansion:
    """Standalone two-degree-of-freedom block Hamiltonian.

    Variables ``(x1, x2, y1, y2)``.
    """
    from .hamiltonian import HamiltonianExpansion

    n = 4
    X = [TruncPoly.variable(n, 4, i) for i in range(n)]
    x1, x2, y1, y2 = X
    H2 = 0.5 * (y1 * y1 + y2 * y2 + (x2 * y1 - x1 * y2).scale(2 * omega)
                + (x1 * x1).scale(omega**2 * (1 - iota)) + (x2 * x2).scale(omega**2 * (iota - 1) / 2))
    H3 = (x1 * x1 * x1).scale(s1) - (x1 * x2 * x2).scale(1.5 * s1)
    H4 = -((x1 ** 4).scale(s2) + (x2 ** 4).scale(3 * s2 / 8) - (x1 * x1 * x2 * x2).scale(3 * s2))
    return HamiltonianExpansion(omega=omega, H2=H2, H3=H3, H4=H4, constant=0.0, frame=None,
                                meta={"kind": "h_epsilon", "iota": iota, "s1": s1, "s2": s2})
