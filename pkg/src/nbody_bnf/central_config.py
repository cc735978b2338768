"""Central configurations and the eigenstructure of the linearized gradient.

Configurations are stored flat as ``(x1, y1, x2, y2, ...)``. The mass metric
is ``diag(m1, m1, m2, m2, ...)`` and every inner product ``<u, v>`` below is
taken with respect to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import optimize

from . import jsonio
from .errors import ConvergenceError, MassError, OrderError, SingularityError

__all__ = [
    "MassSystem",
    "CentralConfig",
    "CollinearSpectrum",
    "potential",
    "potential_gradient",
    "potential_hessian",
    "perp",
    "cc_residual",
    "accel_jacobian",
    "hessian_gradient_map",
    "solve_lagrange",
    "solve_euler3",
    "solve_collinear",
    "asymptotic_iota",
    "config_scale",
    "lagrange_e5_closed_form",
    "euler_e5_closed_form",
    "euler_admissible",
]


# --------------------------------------------------------------------- masses
@dataclass(frozen=True)
class MassSystem:
    """Point masses of the planar N-body problem.

    Parameters
    ----------
    masses : sequence of float
        Body masses in the body order used everywhere downstream.
    allow_zero : bool
        Admit exactly one zero mass (restricted problems).
    """

    masses: tuple
    allow_zero: bool = False

    def __post_init__(self):
        m = tuple(float(x) for x in self.masses)
        object.__setattr__(self, "masses", m)
        if len(m) < 2:
            raise MassError("need at least two bodies")
        if any(not math.isfinite(x) for x in m):
            raise MassError("masses must be finite")
        nz = sum(1 for x in m if x == 0.0)
        if any(x < 0 for x in m):
            raise MassError("masses must be non-negative")
        if nz > (1 if self.allow_zero else 0):
            raise MassError("masses must be positive" if not self.allow_zero
                            else "at most one zero mass is admitted")
        if m[0] <= 0:
            raise MassError("the first mass must be positive")

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total_mass(self) -> float:
        return float(sum(self.masses))

    @property
    def array(self) -> NDArray:
        return np.array(self.masses)

    def normalized(self) -> "MassSystem":
        """Masses rescaled to unit total mass."""
        t = self.total_mass
        return MassSystem(tuple(x / t for x in self.masses), self.allow_zero)


def _as_masses(m) -> MassSystem:
    return m if isinstance(m, MassSystem) else MassSystem(tuple(m))


def _metric(masses: NDArray) -> NDArray:
    return np.repeat(np.asarray(masses, dtype=float), 2)


# ----------------------------------------------------------------- potential
def _pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def potential(r: NDArray, masses: Sequence[float]) -> float:
    """Force function ``U = sum m_i m_j / |r_i - r_j|`` (positive)."""
    P = np.asarray(r, dtype=float).reshape(-1, 2)
    m = np.asarray(masses, dtype=float)
    out = 0.0
    for i, j in _pairs(len(m)):
        d = math.hypot(*(P[j] - P[i]))
        if d == 0.0:
            raise SingularityError(f"bodies {i} and {j} collide")
        out += m[i] * m[j] / d
    return out


def potential_gradient(r: NDArray, masses: Sequence[float]) -> NDArray:
    """Gradient of ``U`` with respect to the flat configuration."""
    P = np.asarray(r, dtype=float).reshape(-1, 2)
    m = np.asarray(masses, dtype=float)
    g = np.zeros_like(P)
    for i, j in _pairs(len(m)):
        d = P[j] - P[i]
        rr = float(d @ d)
        if rr == 0.0:
            raise SingularityError(f"bodies {i} and {j} collide")
        f = m[i] * m[j] * d / rr ** 1.5
        g[i] += f
        g[j] -= f
    return g.ravel()


def potential_hessian(r: NDArray, masses: Sequence[float]) -> NDArray:
    """Hessian ``B`` of ``U``; off-diagonal blocks ``m_i m_j (I - 3 d d^T / |d|^2) / |d|^3``."""
    P = np.asarray(r, dtype=float).reshape(-1, 2)
    m = np.asarray(masses, dtype=float)
    n = len(m)
    B = np.zeros((2 * n, 2 * n))
    for i, j in _pairs(n):
        d = P[j] - P[i]
        rr = float(d @ d)
        if rr == 0.0:
            raise SingularityError(f"bodies {i} and {j} collide")
        blk = m[i] * m[j] * (np.eye(2) - 3.0 * np.outer(d, d) / rr) / rr ** 1.5
        B[2 * i:2 * i + 2, 2 * j:2 * j + 2] = blk
        B[2 * j:2 * j + 2, 2 * i:2 * i + 2] = blk
        B[2 * i:2 * i + 2, 2 * i:2 * i + 2] -= blk
        B[2 * j:2 * j + 2, 2 * j:2 * j + 2] -= blk
    return B


def perp(v: NDArray) -> NDArray:
    """Rotate every planar component by +90 degrees."""
    P = np.asarray(v).reshape(-1, 2)
    return np.column_stack([-P[:, 1], P[:, 0]]).ravel()


def cc_residual(r: NDArray, masses: Sequence[float], lam: float | None = None) -> float:
    """Max-norm residual of ``sum_j m_j (r_j - r_k)/|r_jk|^3 + lam r_k``.

    ``lam`` defaults to ``U / I``. Zero-mass bodies are included (their
    acceleration is still defined).
    """
    r = np.asarray(r, dtype=float)
    m = np.asarray(masses, dtype=float)
    if lam is None:
        lam = potential(r, m) / float(r @ (_metric(m) * r))
    P = r.reshape(-1, 2)
    acc = np.zeros_like(P)
    for i, j in _pairs(len(m)):
        d = P[j] - P[i]
        rr = float(d @ d)
        acc[i] += m[j] * d / rr ** 1.5
        acc[j] -= m[i] * d / rr ** 1.5
    return float(np.max(np.abs(acc + lam * P)))


# -------------------------------------------------------------- data classes
@dataclass(frozen=True)
class CollinearSpectrum:
    """Spectrum of the collinear Jacobian ``D`` (normalized so ``iota_1 = 1``).

    Attributes
    ----------
    iotas : ndarray
        Ascending eigenvalues divided by ``lambda``.
    evecs : ndarray
        Columns are mass-orthonormal eigenvectors (first nonzero entry > 0).
    matrix : ndarray
        The ``N x N`` matrix ``D`` at the solved configuration.
    """

    iotas: NDArray
    evecs: NDArray
    matrix: NDArray


@dataclass(frozen=True)
class CentralConfig:
    """A planar central configuration with its eigenframe.

    Attributes
    ----------
    masses : ndarray
    points : ndarray, shape (N, 2)
    lam : float
        ``U / I``.
    I : float
        Moment of inertia ``<r, r>``.
    eigvals : ndarray, shape (2N,)
        ``lambda_1 .. lambda_2N`` (eigenvalues of the gradient linearization).
    eigvecs : ndarray, shape (2N, 2N)
        Row ``k`` is the frame vector ``E_{k+1}``.
    gs : ndarray
        ``g_k = <E_k, E_k>``.
    kind : str
        ``lagrange``, ``euler3``, ``collinear`` or ``generic``.
    info : dict
        Kind-specific parameters (beta, sigma, kappa, iotas, ...).
    """

    masses: NDArray
    points: NDArray
    lam: float
    I: float
    eigvals: NDArray
    eigvecs: NDArray
    gs: NDArray
    kind: str = "generic"
    info: dict = field(default_factory=dict)

    @property
    def n_bodies(self) -> int:
        return len(self.masses)

    @property
    def r(self) -> NDArray:
        return self.points.ravel()

    @property
    def g3(self) -> float:
        return float(self.gs[2])

    @property
    def metric(self) -> NDArray:
        return _metric(self.masses)

    def inner(self, u: NDArray, v: NDArray) -> float:
        return float(u @ (self.metric * v))

    def residual(self) -> float:
        return cc_residual(self.r, self.masses, self.lam)

    def frame_residual(self) -> float:
        """Max of ``|D E_k - lambda_k E_k|`` over the frame, relative to ``|D|``."""
        D = hessian_gradient_map(self)
        scale = max(np.abs(D).max(), 1.0)
        out = 0.0
        for lam_k, E in zip(self.eigvals, self.eigvecs):
            out = max(out, float(np.abs(D @ E - lam_k * E).max()) / scale)
        return out

    def to_dict(self) -> dict:
        info = {}
        for k, v in self.info.items():
            info[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return {
            "kind": self.kind,
            "masses": self.masses.tolist(),
            "positions": self.points.tolist(),
            "lambda": self.lam,
            "I": self.I,
            "eigvals": self.eigvals.tolist(),
            "g": self.gs.tolist(),
            "eigvecs": self.eigvecs.tolist(),
            "info": info,
        }

    def to_json(self, indent: int | None = None) -> str:
        return jsonio.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_points(cls, points: NDArray, masses, kind: str = "generic",
                    info: dict | None = None, pairs: str | None = None,
                    tol: float = 1e-10) -> "CentralConfig":
        """Build the eigenframe for a given central configuration.

        ``pairs`` selects how the frame beyond ``E_4`` is chosen:
        ``None`` sorts eigenvectors ascending; ``"perp"`` sets
        ``E_{2k} = E_{2k-1}^perp``; ``"collinear"`` does the same with
        ``E_{2k-1}`` along the line.
        """
        ms = masses if isinstance(masses, MassSystem) else MassSystem(tuple(masses), allow_zero=True)
        m = ms.array
        P = np.asarray(points, dtype=float).reshape(-1, 2)
        if P.shape[0] != len(m):
            raise MassError("one position per mass is required")
        r = P.ravel()
        w = _metric(m)
        com = (P * m[:, None]).sum(axis=0) / m.sum()
        if np.abs(com).max() > 1e-9 * max(1.0, np.abs(P).max()):
            P = P - com
            r = P.ravel()
        I = float(r @ (w * r))
        U = potential(r, m)
        lam = U / I
        res = cc_residual(r, m, lam)
        if res > tol * max(1.0, lam * math.sqrt(I)):
            raise ConvergenceError(f"not a central configuration (residual {res:.3e})", res)
        return _build_frame(P, m, lam, I, kind, dict(info or {}), pairs)


def _sign_fix(v: NDArray, tol: float = 1e-12) -> NDArray:
    big = np.abs(v).max()
    for x in v:
        if abs(x) > tol * big:
            return v if x > 0 else -v
    return v


def _mass_orthonormal_complement(B0: NDArray, w: NDArray) -> NDArray:
    """Columns spanning the mass-orthogonal complement of ``B0``'s columns, mass-orthonormal."""
    s = np.sqrt(w)
    Y = s[:, None] * B0
    q, _ = np.linalg.qr(Y, mode="complete")
    C = q[:, B0.shape[1]:]
    return C / s[:, None]


def accel_jacobian(r: NDArray, masses: Sequence[float]) -> NDArray:
    """``M^-1 B``: Jacobian of the accelerations, defined for zero masses too."""
    P = np.asarray(r, dtype=float).reshape(-1, 2)
    m = np.asarray(masses, dtype=float)
    n = len(m)
    A = np.zeros((2 * n, 2 * n))
    for i, j in _pairs(n):
        d = P[j] - P[i]
        rr = float(d @ d)
        if rr == 0.0:
            raise SingularityError(f"bodies {i} and {j} collide")
        K = (np.eye(2) - 3.0 * np.outer(d, d) / rr) / rr ** 1.5
        A[2 * i:2 * i + 2, 2 * j:2 * j + 2] = m[j] * K
        A[2 * j:2 * j + 2, 2 * i:2 * i + 2] = m[i] * K
        A[2 * i:2 * i + 2, 2 * i:2 * i + 2] -= m[j] * K
        A[2 * j:2 * j + 2, 2 * j:2 * j + 2] -= m[i] * K
    return A


def _gradient_map(P: NDArray, m: NDArray, lam: float, I: float) -> NDArray:
    r = P.ravel()
    w = _metric(m)
    n2 = len(r)
    E3 = r
    return (math.sqrt(I) * (lam * np.eye(n2) + accel_jacobian(r, m))
            - 3.0 / math.sqrt(I) * lam * np.outer(E3, w * E3))


def _build_frame(P, m, lam, I, kind, info, pairs) -> CentralConfig:
    n = len(m)
    r = P.ravel()
    w = _metric(m)
    E1 = np.tile([1.0, 0.0], n)
    E2 = perp(E1)
    E3 = r.copy()
    E4 = perp(E3)
    base = [E1, E2, E3, E4]
    sI = math.sqrt(I)
    vals = [sI * lam, sI * lam, 0.0, 0.0]
    if n >= 3:
        D = _gradient_map(P, m, lam, I)
        if np.any(m == 0):
            # zero masses make the metric singular; work with plain eigen
            C = _plain_complement(np.column_stack(base), w)
            K = np.linalg.lstsq(C, D @ C, rcond=None)[0]
            ev, cv = np.linalg.eig(K)
            order = np.argsort(ev.real)
            ev, V = ev.real[order], (C @ cv[:, order]).real
            V = V / np.linalg.norm(V, axis=0)
        else:
            C = _mass_orthonormal_complement(np.column_stack(base), w)
            K = C.T @ (w[:, None] * (D @ C))
            K = 0.5 * (K + K.T)
            ev, cv = np.linalg.eigh(K)
            V = C @ cv
        rest_vals: list = []
        rest_vecs: list = []
        if pairs in ("perp", "collinear"):
            used = np.zeros(len(ev), dtype=bool)
            if pairs == "collinear":
                # along-line eigenvectors have no y components
                cand = [i for i in range(len(ev))
                        if np.abs(V[1::2, i]).max() < 1e-8 * np.abs(V[:, i]).max()]
                cand.sort(key=lambda i: ev[i])
            else:
                cand = list(range(len(ev)))
            for i in cand:
                if used[i]:
                    continue
                e = _sign_fix(V[:, i])
                ep = perp(e)
                nw = float(ep @ (w * ep))
                if nw > 1e-300:
                    lam_p = float(ep @ (w * (D @ ep))) / nw
                else:
                    lam_p = float(ep @ (D @ ep)) / float(ep @ ep)
                rest_vals += [float(ev[i]), lam_p]
                rest_vecs += [e, ep]
                used[i] = True
                # mark the partner slot as consumed
                proj = np.abs(V.T @ (w * ep))
                proj[used] = -1
                used[int(np.argmax(proj))] = True
                if len(rest_vecs) == 2 * n - 4:
                    break
        else:
            for i in range(len(ev)):
                rest_vals.append(float(ev[i]))
                rest_vecs.append(_sign_fix(V[:, i]))
        vals += rest_vals
        base += rest_vecs
    vecs = np.array(base)
    gs = np.array([float(v @ (w * v)) for v in vecs])
    return CentralConfig(masses=np.array(m, dtype=float), points=P.copy(), lam=float(lam),
                         I=float(I), eigvals=np.array(vals), eigvecs=vecs, gs=gs,
                         kind=kind, info=info)


def _plain_complement(B0: NDArray, w: NDArray) -> NDArray:
    Y = w[:, None] * B0
    q, _ = np.linalg.qr(Y, mode="complete")
    return q[:, B0.shape[1]:]


# ------------------------------------------------------------- gradient map
def hessian_gradient_map(c: CentralConfig, m=None) -> NDArray:
    """The ``2N x 2N`` linearization ``I^(1/2)(lam + M^-1 B) - 3 I^(-1/2) lam E3 E3^T M``.

    ``m`` is accepted for signature symmetry and must agree with ``c.masses``.
    """
    if m is not None:
        mm = _as_masses(m).array
        if mm.shape != c.masses.shape or not np.allclose(mm, c.masses):
            raise MassError("mass system does not match the configuration")
    return _gradient_map(c.points, c.masses, c.lam, c.I)


# ------------------------------------------------------------------ Lagrange
def lagrange_e5_closed_form(masses: Sequence[float]) -> NDArray | None:
    """Closed-form frame vector ``E_5`` of the unit-norm equilateral configuration.

    Returns ``None`` where the printed normalization is singular (for
    instance equal masses, where ``alpha = 0``).
    """
    m1, m2, m3 = masses
    beta = m1 * m2 + m2 * m3 + m1 * m3
    alpha = math.sqrt(max(1.0 - 3.0 * beta, 0.0))
    den = 4.0 * beta * m3 * (2.0 * alpha ** 2 + alpha - 3.0 * alpha * m2)
    if den <= 0 or not math.isfinite(den):
        return None
    pre = math.sqrt(3.0 * m1 * m2 / den)
    s3 = math.sqrt(3.0)
    vec = np.array([
        (m1 - m3) / (m1 / m3),
        (3.0 * m2 - 2.0 * alpha - 1.0) / (s3 * m1 / m3),
        (m2 - alpha - m1) / (m2 / m3),
        (alpha + 3.0 * m3 - 1.0) / (s3 * m2 / m3),
        alpha - m2 + m3,
        (alpha + 3.0 * m1 - 1.0) / s3,
    ])
    return pre * vec


def solve_lagrange(m) -> CentralConfig:
    """Unit-norm equilateral configuration.

    Masses are normalized to unit total mass first. The frame uses the
    closed-form ``E_5`` when it is defined and verified, else the numeric
    eigenvector for the smaller of ``lambda_5, lambda_6``; ``E_6 = E_5^perp``.

    Examples
    --------
    >>> c = solve_lagrange((0.98, 0.01, 0.01))
    >>> round(c.lam, 6)
    0.002765
    """
    ms = _as_masses(m)
    if ms.n != 3:
        raise MassError("the equilateral configuration needs three bodies")
    ms = ms.normalized()
    m1, m2, m3 = ms.masses
    beta = m1 * m2 + m2 * m3 + m1 * m3
    sb = math.sqrt(beta)
    s3 = math.sqrt(3.0)
    r = np.array([
        -s3 * m3 / (2 * sb), (2 * m2 + m3) / (2 * sb),
        -s3 * m3 / (2 * sb), -(2 * m1 + m3) / (2 * sb),
        s3 * (m1 + m2) / (2 * sb), -(m1 - m2) / (2 * sb),
    ])
    alpha = math.sqrt(max(1.0 - 3.0 * beta, 0.0))
    info = {"beta": beta, "alpha": alpha}
    c = CentralConfig.from_points(r.reshape(3, 2), ms, kind="lagrange", info=info, pairs="perp")
    e5 = lagrange_e5_closed_form(ms.masses)
    if e5 is not None:
        D = hessian_gradient_map(c)
        lam5 = 1.5 * (1.0 - alpha) * beta ** 1.5
        if np.abs(D @ e5 - lam5 * e5).max() < 1e-10 * max(1.0, np.abs(e5).max()):
            vecs = c.eigvecs.copy()
            vecs[4] = e5
            vecs[5] = perp(e5)
            w = c.metric
            gs = np.array([float(v @ (w * v)) for v in vecs])
            vals = c.eigvals.copy()
            vals[4] = lam5
            vals[5] = 1.5 * (1.0 + alpha) * beta ** 1.5
            info["closed_form_frame"] = True
            c = replace(c, eigvecs=vecs, gs=gs, eigvals=vals, info=info)
    return c


# --------------------------------------------------------------------- Euler
def euler_e5_closed_form(masses: Sequence[float], sigma: float, kappa: float) -> NDArray:
    """Closed-form collinear frame vector for three bodies ordered left to right."""
    m1, m2, m3 = masses
    return np.array([
        math.sqrt(m2 * m3 / m1) * kappa * (0.5 - sigma), 0.0,
        -math.sqrt(m1 * m3 / m2) * kappa, 0.0,
        math.sqrt(m1 * m2 / m3) * kappa * (sigma + 0.5), 0.0,
    ])


def _f_kappa(s: float) -> float:
    return -4.0 * (-16 * s ** 4 + 40 * s ** 2 + 7) ** 2 / ((4 * s ** 2 - 1) ** 3 * (16 * s ** 4 - 8 * s ** 2 + 49))


def _g_kappa(s: float) -> float:
    return -((-16 * s ** 4 + 40 * s ** 2 + 7) ** 2
             / (4 * s * (2 * s - 1) ** 3 * (16 * s ** 4 + 32 * s ** 3 + 40 * s ** 2 + 24 * s + 21)))


def euler_admissible(sigma: float, kappa: float) -> bool:
    """Whether ``(sigma, kappa)`` lies in the admissible window for positive masses."""
    if not (-0.5 < sigma < 0.5) or kappa <= 0:
        return False
    if sigma == 0.0:
        return kappa > 2.0
    s = abs(sigma)
    return _f_kappa(s) < kappa ** 2 < _g_kappa(s)


def solve_euler3(m, ordering: Sequence[int] = (0, 1, 2)) -> CentralConfig:
    """Collinear three-body configuration with unit moment of inertia.

    Parameters
    ----------
    m : MassSystem or sequence
        Three positive masses; normalized to unit total mass.
    ordering : sequence of int
        Body indices from left to right on the line.

    Returns
    -------
    CentralConfig
        ``info`` carries ``sigma``, ``kappa`` and the left-to-right ``ordering``.
    """
    ms = _as_masses(m)
    if ms.n != 3:
        raise MassError("the Euler configuration needs three bodies")
    order = tuple(int(i) for i in ordering)
    if sorted(order) != [0, 1, 2]:
        raise OrderError(f"ordering {ordering} is not a permutation of (0, 1, 2)")
    ms = ms.normalized()
    m1, m2, m3 = (ms.masses[i] for i in order)

    def f(s: float) -> float:
        a, b = s + 0.5, 0.5 - s
        return (m2 / a ** 2 + m3) * (m2 * b + m1) - (m1 + m2 / b ** 2) * (m2 * a + m3)

    lo, hi = -0.5 + 1e-12, 0.5 - 1e-12
    try:
        sigma = optimize.brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (ValueError, RuntimeError) as exc:
        raise ConvergenceError(f"Euler quintic root not bracketed: {exc}") from exc
    # polish with Newton on the same scalar equation
    for _ in range(3):
        h = 1e-7
        d = (f(sigma + h) - f(sigma - h)) / (2 * h)
        if d != 0:
            step = f(sigma) / d
            if abs(step) < 1e-10:
                sigma -= step
    a, b = sigma + 0.5, 0.5 - sigma
    kappa = 1.0 / math.sqrt(m1 * m2 * a ** 2 + m2 * m3 * b ** 2 + m1 * m3)
    xi = np.array([
        -kappa * (m2 * a + m3),
        kappa * (m1 * a - m3 * b),
        kappa * (m2 * b + m1),
    ])
    P = np.zeros((3, 2))
    for slot, body in enumerate(order):
        P[body, 0] = xi[slot]
    info = {"sigma": float(sigma), "kappa": float(kappa), "ordering": list(order)}
    c = CentralConfig.from_points(P, ms, kind="euler3", info=info, pairs="collinear")
    # closed-form E5 in body labels
    e5_line = euler_e5_closed_form((m1, m2, m3), sigma, kappa)
    e5 = np.zeros(6)
    for slot, body in enumerate(order):
        e5[2 * body] = e5_line[2 * slot]
    D = hessian_gradient_map(c)
    lam6 = (-64 * sigma ** 4 + 160 * sigma ** 2 + 28) / (kappa ** 5 * (4 * sigma ** 2 - 1) ** 3)
    lam5 = 3 * c.lam - 2 * lam6
    if np.abs(D @ e5 - lam5 * e5).max() < 1e-9 * max(1.0, np.abs(e5).max()):
        e5 = _sign_fix(e5)
        vecs = c.eigvecs.copy()
        vecs[4], vecs[5] = e5, perp(e5)
        w = c.metric
        gs = np.array([float(v @ (w * v)) for v in vecs])
        vals = c.eigvals.copy()
        vals[4], vals[5] = lam5, lam6
        info["closed_form_frame"] = True
        c = replace(c, eigvecs=vecs, gs=gs, eigvals=vals, info=info)
    info["iotas"] = [1.0, 3.0, float(c.eigvals[4] / (math.sqrt(c.I) * c.lam))]
    return c


# ----------------------------------------------------------------- collinear
def _collinear_F(xi: NDArray, m: NDArray) -> NDArray:
    d = xi[None, :] - xi[:, None]  # d[k, j] = xi_j - xi_k
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(d != 0, d / np.abs(d) ** 3, 0.0)
    return t @ m + xi


def _collinear_D(xi: NDArray, m: NDArray, lam: float = 1.0) -> NDArray:
    d = np.abs(xi[None, :] - xi[:, None])
    np.fill_diagonal(d, np.inf)
    W = 2.0 * m[None, :] / d ** 3
    D = -W
    np.fill_diagonal(D, lam + W.sum(axis=1))
    return D


def _cascade_guess(m: NDArray) -> NDArray:
    gaps = [(m[0] + m[1]) ** (1.0 / 3.0)]
    for k in range(1, len(m) - 1):
        gaps.append((m[k] / 3.0 ** (k - 1)) ** (1.0 / 3.0) if m[k] > 0 else gaps[-1] / 2)
    xi = np.concatenate([[0.0], np.cumsum(gaps)])
    return xi


def solve_collinear(m, max_iter: int = 200, tol: float = 1e-14,
                    max_backtracks: int = 60) -> tuple[CentralConfig, CollinearSpectrum]:
    """Ordered collinear central configuration with ``lambda = 1``.

    Damped Newton with the analytic Jacobian ``D``. Bodies stay in index
    order ``xi_1 < ... < xi_N``.

    Returns
    -------
    (CentralConfig, CollinearSpectrum)

    Examples
    --------
    >>> c, _ = solve_collinear((1.0, 1.0))
    >>> round(c.points[1, 0] - c.points[0, 0], 6)
    1.259921
    """
    if isinstance(m, MassSystem):
        ms = m
    else:
        ms = MassSystem(tuple(m), allow_zero=True)
    w = ms.array
    n = len(w)
    M = w.sum()
    small_tail = n > 2 and np.all(w[1:] <= 1e-2 * w[0])
    if small_tail:
        xi = _cascade_guess(w)
    else:
        xi = np.linspace(0.0, 1.0, n) * M ** (1.0 / 3.0) * max(1.0, 0.5 * (n - 1))
    xi = xi - (w @ xi) / M
    F = _collinear_F(xi, w)
    nrm = np.abs(F).max()
    for _ in range(max_iter):
        if nrm < tol * max(1.0, np.abs(xi).max()):
            break
        D = _collinear_D(xi, w)
        step = -np.linalg.solve(D, F)
        a = 1.0
        for _ in range(max_backtracks):
            trial = xi + a * step
            if np.all(np.diff(trial) > 0):
                Ft = _collinear_F(trial, w)
                nt = np.abs(Ft).max()
                if nt < nrm or nt < tol:
                    break
            a *= 0.5
        else:
            raise OrderError("collinear Newton could not keep the bodies ordered")
        xi, F, nrm = trial, Ft, nt
    else:
        raise ConvergenceError(f"collinear Newton did not converge (residual {nrm:.3e})", nrm)
    if nrm > 1e-11:
        raise ConvergenceError(f"collinear Newton stalled at residual {nrm:.3e}", nrm)
    # recentre: the exact solution has its centre of mass at the origin
    xi = xi - (w @ xi) / M
    D = _collinear_D(xi, w)
    if np.all(w > 0):
        s = np.sqrt(w)
        S = (s[:, None] * D) / s[None, :]
        S = 0.5 * (S + S.T)
        iot, U = np.linalg.eigh(S)
        V = U / s[:, None]
    else:
        iot, V = np.linalg.eig(D)
        o = np.argsort(iot.real)
        iot, V = iot.real[o], V.real[:, o]
        V = V / np.sqrt(np.maximum((V ** 2 * np.maximum(w, 0)[:, None]).sum(axis=0), 1e-300))
    V = np.column_stack([_sign_fix(V[:, k]) for k in range(n)])
    spec = CollinearSpectrum(iotas=iot, evecs=V, matrix=D)
    P = np.column_stack([xi, np.zeros(n)])
    info = {"iotas": iot.tolist(), "convention": "unit_lambda"}
    c = CentralConfig.from_points(P, ms, kind="collinear", info=info, pairs="collinear")
    return c, spec


def asymptotic_iota(n: int, eps: Sequence[float]) -> float:
    """Leading cascade prediction of ``iota_n`` for masses ``(1, eps_1, eps_2, ...)``."""
    if n == 1:
        return 1.0
    if n == 2:
        return 3.0
    c2 = 3.0 ** (-1.0 / 3.0)
    return 3.0 ** (n - 1) * (1.0 - 4.0 / 3.0 * c2 * eps[0] ** (1.0 / 3.0))


def cascade_gap_constant(n: int) -> float:
    """Leading coefficient ``c_{n+1} = 3^(-n/3)`` of the cascade gaps."""
    return 3.0 ** (-n / 3.0)


# ------------------------------------------------------------------ scaling
def config_scale(c: CentralConfig, target: str = "unit_norm") -> CentralConfig:
    """Rescale the configuration to ``|r| = 1`` or to ``lambda = 1``."""
    if target == "unit_norm":
        s = 1.0 / math.sqrt(c.I)
    elif target == "unit_lambda":
        s = c.lam ** (1.0 / 3.0)
    else:
        raise ValueError(f"unknown scaling target {target!r}")
    if s == 1.0:
        return c
    vecs = c.eigvecs.copy()
    vecs[2] *= s
    vecs[3] *= s
    gs = c.gs.copy()
    gs[2] *= s * s
    gs[3] *= s * s
    info = dict(c.info)
    if "kappa" in info:
        info["kappa"] = info["kappa"] * s
    info["convention"] = target
    return CentralConfig(masses=c.masses.copy(), points=c.points * s, lam=c.lam / s ** 3,
                         I=c.I * s * s, eigvals=c.eigvals / (s * s), eigvecs=vecs, gs=gs,
                         kind=c.kind, info=info)


def scale_ratios(c: CentralConfig) -> NDArray:
    """Scale-free ratios ``lambda_k / (sqrt(g3) lambda)``."""
    return c.eigvals / (math.sqrt(c.g3) * c.lam)
