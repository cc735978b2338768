"""Integration of the reduced dynamics and periodic-orbit families.

Canonical fields act on ``z = (q, p)`` with the relative equilibrium at the
origin. The velocity-form field acts on ``(x0, x, xdot0, xdot)`` with
``x0 = 1`` at equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import solve_ivp

from . import jsonio
from .central_config import CentralConfig, potential, potential_gradient
from .errors import (
    ContinuationEnd,
    ConvergenceError,
    FamilyCollapseError,
    StiffnessError,
)
from .hamiltonian import (
    ExactReducedHamiltonian,
    FrameCoefficients,
    HamiltonianExpansion,
    reduced_energy,
    reduced_rhs,
    state_from_canonical,
    theta_rate,
)
from .poly import TruncPoly
from .spectrum import SymplecticChart, symplectic_J

__all__ = [
    "CanonicalField",
    "PolynomialField",
    "ExactField",
    "VelocityField",
    "IntegrationResult",
    "integrate",
    "gl4_step",
    "flow_with_monodromy",
    "PeriodicOrbit",
    "linear_guess",
    "shoot_periodic",
    "continue_family",
    "floquet",
    "reconstruct_theta",
    "orbit_theta_advance",
    "write_orbit_archive",
    "read_orbit_archive",
    "nbody_energy",
    "nbody_angular_momentum",
    "nbody_integrate",
]

RTOL = 1e-12
ATOL = 1e-14


# ------------------------------------------------------------------ fields
class CanonicalField:
    """Hamiltonian vector field ``zdot = J grad H`` on ``2 d`` variables."""

    dim: int

    def gradient(self, z):
        raise NotImplementedError

    def hessian(self, z) -> NDArray:
        raise NotImplementedError

    def energy(self, z) -> float:
        raise NotImplementedError

    def __call__(self, t, z):
        g = self.gradient(z)
        d = self.dim // 2
        return np.concatenate([g[..., d:], -g[..., :d]], axis=-1)

    def jacobian(self, z) -> NDArray:
        return symplectic_J(self.dim // 2) @ self.hessian(z)


class _Compiled:
    """Dense evaluator for a list of polynomials sharing variables."""

    def __init__(self, polys: list[TruncPoly], shape: tuple):
        keys = sorted({k for p in polys for k in p.terms})
        self.shape = shape
        nv = polys[0].nvars if polys else 0
        self.E = np.array(keys, dtype=np.int64).reshape(len(keys), nv)
        self.C = np.zeros((len(polys), len(keys)))
        index = {k: i for i, k in enumerate(keys)}
        for r, p in enumerate(polys):
            for k, c in p.terms.items():
                self.C[r, index[k]] = c.real
        self.maxe = int(self.E.max()) if self.E.size else 0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        if not len(self.E):
            return np.zeros(self.shape)
        P = np.ones((len(z), self.maxe + 1))
        for e in range(1, self.maxe + 1):
            P[:, e] = P[:, e - 1] * z
        mono = np.prod(P[np.arange(len(z))[None, :], self.E], axis=1)
        return (self.C @ mono).reshape(self.shape)


class PolynomialField(CanonicalField):
    """Field of the truncated expansion ``constant + H2 + H3 + H4``."""

    def __init__(self, h: HamiltonianExpansion | TruncPoly, constant: float | None = None):
        if isinstance(h, HamiltonianExpansion):
            H = h.H2 + h.H3 + h.H4
            self.constant = h.constant if constant is None else constant
        else:
            H = h
            self.constant = 0.0 if constant is None else constant
        self.H = H
        self.dim = H.nvars
        grads = H.gradient_polys()
        self._g = _Compiled(grads, (self.dim,))
        self._h = _Compiled([g.partial(j) for g in grads for j in range(self.dim)], (self.dim, self.dim))

    def gradient(self, z):
        return self._g(z)

    def hessian(self, z):
        return self._h(z)

    def energy(self, z):
        return float(self.H(np.asarray(z, dtype=float)).real) + self.constant


class ExactField(CanonicalField):
    """Field of the untruncated reduced Hamiltonian."""

    def __init__(self, f: FrameCoefficients):
        self.H = ExactReducedHamiltonian(f)
        self.f = f
        self.dim = 2 * self.H.dof

    def gradient(self, z):
        return self.H.gradient(z)

    def hessian(self, z):
        return self.H.hessian(z)

    def energy(self, z):
        return float(self.H.value(np.asarray(z, dtype=float)))


class VelocityField:
    """Velocity-form reduced equations with energy and Jacobian helpers."""

    def __init__(self, c: CentralConfig, f: FrameCoefficients, J: float | None = None):
        self.c, self.f, self.J = c, f, J
        self.rhs = reduced_rhs(c, f, J)
        self.dim = 2 * (f.n + 1)

    def __call__(self, t, s):
        return self.rhs(t, s)

    def jacobian(self, s, h: float = 1e-7) -> NDArray:
        s = np.asarray(s, dtype=float)
        cols = [(self.rhs(0.0, s + h * e) - self.rhs(0.0, s - h * e)) / (2 * h) for e in np.eye(len(s))]
        return np.array(cols).T

    def energy(self, s) -> float:
        return reduced_energy(self.c, self.f, s, self.J)

    def equilibrium(self) -> NDArray:
        s = np.zeros(self.dim)
        s[0] = 1.0
        return s


# ------------------------------------------------------------- integration
@dataclass
class IntegrationResult:
    t: NDArray
    z: NDArray
    nfev: int = 0

    @property
    def final(self) -> NDArray:
        return self.z[-1]


_GL_S = math.sqrt(3.0) / 6.0
_GL_A = np.array([[0.25, 0.25 - _GL_S], [0.25 + _GL_S, 0.25]])


def gl4_step(fun, z: NDArray, h: float, tol: float = 1e-15, maxit: int = 60) -> NDArray:
    """One step of the two-stage Gauss-Legendre method (order 4, symplectic).

    The stage equations are solved by fixed-point iteration.
    """
    k = np.vstack([fun(0.0, z), fun(0.0, z)])
    scale = max(float(np.abs(z).max()), 1.0)
    prev = np.inf
    for it in range(maxit):
        Z = z + h * (_GL_A @ k)
        k_new = np.vstack([fun(0.0, Z[0]), fun(0.0, Z[1])])
        diff = h * float(np.abs(k_new - k).max())
        k = k_new
        if not math.isfinite(diff):
            raise StiffnessError("Gauss-Legendre stage iteration diverged; reduce the step")
        if diff <= tol * scale:
            break
        # roundoff floor: the iteration stopped contracting
        if it > 3 and diff >= prev and diff <= 1e3 * tol * scale:
            break
        prev = diff
    else:
        raise StiffnessError("Gauss-Legendre stage iteration did not converge; reduce the step")
    return z + 0.5 * h * (k[0] + k[1])


def integrate(fun, z0, t: float, method: str = "dop853", rtol: float = RTOL, atol: float = ATOL,
              n_steps: int | None = None, t_eval=None) -> IntegrationResult:
    """Propagate ``z0`` over ``[0, t]``.

    Parameters
    ----------
    fun : callable
        ``fun(t, z)``; any field of this module.
    method : {"dop853", "gl4"}
        Adaptive order-8 Runge-Kutta, or fixed-step symplectic Gauss-Legendre.
    n_steps : int
        Step count for ``gl4``; every step is recorded.
    """
    z0 = np.asarray(z0, dtype=float)
    if method == "gl4":
        if not n_steps:
            raise ValueError("gl4 needs n_steps")
        h = t / n_steps
        zs = np.empty((n_steps + 1, len(z0)))
        zs[0] = z0
        z = z0
        for i in range(n_steps):
            z = gl4_step(fun, z, h)
            zs[i + 1] = z
        return IntegrationResult(t=np.linspace(0.0, t, n_steps + 1), z=zs)
    if method != "dop853":
        raise ValueError(f"unknown method {method!r}")
    if t == 0:
        return IntegrationResult(t=np.array([0.0]), z=z0[None, :])
    sol = solve_ivp(fun, (0.0, t), z0, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    if sol.status != 0:
        raise StiffnessError(f"integration failed: {sol.message}")
    return IntegrationResult(t=sol.t, z=sol.y.T, nfev=sol.nfev)


def flow_with_monodromy(fld, z0: NDArray, T: float, rtol: float = RTOL, atol: float = ATOL):
    """``(phi_T(z0), dphi_T/dz0)`` from the variational equations."""
    n = len(z0)

    def aug(t, w):
        z = w[:n]
        Phi = w[n:].reshape(n, n)
        return np.concatenate([fld(t, z), (fld.jacobian(z) @ Phi).ravel()])

    w0 = np.concatenate([z0, np.eye(n).ravel()])
    sol = solve_ivp(aug, (0.0, T), w0, method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise StiffnessError("variational integration failed")
    w = sol.y[:, -1]
    return w[:n], w[n:].reshape(n, n)


# ---------------------------------------------------------- periodic orbits
@dataclass
class PeriodicOrbit:
    """A converged periodic orbit of a reduced field.

    Attributes
    ----------
    family : str
        ``"trivial"``, ``"lyapunov"`` or ``"weinstein"``.
    index : int
        Mode index the family emanates from.
    state0 : ndarray
    period : float
        Reduced time.
    residual : float
        ``max |phi_T(state0) - state0|``.
    amplitude : float
        Mode coordinate of ``state0`` used as continuation parameter.
    energy : float
    floquet : ndarray
        Multipliers sorted by modulus.
    """

    family: str
    index: int
    state0: NDArray
    period: float
    residual: float
    amplitude: float
    energy: float
    floquet: NDArray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    degenerate: bool = False
    delta_theta: float | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "index": self.index,
            "amplitude": self.amplitude,
            "period": self.period,
            "state0": self.state0.tolist(),
            "residual": self.residual,
            "multipliers": [{"re": float(m.real), "im": float(m.imag)} for m in self.floquet],
            "energy": self.energy,
            "delta_theta": self.delta_theta,
            "degenerate": self.degenerate,
        }


def _family_name(chart: SymplecticChart, k: int) -> str:
    return "trivial" if k == 0 else "lyapunov"


def linear_guess(chart: SymplecticChart, k: int, amplitude: float):
    """Initial state, period and anchor row for the family of mode ``k``.

    The anchor is the ``k``-th position coordinate of the diagonal chart.
    """
    if chart.freq.kinds[k] != "elliptic":
        raise ValueError(f"mode {k} is hyperbolic and carries no Lyapunov family")
    d = chart.dof
    anchor = chart.T_inv[k]
    z0 = amplitude * chart.T[:, k]
    T = 2 * math.pi / chart.freq.values[k]
    return z0, T, anchor


def _gauss_newton(fld, z, T, extra_rows, extra_rhs, tol, maxit, rtol, atol):
    best = (math.inf, z, T, None)
    n = len(z)
    # phase: total correction stays orthogonal to the flow at the initial guess
    z_ref = z.copy()
    f_ref = fld(0.0, z_ref)
    f_ref = f_ref / max(np.linalg.norm(f_ref), 1e-300)
    polish = False
    for _ in range(maxit + 1):
        zT, Phi = flow_with_monodromy(fld, z, T, rtol, atol)
        r = zT - z
        res = float(np.abs(r).max())
        if res < best[0]:
            best = (res, z.copy(), T, Phi)
        if polish:
            # the double multiplier at 1 splits like the square root of the residual
            return best[1], best[2], best[0], best[3]
        if res < tol:
            polish = True
        fT = fld(0.0, zT)
        A = np.zeros((n + 1 + len(extra_rows), n + 1))
        b = np.zeros(n + 1 + len(extra_rows))
        A[:n, :n] = Phi - np.eye(n)
        A[:n, n] = fT
        b[:n] = -r
        A[n, :n] = f_ref
        b[n] = float(np.dot(f_ref, z_ref - z))
        for i, (row, rhs) in enumerate(zip(extra_rows, extra_rhs)):
            A[n + 1 + i, :n] = row[:n]
            A[n + 1 + i, n] = row[n] if len(row) > n else 0.0
            b[n + 1 + i] = rhs(z, T)
        delta = np.linalg.lstsq(A, b, rcond=None)[0]
        z = z + delta[:n]
        T = T + delta[n]
        if not np.all(np.isfinite(z)) or T <= 0:
            break
    if best[0] < tol:
        return best[1], best[2], best[0], best[3]
    raise ConvergenceError(f"shooting stalled at residual {best[0]:.3e}", best_residual=best[0])


def shoot_periodic(fld, guess_state, guess_period: float, anchor: NDArray, amplitude: float,
                   family: str = "lyapunov", index: int = 0, tol: float = 1e-10, maxit: int = 12,
                   rtol: float = RTOL, atol: float = ATOL, expected_period: float | None = None,
                   with_floquet: bool = True) -> PeriodicOrbit:
    """Newton correction of a periodic orbit at fixed anchor value.

    Solves ``phi_T(z) = z`` together with the phase condition
    ``f(z) . dz = 0`` and ``anchor . z = amplitude`` in the least-squares
    sense (Gauss-Newton).

    Raises
    ------
    ConvergenceError
        Newton stalls; carries the best residual.
    FamilyCollapseError
        The solution lost its amplitude or jumped to another family.
    """
    z = np.asarray(guess_state, dtype=float).copy()
    if amplitude == 0:
        return PeriodicOrbit(family=family, index=index, state0=z * 0, period=float(guess_period),
                             residual=0.0, amplitude=0.0, energy=fld.energy(z * 0), degenerate=True)
    z, T, res, Phi = _gauss_newton(
        fld, z, float(guess_period), [np.asarray(anchor, dtype=float)],
        [lambda zz, TT: amplitude - float(np.dot(anchor, zz))], tol, maxit, rtol, atol)
    if abs(float(np.dot(anchor, z))) < 0.5 * abs(amplitude):
        raise FamilyCollapseError("orbit lost its amplitude during correction")
    if expected_period is not None and abs(T / expected_period - 1) > 0.25:
        raise FamilyCollapseError(f"period {T:.6g} left the family (expected {expected_period:.6g})")
    mult = _sorted_eig(Phi) if with_floquet else np.zeros(0, dtype=complex)
    return PeriodicOrbit(family=family, index=index, state0=z, period=float(T), residual=res,
                         amplitude=float(np.dot(anchor, z)), energy=fld.energy(z), floquet=mult)


def _sorted_eig(Phi: NDArray) -> NDArray:
    ev = np.linalg.eigvals(Phi)
    return ev[np.lexsort((ev.imag, ev.real, np.abs(ev)))]


def continue_family(fld, orbit: PeriodicOrbit, steps: int, d_amplitude: float, anchor: NDArray,
                    mode: str = "arclength", tol: float = 1e-10, min_step: float | None = None,
                    rtol: float = RTOL, atol: float = ATOL) -> list[PeriodicOrbit]:
    """Continue a branch from a converged seed.

    Parameters
    ----------
    mode : {"arclength", "amplitude"}
        Pseudo-arclength with a secant tangent in ``(z, T)``, or natural
        continuation in the anchor value.
    d_amplitude : float
        Step in the anchor coordinate (also sets the first arclength step).

    Raises
    ------
    ContinuationEnd
        The step fell below ``min_step``; carries the orbits computed so far.
    """
    anchor = np.asarray(anchor, dtype=float)
    out = [orbit]
    min_step = abs(d_amplitude) / 64 if min_step is None else min_step
    step = d_amplitude
    prev = None
    while len(out) < steps + 1:
        cur = out[-1]
        X = np.concatenate([cur.state0, [cur.period]])
        try:
            if mode == "amplitude" or prev is None:
                target = cur.amplitude + step
                guess = cur.state0 * (target / cur.amplitude) if cur.amplitude else cur.state0
                if prev is not None:
                    Xp = np.concatenate([prev.state0, [prev.period]])
                    sec = (X - Xp) / (cur.amplitude - prev.amplitude)
                    Xg = X + sec * step
                    guess, Tg = Xg[:-1], Xg[-1]
                else:
                    Tg = cur.period
                new = shoot_periodic(fld, guess, Tg, anchor, target, cur.family, cur.index, tol,
                                     rtol=rtol, atol=atol)
            else:
                Xp = np.concatenate([prev.state0, [prev.period]])
                tvec = X - Xp
                ds = np.linalg.norm(tvec) * step / (cur.amplitude - prev.amplitude)
                tvec = tvec / np.linalg.norm(tvec)
                Xg = X + abs(ds) * tvec
                row = tvec.copy()
                z, T, res, Phi = _gauss_newton(
                    fld, Xg[:-1].copy(), float(Xg[-1]), [row],
                    [lambda zz, TT: float(np.dot(row, Xg - np.concatenate([zz, [TT]])))],
                    tol, 12, rtol, atol)
                new = PeriodicOrbit(family=cur.family, index=cur.index, state0=z, period=float(T),
                                    residual=res, amplitude=float(np.dot(anchor, z)),
                                    energy=fld.energy(z), floquet=_sorted_eig(Phi))
        except (ConvergenceError, FamilyCollapseError, StiffnessError):
            step = step / 2
            if abs(step) < min_step:
                raise ContinuationEnd(f"step fell below {min_step:.3e}", orbits=out)
            continue
        prev = cur
        out.append(new)
    return out


def floquet(orbit: PeriodicOrbit, fld, rtol: float = RTOL, atol: float = ATOL) -> dict:
    """Monodromy spectrum with symplectic consistency diagnostics."""
    _, Phi = flow_with_monodromy(fld, orbit.state0, orbit.period, rtol, atol)
    if not np.all(np.isfinite(Phi)):
        raise StiffnessError("monodromy blew up")
    mult = _sorted_eig(Phi)
    det = complex(np.prod(mult))
    # each multiplier should have 1/conj(mu) in the spectrum
    pair = max(float(np.min(np.abs(m * np.conj(mult) - 1))) for m in mult)
    ones = np.sort(np.abs(mult - 1))[:2]
    return {"multipliers": mult, "det": det, "pairing_defect": pair,
            "trivial_pair_defect": float(ones.max()), "monodromy": Phi}


def reconstruct_theta(c: CentralConfig, f: FrameCoefficients, ts: NDArray, states: NDArray,
                      J: float | None = None, theta0: float = 0.0) -> NDArray:
    """Cumulative trapezoidal quadrature of ``theta_dot`` along a velocity-form trajectory."""
    rates = np.array([theta_rate(c, f, s, J) for s in states])
    dt = np.diff(ts)
    return theta0 + np.concatenate([[0.0], np.cumsum(0.5 * dt * (rates[1:] + rates[:-1]))])


def orbit_theta_advance(c: CentralConfig, f: FrameCoefficients, orbit: PeriodicOrbit, fld,
                        rtol: float = RTOL, atol: float = ATOL) -> float:
    """Rotation angle accumulated over one period of a canonical-chart orbit.

    ``theta_dot`` is integrated as an extra component next to the flow, with
    the velocity-form state recovered from the canonical one at every stage.
    """
    c1, _ = state_from_canonical(c, f, orbit.state0)
    n = len(orbit.state0)

    def aug(t, w):
        _, s = state_from_canonical(c1, f, w[:n])
        return np.concatenate([fld(t, w[:n]), [theta_rate(c1, f, s)]])

    sol = solve_ivp(aug, (0.0, orbit.period), np.concatenate([orbit.state0, [0.0]]),
                    method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0:
        raise StiffnessError("theta quadrature failed")
    return float(sol.y[-1, -1])


def write_orbit_archive(path, orbits: list[PeriodicOrbit]) -> None:
    """JSON lines, one orbit per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for o in orbits:
            fh.write(jsonio.dumps(o.to_dict()) + "\n")


def read_orbit_archive(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [jsonio.loads(line) for line in fh if line.strip()]


# ------------------------------------------------------------ full N-body
def nbody_energy(R: NDArray, V: NDArray, masses) -> float:
    w = np.repeat(np.asarray(masses, dtype=float), 2)
    return float(0.5 * np.dot(w * V, V) - potential(R, masses))


def nbody_angular_momentum(R: NDArray, V: NDArray, masses) -> float:
    P = R.reshape(-1, 2)
    W = V.reshape(-1, 2)
    m = np.asarray(masses, dtype=float)
    return float(np.sum(m * (P[:, 0] * W[:, 1] - P[:, 1] * W[:, 0])))


_Y4 = (1.0 / (2 - 2 ** (1 / 3)), -(2 ** (1 / 3)) / (2 - 2 ** (1 / 3)))


def nbody_integrate(R0, V0, masses, t: float, n_steps: int, method: str = "yoshida4",
                    record_every: int = 1):
    """Planar Newtonian N-body propagation.

    ``yoshida4`` is the fourth-order composition of leapfrog steps; it
    preserves linear and angular momentum to roundoff. ``dop853`` is the
    adaptive reference.

    Returns
    -------
    ts, Rs, Vs : ndarray
    """
    m = np.asarray(masses, dtype=float)
    w = np.repeat(m, 2)
    R = np.asarray(R0, dtype=float).copy()
    V = np.asarray(V0, dtype=float).copy()

    def acc(X):
        g = potential_gradient(X, m)
        out = np.zeros_like(g)
        nz = w > 0
        out[nz] = g[nz] / w[nz]
        return out

    if method == "dop853":
        n = len(R)

        def rhs(_, s):
            return np.concatenate([s[n:], acc(s[:n])])

        te = np.linspace(0, t, n_steps // record_every + 1)
        sol = solve_ivp(rhs, (0, t), np.concatenate([R, V]), method="DOP853", rtol=RTOL, atol=ATOL, t_eval=te)
        return sol.t, sol.y[:n].T, sol.y[n:].T
    if method != "yoshida4":
        raise ValueError(f"unknown method {method!r}")
    h = t / n_steps
    w1, w0 = _Y4
    cs = [w1 / 2, (w0 + w1) / 2, (w0 + w1) / 2, w1 / 2]
    ds = [w1, w0, w1]
    ts, Rs, Vs = [0.0], [R.copy()], [V.copy()]
    for i in range(n_steps):
        for j in range(3):
            R += cs[j] * h * V
            V += ds[j] * h * acc(R)
        R += cs[3] * h * V
        if (i + 1) % record_every == 0:
            ts.append((i + 1) * h)
            Rs.append(R.copy())
            Vs.append(V.copy())
    return np.array(ts), np.array(Rs), np.array(Vs)
