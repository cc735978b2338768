"""Linear analysis of the quadratic Hamiltonian.

Variable conventions
--------------------
Old canonical variables ``z = (q, p)``; the symplectic matrix is
``J = [[0, I], [-I, 0]]`` so that ``zdot = J grad H``.

The real chart ``T`` maps new variables ``(qq_0..qq_{d-1}, pp_0..pp_{d-1})``
(``qq`` positions, ``pp`` momenta) to ``z = T Z``. In the new variables

* elliptic mode ``j``: ``H2 = s_j w_j (pp_j^2 + qq_j^2) / 2`` with Krein sign ``s_j``,
* hyperbolic mode ``j``: ``H2 = w_j pp_j qq_j``.

The complex chart uses ``W = (zeta_0..zeta_{d-1}, eta_0..eta_{d-1})`` with
``pp = (zeta + i eta)/sqrt2``, ``qq = (eta + i zeta)/sqrt2`` for elliptic modes
and ``pp = zeta``, ``qq = eta`` for hyperbolic ones, so that
``H2 = sum c_j zeta_j eta_j`` with ``c_j = i s_j w_j`` or ``c_j = w_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import jsonio
from .errors import ClassificationError, ResonantLinearError
from .hamiltonian import HamiltonianExpansion
from .poly import TruncPoly

__all__ = [
    "FrequencyData",
    "SymplecticChart",
    "symplectic_J",
    "frequencies",
    "diagonalize",
    "complexify",
    "lagrange_frequencies",
    "euler_frequencies",
    "collinear_frequencies",
    "euler_explicit_chart",
    "quadratic_spectrum",
]


def symplectic_J(d: int) -> NDArray:
    J = np.zeros((2 * d, 2 * d))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    return J


@dataclass(frozen=True)
class FrequencyData:
    """Classified linear spectrum.

    Attributes
    ----------
    omega0 : float
        Frequency of the radial (trivial family) mode.
    elliptic : list of float
        Positive elliptic frequencies other than ``omega0``, in mode order.
    hyperbolic : list of float
        Positive real exponents, in mode order.
    kinds : list of str
        ``"elliptic"`` or ``"hyperbolic"`` for every mode, mode 0 first.
    values : list of float
        Unsigned frequency of every mode.
    signs : list of int
        Krein signs (``+1`` for hyperbolic modes).
    gamma : float or None
        ``sqrt(1 - 27 beta)`` for the equilateral configuration.
    """

    omega0: float
    elliptic: list
    hyperbolic: list
    kinds: list
    values: list
    signs: list
    gamma: float | None = None

    @property
    def signed(self) -> list:
        return [s * v if k == "elliptic" else v for s, v, k in zip(self.signs, self.values, self.kinds)]

    @property
    def dof(self) -> int:
        return len(self.values)

    @property
    def center_indices(self) -> list:
        return [i for i, k in enumerate(self.kinds) if k == "elliptic"]

    def divisor_coeffs(self) -> NDArray:
        """``c_j`` with ``H2 = sum c_j zeta_j eta_j``."""
        return np.array([1j * s * v if k == "elliptic" else complex(v)
                         for s, v, k in zip(self.signs, self.values, self.kinds)])

    def to_dict(self) -> dict:
        return {
            "omega0": self.omega0,
            "kinds": list(self.kinds),
            "values": list(self.values),
            "signs": list(self.signs),
            "signed": self.signed,
            "gamma": self.gamma,
        }


@dataclass(frozen=True)
class SymplecticChart:
    """Linear symplectic diagonalization of ``H2`` plus the complexification.

    Attributes
    ----------
    T : ndarray
        Real chart, ``z = T Z``.
    Tc : ndarray or None
        Complex chart, ``Z = Tc W``; ``None`` before :func:`complexify`.
    freq : FrequencyData
    """

    T: NDArray
    freq: FrequencyData
    Tc: NDArray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dof(self) -> int:
        return self.T.shape[0] // 2

    @property
    def T_inv(self) -> NDArray:
        J = symplectic_J(self.dof)
        return -J @ self.T.T @ J

    @property
    def full(self) -> NDArray:
        """``z = full @ W`` (complex)."""
        if self.Tc is None:
            raise ValueError("chart has not been complexified")
        return self.T @ self.Tc

    @property
    def full_inv(self) -> NDArray:
        return np.linalg.inv(self.Tc) @ self.T_inv

    def symplecticity_residual(self) -> float:
        J = symplectic_J(self.dof)
        return float(np.abs(self.T.T @ J @ self.T - J).max())

    def to_dict(self) -> dict:
        out = {"ordering_old": "(q, p)", "ordering_new": "(qq, pp)", "T": self.T.tolist(),
               "freq": self.freq.to_dict()}
        if self.Tc is not None:
            out["Tc_re"] = self.Tc.real.tolist()
            out["Tc_im"] = self.Tc.imag.tolist()
            out["ordering_complex"] = "(zeta, eta)"
        return out

    def to_json(self, indent: int | None = None) -> str:
        return jsonio.dumps(self.to_dict(), indent=indent)


# ------------------------------------------------------------------ blocks
def _blocks(S: NDArray, d: int, tol: float = 0.0) -> list[list[int]]:
    """Connected components of the mode coupling graph of ``S``."""
    big = np.abs(S).max()
    coupled = np.zeros((d, d), dtype=bool)
    for a in range(2 * d):
        for b in range(2 * d):
            if abs(S[a, b]) > tol * big:
                coupled[a % d, b % d] = True
    seen = [False] * d
    comps = []
    for i in range(d):
        if seen[i]:
            continue
        stack, comp = [i], []
        seen[i] = True
        while stack:
            k = stack.pop()
            comp.append(k)
            for j in range(d):
                if coupled[k, j] and not seen[j]:
                    seen[j] = True
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def _block_modes(S: NDArray, idx: list[int], d: int, rtol: float):
    """Symplectic basis vectors (in full coordinates) for one block."""
    k = len(idx)
    sel = idx + [d + i for i in idx]
    Sb = S[np.ix_(sel, sel)]
    Jb = symplectic_J(k)
    A = Jb @ Sb
    ev, V = np.linalg.eig(A)
    scale = max(np.abs(ev).max(), 1e-300)
    modes = []
    used = np.zeros(len(ev), dtype=bool)
    for i in range(len(ev)):
        if used[i]:
            continue
        lam = ev[i]
        re, im = abs(lam.real), abs(lam.imag)
        if re > rtol * scale and im > rtol * scale:
            raise ClassificationError(f"eigenvalue {lam} is off both axes")
        if im >= re:
            # pair +i w / -i w
            j = int(np.argmin(np.abs(ev - np.conj(lam)) + used * 1e300 + (np.arange(len(ev)) == i) * 1e300))
            used[i] = used[j] = True
            w = V[:, i] if lam.imag > 0 else V[:, j]
            a, b = w.real, w.imag
            c = float(a @ Jb @ b)
            if abs(c) < 1e-14 * (np.linalg.norm(a) * np.linalg.norm(b) + 1e-300):
                raise ResonantLinearError("degenerate elliptic eigenvector (zero Krein form)")
            s = 1 if c > 0 else -1
            e = a / math.sqrt(abs(c))
            f = s * b / math.sqrt(abs(c))
            modes.append(("elliptic", float(abs(lam.imag)), s, e, f))
        else:
            j = int(np.argmin(np.abs(ev + lam) + used * 1e300 + (np.arange(len(ev)) == i) * 1e300))
            used[i] = used[j] = True
            up, dn = (i, j) if lam.real > 0 else (j, i)
            e = V[:, up].real
            f = V[:, dn].real
            c = float(e @ Jb @ f)
            f = f / c
            nrm = math.sqrt(np.linalg.norm(e) / max(np.linalg.norm(f), 1e-300))
            e, f = e / nrm, f * nrm
            modes.append(("hyperbolic", float(abs(lam.real)), 1, e, f))
    modes.sort(key=lambda m: (0 if m[0] == "elliptic" else 1, m[1]))
    vals = [m[1] for m in modes]
    for a_ in range(len(modes)):
        for b_ in range(a_ + 1, len(modes)):
            if modes[a_][0] == modes[b_][0] and abs(vals[a_] - vals[b_]) < 1e-10 * scale:
                raise ResonantLinearError(f"repeated frequency {vals[a_]:.12g}")
    out = []
    for kind, val, s, e, f in modes:
        E = np.zeros(2 * d)
        F = np.zeros(2 * d)
        E[sel] = e
        F[sel] = f
        out.append((kind, val, s, E, F))
    return out


def quadratic_spectrum(S: NDArray, rtol: float = 1e-10):
    """Block-wise symplectic eigen-analysis of ``z^T S z / 2``.

    Returns a list of ``(kind, value, sign, e, f)`` in mode order.
    """
    d = S.shape[0] // 2
    modes = []
    for comp in _blocks(S, d):
        modes += _block_modes(S, comp, d, rtol)
    return modes


def _freq_from_modes(modes, gamma=None) -> FrequencyData:
    kinds = [m[0] for m in modes]
    vals = [m[1] for m in modes]
    signs = [m[2] for m in modes]
    return FrequencyData(
        omega0=vals[0],
        elliptic=[v for k, v in zip(kinds[1:], vals[1:]) if k == "elliptic"],
        hyperbolic=[v for k, v in zip(kinds[1:], vals[1:]) if k == "hyperbolic"],
        kinds=kinds, values=vals, signs=signs, gamma=gamma,
    )


def frequencies(h: HamiltonianExpansion, rtol: float = 1e-10) -> FrequencyData:
    """Classified spectrum of the linear field of ``H2``.

    Raises
    ------
    ClassificationError
        If an eigenvalue is neither real nor imaginary.
    """
    modes = quadratic_spectrum(h.quadratic_matrix(), rtol)
    gamma = None
    if h.meta.get("kind") == "lagrange":
        beta = h.frame.lambda_star ** (2.0 / 3.0)
        gamma = math.sqrt(max(1 - 27 * beta, 0.0)) if 27 * beta <= 1 + 1e-12 else None
    return _freq_from_modes(modes, gamma)


def diagonalize(h, rtol: float = 1e-10, use_closed_form: bool = True) -> SymplecticChart:
    """Real symplectic chart bringing ``H2`` to diagonal form.

    Parameters
    ----------
    h : HamiltonianExpansion or ndarray
        Expansion, or directly the symmetric matrix of ``H2``.
    use_closed_form : bool
        For three-body collinear expansions use the explicit eigenvector
        formulas (checked, with fallback to the generic construction).

    Raises
    ------
    ResonantLinearError
        Repeated frequency inside one coupled block.
    """
    if isinstance(h, HamiltonianExpansion):
        S = h.quadratic_matrix()
    else:
        S = np.asarray(h, dtype=float)
    modes = quadratic_spectrum(S, rtol)
    d = S.shape[0] // 2
    T = np.zeros((2 * d, 2 * d))
    for j, (_, _, _, e, f) in enumerate(modes):
        T[:, j] = e
        T[:, d + j] = f
    gamma = None
    meta = {"method": "generic"}
    if isinstance(h, HamiltonianExpansion):
        if h.meta.get("kind") == "lagrange":
            beta = h.frame.lambda_star ** (2.0 / 3.0)
            gamma = math.sqrt(max(1 - 27 * beta, 0.0)) if 27 * beta <= 1 + 1e-12 else None
        if use_closed_form and h.meta.get("kind") == "euler3":
            lam = h.frame.lambda_star
            lam6 = float(h.frame.lambda_star_k[1])
            try:
                Tp = euler_explicit_chart(lam, lam6)
            except (ValueError, ZeroDivisionError, FloatingPointError):
                Tp = None
            if Tp is not None:
                J = symplectic_J(d)
                D = Tp.T @ S @ Tp
                target = _target_matrix(modes)
                if (np.abs(Tp.T @ J @ Tp - J).max() < 1e-10
                        and np.abs(D - target).max() < 1e-10 * max(1.0, np.abs(S).max())):
                    T = Tp
                    meta["method"] = "closed_form"
    freq = _freq_from_modes(modes, gamma)
    chart = SymplecticChart(T=T, freq=freq, meta=meta)
    if chart.symplecticity_residual() > 1e-10:
        raise ResonantLinearError("symplectic chart construction failed")
    return chart


def _target_matrix(modes) -> NDArray:
    d = len(modes)
    D = np.zeros((2 * d, 2 * d))
    for j, (kind, w, s, _, _) in enumerate(modes):
        if kind == "elliptic":
            D[j, j] = D[d + j, d + j] = s * w
        else:
            D[j, d + j] = D[d + j, j] = w
    return D


def complexify(chart: SymplecticChart) -> SymplecticChart:
    """Attach the complex chart ``Z = Tc W``."""
    d = chart.dof
    Tc = np.zeros((2 * d, 2 * d), dtype=complex)
    r2 = 1 / math.sqrt(2)
    for j, kind in enumerate(chart.freq.kinds):
        if kind == "elliptic":
            # qq = (eta + i zeta)/sqrt2, pp = (zeta + i eta)/sqrt2
            Tc[j, d + j] = r2
            Tc[j, j] = 1j * r2
            Tc[d + j, j] = r2
            Tc[d + j, d + j] = 1j * r2
        else:
            Tc[j, d + j] = 1.0
            Tc[d + j, j] = 1.0
    return SymplecticChart(T=chart.T, freq=chart.freq, Tc=Tc, meta=dict(chart.meta))


def transform_poly(p: TruncPoly, M: NDArray) -> TruncPoly:
    """``p(M W)`` for a linear change of variables."""
    return p.linear_compose(M)


# ---------------------------------------------------------- closed forms
def lagrange_frequencies(beta: float) -> tuple[float, float, float]:
    """``(omega0, omega1, omega2)`` of the equilateral point for ``beta <= 1/27``."""
    if not 0 < beta <= 1 / 27:
        raise ValueError("closed-form frequencies need 0 < beta <= 1/27")
    w0 = beta ** 0.75
    g = math.sqrt(max(1 - 27 * beta, 0.0))
    return w0, math.sqrt((1 - g) / 2) * w0, math.sqrt((1 + g) / 2) * w0


def euler_frequencies(lam: float, lam6: float) -> tuple[float, float, float]:
    """``(omega0, omega1, omega2)`` of the three-body collinear point."""
    om2 = lam
    root = math.sqrt(9 * lam6 ** 2 - 10 * lam6 * om2 + om2 ** 2)
    return (math.sqrt(lam), math.sqrt(root + lam6 + om2) / math.sqrt(2),
            math.sqrt(root - lam6 - om2) / math.sqrt(2))


def collinear_frequencies(iota: float, omega: float) -> tuple[float, float]:
    """Elliptic and hyperbolic frequency of the collinear block with ratio ``iota``."""
    root = math.sqrt(9 * iota ** 2 - 34 * iota + 25)
    return (omega / 2 * math.sqrt(root - iota + 5), omega / 2 * math.sqrt(root + iota - 5))


def euler_explicit_chart(lam: float, lam6: float) -> NDArray:
    """Explicit real chart for the three-body collinear ``H2``.

    Built from the closed-form eigenvectors with the normalizers ``r1, r2``.
    Returned in the ``(q, p) <- (qq, pp)`` convention of this module.
    """
    w0, w1, w2 = euler_frequencies(lam, lam6)
    d1 = -2 * lam6 + w1 ** 2 + 3 * lam
    d2 = 2 * lam6 + w2 ** 2 - 3 * lam
    r1 = w1 * (-lam6 + 2 * w1 ** 2 - lam) / d1
    r2 = -2 * w2 * (lam6 + 2 * w2 ** 2 + lam) / d2
    if r1 <= 0 or r2 <= 0:
        raise ValueError("normalizers must be positive")
    s1, s2 = math.sqrt(r1), math.sqrt(r2)
    # new order (qq0, qq1, qq2, pp0, pp1, pp2); old order (q0, q1, q2, p0, p1, p2)
    T = np.zeros((6, 6))
    T[3, 3] = math.sqrt(w0)          # p0 = sqrt(w0) pp0
    T[0, 0] = 1 / math.sqrt(w0)      # q0 = qq0 / sqrt(w0)
    # p1
    T[4, 1] = w0 * (2 * lam6 + w1 ** 2 - 3 * lam) / (s1 * d1)
    T[4, 5] = w0 * (-2 * lam6 + w2 ** 2 + 3 * lam) / (s2 * d2)
    T[4, 2] = w0 * (-2 * lam6 + w2 ** 2 + 3 * lam) / (s2 * d2)
    # p2
    T[5, 4] = w1 * (-2 * lam6 + w1 ** 2 + lam) / (s1 * d1)
    T[5, 5] = w2 * (-2 * lam / d2 - 1) / s2
    T[5, 2] = (2 * w2 * lam / d2 + w2) / s2
    # q1
    T[1, 4] = -2 * w1 * w0 / (s1 * d1)
    T[1, 5] = -2 * w2 * w0 / (s2 * d2)
    T[1, 2] = 2 * w2 * w0 / (s2 * d2)
    # q2
    T[2, 1] = 1 / s1
    T[2, 5] = 1 / s2
    T[2, 2] = 1 / s2
    return T
