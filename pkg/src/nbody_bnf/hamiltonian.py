"""Reduced moving-frame Hamiltonian near a relative equilibrium.

Canonical variables are ordered ``(x0, x_5..x_2N, y0, y_5..y_2N)`` with the
radial variable shifted so the equilibrium sits at the origin. The frame is
always taken at unit norm (``g3 = 1``); the time multiplier that maps reduced
time back to the original scale is stored in the metadata.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import jsonio
from .central_config import CentralConfig, config_scale, perp
from .errors import ChartError, SingularityError
from .poly import TruncPoly, binomial_series, multinomial

__all__ = [
    "FrameCoefficients",
    "HamiltonianExpansion",
    "potential_expansion",
    "build_hamiltonian",
    "sphere_potential_series",
    "exact_hamiltonian_series",
    "ExactReducedHamiltonian",
    "reduced_rhs",
    "canonical_momenta",
    "velocities_from_momenta",
    "reduced_energy",
    "angular_momentum_reduced",
    "full_state",
    "theta_rate",
    "state_from_canonical",
    "canonical_from_state",
    "hamilton_consistency",
]


@dataclass(frozen=True)
class FrameCoefficients:
    """Potential expansion data at the unit-norm relative equilibrium.

    Attributes
    ----------
    lambda_star : float
        ``U`` at the unit-norm configuration.
    lambda_star_k : ndarray, shape (n,)
        Frame eigenvalues for ``k = 5..2N``.
    a3, a4 : ndarray
        Fully symmetric third and fourth flat directional derivatives of ``U``
        along the unit frame vectors.
    Q : ndarray, shape (n, n)
        ``Q[j, k] = <E_j, E_k^perp>`` (antisymmetric, orthogonal).
    ehat : ndarray, shape (n + 1, 2N)
        Unit frame vectors; row 0 is the configuration direction.
    masses : ndarray
    g3 : float
        Squared norm of the configuration before normalization.
    """

    lambda_star: float
    lambda_star_k: NDArray
    a3: NDArray
    a4: NDArray
    Q: NDArray
    ehat: NDArray
    masses: NDArray
    g3: float = 1.0

    @property
    def n(self) -> int:
        return len(self.lambda_star_k)

    @property
    def omega(self) -> float:
        return math.sqrt(self.lambda_star)

    def U(self, x: NDArray):
        """``U(x3 E3 + sum x_k E_k)`` on the unit sphere; complex-step safe."""
        return _sphere_U(self, np.asarray(x))

    def grad_U(self, x: NDArray) -> NDArray:
        return _sphere_grad_U(self, np.asarray(x))


def _pair_data(ehat: NDArray, masses: NDArray):
    """Per pair: mass product and the pair difference of every frame vector."""
    n_b = len(masses)
    E = ehat.reshape(ehat.shape[0], n_b, 2)
    out = []
    for i in range(n_b):
        for j in range(i + 1, n_b):
            mm = masses[i] * masses[j]
            if mm == 0:
                continue
            out.append((mm, E[:, j, :] - E[:, i, :]))
    return out


def _frame_vectors(c: CentralConfig):
    cu = config_scale(c, "unit_norm")
    vecs = [cu.eigvecs[2] / math.sqrt(cu.gs[2])]
    vecs += [cu.eigvecs[k] / math.sqrt(cu.gs[k]) for k in range(4, len(cu.gs))]
    return cu, np.array(vecs)


def _directional_series(ehat: NDArray, masses: NDArray, degree: int) -> TruncPoly:
    """``U(E3 + sum t_i E_i)`` as a truncated series in ``t`` (flat directions)."""
    n = ehat.shape[0] - 1
    total = TruncPoly.zero(n, degree, prune=0.0)
    for mm, D in _pair_data(ehat, masses):
        d0 = D[0]
        r2 = float(d0 @ d0)
        terms = {}
        for k in range(n):
            e = [0] * n
            e[k] = 1
            terms[tuple(e)] = 2.0 * float(d0 @ D[k + 1]) / r2
        for k in range(n):
            for l in range(k, n):
                e = [0] * n
                e[k] += 1
                e[l] += 1
                v = float(D[k + 1] @ D[l + 1]) / r2
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + (v if k == l else 2 * v)
        u = TruncPoly(n, degree, terms, prune=0.0)
        total = total + binomial_series(u, -0.5).scale(mm / math.sqrt(r2))
    return total


def sphere_potential_series(f: FrameCoefficients, degree: int = 4) -> TruncPoly:
    """``U(x)`` on the unit sphere, ``x3 = sqrt(1 - |x|^2)``, expanded directly."""
    n = f.n
    sq = TruncPoly(n, degree, {tuple(2 if i == k else 0 for i in range(n)): 1.0 for k in range(n)},
                   prune=0.0)
    x3 = binomial_series(-sq, 0.5)
    total = TruncPoly.zero(n, degree, prune=0.0)
    for mm, D in _pair_data(f.ehat, f.masses):
        d0 = D[0]
        r2 = float(d0 @ d0)
        lin = TruncPoly.linear([float(d0 @ D[k + 1]) / r2 for k in range(n)], degree, prune=0.0)
        quad_terms = {}
        for k in range(n):
            for l in range(k, n):
                e = [0] * n
                e[k] += 1
                e[l] += 1
                v = float(D[k + 1] @ D[l + 1]) / r2
                quad_terms[tuple(e)] = v if k == l else 2 * v
        quad = TruncPoly(n, degree, quad_terms, prune=0.0)
        u = -sq + (x3 * lin).scale(2.0) + quad
        total = total + binomial_series(u, -0.5).scale(mm / math.sqrt(r2))
    return total


def _tensor_from_series(p: TruncPoly, n: int, d: int) -> NDArray:
    T = np.zeros((n,) * d)
    for exps, c in p.grade(d).terms.items():
        val = c.real * multinomial(exps)
        base = tuple(i for i, e in enumerate(exps) for _ in range(e))
        for perm in set(itertools.permutations(base)):
            T[perm] = val
    return T


def potential_expansion(c: CentralConfig) -> FrameCoefficients:
    """Frame coefficients ``lambda*, lambda*_k, a_ijk, a_hijk, Q``.

    The derivatives come from the exact binomial series of every
    ``1/|r_i - r_j|`` along the frame directions.

    Raises
    ------
    SingularityError
        If two bodies coincide.
    """
    if c.n_bodies < 3:
        raise ValueError("the reduced Hamiltonian needs at least three bodies")
    cu, ehat = _frame_vectors(c)
    masses = cu.masses
    P = cu.points
    for i in range(len(masses)):
        for j in range(i + 1, len(masses)):
            if np.allclose(P[i], P[j], atol=1e-15):
                raise SingularityError(f"bodies {i} and {j} collide")
    n = ehat.shape[0] - 1
    series = _directional_series(ehat, masses, 4)
    a3 = _tensor_from_series(series, n, 3)
    a4 = _tensor_from_series(series, n, 4)
    w = np.repeat(masses, 2)
    Q = np.array([[float(ehat[j + 1] @ (w * perp(ehat[k + 1]))) for k in range(n)] for j in range(n)])
    lam_star = float(series.coeff((0,) * n).real)
    return FrameCoefficients(
        lambda_star=lam_star,
        lambda_star_k=np.array(cu.eigvals[4:], dtype=float),
        a3=a3, a4=a4, Q=Q, ehat=ehat, masses=np.array(masses), g3=float(c.g3),
    )


# ----------------------------------------------------------- assembly
def _tensor_poly(T: NDArray, positions: list[int], nv: int, degree: int) -> TruncPoly:
    """``sum T[i..] x_i ...`` over all ordered index tuples, as a polynomial."""
    d = T.ndim
    n = T.shape[0]
    terms = {}
    for combo in itertools.combinations_with_replacement(range(n), d):
        e = [0] * nv
        cnt = [0] * n
        for i in combo:
            e[positions[i]] += 1
            cnt[i] += 1
        mult = math.factorial(d) // multinomial(cnt)
        terms[tuple(e)] = terms.get(tuple(e), 0.0) + T[combo] * mult
    return TruncPoly(nv, degree, terms, prune=0.0)


@dataclass(frozen=True)
class HamiltonianExpansion:
    """Graded pieces of the reduced Hamiltonian.

    Attributes
    ----------
    omega : float
    H2, H3, H4 : TruncPoly
        Homogeneous parts in ``2 * dof`` canonical variables.
    constant : float
        ``-omega**2 / 2``.
    frame : FrameCoefficients
    meta : dict
    """

    omega: float
    H2: TruncPoly
    H3: TruncPoly
    H4: TruncPoly
    constant: float
    frame: FrameCoefficients
    meta: dict = field(default_factory=dict)

    @property
    def dof(self) -> int:
        return self.H2.nvars // 2

    @property
    def H(self) -> TruncPoly:
        return TruncPoly.constant(self.H2.nvars, 4, self.constant) + self.H2 + self.H3 + self.H4

    def quadratic_matrix(self) -> NDArray:
        """Symmetric ``S`` with ``H2 = z^T S z / 2``."""
        nv = self.H2.nvars
        S = np.zeros((nv, nv))
        for exps, c in self.H2.terms.items():
            idx = [i for i, e in enumerate(exps) for _ in range(e)]
            i, j = idx
            if i == j:
                S[i, i] = 2 * c.real
            else:
                S[i, j] = S[j, i] = c.real
        return S

    def var_names(self) -> list[str]:
        n = self.frame.n
        ks = [str(k) for k in range(5, 5 + n)]
        return ["x0"] + [f"x{k}" for k in ks] + ["y0"] + [f"y{k}" for k in ks]

    def to_dict(self) -> dict:
        return {
            "meta": dict(self.meta, variables=self.var_names()),
            "constant": self.constant,
            "H2": self.H2.to_dict(),
            "H3": self.H3.to_dict(),
            "H4": self.H4.to_dict(),
        }

    def to_json(self, indent: int | None = None) -> str:
        return jsonio.dumps(self.to_dict(), indent=indent)


def build_hamiltonian(c: CentralConfig, f: FrameCoefficients | None = None) -> HamiltonianExpansion:
    """Assemble ``H2, H3, H4`` term by term from the frame coefficients.

    The assembly follows the expanded display of the reduced Hamiltonian:
    the kinetic bracket ``w^2 + sum (omega^2 - c lambda*_k) x_k^2`` weighted by
    the series of ``1/(1+x0)^2``, the potential expansion weighted by the
    series of ``1/(1+x0)``, and the quartic coupling terms.
    """
    if f is None:
        f = potential_expansion(c)
    n = f.n
    nv = 2 * (n + 1)
    om = f.omega
    lk = f.lambda_star_k
    Q = f.Q

    def X(i):
        return TruncPoly.variable(nv, 4, 1 + i, prune=0.0)

    def Y(i):
        return TruncPoly.variable(nv, 4, n + 2 + i, prune=0.0)

    x0 = TruncPoly.variable(nv, 4, 0, prune=0.0)
    y0 = TruncPoly.variable(nv, 4, n + 1, prune=0.0)
    zero = TruncPoly.zero(nv, 4, prune=0.0)
    sum_y2 = sum((Y(k) * Y(k) for k in range(n)), zero)
    qxy = sum((Y(k) * X(j) * Q[k, j] for k in range(n) for j in range(n) if Q[k, j] != 0), zero)
    A = sum_y2 - qxy.scale(2 * om)

    def xsum(weights):
        return sum((X(k) * X(k) * weights[k] for k in range(n)), zero)

    sum_x2 = xsum(np.ones(n))
    xy = sum((X(k) * Y(k) for k in range(n)), zero)
    xpos = list(range(1, n + 1))
    cubic_U = _tensor_poly(f.a3, xpos, nv, 4)
    quart_U = _tensor_poly(f.a4, xpos, nv, 4)
    ox02 = x0 * x0 * om ** 2

    H2 = y0 * y0 * 0.5 + (ox02 + A + xsum(om ** 2 - lk)) * 0.5
    H3 = -(x0 * (ox02 + A + xsum(om ** 2 - lk / 2))) - cubic_U.scale(1 / 6)
    H4 = ((qxy - sum_x2.scale(om)) ** 2 - xy * xy) * 0.5
    H4 = H4 + (x0 * cubic_U).scale(1 / 6)
    H4 = H4 + (x0 * x0 * (ox02 + A + xsum(om ** 2 - lk / 3))).scale(1.5)
    H4 = H4 - (sum_x2 * xsum(lk - om ** 2 / 2)).scale(0.75)
    H4 = H4 - quart_U.scale(1 / 24)
    H2, H3, H4 = (_reprune(p) for p in (H2, H3, H4))
    meta = {
        "N": int(len(f.masses)),
        "masses": f.masses.tolist(),
        "lambda_star": f.lambda_star,
        "omega": om,
        "normalization": "unit_norm",
        "g3_original": f.g3,
        # reduced time tau maps to original-scale time t = g3^(3/4) tau
        "time_rescale": f.g3 ** 0.75,
        "kind": c.kind,
    }
    return HamiltonianExpansion(omega=om, H2=H2, H3=H3, H4=H4, constant=-om ** 2 / 2,
                                frame=f, meta=meta)


def _reprune(p: TruncPoly, rel: float = 1e-14) -> TruncPoly:
    return TruncPoly(p.nvars, p.max_degree, dict(p.terms), prune=rel)


# ------------------------------------------------------ exact Hamiltonian
def exact_hamiltonian_series(f: FrameCoefficients, degree: int = 4) -> TruncPoly:
    """Series of the exact reduced Hamiltonian, independent of the assembly.

    Uses ``H = y0^2/2 + [w^2 + w^T M^-1 w] / (2 (1+x0)^2) - U(x)/(1+x0)`` with
    ``w = y - omega Q x`` and the exact inverse kinetic matrix
    ``M^-1 = I - x x^T + p p^T / x3^2``, ``p = Q x``.
    """
    n = f.n
    nv = 2 * (n + 1)
    om = f.omega
    Q = f.Q
    x = [TruncPoly.variable(nv, degree, 1 + i, prune=0.0) for i in range(n)]
    y = [TruncPoly.variable(nv, degree, n + 2 + i, prune=0.0) for i in range(n)]
    x0 = TruncPoly.variable(nv, degree, 0, prune=0.0)
    y0 = TruncPoly.variable(nv, degree, n + 1, prune=0.0)
    zero = TruncPoly.zero(nv, degree, prune=0.0)
    p = [sum((x[j] * Q[k, j] for j in range(n)), zero) for k in range(n)]
    w = [y[k] - p[k].scale(om) for k in range(n)]
    ww = sum((w[k] * w[k] for k in range(n)), zero)
    xw = sum((x[k] * w[k] for k in range(n)), zero)
    pw = sum((p[k] * w[k] for k in range(n)), zero)
    s = sum((x[k] * x[k] for k in range(n)), zero)
    inv_x3sq = binomial_series(-s, -1.0)
    K = ww - xw * xw + pw * pw * inv_x3sq + om ** 2
    inv1 = binomial_series(x0, -1.0)
    inv2 = binomial_series(x0, -2.0)
    Ux = sphere_potential_series(f, degree).embed(nv, list(range(1, n + 1)))
    Ux = TruncPoly(nv, degree, dict(Ux.terms), prune=0.0)
    return y0 * y0 * 0.5 + K * inv2 * 0.5 - Ux * inv1


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _sphere_point(f: FrameCoefficients, x):
    """Point of the unit sphere for chart coordinates ``x`` (batched over leading axes)."""
    x3sq = 1.0 - _dot(x, x)
    if np.any(np.real(x3sq) <= 0):
        raise ChartError("state left the moving-frame chart (x3 <= 0)")
    x3 = np.sqrt(x3sq)
    return x3, x3[..., None] * f.ehat[0] + x @ f.ehat[1:]


def _sphere_U(f: FrameCoefficients, x):
    _, pt = _sphere_point(f, x)
    P = pt.reshape(pt.shape[:-1] + (-1, 2))
    m = f.masses
    out = 0.0
    for i in range(len(m)):
        for j in range(i + 1, len(m)):
            if m[i] * m[j] == 0:
                continue
            d = P[..., j, :] - P[..., i, :]
            out = out + m[i] * m[j] / np.sqrt(_dot(d, d))
    return out


def _flat_grad_U(pt, m):
    P = pt.reshape(pt.shape[:-1] + (-1, 2))
    g = np.zeros(P.shape, dtype=P.dtype)
    for i in range(len(m)):
        for j in range(i + 1, len(m)):
            if m[i] * m[j] == 0:
                continue
            d = P[..., j, :] - P[..., i, :]
            rr = _dot(d, d)
            fvec = m[i] * m[j] * d / (rr ** 1.5)[..., None]
            g[..., i, :] += fvec
            g[..., j, :] -= fvec
    return g.reshape(pt.shape)


def _sphere_grad_U(f: FrameCoefficients, x):
    x3, pt = _sphere_point(f, x)
    g = _flat_grad_U(pt, f.masses)
    # d/dx_k of x3 E3 + sum x E is E_k - (x_k / x3) E3
    return g @ f.ehat[1:].T - x / x3[..., None] * (g @ f.ehat[0])[..., None]


class ExactReducedHamiltonian:
    """Untruncated reduced Hamiltonian in the shifted canonical variables.

    ``z = (x0, x, y0, y)`` with the equilibrium at ``z = 0``. Methods accept
    complex input so the Hessian can be formed by complex-step
    differentiation of the analytic gradient.
    """

    def __init__(self, f: FrameCoefficients):
        self.f = f
        self.n = f.n
        self.dof = f.n + 1
        self.omega = f.omega

    def _split(self, z):
        n = self.n
        return z[..., 0], z[..., 1:n + 1], z[..., n + 1], z[..., n + 2:]

    def _parts(self, z):
        x0, x, y0, y = self._split(z)
        X = 1.0 + x0
        if np.any(np.real(X) <= 0):
            raise SingularityError("radial coordinate reached zero")
        x3sq = 1.0 - _dot(x, x)
        if np.any(np.real(x3sq) <= 0):
            raise ChartError("state left the moving-frame chart (x3 <= 0)")
        Q = self.f.Q
        p = x @ Q.T
        w = y - self.omega * p
        xw = _dot(x, w)
        pw = _dot(p, w)
        Minv_w = w - xw[..., None] * x + (pw / x3sq)[..., None] * p
        K = self.omega ** 2 + _dot(w, Minv_w)
        return x0, x, y0, y, X, x3sq, p, w, xw, pw, Minv_w, K

    def value(self, z):
        """Hamiltonian value; ``z`` may carry leading batch axes."""
        x0, x, y0, y, X, x3sq, p, w, xw, pw, Minv_w, K = self._parts(np.asarray(z))
        return y0 * y0 / 2 + K / (2 * X * X) - self.f.U(x) / X

    __call__ = value

    def gradient(self, z):
        z = np.asarray(z)
        x0, x, y0, y, X, x3sq, p, w, xw, pw, Minv_w, K = self._parts(z)
        Q = self.f.Q
        U = self.f.U(x)
        gU = self.f.grad_U(x)
        e = lambda a: a[..., None]  # noqa: E731
        Qw = w @ Q.T
        dG_dx = (-2 * e(xw) * w - 2 * e(pw / x3sq) * Qw + 2 * e(pw * pw / x3sq ** 2) * x
                 + 2 * self.omega * (Minv_w @ Q.T))
        g = np.empty(z.shape, dtype=np.result_type(z, float))
        n = self.n
        g[..., 0] = -K / X ** 3 + U / X ** 2
        g[..., 1:n + 1] = dG_dx / e(2 * X * X) - gU / e(X)
        g[..., n + 1] = y0
        g[..., n + 2:] = Minv_w / e(X * X)
        return g

    def hessian(self, z, h: float = 1e-20) -> NDArray:
        """Complex-step Hessian at a single point (all directions in one batch)."""
        z = np.asarray(z, dtype=float)
        m = len(z)
        Z = np.tile(z.astype(complex), (m, 1)) + 1j * h * np.eye(m)
        Hm = (self.gradient(Z).imag / h).T
        return 0.5 * (Hm + Hm.T)

    def vector_field(self, z):
        g = self.gradient(z)
        d = self.dof
        return np.concatenate([g[..., d:], -g[..., :d]], axis=-1)


# ------------------------------------------------ velocity form (Lagrangian)
def _kinetic_matrix(x, Q, x3sq):
    p = Q @ x
    return np.eye(len(x)) + np.outer(x, x) / x3sq - np.outer(p, p)


def _kinetic_inverse(x, Q, x3sq):
    p = Q @ x
    return np.eye(len(x)) - np.outer(x, x) + np.outer(p, p) / x3sq


def _check_chart(x0, x):
    if x0 <= 0:
        raise SingularityError("radial coordinate x0 must stay positive")
    x3sq = 1.0 - float(x @ x)
    if x3sq <= 0:
        raise ChartError("state left the moving-frame chart (x3 <= 0)")
    return x3sq


def reduced_rhs(c: CentralConfig, f: FrameCoefficients, J: float | None = None):
    """Vector field of the reduced equations in velocity form.

    The state is ``(x0, x_5.., xdot0, xdot_5..)`` with the unshifted radial
    variable (``x0 = 1`` at the equilibrium) and the frame scale ``g3`` of
    ``c``. ``J`` defaults to the relative-equilibrium value ``g3 * omega``.

    Returns
    -------
    callable
        ``rhs(t, state) -> dstate``.
    """
    g3 = float(c.g3)
    Q = f.Q
    n = f.n
    if J is None:
        J = g3 * math.sqrt(c.lam)
    g32 = g3 ** 1.5

    def rhs(t, s):
        s = np.asarray(s, dtype=float)
        x0, x = s[0], s[1:n + 1]
        v0, v = s[n + 1], s[n + 2:]
        x3sq = _check_chart(x0, x)
        p = Q @ x
        xv = x @ v
        pv = p @ v
        Mv = v + xv * x / x3sq - pv * p
        vMv = v @ Mv
        U = f.U(x)
        gU = f.grad_U(x)
        acc0 = x0 * vMv + J * J / (g3 * g3 * x0 ** 3) - U / (g32 * x0 * x0)
        Qv = Q @ v
        b = (-2 * v0 / x0 * Mv - x * (v @ v) / x3sq - x * xv * xv / x3sq ** 2
             + 2 * pv * Qv - 2 * J * Qv / (g3 * x0 * x0) + gU / (g32 * x0 ** 3))
        acc = _kinetic_inverse(x, Q, x3sq) @ b
        return np.concatenate([[v0], v, [acc0], acc])

    return rhs


def canonical_momenta(c: CentralConfig, f: FrameCoefficients, state, J: float | None = None):
    """Legendre transform ``(x0, x, xdot0, xdot) -> (y0, y)``."""
    g3 = float(c.g3)
    if J is None:
        J = g3 * math.sqrt(c.lam)
    n = f.n
    s = np.asarray(state, dtype=float)
    x0, x, v0, v = s[0], s[1:n + 1], s[n + 1], s[n + 2:]
    x3sq = _check_chart(x0, x)
    y0 = g3 * v0
    y = g3 * x0 * x0 * (_kinetic_matrix(x, f.Q, x3sq) @ v) + J * (f.Q @ x)
    return y0, y


def velocities_from_momenta(c: CentralConfig, f: FrameCoefficients, x0, x, y0, y,
                            J: float | None = None):
    """Inverse Legendre transform."""
    g3 = float(c.g3)
    if J is None:
        J = g3 * math.sqrt(c.lam)
    x = np.asarray(x, dtype=float)
    x3sq = _check_chart(x0, x)
    v0 = y0 / g3
    v = _kinetic_inverse(x, f.Q, x3sq) @ (np.asarray(y) - J * (f.Q @ x)) / (g3 * x0 * x0)
    return v0, v


def reduced_energy(c: CentralConfig, f: FrameCoefficients, state, J: float | None = None) -> float:
    """Routhian energy ``g3 xdot0^2/2 + g3 x0^2 v^T M v / 2 + J^2/(2 g3 x0^2) - U/(sqrt(g3) x0)``."""
    g3 = float(c.g3)
    if J is None:
        J = g3 * math.sqrt(c.lam)
    n = f.n
    s = np.asarray(state, dtype=float)
    x0, x, v0, v = s[0], s[1:n + 1], s[n + 1], s[n + 2:]
    x3sq = _check_chart(x0, x)
    vMv = v @ (_kinetic_matrix(x, f.Q, x3sq) @ v)
    return (g3 * v0 * v0 / 2 + g3 * x0 * x0 * vMv / 2 + J * J / (2 * g3 * x0 * x0)
            - f.U(x) / (math.sqrt(g3) * x0))


def theta_rate(c: CentralConfig, f: FrameCoefficients, state, J: float | None = None) -> float:
    """``theta_dot = J/(g3 x0^2) - xdot^T Q x``."""
    g3 = float(c.g3)
    if J is None:
        J = g3 * math.sqrt(c.lam)
    n = f.n
    s = np.asarray(state, dtype=float)
    x0, x, v = s[0], s[1:n + 1], s[n + 2:]
    return J / (g3 * x0 * x0) - v @ (f.Q @ x)


def full_state(c: CentralConfig, f: FrameCoefficients, state, theta: float,
               J: float | None = None) -> tuple[NDArray, NDArray]:
    """Planar positions and velocities of all bodies for a reduced state and angle."""
    g3 = float(c.g3)
    n = f.n
    s = np.asarray(state, dtype=float)
    x0, x, v0, v = s[0], s[1:n + 1], s[n + 1], s[n + 2:]
    x3sq = _check_chart(x0, x)
    x3 = math.sqrt(x3sq)
    u = x3 * f.ehat[0] + x @ f.ehat[1:]
    udot = -(x @ v) / x3 * f.ehat[0] + v @ f.ehat[1:]
    th_dot = theta_rate(c, f, s, J)
    ct, st = math.cos(theta), math.sin(theta)

    def rot(vec):
        P = vec.reshape(-1, 2)
        return np.column_stack([ct * P[:, 0] - st * P[:, 1], st * P[:, 0] + ct * P[:, 1]]).ravel()

    sg = math.sqrt(g3)
    R = sg * x0 * rot(u)
    Rdot = sg * (v0 * rot(u) + x0 * th_dot * perp(rot(u)) + x0 * rot(udot))
    return R, Rdot


def angular_momentum_reduced(c: CentralConfig, f: FrameCoefficients, state, J=None) -> float:
    """``J`` recomputed from the full motion as ``<r^perp, rdot>``."""
    R, Rdot = full_state(c, f, state, 0.0, J)
    w = np.repeat(f.masses, 2)
    return float(perp(R) @ (w * Rdot))


# ------------------------------------------------------- consistency checks
def state_from_canonical(c: CentralConfig, f: FrameCoefficients, z) -> tuple[CentralConfig, NDArray]:
    """Velocity-form state of the unit-norm configuration for canonical ``z``.

    Returns the rescaled configuration together with the state, since the
    canonical variables always refer to ``g3 = 1``.
    """
    c1 = config_scale(c, "unit_norm")
    z = np.asarray(z, dtype=float)
    n = f.n
    x0 = 1.0 + z[0]
    x = z[1:n + 1]
    v0, v = velocities_from_momenta(c1, f, x0, x, z[n + 1], z[n + 2:])
    return c1, np.concatenate([[x0], x, [v0], v])


def canonical_from_state(c1: CentralConfig, f: FrameCoefficients, state) -> NDArray:
    """Inverse of :func:`state_from_canonical` on the unit-norm configuration."""
    s = np.asarray(state, dtype=float)
    n = f.n
    y0, y = canonical_momenta(c1, f, s)
    return np.concatenate([[s[0] - 1.0], s[1:n + 1], [y0], y])


def hamilton_consistency(c: CentralConfig, f: FrameCoefficients, z, field=None,
                         h: float = 1e-4) -> NDArray:
    """Difference between a Hamiltonian vector field and the reduced equations.

    ``reduced_rhs`` is pushed to canonical variables through the Legendre map,
    whose derivative along the flow is taken by a fourth-order central
    difference in time.

    Parameters
    ----------
    field : callable, optional
        ``z -> dz/dt`` in canonical variables; defaults to the exact reduced
        Hamiltonian. Pass the truncated expansion's field to measure the
        truncation error.
    """
    z = np.asarray(z, dtype=float)
    c1, s = state_from_canonical(c, f, z)
    rhs = reduced_rhs(c1, f)
    ds = rhs(0.0, s)
    scale = h / max(float(np.abs(ds).max()), 1.0)
    pts = [canonical_from_state(c1, f, s + k * scale * ds) for k in (-2, -1, 1, 2)]
    zdot = (pts[0] - 8 * pts[1] + 8 * pts[2] - pts[3]) / (12 * scale)
    if field is None:
        field = ExactReducedHamiltonian(f).vector_field
    return np.asarray(field(z)) - zdot
