"""Command line front end.

Subcommands
-----------
analyze   single configuration: frame, frequencies, normal form, resonance scan, verdicts
sweep     grid over the Lagrange mass plane or the three-body mass simplex, CSV output
orbits    periodic-orbit continuation, JSON-lines archive plus a plot-data CSV
oracle    closed-form coefficients only
scan      resonance scan of a frequency vector

Every option may also be given in a JSON config file (``--config``); keys are
the long option names with underscores. Explicit flags override the file.

Exit codes: 0 ok, 1 numerical failure, 2 domain exclusion, 64 usage error.
The worker count for ``sweep`` is read from ``NBODY_BNF_THREADS``.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import jsonio
from .central_config import asymptotic_iota, solve_collinear, solve_euler3, solve_lagrange
from .errors import DomainError, NBodyBNFError
from .hamiltonian import build_hamiltonian, potential_expansion
from .normal_form import (
    birkhoff,
    degeneracy_verdict,
    lagrange_det_closed_form,
    oracle_euler_block,
    oracle_euler_tau,
    oracle_lagrange,
    restrict_center,
)
from .resonance import (
    EXCLUDED_BETAS,
    M1_MIN,
    beta_m1_from_masses,
    lyapunov_exclusions,
    masses_from_beta_m1,
    omega_ps_membership,
    scan,
    verify_ak_nonresonant,
)

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_DOMAIN = 2
EXIT_USAGE = 64
THREADS_ENV = "NBODY_BNF_THREADS"

KINDS = ("lagrange", "euler3", "collinear")
FAMILIES = ("trivial", "lyapunov")
ORACLE_KINDS = ("lagrange", "euler3", "block", "ak", "lyapunov")


class UsageError(Exception):
    """Bad command line or config; maps to exit 64."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ------------------------------------------------------------------ config
DEFAULTS = {
    "kind": "lagrange",
    "masses": None,
    "beta": None,
    "m1": None,
    "order": 4,
    "divisor_tol": 1e-9,
    "det_threshold": 1e-10,
    "resonance_tol": None,
    "check_domain": True,
    "verify": True,
    "out": None,
    "seed": 0,
    # sweep
    "beta_range": None,
    "m1_range": None,
    "n_beta": 20,
    "n_m1": 20,
    "simplex_n": 12,
    # orbits
    "family": "lyapunov",
    "mode": None,
    "amplitude": 2e-4,
    "step": None,
    "steps": 9,
    "field": "exact",
    "continuation": "arclength",
    "shoot_tol": 1e-10,
    # oracle / scan
    "iota": None,
    "c_ring": None,
    "nmax": 12,
    "freqs": None,
    "fit": False,
}


@dataclass
class RunConfig:
    """Fully resolved run parameters; serializable and sufficient to rerun."""

    command: str
    params: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["params"][name]
        except KeyError:
            raise AttributeError(name) from None

    def to_dict(self) -> dict:
        return {"command": self.command, **self.params}


def _float_list(text: str) -> list:
    try:
        return [float(Fraction(x)) for x in text.replace(",", " ").split()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc


def _number(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse number {text!r}") from exc


def _bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _common(p: argparse.ArgumentParser, kinds=KINDS):
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--kind", choices=kinds)
    p.add_argument("--masses", type=_float_list, help="comma separated masses")
    p.add_argument("--beta", type=_number, help="Lagrange parameter (fractions accepted)")
    p.add_argument("--m1", type=_number, help="largest normalized mass")
    p.add_argument("--out", help="output path")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nbody-bnf", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", help="single-case analysis")
    _common(p)
    p.add_argument("--order", type=int, help="resonance order checked")
    p.add_argument("--divisor-tol", type=float)
    p.add_argument("--det-threshold", type=float)
    p.add_argument("--resonance-tol", type=float)
    p.add_argument("--check-domain", type=_bool)
    p.add_argument("--verify", type=_bool, help="compose the normalizing map and report residuals")

    p = sub.add_parser("sweep", help="mass-grid sweep")
    _common(p, kinds=("lagrange", "euler3"))
    p.add_argument("--beta-range", type=_float_list,
                   help="lo,hi box in beta; default grids the admissible slice at each m1")
    p.add_argument("--m1-range", type=_float_list, help="lo,hi (open interval)")
    p.add_argument("--n-beta", type=int)
    p.add_argument("--n-m1", type=int)
    p.add_argument("--simplex-n", type=int, help="simplex subdivisions for euler3")
    p.add_argument("--order", type=int)
    p.add_argument("--divisor-tol", type=float)
    p.add_argument("--det-threshold", type=float)

    p = sub.add_parser("orbits", help="periodic-orbit continuation")
    _common(p)
    p.add_argument("--family", help="trivial or lyapunov")
    p.add_argument("--mode", type=int, help="mode index of a lyapunov family")
    p.add_argument("--amplitude", type=float, help="seed amplitude in chart units")
    p.add_argument("--step", type=float, help="continuation step in chart units")
    p.add_argument("--steps", type=int)
    p.add_argument("--field", choices=("exact", "polynomial"))
    p.add_argument("--continuation", choices=("arclength", "amplitude"))
    p.add_argument("--shoot-tol", type=float)
    p.add_argument("--check-domain", type=_bool)

    p = sub.add_parser("oracle", help="closed-form evaluation")
    _common(p, kinds=ORACLE_KINDS)
    p.add_argument("--iota", type=_number)
    p.add_argument("--c-ring", type=_number)
    p.add_argument("--nmax", type=int)
    p.add_argument("--check-domain", type=_bool)

    p = sub.add_parser("scan", help="resonance scan")
    _common(p)
    p.add_argument("--freqs", type=_float_list)
    p.add_argument("--order", type=int)
    p.add_argument("--resonance-tol", type=float)
    p.add_argument("--fit", type=_bool)
    return ap


def resolve_config(argv) -> RunConfig:
    ns = build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("a subcommand is required: analyze, sweep, orbits, oracle, scan")
    params = dict(DEFAULTS)
    if ns.config:
        try:
            data = jsonio.loads(Path(ns.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {ns.config!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        data.pop("command", None)
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        params.update(data)
    for k, v in vars(ns).items():
        if k in ("command", "config") or v is None:
            continue
        params[k] = v
    if ns.command == "oracle" and params["kind"] not in ORACLE_KINDS:
        raise UsageError(f"oracle kind must be one of {ORACLE_KINDS}")
    if ns.command != "oracle" and params["kind"] not in KINDS:
        raise UsageError(f"kind must be one of {KINDS}")
    return RunConfig(ns.command, params)


# ---------------------------------------------------------------- helpers
def _lagrange_point(cfg: RunConfig):
    """(beta, m1, masses) from either explicit masses or (beta, m1)."""
    if cfg.masses is not None:
        m = np.asarray(cfg.masses, dtype=float)
        if len(m) != 3:
            raise UsageError("the equilateral configuration needs three masses")
        if np.any(m <= 0):
            raise DomainError("masses must be positive")
        beta, m1 = beta_m1_from_masses(m)
        return beta, m1, tuple(m)
    if cfg.beta is None:
        raise UsageError("give --masses or --beta and --m1")
    beta = float(cfg.beta)
    hit = _excluded_beta(beta)
    if hit is not None and cfg.check_domain:
        raise DomainError(f"Omega_ps exclusion: beta = {hit} is a resonant value")
    if cfg.m1 is None:
        raise UsageError("--m1 is required together with --beta")
    m = masses_from_beta_m1(beta, float(cfg.m1))
    if m[2] <= 0 or not all(math.isfinite(x) for x in m):
        raise DomainError(f"(beta={beta!r}, m1={cfg.m1!r}) does not correspond to positive masses")
    return beta, float(cfg.m1), m


def _excluded_beta(beta: float, rtol: float = 1e-12):
    for b in EXCLUDED_BETAS:
        if abs(beta - float(b)) <= rtol * float(b):
            return b
    return None


def _check_omega_ps(beta: float, m1: float) -> None:
    hit = _excluded_beta(beta)
    if hit is not None:
        raise DomainError(f"Omega_ps exclusion: beta = {hit} is a resonant value")
    if not omega_ps_membership(beta, m1):
        raise DomainError(f"Omega_ps exclusion: (beta={beta:.17g}, m1={m1:.17g}) is outside the admissible set")


def _config_for(cfg: RunConfig):
    """Solve the central configuration requested by ``cfg``."""
    kind = cfg.kind
    if kind == "lagrange":
        beta, m1, m = _lagrange_point(cfg)
        if cfg.check_domain:
            _check_omega_ps(beta, m1)
        return solve_lagrange(m), {"beta": beta, "m1": m1}
    if cfg.masses is None:
        raise UsageError(f"--masses is required for kind {kind}")
    if kind == "euler3":
        if len(cfg.masses) != 3:
            raise UsageError("euler3 needs three masses")
        return solve_euler3(cfg.masses), {}
    if len(cfg.masses) < 2:
        raise UsageError("collinear needs at least two masses")
    return solve_collinear(cfg.masses)[0], {}


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _g(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_g(r.get(h)) for h in header])
    return buf.getvalue()


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be positive")
    return n


# ---------------------------------------------------------------- analyze
def collinear_iota_check(c) -> dict:
    """Compare solved eigenvalue ratios with the leading cascade prediction."""
    m = np.asarray(c.masses, dtype=float)
    iotas = [float(x) for x in c.info.get("iotas", [])]
    eps1 = float(m[1] / m[0])
    rows = []
    for n in range(3, len(iotas) + 1):
        pred = asymptotic_iota(n, [eps1])
        rows.append({"n": n, "iota": iotas[n - 1], "predicted": pred,
                     "error": iotas[n - 1] - pred,
                     "error_over_eps_2_3": (iotas[n - 1] - pred) / eps1 ** (2 / 3)})
    return {"eps1": eps1, "iotas": iotas, "checks": rows}


def analyze_case(cfg: RunConfig) -> dict:
    """Run the full pipeline and return every report as a dict."""
    c, extra = _config_for(cfg)
    f = potential_expansion(c)
    h = build_hamiltonian(c, f)
    nf = birkhoff(h, tol=cfg.divisor_tol, verify=cfg.verify)
    cr = restrict_center(nf)
    det, nondeg = degeneracy_verdict(cr, cfg.det_threshold)
    center = [nf.freq.values[i] for i in cr.indices]
    rep = scan(center, cfg.order, tol=cfg.resonance_tol)
    verdict = {
        "kind": c.kind,
        "nondegenerate": nondeg,
        "nonresonant": not rep.resonant,
        "det_center": det,
        "min_divisor": nf.min_divisor,
        "center_dimension": len(cr.indices),
        "hyperbolic_modes": len(nf.freq.kinds) - len(cr.indices),
    }
    if c.kind == "lagrange":
        beta, m1 = extra["beta"], extra["m1"]
        verdict["omega_ps"] = omega_ps_membership(beta, m1)
        verdict["beta"], verdict["m1"] = beta, m1
    verdict["hypotheses_hold"] = bool(nondeg and not rep.resonant and verdict.get("omega_ps", True))
    out = {
        "central_config": c.to_dict(),
        "frequencies": nf.freq.to_dict(),
        "normal_form": nf.to_dict(),
        "resonance": rep.to_dict(),
        "verdict": verdict,
    }
    if c.kind == "collinear" and c.n_bodies >= 3:
        out["iota_check"] = collinear_iota_check(c)
    return out


def cmd_analyze(cfg: RunConfig) -> int:
    res = analyze_case(cfg)
    if cfg.out is None or cfg.out == "-":
        _write_text(None, jsonio.dumps(res, indent=1) + "\n")
        return EXIT_OK
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    for name, payload in res.items():
        (d / f"{name}.json").write_text(jsonio.dumps(payload, indent=1) + "\n", encoding="utf-8")
    (d / "run_config.json").write_text(jsonio.dumps(cfg.to_dict(), indent=1) + "\n", encoding="utf-8")
    v = res["verdict"]
    print(f"nondegenerate={v['nondegenerate']} nonresonant={v['nonresonant']} det_center={v['det_center']:.6e}")
    return EXIT_OK


# ------------------------------------------------------------------ sweep
def _open_grid(lo: float, hi: float, n: int) -> np.ndarray:
    return np.linspace(lo, hi, n + 2)[1:-1]


def _sweep_point(task) -> dict:
    kind, point, params = task
    row: dict = {}
    try:
        if kind == "lagrange":
            beta, m1 = point
            m = masses_from_beta_m1(beta, m1)
            row.update(beta=beta, m1=m1)
            c = solve_lagrange(m)
        else:
            m = point
            c = solve_euler3(m)
        row.update(mass1=m[0], mass2=m[1], mass3=m[2])
        h = build_hamiltonian(c)
        nf = birkhoff(h, tol=params["divisor_tol"], verify=False)
        cr = restrict_center(nf)
        det, nondeg = degeneracy_verdict(cr, params["det_threshold"])
        center = [nf.freq.values[i] for i in cr.indices]
        rep = scan(center, params["order"])
        for j, w in enumerate(nf.freq.signed):
            row[f"freq{j}"] = w
        row.update(det_center=det, min_divisor=min(nf.min_divisor, rep.min_divisor / nf.freq.omega0),
                   verdict="ok" if nondeg and not rep.resonant else
                   ("resonant" if rep.resonant else "degenerate"))
        if kind == "lagrange":
            row["det_closed_form"] = lagrange_det_closed_form(beta, m1, masses=m)
    except NBodyBNFError as exc:
        row.update(verdict="error", error=f"{type(exc).__name__}: {exc}")
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        row.update(verdict="error", error=f"{type(exc).__name__}: {exc}")
    return row


def sweep_points(cfg: RunConfig) -> list:
    if cfg.kind == "lagrange":
        mlo, mhi = cfg.m1_range or (M1_MIN, 1.0)
        pts = []
        for m1 in _open_grid(mlo, mhi, cfg.n_m1):
            m1 = float(m1)
            if cfg.beta_range is not None:
                betas = _open_grid(*cfg.beta_range, cfg.n_beta)
            else:
                # the admissible beta slice at this m1 is a thin band; grid it directly
                lo = m1 * (1 - m1)
                hi = min((1 - m1) * (1 + 3 * m1) / 4, 1 / 27)
                betas = _open_grid(lo, hi, cfg.n_beta) if hi > lo else []
            for beta in betas:
                if omega_ps_membership(float(beta), m1):
                    pts.append((float(beta), m1))
        return pts
    n = cfg.simplex_n
    if n < 3:
        raise UsageError("--simplex-n must be at least 3")
    return [(i / n, j / n, (n - i - j) / n) for i in range(1, n) for j in range(1, n - i)]


def det_brackets(rows: list) -> list:
    """Consecutive accepted beta values at fixed ``m1`` where ``det_center`` changes sign."""
    out = []
    prev = None
    for r in rows:
        if "det_center" not in r:
            prev = None
            continue
        if prev is not None and prev["m1"] == r["m1"] and np.sign(prev["det_center"]) != np.sign(r["det_center"]):
            out.append({"m1": r["m1"], "beta_lo": prev["beta"], "beta_hi": r["beta"],
                        "det_lo": prev["det_center"], "det_hi": r["det_center"]})
        prev = r
    return out


def run_sweep(cfg: RunConfig, threads: int = 1) -> list:
    params = {"divisor_tol": cfg.divisor_tol, "det_threshold": cfg.det_threshold, "order": cfg.order}
    tasks = [(cfg.kind, p, params) for p in sweep_points(cfg)]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            # map yields in submission order, so the collector writes input order
            return list(ex.map(_sweep_point, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    return [_sweep_point(t) for t in tasks]


def cmd_sweep(cfg: RunConfig) -> int:
    rows = run_sweep(cfg, _threads())
    lead = ["beta", "m1"] if cfg.kind == "lagrange" else []
    nfreq = max((sum(1 for k in r if k.startswith("freq")) for r in rows), default=0)
    header = lead + ["mass1", "mass2", "mass3"] + [f"freq{j}" for j in range(nfreq)] + [
        "det_center", "min_divisor", "verdict"]
    if cfg.kind == "lagrange":
        header.append("det_closed_form")
    header.append("error")
    _write_text(cfg.out, _csv(header, rows))
    if cfg.kind == "lagrange" and cfg.out not in (None, "-"):
        p = Path(cfg.out)
        br = det_brackets(rows)
        _write_text(str(p.with_name(p.stem + "_brackets.csv")),
                    _csv(["m1", "beta_lo", "beta_hi", "det_lo", "det_hi"], br))
    return EXIT_OK


# ----------------------------------------------------------------- orbits
def run_orbits(cfg: RunConfig):
    """Seed and continue one family. Returns ``(orbits, error_message)``."""
    from .dynamics import (
        ContinuationEnd,
        ExactField,
        PolynomialField,
        continue_family,
        linear_guess,
        orbit_theta_advance,
        shoot_periodic,
    )
    from .spectrum import diagonalize

    if cfg.family not in FAMILIES:
        raise UsageError(f"unknown family {cfg.family!r}; choose from {', '.join(FAMILIES)}")
    c, _ = _config_for(cfg)
    f = potential_expansion(c)
    h = build_hamiltonian(c, f)
    chart = diagonalize(h)
    if cfg.family == "trivial":
        k = 0
    else:
        k = 1 if cfg.mode is None else int(cfg.mode)
        if k == 0:
            raise UsageError("mode 0 is the trivial family; use --family trivial")
    if not 0 <= k < chart.dof:
        raise UsageError(f"mode {k} out of range (0..{chart.dof - 1})")
    if chart.freq.kinds[k] != "elliptic":
        raise DomainError(f"mode {k} is hyperbolic and carries no periodic family")
    fld = ExactField(f) if cfg.field == "exact" else PolynomialField(h)
    amp = float(cfg.amplitude)
    z0, T, anchor = linear_guess(chart, k, amp)
    seed = shoot_periodic(fld, z0, T, anchor, amp, family=cfg.family, index=k,
                          tol=cfg.shoot_tol, expected_period=T)
    step = amp if cfg.step is None else float(cfg.step)
    err = None
    try:
        orbits = continue_family(fld, seed, int(cfg.steps), step, anchor,
                                 mode=cfg.continuation, tol=cfg.shoot_tol)
    except ContinuationEnd as exc:
        orbits, err = exc.orbits, str(exc)
    for o in orbits:
        adv = orbit_theta_advance(c, f, o, fld)
        o.meta["theta_advance"] = adv
        o.delta_theta = math.fmod(adv, 2 * math.pi)
    return orbits, err


def cmd_orbits(cfg: RunConfig) -> int:
    from .dynamics import write_orbit_archive

    if cfg.out in (None, "-"):
        raise UsageError("orbits needs --out DIR")
    orbits, err = run_orbits(cfg)
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    write_orbit_archive(d / "orbits.jsonl", orbits)
    rows = [{"amplitude": o.amplitude, "period": o.period, "energy": o.energy,
             "max_abs_multiplier": float(np.abs(o.floquet).max()) if o.floquet.size else None,
             "residual": o.residual, "delta_theta": o.delta_theta} for o in orbits]
    _write_text(str(d / "orbits.csv"),
                _csv(["amplitude", "period", "energy", "max_abs_multiplier", "residual", "delta_theta"],
                     rows))
    (d / "run_config.json").write_text(jsonio.dumps(cfg.to_dict(), indent=1) + "\n", encoding="utf-8")
    print(f"{len(orbits)} orbits written to {d}")
    if err:
        print(f"continuation stopped early: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# ----------------------------------------------------------------- oracle
def oracle_case(cfg: RunConfig) -> dict:
    kind = cfg.kind
    if kind == "lagrange":
        beta, m1, _ = _lagrange_point(cfg)
        return oracle_lagrange(beta, m1, check_domain=cfg.check_domain)
    if kind == "euler3":
        if cfg.masses is None or len(cfg.masses) != 3:
            raise UsageError("euler3 oracle needs three masses")
        fr = potential_expansion(solve_euler3(cfg.masses))
        lam, lam6 = fr.lambda_star, fr.lambda_star_k[1]
        out = oracle_euler_tau(lam, lam6, fr.a3[0, 0, 0] / 6, fr.a4[0, 0, 0, 0] / 24)
        out.update(lam=lam, lam6=lam6)
        return out
    if kind == "block":
        if cfg.iota is None or cfg.c_ring is None:
            raise UsageError("block oracle needs --iota and --c-ring")
        return oracle_euler_block(float(cfg.iota), float(cfg.c_ring))
    if kind == "ak":
        return verify_ak_nonresonant(int(cfg.nmax))
    return lyapunov_exclusions(int(cfg.nmax))


def cmd_oracle(cfg: RunConfig) -> int:
    _write_text(cfg.out, jsonio.dumps(oracle_case(cfg), indent=1) + "\n")
    return EXIT_OK


# ------------------------------------------------------------------- scan
def cmd_scan(cfg: RunConfig) -> int:
    if cfg.freqs is not None:
        freqs = list(cfg.freqs)
    else:
        c, _ = _config_for(cfg)
        h = build_hamiltonian(c)
        from .spectrum import frequencies

        fd = frequencies(h)
        freqs = [fd.values[i] for i in fd.center_indices]
    rep = scan(freqs, int(cfg.order), tol=cfg.resonance_tol, fit=bool(cfg.fit))
    _write_text(cfg.out, rep.to_json(indent=1) + "\n")
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
    "orbits": cmd_orbits,
    "oracle": cmd_oracle,
    "scan": cmd_scan,
}


def main(argv=None) -> int:
    """Entry point; returns the process exit code."""
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NBodyBNFError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
