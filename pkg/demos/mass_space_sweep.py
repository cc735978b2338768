"""Coarse sweep of the admissible Lagrange mass slice and sign changes of det.

Run: python3 demos/mass_space_sweep.py [n_beta n_m1]
"""

import sys

from nbody_bnf import cli

n_beta, n_m1 = (int(x) for x in (sys.argv[1:3] or ("30", "30")))
cfg = cli.resolve_config(["sweep", "--n-beta", str(n_beta), "--n-m1", str(n_m1)])
rows = cli.run_sweep(cfg)
counts = {}
for r in rows:
    counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
print(f"{len(rows)} admissible grid points, verdicts: {counts}")
dets = [r["det_center"] for r in rows]
print(f"det range [{min(dets):.4g}, {max(dets):.4g}]")
for b in cli.det_brackets(rows)[:10]:
    print("det changes sign between", {k: round(v, 8) if isinstance(v, float) else v for k, v in b.items()})
