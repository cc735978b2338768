"""Normal form of the Lagrange relative equilibrium for one small-mass system.

Run: python3 demos/lagrange_normal_form.py [m1 m2 m3]
"""

import sys

import numpy as np

from nbody_bnf.central_config import solve_lagrange
from nbody_bnf.hamiltonian import build_hamiltonian, potential_expansion
from nbody_bnf.normal_form import birkhoff, lagrange_det_closed_form, oracle_lagrange
from nbody_bnf.resonance import beta_m1_from_masses, scan
from nbody_bnf.spectrum import diagonalize

masses = tuple(float(x) for x in sys.argv[1:4]) or (0.98, 0.01, 0.01)
c = solve_lagrange(masses)
h = build_hamiltonian(c, potential_expansion(c))
chart = diagonalize(h)
nf = birkhoff(h, chart)
beta, m1 = beta_m1_from_masses(masses)

print(f"masses {masses}  beta={beta:.6g}  m1={m1:.6g}")
print("frequencies:", np.round(nf.freq.values, 8), "Krein signs:", nf.freq.signs)
print("normalization residuals:", nf.meta["residuals"])
np.set_printoptions(precision=6, suppress=False)
print("omega_jk =\n", nf.omega_jk)
oracle = oracle_lagrange(beta, m1)
print("closed-form omega_jk =\n", np.array([[oracle["omega00"], oracle["omega01"], oracle["omega02"]],
                                            [oracle["omega01"], oracle["omega11"], oracle["omega12"]],
                                            [oracle["omega02"], oracle["omega12"], oracle["omega22"]]]))
print(f"det pipeline {nf.det_center:.10g}  closed form {lagrange_det_closed_form(beta, m1):.10g}")
w = nf.freq.values
rep = scan([w[0], -w[1], w[2]], 4)
print(f"resonance up to order 4: {rep.resonant}  min |k.w| = {rep.min_divisor:.3e} at k={rep.argmin}")
