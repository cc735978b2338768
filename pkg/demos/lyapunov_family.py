"""Continue a Lyapunov family from the Lagrange point and report its Floquet data.

Run: python3 demos/lyapunov_family.py [mode]
"""

import math
import sys

import numpy as np

from nbody_bnf.central_config import solve_lagrange
from nbody_bnf.dynamics import ExactField, continue_family, linear_guess, orbit_theta_advance, shoot_periodic
from nbody_bnf.hamiltonian import build_hamiltonian, potential_expansion
from nbody_bnf.spectrum import diagonalize

mode = int(sys.argv[1]) if len(sys.argv) > 1 else 2
c = solve_lagrange((0.98, 0.01, 0.01))
f = potential_expansion(c)
chart = diagonalize(build_hamiltonian(c, f))
fld = ExactField(f)
amp = 2e-4
z0, T, anchor = linear_guess(chart, mode, amp)
seed = shoot_periodic(fld, z0, T, anchor, amp, index=mode)
orbits = continue_family(fld, seed, 9, amp, anchor)
print(f"mode {mode}: linear period {T:.8f}")
print(" amplitude     period        energy              residual   max|mult|   dtheta")
for o in orbits:
    adv = orbit_theta_advance(c, f, o, fld)
    print(f" {o.amplitude:.3e}  {o.period:.8f}  {o.energy:.12e}  {o.residual:.1e}"
          f"  {np.abs(o.floquet).max():.6f}  {math.fmod(adv, 2 * math.pi):.6f}")
