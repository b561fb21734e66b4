"""
Ground state of a Kirchhoff equation at prescribed mass
=======================================================

Solve -(a + b‖∇u‖²)Δu + λu = g(u) with ‖u‖² = c in R³ for the two-power
nonlinearity g(s) = s|s|³ + s|s|^{3.5}, then check the identities the
minimizer must satisfy and the energy bounds around it.
"""

import numpy as np

from kirchhoff_gs import (NonlinearitySpec, RadialGrid, check_assumptions,
                          solve_ground_state, verify_variational_bounds)
from kirchhoff_gs.asymptotics import comparability_report

spec = NonlinearitySpec.two_power(a=1, b=1, A=1, alpha=5, B=1, beta=5.5)

# the growth assumptions are checked before any iteration
print(check_assumptions(spec, N=3).passed)

gs = solve_ground_state(RadialGrid(N=3, R=10.0, M=4096), spec, c=1.0)
print(f"lambda = {gs.lam:.6f}   M_c = {gs.energy:.6f}   d = {gs.d:.6f}   u(0) = {gs.u0:.6f}")

# residuals of the Pohozaev identity, Nehari identity and the equation itself
d = gs.diagnostics
print(f"pohozaev {d.pohozaev:.1e}  nehari {d.nehari:.1e}  pde {d.pde:.1e}  "
      f"multiplier gap {d.multiplier_gap:.1e}")

# the profile is positive and nonincreasing
u = gs.u.values
print(bool(np.all(u[:-1] > 0) and np.all(np.diff(u) <= 0)))

# coercivity lower bound <= M_c <= sandwich upper bound, and M_c below
# every projected competitor
rep = verify_variational_bounds(gs)
print(f"{rep.coercivity:.4f} <= {rep.I:.4f} <= {rep.sandwich_upper:.4f}; "
      f"min competitor {min(rep.competitors):.4f}; passed {rep.passed}")

# integrals that stay comparable along the whole mass range
cmp = comparability_report(gs)
print({k: round(v, 4) for k, v in cmp.values.items()})
print(f"∫g(u)u / ∫G(u) = {cmp.gu_over_G:.4f} in [5, 5.5]")
