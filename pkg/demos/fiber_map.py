"""
The mass-preserving dilation fiber
==================================

t⋆u(x) = t^{N/2} u(tx) keeps ‖u‖² fixed.  Along the fiber the energy
I[t⋆u] rises, peaks at a single t_u where P[t⋆u] = 0, and falls again.
Projecting onto P = 0 is the first step of every solver iteration.
"""

import numpy as np

from kirchhoff_gs import NonlinearitySpec, RadialGrid, fiber_scan, project_to_pohozaev
from kirchhoff_gs.functionals import energy

spec = NonlinearitySpec.power(a=1, b=1, p=5)
grid = RadialGrid(N=3, R=40.0, M=4096)

# a Gaussian with P > 0 at t = 1: the fiber still climbs there, so t_u > 1
u = 50.0 * np.exp(-0.5 * grid.r**2)
u[-1] = 0.0
e = energy(grid, spec, u)
print(f"I = {e.I:.4f}   P = {e.P:.4f}   mass = {e.mass:.6f}")

# the projection lands on P = 0 with the mass unchanged
t, v = project_to_pohozaev(grid, spec, u)
ev = energy(grid, spec, v)
print(f"t_u = {t:.6f}   I = {ev.I:.4f}   |P| = {abs(ev.P):.1e}   mass = {ev.mass:.6f}")

# around t_u the energy has a single peak and P changes sign once
scan = fiber_scan(grid, spec, u, t_min=t / 4, t_max=4 * t, K=21)
for tk, I, P in zip(scan.t, scan.I, scan.P):
    print(f"t = {tk:8.4f}   I = {I:10.4f}   P = {P:10.4f}")
print(f"sign changes {scan.sign_changes}, scan root {scan.t_u:.6f}, "
      f"peak at t = {scan.t[scan.argmax]:.4f}")
