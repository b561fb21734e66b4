"""
Ground states across six decades of mass
========================================

As c grows, M_c, λ_c·c and u_c(0) fall and ‖∇u_c‖² shrinks.  After the
blow-up rescalings the profiles approach the limit profiles U (large mass)
and V (small mass).  This prints one line per mass and the trend checks.
"""

import numpy as np

from kirchhoff_gs import NonlinearitySpec
from kirchhoff_gs.asymptotics import SweepOptions, sweep

spec = NonlinearitySpec.two_power(a=1, b=1, A=1, alpha=5, B=1, beta=5.5)
cs = np.geomspace(1e-3, 1e3, 7)

res = sweep(spec, 3, cs, SweepOptions(M=4096))

print(f"{'c':>8} {'M_c':>12} {'lambda':>12} {'d':>10} {'u(0)':>10} {'H1 to U':>9} {'H1 to V':>9}")
for r in res.records:
    print(f"{r.c:8.0e} {r.M:12.5g} {r.lam:12.5g} {r.d:10.4g} {r.u0:10.4g} "
          f"{r.dist_U.H1:9.3g} {r.dist_V.H1:9.3g}")

for t in res.trends:
    print(f"{'pass' if t.passed else 'FAIL'}  {t.name}: {t.value:.4g}  ({t.note})")
