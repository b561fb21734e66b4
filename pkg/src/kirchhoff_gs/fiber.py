"""The fiber map t ↦ t⋆u and projection onto the Pohozaev set {P = 0}.

Two evaluations of the fiber are available:

* resampled: ``t⋆u`` is interpolated back onto the same grid
  (``functionals.fiber_action``).  This is what ``fiber_scan`` and
  ``project_to_pohozaev`` report.
* rescaled: ``t⋆u`` is represented exactly by the same nodal values times
  t^{N/2} on a grid of radius R/t.  Kinetic and potential terms then scale in
  closed form, which gives a cheap, interpolation-free P(t) used for
  bracketing and by the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .functionals import energy, fiber_action
from .nonlinearity import NonlinearitySpec, evaluate
from .radial_grid import Field, RadialGrid, _values, kinetic

T_BOUNDS = (1e-6, 1e6)


class FiberError(RuntimeError):
    """No sign change of P along the fiber inside ``T_BOUNDS``."""


@dataclass(frozen=True)
class FiberScan:
    """Samples of I[t⋆u] and P[t⋆u] on a log-spaced t grid."""

    t: np.ndarray
    I: np.ndarray
    P: np.ndarray
    t_u: float | None
    bracketed: bool
    sign_changes: int

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.I))


class _ScaledFiber:
    """Closed-form I(t), P(t) of the rescaled fiber."""

    def __init__(self, grid: RadialGrid, spec: NonlinearitySpec, u, d=None, weights=None):
        self.spec = spec
        self.u = _values(grid, u) if weights is None else np.asarray(u)
        self.N = grid.N
        self.d = kinetic(grid, self.u) if d is None else d
        self.w = grid.weights if weights is None else weights

    def parts(self, t: float):
        N, s = self.N, self.spec
        d = t * t * self.d
        _, G, Gt = evaluate(s, t ** (0.5 * N) * self.u)
        w = self.w
        return d, t ** (-N) * float(w @ G), t ** (-N) * float(w @ Gt)

    def P(self, t: float) -> float:
        d, _, iGt = self.parts(t)
        return self.spec.a * d + self.spec.b * d * d - self.N * iGt

    def I(self, t: float) -> float:
        d, iG, _ = self.parts(t)
        return 0.5 * self.spec.a * d + 0.25 * self.spec.b * d * d - iG

    def scale(self, t: float) -> float:
        d = t * t * self.d
        return self.spec.a * d + self.spec.b * d * d


def _bracket(P, t0: float = 1.0, bounds=T_BOUNDS):
    """Expand [t_lo, t_hi] around t0 until P(t_lo) > 0 > P(t_hi)."""
    lo, hi = t0, t0
    while not P(lo) > 0:
        lo *= 0.5
        if lo < bounds[0]:
            raise FiberError("no Pohozaev crossing: P stays nonpositive for small t")
    while not P(hi) < 0:
        hi *= 2.0
        if hi > bounds[1]:
            raise FiberError("no Pohozaev crossing: P stays nonnegative for large t")
    return lo, hi


def scaled_root(grid: RadialGrid, spec: NonlinearitySpec, u, d=None, weights=None,
                bounds=T_BOUNDS) -> float:
    """t_u of the rescaled fiber, to rounding.

    ``d`` and ``weights`` may be supplied when the caller already holds the
    kinetic term and quadrature weights of ``u``.  ``bounds`` limits the
    bracket expansion.
    """
    f = _ScaledFiber(grid, spec, u, d, weights)
    if f.d == 0 and not np.any(f.u):
        raise ValueError("fiber undefined for the zero field")
    lo, hi = _bracket(f.P, bounds=bounds)
    lt = brentq(lambda x: f.P(math.exp(x)), math.log(lo), math.log(hi),
                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(lt)


def rescaled_projection(grid: RadialGrid, spec: NonlinearitySpec, u):
    """Exact fiber projection by rescaling the grid.

    Returns ``(t_u, grid', values')`` with grid' of radius R/t_u and
    values' = t_u^{N/2} u.  P vanishes on the result to rounding and the
    mass is unchanged.
    """
    t = scaled_root(grid, spec, u)
    return t, grid.scaled(1.0 / t), t ** (0.5 * grid.N) * _values(grid, u)


def fiber_scan(grid: RadialGrid, spec: NonlinearitySpec, u, t_min: float = 0.25,
               t_max: float = 4.0, K: int = 41) -> FiberScan:
    """Sample I[t⋆u] and P[t⋆u] at K log-spaced t in [t_min, t_max]."""
    v = _values(grid, u)
    if not np.any(v):
        raise ValueError("fiber scan undefined for the zero field")
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    ts = np.geomspace(t_min, t_max, K)
    I = np.empty(K)
    P = np.empty(K)
    for k, t in enumerate(ts):
        e = energy(grid, spec, fiber_action(grid, v, t))
        I[k], P[k] = e.I, e.P
    sgn = np.sign(P)
    changes = int(np.count_nonzero(sgn[1:] != sgn[:-1]))
    bracketed = bool(P[0] > 0 and P[-1] < 0)
    t_u = None
    if bracketed:
        k = int(np.flatnonzero(sgn[1:] != sgn[:-1])[0])
        t_u = _refine_root(grid, spec, v, ts[k], ts[k + 1])
    return FiberScan(ts, I, P, t_u, bracketed, changes)


def _resampled_P(grid, spec, v):
    def P(t):
        return energy(grid, spec, fiber_action(grid, v, t)).P
    return P


def _refine_root(grid, spec, v, lo, hi) -> float:
    P = _resampled_P(grid, spec, v)
    return math.exp(brentq(lambda lt: P(math.exp(lt)), math.log(lo), math.log(hi),
                           xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))


def project_to_pohozaev(grid: RadialGrid, spec: NonlinearitySpec, u,
                        rtol: float = 1e-10) -> tuple[float, Field]:
    """Locate t_u with P[t_u⋆u] = 0 and return ``(t_u, t_u⋆u)``.

    The rescaled fiber gives a bracket, then Brent's method refines the
    root of the resampled P.  Raises ``FiberError`` if no crossing exists in
    t ∈ [1e-6, 1e6].
    """
    v = _values(grid, u)
    if not np.any(v):
        raise ValueError("projection undefined for the zero field")
    t0 = scaled_root(grid, spec, v)
    P = _resampled_P(grid, spec, v)
    lo, hi = t0 / 1.05, t0 * 1.05
    while not P(lo) > 0:
        lo /= 2.0
        if lo < T_BOUNDS[0]:
            raise FiberError("no Pohozaev crossing: P stays nonpositive for small t")
    while not P(hi) < 0:
        hi *= 2.0
        if hi > T_BOUNDS[1]:
            raise FiberError("no Pohozaev crossing: P stays nonnegative for large t")
    t = _refine_root(grid, spec, v, lo, hi)
    out = fiber_action(grid, v, t)
    e = energy(grid, spec, out)
    scale = spec.a * e.d + spec.b * e.d**2
    if abs(e.P) > rtol * scale:
        # Brent stops on the bracket width; finish with secant steps in t
        t0, t1 = t, t * (1 + 1e-9)
        p0, p1 = e.P, P(t1)
        for _ in range(20):
            if p1 == p0:
                break
            t0, t1 = t1, t1 - p1 * (t1 - t0) / (p1 - p0)
            p0, p1 = p1, P(t1)
            if abs(p1) <= rtol * scale:
                break
        t = t1
        out = fiber_action(grid, v, t)
    return t, out


def random_profile(grid: RadialGrid, rng: np.random.Generator, width: float = 1.0,
                   c: float | None = None) -> np.ndarray:
    """Positive decreasing Gaussian mixture, zero at R, optionally of mass c."""
    r = grid.r
    n = int(rng.integers(1, 4))
    amps = rng.uniform(0.2, 1.0, n)
    scales = width * rng.uniform(0.5, 1.5, n)
    u = sum(A * np.exp(-0.5 * (r / s) ** 2) for A, s in zip(amps, scales))
    u[-1] = 0.0
    if c is not None:
        u *= math.sqrt(c / float(grid.weights @ (u * u)))
    return u


def kinetic_floor(grid: RadialGrid, spec: NonlinearitySpec, c: float, n: int = 50,
                  seed: int = 0) -> float:
    """Empirical δ_c: min of ‖∇(t_u⋆u)‖₂ over random mass-c profiles."""
    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(n):
        u = random_profile(grid, rng, grid.R / 12.0, c)
        t = scaled_root(grid, spec, u)
        best = min(best, t * math.sqrt(kinetic(grid, u)))
    return best
