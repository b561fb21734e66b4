"""Energy, Pohozaev functional, Nehari residual, multipliers and PDE residual.

All integrals use the grid quadrature, and ‖∇u‖² uses the staggered kinetic
form of ``radial_grid``.  Every function accepts either a ``Field`` or a raw
array of nodal values on ``grid``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nonlinearity import NonlinearitySpec, evaluate
from .radial_grid import Field, RadialGrid, _values, kinetic, laplacian, mass, resample

MULTIPLIER_MODES = ("nehari", "pohozaev-difference")


@dataclass(frozen=True)
class EnergyReport:
    """Pieces of I[u] and P[u]."""

    kineticA: float
    kineticB: float
    potential: float
    I: float
    P: float
    mass: float
    d: float

    def reconstruct(self) -> float:
        return 0.5 * self.kineticA + 0.25 * self.kineticB - self.potential


@dataclass(frozen=True)
class Integrals:
    """Quadratures that enter the identities."""

    mass: float
    d: float
    intG: float
    intGt: float
    intgu: float


def integrals(grid: RadialGrid, spec: NonlinearitySpec, u) -> Integrals:
    v = _values(grid, u)
    g, G, Gt = evaluate(spec, v)
    w = grid.weights
    return Integrals(mass(grid, v), kinetic(grid, v), float(w @ G), float(w @ Gt),
                     float(w @ (g * v)))


def _energy_from(spec: NonlinearitySpec, N: int, q: Integrals) -> EnergyReport:
    kA = spec.a * q.d
    kB = spec.b * q.d * q.d
    I = 0.5 * kA + 0.25 * kB - q.intG
    P = kA + kB - N * q.intGt
    return EnergyReport(kA, kB, q.intG, I, P, q.mass, q.d)


def energy(grid: RadialGrid, spec: NonlinearitySpec, u) -> EnergyReport:
    """I[u] = (a/2)‖∇u‖² + (b/4)‖∇u‖⁴ - ∫G(u), together with P[u]."""
    return _energy_from(spec, grid.N, integrals(grid, spec, u))


def pohozaev(grid: RadialGrid, spec: NonlinearitySpec, u) -> float:
    """P[u] = a‖∇u‖² + b‖∇u‖⁴ - N ∫G̃(u)."""
    return energy(grid, spec, u).P


def nehari_residual(grid: RadialGrid, spec: NonlinearitySpec, u, lam: float) -> float:
    """a‖∇u‖² + b‖∇u‖⁴ + λ‖u‖² - ∫g(u)u."""
    q = integrals(grid, spec, u)
    return spec.a * q.d + spec.b * q.d**2 + lam * q.mass - q.intgu


def lagrange_multiplier(grid: RadialGrid, spec: NonlinearitySpec, u,
                        mode: str = "nehari") -> float:
    """Multiplier λ from the Nehari identity or the Pohozaev-difference formula.

    ``nehari``:               λ c = ∫g(u)u - a‖∇u‖² - b‖∇u‖⁴
    ``pohozaev-difference``:  λ c = ∫[N G(u) - ((N-2)/2) g(u)u]

    The two coincide exactly when P[u] = 0; in general
    λ_pd - λ_nehari = P[u] / c.
    """
    if mode not in MULTIPLIER_MODES:
        raise ValueError(f"mode must be one of {MULTIPLIER_MODES}")
    q = integrals(grid, spec, u)
    if not q.mass > 0:
        raise ValueError("undefined multiplier: field has zero mass")
    return _multiplier_from(spec, grid.N, q, mode)


def _multiplier_from(spec, N, q: Integrals, mode: str) -> float:
    if mode == "nehari":
        return (q.intgu - spec.a * q.d - spec.b * q.d**2) / q.mass
    return (N * q.intG - 0.5 * (N - 2) * q.intgu) / q.mass


def pde_residual(grid: RadialGrid, spec: NonlinearitySpec, u, lam: float):
    """-(a + b‖∇u‖²)Δu + λu - g(u) on the nodes r_0 .. r_{M-2}.

    Returns ``(residual, sup_norm)``; the Dirichlet node r = R is excluded.
    """
    v = _values(grid, u)
    coef = spec.a + spec.b * kinetic(grid, v)
    g = evaluate(spec, v)[0]
    res = (-coef * laplacian(grid, v) + lam * v - g)[:-1]
    return res, float(np.max(np.abs(res)))


def fiber_action(grid: RadialGrid, u, t: float) -> Field:
    """(t⋆u)(r) = t^{N/2} u(t r), resampled by monotone cubic interpolation."""
    if not t > 0:
        raise ValueError(f"fiber parameter t={t} must be positive")
    v = _values(grid, u)
    if t == 1.0:
        return Field(grid, v)
    return Field(grid, t ** (0.5 * grid.N) * resample(grid, v, t * grid.r))
