"""Ground states of the scalar limit equation -m Δw + w = K w^{q-1}.

``solve_limit_profile`` shoots on w(0) with a fixed-step RK4 integrator and
bisects between the two failure modes: the trajectory crosses zero, or it
turns upward while positive.  Past the point where double precision can no
longer hold the trajectory on the decaying branch, the profile continues
with the decaying solution of the linearized equation, matched in value.

The module also provides the N = 1 closed-form soliton and the algebraic
self-consistency oracle for the pure-power Kirchhoff problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import k0e

from .nonlinearity import critical_exponent
from .radial_grid import Field, RadialGrid, kinetic, laplacian, mass

CROSSED, TURNED, UNDECIDED = 1, 2, 0


class ShootingError(RuntimeError):
    """Shooting failed to isolate a decaying positive profile."""


@njit(cache=True)
def _accel(r, w, dw, N, m, K, q):
    return -(N - 1) * dw / r + (w - K * abs(w) ** (q - 2) * w) / m


@njit(cache=True)
def _shoot(s, N, m, K, q, h, nsteps, floor, out, stride):
    """RK4 from the series start at r = h.  Returns (status, last step).

    ``out[k]`` receives w at r = k * stride * h for every step reached.
    """
    f0 = (s - K * abs(s) ** (q - 2) * s) / m
    w = s + f0 * h * h / (2.0 * N)
    dw = f0 * h / N
    out[0] = s
    for n in range(1, nsteps):
        if n % stride == 0:
            out[n // stride] = w
        if w < -floor:
            return CROSSED, n
        if dw > 0.0 and w > 0.0:
            return TURNED, n
        r = n * h
        k1w = dw
        k1d = _accel(r, w, dw, N, m, K, q)
        k2w = dw + 0.5 * h * k1d
        k2d = _accel(r + 0.5 * h, w + 0.5 * h * k1w, k2w, N, m, K, q)
        k3w = dw + 0.5 * h * k2d
        k3d = _accel(r + 0.5 * h, w + 0.5 * h * k2w, k3w, N, m, K, q)
        k4w = dw + h * k3d
        k4d = _accel(r + h, w + h * k3w, k4w, N, m, K, q)
        w = w + h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        dw = dw + h * (k1d + 2.0 * k2d + 2.0 * k3d + k4d) / 6.0
    return UNDECIDED, nsteps


@dataclass(frozen=True)
class LimitProfile:
    """Positive radial ground state of -m Δw + w = K w^{q-1}."""

    N: int
    m: float
    K: float
    q: float
    profile: Field
    w0: float
    mass: float
    kinetic: float
    residual: float
    r_match: float

    @property
    def grid(self) -> RadialGrid:
        return self.profile.grid

    @property
    def values(self) -> np.ndarray:
        return self.profile.values

    def nehari_gap(self) -> float:
        """Relative gap in m‖∇w‖² + ‖w‖² = K∫w^q."""
        lhs = self.m * self.kinetic + self.mass
        rhs = self.K * float(self.grid.weights @ self.values**self.q)
        return abs(lhs - rhs) / abs(rhs)

    def pohozaev_gap(self) -> float:
        """Relative gap in (N-2)m‖∇w‖² + N‖w‖² = (2N K / q)∫w^q."""
        N = self.N
        lhs = (N - 2) * self.m * self.kinetic + N * self.mass
        rhs = 2 * N * self.K / self.q * float(self.grid.weights @ self.values**self.q)
        return abs(lhs - rhs) / abs(rhs)


def _check_window(N: int, q: float) -> None:
    if N not in (1, 2, 3):
        raise ValueError(f"dimension N={N} not in {{1, 2, 3}}")
    if not 2 < q < critical_exponent(N):
        raise ValueError(f"q={q} outside the subcritical window (2, {critical_exponent(N)})")


def default_grid(N: int, m: float, K: float, q: float, M: int = 4096) -> RadialGrid:
    """Grid reaching about 30 decay lengths √m."""
    return RadialGrid(N, 30.0 * math.sqrt(m), M)


def _linear_tail(N: int, x: np.ndarray) -> np.ndarray:
    """Decaying radial solution of -Δφ + φ = 0 up to a constant, times e^{x}."""
    if N == 1:
        return np.ones_like(x)
    if N == 2:
        return k0e(x)
    return 1.0 / x


def solve_limit_profile(N: int, m: float, K: float, q: float, tol: float = 1e-6,
                        grid: RadialGrid | None = None, max_refine: int = 5,
                        step_scale: float = 0.001) -> LimitProfile:
    """Shoot for the positive decaying radial solution of -mΔw + w = K w^{q-1}.

    Args:
        N, m, K, q: dimension, diffusion, coupling and exponent.
        tol: ceiling on the discrete residual, relative to ‖K w^{q-1}‖_∞.
        grid: sampling grid; when omitted a default grid is used and its node
            count is doubled (up to ``max_refine`` times) until the residual
            meets ``tol``.  Raises ``ShootingError`` if it never does.
        step_scale: RK4 step as a fraction of the core length scale.
    """
    _check_window(N, q)
    if not (m > 0 and K > 0):
        raise ValueError("m and K must be positive")
    refine = grid is None
    grid = default_grid(N, m, K, q) if grid is None else grid
    if grid.N != N:
        raise ValueError("grid dimension does not match N")
    for _ in range(max_refine + 1):
        prof = _shoot_on_grid(grid, m, K, q, step_scale)
        if prof.residual <= tol or not refine:
            return prof
        grid = RadialGrid(N, grid.R, 2 * grid.M - 1)
    raise ShootingError(f"residual {prof.residual:.3e} above tol={tol:g} "
                        f"after refining to M={prof.grid.M}")


def _bisect(shoot, s_eq):
    lo = s_eq * (1.0 + 1e-9)
    hi = 2.0 * s_eq
    while shoot(hi)[0] != CROSSED:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12 * s_eq:
            raise ShootingError("no zero-crossing initial value found")
    if shoot(lo)[0] == CROSSED:
        raise ShootingError("lower shooting value already crosses zero")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        status, _ = shoot(mid)
        if status == CROSSED:
            hi = mid
        elif status == TURNED:
            lo = mid
        else:
            break
    return lo, hi


def _shoot_on_grid(grid: RadialGrid, m, K, q, step_scale) -> LimitProfile:
    N = grid.N
    s_eq = K ** (-1.0 / (q - 2))
    buf = np.zeros(grid.M + 1)

    def shooter(stride):
        h = grid.h / stride
        nsteps = (grid.M - 1) * stride + 1

        def shoot(s):
            return _shoot(s, N, m, K, q, h, nsteps, 1e-14 * s, buf, stride)
        return shoot

    # a pass on the grid spacing locates w(0) roughly; the core length at
    # that amplitude then sets the RK4 step
    lo, hi = _bisect(shooter(1), s_eq)
    k_core = math.sqrt((q - 1) * K * hi ** (q - 2) / m)
    stride = max(1, math.ceil(grid.h * k_core / step_scale))
    shoot = shooter(stride)
    lo, hi = _bisect(shoot, s_eq)
    s = 0.5 * (lo + hi)
    status, last = shoot(s)
    # trust the trajectory while it is well above the separation noise
    n_nodes = min(grid.M, last // stride)
    w = buf[: n_nodes].copy()
    cut = np.flatnonzero(w < 1e-5 * s)
    if cut.size == 0 and n_nodes == grid.M:
        k_match = grid.M - 1
    elif cut.size == 0:
        raise ShootingError("bisection collapsed before the profile decayed")
    else:
        k_match = int(cut[0])
    vals = np.zeros(grid.M)
    vals[: k_match + 1] = w[: k_match + 1]
    r = grid.r
    rm = r[k_match]
    kappa = 1.0 / math.sqrt(m)
    if k_match < grid.M - 1:
        x = kappa * r[k_match:]
        tail = _linear_tail(N, x) * np.exp(-(x - x[0]))
        vals[k_match:] = vals[k_match] * tail / tail[0]
    vals[-1] = 0.0
    prof = Field(grid, vals)
    res = -m * laplacian(grid, vals) + vals - K * vals ** (q - 1)
    scale = K * float(np.max(vals)) ** (q - 1)
    return LimitProfile(N, m, K, q, prof, float(vals[0]), mass(grid, vals),
                        kinetic(grid, vals), float(np.max(np.abs(res[:-1]))) / scale, rm)


def closed_form_soliton_1d(m: float, K: float, q: float,
                           grid: RadialGrid | None = None) -> Field:
    """w(x) = K^{-1/(q-2)} (q/2)^{1/(q-2)} sech^{2/(q-2)}(((q-2)/2) x / √m)."""
    if not q > 2:
        raise ValueError(f"q={q} must exceed 2")
    grid = default_grid(1, m, K, q) if grid is None else grid
    if grid.N != 1:
        raise ValueError("closed form applies to N = 1 only")
    return Field(grid, soliton_1d_values(m, K, q, grid.r))


def soliton_1d_values(m: float, K: float, q: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    amp = K ** (-1.0 / (q - 2)) * (q / 2.0) ** (1.0 / (q - 2))
    z = 0.5 * (q - 2) * np.abs(x) / math.sqrt(m)
    # sech(z) = 2 e^{-z} / (1 + e^{-2z}) avoids overflow in cosh
    sech = 2.0 * np.exp(-z) / (1.0 + np.exp(-2.0 * z))
    return amp * sech ** (2.0 / (q - 2))


@dataclass(frozen=True)
class HomogeneousOracle:
    """Self-consistent scaling u = θ w(μ x) for the pure-power problem."""

    theta: float
    mu: float
    lam: float
    energy: float
    d: float
    residuals: tuple[float, float, float]


def homogeneous_selfconsistency_oracle(N: int, a: float, b: float, p: float, c: float,
                                       base: LimitProfile, max_iter: int = 200
                                       ) -> HomogeneousOracle:
    """Solve (a + bD) μ² = θ^{p-2} = λ and θ² μ^{-N} ‖w‖² = c.

    ``base`` is the (m, K, q) = (1, 1, p) profile.  D = θ² μ^{2-N}‖∇w‖².
    The 2x2 system in (log θ, log μ) is solved by damped Newton from
    (θ, μ) = (1, 1); λ = θ^{p-2}.  The energy uses ∫w^p = ‖∇w‖² + ‖w‖².
    """
    if base.m != 1 or base.K != 1 or base.q != p or base.N != N:
        raise ValueError("base profile must solve -Δw + w = w^{p-1} in the same N")
    mw, kw = base.mass, base.kinetic

    def F(x):
        lt, lm = x
        D = math.exp(2 * lt + (2 - N) * lm) * kw
        return np.array([
            math.log(a + b * D) + 2 * lm - (p - 2) * lt,
            2 * lt - N * lm + math.log(mw) - math.log(c),
        ])

    def J(x):
        lt, lm = x
        D = math.exp(2 * lt + (2 - N) * lm) * kw
        f = b * D / (a + b * D)
        return np.array([[2 * f - (p - 2), (2 - N) * f + 2], [2.0, -float(N)]])

    x = np.zeros(2)
    fx = F(x)
    for _ in range(max_iter):
        if np.max(np.abs(fx)) < 1e-14:
            break
        dx = np.linalg.solve(J(x), -fx)
        step = 1.0
        while step > 1e-8:
            xn = x + step * dx
            fn = F(xn)
            if np.linalg.norm(fn) < (1 - 1e-4 * step) * np.linalg.norm(fx):
                break
            step *= 0.5
        else:
            raise RuntimeError("oracle Newton iteration stalled")
        x, fx = xn, fn
    else:
        raise RuntimeError("oracle Newton iteration did not converge")
    theta, mu = math.exp(x[0]), math.exp(x[1])
    lam = theta ** (p - 2)
    D = theta**2 * mu ** (2 - N) * kw
    intwp = kw + mw
    E = 0.5 * a * D + 0.25 * b * D * D - theta**p * mu ** (-N) * intwp / p
    res = (
        abs((a + b * D) * mu**2 - lam) / lam,
        abs(theta ** (p - 2) - lam) / lam,
        abs(theta**2 * mu ** (-N) * mw - c) / c,
    )
    return HomogeneousOracle(theta, mu, lam, E, D, res)


def homogeneous_local_closed_form(N: int, a: float, p: float, c: float, base: LimitProfile):
    """b = 0 reduction: a μ² = θ^{p-2}, θ² μ^{-N} ‖w‖² = c, solved explicitly."""
    mw = base.mass
    # θ = (c μ^N / mw)^{1/2}; a μ² = (c/mw)^{(p-2)/2} μ^{N(p-2)/2}
    e = N * (p - 2) / 2.0 - 2.0
    mu = (a * (mw / c) ** ((p - 2) / 2.0)) ** (1.0 / e)
    theta = math.sqrt(c * mu**N / mw)
    return theta, mu, theta ** (p - 2)

