"""Uniform radial grids for radially symmetric fields on R^N, N in {1, 2, 3}.

The grid carries quadrature weights for volume integrals and a staggered
first-derivative operator.  The kinetic form and the Laplacian are built from
the same operator, so the discrete Green identity and self-adjointness hold
to rounding.  Interior accuracy is fourth order in the spacing.

Conventions
-----------
* ``r_i = i h`` with ``h = R / (M - 1)``.
* The node ``r = R`` is a homogeneous Dirichlet boundary.
* Fields are even at the origin.  For N = 3 the kinetic form acts on
  ``v = r u`` (odd at the origin), which keeps the stencil fourth order near
  ``r = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicHermiteSpline

SPHERE_AREA = {1: 2.0, 2: 2.0 * np.pi, 3: 4.0 * np.pi}
MIN_NODES = 64

# fourth-order staggered derivative: (u_{j-1} - 27 u_j + 27 u_{j+1} - u_{j+2}) / (24 h)
_STAGGERED = (1.0, -27.0, 27.0, -1.0)


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids."""


def _ball_measure(N: int, R: float) -> float:
    return SPHERE_AREA[N] * R**N / N


@dataclass(frozen=True)
class RadialGrid:
    """Uniform radial grid on [0, R] with M nodes.

    Attributes:
        N: ambient dimension.
        R: truncation radius.
        M: number of nodes (including r = 0 and r = R).
    """

    N: int
    R: float
    M: int

    def __post_init__(self):
        if self.N not in (1, 2, 3):
            raise GridError(f"dimension N={self.N} not in {{1, 2, 3}}")
        if not (np.isfinite(self.R) and self.R > 0):
            raise GridError(f"radius R={self.R} must be positive and finite")
        if int(self.M) != self.M or self.M < MIN_NODES:
            raise GridError(f"node count M={self.M} below the floor {MIN_NODES}")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "M", int(self.M))

    @property
    def h(self) -> float:
        return self.R / (self.M - 1)

    @cached_property
    def r(self) -> np.ndarray:
        r = np.arange(self.M) * self.h
        r[-1] = self.R
        r.flags.writeable = False
        return r

    @cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weights for ``∫_{R^N} f dx`` over the ball of radius R.

        Trapezoid weights on ``σ r^{N-1} f``.  Gregory end corrections at R
        make the rule fourth order at the truncation radius.  For N = 2 an
        Euler-Maclaurin term at the origin is folded into the first two
        nodes; for N = 1 and N = 3 the integrand is even and the trapezoid
        rule is already spectrally accurate at r = 0.
        """
        h, s, N = self.h, SPHERE_AREA[self.N], self.N
        area = s * self.r ** (N - 1)
        w = area * h
        w[0] *= 0.5
        w[-1] *= 0.5
        w[-1] -= h * area[-1] / 8.0
        w[-2] += h * area[-2] / 6.0
        w[-3] -= h * area[-3] / 24.0
        if N == 2:
            # h^2/12 f(0) origin term, plus an equal-and-opposite shift between
            # nodes 0 and 1 that makes the Laplacian exact for r^2 there
            w[0] += s * h * h / 12.0 + s * h * h / 96.0
            w[1] -= s * h * h / 96.0
        w.flags.writeable = False
        return w

    @cached_property
    def edge_weights(self) -> np.ndarray:
        """Midpoint weights of the kinetic form, one per staggered edge."""
        h, s = self.h, SPHERE_AREA[self.N]
        if self.N == 3:
            a = np.full(self.M - 1, s * h)
        else:
            rm = (np.arange(self.M - 1) + 0.5) * h
            a = s * h * rm ** (self.N - 1)
        a.flags.writeable = False
        return a

    @cached_property
    def gradient_operator(self) -> sp.csr_matrix:
        """Staggered derivative matrix B, shape (M-1, M).

        ``(B u)_j`` approximates ``u'(r_{j+1/2})`` (N = 1, 2) or
        ``(r u)'(r_{j+1/2})`` (N = 3).  Ghost values: even (odd for N = 3)
        reflection at the origin, linear odd reflection about R.
        """
        M, h = self.M, self.h
        parity = -1.0 if self.N == 3 else 1.0
        rows, cols, vals = [], [], []
        for j in range(M - 1):
            for k, cf in zip((j - 1, j, j + 1, j + 2), _STAGGERED):
                cf = cf / (24.0 * h)
                if k < 0:
                    k, cf = -k, parity * cf
                if k > M - 1:
                    # u_M = 2 u_{M-1} - u_{M-2}
                    rows += [j, j]
                    cols += [M - 1, M - 2]
                    vals += [2.0 * cf, -cf]
                    continue
                rows.append(j)
                cols.append(k)
                vals.append(cf)
        D = sp.csr_matrix((vals, (rows, cols)), shape=(M - 1, M))
        if self.N == 3:
            D = D @ sp.diags(self.r)
        return sp.csr_matrix(D)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """Symmetric positive semidefinite matrix S with ``u^T S u = ‖∇u‖²``."""
        B = self.gradient_operator
        return sp.csr_matrix(B.T @ sp.diags(self.edge_weights) @ B)

    @cached_property
    def laplacian_matrix(self) -> sp.csr_matrix:
        """Sparse radial Laplacian (M x M).  The Dirichlet row M-1 is zero."""
        w = self.weights
        inv = np.zeros(self.M)
        inv[w > 0] = 1.0 / w[w > 0]
        inv[-1] = 0.0
        L = sp.lil_matrix(-(sp.diags(inv) @ self.stiffness))
        if self.N == 3:
            # w_0 = 0 decouples u_0 from the form; use Δu(0) = 3 u''(0)
            h2 = self.h**2
            L[0, :] = 0.0
            L[0, 0] = -15.0 / (2.0 * h2)
            L[0, 1] = 16.0 / (2.0 * h2)
            L[0, 2] = -1.0 / (2.0 * h2)
        return sp.csr_matrix(L)

    @property
    def ball_measure(self) -> float:
        return _ball_measure(self.N, self.R)

    def scaled(self, factor: float) -> "RadialGrid":
        """Same node count on radius ``factor * R``."""
        return RadialGrid(self.N, self.R * factor, self.M)

    def __repr__(self) -> str:
        return f"RadialGrid(N={self.N}, R={self.R!r}, M={self.M})"


@dataclass(frozen=True)
class Field:
    """Samples of a radial function on a grid."""

    grid: RadialGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.M,):
            raise GridError(f"field has shape {v.shape}, grid expects ({self.grid.M},)")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return mass(self.grid, self.values)

    @property
    def kinetic(self) -> float:
        return kinetic(self.grid, self.values)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __len__(self) -> int:
        return self.grid.M


def build_grid(N: int, R: float, M: int) -> RadialGrid:
    """Construct a validated ``RadialGrid``."""
    return RadialGrid(N, R, M)


def _values(grid: RadialGrid, f) -> np.ndarray:
    if isinstance(f, Field):
        if f.grid != grid:
            raise GridError(f"field lives on {f.grid}, expected {grid}")
        return f.values
    v = np.asarray(f, dtype=float)
    if v.shape != (grid.M,):
        raise GridError(f"array of shape {v.shape} does not match {grid}")
    return v


def integrate(grid: RadialGrid, f) -> float:
    """Quadrature ``Σ w_i f_i`` of a radial function over the ball."""
    return float(grid.weights @ _values(grid, f))


def mass(grid: RadialGrid, u) -> float:
    u = _values(grid, u)
    return float(grid.weights @ (u * u))


def edge_gradient(grid: RadialGrid, u) -> np.ndarray:
    """Staggered derivative ``B u`` (see ``RadialGrid.gradient_operator``)."""
    return grid.gradient_operator @ _values(grid, u)


def kinetic(grid: RadialGrid, u) -> float:
    """Kinetic term ``‖∇u‖²`` from the staggered derivative."""
    du = edge_gradient(grid, u)
    return float(grid.edge_weights @ (du * du))


def laplacian(grid: RadialGrid, u) -> np.ndarray:
    """Radial Laplacian; the value at the Dirichlet node r = R is set to 0."""
    return grid.laplacian_matrix @ _values(grid, u)


def norms(grid: RadialGrid, u) -> tuple[float, float, float]:
    """Return ``(‖u‖₂², ‖∇u‖₂², ‖u‖_∞)``."""
    v = _values(grid, u)
    return mass(grid, v), kinetic(grid, v), float(np.max(np.abs(v)))


def _ghosted(u: np.ndarray, pad: int = 2) -> np.ndarray:
    left = u[pad:0:-1]
    right = 2.0 * u[-1] - u[-2 : -2 - pad : -1]
    return np.concatenate([left, u, right])


def nodal_derivatives(grid: RadialGrid, u) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order central first and second derivatives at the nodes."""
    v = _ghosted(_values(grid, u))
    h = grid.h
    um2, um1, u0, up1, up2 = v[:-4], v[1:-3], v[2:-2], v[3:-1], v[4:]
    d1 = (um2 - 8.0 * um1 + 8.0 * up1 - up2) / (12.0 * h)
    d2 = (-um2 + 16.0 * um1 - 30.0 * u0 + 16.0 * up1 - up2) / (12.0 * h * h)
    return d1, d2


def _hyman_filter(d: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Clip Hermite slopes so each locally monotone stretch stays monotone."""
    d = d.copy()
    left = np.concatenate([[delta[0]], delta])
    right = np.concatenate([delta, [delta[-1]]])
    mono = left * right > 0
    bound = 3.0 * np.minimum(np.abs(left), np.abs(right))
    s = np.sign(right)
    clipped = s * np.clip(s * d, 0.0, bound)
    d[mono] = clipped[mono]
    return d


def interpolator(grid: RadialGrid, u) -> CubicHermiteSpline:
    """Monotone cubic Hermite interpolant with fourth-order slopes."""
    v = _values(grid, u)
    d1, _ = nodal_derivatives(grid, v)
    d1[0] = 0.0
    delta = np.diff(v) / grid.h
    return CubicHermiteSpline(grid.r, v, _hyman_filter(d1, delta), extrapolate=False)


def resample(grid: RadialGrid, u, r_new: Iterable[float]) -> np.ndarray:
    """Evaluate the monotone interpolant at ``r_new``; zero beyond R."""
    r_new = np.asarray(r_new, dtype=float)
    out = np.zeros_like(r_new)
    inside = r_new <= grid.R
    out[inside] = interpolator(grid, u)(np.abs(r_new[inside]))
    return out


def transfer(field_: Field, grid: RadialGrid) -> Field:
    """Resample a field onto another grid of the same dimension."""
    if field_.grid.N != grid.N:
        raise GridError("cannot transfer between dimensions")
    return Field(grid, resample(field_.grid, field_.values, grid.r))


def write_snapshot(path, u: Field, header: dict | None = None) -> None:
    """Write a field as text: grid header then ``r_i u_i`` rows."""
    g = u.grid
    lines = [f"# N={g.N} R={g.R!r} M={g.M}"]
    for k, val in (header or {}).items():
        lines.append(f"# {k}={val}")
    body = "\n".join(f"{ri:.16e} {ui:.16e}" for ri, ui in zip(g.r, u.values))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n" + body + "\n")


def read_snapshot(path) -> Field:
    """Read a field written by ``write_snapshot``."""
    meta = None
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# N="):
                meta = dict(tok.split("=", 1) for tok in line[1:].split())
                break
    if meta is None:
        raise GridError(f"{path}: missing '# N=... R=... M=...' header")
    grid = RadialGrid(int(meta["N"]), float(meta["R"]), int(meta["M"]))
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape != (grid.M, 2):
        raise GridError(f"{path}: expected {grid.M} rows of 'r u', got {data.shape}")
    if not np.allclose(data[:, 0], grid.r, rtol=1e-14, atol=1e-300):
        raise GridError(f"{path}: node column disagrees with header grid")
    return Field(grid, data[:, 1])
