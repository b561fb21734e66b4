"""Blow-up rescalings, distances to the limit profiles and mass sweeps.

Large mass:  v(x) = λ^{1/(2-α)} u(x/√λ), compared with U solving -aΔU + U = A U^{α-1}.
Small mass:  v(x) = λ^{1/(2-β)} u(√d x/√λ), compared with V solving -bΔV + V = B V^{β-1}.

Both maps are dilations, so ``rescale`` applies them exactly by scaling the
grid radius and the nodal values; no interpolation is involved.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .functionals import integrals
from .limit_profiles import LimitProfile, solve_limit_profile
from .nonlinearity import NonlinearitySpec, evaluate
from .radial_grid import (Field, RadialGrid, kinetic, laplacian, mass,
                          nodal_derivatives, resample)
from .solver import GroundState, SolverOptions, solve_ground_state

MODES = ("large-mass", "small-mass")
QUANTITIES = ("M", "lambda_c", "d+d2", "intG", "intGtilde", "intgu")


# --------------------------------------------------------------------------
# rescaling


def _mode_params(gs: GroundState, spec: NonlinearitySpec, mode: str):
    """(exponent q, spatial factor k, amplitude factor) with v(x) = amp·u(x/k)."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    alpha, beta = spec.exponents
    lam = gs.lam
    if not lam > 0:
        raise ValueError("rescaling needs a positive multiplier")
    if mode == "large-mass":
        q, k = alpha, math.sqrt(lam)
    else:
        q, k = beta, math.sqrt(lam / gs.d)
    return q, k, lam ** (1.0 / (2.0 - q))


def rescale(gs: GroundState, spec: NonlinearitySpec | None = None,
            mode: str = "large-mass") -> Field:
    """Blow-up rescaled field v_c on the dilated grid (radius k·R)."""
    spec = spec or gs.spec
    _, k, amp = _mode_params(gs, spec, mode)
    grid = gs.grid.scaled(k)
    return Field(grid, amp * gs.u.values)


def rescaled_equation(gs: GroundState, spec: NonlinearitySpec | None = None,
                      mode: str = "large-mass"):
    """Coefficient and right-hand side of the equation solved by v_c.

    Returns ``(coef, f)`` with -coef Δv + v = f(v):
    large mass coef = a + b d, small mass coef = a/d + b, and
    f(v) = g(λ^{1/(q-2)} v) / λ^{(q-1)/(q-2)}.
    """
    spec = spec or gs.spec
    q, _, _ = _mode_params(gs, spec, mode)
    lam, d = gs.lam, gs.d
    coef = spec.a + spec.b * d if mode == "large-mass" else spec.a / d + spec.b
    s_in = lam ** (1.0 / (q - 2.0))
    s_out = lam ** ((q - 1.0) / (q - 2.0))

    def f(v):
        return evaluate(spec, s_in * np.asarray(v))[0] / s_out
    return coef, f


def rescaled_residual(gs: GroundState, spec: NonlinearitySpec | None = None,
                      mode: str = "large-mass") -> float:
    """sup |-coef Δv + v - f(v)| / ‖f(v)‖_∞ over the interior nodes."""
    spec = spec or gs.spec
    v = rescale(gs, spec, mode)
    coef, f = rescaled_equation(gs, spec, mode)
    fv = f(v.values)
    res = (-coef * laplacian(v.grid, v) + v.values - fv)[:-1]
    return float(np.max(np.abs(res)) / np.max(np.abs(fv)))


# --------------------------------------------------------------------------
# distances


class Distances(NamedTuple):
    L2: float
    H1: float
    sup: float


def common_grid(a: RadialGrid, b: RadialGrid) -> RadialGrid:
    """Grid covering both supports at the coarser of the two spacings."""
    if a.N != b.N:
        raise ValueError("fields live in different dimensions")
    R = max(a.R, b.R)
    h = max(a.h, b.h)
    return RadialGrid(a.N, R, max(int(math.ceil(R / h)) + 1, 64))


def _on(grid: RadialGrid, f: Field) -> np.ndarray:
    if f.grid == grid:
        return np.asarray(f.values)
    return resample(f.grid, f.values, grid.r)


def profile_distance(v: Field, w: Field) -> Distances:
    """L², H¹ and sup distances between two radial fields.

    Both fields are resampled onto ``common_grid``; outside its own radius a
    field is taken to vanish.
    """
    grid = common_grid(v.grid, w.grid)
    diff = _on(grid, v) - _on(grid, w)
    l2 = mass(grid, diff)
    k = kinetic(grid, diff)
    return Distances(math.sqrt(l2), math.sqrt(l2 + k), float(np.max(np.abs(diff))))


def window_distances(v: Field, w: Field, radius: float = 5.0) -> tuple[float, float, float]:
    """sup over |x| ≤ radius of the differences of (v, v', v'')."""
    grid = common_grid(v.grid, w.grid)
    out = []
    vals = [_on(grid, v), _on(grid, w)]
    ders = [nodal_derivatives(grid, x) for x in vals]
    mask = grid.r <= radius
    out.append(float(np.max(np.abs(vals[0] - vals[1])[mask])))
    for k in range(2):
        out.append(float(np.max(np.abs(ders[0][k] - ders[1][k])[mask])))
    return tuple(out)


# --------------------------------------------------------------------------
# comparability


@dataclass(frozen=True)
class ComparabilityReport:
    """Six comparable quantities, their ratio matrix and two algebraic checks."""

    values: dict
    matrix: np.ndarray
    gu_over_G: float
    Gt_over_G: float
    lamc_over_Gt: float
    lamc_bounds: tuple
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def comparable_quantities(gs: GroundState, spec: NonlinearitySpec | None = None) -> dict:
    spec = spec or gs.spec
    q = integrals(gs.grid, spec, gs.u)
    return {
        "M": gs.energy,
        "lambda_c": gs.lam * gs.c,
        "d+d2": gs.d + gs.d**2,
        "intG": q.intG,
        "intGtilde": q.intGt,
        "intgu": q.intgu,
    }


def comparability_report(gs: GroundState, spec: NonlinearitySpec | None = None,
                         rel_slack: float = 1e-12) -> ComparabilityReport:
    """Pairwise ratios of the comparable set and the (G2)-implied bounds.

    ``lamc_bounds = (C₂, C₁)`` with λc = N∫G - ((N-2)/2)∫gu giving
    C₂ ∫G̃ ≤ λc ≤ C₁ ∫G̃ for C_q = (N - (N-2)q/2)/(q/2 - 1) at q = β, α.
    """
    spec = spec or gs.spec
    N = gs.grid.N
    alpha, beta = spec.exponents
    vals = comparable_quantities(gs, spec)
    x = np.array([vals[k] for k in QUANTITIES])
    matrix = x[:, None] / x[None, :]
    gu_G = vals["intgu"] / vals["intG"]
    Gt_G = vals["intGtilde"] / vals["intG"]
    lamc_Gt = vals["lambda_c"] / vals["intGtilde"]

    def C(q):
        return (N - 0.5 * (N - 2) * q) / (0.5 * q - 1.0)
    c2, c1 = C(beta), C(alpha)
    s = 1.0 + rel_slack
    checks = {
        "positive": bool(np.all(x > 0) and np.all(np.isfinite(matrix))),
        "gu_over_G": alpha / s <= gu_G <= beta * s,
        "Gt_over_G": (alpha / 2 - 1) / s <= Gt_G <= (beta / 2 - 1) * s,
        "lamc_over_Gt": c2 / s <= lamc_Gt <= c1 * s,
    }
    return ComparabilityReport(vals, matrix, gu_G, Gt_G, lamc_Gt, (c2, c1), checks)


# --------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepRecord:
    c: float
    M: float = math.nan
    lam: float = math.nan
    lam_c: float = math.nan
    d: float = math.nan
    intG: float = math.nan
    intGt: float = math.nan
    intgu: float = math.nan
    u0: float = math.nan
    dist_U: Distances = Distances(math.nan, math.nan, math.nan)
    dist_V: Distances = Distances(math.nan, math.nan, math.nan)
    residual_U: float = math.nan
    residual_V: float = math.nan
    ratios: np.ndarray | None = field(default=None, repr=False)
    ok: bool = True
    error: str = ""

    def csv_row(self) -> list[float]:
        return [self.c, self.M, self.lam, self.lam_c, self.d, self.intG, self.intGt,
                self.intgu, self.u0, self.dist_U.L2, self.dist_U.H1,
                self.dist_V.L2, self.dist_V.H1]


CSV_HEADER = ("c,M,lambda,lambda_c,d,intG,intGtilde,intgu,u0,"
              "distL2_U,distH1_U,distL2_V,distH1_V")


@dataclass(frozen=True)
class SweepOptions:
    """Sweep controls.  ``split`` divides large-mass from small-mass trends."""

    M: int = 4096
    R: float = 10.0
    solver: SolverOptions = SolverOptions()
    workers: int = 1
    factor: float = 100.0
    continuity_c: float | None = None
    continuity_eps: float = 1e-2
    continuity_bound: float = 0.05
    distance_ceiling: float = 0.05
    band: float = 50.0
    split: float = 1.0


@dataclass(frozen=True)
class TrendCheck:
    name: str
    passed: bool
    value: float
    threshold: float
    note: str = ""


@dataclass(frozen=True)
class SweepResult:
    records: tuple
    trends: tuple
    states: tuple = field(default=(), repr=False)

    @property
    def failed(self) -> tuple:
        return tuple(r for r in self.records if not r.ok)

    @property
    def passed(self) -> bool:
        return not self.failed and all(t.passed for t in self.trends)

    def trend(self, name: str) -> TrendCheck:
        return next(t for t in self.trends if t.name == name)


def limit_profiles_for(spec: NonlinearitySpec, N: int):
    """Limit profiles (U, V) of a nonlinearity; V is None when b = 0."""
    alpha, beta = spec.exponents
    A, B = spec.limits
    U = solve_limit_profile(N, spec.a, A, alpha)
    V = solve_limit_profile(N, spec.b, B, beta) if spec.b > 0 else None
    return U, V


def make_record(gs: GroundState, spec: NonlinearitySpec, U: LimitProfile | None,
                V: LimitProfile | None) -> SweepRecord:
    q = comparable_quantities(gs, spec)
    x = np.array([q[k] for k in QUANTITIES])
    nan3 = Distances(math.nan, math.nan, math.nan)
    dU = dV = nan3
    rU = rV = math.nan
    if U is not None:
        dU = profile_distance(rescale(gs, spec, "large-mass"), U.profile)
        rU = rescaled_residual(gs, spec, "large-mass")
    if V is not None:
        dV = profile_distance(rescale(gs, spec, "small-mass"), V.profile)
        rV = rescaled_residual(gs, spec, "small-mass")
    return SweepRecord(gs.c, gs.energy, gs.lam, gs.lam * gs.c, gs.d, q["intG"], q["intGtilde"],
                       q["intgu"], gs.u0, dU, dV, rU, rV, x[:, None] / x[None, :])


def _solve_one(args):
    spec, N, c, opts = args
    try:
        gs = solve_ground_state(RadialGrid(N, opts.R, opts.M), spec, c, opts.solver)
    except Exception as exc:  # recorded per c, the sweep continues
        return None, f"{type(exc).__name__}: {exc}"
    return gs, ""


def _solve_all(spec, N, cs, opts):
    jobs = [(spec, N, c, opts) for c in cs]
    if opts.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as ex:
            return list(ex.map(_solve_one, jobs))
    return [_solve_one(j) for j in jobs]


def _strictly_decreasing(x) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(x.size >= 2 and np.all(np.isfinite(x)) and np.all(np.diff(x) < 0))


def sweep(spec: NonlinearitySpec, N: int, c_list: Sequence[float],
          opts: SweepOptions | None = None, profiles=None) -> SweepResult:
    """Ground states along a sorted list of masses, with the trend checks.

    ``states`` of the result holds every converged GroundState, including
    the continuity probe at c(1 + eps).
    """
    opts = opts or SweepOptions()
    cs = [float(c) for c in c_list]
    if not cs or any(not c > 0 for c in cs):
        raise ValueError("c list must be nonempty and positive")
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise ValueError("c list must be strictly increasing")
    U, V = profiles if profiles is not None else limit_profiles_for(spec, N)

    cont_c = opts.continuity_c
    if cont_c is None:
        gm = math.exp(np.mean(np.log(cs)))
        cont_c = min(cs, key=lambda c: abs(math.log(c / gm)))
    extra = cont_c * (1.0 + opts.continuity_eps)
    solved = _solve_all(spec, N, cs + [extra], opts)

    records = []
    for c, (gs, err) in zip(cs, solved[:-1]):
        records.append(make_record(gs, spec, U, V) if gs is not None
                       else SweepRecord(c, ok=False, error=err))
    trends = _trends(spec, records, cont_c, solved[-1], opts)
    states = tuple(gs for gs, _ in solved if gs is not None)
    return SweepResult(tuple(records), tuple(trends), states)


def _trends(spec, records, cont_c, cont_solve, opts: SweepOptions) -> list[TrendCheck]:
    good = [r for r in records if r.ok]
    out: list[TrendCheck] = []
    if len(good) < 2:
        out.append(TrendCheck("solved", False, len(good), 2, "fewer than two converged masses"))
        return out
    lo, hi = good[0], good[-1]
    f = opts.factor
    for name, key in (("M_ratio", "M"), ("lambda_c_ratio", "lam_c"), ("u0_ratio", "u0")):
        ratio = getattr(lo, key) / getattr(hi, key)
        out.append(TrendCheck(name, ratio >= f, ratio, f,
                              f"value at c={lo.c:g} over value at c={hi.c:g}"))
    d = [r.d for r in good]
    out.append(TrendCheck("d_decreasing", _strictly_decreasing(d), d[0] / d[-1], 1.0,
                          "d_c strictly decreasing in c"))

    large = [r for r in good if r.c >= opts.split]
    if len(large) >= 2 and np.isfinite(large[-1].dist_U.H1):
        h1 = [r.dist_U.H1 for r in large]
        out.append(TrendCheck("U_distance_decreasing", _strictly_decreasing(h1), h1[-1], math.nan,
                              f"H1 distance to U over c >= {opts.split:g}"))
        out.append(TrendCheck("U_distance_final", h1[-1] <= opts.distance_ceiling, h1[-1],
                              opts.distance_ceiling, f"at c={large[-1].c:g}"))
    small = [r for r in reversed(good) if r.c <= opts.split]
    if len(small) >= 2 and np.isfinite(small[-1].dist_V.H1):
        h1 = [r.dist_V.H1 for r in small]
        out.append(TrendCheck("V_distance_decreasing", _strictly_decreasing(h1), h1[-1], math.nan,
                              f"H1 distance to V over c <= {opts.split:g}, decreasing c"))
        out.append(TrendCheck("V_distance_final", h1[-1] <= opts.distance_ceiling, h1[-1],
                              opts.distance_ceiling, f"at c={small[-1].c:g}"))

    alpha, beta = spec.exponents
    gu = np.array([r.intgu / r.intG for r in good])
    out.append(TrendCheck("gu_over_G_window",
                          bool(np.all((gu >= alpha * (1 - 1e-12)) & (gu <= beta * (1 + 1e-12)))),
                          float(gu.max()), beta, f"within [{alpha:g}, {beta:g}] at every c"))

    ratios = np.array([r.ratios for r in good])
    with np.errstate(divide="ignore", invalid="ignore"):
        gm = np.exp(np.mean(np.log(ratios), axis=0))
        spread = np.maximum(ratios.max(axis=0) / gm, gm / ratios.min(axis=0))
    worst = float(np.max(spread))
    out.append(TrendCheck("comparability_band", worst <= opts.band, worst, opts.band,
                          "max over pairs of the ratio spread around its geometric mean"))

    base = next((r for r in good if r.c == cont_c), None)
    gs_extra, err = cont_solve
    if base is not None and gs_extra is not None:
        jump = abs(gs_extra.energy - base.M) / base.M
        out.append(TrendCheck("continuity", jump <= opts.continuity_bound, jump,
                              opts.continuity_bound,
                              f"|M(c(1+eps)) - M(c)|/M(c) at c={cont_c:g}"))
    else:
        out.append(TrendCheck("continuity", False, math.nan, opts.continuity_bound,
                              err or f"c={cont_c:g} did not converge"))
    return out
