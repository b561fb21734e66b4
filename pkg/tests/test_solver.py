import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kirchhoff_gs import (AssumptionError, ConvergenceError, RadialGrid, SolverOptions,
                          solve_ground_state, symmetric_rearrange, verify_variational_bounds)
from kirchhoff_gs.functionals import energy
from kirchhoff_gs.limit_profiles import (homogeneous_local_closed_form,
                                         homogeneous_selfconsistency_oracle)
from kirchhoff_gs.nonlinearity import NonlinearitySpec, evaluate
from kirchhoff_gs.radial_grid import kinetic, mass

CONFIGS = [
    ("N1 power", 1, NonlinearitySpec.power(1, 1, 12), 1.0),
    ("N1 two-power", 1, NonlinearitySpec.two_power(2, 1, 1, 11, 1, 13), 0.5),
    ("N2 power", 2, NonlinearitySpec.power(1, 1, 7), 1.0),
    ("N2 two-power", 2, NonlinearitySpec.two_power(1, 0.5, 1, 7, 2, 8), 3.0),
    ("N3 two-power", 3, NonlinearitySpec.two_power(1, 1, 1, 5, 1, 5.5), 1.0),
    ("N3 local b=0", 3, NonlinearitySpec.power(1, 0, 5), 1.0),
]


@pytest.mark.parametrize("tag, N, spec, c", CONFIGS, ids=[c[0] for c in CONFIGS])
def test_ground_state_invariants(solve, tag, N, spec, c):
    gs = solve(spec, N, c, tag=tag)
    u = gs.u.values
    assert gs.lam > 0 and gs.energy > 0
    assert mass(gs.grid, u) == pytest.approx(c, rel=1e-10)
    assert np.all(u[:-1] > 0)
    assert np.all(np.diff(u) <= 1e-12 * u[0])
    d = gs.diagnostics
    assert d.decay <= 1e-8
    assert d.pde <= 1e-5 and d.pohozaev <= 1e-6 and d.nehari <= 1e-6
    hist = np.array(d.energy_history)
    assert np.all(np.diff(hist) <= 1e-9 * np.abs(hist[1:]))


def test_local_limit_matches_closed_form_oracle(solve, base_profile):
    spec = NonlinearitySpec.power(1, 0, 5)
    gs = solve(spec, 3, 1.0, tag="N3 local b=0")
    _, _, lam = homogeneous_local_closed_form(3, 1.0, 5.0, 1.0, base_profile)
    assert gs.lam == pytest.approx(lam, rel=1e-3)


@pytest.mark.parametrize("c", [1e-3, 1.0, 1e3])
def test_pure_power_matches_selfconsistency_oracle(solve, base_spec, base_profile, c):
    # fiber roots reach t ~ 1/c here, far beyond the fixed-grid bracket
    gs = solve(base_spec, 3, c, tag=f"N3 power c={c:g}")
    o = homogeneous_selfconsistency_oracle(3, 1.0, 1.0, 5.0, c, base_profile)
    assert gs.lam == pytest.approx(o.lam, rel=1e-5)


def test_determinism(base_spec):
    a = solve_ground_state(RadialGrid(3, 10.0, 2048), base_spec, 0.7)
    b = solve_ground_state(RadialGrid(3, 10.0, 2048), base_spec, 0.7)
    np.testing.assert_array_equal(a.u.values, b.u.values)
    assert (a.lam, a.energy, a.d) == (b.lam, b.energy, b.d)


@pytest.mark.parametrize("c", [0.0, -1.0, math.nan, math.inf])
def test_nonpositive_mass_rejected(base_spec, c):
    with pytest.raises(ValueError):
        solve_ground_state(RadialGrid(3, 10.0, 256), base_spec, c)


def test_assumption_failure_before_iteration():
    with pytest.raises(AssumptionError) as err:
        solve_ground_state(RadialGrid(3, 10.0, 256), NonlinearitySpec.power(1, 1, 4), 1.0)
    assert err.value.check == "G2"


def test_iteration_starvation_raises_with_diagnostics(two_power_spec):
    with pytest.raises(ConvergenceError) as err:
        solve_ground_state(RadialGrid(3, 10.0, 1024), two_power_spec, 1.0,
                           SolverOptions(max_iter=3))
    assert err.value.diagnostics["iterations"] <= 3
    assert "energy" in err.value.diagnostics


def test_initial_guess_option(solve, base_spec):
    ref = solve(base_spec, 3, 1.0)
    gs = solve_ground_state(RadialGrid(3, 10.0, 4096), base_spec, 1.0,
                            SolverOptions(initial=ref.u))
    assert gs.lam == pytest.approx(ref.lam, rel=1e-8)


@pytest.mark.parametrize("tag, N, spec, c", CONFIGS, ids=[c[0] for c in CONFIGS])
def test_variational_bounds(solve, tag, N, spec, c):
    rep = verify_variational_bounds(solve(spec, N, c, tag=tag))
    assert rep.passed, rep.failures
    # for a pure power α = β and both bounds equal I, so allow rounding
    assert rep.coercivity <= rep.I * (1 + 1e-12)
    assert rep.I <= rep.sandwich_upper * (1 + 1e-12)
    assert len(rep.competitors) == 20


def test_local_limit_coercivity_has_only_first_term(solve):
    gs = solve(NonlinearitySpec.power(1, 0, 5), 3, 1.0, tag="N3 local b=0")
    rep = verify_variational_bounds(gs)
    # b = 0: the bound is ((N(α−2)−4)/(2N(α−2))) a d
    assert rep.coercivity == pytest.approx((9 - 4) / 18 * gs.d, rel=1e-14)
    assert rep.passed


def test_variational_failure_is_named(solve, base_spec):
    gs = solve(base_spec, 3, 1.0)
    rep = verify_variational_bounds(gs, spec=base_spec.with_coefficients(a=50.0))
    assert not rep.passed
    assert any(f.startswith("coercivity") for f in rep.failures)


# --------------------------------------------------------------------------
# rearrangement


def bumpy(grid, rng):
    r = grid.r
    u = sum(rng.uniform(0.1, 1.0) * np.exp(-0.5 * ((r - rng.uniform(0, 4)) / rng.uniform(0.4, 1.5)) ** 2)
            for _ in range(3))
    u[-1] = 0.0
    return u


def test_rearrange_keeps_decreasing_profile():
    g = RadialGrid(3, 12.0, 2048)
    u = np.exp(-0.5 * g.r**2)
    u[-1] = 0.0
    np.testing.assert_allclose(symmetric_rearrange(g, u).values, u, rtol=0, atol=1e-14)


def int_G(grid, spec, u):
    return float(grid.weights @ evaluate(spec, u)[1])


@given(seed=st.integers(0, 10**6), N=st.sampled_from([1, 2, 3]))
@settings(max_examples=30, deadline=None)
def test_rearrangement_properties(seed, N):
    rng = np.random.default_rng(seed)
    g = RadialGrid(N, 15.0, 4096)
    u = bumpy(g, rng)
    if rng.uniform() < 0.5:
        u = -u
    v = symmetric_rearrange(g, u).values
    assert np.all(np.diff(v) <= 0) and np.all(v >= 0)
    assert mass(g, v) == pytest.approx(mass(g, u), rel=1e-8)
    spec = NonlinearitySpec.power(1, 1, 5 if N == 3 else 12)
    # equimeasurability holds up to the O(h²) error of the linear interpolant
    assert int_G(g, spec, v) == pytest.approx(int_G(g, spec, u), rel=2e-4)
    assert math.sqrt(kinetic(g, v)) <= math.sqrt(kinetic(g, u)) * (1 + 1e-6)
    assert energy(g, spec, v).I <= energy(g, spec, u).I + 1e-6 * abs(energy(g, spec, u).I)


@pytest.mark.parametrize("seed, N", [(35, 1), (74, 3), (5, 2)])
def test_rearrangement_equimeasurability_converges(seed, N):
    spec = NonlinearitySpec.power(1, 1, 5 if N == 3 else 12)
    errs = []
    for M in (2048, 4096, 8192):
        g = RadialGrid(N, 15.0, M)
        u = bumpy(g, np.random.default_rng(seed))
        errs.append(abs(int_G(g, spec, symmetric_rearrange(g, u).values) / int_G(g, spec, u) - 1))
    assert errs[1] <= errs[0] / 3 and errs[2] <= errs[1] / 3
