"""Problem data (a, b, g) for the Kirchhoff equation and the growth assumptions on g.

Two closed-form families are built in:

* ``power``:      g(s) = |s|^{p-2} s
* ``two_power``:  g(s) = A |s|^{α-2} s + B |s|^{β-2} s

For the pure power the exponents are α = β = p and the limit constants
A = B = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

FAMILIES = ("power", "two_power")


class SpecError(ValueError):
    """Invalid problem data.  ``key`` names the offending parameter."""

    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class NonlinearitySpec:
    """Kirchhoff coefficients plus a nonlinearity from a built-in family.

    Attributes:
        a, b: coefficients of -(a + b‖∇u‖²)Δu.  ``b = 0`` is accepted as the
            local (Schrödinger) limit.
        family: ``"power"`` or ``"two_power"``.
        p: exponent of the pure power.
        A, alpha, B, beta: two-power coefficients and exponents.
    """

    a: float
    b: float
    family: str = "power"
    p: float | None = None
    A: float | None = None
    alpha: float | None = None
    B: float | None = None
    beta: float | None = None

    def __post_init__(self):
        for key in ("a", "b", "p", "A", "alpha", "B", "beta"):
            val = getattr(self, key)
            if val is not None:
                try:
                    val = float(val)
                except (TypeError, ValueError):
                    raise SpecError(key, f"{key}={val!r} is not a number") from None
                if not np.isfinite(val):
                    raise SpecError(key, f"{key} must be finite")
                object.__setattr__(self, key, val)
        if self.family not in FAMILIES:
            raise SpecError("family", f"family={self.family!r} not in {FAMILIES}")
        if not self.a > 0:
            raise SpecError("a", f"a={self.a} must be positive")
        if not self.b >= 0:
            raise SpecError("b", f"b={self.b} must be nonnegative")
        if self.family == "power":
            if self.p is None:
                raise SpecError("p", "power family needs the exponent p")
            if not self.p > 2:
                raise SpecError("p", f"p={self.p} must exceed 2")
        else:
            for key in ("A", "alpha", "B", "beta"):
                if getattr(self, key) is None:
                    raise SpecError(key, f"two_power family needs {key}")
            if not (self.A > 0 and self.B > 0):
                raise SpecError("A" if self.A <= 0 else "B", "A and B must be positive")
            if not 2 < self.alpha <= self.beta:
                key = "alpha" if self.alpha <= 2 else "beta"
                raise SpecError(key, f"need 2 < alpha <= beta, got {self.alpha}, {self.beta}")

    @classmethod
    def power(cls, a: float, b: float, p: float) -> "NonlinearitySpec":
        return cls(a, b, "power", p=p)

    @classmethod
    def two_power(cls, a, b, A, alpha, B, beta) -> "NonlinearitySpec":
        return cls(a, b, "two_power", A=A, alpha=alpha, B=B, beta=beta)

    @property
    def terms(self) -> tuple[tuple[float, float], ...]:
        """``(coefficient, exponent)`` pairs; g(s) = Σ c |s|^{q-2} s."""
        if self.family == "power":
            return ((1.0, self.p),)
        return ((self.A, self.alpha), (self.B, self.beta))

    @property
    def exponents(self) -> tuple[float, float]:
        """``(α, β)``."""
        if self.family == "power":
            return self.p, self.p
        return self.alpha, self.beta

    @property
    def limits(self) -> tuple[float, float]:
        """``(A, B)``: limits of g(s)/s^{α-1} at 0 and g(s)/s^{β-1} at ∞."""
        if self.family == "power":
            return 1.0, 1.0
        return self.A, self.B

    def with_coefficients(self, a: float | None = None, b: float | None = None):
        return NonlinearitySpec(
            self.a if a is None else a, self.b if b is None else b,
            self.family, self.p, self.A, self.alpha, self.B, self.beta,
        )

    def as_config(self) -> dict:
        out = {"a": self.a, "b": self.b, "family": self.family}
        if self.family == "power":
            out["p"] = self.p
        else:
            out.update(A=self.A, alpha=self.alpha, B=self.B, beta=self.beta)
        return out

    @classmethod
    def from_config(cls, cfg: Mapping) -> "NonlinearitySpec":
        family = str(cfg.get("family", "power"))
        keys = ("p",) if family == "power" else ("A", "alpha", "B", "beta")
        missing = [k for k in ("a", "b") + keys if k not in cfg]
        if missing:
            raise SpecError(missing[0], f"missing key {missing[0]!r}")
        return cls(cfg["a"], cfg["b"], family, **{k: cfg[k] for k in keys})


def evaluate(spec: NonlinearitySpec, s):
    """Return ``(g(s), G(s), G̃(s))`` with G̃ = g s / 2 - G.  Vectorized."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    g = np.zeros_like(s)
    G = np.zeros_like(s)
    for coef, q in spec.terms:
        aq = a**q
        G = G + coef * aq / q
        g = g + coef * np.sign(s) * aq / np.where(a > 0, a, 1.0)
    Gt = 0.5 * g * s - G
    return g, G, Gt


def g_prime(spec: NonlinearitySpec, s):
    """Derivative g'(s) of the built-in families."""
    a = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(a)
    for coef, q in spec.terms:
        out = out + coef * (q - 1.0) * a ** (q - 2.0)
    return out


def critical_exponent(N: int) -> float:
    """2* = 2N/(N-2) for N = 3, +∞ for N = 1, 2."""
    return 2.0 * N / (N - 2.0) if N >= 3 else np.inf


def exponent_window(N: int) -> tuple[float, float]:
    """Open interval (2 + 8/N, 2*) allowed for α and β."""
    return 2.0 + 8.0 / N, critical_exponent(N)


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: float | None = None
    message: str = ""


@dataclass
class AssumptionReport:
    """Outcome of ``check_assumptions``; ``checks`` is ordered G1..G5."""

    N: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> CheckResult | None:
        return next((c for c in self.checks if not c.passed), None)

    def as_dict(self) -> dict:
        return {c.name: {"passed": c.passed, "witness": c.witness, "message": c.message}
                for c in self.checks}


def default_samples(n: int = 241) -> np.ndarray:
    return np.logspace(-6.0, 6.0, n)


def check_assumptions(spec: NonlinearitySpec, N: int, samples=None,
                      rel_slack: float = 1e-9) -> AssumptionReport:
    """Sample the growth assumptions G1..G5 on a log-spaced s-grid.

    G1: g odd and continuous with g(0) = 0.
    G2: 2 + 8/N < α ≤ β < 2*, and α G(s) ≤ g(s) s ≤ β G(s).
    G3: G̃'(s) s ≥ α G̃(s), G̃' by central differences (relative step 1e-6).
    G4: g(s)/s^{α-1} within 1% of A at the smallest sample.
    G5: g(s)/s^{β-1} within 1% of B at the largest sample.
    """
    s = default_samples() if samples is None else np.sort(np.asarray(samples, dtype=float))
    if s[0] > 1e-6 or s[-1] < 1e6:
        raise ValueError("samples must span at least [1e-6, 1e6]")
    alpha, beta = spec.exponents
    A, B = spec.limits
    rep = AssumptionReport(N)

    # G1
    g, G, Gt = evaluate(spec, s)
    gm, _, _ = evaluate(spec, -s)
    g0 = float(evaluate(spec, 0.0)[0])
    odd_err = np.abs(g + gm) / np.maximum(np.abs(g), 1e-300)
    bad = np.flatnonzero(odd_err > rel_slack)
    if g0 != 0.0:
        rep.checks.append(CheckResult("G1", False, 0.0, f"g(0) = {g0} != 0"))
    elif bad.size:
        rep.checks.append(CheckResult("G1", False, float(s[bad[0]]), "g(-s) != -g(s)"))
    else:
        rep.checks.append(CheckResult("G1", True))

    # G2
    lo, hi = exponent_window(N)
    # endpoints typed as fractions (14/3) may land one ulp inside the window
    if not alpha > lo * (1 + 1e-12):
        rep.checks.append(CheckResult(
            "G2", False, alpha, f"alpha={alpha} must exceed 2 + 8/N = {lo:.6g}"))
    elif not beta < hi * (1 - 1e-12):
        rep.checks.append(CheckResult(
            "G2", False, beta, f"beta={beta} must be below 2* = {hi:.6g}"))
    else:
        gs = g * s
        viol = (alpha * G > gs * (1 + rel_slack)) | (gs > beta * G * (1 + rel_slack))
        if np.any(viol):
            k = np.flatnonzero(viol)[0]
            rep.checks.append(CheckResult("G2", False, float(s[k]),
                                          "alpha G <= g s <= beta G violated"))
        else:
            rep.checks.append(CheckResult("G2", True))

    # G3
    ds = 1e-6 * s
    Gt_p = evaluate(spec, s + ds)[2]
    Gt_m = evaluate(spec, s - ds)[2]
    dGt = (Gt_p - Gt_m) / (2 * ds)
    viol = dGt * s < alpha * Gt * (1 - 1e-6)
    if np.any(viol):
        k = np.flatnonzero(viol)[0]
        rep.checks.append(CheckResult("G3", False, float(s[k]),
                                      "G~'(s) s >= alpha G~(s) violated"))
    else:
        rep.checks.append(CheckResult("G3", True))

    # G4, G5
    s0, s1 = s[0], s[-1]
    lim0 = float(evaluate(spec, s0)[0]) / s0 ** (alpha - 1)
    lim1 = float(evaluate(spec, s1)[0]) / s1 ** (beta - 1)
    ok0 = abs(lim0 - A) <= 0.01 * A
    ok1 = abs(lim1 - B) <= 0.01 * B
    rep.checks.append(CheckResult("G4", ok0, None if ok0 else float(s0),
                                  "" if ok0 else f"g(s)/s^(alpha-1) = {lim0:.6g}, expected {A}"))
    rep.checks.append(CheckResult("G5", ok1, None if ok1 else float(s1),
                                  "" if ok1 else f"g(s)/s^(beta-1) = {lim1:.6g}, expected {B}"))
    return rep
