"""Named operator pairs with known covariance relations.

Each fixture carries its operators, the polynomial F, the test family on
which the relation is claimed and the tolerance it is held to.  ``build``
optionally shifts b by a constant so the relation is deliberately broken.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .checks import (
    DEFAULT_TOL,
    ResidualReport,
    residual_direct,
    residual_eq3,
    residual_eq4,
    residual_eq5,
    residual_eq14,
    support_sets,
)
from .constructors import (
    build_final_example,
    e_closed_form,
    example4_xi0,
    reduced_ode_residual,
)
from .errors import InvalidArgument
from .grid import (
    DEFAULT_N,
    FunctionSample,
    TestFamily,
    build_grid,
    constant,
    make_clamped_family,
    make_test_family,
    sample,
)
from .operators import DiffOp, IntegralOp, LinearOp, PolynomialSpec, SeparableKernel

FAMILY_SIZE = 12
FINAL_ODE_TOL = 1e-6


@dataclass
class Fixture:
    name: str
    A: LinearOp
    B: LinearOp
    F: PolynomialSpec
    family: TestFamily
    tol: float
    a: FunctionSample
    b: FunctionSample
    c: FunctionSample
    meta: dict = field(default_factory=dict)

    @property
    def grid(self):
        return self.a.grid

    @property
    def integral_first(self) -> bool:
        return isinstance(self.A, IntegralOp)

    def with_polynomial(self, F: PolynomialSpec) -> "Fixture":
        return Fixture(self.name, self.A, self.B, F, self.family, self.tol, self.a, self.b, self.c, dict(self.meta))


def _bump(t, lo, hi):
    """C-infinity bump on (lo, hi) with peak 1 at the midpoint, exactly zero outside."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > lo) & (t < hi)
    u = t[inside]
    half2 = ((hi - lo) / 2.0) ** 2
    out[inside] = np.exp(1.0 - half2 / ((u - lo) * (hi - u)))
    return out


def _integral_first(name, a, b, c, F, perturb_b, tol=DEFAULT_TOL, meta=None):
    b = b + perturb_b
    A = IntegralOp(SeparableKernel(a, c))
    B = DiffOp(b)
    fam = make_test_family(a.grid, FAMILY_SIZE)
    return Fixture(name, A, B, F, fam, tol, a, b, c, meta or {})


def const_coeff(n=DEFAULT_N, power=2, perturb_b=0.0, a0=1.5, b0=-0.5, c0=2.0):
    """Constant a, b, c: AB and B A^n both annihilate functions vanishing at the ends."""
    g = build_grid(n, 0.0, 1.0)
    F = PolynomialSpec.monomial(power)
    meta = {"a": a0, "b": b0, "c": c0, "interval": [0.0, 1.0]}
    return _integral_first(
        "const-coeff", constant(g, a0), constant(g, b0), constant(g, c0), F, perturb_b, meta=meta
    )


def disjoint_support(n=DEFAULT_N, perturb_b=0.0):
    """c lives on (0, 0.4), b on (0.6, 1); a is centred so that int a c = 0.

    With F = t^2 + t^3 the scalar k1 is delta_1 = 0 and every term of the
    relation vanishes.
    """
    g = build_grid(n, 0.0, 1.0)
    c = sample(g, lambda t: _bump(t, 0.0, 0.4))
    b = sample(g, lambda t: _bump(t, 0.6, 1.0))
    # discrete centroid, so the quadrature of a c is zero to rounding
    centre = float(g.weights @ (g.nodes * c.values) / (g.weights @ c.values))
    a = sample(g, lambda t: t - centre)
    F = PolynomialSpec((0.0, 0.0, 1.0, 1.0))
    meta = {"c_support": [0.0, 0.4], "b_support": [0.6, 1.0], "a_shift": centre}
    return _integral_first("disjoint-support", a, b, c, F, perturb_b, meta=meta)


def example3(n=DEFAULT_N, power=1, perturb_b=0.0):
    """k(t,s) = (t+1) / (ln2 (s+1)^2), B = -ln2 (t+1) d/dt; AB = B A^n for all n >= 1."""
    g = build_grid(n, 0.0, 1.0)
    ln2 = math.log(2.0)
    a = sample(g, lambda t: (t + 1.0) / ln2)
    c = sample(g, lambda s: 1.0 / (s + 1.0) ** 2)
    b = sample(g, lambda t: -ln2 * (t + 1.0))
    F = PolynomialSpec.monomial(power)
    return _integral_first("example3", a, b, c, F, perturb_b, meta={"power": power})


def example4(n=DEFAULT_N, gamma0=0.5, lam=1.0, perturb_b=0.0):
    """a = t/2 + gamma0, c = (xi0 + 2 gamma0)^3 / (s + 2 gamma0)^3, b = lam a, F = t^2.

    xi0 is the real root of (xi0 + 2 gamma0)^3 = 8 gamma0 (1 + 2 gamma0), which
    makes Q = int a c equal to 2.
    """
    if 0.0 <= -2.0 * gamma0 <= 1.0:
        raise InvalidArgument(f"gamma0={gamma0} puts a pole of c inside [0, 1]")
    xi0 = example4_xi0(gamma0)
    g = build_grid(n, 0.0, 1.0)
    a = sample(g, lambda t: t / 2.0 + gamma0)
    c = sample(g, lambda s: (xi0 + 2 * gamma0) ** 3 / (s + 2 * gamma0) ** 3)
    b = lam * a
    F = PolynomialSpec.monomial(2)
    meta = {"gamma0": gamma0, "xi0": xi0, "lambda": lam}
    return _integral_first("example4", a, b, c, F, perturb_b, meta=meta)


def final_ode(n=DEFAULT_N, perturb_b=0.0, lambda_neg=-1.0, lambda2=1.0, branch="abs", interior=(0.1, 0.9)):
    """A = a d/dt with a = sqrt(lambda t (t-1)), B with kernel b(t) c(s), F = t^2.

    Sampled on an interior window since a, b, c are singular at 0 and 1.  The
    family is clamped (x and x' vanish) because a is nonzero at the window ends.
    """
    prof = build_final_example(lambda_neg=lambda_neg, lambda2=lambda2, interior=interior, n=n, branch=branch)
    a, c = prof.a_sample, prof.c_sample
    b = prof.b_sample + perturb_b
    A = DiffOp(a)
    B = IntegralOp(SeparableKernel(b, c))
    fam = make_clamped_family(a.grid, FAMILY_SIZE)
    meta = prof.summary()
    meta["profile"] = prof
    return Fixture("final-ode", A, B, PolynomialSpec.monomial(2), fam, FINAL_ODE_TOL, a, b, c, meta)


FIXTURES = {
    "const-coeff": const_coeff,
    "disjoint-support": disjoint_support,
    "example3": example3,
    "example4": example4,
    "final-ode": final_ode,
}


def build(name: str, n: int = DEFAULT_N, perturb_b: float = 0.0, **kwargs) -> Fixture:
    if name not in FIXTURES:
        raise InvalidArgument(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    return FIXTURES[name](n=n, perturb_b=perturb_b, **kwargs)


def verify(fx: Fixture, tol: float | None = None) -> list:
    """Every residual that applies to the fixture, at ``tol`` (default: the fixture's)."""
    tol = fx.tol if tol is None else tol
    F = fx.F
    reports = [residual_direct(fx.A, fx.B, F, fx.family, tol, label=_label(fx))]
    if fx.integral_first:
        reports.append(residual_eq3(fx.A, fx.B, F, fx.family, tol, label=_label(fx)))
        reports.append(residual_eq4(fx.A, fx.B, F, fx.family, tol, label=_label(fx)))
        if F.delta0 == 0.0 and F.degree >= 1:
            r5 = residual_eq5(fx.A.kernel, fx.b, F)
            reports.append(ResidualReport.from_residuals("eq5", [r5], tol, _label(fx)))
    else:
        r14 = residual_eq14(fx.B.kernel, fx.a, F, a_endpoints=(0.0, 0.0))
        reports.append(ResidualReport.from_residuals("eq14", [r14], tol, _label(fx)))
        prof = fx.meta["profile"]
        e, de = e_closed_form(fx.grid.nodes, prof.lambda2, prof.branch)
        r_ode = float(np.max(np.abs(reduced_ode_residual(fx.a, prof.lambda_neg, e, de))))
        reports.append(ResidualReport.from_residuals("reduced-ode", [r_ode], tol, _label(fx)))
    return reports


def supports(fx: Fixture, epsilon_supp: float | None = None):
    return support_sets(fx.a, fx.b, fx.c, epsilon_supp)


def _label(fx: Fixture) -> str:
    coeffs = ",".join(f"{c:g}" for c in fx.F.coeffs)
    return f"{fx.name} F=[{coeffs}]"
