"""Numerical residuals for the covariance relation AB = B F(A).

Every check returns either a :class:`ResidualReport` (one residual per test
function, normalized by that function's sup-norm) or a bare pointwise
maximum over the grid.  Tolerances default to 1e-8, the level reached by
smooth fixtures at n = 64.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgument, PreconditionError
from .grid import ENDPOINT_VANISHING, FunctionSample, TestFamily, check_same_grid
from .operators import (
    DenseKernel,
    DiffOp,
    IntegralOp,
    Kernel,
    LinearOp,
    PolynomialSpec,
    apply,
    apply_poly,
    iterate_kernel_derivative,
    poly_kernel,
)

DEFAULT_TOL = 1e-8
CONDITIONS = ("eq3", "eq4", "eq5", "eq14", "direct-covariance", "reduced-ode")


@dataclass
class ResidualReport:
    condition_id: str
    per_member: list
    max_residual: float
    tolerance: float
    passed: bool
    label: str = ""

    @classmethod
    def from_residuals(cls, condition_id, residuals, tolerance, label=""):
        per_member = [(i, float(r)) for i, r in enumerate(residuals)]
        worst = max(r for _, r in per_member) if per_member else 0.0
        return cls(condition_id, per_member, worst, float(tolerance), bool(worst <= tolerance), label)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["per_member"] = [{"member": i, "residual": r} for i, r in self.per_member]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ResidualReport":
        return cls(
            d["condition_id"],
            [(m["member"], m["residual"]) for m in d["per_member"]],
            d["max_residual"],
            d["tolerance"],
            d["pass"],
            d.get("label", ""),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def row(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        name = f"{self.condition_id} {self.label}".strip()
        return f"{name:<40s} max={self.max_residual:10.3e}  tol={self.tolerance:8.1e}  {verdict}"


def _rel(diff: np.ndarray, x: FunctionSample) -> float:
    scale = x.sup()
    return float(np.max(np.abs(diff)) / scale) if scale > 0 else float(np.max(np.abs(diff)))


def _unit(x: FunctionSample) -> FunctionSample:
    # residuals are linear in x; normalizing first makes them independent of
    # the scale of x up to one rounding of the input
    scale = x.sup()
    return x / scale if scale > 0 else x


def _family_check(fam: TestFamily):
    if not isinstance(fam, TestFamily) or len(fam) == 0:
        raise InvalidArgument("need a non-empty test family")


# -- direct relation ---------------------------------------------------------


def covariance_defect(A: LinearOp, B: LinearOp, F: PolynomialSpec, x: FunctionSample) -> FunctionSample:
    """ABx - B F(A) x."""
    return apply(A, apply(B, x)) - apply(B, apply_poly(A, F, x))


def residual_direct(A, B, F, fam: TestFamily, tol: float = DEFAULT_TOL, label="") -> ResidualReport:
    _family_check(fam)
    check_same_grid(A.grid, B.grid)
    res = []
    for x in fam:
        x = _unit(x)
        res.append(_rel(covariance_defect(A, B, F, x).values, x))
    return ResidualReport.from_residuals("direct-covariance", res, tol, label)


# -- integral-first conditions -----------------------------------------------


def _eq3_parts(A: IntegralOp, B: DiffOp, F: PolynomialSpec):
    if not isinstance(A, IntegralOp) or not isinstance(B, DiffOp):
        raise InvalidArgument("condition needs A integral and B differential")
    check_same_grid(A.grid, B.grid)
    g = A.grid
    K = A.kernel.dense()
    b = B.multiplier.values
    # d/ds [b(s) k(t,s)]
    dsbk = (K * b[None, :]) @ g.diff.T
    if F.degree >= 1:
        dtFn = g.diff @ poly_kernel(A.kernel, F).dense()
    else:
        dtFn = np.zeros_like(K)
    return g, K, b, dsbk, dtFn


def _eq3_sides(parts, F, x: FunctionSample, boundary: bool):
    g, K, b, dsbk, dtFn = parts
    w = g.weights
    v = x.values
    lhs = -dsbk @ (w * v)
    if boundary:
        lhs = lhs + K[:, -1] * b[-1] * v[-1] - K[:, 0] * b[0] * v[0]
    rhs = F.delta0 * b * (g.diff @ v) + b * (dtFn @ (w * v))
    return lhs, rhs


def eq3_sides(A, B, F, x):
    """Both sides of the full-space identity, as samples (mainly for tests)."""
    lhs, rhs = _eq3_sides(_eq3_parts(A, B, F), F, x, boundary=True)
    return FunctionSample(x.grid, lhs), FunctionSample(x.grid, rhs)


def residual_eq3(A, B, F, fam: TestFamily, tol: float = DEFAULT_TOL, label="") -> ResidualReport:
    """Integration-by-parts identity with boundary terms, valid for any x."""
    _family_check(fam)
    parts = _eq3_parts(A, B, F)
    res = []
    for x in map(_unit, fam):
        lhs, rhs = _eq3_sides(parts, F, x, boundary=True)
        res.append(_rel(lhs - rhs, x))
    return ResidualReport.from_residuals("eq3", res, tol, label)


def residual_eq4(A, B, F, fam: TestFamily, tol: float = DEFAULT_TOL, label="") -> ResidualReport:
    """Same identity with the boundary terms dropped; x must vanish at both ends."""
    _family_check(fam)
    if fam.kind != ENDPOINT_VANISHING:
        raise InvalidArgument("eq4 is only meaningful on an endpoint-vanishing family")
    parts = _eq3_parts(A, B, F)
    res = []
    for x in map(_unit, fam):
        lhs, rhs = _eq3_sides(parts, F, x, boundary=False)
        res.append(_rel(lhs - rhs, x))
    return ResidualReport.from_residuals("eq4", res, tol, label)


def eq5_defect(k: Kernel, b: FunctionSample, F: PolynomialSpec) -> np.ndarray:
    """-d/ds[b(s) k(t,s)] - b(t) d/dt F_n(k)(t,s) on the grid."""
    if F.delta0 != 0.0:
        raise InvalidArgument("pointwise condition requires F(0) = 0")
    if F.degree < 1:
        raise InvalidArgument("pointwise condition requires deg F >= 1")
    check_same_grid(k.grid, b.grid)
    g = k.grid
    lhs = -(k.dense() * b.values[None, :]) @ g.diff.T
    rhs = b.values[:, None] * (g.diff @ poly_kernel(k, F).dense())
    return lhs - rhs


def residual_eq5(k: Kernel, b: FunctionSample, F: PolynomialSpec) -> float:
    return float(np.max(np.abs(eq5_defect(k, b, F))))


# -- differential-first condition --------------------------------------------


def eq14_defect(k: Kernel, a: FunctionSample, F: PolynomialSpec, a_endpoints=None) -> DenseKernel:
    """a(t) d/dt k(t,s) - sum_m (-1)^m delta_m k_m(t,s) as a kernel.

    ``a_endpoints`` gives a(alpha), a(beta) of the operator's interval when
    ``k`` and ``a`` are sampled on an interior window; by default the first
    and last samples of ``a`` are used.
    """
    if F.delta0 != 0.0:
        raise InvalidArgument("condition requires F without constant term")
    check_same_grid(k.grid, a.grid)
    ends = (a.left, a.right) if a_endpoints is None else tuple(a_endpoints)
    if max(abs(ends[0]), abs(ends[1])) > 1e-12:
        raise PreconditionError(
            f"boundary condition a(alpha)=a(beta)=0 violated: a(alpha)={ends[0]:.3e}, "
            f"a(beta)={ends[1]:.3e}"
        )
    g = k.grid
    lhs = a.values[:, None] * (g.diff @ k.dense())
    rhs = np.zeros_like(lhs)
    for m in range(1, F.degree + 1):
        if F.coeffs[m] != 0.0:
            rhs += (-1) ** m * F.coeffs[m] * iterate_kernel_derivative(k, a, m).dense()
    return DenseKernel(g, lhs - rhs)


def residual_eq14(k: Kernel, a: FunctionSample, F: PolynomialSpec, a_endpoints=None) -> float:
    return float(np.max(np.abs(eq14_defect(k, a, F, a_endpoints).values)))


# -- support sets -------------------------------------------------------------


@dataclass
class SupportReport:
    """Numerical epsilon-supports on the grid nodes and the derived case flags.

    All flags are numerical: a set that is empty on the nodes is only evidence
    that the continuous set is empty.
    """

    epsilon_supp: float
    omega_a: list
    omega_c: list
    supp_a: list
    supp_b: list
    supp_c: list
    supp_a_prime: list
    supp_c_prime: list
    case2b_empty: bool
    case2c_empty: bool
    case2c_alternative_premise: bool
    case2c_alternative_bc_constant: bool
    case2c_holds: bool
    case2d_holds: bool
    supp_b_supp_c_disjoint: bool
    omega_match: bool
    numerical: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def support_sets(a, b, c, epsilon_supp: float | None = None, bc_tol: float = 1e-8) -> SupportReport:
    for f in (b, c):
        check_same_grid(a.grid, f.grid)
    g = a.grid
    ap = g.diff @ a.values
    cp = g.diff @ c.values
    if epsilon_supp is None:
        scale = max(np.max(np.abs(v)) for v in (a.values, b.values, c.values, ap, cp))
        epsilon_supp = 1e-10 * scale if scale > 0 else 1e-300
    if epsilon_supp <= 0:
        raise InvalidArgument("epsilon_supp must be positive")

    def supp(v):
        return set(np.flatnonzero(np.abs(v) > epsilon_supp).tolist())

    everything = set(range(g.n))
    s_a, s_b, s_c = supp(a.values), supp(b.values), supp(c.values)
    s_ap, s_cp = supp(ap), supp(cp)
    omega_a = s_a & s_ap
    omega_c = s_c
    outside_a = everything - omega_a
    outside_c = everything - omega_c

    case2b = not (s_cp & s_b & outside_c)
    case2c_sets = not (s_ap & s_b & outside_a)
    premise = bool(s_ap - s_a)
    bc = b.values * c.values
    on = sorted(omega_c) or list(range(g.n))
    bc_const = bool(np.ptp(bc[on]) <= bc_tol * max(1.0, np.max(np.abs(bc[on]))))
    case2c = case2c_sets or (premise and bc_const)
    case2d = (not premise) or case2b

    return SupportReport(
        epsilon_supp=float(epsilon_supp),
        omega_a=sorted(omega_a),
        omega_c=sorted(omega_c),
        supp_a=sorted(s_a),
        supp_b=sorted(s_b),
        supp_c=sorted(s_c),
        supp_a_prime=sorted(s_ap),
        supp_c_prime=sorted(s_cp),
        case2b_empty=case2b,
        case2c_empty=case2c_sets,
        case2c_alternative_premise=premise,
        case2c_alternative_bc_constant=bc_const,
        case2c_holds=case2c,
        case2d_holds=case2d,
        supp_b_supp_c_disjoint=not (s_b & s_c),
        omega_match=len(omega_a ^ omega_c) <= 2,
    )
