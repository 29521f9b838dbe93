"""Build representations of AB = B F(A) from partial data.

For ``(Ax)(t) = a(t) int c(s) x(s) ds`` and ``(Bx)(t) = b(t) x'(t)`` with a
given ``a``, the relation with ``F(0) = 0`` reduces to

    -a(t) (b c)'(s) = k1 c(s) b(t) a'(t),   k1 = sum_k delta_k Q**(k-1),

where ``Q = int a c``.  When ``k1 != 0`` this fixes ``b`` up to a scale and
``c`` up to the base point ``xi0`` of an exponential integral; ``xi0`` is then
pinned by requiring that the resulting ``Q`` reproduces ``k1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .checks import residual_eq5
from .errors import (
    ConstructionError,
    InfeasibleConstruction,
    InternalConsistencyError,
    InvalidArgument,
    UnsupportedBranch,
)
from .grid import (
    DEFAULT_N,
    FunctionSample,
    Grid,
    build_grid,
    cumulative_integral,
    differentiate,
    quadrature,
    sample,
)
from .operators import DiffOp, IntegralOp, PolynomialSpec, SeparableKernel

REAL_SOLUTION = "real-solution"
NO_REAL_SOLUTION = "no-real-solution"
UNDEFINED_POWER = "undefined-power"

# exponents within this of a fraction with denominator <= MAX_DENOMINATOR are rational
MAX_DENOMINATOR = 10_000
_RATIONAL_TOL = 1e-12
_UNIT_TOL = 1e-12


@dataclass
class ConstructionParams:
    lambda_scale: float = 1.0
    xi0: float | None = None
    k1_const: float = 1.0
    q_ac: float | None = None
    delta_mono: float = 1.0
    n_power: int = 1
    gamma0: float = 0.0
    nu0: float = 1.0
    nu1: float = 0.0
    m_power: int = 2
    xi0_roots: tuple = ()

    def __post_init__(self):
        if self.lambda_scale == 0:
            raise InvalidArgument("lambda_scale must be nonzero")
        if self.delta_mono == 0:
            raise InvalidArgument("delta_mono must be nonzero")
        if int(self.n_power) != self.n_power or self.n_power < 1:
            raise InvalidArgument("n_power must be a positive integer")
        if int(self.m_power) != self.m_power or self.m_power < 2:
            raise InvalidArgument("m_power must be an integer >= 2")

    def kappa(self) -> float:
        """delta * Q**(n-1): the k1 constant of the monomial relation AB = delta B A^n."""
        if self.q_ac is None:
            raise InvalidArgument("q_ac is not set")
        return self.delta_mono * self.q_ac ** (self.n_power - 1)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["xi0_roots"] = list(self.xi0_roots)
        return d


# -- b and c from a -------------------------------------------------------------


def _a_derivatives(a: FunctionSample):
    ap = differentiate(a)
    app = differentiate(ap)
    return ap.values, app.values


def _omega_threshold(a: FunctionSample, ap: np.ndarray) -> float:
    scale = max(np.max(np.abs(a.values)), a.grid.length * np.max(np.abs(ap)))
    return 1e-10 * scale if scale > 0 else 0.0


def omega_a_mask(a: FunctionSample) -> np.ndarray:
    ap, _ = _a_derivatives(a)
    eps = _omega_threshold(a, ap)
    return (np.abs(a.values) > eps) & (np.abs(ap) > eps)


def build_b_from_a(a: FunctionSample, params: ConstructionParams) -> FunctionSample:
    """b = lambda a / (k1 a') on the nodes where a and a' are nonzero, zero elsewhere."""
    k1 = params.k1_const
    if k1 == 0:
        raise InvalidArgument("k1 = 0: b c must be constant instead, see construct_case1_pair")
    ap, _ = _a_derivatives(a)
    eps = _omega_threshold(a, ap)
    nonzero_a = np.abs(a.values) > eps
    omega = nonzero_a & (np.abs(ap) > eps)
    if not omega.any():
        raise ConstructionError("a or a' vanishes at every node; no b can be built")
    bad = np.flatnonzero(nonzero_a & ~omega)
    if bad.size:
        i = int(bad[0])
        raise ConstructionError(
            f"a' vanishes at node {i} (t={a.grid.nodes[i]:.6g}) where a is nonzero"
        )
    b = np.zeros(a.grid.n)
    b[omega] = params.lambda_scale * a.values[omega] / (k1 * ap[omega])
    return FunctionSample(a.grid, b)


def log_c_series(a: FunctionSample, k1: float):
    """Antiderivative (from alpha) of (-k1 a'^2 + a a'' - a'^2) / (a a')."""
    ap, app = _a_derivatives(a)
    eps = _omega_threshold(a, ap)
    bad = np.flatnonzero((np.abs(a.values) <= eps) | (np.abs(ap) <= eps))
    if bad.size:
        i = int(bad[0])
        raise ConstructionError(
            f"integrand for c is singular at node {i} (t={a.grid.nodes[i]:.6g}): a a' = 0"
        )
    v = a.values
    integrand = (-k1 * ap**2 + v * app - ap**2) / (v * ap)
    return cumulative_integral(FunctionSample(a.grid, integrand))


def build_c_from_a(a: FunctionSample, params: ConstructionParams) -> FunctionSample:
    """c(s) = exp(int_{xi0}^s (-k1 a'^2 + a a'' - a'^2)/(a a')), so c(xi0) = 1."""
    if params.k1_const == 0:
        raise InvalidArgument("k1 = 0 has no exponential c profile")
    xi0 = params.xi0
    g = a.grid
    if xi0 is None or not (g.alpha <= xi0 <= g.beta):
        raise InvalidArgument(f"xi0 must lie in [{g.alpha}, {g.beta}], got {xi0}")
    I = log_c_series(a, params.k1_const)
    return FunctionSample(g, np.exp(I(g.nodes) - I(xi0)))


# -- xi0 from the consistency equation --------------------------------------------


def _dedupe(roots, tol=1e-9):
    out = []
    for r in sorted(roots):
        if not out or r - out[-1] > tol:
            out.append(r)
    return out


def xi0_consistency(a: FunctionSample, F: PolynomialSpec, k1_target: float):
    """Return g with g(xi0) = sum_k delta_k Q(xi0)**(k-1) - k1_target.

    Since c_xi0(s) = exp(I(s) - I(xi0)), Q(xi0) = exp(-I(xi0)) * int a exp(I).
    """
    I = log_c_series(a, k1_target)
    base = quadrature(a * np.exp(I(a.grid.nodes)))

    def g(xi):
        q = np.exp(-I(xi)) * base
        return sum(d * q ** (k - 1) for k, d in enumerate(F.coeffs) if k >= 1) - k1_target

    return g


def solve_xi0_general(
    a: FunctionSample, F: PolynomialSpec, k1_target: float, oversample: int = 8
) -> list:
    """All xi0 in [alpha, beta] closing the k1 consistency equation.

    Sign changes are bracketed on the grid nodes plus a uniform probe of
    ``oversample * n`` points and refined with Brent's method.  When the
    equation does not depend on xi0 (deg F <= 1) and holds identically, every
    grid node is returned.
    """
    if k1_target == 0:
        raise InvalidArgument("k1_target must be nonzero")
    g_ = a.grid
    tol = 1e-12 * max(1.0, abs(k1_target))
    if F.degree <= 1:
        const = F.k1_scalar(0.0) - k1_target
        return [float(t) for t in g_.nodes] if abs(const) <= tol else []
    g = xi0_consistency(a, F, k1_target)
    return _scan_roots(g, g_, oversample, tol)


def xi0_for_q(a: FunctionSample, k1: float, q_target: float, oversample: int = 8) -> list:
    """All xi0 in [alpha, beta] with int a c_xi0 = q_target for the given k1.

    The numerical counterpart of the closed forms in their Q-driven mode,
    where Q is prescribed instead of F.
    """
    if k1 == 0:
        raise InvalidArgument("k1 must be nonzero")
    I = log_c_series(a, k1)
    base = quadrature(a * np.exp(I(a.grid.nodes)))

    def g(xi):
        return np.exp(-I(xi)) * base - q_target

    return _scan_roots(g, a.grid, oversample, 1e-12 * max(1.0, abs(q_target)))


def _scan_roots(g, grid: Grid, oversample: int, tol: float) -> list:
    # sign changes on nodes plus a uniform probe, refined by Brent; exact zeros kept
    probes = np.union1d(grid.nodes, np.linspace(grid.alpha, grid.beta, oversample * grid.n + 1))
    values = g(probes)
    if not np.all(np.isfinite(values)):
        bad = probes[~np.isfinite(values)]
        raise ConstructionError(f"consistency function is not finite at xi0={bad[0]:.6g}")
    roots = []
    for lo, hi, glo, ghi in zip(probes[:-1], probes[1:], values[:-1], values[1:]):
        if glo * ghi < 0:
            roots.append(brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    for t, v in zip(probes, values):
        if abs(v) <= tol and all(abs(t - r) > 1e-9 for r in roots):
            roots.append(float(t))
    return _dedupe(float(r) for r in roots)


# -- closed forms for a = nu0 t^m and a = nu0 + nu1 t -------------------------------


class _Undefined(Exception):
    pass


def rational_exponent(p: float):
    """Fraction equal to ``p`` (denominator <= MAX_DENOMINATOR) or None."""
    frac = Fraction(p).limit_denominator(MAX_DENOMINATOR)
    if abs(float(frac) - p) <= _RATIONAL_TOL * max(1.0, abs(p)):
        return frac
    return None


def real_power(x: float, e: float) -> float:
    """x**e on the reals; negative bases need a rational exponent with odd denominator."""
    if x > 0:
        return x**e
    if x == 0:
        if e > 0:
            return 0.0
        if e == 0:
            return 1.0
        raise _Undefined("zero to a negative power")
    frac = rational_exponent(e)
    if frac is None or frac.denominator % 2 == 0:
        raise _Undefined(f"negative base to the power {e}")
    return (-1.0) ** (frac.numerator % 2) * abs(x) ** e


def _power_roots(R: float, p: float):
    """Real u with u**p = R, split by the sign of u.

    Returns (roots, negative_side_undefined).  Positive u needs R > 0.  For
    negative u, p = l1/l2 must be rational with l2 odd; then R < 0 needs l1
    odd and R > 0 needs l1 even.
    """
    roots = []
    if R > 0:
        roots.append(R ** (1.0 / p))
    frac = rational_exponent(p)
    if frac is None:
        return roots, True
    l1, l2 = frac.numerator, frac.denominator
    if l2 % 2 == 1:
        if R < 0 and l1 % 2 == 1:
            roots.append(-abs(R) ** (1.0 / p))
        elif R > 0 and l1 % 2 == 0:
            roots.append(-(R ** (1.0 / p)))
    return roots, False


def _odd_root(r: float, k: int) -> float:
    return math.copysign(abs(r) ** (1.0 / k), r)


@dataclass
class Xi0Outcome:
    roots: list
    verdict: str
    branch: str
    identically: bool = False
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _in_interval(vals, alpha, beta):
    slack = 1e-12 * max(1.0, abs(alpha), abs(beta))
    return sorted(min(max(v, alpha), beta) for v in vals if alpha - slack <= v <= beta + slack)


def _monomial_for_q(p_: ConstructionParams, alpha, beta, q, kappa) -> Xi0Outcome:
    nu0, m = p_.nu0, int(p_.m_power)
    if abs(kappa - 1.0) <= _UNIT_TOL:
        if alpha <= 0.0 <= beta:
            raise UnsupportedBranch("log branch needs 0 outside [alpha, beta]")
        L = math.log(abs(beta / alpha))
        r = q / (nu0 * L)
        if m % 2 == 0:
            cands, branch = [_odd_root(r, m + 1)], "monomial/log/m-even"
        elif r > 0:
            root = r ** (1.0 / (m + 1))
            cands, branch = [-root, root], "monomial/log/m-odd"
        else:
            return Xi0Outcome([], NO_REAL_SOLUTION, "monomial/log/m-odd/nonpositive")
        roots = _in_interval(cands, alpha, beta)
        return Xi0Outcome(roots, REAL_SOLUTION if roots else NO_REAL_SOLUTION, branch)

    p = 1.0 + kappa * m
    e = m * (1.0 - kappa)
    try:
        D = real_power(beta, e) - real_power(alpha, e)
    except _Undefined as exc:
        return Xi0Outcome([], UNDEFINED_POWER, "monomial/integral-undefined", notes=[str(exc)])
    if abs(p) <= _UNIT_TOL:
        target = nu0 * (beta ** (m + 1) - alpha ** (m + 1)) / (m + 1)
        if math.isclose(q, target, rel_tol=1e-9, abs_tol=1e-12):
            return Xi0Outcome([], REAL_SOLUTION, "monomial/zero-exponent", identically=True)
        return Xi0Outcome([], NO_REAL_SOLUTION, "monomial/zero-exponent")
    if D == 0:
        return Xi0Outcome([], NO_REAL_SOLUTION, "monomial/degenerate-integral")
    R = q * m * (1.0 - kappa) / (nu0 * D)
    cands, undefined = _power_roots(R, p)
    roots = _in_interval(cands, alpha, beta)
    if roots:
        return Xi0Outcome(roots, REAL_SOLUTION, "monomial/power")
    if undefined and alpha < 0:
        return Xi0Outcome([], UNDEFINED_POWER, "monomial/power/irrational-exponent")
    return Xi0Outcome([], NO_REAL_SOLUTION, "monomial/power")


def _affine_for_q(p_: ConstructionParams, alpha, beta, q, kappa) -> Xi0Outcome:
    nu0, nu1 = p_.nu0, p_.nu1
    ua, ub = nu0 + nu1 * alpha, nu0 + nu1 * beta

    def to_xi(us):
        return _in_interval([(u - nu0) / nu1 for u in us], alpha, beta)

    if abs(kappa - 1.0) <= _UNIT_TOL:
        if ua * ub <= 0:
            raise UnsupportedBranch("log branch needs nu0 + nu1 t nonzero on [alpha, beta]")
        r = q * nu1 / math.log(abs(ub / ua))
        if r < 0:
            return Xi0Outcome([], NO_REAL_SOLUTION, "affine/log/negative")
        roots = to_xi([-math.sqrt(r), math.sqrt(r)])
        return Xi0Outcome(roots, REAL_SOLUTION if roots else NO_REAL_SOLUTION, "affine/log")

    p = 1.0 + kappa
    e = 1.0 - kappa
    try:
        D = real_power(ub, e) - real_power(ua, e)
    except _Undefined as exc:
        return Xi0Outcome([], UNDEFINED_POWER, "affine/integral-undefined", notes=[str(exc)])
    if abs(p) <= _UNIT_TOL:
        target = (ub**2 - ua**2) / (2.0 * nu1)
        if math.isclose(q, target, rel_tol=1e-9, abs_tol=1e-12):
            return Xi0Outcome([], REAL_SOLUTION, "affine/zero-exponent", identically=True)
        return Xi0Outcome([], NO_REAL_SOLUTION, "affine/zero-exponent")
    if D == 0:
        return Xi0Outcome([], NO_REAL_SOLUTION, "affine/degenerate-integral")
    R = q * nu1 * (1.0 - kappa) / D
    cands, undefined = _power_roots(R, p)
    roots = to_xi(cands)
    if roots:
        return Xi0Outcome(roots, REAL_SOLUTION, "affine/power")
    if undefined and min(ua, ub) < 0:
        return Xi0Outcome([], UNDEFINED_POWER, "affine/power/irrational-exponent")
    return Xi0Outcome([], NO_REAL_SOLUTION, "affine/power")


_FAMILIES = {"monomial": _monomial_for_q, "affine": _affine_for_q}


def _check_family(family: str, params: ConstructionParams):
    if family not in _FAMILIES:
        raise InvalidArgument(f"family must be one of {sorted(_FAMILIES)}, got {family!r}")
    if params.nu0 == 0 and family == "monomial":
        raise InvalidArgument("monomial family needs nu0 != 0")
    if params.nu1 == 0 and family == "affine":
        raise InvalidArgument("affine family needs nu1 != 0")


def solve_xi0_closed_form(
    family: str,
    params: ConstructionParams,
    alpha: float,
    beta: float,
    F: PolynomialSpec | None = None,
) -> Xi0Outcome:
    """Closed-form xi0 for a(t) = nu0 t^m or a(t) = nu0 + nu1 t.

    Without ``F`` this solves the monomial relation AB = delta B A^n for the
    given ``q_ac``.  With ``F`` it uses ``k1_const`` and enumerates every real
    Q with sum_k delta_k Q**(k-1) = k1 first.
    """
    _check_family(family, params)
    if not alpha < beta:
        raise InvalidArgument("need alpha < beta")
    solve = _FAMILIES[family]
    if F is None:
        q = params.q_ac
        if q is None or q == 0:
            raise UnsupportedBranch("Q = 0 falls under case 1, not the xi0 equation")
        return _annotate(solve(params, alpha, beta, q, params.kappa()), family, params, alpha, beta)

    kappa = params.k1_const
    if kappa == 0:
        raise UnsupportedBranch("k1 = 0 falls under case 1, not the xi0 equation")
    if F.degree <= 1:
        if abs(F.k1_scalar(0.0) - kappa) <= 1e-12 * max(1.0, abs(kappa)):
            return Xi0Outcome([], REAL_SOLUTION, f"{family}/k1-independent", identically=True)
        return Xi0Outcome([], NO_REAL_SOLUTION, f"{family}/k1-independent")
    # sum_{k>=1} delta_k Q^(k-1) - kappa, highest power first
    poly = [F.coeffs[k] for k in range(F.degree, 1, -1)] + [F.coeffs[1] - kappa]
    qs = []
    for z in np.roots(poly):
        if abs(z.imag) <= 1e-10 * max(1.0, abs(z)) and z.real != 0:
            qs.append(float(z.real))
    outcomes = [solve(params, alpha, beta, q, kappa) for q in sorted(set(qs))]
    roots = _dedupe(r for o in outcomes for r in o.roots)
    branches = ",".join(sorted({o.branch for o in outcomes})) or f"{family}/no-real-q"
    if roots or any(o.identically for o in outcomes):
        return Xi0Outcome(roots, REAL_SOLUTION, branches, any(o.identically for o in outcomes))
    if any(o.verdict == UNDEFINED_POWER for o in outcomes):
        return _annotate(Xi0Outcome([], UNDEFINED_POWER, branches), family, params, alpha, beta)
    return Xi0Outcome([], NO_REAL_SOLUTION, branches)


def _annotate(outcome: Xi0Outcome, family, params, alpha, beta) -> Xi0Outcome:
    # The closed forms split powers of a negative base; when a keeps one sign
    # the exponential form of c only sees |a(xi0)/a(s)| and stays real.
    if outcome.verdict != UNDEFINED_POWER:
        return outcome
    if family == "monomial":
        one_sign = alpha > 0 or beta < 0
    else:
        one_sign = (params.nu0 + params.nu1 * alpha) * (params.nu0 + params.nu1 * beta) > 0
    if one_sign:
        outcome.notes.append(
            "a keeps one sign on [alpha, beta]: the exponential form of c is real, "
            "so solve_xi0_general may still find roots"
        )
    return outcome


def family_sample(family: str, params: ConstructionParams, grid: Grid) -> FunctionSample:
    if family == "monomial":
        return sample(grid, lambda t: params.nu0 * t ** params.m_power)
    if family == "affine":
        return sample(grid, lambda t: params.nu0 + params.nu1 * t)
    raise InvalidArgument(f"unknown family {family!r}")


# -- assembled constructions ---------------------------------------------------------


def construct_separable_representation(
    a: FunctionSample,
    F: PolynomialSpec,
    k1_target: float,
    lambda_scale: float,
    tol: float = 1e-8,
):
    """Build (A, B, params) with A = a(t) c(s), B = b d/dt and AB = B F(A) on D.

    The smallest admissible xi0 is used; every root found is kept in
    ``params.xi0_roots``.
    """
    if F.delta0 != 0.0:
        raise InvalidArgument("F must have no constant term")
    if k1_target == 0:
        raise InfeasibleConstruction(
            "k1 = 0 is not covered by the exponential construction; "
            "case 1 applies instead (b c constant), see construct_case1_pair"
        )
    roots = solve_xi0_general(a, F, k1_target)
    if not roots:
        raise InfeasibleConstruction(f"no xi0 in [{a.grid.alpha}, {a.grid.beta}] gives k1={k1_target}")
    params = ConstructionParams(
        lambda_scale=lambda_scale, xi0=roots[0], k1_const=k1_target, xi0_roots=tuple(roots)
    )
    c = build_c_from_a(a, params)
    b = build_b_from_a(a, params)
    kernel = SeparableKernel(a, c)
    params.q_ac = kernel.q_value()
    k1_check = F.k1_scalar(params.q_ac)
    if abs(k1_check - k1_target) > 1e-9 * max(1.0, abs(k1_target)):
        raise InternalConsistencyError(f"k1 recomputed as {k1_check!r}, expected {k1_target!r}")
    r5 = residual_eq5(kernel, b, F)
    if r5 > tol:
        raise InternalConsistencyError(f"pointwise residual {r5:.3e} exceeds {tol:.1e}")
    return IntegralOp(kernel), DiffOp(b), params


def construct_case1_pair(a: FunctionSample, gamma0: float, c: FunctionSample | None = None):
    """b, c with b c = gamma0 (the k1 = 0 case).  Default c = 1."""
    if np.max(np.abs(a.values)) == 0:
        raise InvalidArgument("case 1 needs a not identically zero")
    if c is None:
        c = FunctionSample(a.grid, np.ones(a.grid.n))
    if np.any(c.values <= 0):
        raise InvalidArgument("c must be positive")
    return gamma0 / c, c


def example4_xi0(gamma0: float) -> float:
    """Real xi0 with (xi0 + 2 gamma0)^3 = 8 gamma0 (1 + 2 gamma0)."""
    _check_gamma(gamma0)
    return _odd_root(8.0 * gamma0 * (1.0 + 2.0 * gamma0), 3) - 2.0 * gamma0


def _check_gamma(gamma0):
    if gamma0 == 0 or gamma0 == -0.5:
        raise InvalidArgument("gamma0 must avoid 0 and -1/2")


def phi_closed_form(gamma0: float, xi0: float) -> float:
    _check_gamma(gamma0)
    return (xi0 + 2 * gamma0) ** 3 / (4 * gamma0 * (2 * gamma0 + 1))


def phi_gamma_xi(gamma0: float, xi0: float, grid: Grid | None = None) -> float:
    """Quadrature of (xi0 + 2 g)^3 / (s + 2 g)^3 (s/2 + g) over [0, 1]."""
    _check_gamma(gamma0)
    if 0.0 <= -2.0 * gamma0 <= 1.0:
        raise InvalidArgument(f"integrand has a pole at s={-2 * gamma0} in [0, 1]")
    if grid is None:
        grid = build_grid(DEFAULT_N, 0.0, 1.0)
    if grid.alpha != 0.0 or grid.beta != 1.0:
        raise InvalidArgument("phi is defined on [0, 1]")
    f = sample(grid, lambda s: (xi0 + 2 * gamma0) ** 3 / (s + 2 * gamma0) ** 3 * (s / 2 + gamma0))
    return quadrature(f)


# -- the differential-first example ---------------------------------------------------


@dataclass
class OdeProfile:
    """Solution family of the reduced ODE for AB = BA^2 with A = a d/dt.

    ``c_sample`` is the smooth continuation lambda3 * h(t) / h(t_ref) of
    lambda3 * exp(int e); it changes sign where ``e`` has a pole.
    """

    lambda_neg: float
    lambda1: float
    lambda2: float
    lambda3: float
    branch: str
    t_ref: float
    e_sample: FunctionSample
    a_sample: FunctionSample
    b_sample: FunctionSample
    c_sample: FunctionSample
    ode_residual: float
    ode_residual_other_branch: float
    e_poles: list
    e_at_half: float | None

    @property
    def grid(self) -> Grid:
        return self.a_sample.grid

    def summary(self) -> dict:
        return {
            "lambda_neg": self.lambda_neg,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "lambda3": self.lambda3,
            "branch": self.branch,
            "t_ref": self.t_ref,
            "interior": [self.grid.alpha, self.grid.beta],
            "n": self.grid.n,
            "ode_residual": self.ode_residual,
            "ode_residual_other_branch": self.ode_residual_other_branch,
            "e_poles": list(self.e_poles),
            "e_at_half": self.e_at_half,
        }


BRANCHES = ("abs", "signed")


def _w(s, lambda2, branch):
    """Denominator of e and its derivative; (s(s-1))^(3/2) read per ``branch``.

    ``abs`` takes |s(s-1)|^(3/2); ``signed`` keeps the sign, -|s(s-1)|^(3/2)
    on (0, 1).
    """
    p = s - s * s
    sign = 1.0 if branch == "abs" else -1.0
    P = sign * p**1.5
    dP = sign * 1.5 * np.sqrt(p) * (1.0 - 2.0 * s)
    w = lambda2 * P - 4 * s**3 + 6 * s**2 - 2 * s
    dw = lambda2 * dP - 12 * s**2 + 12 * s - 2
    return w, dw


def e_closed_form(s, lambda2: float, branch: str = "abs"):
    w, dw = _w(np.asarray(s, dtype=float), lambda2, branch)
    return 1.0 / w, -dw / w**2


def reduced_ode_residual(a: FunctionSample, lam: float, e, de) -> np.ndarray:
    """a^2 e' + 3 a a' e + a^2 e^2 + a'^2 + a'' a - lambda at the nodes."""
    ap, app = _a_derivatives(a)
    v = a.values
    return v**2 * de + 3 * v * ap * e + v**2 * e**2 + ap**2 + app * v - lam


def build_final_example(
    lambda_neg: float = -1.0,
    lambda1: float = 1.0,
    lambda2: float = 1.0,
    lambda3: float = 1.0,
    interior=(0.1, 0.9),
    n: int = DEFAULT_N,
    branch: str = "abs",
) -> OdeProfile:
    if lambda_neg >= 0:
        raise InvalidArgument("lambda must be negative")
    if lambda2 == 0:
        raise InvalidArgument("lambda2 must be nonzero")
    if branch not in BRANCHES:
        raise InvalidArgument(f"branch must be one of {BRANCHES}")
    lo, hi = map(float, interior)
    if not (0.0 < lo < hi < 1.0):
        raise ConstructionError(
            f"interior [{lo}, {hi}] must stay inside (0, 1): a, b and c are singular at 0 and 1"
        )
    grid = build_grid(n, lo, hi)
    s = grid.nodes
    a = sample(grid, lambda t: np.sqrt(lambda_neg * t * (t - 1.0)))

    e_vals, de_vals = e_closed_form(s, lambda2, branch)
    other = "signed" if branch == "abs" else "abs"
    e_o, de_o = e_closed_form(s, lambda2, other)
    res = reduced_ode_residual(a, lambda_neg, e_vals, de_vals)
    res_o = reduced_ode_residual(a, lambda_neg, e_o, de_o)

    def w_only(t):
        return _w(np.asarray(t, dtype=float), lambda2, branch)[0]

    probe = np.linspace(lo, hi, 8 * n + 1)
    wp = w_only(probe)
    poles = [
        brentq(w_only, x0, x1, xtol=1e-15)
        for x0, x1, w0, w1 in zip(probe[:-1], probe[1:], wp[:-1], wp[1:])
        if w0 * w1 < 0
    ]

    t_ref = 0.5 if lo < 0.5 < hi else (lo + hi) / 2
    # h = w / p^(3/2) solves the linear ODE for c and satisfies h'/h = e
    p = s - s * s
    h = w_only(s) / p**1.5
    h_ref = float(w_only(t_ref) / (t_ref - t_ref**2) ** 1.5)
    if abs(h_ref) < 1e-12:
        raise ConstructionError(f"c vanishes at the reference point t={t_ref}")
    c = FunctionSample(grid, lambda3 * h / h_ref)

    log_b = cumulative_integral(lambda_neg / a)
    b = FunctionSample(grid, lambda1 * np.exp(log_b(s) - log_b(t_ref)))

    e_half = None
    if lo <= 0.5 <= hi:
        e_half = float(e_closed_form(0.5, lambda2, branch)[0])
    return OdeProfile(
        lambda_neg=lambda_neg,
        lambda1=lambda1,
        lambda2=lambda2,
        lambda3=lambda3,
        branch=branch,
        t_ref=t_ref,
        e_sample=FunctionSample(grid, e_vals),
        a_sample=a,
        b_sample=b,
        c_sample=c,
        ode_residual=float(np.max(np.abs(res))),
        ode_residual_other_branch=float(np.max(np.abs(res_o))),
        e_poles=[float(x) for x in poles],
        e_at_half=e_half,
    )


def select_branch(
    lambda_neg: float = -1.0,
    lambda2: float = 1.0,
    interior=(0.1, 0.9),
    n: int = DEFAULT_N,
    tol: float = 1e-6,
):
    """Try each reading of (s(s-1))^(3/2) against the reduced ODE.

    Returns the first branch (in ``BRANCHES`` order) whose residual is within
    ``tol`` together with the residual of every branch.
    """
    residuals = {
        br: build_final_example(lambda_neg, 1.0, lambda2, 1.0, interior, n, br).ode_residual
        for br in BRANCHES
    }
    for br in BRANCHES:
        if residuals[br] <= tol:
            return br, residuals
    raise ConstructionError(f"no branch satisfies the reduced ODE within {tol}: {residuals}")
