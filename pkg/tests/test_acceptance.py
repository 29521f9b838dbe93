"""Acceptance criteria 1-9, each at its stated tolerance.

Every test records a one-line verdict that is echoed in the terminal summary.
"""

import math

import numpy as np
import pytest

from covrep import fixtures
from covrep.checks import residual_direct, residual_eq5
from covrep.constructors import (
    NO_REAL_SOLUTION,
    REAL_SOLUTION,
    UNDEFINED_POWER,
    ConstructionParams,
    build_c_from_a,
    build_final_example,
    construct_separable_representation,
    example4_xi0,
    family_sample,
    log_c_series,
    phi_closed_form,
    phi_gamma_xi,
    select_branch,
    solve_xi0_closed_form,
    solve_xi0_general,
    xi0_for_q,
)
from covrep.grid import build_grid, make_test_family, quadrature, sample
from covrep.operators import (
    DenseKernel,
    DiffOp,
    IntegralOp,
    PolynomialSpec,
    apply,
    ba_n_expansion,
    iterate_kernel_integral,
    power_apply,
)

LN2 = math.log(2.0)
N = 64


def _sup(f):
    return float(np.max(np.abs(f.values)))


# -- 1 ------------------------------------------------------------------------------


def test_criterion_1_example3_relations(record_criterion):
    grid = build_grid(N)
    A = IntegralOp(DenseKernel.from_function(grid, lambda t, s: (t + 1) / (LN2 * (s + 1) ** 2)))
    B = DiffOp(sample(grid, lambda t: -LN2 * (t + 1)))
    family = make_test_family(grid, 12)

    worst_power = 0.0
    for n in range(1, 6):
        rep = residual_direct(A, B, PolynomialSpec.monomial(n), family, 1e-8)
        worst_power = max(worst_power, rep.max_residual)

    worst_closed = 0.0
    for x in family:
        ax = A(x)
        for lhs, rhs in ((A(B(x)), -LN2 * ax), (B(ax), -LN2 * ax), (A(ax), ax)):
            worst_closed = max(worst_closed, _sup(lhs - rhs) / x.sup())

    ok = worst_power <= 1e-8 and worst_closed <= 1e-8
    record_criterion(1, "Example-3 AB=BA^n", ok, f"AB-BA^n {worst_power:.1e}, closed forms {worst_closed:.1e}")
    assert ok


# -- 2 ------------------------------------------------------------------------------


def test_criterion_2_example3_xi0_and_c(record_criterion):
    grid = build_grid(N)
    # the printed kernel factors as [(t+1) ln2] * [1 / (ln2^2 (s+1)^2)]
    a = sample(grid, lambda t: (t + 1) * LN2)
    xi_expect = (1 - LN2) / LN2
    roots = solve_xi0_general(a, PolynomialSpec.monomial(2), 1.0)
    xi_err = abs(roots[0] - xi_expect) if len(roots) == 1 else math.inf

    c = build_c_from_a(a, ConstructionParams(k1_const=1.0, xi0=roots[0]))
    printed = 1.0 / (LN2**2 * (grid.nodes + 1) ** 2)
    # the normalisation c(xi0) = 1 already matches the printed kernel: factor 1
    rescale = printed[0] / c.values[0]
    c_err = float(np.max(np.abs(c.values - printed)))

    ok = xi_err <= 1e-10 and c_err <= 1e-9 and abs(rescale - 1.0) <= 1e-9
    record_criterion(2, "Example-3 xi0 and c", ok, f"xi0 err {xi_err:.1e}, c err {c_err:.1e}, rescale {rescale:.12f}")
    assert ok


# -- 3 ------------------------------------------------------------------------------


def test_criterion_3_example4(record_criterion):
    xi0 = example4_xi0(0.5)
    phi_q = phi_gamma_xi(0.5, xi0)
    phi_c = phi_closed_form(0.5, xi0)

    fx = fixtures.build("example4", n=N, gamma0=0.5, lam=1.0)
    direct = residual_direct(fx.A, fx.B, fx.F, fx.family, 1e-8).max_residual

    lam = fx.meta["lambda"]
    worst_identity = 0.0
    for delta, power in ((1, 2), (1, 3), (2, 2)):
        for x in fx.family:
            lhs = fx.A(fx.B(x)) - delta * apply(fx.B, power_apply(fx.A, power, x))
            rhs = (1 - delta * phi_c ** (power - 1) / 2) * lam * fx.A(x)
            worst_identity = max(worst_identity, _sup(lhs - rhs))

    ok = (
        abs(xi0 - 1.0) <= 1e-10
        and abs(phi_q - 2.0) <= 1e-10
        and abs(phi_c - 2.0) <= 1e-10
        and direct <= 1e-8
        and worst_identity <= 1e-8
    )
    detail = f"xi0 {xi0:.14f}, phi {phi_q:.12f}/{phi_c:.12f}, AB-BA^2 {direct:.1e}, identity {worst_identity:.1e}"
    record_criterion(3, "Example-4", ok, detail)
    assert ok


# -- 4 ------------------------------------------------------------------------------


def _random_dense(grid, seed):
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(4, 4))

    def k(t, s):
        return sum(C[i, j] * np.cos(i * t + 0.5) * np.cos(j * s - 0.3) for i in range(4) for j in range(4))

    return DenseKernel.from_function(grid, k)


def test_criterion_4_ba_n_expansion(record_criterion):
    grid = build_grid(N)
    A = DiffOp(sample(grid, lambda t: 0.5 + t - t**2))
    x = sample(grid, lambda t: np.sin(3 * t) + t**2)
    worst = 0.0
    for seed in range(5):
        B = IntegralOp(_random_dense(grid, seed))
        for n in range(4):
            direct = apply(B, power_apply(A, n, x))
            worst = max(worst, _sup(direct - ba_n_expansion(B, A, n, x)))
    ok = worst <= 1e-7
    record_criterion(4, "BA^n expansion", ok, f"max error {worst:.1e} over 5 kernels, n<=3")
    assert ok


# -- 5 ------------------------------------------------------------------------------


def _constructed():
    """(label, A, B, F) for representations built by the separable constructor."""
    out = []
    g = build_grid(N)
    a3 = sample(g, lambda t: (t + 1) * LN2)
    for n in range(2, 6):
        A, B, _ = construct_separable_representation(a3, PolynomialSpec.monomial(n), 1.0, -LN2)
        out.append((f"affine-ln2 t^{n}", A, B, PolynomialSpec.monomial(n)))
    a4 = sample(g, lambda t: t / 2 + 0.5)
    A, B, _ = construct_separable_representation(a4, PolynomialSpec.monomial(2), 2.0, 1.0)
    out.append(("example4 form", A, B, PolynomialSpec.monomial(2)))
    gg = build_grid(N, 0.5, 1.5)
    F = PolynomialSpec((0, 0.5, 1.0, 0.25))
    A, B, _ = construct_separable_representation(sample(gg, lambda t: 1 + t**2), F, 2.0, 0.7)
    out.append(("generic 1+t^2", A, B, F))
    for name in ("example3", "example4", "disjoint-support", "const-coeff"):
        fx = fixtures.build(name, n=N)
        out.append((name, fx.A, fx.B, fx.F))
    return out


# b + 0.1 still satisfies the relation when a, b, c are all constant
B_INVARIANT = {"const-coeff"}


def test_criterion_5_constructed_representations(record_criterion):
    worst_pass, weakest_fail, lines = 0.0, math.inf, []
    for label, A, B, F in _constructed():
        fam = make_test_family(A.grid, fixtures.FAMILY_SIZE)
        e5 = residual_eq5(A.kernel, B.multiplier, F)
        d = residual_direct(A, B, F, fam).max_residual
        worst_pass = max(worst_pass, e5, d)
        if label in B_INVARIANT:
            continue
        Bp = DiffOp(B.multiplier + 0.1)
        e5p = residual_eq5(A.kernel, Bp.multiplier, F)
        dp = residual_direct(A, Bp, F, fam).max_residual
        weakest_fail = min(weakest_fail, e5p, dp)
        lines.append(f"{label}: {e5p:.2e}/{dp:.2e}")
    ok = worst_pass <= 1e-8 and weakest_fail > 1e-3
    detail = f"unperturbed max {worst_pass:.1e}, perturbed min {weakest_fail:.1e}; const-coeff is b-invariant"
    record_criterion(5, "constructed representations", ok, detail)
    assert ok, lines


def test_constant_coefficient_fixture_is_invariant_under_b_shift():
    fx = fixtures.build("const-coeff", n=N, perturb_b=0.1)
    assert residual_direct(fx.A, fx.B, fx.F, fx.family).max_residual <= 1e-8
    assert residual_eq5(fx.A.kernel, fx.b, fx.F) <= 1e-8


# -- 6 ------------------------------------------------------------------------------


def test_criterion_6_separable_iterates(record_criterion):
    worst = 0.0
    for name in ("example3", "example4"):
        k0 = fixtures.build(name, n=N).A.kernel
        q = k0.q_value()
        dense = DenseKernel(k0.grid, k0.dense())
        for m in range(6):
            worst = max(worst, float(np.max(np.abs(iterate_kernel_integral(dense, m).dense() - k0.dense() * q**m))))
    ok = worst <= 1e-10
    record_criterion(6, "separable iterates k_m = k_0 Q^m", ok, f"max error {worst:.1e}, m<=5")
    assert ok


# -- 7 ------------------------------------------------------------------------------

# family, nu0, nu1, m, (alpha, beta), k1, xi0 used to generate Q, n
MONOMIAL_SETS = [
    ("monomial", 1.0, 0.0, 2, (1.0, 2.0), 1.0, 1.3, 1),
    ("monomial", 2.0, 0.0, 3, (1.0, 2.0), 1.0, 1.7, 1),
    ("monomial", 1.0, 0.0, 2, (-2.0, -1.0), 1.0, -1.4, 1),
    ("monomial", -1.5, 0.0, 3, (-2.0, -1.0), 1.0, -1.6, 1),
    ("monomial", 1.0, 0.0, 2, (0.5, 1.5), 2.0, 0.9, 1),
    ("monomial", 1.0, 0.0, 2, (0.5, 1.5), 2.0, 0.9, 2),
    ("monomial", 0.5, 0.0, 4, (1.0, 3.0), 0.5, 2.0, 2),
    ("monomial", 1.0, 0.0, 3, (-2.0, -0.5), 3.0, -1.0, 2),
    ("monomial", 1.0, 0.0, 2, (-3.0, -1.0), 0.7, -2.2, 3),
    ("monomial", 3.0, 0.0, 5, (0.2, 1.0), 1.5, 0.6, 3),
]
AFFINE_SETS = [
    ("affine", 1.0, 1.0, 2, (0.0, 1.0), 1.0, 0.4, 1),
    ("affine", 2.0, -1.0, 2, (0.0, 1.0), 1.0, 0.7, 1),
    ("affine", -1.0, -1.0, 2, (0.0, 1.0), 1.0, 0.3, 1),
    ("affine", 1.0, 1.0, 2, (0.0, 1.0), 2.0, 0.5, 1),
    ("affine", 1.0, 1.0, 2, (0.0, 1.0), 2.0, 0.5, 2),
    ("affine", 2.0, 1.0, 2, (0.0, 1.0), 0.5, 0.3, 2),
    ("affine", -2.0, 1.0, 2, (0.0, 1.0), 3.0, 0.8, 2),
    ("affine", 0.5, 2.0, 2, (0.0, 1.0), 1.5, 0.6, 3),
    ("affine", 3.0, -2.0, 2, (0.0, 1.0), 0.3, 0.1, 2),
    ("affine", 1.0, 0.5, 2, (-1.0, 1.0), 4.0, -0.2, 2),
]


def _q_at(a, k1, xi):
    """Q that makes xi a root: exp(-I(xi)) * int a exp(I)."""
    series = log_c_series(a, k1)
    base = quadrature(a * np.exp(series(a.grid.nodes)))
    return float(np.exp(-series(xi)) * base)


def _agreement(case):
    family, nu0, nu1, m, (alpha, beta), k1, xi_true, n_power = case
    grid = build_grid(N, alpha, beta)
    a = family_sample(family, ConstructionParams(nu0=nu0, nu1=nu1, m_power=m), grid)
    q = _q_at(a, k1, xi_true)
    params = ConstructionParams(
        nu0=nu0, nu1=nu1, m_power=m, q_ac=q, delta_mono=k1 / q ** (n_power - 1), n_power=n_power
    )
    closed = solve_xi0_closed_form(family, params, alpha, beta)
    general = xi0_for_q(a, k1, q)
    if closed.verdict != REAL_SOLUTION or not closed.roots or not general:
        return closed.verdict, math.inf
    gap = max(min(abs(r - g) for g in general) for r in closed.roots)
    gap = max(gap, max(min(abs(r - g) for r in closed.roots) for g in general))
    return closed.verdict, max(gap, min(abs(r - xi_true) for r in closed.roots))


def _verdict_cases():
    """(label, verdict, expected verdict, general roots) for unsolvable branches."""
    out = []
    # log branch, R above the range of Q on [1, 2]: the real root lies outside
    p = ConstructionParams(nu0=1.0, m_power=2, q_ac=40.0, delta_mono=1.0, n_power=1)
    a = family_sample("monomial", p, build_grid(N, 1.0, 2.0))
    out.append(("root outside", solve_xi0_closed_form("monomial", p, 1.0, 2.0).verdict, NO_REAL_SOLUTION,
                 xi0_for_q(a, 1.0, 40.0)))
    # odd m with R < 0 in the log branch: t^(1+m) = R has no real solution on t > 0
    p = ConstructionParams(nu0=1.0, m_power=3, q_ac=-1.0, delta_mono=1.0, n_power=1)
    a = family_sample("monomial", p, build_grid(N, 1.0, 2.0))
    out.append(("odd m, R<0", solve_xi0_closed_form("monomial", p, 1.0, 2.0).verdict, NO_REAL_SOLUTION,
                 xi0_for_q(a, 1.0, -1.0)))
    # p = 0 with the integral identity violated
    q = ((1 + 2.0) ** 2 - 1.0) / (2 * 2.0) + 1.0
    p = ConstructionParams(nu0=1.0, nu1=2.0, q_ac=q, delta_mono=-1.0, n_power=1)
    out.append(("p=0 mismatch", solve_xi0_closed_form("affine", p, 0.0, 1.0).verdict, NO_REAL_SOLUTION, []))
    # irrational exponent of a negative base
    p = ConstructionParams(nu0=1.0, m_power=2, q_ac=1.0, delta_mono=math.sqrt(2), n_power=1)
    out.append(("irrational power", solve_xi0_closed_form("monomial", p, -1.0, 2.0).verdict, UNDEFINED_POWER, []))
    return out


def test_criterion_7_closed_form_agreement(record_criterion):
    gaps = [_agreement(c) for c in MONOMIAL_SETS + AFFINE_SETS]
    solved = all(v == REAL_SOLUTION for v, _ in gaps)
    worst = max(g for _, g in gaps)
    verdicts = _verdict_cases()
    verdicts_ok = all(got == want and not roots for _, got, want, roots in verdicts)
    ok = solved and worst <= 1e-9 and verdicts_ok and len(MONOMIAL_SETS) == 10 and len(AFFINE_SETS) == 10
    detail = f"10 monomial + 10 affine, max gap {worst:.1e}; {len(verdicts)} unsolvable verdicts correct={verdicts_ok}"
    record_criterion(7, "closed-form vs general xi0", ok, detail)
    assert ok, (gaps, verdicts)


# -- 8 ------------------------------------------------------------------------------


def test_criterion_8_final_example(record_criterion):
    branch, residuals = select_branch(lambda_neg=-1.0, lambda2=1.0, interior=(0.1, 0.9), n=N, tol=1e-6)
    prof = build_final_example(lambda_neg=-1.0, lambda2=1.0, interior=(0.1, 0.9), n=N, branch=branch)
    ok = prof.ode_residual <= 1e-6 and prof.summary()["branch"] == branch
    others = ", ".join(f"{b} {r:.1e}" for b, r in sorted(residuals.items()))
    record_criterion(8, "final-example ODE", ok, f"branch={branch}, residual {prof.ode_residual:.1e} ({others})")
    assert ok


# -- 9 ------------------------------------------------------------------------------


def test_criterion_9_spectral_convergence(record_criterion):
    res = {}
    for n in (16, 32):
        fx = fixtures.build("example3", n=n)
        res[n] = residual_direct(fx.A, fx.B, fx.F, fx.family).max_residual
    ratio = res[16] / res[32] if res[32] > 0 else math.inf
    ok = ratio >= 1e2
    record_criterion(9, "spectral convergence", ok, f"n=16 {res[16]:.2e}, n=32 {res[32]:.2e}, ratio {ratio:.1e}")
    assert ok


@pytest.mark.parametrize("case", MONOMIAL_SETS + AFFINE_SETS, ids=lambda c: f"{c[0]}-{c[1]}-{c[2]}-{c[4]}-n{c[7]}")
def test_each_parameter_set_recovers_generating_root(case):
    verdict, gap = _agreement(case)
    assert verdict == REAL_SOLUTION and gap <= 1e-9
