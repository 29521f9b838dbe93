import math

import numpy as np
import pytest

from covrep.errors import GridMismatch, InvalidArgument, NumericError
from covrep.grid import (
    ENDPOINT_VANISHING,
    UNCONSTRAINED,
    FunctionSample,
    TestFamily,
    build_grid,
    constant,
    cumulative_integral,
    differentiate,
    interpolate,
    make_clamped_family,
    make_test_family,
    quadrature,
    read_grid_json,
    read_sample_csv,
    sample,
    write_grid_json,
    write_sample_csv,
)


def test_nodes_are_increasing_with_exact_endpoints():
    g = build_grid(33, -1.5, 2.0)
    assert g.nodes[0] == -1.5 and g.nodes[-1] == 2.0
    assert np.all(np.diff(g.nodes) > 0)


def test_odd_grid_has_exact_midpoint():
    g = build_grid(65, 0.0, 1.0)
    assert g.nodes[32] == 0.5


@pytest.mark.parametrize("n", [8, 17, 64])
def test_weights_integrate_polynomials_exactly(n):
    g = build_grid(n, 0.0, 2.0)
    assert math.isclose(g.weights.sum(), 2.0, rel_tol=1e-14)
    for k in range(n - 1):
        exact = 2.0 ** (k + 1) / (k + 1)
        assert quadrature(sample(g, lambda t: t**k)) == pytest.approx(exact, rel=1e-12)


def test_quadrature_of_exponential(unit_grid):
    assert abs(quadrature(sample(unit_grid, np.exp)) - (math.e - 1)) < 1e-14


def test_spectral_derivative(unit_grid):
    f = sample(unit_grid, lambda t: np.sin(3 * t))
    df = differentiate(f)
    assert np.max(np.abs(df.values - 3 * np.cos(3 * unit_grid.nodes))) < 1e-11


def test_derivative_of_constant_is_zero(unit_grid):
    # row sums of the differentiation matrix are zero up to rounding
    assert differentiate(constant(unit_grid, 4.0)).sup() < 1e-11


def test_interpolation_off_grid(unit_grid):
    f = sample(unit_grid, lambda t: 1.0 / (t + 1.0))
    pts = np.linspace(0, 1, 101)
    assert np.max(np.abs(interpolate(f, pts) - 1.0 / (pts + 1.0))) < 1e-13


def test_cumulative_integral(unit_grid):
    series = cumulative_integral(sample(unit_grid, lambda t: 1.0 / (t + 1.0)))
    pts = np.linspace(0, 1, 11)
    assert np.max(np.abs(series(pts) - np.log1p(pts))) < 1e-13


@pytest.mark.parametrize("n,alpha,beta", [(3, 0, 1), (10, 1.0, 1.0), (10, 2.0, 1.0), (5.5, 0, 1)])
def test_build_grid_rejects_bad_input(n, alpha, beta):
    with pytest.raises(InvalidArgument):
        build_grid(n, alpha, beta)


def test_sample_rejects_nonfinite(unit_grid):
    with pytest.raises(NumericError):
        with np.errstate(divide="ignore"):
            sample(unit_grid, lambda t: 1.0 / t)


def test_sample_rejects_wrong_length(unit_grid):
    with pytest.raises(InvalidArgument):
        FunctionSample(unit_grid, np.zeros(3))


def test_arithmetic_requires_same_grid(unit_grid):
    other = build_grid(32)
    with pytest.raises(GridMismatch):
        constant(unit_grid, 1.0) + constant(other, 1.0)


def test_sample_arithmetic(unit_grid):
    f = sample(unit_grid, lambda t: t + 1.0)
    assert np.allclose((2.0 / f).values, 2.0 / (unit_grid.nodes + 1.0))
    assert np.allclose((f - 1.0).values, unit_grid.nodes)
    assert np.allclose((-f * f).values, -((unit_grid.nodes + 1.0) ** 2))


def test_sine_family_vanishes_at_ends(unit_grid):
    fam = make_test_family(unit_grid, 12)
    assert fam.kind == ENDPOINT_VANISHING and len(fam) == 12
    for x in fam:
        assert abs(x.left) <= 1e-14 and abs(x.right) <= 1e-14


def test_clamped_family_has_zero_slope_at_ends(unit_grid):
    for x in make_clamped_family(unit_grid, 6):
        d = differentiate(x)
        assert abs(d.left) < 1e-9 and abs(d.right) < 1e-9


def test_unconstrained_family_is_chebyshev(unit_grid):
    fam = make_test_family(unit_grid, 4, UNCONSTRAINED)
    u = 2 * unit_grid.nodes - 1
    assert np.allclose(fam.members[3].values, 4 * u**3 - 3 * u, atol=1e-14)


def test_endpoint_family_rejects_nonvanishing_member(unit_grid):
    with pytest.raises(InvalidArgument):
        TestFamily((constant(unit_grid, 1.0),), ENDPOINT_VANISHING)


def test_csv_round_trip(tmp_path):
    g = build_grid(20, -1.0, 3.0)
    f = sample(g, np.cos)
    write_sample_csv(f, tmp_path / "f.csv")
    back = read_sample_csv(tmp_path / "f.csv")
    assert back.grid.matches(g)
    assert np.array_equal(back.values, f.values)


def test_csv_rejects_foreign_nodes(tmp_path):
    (tmp_path / "bad.csv").write_text("node,value\n0,1\n0.3,1\n0.7,1\n1,1\n")
    with pytest.raises(GridMismatch):
        read_sample_csv(tmp_path / "bad.csv")


def test_grid_json_round_trip(tmp_path):
    g = build_grid(40, 0.5, 1.5)
    write_grid_json(g, tmp_path / "g.json")
    assert read_grid_json(tmp_path / "g.json").matches(g)
