"""Discretization of smooth functions on a closed interval.

Functions are represented by their values at Chebyshev-Gauss-Lobatto nodes
mapped to ``[alpha, beta]``.  Integrals use Clenshaw-Curtis weights and
derivatives use the spectral differentiation matrix, so smooth functions are
resolved to near machine precision with a few dozen nodes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.fft import dct

from .errors import GridMismatch, InvalidArgument, NumericError

ENDPOINT_VANISHING = "endpoint-vanishing"
UNCONSTRAINED = "unconstrained"
FAMILY_KINDS = (ENDPOINT_VANISHING, UNCONSTRAINED)

DEFAULT_N = 64


def _reference_nodes(N: int) -> np.ndarray:
    # -cos(pi j / N) written as a sine so the set is exactly symmetric
    j = np.arange(N + 1)
    return np.sin(np.pi * (2 * j - N) / (2 * N))


def _clenshaw_curtis(N: int) -> np.ndarray:
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    v = np.ones(N - 1)
    inner = theta[1:-1]
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N**2 - 1)
        for k in range(1, N // 2):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
        v -= np.cos(N * inner) / (N**2 - 1)
    else:
        w[0] = w[N] = 1.0 / N**2
        for k in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
    w[1:-1] = 2.0 * v / N
    return w


def _cheb_diff(N: int) -> np.ndarray:
    """Differentiation matrix on the increasing nodes -cos(pi j/N)."""
    j = np.arange(N + 1)
    theta = np.pi * j / N
    c = np.ones(N + 1)
    c[0] = c[N] = 2.0
    c *= (-1.0) ** j
    # x_i - x_j = cos(theta_j) - cos(theta_i), in product form to avoid cancellation
    dx = -2.0 * np.sin((theta[None, :] + theta[:, None]) / 2) * np.sin(
        (theta[None, :] - theta[:, None]) / 2
    )
    # the sign flip from x = -cos(theta) is absorbed by dx
    np.fill_diagonal(dx, 1.0)
    D = np.outer(c, 1.0 / c) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True, eq=False)
class Grid:
    """Collocation grid on ``[alpha, beta]`` with ``n`` nodes."""

    n: int
    alpha: float
    beta: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    diff: np.ndarray = field(repr=False)

    @property
    def length(self) -> float:
        return self.beta - self.alpha

    def matches(self, other: "Grid") -> bool:
        return self is other or (
            self.n == other.n and self.alpha == other.alpha and self.beta == other.beta
        )

    def summary(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "kind": "chebyshev-gauss-lobatto",
            "quadrature": "clenshaw-curtis",
            "weight_sum": float(self.weights.sum()),
        }


def build_grid(n: int = DEFAULT_N, alpha: float = 0.0, beta: float = 1.0) -> Grid:
    if int(n) != n or n < 4:
        raise InvalidArgument(f"grid needs at least 4 nodes, got n={n}")
    if not (np.isfinite(alpha) and np.isfinite(beta)) or alpha >= beta:
        raise InvalidArgument(f"need alpha < beta, got [{alpha}, {beta}]")
    n = int(n)
    alpha, beta = float(alpha), float(beta)
    N = n - 1
    x = _reference_nodes(N)
    nodes = (alpha * (1.0 - x) + beta * (1.0 + x)) / 2.0
    nodes[0], nodes[-1] = alpha, beta
    half = (beta - alpha) / 2.0
    weights = _clenshaw_curtis(N) * half
    diff = _cheb_diff(N) / half
    for arr in (nodes, weights, diff):
        arr.setflags(write=False)
    return Grid(n, alpha, beta, nodes, weights, diff)


@dataclass(frozen=True, eq=False)
class FunctionSample:
    """Values of a function at the nodes of a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise InvalidArgument(
                f"expected {self.grid.n} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = np.flatnonzero(~np.isfinite(values))
            raise NumericError(f"non-finite sample values at nodes {bad.tolist()}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.grid.n

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def _other(self, other):
        if isinstance(other, FunctionSample):
            check_same_grid(self.grid, other.grid)
            return other.values
        return other

    def __add__(self, other):
        return FunctionSample(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return FunctionSample(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return FunctionSample(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return FunctionSample(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FunctionSample(self.grid, self.values / self._other(other))

    def __rtruediv__(self, other):
        return FunctionSample(self.grid, self._other(other) / self.values)

    def __neg__(self):
        return FunctionSample(self.grid, -self.values)

    @property
    def left(self) -> float:
        return float(self.values[0])

    @property
    def right(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True, eq=False)
class TestFamily:
    """Finite stand-in for a space of test functions."""

    __test__ = False  # not a pytest class

    members: tuple
    kind: str

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise InvalidArgument(f"unknown family kind {self.kind!r}")
        members = tuple(self.members)
        if not members:
            raise InvalidArgument("test family is empty")
        grid = members[0].grid
        for x in members[1:]:
            check_same_grid(grid, x.grid)
        if self.kind == ENDPOINT_VANISHING:
            for i, x in enumerate(members):
                tol = 1e-14 * max(1.0, x.sup())
                if abs(x.left) > tol or abs(x.right) > tol:
                    raise InvalidArgument(f"member {i} does not vanish at the endpoints")
        object.__setattr__(self, "members", members)

    @property
    def grid(self) -> Grid:
        return self.members[0].grid

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def scaled(self, factor: float) -> "TestFamily":
        return TestFamily(tuple(factor * x for x in self.members), self.kind)


def check_same_grid(g1: Grid, g2: Grid) -> None:
    if not g1.matches(g2):
        raise GridMismatch(
            f"grid mismatch: n={g1.n} [{g1.alpha}, {g1.beta}] vs "
            f"n={g2.n} [{g2.alpha}, {g2.beta}]"
        )


def sample(grid: Grid, fn: Callable[[np.ndarray], np.ndarray]) -> FunctionSample:
    values = np.broadcast_to(np.asarray(fn(grid.nodes), dtype=float), grid.nodes.shape)
    return FunctionSample(grid, values)


def constant(grid: Grid, value: float) -> FunctionSample:
    return FunctionSample(grid, np.full(grid.n, float(value)))


def quadrature(f: FunctionSample) -> float:
    return float(f.grid.weights @ f.values)


def differentiate(f: FunctionSample) -> FunctionSample:
    return FunctionSample(f.grid, f.grid.diff @ f.values)


def chebyshev_series(f: FunctionSample) -> Chebyshev:
    """Interpolating Chebyshev series of ``f`` on ``[alpha, beta]``."""
    g = f.grid
    N = g.n - 1
    # DCT-I of the values ordered by decreasing reference node cos(pi k / N)
    coef = dct(f.values[::-1], type=1) / N
    coef[0] /= 2.0
    coef[-1] /= 2.0
    return Chebyshev(coef, domain=[g.alpha, g.beta])


def interpolate(f: FunctionSample, points) -> np.ndarray:
    return chebyshev_series(f)(np.asarray(points, dtype=float))


def cumulative_integral(f: FunctionSample) -> Chebyshev:
    """Series for ``t -> integral of f from alpha to t``."""
    return chebyshev_series(f).integ(lbnd=f.grid.alpha)


def _pin_ends(v: np.ndarray) -> np.ndarray:
    # sin(k pi) is ~1e-16, not 0, in floating point
    v[0] = v[-1] = 0.0
    return v


def make_test_family(grid: Grid, count: int, kind: str = ENDPOINT_VANISHING) -> TestFamily:
    """Sine modes (vanishing at both endpoints) or shifted Chebyshev polynomials.

    The sine modes ``sin(k pi (t - alpha) / (beta - alpha))`` span a dense
    subspace of the smooth functions vanishing at both ends, so a residual that
    is small on many of them is strong evidence for the full quantifier; it is
    not a proof.
    """
    if int(count) != count or count < 1:
        raise InvalidArgument(f"count must be a positive integer, got {count}")
    u = (grid.nodes - grid.alpha) / grid.length
    if kind == ENDPOINT_VANISHING:
        members = [FunctionSample(grid, _pin_ends(np.sin(k * np.pi * u))) for k in range(1, count + 1)]
    elif kind == UNCONSTRAINED:
        ref = 2.0 * u - 1.0
        members = [
            FunctionSample(grid, np.cos(k * np.arccos(np.clip(ref, -1.0, 1.0))))
            for k in range(count)
        ]
    else:
        raise InvalidArgument(f"unknown family kind {kind!r}")
    return TestFamily(tuple(members), kind)


def make_clamped_family(grid: Grid, count: int) -> TestFamily:
    """Modes ``sin(k pi u) sin(pi u)``: value and slope vanish at both ends.

    Needed when an operator's boundary terms carry x' as well as x, e.g. a
    differential operator whose multiplier does not vanish at the ends.
    """
    if int(count) != count or count < 1:
        raise InvalidArgument(f"count must be a positive integer, got {count}")
    u = (grid.nodes - grid.alpha) / grid.length
    members = [
        FunctionSample(grid, _pin_ends(np.sin(k * np.pi * u) * np.sin(np.pi * u)))
        for k in range(1, count + 1)
    ]
    return TestFamily(tuple(members), ENDPOINT_VANISHING)


# -- file formats ---------------------------------------------------------


def write_sample_csv(f: FunctionSample, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "value"])
        for t, v in zip(f.grid.nodes, f.values):
            writer.writerow([repr(float(t)), repr(float(v))])


def read_sample_csv(path, grid: Grid | None = None) -> FunctionSample:
    """Read a ``node,value`` CSV.

    Without ``grid`` the nodes must be a Chebyshev-Lobatto grid, which is
    rebuilt from the node count and endpoints.  With ``grid`` the nodes must
    match it to 1e-12.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"node", "value"}:
        raise InvalidArgument(f"{path}: expected columns node,value")
    nodes = np.array([float(r["node"]) for r in rows])
    values = np.array([float(r["value"]) for r in rows])
    if grid is None:
        grid = build_grid(len(nodes), nodes[0], nodes[-1])
    if len(nodes) != grid.n or np.max(np.abs(nodes - grid.nodes)) > 1e-12 * max(1.0, grid.length):
        raise GridMismatch(f"{path}: nodes do not match the grid")
    return FunctionSample(grid, values)


def write_grid_json(grid: Grid, path) -> None:
    Path(path).write_text(json.dumps(grid.summary(), indent=2, sort_keys=True) + "\n")


def read_grid_json(path) -> Grid:
    d = json.loads(Path(path).read_text())
    return build_grid(d["n"], d["alpha"], d["beta"])
