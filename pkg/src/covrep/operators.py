"""Integral and differential operators on a collocation grid.

``IntegralOp`` is the Nystrom discretization ``(Ax)(t_i) = sum_j k(t_i, s_j) w_j x(s_j)``
and ``DiffOp`` is ``(Bx)(t) = b(t) x'(t)`` with the spectral derivative.
Kernels are either dense samples ``k(t_i, s_j)`` or a separable pair
``a(t) c(s)``; the separable form keeps everything rank one.
"""

from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import InvalidArgument, NumericError
from .grid import FunctionSample, Grid, build_grid, check_same_grid, quadrature


class Kernel:
    """Common surface of dense and separable kernels."""

    grid: Grid

    def dense(self) -> np.ndarray:
        raise NotImplementedError

    def _memo(self):
        # per-instance cache of iterates keyed by (recursion, m, ...)
        cache = self.__dict__.get("_cache")
        if cache is None:
            cache = ({}, threading.Lock())
            object.__setattr__(self, "_cache", cache)
        return cache

    def kernel_iterate(self, m: int) -> "Kernel":
        return iterate_kernel_integral(self, m)


@dataclass(frozen=True, eq=False)
class DenseKernel(Kernel):
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        n = self.grid.n
        if values.shape != (n, n):
            raise InvalidArgument(f"dense kernel must be {n}x{n}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NumericError("dense kernel has non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def dense(self) -> np.ndarray:
        return self.values

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "DenseKernel":
        t = grid.nodes[:, None]
        s = grid.nodes[None, :]
        return cls(grid, np.broadcast_to(fn(t, s), (grid.n, grid.n)))


@dataclass(frozen=True, eq=False)
class SeparableKernel(Kernel):
    """k(t, s) = a(t) c(s)."""

    a_factor: FunctionSample
    c_factor: FunctionSample

    def __post_init__(self):
        check_same_grid(self.a_factor.grid, self.c_factor.grid)

    @property
    def grid(self) -> Grid:
        return self.a_factor.grid

    def dense(self) -> np.ndarray:
        return np.outer(self.a_factor.values, self.c_factor.values)

    def q_value(self) -> float:
        """Integral of a(s) c(s) over the interval."""
        return quadrature(self.a_factor * self.c_factor)


@dataclass(frozen=True, eq=False)
class IntegralOp:
    kernel: Kernel

    @property
    def grid(self) -> Grid:
        return self.kernel.grid

    def __call__(self, x: FunctionSample) -> FunctionSample:
        return apply(self, x)


@dataclass(frozen=True, eq=False)
class DiffOp:
    """(Bx)(t) = b(t) x'(t)."""

    multiplier: FunctionSample

    @property
    def grid(self) -> Grid:
        return self.multiplier.grid

    def __call__(self, x: FunctionSample) -> FunctionSample:
        return apply(self, x)


LinearOp = Union[IntegralOp, DiffOp]


@dataclass(frozen=True)
class PolynomialSpec:
    """F(t) = sum_i coeffs[i] t**i.  Trailing zero coefficients are dropped."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = [float(c) for c in self.coeffs]
        if not coeffs:
            raise InvalidArgument("polynomial needs at least one coefficient")
        if not all(np.isfinite(coeffs)):
            raise InvalidArgument("polynomial coefficients must be finite")
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs))

    @classmethod
    def monomial(cls, n: int, delta: float = 1.0) -> "PolynomialSpec":
        if n < 0:
            raise InvalidArgument("monomial degree must be nonnegative")
        return cls(tuple([0.0] * n + [float(delta)]))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def delta0(self) -> float:
        return self.coeffs[0]

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(t, self.coeffs)

    def k1_scalar(self, q: float) -> float:
        """sum_{k>=1} delta_k q**(k-1), the constant that drives separable cases."""
        return float(sum(d * q ** (k - 1) for k, d in enumerate(self.coeffs) if k >= 1))


# -- application ------------------------------------------------------------


def _check(op, x: FunctionSample):
    check_same_grid(op.grid, x.grid)


def apply(op: LinearOp, x: FunctionSample) -> FunctionSample:
    _check(op, x)
    g = x.grid
    if isinstance(op, IntegralOp):
        k = op.kernel
        if isinstance(k, SeparableKernel):
            return k.a_factor * float(g.weights @ (k.c_factor.values * x.values))
        return FunctionSample(g, k.dense() @ (g.weights * x.values))
    if isinstance(op, DiffOp):
        return FunctionSample(g, op.multiplier.values * (g.diff @ x.values))
    raise TypeError(f"not a linear operator: {op!r}")


def compose_apply(ops: Sequence[LinearOp], x: FunctionSample) -> FunctionSample:
    """Apply ``ops[0] ops[1] ... ops[-1]`` to ``x`` (rightmost first)."""
    for op in reversed(list(ops)):
        x = apply(op, x)
    return x


def power_apply(op: LinearOp, j: int, x: FunctionSample) -> FunctionSample:
    for _ in range(j):
        x = apply(op, x)
    return x


# -- kernel recursions ------------------------------------------------------


def iterate_kernel_integral(k: Kernel, m: int) -> Kernel:
    """k_m(t,s) = int k(t,tau) k_{m-1}(tau,s) dtau, with k_0 = k."""
    if int(m) != m or m < 0:
        raise InvalidArgument(f"iterate index must be a nonnegative integer, got {m}")
    m = int(m)
    if m == 0:
        return k
    if isinstance(k, SeparableKernel):
        return SeparableKernel(k.a_factor * k.q_value() ** m, k.c_factor)
    cache, lock = k._memo()
    w = k.grid.weights
    with lock:
        prev = k
        for j in range(1, m + 1):
            key = ("integral", j)
            if key not in cache:
                cache[key] = DenseKernel(k.grid, k.dense() @ (w[:, None] * prev.dense()))
            prev = cache[key]
    return prev


def poly_kernel(k: Kernel, F: PolynomialSpec, m: int | None = None) -> Kernel:
    """F_m(k) = sum_{j=1}^m delta_j k_{j-1}; the constant term is not included."""
    if m is None:
        m = F.degree
    if m < 1 or m > F.degree:
        raise InvalidArgument(f"need 1 <= m <= deg F = {F.degree}, got m={m}")
    if isinstance(k, SeparableKernel):
        scale = sum(F.coeffs[j] * k.q_value() ** (j - 1) for j in range(1, m + 1))
        return SeparableKernel(k.a_factor * scale, k.c_factor)
    total = np.zeros((k.grid.n, k.grid.n))
    for j in range(1, m + 1):
        if F.coeffs[j] != 0.0:
            total += F.coeffs[j] * iterate_kernel_integral(k, j - 1).dense()
    return DenseKernel(k.grid, total)


def apply_poly(
    A: LinearOp, F: PolynomialSpec, x: FunctionSample, method: str = "auto"
) -> FunctionSample:
    """F(A) x.

    ``method="kernel"`` uses delta_0 x + int F_n(k)(t,s) x(s) ds (integral
    operators only); ``"repeated"`` sums delta_j A^j x by repeated application.
    ``"auto"`` picks the kernel form when it is available.
    """
    if method == "auto":
        method = "kernel" if isinstance(A, IntegralOp) else "repeated"
    out = F.delta0 * x
    if F.degree == 0:
        return out
    if method == "kernel":
        if not isinstance(A, IntegralOp):
            raise InvalidArgument("kernel form of F(A) needs an integral operator")
        return out + apply(IntegralOp(poly_kernel(A.kernel, F)), x)
    if method != "repeated":
        raise InvalidArgument(f"unknown method {method!r}")
    y = x
    for j in range(1, F.degree + 1):
        y = apply(A, y)
        if F.coeffs[j] != 0.0:
            out = out + F.coeffs[j] * y
    return out


def iterate_kernel_derivative(k: Kernel, a: FunctionSample, m: int) -> DenseKernel:
    """k_m(t,s) = d/ds [a(s) k_{m-1}(t,s)], with k_0 = k."""
    if int(m) != m or m < 0:
        raise InvalidArgument(f"iterate index must be a nonnegative integer, got {m}")
    check_same_grid(k.grid, a.grid)
    D = k.grid.diff
    values = k.dense()
    for _ in range(int(m)):
        values = (values * a.values[None, :]) @ D.T
    return DenseKernel(k.grid, values)


def ba_n_expansion(B: IntegralOp, A: DiffOp, n: int, x: FunctionSample) -> FunctionSample:
    """B A^n x through boundary terms and the derivative-recursion kernel.

    sum_{i<n} (-1)^i [k_i(t,s) a(s) (A^{n-1-i} x)(s)]_{s=alpha}^{s=beta}
    + (-1)^n int k_n(t,s) x(s) ds
    """
    if not isinstance(B, IntegralOp) or not isinstance(A, DiffOp):
        raise InvalidArgument("expansion needs B integral and A differential")
    if int(n) != n or n < 0:
        raise InvalidArgument(f"n must be a nonnegative integer, got {n}")
    _check(B, x)
    _check(A, x)
    g = x.grid
    a = A.multiplier.values
    total = np.zeros(g.n)
    # A^j x for j = 0..n-1
    powers = [x]
    for _ in range(n - 1):
        powers.append(apply(A, powers[-1]))
    for i in range(n):
        ki = iterate_kernel_derivative(B.kernel, A.multiplier, i).dense()
        y = powers[n - 1 - i].values
        total += (-1) ** i * (ki[:, -1] * a[-1] * y[-1] - ki[:, 0] * a[0] * y[0])
    kn = iterate_kernel_derivative(B.kernel, A.multiplier, n).dense()
    total += (-1) ** n * (kn @ (g.weights * x.values))
    return FunctionSample(g, total)


# -- file formats -------------------------------------------------------------


def write_kernel(k: Kernel, path_stem) -> list:
    """Write a kernel next to ``path_stem``; returns the files written.

    Dense: ``<stem>.csv`` holding the n x n matrix.  Separable: ``<stem>.csv``
    with columns node,a,c plus ``<stem>.json`` naming the variant.
    """
    stem = Path(path_stem)
    g = k.grid
    header = {"n": g.n, "alpha": g.alpha, "beta": g.beta}
    if isinstance(k, SeparableKernel):
        header["variant"] = "separable"
        with open(stem.with_suffix(".csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "a", "c"])
            for t, av, cv in zip(g.nodes, k.a_factor.values, k.c_factor.values):
                w.writerow([repr(float(t)), repr(float(av)), repr(float(cv))])
    else:
        header["variant"] = "dense"
        np.savetxt(stem.with_suffix(".csv"), k.dense(), delimiter=",", fmt="%.17g")
    stem.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return [stem.with_suffix(".csv"), stem.with_suffix(".json")]


def read_kernel(path_stem) -> Kernel:
    stem = Path(path_stem)
    header = json.loads(stem.with_suffix(".json").read_text())
    g = build_grid(header["n"], header["alpha"], header["beta"])
    if header["variant"] == "separable":
        with open(stem.with_suffix(".csv"), newline="") as fh:
            rows = list(csv.DictReader(fh))
        a = FunctionSample(g, [float(r["a"]) for r in rows])
        c = FunctionSample(g, [float(r["c"]) for r in rows])
        return SeparableKernel(a, c)
    if header["variant"] == "dense":
        return DenseKernel(g, np.loadtxt(stem.with_suffix(".csv"), delimiter=",", ndmin=2))
    raise InvalidArgument(f"unknown kernel variant {header['variant']!r}")
