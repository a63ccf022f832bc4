"""Minimal-L1-coefficient polynomial approximation on [-1, 1].

For a continuous connective g, the functional of interest is the least sum
of |a_1| + ... + |a_D| over polynomials p = a_0 + sum a_d t^d staying within
eta of g in sup norm; it controls the stability threshold of g applied to
the inner product via exp(2 pi A / eps) at eta = eps/4.  We compute a
degree-capped, grid-relaxed version by linear programming on Chebyshev
points and report it together with the achieved grid error.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from .errors import DegreeTooLow, EtaMismatch
from .linalg import (
    SparseVector,
    inner_product,
    materialize_tensor_power,
    norm_squared,
)
from .simplex import Infeasible, solve_lp

MAX_DEGREE = 30


@dataclass(frozen=True)
class PolyFunction:
    """p(t) = a_0 + a_1 t + ... evaluated by Horner's rule."""

    coefficients: Tuple[float, ...]

    def values(self, t: np.ndarray) -> np.ndarray:
        acc = np.zeros_like(t)
        for c in reversed(self.coefficients):
            acc = acc * t + c
        return acc

    def render(self) -> str:
        return "poly:" + ",".join(repr(c) for c in self.coefficients)


@dataclass(frozen=True)
class AbsValue:
    def values(self, t: np.ndarray) -> np.ndarray:
        return np.abs(t)

    def render(self) -> str:
        return "abs"


@dataclass(frozen=True)
class ReluShift:
    """max(t - c, 0): a ramp with its kink at c."""

    c: float

    def values(self, t: np.ndarray) -> np.ndarray:
        return np.maximum(t - self.c, 0.0)

    def render(self) -> str:
        return f"relu:{self.c!r}"


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear interpolation through sorted (t, g(t)) samples."""

    points: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple(sorted((float(t), float(v)) for t, v in self.points))
        if len(pts) < 2:
            raise ValueError("need at least two sample points")
        object.__setattr__(self, "points", pts)

    def values(self, t: np.ndarray) -> np.ndarray:
        ts = np.array([p[0] for p in self.points])
        vs = np.array([p[1] for p in self.points])
        return np.interp(t, ts, vs)

    def render(self) -> str:
        return f"table:<{len(self.points)} points>"


Connective = Union[PolyFunction, AbsValue, ReluShift, Tabulated, Callable]


def parse_connective(spec: str) -> Connective:
    """CLI connective strings: poly:a0,a1,... | abs | relu:C | table:FILE.csv"""
    spec = spec.strip()
    if spec == "abs":
        return AbsValue()
    if spec.startswith("poly:"):
        return PolyFunction(tuple(float(c) for c in spec[5:].split(",")))
    if spec.startswith("relu:"):
        return ReluShift(float(spec[5:]))
    if spec.startswith("table:"):
        path = spec[6:]
        with open(path, newline="") as fh:
            pts = [(float(row[0]), float(row[1]))
                   for row in csv.reader(fh) if row and not row[0].startswith("#")]
        return Tabulated(tuple(pts))
    raise ValueError(f"cannot parse connective spec {spec!r}")


def _connective_values(g: Connective, t: np.ndarray) -> np.ndarray:
    if hasattr(g, "values"):
        return np.asarray(g.values(t), dtype=float)
    return np.asarray(g(t), dtype=float)


def chebyshev_grid(size: int) -> np.ndarray:
    """size Chebyshev points cos(pi k/(size-1)) on [-1, 1], ascending."""
    if size < 2:
        raise ValueError("grid size must be >= 2")
    return np.cos(np.pi * np.arange(size - 1, -1, -1) / (size - 1))


@dataclass(frozen=True)
class PolyApproxResult:
    """Grid-relaxed, degree-capped minimizer of sum_{d>=1} |a_d|.

    A_estimate upper-bounds the true functional restricted to this degree
    (more grid points can only increase it toward the sup-norm value).
    """

    degree: int
    coefficients: Tuple[float, ...]
    A_estimate: float
    eta: float
    grid_size: int
    sup_error_on_grid: float

    def __post_init__(self):
        if self.sup_error_on_grid > self.eta + 1e-9:
            raise ValueError(
                f"grid error {self.sup_error_on_grid} exceeds eta {self.eta}"
            )
        if self.A_estimate < 0:
            raise ValueError("A_estimate cannot be negative")

    @property
    def is_degenerate(self) -> bool:
        """True when the approximant is a constant (A = 0)."""
        return self.A_estimate == 0.0


def compute_Ag(
    g: Connective, eta: float, degree: int, grid: int = 0
) -> PolyApproxResult:
    """Minimize sum_{d>=1} |a_d| over degree-capped polynomials within eta of
    g at Chebyshev grid points.

    The LP splits each coefficient into positive and negative parts; a_0 is
    free with zero cost.  Raises DegreeTooLow when no degree-`degree`
    polynomial fits the eta tube on the grid.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not 1 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree must lie in [1, {MAX_DEGREE}]")
    if grid == 0:
        grid = max(2 * degree + 1, 65)
    if grid < 2 * degree + 1:
        raise ValueError("grid must have at least 2*degree + 1 points")
    t = chebyshev_grid(grid)
    gv = _connective_values(g, t)
    V = np.vander(t, degree + 1, increasing=True)
    ncoef = degree + 1
    A_ub = np.block([[V, -V], [-V, V]])
    b_ub = np.concatenate([gv + eta, eta - gv])
    cost = np.ones(2 * ncoef)
    cost[0] = 0.0
    cost[ncoef] = 0.0
    try:
        sol = solve_lp(cost, A_ub, b_ub)
    except Infeasible as exc:
        raise DegreeTooLow(
            f"no degree-{degree} polynomial stays within eta={eta} of the "
            f"connective on the grid"
        ) from exc
    a = sol.x[:ncoef] - sol.x[ncoef:]
    sup_err = float(np.abs(V @ a - gv).max())
    return PolyApproxResult(
        degree=degree,
        coefficients=tuple(float(v) for v in a),
        A_estimate=float(np.abs(a[1:]).sum()),
        eta=float(eta),
        grid_size=grid,
        sup_error_on_grid=sup_err,
    )


def connective_upper_bound(res: PolyApproxResult, epsilon: float) -> float:
    """Certified stability threshold exp(2 pi A / eps) for the connective.

    The approximation must have been computed at eta = eps/4.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if abs(res.eta - epsilon / 4) > 1e-12:
        raise EtaMismatch(
            f"result computed at eta={res.eta}, need eta=eps/4={epsilon / 4}"
        )
    try:
        return math.exp(2 * math.pi * res.A_estimate / epsilon)
    except OverflowError:
        return math.inf


def block_embedding_check(
    coeffs: Sequence[float],
    x: SparseVector,
    y: SparseVector,
    dim_cap: int = 200_000,
) -> Tuple[float, float]:
    """Materialize the block map X(x) = (+) |a_d|^(1/2) x^(tensor d) and verify
    <X(x), Y(y)> = p(<x, y>) - a_0.

    Returns (block inner product, polynomial value); raises ArithmeticError
    if they disagree beyond 1e-10 or the norm budget ||X(x)||^2 <= sum |a_d|
    fails.  CapExceeded propagates from tensor materialization.
    """
    coeffs = [float(c) for c in coeffs]
    budget = sum(abs(c) for c in coeffs[1:])
    if budget == 0.0:
        raise ValueError("need at least one nonzero coefficient beyond a_0")
    xf, yf = x.to_float(), y.to_float()
    for v in (xf, yf):
        if norm_squared(v) > 1 + 1e-9:
            raise ValueError("vectors must lie in the unit ball")
    t = inner_product(xf, yf)
    rhs = 0.0
    for d in range(len(coeffs) - 1, 0, -1):
        rhs = rhs * t + coeffs[d]
    rhs *= t
    lhs = 0.0
    x_block_norm2 = 0.0
    for d, a_d in enumerate(coeffs):
        if d == 0 or a_d == 0.0:
            continue
        w = math.sqrt(abs(a_d))
        xb = materialize_tensor_power(xf, d, dim_cap).scale(w)
        yb = materialize_tensor_power(yf, d, dim_cap).scale(
            math.copysign(w, a_d)
        )
        lhs += inner_product(xb, yb)
        x_block_norm2 += norm_squared(xb)
    if abs(lhs - rhs) > 1e-10:
        raise ArithmeticError(
            f"block inner product {lhs} differs from polynomial value {rhs}"
        )
    if x_block_norm2 > budget + 1e-12:
        raise ArithmeticError(
            f"block norm {x_block_norm2} exceeds coefficient budget {budget}"
        )
    return lhs, rhs
