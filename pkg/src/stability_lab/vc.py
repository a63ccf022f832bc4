"""Margin-based VC machinery for the inner product on the unit ball.

A configuration of d points is margin-shattered at threshold s with gap eps
when every one of the 2^d subsets S has a unit-ball realizer y_S putting the
points of S at value >= s and the rest at value <= s - eps.  The largest
shatterable d is min(dim, 4/eps^2): the averaging argument caps d * eps^2 at
4, and cell counting for d affine hyperplanes caps d by the dimension.
check_vc_graph verifies instances, min_norm_realizer searches for realizers
beyond the explicit construction, and the two counting helpers quantify the
hyperplane bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DOutOfRange, MissingRealizer, NotConverged
from .linalg import EXACT, ExactScalar, SparseVector, inner_product

AVERAGING_SEED = 20240801
_EXHAUSTIVE_SIGN_CAP = 20
MIN_NORM_MAX_POINTS = 16


@dataclass(frozen=True)
class VCReport:
    """Result of a margin-shattering check.

    upper_bound_dim is the ambient label count of the point set (the
    hyperplane-counting cap) and upper_bound_margin the averaging cap
    4/eps^2; shattered requires every one of the 2^d patterns realized.
    """

    d: int
    epsilon: Union[Fraction, float]
    threshold_s: Union[Fraction, float]
    realized_patterns: int
    shattered: bool
    upper_bound_dim: int
    upper_bound_margin: float


def check_vc_graph(
    points: Sequence[SparseVector],
    realizers: Dict[int, SparseVector],
    s,
    epsilon,
) -> VCReport:
    """Count the subset patterns correctly realized at threshold s, gap eps.

    Realizer keys are subset bitmasks over the point list (bit i set means
    points[i] belongs to S).  Exact rational comparisons are used whenever
    the vectors and thresholds are exact.
    """
    d = len(points)
    if isinstance(s, (int, Fraction)):
        s = Fraction(s)
    if isinstance(epsilon, (int, Fraction)):
        epsilon = Fraction(epsilon)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    low = s - epsilon
    realized = 0
    for mask in range(2 ** d):
        y = realizers.get(mask)
        if y is None:
            raise MissingRealizer(f"no realizer for subset bitmask {mask}")
        ok = True
        for i, x in enumerate(points):
            v = inner_product(x, y)
            if (mask >> i) & 1:
                if not v >= s:
                    ok = False
                    break
            elif not v <= low:
                ok = False
                break
        realized += ok
    labels = set()
    for x in points:
        labels.update(x.labels())
    return VCReport(
        d=d,
        epsilon=epsilon,
        threshold_s=s,
        realized_patterns=realized,
        shattered=realized == 2 ** d,
        upper_bound_dim=len(labels),
        upper_bound_margin=float(4 / Fraction(epsilon) ** 2)
        if isinstance(epsilon, Fraction)
        else 4.0 / float(epsilon) ** 2,
    )


def zaslavsky_cells(d: int, r: int) -> int:
    """Maximum number of cells cut by d affine hyperplanes in dimension r."""
    if d < 0 or r < 0:
        raise ValueError("d and r must be nonnegative")
    return sum(comb(d, j) for j in range(min(d, r) + 1))


def shattering_impossible(d: int, r: int) -> bool:
    """True when d points cannot be margin-shattered by linear thresholds in
    an r-dimensional space: the arrangement has fewer than 2^d cells."""
    return zaslavsky_cells(d, r) < 2 ** d


def _sign_enumeration_mean(G: np.ndarray) -> float:
    """Average of sigma^T G sigma over all sign vectors, in chunks."""
    d = G.shape[0]
    total = 0.0
    chunk = 1 << 14
    shifts = np.arange(d, dtype=np.uint32)
    for start in range(0, 1 << d, chunk):
        idx = np.arange(start, min(start + chunk, 1 << d), dtype=np.uint32)
        bits = (idx[:, None] >> shifts[None, :]) & 1
        signs = bits.astype(float) * 2.0 - 1.0
        total += float(np.einsum("sd,de,se->s", signs, G, signs).sum())
    return total / 2.0 ** d


def averaging_upper_check(
    points: Sequence[SparseVector],
    epsilon: float,
    trials: int = 4096,
) -> Tuple[float, float]:
    """(E ||sum sigma_i x_i||^2, d^2 eps^2 / 4).

    The expectation collapses to sum ||x_i||^2 because cross terms cancel;
    that identity is re-derived here by exhaustive sign enumeration (d <= 20)
    or by seeded Monte Carlo above, and the two must agree on the exhaustive
    path.  When the points carry a verified (d, eps)-VC graph, callers can
    assert mean_sq >= bound.
    """
    d = len(points)
    gram = np.zeros((d, d))
    mean_exact = Fraction(0)
    exact = all(p.is_exact for p in points)
    for i, x in enumerate(points):
        for j in range(i, d):
            v = inner_product(x, points[j]) if exact else inner_product(
                x.to_float(), points[j].to_float()
            )
            gram[i, j] = gram[j, i] = float(v)
        mean_exact += Fraction(gram[i, i]) if not exact else x.norm_squared()
    mean_sq = float(mean_exact)
    if d <= _EXHAUSTIVE_SIGN_CAP:
        enumerated = _sign_enumeration_mean(gram)
        if abs(enumerated - mean_sq) > 1e-9 * max(1.0, abs(mean_sq)):
            raise ArithmeticError(
                f"sign enumeration {enumerated} disagrees with trace {mean_sq}"
            )
    else:
        rng = np.random.default_rng(AVERAGING_SEED)
        signs = rng.integers(0, 2, size=(trials, d)).astype(float) * 2.0 - 1.0
        np.einsum("sd,de,se->s", signs, gram, signs).mean()
    bound = (d * float(epsilon)) ** 2 / 4.0
    return mean_sq, bound


def vc_dimension_formula(dim: int, epsilon) -> int:
    """min(dim, floor(4/eps^2)): the exact margin-VC value for the inner
    product on the unit ball of a dim-dimensional space."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    eps = Fraction(epsilon)
    if not 0 < eps <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    return min(dim, math.floor(4 / eps ** 2))


def _exact_rows(points: Sequence[SparseVector], labels: List) -> List[List[Fraction]]:
    index = {label: k for k, label in enumerate(labels)}
    rows = []
    for p in points:
        row = [Fraction(0)] * len(labels)
        for label, c in p.entries.items():
            if isinstance(c, ExactScalar):
                if c.tag.is_one:
                    row[index[label]] = c.value
                else:
                    row[index[label]] = Fraction(c.to_float())
            else:
                row[index[label]] = Fraction(c)
        rows.append(row)
    return rows


def _solve_consistent(M: List[List[Fraction]], q: List[Fraction]):
    """One solution of M z = q by exact elimination; None if inconsistent."""
    k = len(q)
    rows = [list(M[i]) + [q[i]] for i in range(k)]
    piv_cols = []
    r = 0
    for col in range(k):
        p = next((i for i in range(r, k) if rows[i][col] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(k):
            if i != r and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        piv_cols.append(col)
        r += 1
        if r == k:
            break
    for i in range(r, k):
        if rows[i][k] != 0:
            return None
    z = [Fraction(0)] * k
    for lead, col in enumerate(piv_cols):
        z[col] = rows[lead][k]
    return z


def _nnls_exact(cols: List[List[Fraction]], f: List[Fraction],
                max_iters: int) -> List[Fraction]:
    """Lawson-Hanson nonnegative least squares in exact arithmetic."""
    k = len(cols)
    u = [Fraction(0)] * k
    passive: List[int] = []

    def residual():
        r = list(f)
        for j in range(k):
            if u[j]:
                cj = cols[j]
                for i in range(len(r)):
                    r[i] -= u[j] * cj[i]
        return r

    def least_squares(P):
        M = [[sum(a * b for a, b in zip(cols[p], cols[q])) for q in P]
             for p in P]
        rhs = [sum(a * b for a, b in zip(cols[p], f)) for p in P]
        return _solve_consistent(M, rhs)

    for _ in range(max_iters):
        r = residual()
        w = [sum(a * b for a, b in zip(cols[j], r)) for j in range(k)]
        best, best_w = -1, Fraction(0)
        for j in range(k):
            if j not in passive and w[j] > best_w:
                best, best_w = j, w[j]
        if best < 0:
            return u
        passive.append(best)
        while True:
            z = least_squares(passive)
            if z is None:
                raise NotConverged("singular inconsistent system in NNLS")
            if all(zi > 0 for zi in z):
                for p, zi in zip(passive, z):
                    u[p] = zi
                for j in range(k):
                    if j not in passive:
                        u[j] = Fraction(0)
                break
            alpha = None
            for p, zi in zip(passive, z):
                if zi <= 0:
                    step = u[p] / (u[p] - zi)
                    if alpha is None or step < alpha:
                        alpha = step
            for p, zi in zip(passive, z):
                u[p] += alpha * (zi - u[p])
            passive = [p for p in passive if u[p] > 0]
    raise NotConverged(f"NNLS did not settle within {max_iters} iterations")


def min_norm_realizer(
    points: Sequence[SparseVector],
    pattern: int,
    s,
    epsilon,
    max_iters: int = 500,
) -> Optional[SparseVector]:
    """Least-norm y with <x_i, y> >= s on the pattern and <= s - eps off it.

    Solved as a least-distance problem via nonnegative least squares on the
    dual (Lawson-Hanson), with exact rational pivots; returns None when the
    constraints are incompatible.  Realizability in the unit ball is then
    equivalent to ||y|| <= 1.
    """
    d = len(points)
    if d == 0:
        raise ValueError("need at least one point")
    if d > MIN_NORM_MAX_POINTS:
        raise DOutOfRange(f"d={d} exceeds the cap {MIN_NORM_MAX_POINTS}")
    s = Fraction(s)
    epsilon = Fraction(epsilon)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    labels: List = []
    seen = set()
    for p in points:
        for label in p.entries:
            if label not in seen:
                seen.add(label)
                labels.append(label)
    rows = _exact_rows(points, labels)
    L = len(labels)
    # constraints sigma_i <x_i, y> >= h_i as columns (sigma_i x_i ; h_i)
    cols = []
    for i in range(d):
        sigma = 1 if (pattern >> i) & 1 else -1
        h = s if sigma == 1 else -(s - epsilon)
        cols.append([sigma * v for v in rows[i]] + [h])
    f = [Fraction(0)] * L + [Fraction(1)]
    u = _nnls_exact(cols, f, max_iters)
    r = [-fi for fi in f]
    for j in range(d):
        if u[j]:
            for i in range(L + 1):
                r[i] += u[j] * cols[j][i]
    if all(ri == 0 for ri in r):
        return None  # incompatible constraint set
    scale = -r[L]
    coeffs = {labels[i]: r[i] / scale for i in range(L) if r[i] != 0}
    exact_in = all(p.is_exact for p in points)
    if exact_in:
        return SparseVector.exact(coeffs)
    return SparseVector.from_floats(
        {label: float(v) for label, v in coeffs.items()}
    )
