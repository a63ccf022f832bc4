"""Dense two-phase tableau simplex for the small LPs used here.

Solves   min c.x   s.t.  A x <= b,  x >= 0
with Bland's smallest-index rule throughout, which rules out cycling.  The
problems this serves (L1 coefficient minimization on a Chebyshev grid) have
a few hundred rows and columns at most, so a dense tableau is the simplest
reliable choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotConverged, StabilityLabError

_PIVOT_TOL = 1e-9


class Infeasible(StabilityLabError):
    """The constraint set A x <= b, x >= 0 is empty."""


class Unbounded(StabilityLabError):
    """The objective is unbounded below on the feasible set."""


@dataclass(frozen=True)
class LPSolution:
    x: np.ndarray
    objective: float
    iterations: int


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: np.ndarray, ncols: int,
                 max_iters: int) -> int:
    """Drive the tableau to optimality; objective row is T[-1]."""
    it = 0
    while True:
        it += 1
        if it > max_iters:
            raise NotConverged(f"simplex exceeded {max_iters} pivots")
        # Bland: entering = smallest index with negative reduced cost
        col = -1
        for j in range(ncols):
            if T[-1, j] < -_PIVOT_TOL:
                col = j
                break
        if col < 0:
            return it
        rows = np.nonzero(T[:-1, col] > _PIVOT_TOL)[0]
        if rows.size == 0:
            raise Unbounded("no blocking row for the entering column")
        ratios = T[rows, -1] / T[rows, col]
        best = ratios.min()
        # Bland tie-break: among minimal ratios, leave the smallest basis var
        tied = rows[ratios <= best + _PIVOT_TOL * (1.0 + abs(best))]
        row = min(tied, key=lambda r: basis[r])
        _pivot(T, basis, row, col)


def solve_lp(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    max_iters: int = 20_000,
) -> LPSolution:
    """min c.x subject to A x <= b and x >= 0."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("inconsistent LP dimensions")

    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.abs(b)
    slack_sign = np.where(flip, -1.0, 1.0)
    art_rows = np.nonzero(flip)[0]
    n_art = art_rows.size
    ncols = n + m + n_art

    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.diag(slack_sign)
    for k, r in enumerate(art_rows):
        T[r, n + m + k] = 1.0
    T[:m, -1] = b

    basis = np.zeros(m, dtype=int)
    for i in range(m):
        basis[i] = n + i
    for k, r in enumerate(art_rows):
        basis[r] = n + m + k

    iters = 0
    if n_art:
        # phase 1: minimize the artificial sum
        T[-1, :] = 0.0
        T[-1, n + m:n + m + n_art] = 1.0
        for r in art_rows:
            T[-1] -= T[r]
        iters += _run_simplex(T, basis, ncols, max_iters)
        if T[-1, -1] < -1e-7:
            raise Infeasible(
                f"phase-1 optimum {-T[-1, -1]:.3e} > 0: no feasible point"
            )
        # pivot any artificial still basic (at zero) out of the basis
        for r in range(m):
            if basis[r] >= n + m:
                for j in range(n + m):
                    if abs(T[r, j]) > _PIVOT_TOL:
                        _pivot(T, basis, r, j)
                        break

    # phase 2 objective: eliminate basic columns from the cost row
    T[-1, :] = 0.0
    T[-1, :n] = c
    T[:, n + m:ncols + 1 - 1] = 0.0  # dead artificial columns
    for r in range(m):
        if basis[r] < n + m:
            T[-1] -= T[-1, basis[r]] * T[r]
    iters += _run_simplex(T, basis, n + m, max_iters)

    x = np.zeros(n)
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = T[r, -1]
    return LPSolution(x=x, objective=float(c @ x), iterations=iters)
