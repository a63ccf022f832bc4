"""Half-graph margin verification, the discrete-Hilbert-transform certificate,
and search for maximum ordered configurations.

All-pairs value tables are the workhorse here.  For exact families whose
coefficients share one scale tag per basis label, the table reduces to an
integer sparse matrix product: every inner product becomes an int64
numerator over one common denominator, so margins of 2^12-pair families are
verified exactly in seconds.  Families that do not fit that profile fall
back to per-pair rational arithmetic, or to floats in float mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .constructions import WitnessFamily
from .errors import (
    DimensionMismatch,
    NOutOfRange,
    PredicateModeMismatch,
    TooLargeForBruteForce,
)
from .linalg import (
    EXACT,
    DenseMatrix,
    SparseVector,
    inner_product,
    operator_norm,
)
from .predicates import (
    Inner,
    IntPower,
    PolyOfInner,
    PowerPlus,
    Predicate,
    apply_connective,
    evaluate,
    supports_exact,
)

BRUTE_FORCE_MAX_N = 20
MARGIN_MATRIX_MAX_N = 512

_INT64_GUARD = 2 ** 62
_DISTINCT_VALUE_CAP = 4096


def hilbert_matrix(n: int) -> DenseMatrix:
    """Skew-symmetric matrix with entries 1/(i - j) and zero diagonal.

    Its operator norm is below pi for every n; this is the certificate
    engine behind the exponential stability threshold.
    """
    if n < 2:
        raise NOutOfRange(f"n={n} < 2")
    idx = np.arange(1, n + 1, dtype=float)
    diff = idx[:, None] - idx[None, :]
    with np.errstate(divide="ignore"):
        a = 1.0 / diff
    np.fill_diagonal(a, 0.0)
    return DenseMatrix(a, skew_symmetric=True)


@dataclass(frozen=True)
class PairTable:
    """All-pairs values numerators[i, j] / denominator.

    exact=True means numerators is int64 and entries are exact rationals
    over the common denominator; otherwise numerators is float64 and
    denominator is 1.
    """

    numerators: np.ndarray
    denominator: int
    exact: bool

    @property
    def n(self) -> int:
        return self.numerators.shape[0]

    def value(self, i: int, j: int):
        if self.exact:
            return Fraction(int(self.numerators[i, j]), self.denominator)
        return float(self.numerators[i, j])

    def as_floats(self) -> np.ndarray:
        if self.exact:
            return self.numerators.astype(float) / self.denominator
        return self.numerators


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


def _integer_profile(vectors: Sequence[SparseVector]):
    """Common-denominator integer view of exact vectors.

    Returns (label_index, rho_by_label, D) where every coefficient is
    (value * D) with integer value numerator, and rho is the squared scale
    factor attached to each label; None when tags are inconsistent across
    vectors on a shared label.
    """
    label_index: Dict[object, int] = {}
    rho: List[Fraction] = []
    denom_lcm = 1
    for v in vectors:
        for label, c in v.entries.items():
            idx = label_index.get(label)
            if idx is None:
                label_index[label] = len(rho)
                rho.append(c.tag.sq)
            elif rho[idx] != c.tag.sq:
                return None
            denom_lcm = _lcm(denom_lcm, c.value.denominator)
    return label_index, rho, denom_lcm


def pairwise_inner_products(
    xs: Sequence[SparseVector], ys: Sequence[SparseVector]
) -> PairTable:
    """Table of <x_i, y_j> for all i, j; exact whenever feasible in int64."""
    n = len(xs)
    if len(ys) != n:
        raise DimensionMismatch("xs and ys must have equal length")
    if n == 0:
        return PairTable(np.zeros((0, 0)), 1, True)
    exact = all(v.is_exact for v in xs) and all(v.is_exact for v in ys)
    if exact:
        table = _exact_pair_table(xs, ys)
        if table is not None:
            return table
        return _exact_pair_table_slow(xs, ys)
    xf = [v.to_float() for v in xs]
    yf = [v.to_float() for v in ys]
    labels: Dict[object, int] = {}
    for v in xf + yf:
        for label in v.entries:
            labels.setdefault(label, len(labels))
    X = _float_csr(xf, labels)
    Y = _float_csr(yf, labels)
    return PairTable((X @ Y.T).toarray(), 1, False)


def _float_csr(vectors, labels):
    rows, cols, data = [], [], []
    for i, v in enumerate(vectors):
        for label, c in v.entries.items():
            rows.append(i)
            cols.append(labels[label])
            data.append(float(c))
    return sp.csr_matrix(
        (data, (rows, cols)), shape=(len(vectors), max(len(labels), 1))
    )


def _exact_pair_table(xs, ys) -> Optional[PairTable]:
    prof = _integer_profile(list(xs) + list(ys))
    if prof is None:
        return None
    label_index, rho, D = prof
    L = max(len(rho), 1)
    R = 1
    for r in rho:
        R = _lcm(R, r.denominator)
    weights = [r.numerator * (R // r.denominator) for r in rho]

    def assemble(vectors, scale_by_weight):
        rows, cols, data = [], [], []
        max_abs = 0
        for i, v in enumerate(vectors):
            for label, c in v.entries.items():
                idx = label_index[label]
                q = c.value * D
                entry = int(q)
                if scale_by_weight:
                    entry *= weights[idx]
                max_abs = max(max_abs, abs(entry))
                rows.append(i)
                cols.append(idx)
                data.append(entry)
        return rows, cols, data, max_abs

    rx, cx, dx, ax = assemble(xs, False)
    ry, cy, dy, ay = assemble(ys, True)
    nnz_max = max((v.nnz() for v in xs), default=0)
    # every summand is bounded by ax * ay (weights already folded into ay)
    if ax * ay * max(nnz_max, 1) >= _INT64_GUARD:
        return None
    X = sp.csr_matrix(
        (np.array(dx, dtype=np.int64), (rx, cx)), shape=(len(xs), L)
    )
    Y = sp.csr_matrix(
        (np.array(dy, dtype=np.int64), (ry, cy)), shape=(len(ys), L)
    )
    N = (X @ Y.T).toarray()
    return PairTable(N, D * D * R, True)


def _exact_pair_table_slow(xs, ys) -> PairTable:
    """Per-pair rational arithmetic; collapses to int64 when it fits."""
    n = len(xs)
    vals = [[inner_product(x, y) for y in ys] for x in xs]
    den = 1
    for row in vals:
        for v in row:
            den = _lcm(den, v.denominator)
    max_num = max(
        (abs(v.numerator) * (den // v.denominator) for row in vals for v in row),
        default=0,
    )
    if den < _INT64_GUARD and max_num < _INT64_GUARD:
        N = np.array(
            [[v.numerator * (den // v.denominator) for v in row] for row in vals],
            dtype=np.int64,
        ).reshape(n, n)
        return PairTable(N, den, True)
    F = np.array([[float(v) for v in row] for row in vals]).reshape(n, n)
    return PairTable(F, 1, False)


def _float_connective_table(predicate: Predicate, values: np.ndarray) -> np.ndarray:
    if isinstance(predicate, Inner):
        return values
    if isinstance(predicate, IntPower):
        return values ** predicate.d
    if isinstance(predicate, PowerPlus):
        return np.maximum(values, 0.0) ** float(predicate.exponent)
    if isinstance(predicate, PolyOfInner):
        acc = np.zeros_like(values)
        for c in reversed(predicate.coefficients):
            acc = acc * values + c
        return acc
    raise PredicateModeMismatch(f"cannot evaluate {predicate!r} on a table")


def pairwise_predicate_values(
    xs: Sequence[SparseVector],
    ys: Sequence[SparseVector],
    predicate: Predicate,
) -> PairTable:
    """Table of f(x_i, y_j); exact when the connective values stay rational."""
    t = pairwise_inner_products(xs, ys)
    if isinstance(predicate, Inner):
        return t
    if t.exact and supports_exact(predicate):
        distinct = np.unique(t.numerators)
        if distinct.size <= _DISTINCT_VALUE_CAP:
            images = [
                apply_connective(predicate, Fraction(int(v), t.denominator))
                for v in distinct
            ]
            if all(isinstance(img, Fraction) for img in images):
                den_f = 1
                for img in images:
                    den_f = _lcm(den_f, img.denominator)
                nums = [img.numerator * (den_f // img.denominator) for img in images]
                if den_f < _INT64_GUARD and all(abs(u) < _INT64_GUARD for u in nums):
                    lut = np.array(nums, dtype=np.int64)
                    pos = np.searchsorted(distinct, t.numerators)
                    return PairTable(lut[pos], den_f, True)
    return PairTable(_float_connective_table(predicate, t.as_floats()), 1, False)


def _upper_margin_stats(F: np.ndarray, absolute: bool, block: int = 1024):
    """min/argmin and max over {F[i,j] - F[j,i] : i < j}, blockwise.

    With absolute=True the statistic is |F[i,j] - F[j,i]|.
    """
    n = F.shape[0]
    is_int = F.dtype.kind == "i"
    lo_sentinel = np.iinfo(np.int64).max if is_int else np.inf
    hi_sentinel = np.iinfo(np.int64).min if is_int else -np.inf
    best_min = None
    best_max = None
    arg = None
    cols = np.arange(n)[None, :]
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        diff = F[i0:i1, :] - F[:, i0:i1].T
        if absolute:
            diff = np.abs(diff)
        mask = cols > np.arange(i0, i1)[:, None]
        if not mask.any():
            continue
        masked_min = np.where(mask, diff, lo_sentinel)
        k = int(np.argmin(masked_min))
        i_loc, j_loc = divmod(k, n)
        v = masked_min[i_loc, j_loc]
        if best_min is None or v < best_min:
            best_min = v
            arg = (i0 + i_loc, j_loc)
        vmax = np.where(mask, diff, hi_sentinel).max()
        if best_max is None or vmax > best_max:
            best_max = vmax
    return best_min, best_max, arg


def ordered_value_ranges(table: PairTable, block: int = 1024):
    """((fwd_min, fwd_max), (bwd_min, bwd_max)) over pairs i < j.

    Forward is table[i, j], backward table[j, i]; exact tables yield
    Fractions.  Useful for asserting that a family's ordered values are all
    identical without materializing the pair list.
    """
    n = table.n
    if n < 2:
        raise ValueError("need at least two pairs")
    V = table.numerators
    is_int = table.exact
    lo = np.iinfo(np.int64).max if is_int else np.inf
    hi = np.iinfo(np.int64).min if is_int else -np.inf
    fwd = [None, None]
    bwd = [None, None]
    cols = np.arange(n)[None, :]
    for i0 in range(0, n, block):
        i1 = min(i0 + block, n)
        mask = cols > np.arange(i0, i1)[:, None]
        if not mask.any():
            continue
        for acc, sl in ((fwd, V[i0:i1, :]), (bwd, V[:, i0:i1].T)):
            vmin = np.where(mask, sl, lo).min()
            vmax = np.where(mask, sl, hi).max()
            if acc[0] is None or vmin < acc[0]:
                acc[0] = vmin
            if acc[1] is None or vmax > acc[1]:
                acc[1] = vmax

    def conv(v):
        return Fraction(int(v), table.denominator) if is_int else float(v)

    return (conv(fwd[0]), conv(fwd[1])), (conv(bwd[0]), conv(bwd[1]))


@dataclass(frozen=True)
class MarginMatrix:
    """Stored pairwise margins; only the strict upper triangle is meaningful."""

    numerators: np.ndarray
    denominator: int
    exact: bool

    def margin(self, i: int, j: int):
        if self.exact:
            return Fraction(int(self.numerators[i, j]), self.denominator)
        return float(self.numerators[i, j])


@dataclass(frozen=True)
class HalfGraphReport:
    """Outcome of an ordered-margin check under the stored family order.

    margin_min is the least of f(x_i, y_j) - f(x_j, y_i) over i < j
    (+inf for a single pair, where the condition is vacuous).
    """

    n: int
    predicate: Predicate
    epsilon: Union[Fraction, float]
    check_mode: str
    exact: bool
    margin_min: Union[Fraction, float]
    margin_max: Union[Fraction, float]
    argmin: Optional[Tuple[int, int]]
    holds: bool
    orientation: str = "definition_order"
    margin_matrix: Optional[MarginMatrix] = None

    def is_half_graph_at(self, epsilon) -> bool:
        return self.margin_min >= epsilon


def check_half_graph(
    w: WitnessFamily,
    predicate: Predicate,
    epsilon,
    check_mode: str = "signed",
    require_exact: bool = False,
    store_matrix_max_n: int = MARGIN_MATRIX_MAX_N,
) -> HalfGraphReport:
    """Verify the ordered margin of every pair i < j against epsilon.

    check_mode "signed" uses f(x_i, y_j) - f(x_j, y_i); "abs" its absolute
    value.  Exact rational arithmetic is used whenever the family and the
    predicate allow it; require_exact=True turns a silent float fallback
    into PredicateModeMismatch.
    """
    if w.n == 0:
        raise ValueError("witness family is empty")
    if check_mode not in ("signed", "abs"):
        raise ValueError("check_mode must be 'signed' or 'abs'")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if w.n == 1:
        return HalfGraphReport(
            n=1,
            predicate=predicate,
            epsilon=epsilon,
            check_mode=check_mode,
            exact=w.mode == EXACT,
            margin_min=math.inf,
            margin_max=-math.inf,
            argmin=None,
            holds=True,
        )
    table = pairwise_predicate_values(w.xs(), w.ys(), predicate)
    if require_exact and not table.exact:
        raise PredicateModeMismatch(
            "exact arithmetic requested but the connective values are "
            "not rational here"
        )
    vmin, vmax, arg = _upper_margin_stats(
        table.numerators, absolute=(check_mode == "abs")
    )
    if table.exact:
        margin_min = Fraction(int(vmin), table.denominator)
        margin_max = Fraction(int(vmax), table.denominator)
    else:
        margin_min, margin_max = float(vmin), float(vmax)
    matrix = None
    if w.n <= store_matrix_max_n:
        diff = table.numerators - table.numerators.T
        if check_mode == "abs":
            diff = np.abs(diff)
        matrix = MarginMatrix(diff, table.denominator, table.exact)
    return HalfGraphReport(
        n=w.n,
        predicate=predicate,
        epsilon=epsilon,
        check_mode=check_mode,
        exact=table.exact,
        margin_min=margin_min,
        margin_max=margin_max,
        argmin=arg,
        holds=margin_min >= epsilon,
        margin_matrix=matrix,
    )


def harmonic_pair_sum_exact(n: int) -> Fraction:
    """sum over 1 <= i < j <= n of 1/(j - i), as a rational."""
    return sum((Fraction(n - t, t) for t in range(1, n)), Fraction(0))


def harmonic_pair_sum(n: int, method: str = "offsets") -> float:
    """Same sum in floats, by offsets (n-t)/t or by brute pair enumeration."""
    if method == "offsets":
        return math.fsum((n - t) / t for t in range(1, n))
    if method == "pairs":
        return math.fsum(
            1.0 / (j - i) for i in range(1, n + 1) for j in range(i + 1, n + 1)
        )
    raise ValueError("method must be 'offsets' or 'pairs'")


@dataclass(frozen=True)
class SFunctionalReport:
    """The bilinear certificate sum S = sum_{i != j} <x_i, y_j> / (j - i).

    The weights fix Definition order: a family whose ordered margins are all
    at least eps drives S >= eps * lower_bound_coeff, while the operator
    norm of the weight matrix caps S at pi * n.  epsilon_certified = S /
    lower_bound_coeff is therefore the largest margin this certificate is
    consistent with.
    """

    n: int
    s_value: float
    s_exact: Optional[Fraction]
    upper_bound: float
    lower_bound_coeff: float
    lower_bound_coeff_exact: Fraction
    epsilon_certified: float


def s_functional(w: WitnessFamily) -> SFunctionalReport:
    """Evaluate the certificate sum for the family's stored order."""
    if w.n < 2:
        raise ValueError("need at least two pairs")
    n = w.n
    table = pairwise_inner_products(w.xs(), w.ys())
    if table.exact:
        s_exact = Fraction(0)
        for t in range(1, n):
            plus = int(np.diagonal(table.numerators, offset=t).sum())
            minus = int(np.diagonal(table.numerators, offset=-t).sum())
            s_exact += Fraction(plus - minus, t)
        s_exact /= table.denominator
        s_value = float(s_exact)
    else:
        s_exact = None
        terms = []
        for t in range(1, n):
            plus = float(np.diagonal(table.numerators, offset=t).sum())
            minus = float(np.diagonal(table.numerators, offset=-t).sum())
            terms.append((plus - minus) / t)
        s_value = math.fsum(terms)
    coeff_exact = harmonic_pair_sum_exact(n)
    coeff = float(coeff_exact)
    return SFunctionalReport(
        n=n,
        s_value=s_value,
        s_exact=s_exact,
        upper_bound=math.pi * n,
        lower_bound_coeff=coeff,
        lower_bound_coeff_exact=coeff_exact,
        epsilon_certified=s_value / coeff,
    )


def vector_valued_bound_check(
    A: DenseMatrix,
    ys: Sequence[SparseVector],
    op_norm: Optional[float] = None,
) -> Tuple[float, float]:
    """(lhs, rhs) for the vector-valued norm bound.

    lhs = sum_i ||sum_j a_ij y_j||^2 and rhs = M^2 * sum_j ||y_j||^2 where M
    is op_norm when supplied (e.g. the certified pi for the Hilbert-transform
    matrix) and the power-iteration estimate otherwise.
    """
    n = A.n
    if len(ys) != n:
        raise DimensionMismatch(f"matrix is {n}x{n} but got {len(ys)} vectors")
    labels: Dict[object, int] = {}
    yf = [v.to_float() for v in ys]
    for v in yf:
        for label in v.entries:
            labels.setdefault(label, len(labels))
    Y = np.zeros((n, max(len(labels), 1)))
    for j, v in enumerate(yf):
        for label, c in v.entries.items():
            Y[j, labels[label]] = c
    Z = A.entries @ Y
    lhs = float((Z * Z).sum())
    if op_norm is None:
        op_norm = operator_norm(A).value
    rhs = float(op_norm) ** 2 * float((Y * Y).sum())
    return lhs, rhs


def _edge_masks(pairs, predicate, epsilon) -> List[int]:
    """out[i] has bit j set when f(x_i, y_j) - f(x_j, y_i) >= epsilon."""
    xs = [x for x, _ in pairs]
    ys = [y for _, y in pairs]
    table = pairwise_predicate_values(xs, ys, predicate)
    n = len(pairs)
    if table.exact:
        eps = Fraction(epsilon)
        lhs_scale, rhs_scale = eps.denominator, eps.numerator * table.denominator
        N = table.numerators
        ok = (
            int(np.abs(N).max()) < _INT64_GUARD // (2 * max(lhs_scale, 1))
            and abs(rhs_scale) < _INT64_GUARD
        )
        if ok:
            diff = N - N.T
            edges = diff * lhs_scale >= rhs_scale
        else:
            edges = np.zeros((n, n), dtype=bool)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        m = Fraction(int(N[i, j]) - int(N[j, i]), table.denominator)
                        edges[i, j] = m >= eps
    else:
        F = table.numerators
        edges = (F - F.T) >= float(epsilon)
    np.fill_diagonal(edges, False)
    out = []
    for i in range(n):
        mask = 0
        for j in np.nonzero(edges[i])[0]:
            mask |= 1 << int(j)
        out.append(mask)
    return out


def _chain_valid(order: Sequence[int], out: List[int]) -> bool:
    for a in range(len(order)):
        for b in range(a + 1, len(order)):
            if not (out[order[a]] >> order[b]) & 1:
                return False
    return True


def _brute_force_chain(out: List[int], n: int) -> Tuple[int, List[int]]:
    in_mask = [0] * n
    for i in range(n):
        for j in range(n):
            if (out[i] >> j) & 1:
                in_mask[j] |= 1 << i
    # frequent easy case: the whole input is already a chain
    by_outdeg = sorted(range(n), key=lambda v: (-bin(out[v]).count("1"), v))
    if _chain_valid(by_outdeg, out):
        return n, by_outdeg
    best_order = [0]
    frontier: Dict[int, Tuple[int, ...]] = {1 << v: (v,) for v in range(n)}
    while frontier:
        next_frontier: Dict[int, Tuple[int, ...]] = {}
        for mask, order in frontier.items():
            for v in range(n):
                bit = 1 << v
                if mask & bit:
                    continue
                new_mask = mask | bit
                if new_mask in next_frontier:
                    continue
                preds = in_mask[v] & mask
                succs = out[v] & mask
                if (preds | succs) != mask:
                    continue
                p = bin(preds).count("1")
                prefix = 0
                for u in order[:p]:
                    prefix |= 1 << u
                if prefix != preds:
                    continue
                next_frontier[new_mask] = order[:p] + (v,) + order[p:]
        if next_frontier:
            best_order = list(next(iter(next_frontier.values())))
        frontier = next_frontier
    return len(best_order), best_order


def _greedy_chain(out: List[int], n: int) -> Tuple[int, List[int]]:
    """Pick the max-out-degree vertex, keep only its successors, repeat."""
    candidates = (1 << n) - 1
    order = []
    while candidates:
        best_v, best_deg = -1, -1
        for v in range(n):
            if (candidates >> v) & 1:
                deg = bin(out[v] & candidates).count("1")
                if deg > best_deg:
                    best_v, best_deg = v, deg
        order.append(best_v)
        candidates &= out[best_v]
    return len(order), order


def max_half_graph(
    pairs: Sequence[Tuple[SparseVector, SparseVector]],
    predicate: Predicate,
    epsilon,
    method: str = "brute",
) -> Tuple[int, List[int]]:
    """Largest sub-family admitting an order with all margins >= epsilon.

    Builds the directed relation i -> j iff f(x_i, y_j) - f(x_j, y_i) >=
    epsilon and returns the size and vertex order of a maximum totally
    ordered subset: exactly by breadth-first search over the (hereditary)
    feasible subsets ("brute", n <= 20), or heuristically by iterated
    max-out-degree peeling ("greedy").  The returned order is re-verified
    against the margin definition before returning.
    """
    if isinstance(pairs, WitnessFamily):
        pairs = pairs.pairs
    n = len(pairs)
    if n == 0:
        return 0, []
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if method == "brute" and n > BRUTE_FORCE_MAX_N:
        raise TooLargeForBruteForce(
            f"n={n} exceeds the brute-force cap {BRUTE_FORCE_MAX_N}"
        )
    out = _edge_masks(pairs, predicate, epsilon)
    if method == "brute":
        k, order = _brute_force_chain(out, n)
    elif method == "greedy":
        k, order = _greedy_chain(out, n)
    else:
        raise ValueError("method must be 'brute' or 'greedy'")
    if k >= 2:
        sub = WitnessFamily(
            kind="custom",
            pairs=tuple(pairs[i] for i in order),
            mode=pairs[0][0].mode,
            metadata={"source": "max_half_graph"},
        )
        report = check_half_graph(sub, predicate, epsilon)
        if not report.holds:
            raise AssertionError(
                "search returned an ordering that fails re-verification"
            )
    return k, order
