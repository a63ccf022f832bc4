"""Sparse vectors over labeled orthonormal bases, exact scale-tagged scalars,
dense skew matrices, and power-iteration operator norms.

Exact coefficients are rationals times an optional positive irrational factor
sqrt(sq) (sq rational).  The factors that arise here -- 1/sqrt(m) from
averaged tree vectors and 1/sqrt(2) from the fixed pi/4 rotation -- all square
to rationals, so inner products of like-tagged coefficients are exact
rationals and no floating point enters the exact path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Hashable, Iterable, Mapping, Optional, Tuple, Union

import numpy as np

from .errors import (
    CapExceeded,
    IncompatibleModes,
    IncompatibleScaleTags,
    NotConverged,
)

Label = Hashable
Rational = Union[int, Fraction]

EXACT = "exact"
FLOAT = "float"


def _square_part(n: int) -> Tuple[int, int]:
    """Split n > 0 as a*a * b with b square-free; returns (a, b)."""
    a, b, d = 1, n, 2
    while d * d <= b:
        while b % (d * d) == 0:
            a *= d
            b //= d * d
        d += 1
    return a, b


def _sqrt_exact(q: Fraction) -> Optional[Fraction]:
    """Exact square root of a nonnegative rational, or None if irrational."""
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True)
class ScaleTag:
    """Positive irrational factor sqrt(sq) shared by a family of coefficients.

    sq is kept square-free in numerator and denominator so that equal factors
    have equal representations.
    """

    sq: Fraction

    @staticmethod
    def one() -> "ScaleTag":
        return _TAG_ONE

    @staticmethod
    def half() -> "ScaleTag":
        """The factor sin(pi/4) = cos(pi/4) = sqrt(1/2)."""
        return ScaleTag(Fraction(1, 2))

    @staticmethod
    def inv_sqrt_m(m: int) -> "ScaleTag":
        if m < 1:
            raise ValueError("m must be >= 1")
        return ScaleTag(Fraction(1, m))

    @property
    def is_one(self) -> bool:
        return self.sq == 1

    def to_float(self) -> float:
        return math.sqrt(self.sq)

    def render(self) -> str:
        if self.sq == 1:
            return "one"
        if self.sq == Fraction(1, 2):
            return "half"
        if self.sq.numerator == 1:
            return f"inv_sqrt_m:{self.sq.denominator}"
        return f"sqrt:{self.sq.numerator}/{self.sq.denominator}"

    @staticmethod
    def parse(text: str) -> "ScaleTag":
        if text == "one":
            return _TAG_ONE
        if text == "half":
            return ScaleTag(Fraction(1, 2))
        if text.startswith("inv_sqrt_m:"):
            return ScaleTag.inv_sqrt_m(int(text.split(":", 1)[1]))
        if text.startswith("sqrt:"):
            num, den = text.split(":", 1)[1].split("/")
            return ScaleTag(Fraction(int(num), int(den)))
        raise ValueError(f"unknown scale tag {text!r}")


_TAG_ONE = ScaleTag(Fraction(1))


@dataclass(frozen=True)
class ExactScalar:
    """A rational times the irrational factor of its scale tag.

    Stored in canonical form: the rational part absorbs every square factor
    of the tag, and exact zero always carries the trivial tag.
    """

    value: Fraction
    tag: ScaleTag = _TAG_ONE

    @staticmethod
    def of(value: Rational, tag: ScaleTag = _TAG_ONE) -> "ExactScalar":
        value = Fraction(value)
        if value == 0 or tag.sq == 1:
            return ExactScalar(value, _TAG_ONE)
        an, bn = _square_part(tag.sq.numerator)
        ad, bd = _square_part(tag.sq.denominator)
        if an != 1 or ad != 1:
            value *= Fraction(an, ad)
        return ExactScalar(value, ScaleTag(Fraction(bn, bd)))

    @property
    def numerator(self) -> int:
        return self.value.numerator

    @property
    def denominator(self) -> int:
        return self.value.denominator

    def is_zero(self) -> bool:
        return self.value == 0

    def as_fraction(self) -> Fraction:
        if not self.tag.is_one:
            raise IncompatibleScaleTags(
                f"scalar {self} carries irrational factor sqrt({self.tag.sq})"
            )
        return self.value

    def to_float(self) -> float:
        return float(self.value) * self.tag.to_float()

    def __mul__(self, other: "ExactScalar") -> "ExactScalar":
        if not isinstance(other, ExactScalar):
            return ExactScalar.of(Fraction(other)) * self
        return ExactScalar.of(self.value * other.value,
                              ScaleTag(self.tag.sq * other.tag.sq))

    __rmul__ = __mul__

    def __add__(self, other: "ExactScalar") -> "ExactScalar":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.tag != other.tag:
            raise IncompatibleScaleTags(
                f"cannot add scalars with factors sqrt({self.tag.sq}) "
                f"and sqrt({other.tag.sq})"
            )
        return ExactScalar.of(self.value + other.value, self.tag)

    def __neg__(self) -> "ExactScalar":
        return ExactScalar(-self.value, self.tag)


def _coerce_exact(c) -> ExactScalar:
    if isinstance(c, ExactScalar):
        return c
    if isinstance(c, (int, Fraction)):
        return ExactScalar.of(c)
    raise TypeError(f"not an exact coefficient: {c!r}")


@dataclass(frozen=True)
class SparseVector:
    """Vector with finitely many nonzero coordinates over labeled basis vectors.

    entries maps basis labels to coefficients: ExactScalar in exact mode,
    float in float mode.  Zero coefficients are never stored.  Instances are
    treated as immutable; all operations return new vectors.
    """

    entries: Dict[Label, object]
    mode: str = EXACT

    @staticmethod
    def exact(mapping: Mapping[Label, object]) -> "SparseVector":
        ent = {}
        for label, c in mapping.items():
            c = _coerce_exact(c)
            if not c.is_zero():
                ent[label] = c
        return SparseVector(ent, EXACT)

    @staticmethod
    def from_floats(mapping: Mapping[Label, float]) -> "SparseVector":
        ent = {label: float(c) for label, c in mapping.items() if c != 0.0}
        return SparseVector(ent, FLOAT)

    @staticmethod
    def unit(label: Label, mode: str = EXACT) -> "SparseVector":
        if mode == EXACT:
            return SparseVector({label: ExactScalar.of(1)}, EXACT)
        return SparseVector({label: 1.0}, FLOAT)

    @staticmethod
    def zero(mode: str = EXACT) -> "SparseVector":
        return SparseVector({}, mode)

    @property
    def is_exact(self) -> bool:
        return self.mode == EXACT

    def nnz(self) -> int:
        return len(self.entries)

    def labels(self) -> Iterable[Label]:
        return self.entries.keys()

    def to_float(self) -> "SparseVector":
        if self.mode == FLOAT:
            return self
        return SparseVector(
            {label: c.to_float() for label, c in self.entries.items()}, FLOAT
        )

    def inner(self, other: "SparseVector"):
        return inner_product(self, other)

    def norm_squared(self):
        return norm_squared(self)

    def add(self, other: "SparseVector") -> "SparseVector":
        if self.mode != other.mode:
            raise IncompatibleModes("cannot add exact and float vectors")
        ent = dict(self.entries)
        for label, c in other.entries.items():
            if label in ent:
                s = ent[label] + c
                if (s.is_zero() if self.is_exact else s == 0.0):
                    del ent[label]
                else:
                    ent[label] = s
            else:
                ent[label] = c
        return SparseVector(ent, self.mode)

    def scale(self, c) -> "SparseVector":
        if self.is_exact:
            c = _coerce_exact(c)
            if c.is_zero():
                return SparseVector({}, EXACT)
            return SparseVector(
                {label: v * c for label, v in self.entries.items()}, EXACT
            )
        c = float(c)
        if c == 0.0:
            return SparseVector({}, FLOAT)
        return SparseVector(
            {label: v * c for label, v in self.entries.items()}, FLOAT
        )


def inner_product(x: SparseVector, y: SparseVector):
    """<x, y> over the shared labels.

    Exact mode returns a reduced Fraction; per-label coefficient products must
    be rational (IncompatibleScaleTags otherwise).  Float mode returns a
    compensated float sum.
    """
    if x.mode != y.mode:
        raise IncompatibleModes(
            "inner product requires both vectors in the same mode"
        )
    small, big = (x, y) if len(x.entries) <= len(y.entries) else (y, x)
    if x.is_exact:
        total = Fraction(0)
        for label, c in small.entries.items():
            d = big.entries.get(label)
            if d is not None:
                total += (c * d).as_fraction()
        return total
    return math.fsum(
        c * big.entries[label]
        for label, c in small.entries.items()
        if label in big.entries
    )


def norm_squared(x: SparseVector):
    """<x, x>; exact mode always yields a rational (tags square rationally)."""
    if x.is_exact:
        total = Fraction(0)
        for c in x.entries.values():
            total += (c * c).as_fraction()
        return total
    return math.fsum(c * c for c in x.entries.values())


def tensor_power_inner(x: SparseVector, y: SparseVector, d: int):
    """<x, y>^d, the implicit evaluation of the tensor-power inner product."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return inner_product(x, y) ** d


def materialize_tensor_power(
    x: SparseVector, d: int, dim_cap: int = 200_000
) -> SparseVector:
    """Explicit d-fold tensor power, indexed by d-tuples of basis labels."""
    if d < 1:
        raise ValueError("d must be >= 1")
    k = x.nnz()
    if k > 0 and k ** d > dim_cap:
        raise CapExceeded(
            f"tensor power would hold {k}**{d} = {k ** d} entries "
            f"(cap {dim_cap})"
        )
    items = list(x.entries.items())
    ent: Dict[Label, object] = {}
    if not items:
        return SparseVector({}, x.mode)

    def extend(prefix_label, prefix_coeff, depth):
        if depth == d:
            ent[prefix_label] = prefix_coeff
            return
        for label, c in items:
            extend(prefix_label + (label,), prefix_coeff * c, depth + 1)

    one = ExactScalar.of(1) if x.is_exact else 1.0
    extend((), one, 0)
    return SparseVector(ent, x.mode)


@dataclass(frozen=True)
class DenseMatrix:
    """Square float matrix; the skew flag asserts A = -A^T with zero diagonal."""

    entries: np.ndarray
    skew_symmetric: bool = False

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("DenseMatrix requires a square 2-d array")
        if self.skew_symmetric:
            if not np.array_equal(a, -a.T) or np.any(np.diag(a) != 0.0):
                raise ValueError("matrix is not skew-symmetric with zero diagonal")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class OperatorNormEstimate:
    """Power-iteration output: a certified-from-below operator norm estimate."""

    value: float
    converged: bool
    residual: float
    iterations: int
    restarted: bool


def _as_array(A) -> np.ndarray:
    if isinstance(A, DenseMatrix):
        return A.entries
    return np.asarray(A, dtype=float)


# Consecutive near-zero Rayleigh improvements before the one-shot reseed.
_STAGNATION_WINDOW = 8


def operator_norm(
    A, tol: float = 1e-10, max_iters: int = 50_000
) -> OperatorNormEstimate:
    """Largest singular value of A, estimated by power iteration on A^T A.

    Deterministic: starts from the normalized all-ones vector, with one fixed
    perturbed reseed if the Rayleigh quotient stagnates before the residual
    target.  The returned value is a Rayleigh quotient, hence never exceeds
    the true operator norm (up to roundoff).  Convergence is declared when
    the relative eigen-residual ||Bv - nu v|| / nu drops below tol.

    Raises NotConverged (carrying the partial estimate) if max_iters is
    exhausted first.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = _as_array(A)
    n = M.shape[0]
    B = M.T @ M
    v = np.ones(n) / math.sqrt(n)
    restarted = False
    nu_prev = -math.inf
    flat_count = 0
    residual = math.inf
    nu = 0.0
    for it in range(1, max_iters + 1):
        w = B @ v
        nu = float(v @ w)
        if nu <= 0.0:
            # A annihilates the seed direction; zero is exact for A = 0.
            return OperatorNormEstimate(0.0, True, 0.0, it, restarted)
        residual = float(np.linalg.norm(w - nu * v)) / nu
        if residual <= tol:
            return OperatorNormEstimate(math.sqrt(nu), True, residual, it, restarted)
        if nu - nu_prev <= 0.001 * tol * nu:
            flat_count += 1
            if flat_count >= _STAGNATION_WINDOW and not restarted:
                v = np.ones(n) + 0.5 * np.sin(np.arange(1, n + 1))
                v /= np.linalg.norm(v)
                restarted = True
                nu_prev = -math.inf
                flat_count = 0
                continue
        else:
            flat_count = 0
        nu_prev = nu
        v = w / np.linalg.norm(w)
    raise NotConverged(
        f"residual {residual:.3e} > tol {tol:.3e} after {max_iters} iterations",
        partial=OperatorNormEstimate(math.sqrt(max(nu, 0.0)), False, residual,
                                     max_iters, restarted),
    )
