"""Connectives applied to the inner product, and their stability scalings.

A predicate is one of:

* ``Inner``            -- the raw inner product t;
* ``PowerPlus(gamma)`` -- the clipped power max(t, 0)^gamma, gamma > 0;
* ``IntPower(d)``      -- the plain power t^d, integer d >= 1;
* ``PolyOfInner(a)``   -- a polynomial a_0 + a_1 t + ... + a_D t^D.

Evaluation is exact (Fraction) whenever the inputs are exact and the
connective value is rational; otherwise it falls back to floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

from .errors import PredicateModeMismatch, UnsupportedPredicate
from .linalg import SparseVector, inner_product

Scalar = Union[Fraction, float]


@dataclass(frozen=True)
class Predicate:
    tag = "abstract"


@dataclass(frozen=True)
class Inner(Predicate):
    tag = "inner"


@dataclass(frozen=True)
class PowerPlus(Predicate):
    """max(t, 0)^exponent; exponent may be a float or an exact Fraction."""

    exponent: Union[float, Fraction]
    tag = "power_plus"

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("PowerPlus exponent must be positive")


@dataclass(frozen=True)
class IntPower(Predicate):
    d: int
    tag = "int_power"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("IntPower degree must be >= 1")


@dataclass(frozen=True)
class PolyOfInner(Predicate):
    """a_0 + sum a_k t^k with float coefficients a_0..a_D."""

    coefficients: Tuple[float, ...]
    tag = "poly"

    def __post_init__(self):
        object.__setattr__(
            self, "coefficients", tuple(float(c) for c in self.coefficients)
        )
        if not self.coefficients:
            raise ValueError("need at least the constant coefficient")


def _int_nth_root(n: int, k: int) -> Optional[int]:
    """Exact integer k-th root of n >= 0, or None."""
    if n < 0:
        return None
    if n in (0, 1) or k == 1:
        return n
    if k == 2:
        r = math.isqrt(n)
        return r if r * r == n else None
    r = round(n ** (1.0 / k)) if n.bit_length() < 512 else 1 << (n.bit_length() // k)
    # fix up float error around the candidate
    while r > 0 and r ** k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r if r >= 0 and r ** k == n else None


def _fraction_pow_exact(base: Fraction, exp: Fraction) -> Optional[Fraction]:
    """base^exp as an exact Fraction, or None when irrational.

    base >= 0 and exp > 0 with small numerator are assumed.
    """
    p, q = exp.numerator, exp.denominator
    num, den = base.numerator ** p, base.denominator ** p
    rn = _int_nth_root(num, q)
    if rn is None:
        return None
    rd = _int_nth_root(den, q)
    if rd is None:
        return None
    return Fraction(rn, rd)


def supports_exact(p: Predicate) -> bool:
    """Whether the predicate can in principle produce exact rational values."""
    if isinstance(p, (Inner, IntPower)):
        return True
    if isinstance(p, PowerPlus):
        return isinstance(p.exponent, (int, Fraction))
    return False


def apply_connective(p: Predicate, t: Scalar) -> Scalar:
    """Connective value at inner-product value t; exact when possible."""
    if isinstance(p, Inner):
        return t
    if isinstance(p, IntPower):
        return t ** p.d
    if isinstance(p, PowerPlus):
        tp = t if t > 0 else 0 * t
        e = p.exponent
        if isinstance(e, int) or (isinstance(e, Fraction) and e.denominator == 1):
            return tp ** int(e)
        if isinstance(tp, Fraction) and isinstance(e, Fraction):
            exact = _fraction_pow_exact(tp, e)
            if exact is not None:
                return exact
        return float(tp) ** float(e)
    if isinstance(p, PolyOfInner):
        x = float(t)
        acc = 0.0
        for c in reversed(p.coefficients):
            acc = acc * x + c
        return acc
    raise UnsupportedPredicate(f"cannot evaluate {p!r}")


def evaluate(p: Predicate, x: SparseVector, y: SparseVector) -> Scalar:
    """f(x, y) = connective(<x, y>)."""
    return apply_connective(p, inner_product(x, y))


def holder_gap_transfer(epsilon: float, beta: float) -> float:
    """Inner-product gap guaranteed by a gap of epsilon under t^beta.

    On [0, 1] the power t^beta with beta in (0, 1] has Holder modulus
    |t^beta - s^beta| <= |t - s|^beta, so a connective gap of epsilon forces
    an inner-product gap of epsilon^(1/beta).
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    return float(epsilon) ** (1.0 / float(beta))


def lipschitz_gap_transfer(epsilon: float, alpha: float) -> float:
    """Inner-product gap guaranteed by a gap of epsilon under t^alpha.

    t^alpha is alpha-Lipschitz on [0, 1] for alpha >= 1, so the connective
    gap shrinks by at most the factor alpha.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return float(epsilon) / float(alpha)


def _floor_inv_pow(epsilon, beta) -> int:
    """floor(epsilon^(-1/beta)), exactly when both arguments are rational."""
    if isinstance(epsilon, (int, Fraction)) and isinstance(beta, (int, Fraction)):
        b = Fraction(beta)
        exact = _fraction_pow_exact(1 / Fraction(epsilon), 1 / b)
        if exact is not None:
            return math.floor(exact)
        # rational but irrational power: bracket the float estimate
        est = math.floor(float(epsilon) ** (-1.0 / float(b)))
        for cand in (est + 1, est, est - 1):
            if cand >= 1 and Fraction(cand) ** b.numerator <= (
                1 / Fraction(epsilon)
            ) ** b.denominator:
                return cand
        return max(est, 0)
    return math.floor(float(epsilon) ** (-1.0 / float(beta)))


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _times_ln2(count: int) -> float:
    try:
        return count * math.log(2)
    except OverflowError:
        return math.inf


def stability_exponents(p: Predicate, epsilon) -> Tuple[float, float]:
    """(log k_upper, log k_lower) for the predicate at margin epsilon.

    k_upper is the certified stability threshold; k_lower the size of the
    explicit half-graph construction (with floors applied to the depth
    parameter, hence an O(1) slack against the smooth formula).
    """
    eps = float(epsilon)
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if isinstance(p, Inner):
        return math.pi / eps, _times_ln2(_floor_inv_pow(epsilon, 1))
    if isinstance(p, PowerPlus):
        e = float(p.exponent)
        if e <= 1:
            return (
                math.pi * eps ** (-1.0 / e),
                _times_ln2(_floor_inv_pow(epsilon, p.exponent)),
            )
        c_alpha = e / 2 ** e
        return e * math.pi / eps, _times_ln2(math.floor(c_alpha / eps))
    if isinstance(p, IntPower):
        c_d = p.d / 2 ** p.d
        return math.pi / eps, _times_ln2(math.floor(c_d / eps))
    raise UnsupportedPredicate(
        "stability bounds for polynomial connectives require the "
        "polynomial-approximation functional; see the approx module"
    )


def stability_bounds(p: Predicate, epsilon) -> Tuple[float, float]:
    """(k_upper, k_lower): stability threshold and construction size.

    The predicate is stable at every k >= k_upper and unstable at the
    construction size k_lower; k_lower <= k_upper always.  Values overflow
    to inf for very small epsilon; use stability_exponents for logs.
    """
    log_upper, log_lower = stability_exponents(p, epsilon)
    return _safe_exp(log_upper), _safe_exp(log_lower)


def predicate_to_json(p: Predicate) -> dict:
    if isinstance(p, Inner):
        return {"tag": "inner"}
    if isinstance(p, PowerPlus):
        e = p.exponent
        if isinstance(e, Fraction) and e.denominator & (e.denominator - 1) != 0:
            # non-dyadic rational: floats would silently lose exactness
            return {"tag": "power_plus", "exp": f"{e.numerator}/{e.denominator}"}
        return {"tag": "power_plus", "exp": float(e)}
    if isinstance(p, IntPower):
        return {"tag": "int_power", "d": p.d}
    if isinstance(p, PolyOfInner):
        return {"tag": "poly", "coeffs": list(p.coefficients)}
    raise UnsupportedPredicate(f"cannot serialize {p!r}")


def predicate_from_json(obj: dict) -> Predicate:
    tag = obj["tag"]
    if tag == "inner":
        return Inner()
    if tag == "power_plus":
        e = obj["exp"]
        return PowerPlus(Fraction(e) if isinstance(e, str) else Fraction(str(e)))
    if tag == "int_power":
        return IntPower(int(obj["d"]))
    if tag == "poly":
        return PolyOfInner(tuple(obj["coeffs"]))
    raise UnsupportedPredicate(f"unknown predicate tag {tag!r}")


def parse_predicate_spec(spec: str) -> Predicate:
    """Parse CLI predicate strings: inner | pow:G | intpow:D | poly:a0,a1,...

    Exponents given as decimals or fractions ("0.5", "1/2") are kept exact.
    """
    spec = spec.strip()
    if spec == "inner":
        return Inner()
    if spec.startswith("pow:"):
        return PowerPlus(Fraction(spec[4:]))
    if spec.startswith("intpow:"):
        return IntPower(int(spec[7:]))
    if spec.startswith("poly:"):
        return PolyOfInner(tuple(float(c) for c in spec[5:].split(",")))
    raise UnsupportedPredicate(f"cannot parse predicate spec {spec!r}")
