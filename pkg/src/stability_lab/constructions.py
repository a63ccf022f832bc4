"""Explicit witness families over the unit ball.

Three constructions are provided:

* the binary-tree family indexed by length-m bit strings, whose ordered
  margins under the raw inner product are exactly 1/m;
* its shifted variant, which mixes every vector with a fixed orthogonal
  direction at angle pi/4 so that the ordered values move to
  1/2 + 1/(2m) versus 1/2 (useful for connectives that are flat at 0);
* the margin-shattering configuration on d orthonormal points whose 2^d
  realizers achieve values +eps/2 / -eps/2 around the threshold eps/2.

Basis labels are heap-indexed integers: the tree root is node 1, the children
of node v are 2v and 2v+1, and the directed edge into node w is labeled w.
Label 0 is reserved for the extra orthogonal direction of the shifted family.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from .errors import (
    DOutOfRange,
    DuplicateString,
    MarginTooLargeForDimension,
    MOutOfRange,
)
from .linalg import EXACT, FLOAT, ExactScalar, ScaleTag, SparseVector

MAX_TREE_DEPTH = 20
MAX_VC_POINTS = 24

SHIFT_LABEL = 0  # basis label of the common orthogonal direction


def heap_index(bits: Sequence[int]) -> int:
    """Heap index of the tree node reached by following bits from the root."""
    h = 1
    for b in bits:
        h = 2 * h + b
    return h


def edge_count(m: int) -> int:
    """Number of directed edges of the depth-m full binary tree."""
    return 2 ** (m + 1) - 2


@dataclass(frozen=True)
class TreeEdge:
    """Directed edge (v -> vb), keyed by the child's heap index."""

    parent_node: int
    child_bit: int

    def __post_init__(self):
        if self.parent_node < 1 or self.child_bit not in (0, 1):
            raise ValueError("invalid tree edge")

    @property
    def edge_key(self) -> int:
        return 2 * self.parent_node + self.child_bit

    @staticmethod
    def from_key(key: int) -> "TreeEdge":
        if key < 2:
            raise ValueError("edge keys start at 2")
        return TreeEdge(key // 2, key % 2)

    def render(self) -> str:
        """Bit-string form of the edge, e.g. '01->010'; root is ''."""
        child = self.edge_key
        bits = bin(child)[3:]  # strip '0b1' (the root marker)
        return f"{bits[:-1]}->{bits}"


@dataclass(frozen=True)
class WitnessFamily:
    """Ordered list of (x_i, y_i) pairs, all inside the unit ball.

    The order is part of the data: margins are always evaluated against it.
    """

    kind: str
    pairs: Tuple[Tuple[SparseVector, SparseVector], ...]
    mode: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        for x, y in self.pairs:
            if x.mode != self.mode or y.mode != self.mode:
                raise ValueError("pair mode differs from family mode")
            for v in (x, y):
                ns = v.norm_squared()
                if (ns > 1) if self.mode == EXACT else (ns > 1.0 + 1e-9):
                    raise ValueError("witness vector outside the unit ball")

    @property
    def n(self) -> int:
        return len(self.pairs)

    def xs(self) -> List[SparseVector]:
        return [x for x, _ in self.pairs]

    def ys(self) -> List[SparseVector]:
        return [y for _, y in self.pairs]


def _check_depth(m: int):
    if not (1 <= m <= MAX_TREE_DEPTH):
        raise MOutOfRange(
            f"tree depth m={m} outside [1, {MAX_TREE_DEPTH}] "
            f"(2^m pairs are materialized)"
        )


def _bits_of(s: int, m: int) -> List[int]:
    return [(s >> (m - 1 - r)) & 1 for r in range(m)]


def build_tree_witness(m: int, mode: str = EXACT) -> WitnessFamily:
    """The 2^m binary-tree pairs in lexicographic order.

    x_s spreads weight 1/sqrt(m) over the m edges of the root-to-leaf path
    of s; y_s puts the same weight on the left edge at each prefix where s
    has a 1 bit.  For s before t in lexicographic order the ordered values
    are exactly 1/m and 0.
    """
    _check_depth(m)
    if mode == EXACT:
        coeff = ExactScalar.of(1, ScaleTag.inv_sqrt_m(m))
    else:
        coeff = m ** -0.5
    pairs = []
    strings = []
    for s in range(2 ** m):
        bits = _bits_of(s, m)
        strings.append("".join(map(str, bits)))
        x_ent: Dict[int, object] = {}
        y_ent: Dict[int, object] = {}
        h = 1
        for b in bits:
            left_child = 2 * h
            h = 2 * h + b
            x_ent[h] = coeff
            if b == 1:
                y_ent[left_child] = coeff
        pairs.append((SparseVector(x_ent, mode), SparseVector(y_ent, mode)))
    return WitnessFamily(
        kind="tree",
        pairs=tuple(pairs),
        mode=mode,
        metadata={"m": m, "strings": strings},
    )


def build_shifted_witness(m: int, mode: str = EXACT) -> WitnessFamily:
    """Tree witness rotated by pi/4 against a fresh orthogonal direction.

    Every vector gains coefficient sqrt(1/2) on the reserved label 0 and the
    tree coefficients shrink to sqrt(1/(2m)).  For s before t the ordered
    values become exactly 1/2 + 1/(2m) and 1/2, so the margin survives
    connectives that vanish to high order at 0.
    """
    _check_depth(m)
    tree = build_tree_witness(m, mode)
    if mode == EXACT:
        shift_coeff = ExactScalar.of(1, ScaleTag.half())
        edge_coeff = ExactScalar.of(1, ScaleTag(Fraction(1, 2 * m)))
    else:
        shift_coeff = 2 ** -0.5
        edge_coeff = (2 * m) ** -0.5
    pairs = []
    for x, y in tree.pairs:
        x_ent = {SHIFT_LABEL: shift_coeff}
        x_ent.update({lab: edge_coeff for lab in x.entries})
        y_ent = {SHIFT_LABEL: shift_coeff}
        y_ent.update({lab: edge_coeff for lab in y.entries})
        pairs.append((SparseVector(x_ent, mode), SparseVector(y_ent, mode)))
    return WitnessFamily(
        kind="shifted",
        pairs=tuple(pairs),
        mode=mode,
        metadata={"m": m, "strings": list(tree.metadata["strings"])},
    )


@dataclass(frozen=True)
class VCWitness:
    """d orthonormal points together with 2^d margin-shattering realizers.

    Realizer keys are subset bitmasks: bit (i-1) set means point i is on the
    high side of the threshold.
    """

    d: int
    epsilon: Fraction
    points: Tuple[SparseVector, ...]
    threshold: Fraction
    realizers: Dict[int, SparseVector]


def build_vc_witness(d: int, epsilon) -> VCWitness:
    """Shattering configuration: x_i = e_i, y_S = (eps/2) * sum of signed e_i.

    Requires d * eps^2 <= 4 so that every realizer stays in the unit ball;
    at equality the realizer norms are exactly 1.
    """
    epsilon = Fraction(epsilon)
    if not (1 <= d <= MAX_VC_POINTS):
        raise DOutOfRange(
            f"d={d} outside [1, {MAX_VC_POINTS}] (2^d realizers are materialized)"
        )
    if not (0 < epsilon <= 1):
        raise ValueError("epsilon must be a rational in (0, 1]")
    if d * epsilon ** 2 > 4:
        raise MarginTooLargeForDimension(
            f"d * eps^2 = {d * epsilon ** 2} > 4: no unit-ball realizers exist"
        )
    half = epsilon / 2
    plus = ExactScalar.of(half)
    minus = ExactScalar.of(-half)
    points = tuple(SparseVector.unit(i) for i in range(1, d + 1))
    realizers = {}
    for mask in range(2 ** d):
        ent = {
            i: (plus if (mask >> (i - 1)) & 1 else minus)
            for i in range(1, d + 1)
        }
        realizers[mask] = SparseVector(ent, EXACT)
    return VCWitness(
        d=d,
        epsilon=epsilon,
        points=points,
        threshold=half,
        realizers=realizers,
    )


def lex_order(strings: Sequence[str]) -> List[int]:
    """Permutation sorting equal-length binary strings lexicographically.

    Returns indices perm with strings[perm[0]] < strings[perm[1]] < ...;
    s precedes t exactly when s has 0 at the first differing position.
    """
    if not strings:
        return []
    length = len(strings[0])
    seen = set()
    for s in strings:
        if len(s) != length:
            raise ValueError("strings must all have the same length")
        if set(s) - {"0", "1"}:
            raise ValueError(f"not a binary string: {s!r}")
        if s in seen:
            raise DuplicateString(f"duplicate string {s!r}")
        seen.add(s)
    return sorted(range(len(strings)), key=strings.__getitem__)
