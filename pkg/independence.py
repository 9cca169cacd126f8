"""
Independence Checks
Decide t-independence and weak t-independence of subsets, compute ind(A)
and wind(A), and build fold and star sumsets
"""

import logging
from dataclasses import dataclass
from enum import Enum
from math import comb, inf
from typing import Any, Dict, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np

from group_core import DomainError, Element, Group, format_elements, group_table, iter_bits

logger = logging.getLogger(__name__)

INFINITY = inf


class ConsistencyError(RuntimeError):
    """Raised when two independent decision paths disagree"""


class Condition(Enum):
    """Which of the three defining requirements failed"""
    ZERO_SUM = "zero-sum"            # 0 in h.A
    OVERLAP = "sumset-overlap"       # (h.A) meets (k.A) for h < k
    COLLISION = "sum-collision"      # two distinct h-term sums coincide


# ============================================================================
# DATA CLASSES
# ============================================================================

@dataclass(frozen=True)
class Subset:
    """A set of distinct group elements, kept in canonical order.

    Coordinates are reduced modulo each factor, so (9,) in Z_7 is stored as
    (2,); parse with strict=True to reject such input instead.
    """
    group: Group
    members: Tuple[Element, ...] = ()

    def __post_init__(self):
        normalized = [self.group.element(x) for x in self.members]
        if len(set(normalized)) != len(normalized):
            raise DomainError(f"subset has duplicate members: {format_elements(normalized)}")
        object.__setattr__(self, "members", tuple(sorted(normalized)))

    @classmethod
    def from_indices(cls, group: Group, indices: Sequence[int]) -> "Subset":
        table = group_table(group)
        return cls(group, tuple(table.elements[int(i)] for i in indices))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def indices(self) -> List[int]:
        return [self.group.index(x) for x in self.members]

    def bits(self) -> int:
        return group_table(self.group).bits_of(self.indices())

    def negated(self) -> "Subset":
        return Subset(self.group, tuple(self.group.neg(x) for x in self.members))

    def to_list(self) -> List[List[int]]:
        return [list(x) for x in self.members]

    def __str__(self) -> str:
        return "{" + format_elements(self.members) + "}"


@dataclass(frozen=True)
class CoeffVector:
    lambdas: Tuple[int, ...]

    @property
    def weight(self) -> int:
        return sum(abs(v) for v in self.lambdas)

    @property
    def is_weak(self) -> bool:
        return all(v in (-1, 0, 1) for v in self.lambdas)

    def evaluate(self, subset: Subset) -> Element:
        group = subset.group
        total = group.zero()
        for lam, x in zip(self.lambdas, subset.members):
            total = group.add(total, group.scalar_mul(lam, x))
        return total


@dataclass
class IndependenceReport:
    independent: bool
    t: int
    weak: bool = False
    violating_vector: Optional[CoeffVector] = None
    failed_condition: Optional[Condition] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "independent": self.independent,
            "t": self.t,
            "mode": "weak" if self.weak else "strong",
            "violating_vector": list(self.violating_vector.lambdas) if self.violating_vector else None,
            "failed_condition": self.failed_condition.value if self.failed_condition else None,
        }


# ============================================================================
# SUMSETS
# ============================================================================

def _fold_layers(subset: Subset, top: int) -> List[int]:
    """Bitsets of h.A for h = 0..top"""
    table = group_table(subset.group)
    members = subset.bits()
    layers = [1]
    for _ in range(top):
        layers.append(table.sumset(layers[-1], members) if members else 0)
    return layers


def _star_layers(subset: Subset, top: int) -> List[int]:
    """Bitsets of h*A (distinct summands) for h = 0..top"""
    table = group_table(subset.group)
    layers = [1] + [0] * top
    for count, i in enumerate(subset.indices(), start=1):
        for h in range(min(top, count), 0, -1):
            layers[h] |= table.translate(layers[h - 1], i)
    return layers


def _elements(group: Group, bits: int) -> Set[Element]:
    table = group_table(group)
    return {table.elements[i] for i in iter_bits(bits)}


def fold_sumset(subset: Subset, h: int) -> Set[Element]:
    """h.A: sums of h not necessarily distinct members"""
    if h < 0:
        raise DomainError(f"sumset order must be >= 0, got {h}")
    return _elements(subset.group, _fold_layers(subset, h)[h])


def star_sumset(subset: Subset, h: int) -> Set[Element]:
    """h*A: sums of h pairwise distinct members"""
    if h < 0:
        raise DomainError(f"sumset order must be >= 0, got {h}")
    if h > len(subset):
        return set()
    return _elements(subset.group, _star_layers(subset, h)[h])


# ============================================================================
# CONDITION TRIPLE
# ============================================================================

def condition_failure(subset: Subset, t: int, weak: bool = False,
                      reduced: bool = False) -> Optional[Condition]:
    """First failed requirement among zero-sum, overlap and collision, if any.

    With ``reduced`` only equations with t or t-1 terms are evaluated; a
    shorter violation can always be padded by a repeated summand, so the
    verdict is unchanged (strong mode only).
    """
    m = len(subset)
    if weak:
        reduced = False
        t = min(t, m)
    else:
        t = min(t, subset.group.order)
    if t <= 0 or m == 0:
        return None

    layers = _star_layers(subset, t) if weak else _fold_layers(subset, t)

    def count(h: int) -> int:
        return comb(m, h) if weak else comb(m + h - 1, h)

    if reduced:
        zero_levels = [h for h in (t - 1, t) if h >= 1]
        pairs = [(h, k) for h in range(1, t) for k in range(h + 1, t - h + 1) if h + k >= t - 1]
        collision_levels = [t // 2] if t >= 2 else []
    else:
        zero_levels = range(1, t + 1)
        pairs = [(h, k) for h in range(1, t) for k in range(h + 1, t - h + 1)]
        collision_levels = range(1, t // 2 + 1)

    for h in zero_levels:
        if layers[h] & 1:
            return Condition.ZERO_SUM
    for h, k in pairs:
        if layers[h] & layers[k]:
            return Condition.OVERLAP
    for h in collision_levels:
        if layers[h].bit_count() != count(h):
            return Condition.COLLISION
    return None


# ============================================================================
# MINIMAL VANISHING WEIGHT
# ============================================================================

def _cheapest_relation(table, generators: List[int], a: int, limit: int) -> Optional[int]:
    """Least j + dist(j*a) <= limit, dist measured over ``generators``"""
    pending: Dict[int, int] = {}
    for j in range(1, limit + 1):
        pending[j] = table.scaled_index(j, a)
        if pending[j] == 0:
            break
    cheapest = None
    reached = frontier = 1
    depth = 0
    while pending and depth < limit:
        for j in list(pending):
            if j + depth > limit:
                del pending[j]
            elif (reached >> pending[j]) & 1:
                cheapest = j + depth
                limit = cheapest - 1
                del pending[j]
        if not pending or not generators:
            break
        step = 0
        for g in generators:
            step |= table.translate(frontier, g)
        frontier = step & ~reached
        if not frontier:
            break
        reached |= frontier
        depth += 1
    return cheapest


def _strong_min_weight(subset: Subset, cap: int) -> Optional[int]:
    # a relation whose last nonzero coefficient j sits on a costs j + dist(j*a)
    table = group_table(subset.group)
    best: Optional[int] = None
    generators: List[int] = []
    for a in subset.indices():
        limit = cap if best is None else min(cap, best - 1)
        if limit >= 1:
            found = _cheapest_relation(table, generators, a, limit)
            if found is not None:
                best = found
        generators.append(a)
        neg = int(table.neg_index[a])
        if neg != a:
            generators.append(neg)
    return best


def _weak_min_weight(subset: Subset, cap: int) -> Optional[int]:
    table = group_table(subset.group)
    best: Optional[int] = None
    depth = max(cap - 1, 0)
    layers = [1] * (depth + 1)
    for a in subset.indices():
        for w in range(depth + 1):
            if (layers[w] >> a) & 1:
                if w + 1 <= cap:
                    best = w + 1 if best is None else min(best, w + 1)
                break
        neg = int(table.neg_index[a])
        for w in range(depth, 0, -1):
            layers[w] |= table.translate(layers[w - 1], a) | table.translate(layers[w - 1], neg)
    return best


def minimal_vanishing_weight(subset: Subset, weak: bool = False,
                             cap: Optional[int] = None) -> Optional[int]:
    """Least weight of a nonzero vanishing combination, or None above ``cap``"""
    bound = len(subset) if weak else subset.group.order
    cap = bound if cap is None else min(cap, bound)
    if cap < 1 or not len(subset):
        return None
    return _weak_min_weight(subset, cap) if weak else _strong_min_weight(subset, cap)


# ============================================================================
# COEFFICIENT ENUMERATION
# ============================================================================

def vectors_of_weight(m: int, w: int, weak: bool = False) -> Iterator[Tuple[int, ...]]:
    """All coefficient vectors of length m and weight w, lexicographically"""
    top = 1 if weak else w

    def rec(pos: int, remaining: int) -> Iterator[Tuple[int, ...]]:
        if pos == m - 1:
            if remaining == 0:
                yield (0,)
            elif remaining <= top:
                yield (-remaining,)
                yield (remaining,)
            return
        bound = min(remaining, top)
        for lam in range(-bound, bound + 1):
            rest = remaining - abs(lam)
            if rest > (m - pos - 1) * top:
                continue
            for tail in rec(pos + 1, rest):
                yield (lam,) + tail

    if m == 0:
        if w == 0:
            yield ()
        return
    yield from rec(0, w)


def _first_vanishing(subset: Subset, weights: Sequence[int], weak: bool) -> Optional[CoeffVector]:
    coords = np.array(subset.members, dtype=np.int64).reshape(len(subset), -1)
    factors = np.array(subset.group.factors, dtype=np.int64)
    for w in weights:
        for lambdas in vectors_of_weight(len(subset), w, weak):
            if not np.any((np.array(lambdas, dtype=np.int64) @ coords) % factors):
                return CoeffVector(lambdas)
    return None


def find_vanishing_vector(subset: Subset, max_weight: int,
                          weak: bool = False) -> Optional[CoeffVector]:
    """Reference path: enumerate vectors by weight, then lexicographically"""
    if not len(subset):
        return None
    cap = min(max_weight, len(subset) if weak else subset.group.order)
    return _first_vanishing(subset, range(1, cap + 1), weak)


# ============================================================================
# DECISIONS AND NUMBERS
# ============================================================================

def _report(subset: Subset, t: int, weak: bool, cross_check: bool) -> IndependenceReport:
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    weight = minimal_vanishing_weight(subset, weak=weak, cap=t)
    vector = None
    if weight is not None:
        vector = _first_vanishing(subset, [weight], weak)
        if vector is None:
            raise ConsistencyError(f"no vanishing vector of weight {weight} found for {subset}")
    failed = condition_failure(subset, t, weak=weak)
    if cross_check and (failed is None) != (weight is None):
        raise ConsistencyError(
            f"{subset} at t={t}: minimal weight {weight} but condition check gave {failed}"
        )
    return IndependenceReport(
        independent=weight is None,
        t=t,
        weak=weak,
        violating_vector=vector,
        failed_condition=failed,
    )


def is_t_independent(subset: Subset, t: int, cross_check: bool = True) -> IndependenceReport:
    return _report(subset, t, weak=False, cross_check=cross_check)


def is_weakly_t_independent(subset: Subset, t: int, cross_check: bool = True) -> IndependenceReport:
    return _report(subset, t, weak=True, cross_check=cross_check)


def independence_number(subset: Subset) -> int:
    """ind(A): one less than the least weight of a vanishing relation"""
    if not len(subset):
        raise DomainError("independence number of the empty set is undefined")
    weight = minimal_vanishing_weight(subset)
    if weight is None:
        raise ConsistencyError(f"{subset} has no vanishing relation of weight <= n")
    return weight - 1


def weak_independence_number(subset: Subset):
    """wind(A), INFINITY when no {-1,0,1} relation vanishes"""
    if not len(subset):
        raise DomainError("weak independence number of the empty set is undefined")
    weight = minimal_vanishing_weight(subset, weak=True)
    return INFINITY if weight is None else weight - 1


def is_sum_free(subset: Subset) -> bool:
    layers = _fold_layers(subset, 2)
    return not (layers[2] & layers[1])


def format_number(value) -> str:
    return "inf" if value == INFINITY else str(value)
