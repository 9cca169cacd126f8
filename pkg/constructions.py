"""
Explicit Constructions
Two- and three-independent sets, B_h-sequence sets in cyclic groups, greedy
strong and weak sets and projected sum-free sets, each certified by the checker
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from formulas import (
    best_odd_divisor,
    general_floor,
    sf_projection_size,
    three_lower_size,
    torsion_induction_size,
    weak_induction_size,
    weak_power_lower,
)
from group_core import (
    DomainError,
    Element,
    Group,
    bool_from_bits,
    element_orders,
    group_table,
    sigma,
    torsion_size,
)
from independence import (
    ConsistencyError,
    Subset,
    is_sum_free,
    is_t_independent,
    is_weakly_t_independent,
)
from search import SignedSumTable

logger = logging.getLogger(__name__)


# ============================================================================
# DATA CLASSES
# ============================================================================

@dataclass(frozen=True)
class BhSequence:
    h: int
    N: int
    members: Tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.members)


def is_bh_sequence(members: Sequence[int], h: int) -> bool:
    """All h-term multiset sums distinct, checked by brute force"""
    sums = [sum(combo) for combo in combinations_with_replacement(members, h)]
    return len(set(sums)) == len(sums)


@dataclass
class ConstructionCertificate:
    """A constructed set, the size it should have, and whether the checker agreed"""
    method: str
    group: Group
    claimed_t: Optional[int]
    produced: Subset
    expected_size: int
    relation: str = "=="
    weak: bool = False
    verified: bool = False
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def size_ok(self) -> bool:
        if self.relation == ">=":
            return len(self.produced) >= self.expected_size
        return len(self.produced) == self.expected_size

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "group": self.group.spec(),
            "claimed_t": self.claimed_t,
            "mode": "sumfree" if self.claimed_t is None else ("weak" if self.weak else "strong"),
            "produced": self.produced.to_list(),
            "size": len(self.produced),
            "expected_size": self.expected_size,
            "relation": self.relation,
            "verified": self.verified,
            "details": self.details,
        }


def _certify(cert: ConstructionCertificate) -> ConstructionCertificate:
    if cert.claimed_t is None:
        passes = is_sum_free(cert.produced)
    elif cert.weak:
        passes = is_weakly_t_independent(cert.produced, cert.claimed_t).independent
    else:
        passes = is_t_independent(cert.produced, cert.claimed_t).independent
    cert.verified = passes and cert.size_ok
    if not cert.verified:
        logger.error(
            "%s on %s failed certification: checker=%s, size %d %s expected %d, set %s",
            cert.method, cert.group, passes, len(cert.produced), cert.relation,
            cert.expected_size, cert.produced,
        )
    else:
        logger.debug("%s on %s certified with size %d", cert.method, cert.group, len(cert.produced))
    return cert


def _fibers(group: Group, d: int, residues: Set[int]) -> List[Element]:
    """Elements whose last coordinate reduces mod d into ``residues``"""
    coords = group_table(group).coords
    keep = np.isin(coords[:, -1] % d, sorted(residues))
    return [tuple(int(c) for c in row) for row in coords[keep]]


# ============================================================================
# t = 2 AND t = 3
# ============================================================================

def two_indep_construct(group: Group) -> ConstructionCertificate:
    """One of each pair {x, -x} outside the elements of order at most 2"""
    table = group_table(group)
    orders = element_orders(group)
    keep = np.flatnonzero((orders > 2) & (np.arange(table.n) < table.neg_index))
    produced = Subset.from_indices(group, keep.tolist())
    expected = (group.order - torsion_size(group, 2)) // 2
    return _certify(ConstructionCertificate("two", group, 2, produced, expected))


def three_indep_construct(group: Group) -> ConstructionCertificate:
    """Union of cosets of the kernel of a projection onto Z_d"""
    kappa = group.exponent
    expected, case = three_lower_size(group)
    details: Dict[str, Any] = {"case": case}

    if kappa % 4 == 0:
        details["d"] = 4
        members = _fibers(group, 4, {1})
    elif kappa % 2 == 0:
        details["d"] = kappa
        members = _fibers(group, kappa, set(range(1, kappa // 2, 2)))
        if group.rank > 1:
            # a 2-independent set of the complement, lifted to the middle fiber
            layer = two_indep_construct(Group(group.factors[:-1])).produced
            members += [x + (kappa // 2,) for x in layer.members]
        details["lifted"] = len(members) - (kappa // 4) * (group.order // kappa)
    else:
        d, _ = best_odd_divisor(group)
        details["d"] = d
        members = _fibers(group, d, {j for j in range(d) if d < 6 * j and 3 * j < d})

    produced = Subset(group, tuple(members))
    return _certify(ConstructionCertificate("three", group, 3, produced, expected, details=details))


# ============================================================================
# B_h SEQUENCES AND CYCLIC GROUPS
# ============================================================================

def bh_sequence_greedy(h: int, N: int) -> BhSequence:
    """Greedily admit 1, 2, ..., N while every h-term multiset sum stays unique"""
    if h < 1:
        raise DomainError(f"B_h sequences need h >= 1, got {h}")
    members: List[int] = []
    layers: List[Set[int]] = [{0}] + [set() for _ in range(h)]
    for c in range(1, N + 1):
        fresh = [s + j * c for j in range(1, h + 1) for s in layers[h - j]]
        pool = set(fresh)
        if len(pool) != len(fresh) or pool & layers[h]:
            continue
        for k in range(h, 0, -1):
            layers[k] |= {s + j * c for j in range(1, k + 1) for s in layers[k - j]}
        members.append(c)
    if not is_bh_sequence(members, h):
        raise ConsistencyError(f"greedy B_{h} sequence {members} has repeated sums")
    return BhSequence(h, N, tuple(members))


def _cyclic_parameters(n: int, t: int) -> Tuple[int, int]:
    q = n // t
    return q, q // ((t + 1) // 2)


def cyclic_t_size(n: int, t: int) -> int:
    _, N = _cyclic_parameters(n, t)
    return len(bh_sequence_greedy(t // 2, N)) if N >= 1 else 0


def cyclic_t_construct(n: int, t: int) -> ConstructionCertificate:
    """{floor(n/t) - b : b in B} for a greedy B_{t//2} sequence B in [1, N]"""
    if not 3 <= t <= n - 1:
        raise DomainError(f"cyclic construction needs 3 <= t <= n - 1, got t={t}, n={n}")
    group = Group.cyclic(n)
    q, N = _cyclic_parameters(n, t)
    sequence = bh_sequence_greedy(t // 2, N) if N >= 1 else BhSequence(t // 2, N)
    produced = Subset(group, tuple((q - b,) for b in sequence.members))
    cert = ConstructionCertificate(
        "cyclic", group, t, produced, len(sequence),
        details={"N": N, "B": list(sequence.members)},
    )
    return _certify(cert)


# ============================================================================
# GREEDY CONSTRUCTIONS
# ============================================================================

def greedy_t_construct(group: Group, t: int) -> ConstructionCertificate:
    """Repeatedly add the least element none of whose multiples hx (h <= t) is
    a signed sum of weight at most t over the current set"""
    if t < 1:
        raise DomainError(f"greedy construction needs t >= 1, got {t}")
    table = group_table(group)
    n = group.order
    sums = SignedSumTable(group, t + 1)
    multiples = [table.mul_index(h) for h in range(1, t + 1)]
    history: List[int] = []
    while True:
        reachable = bool_from_bits(sums.layers[t], n)
        blocked = np.zeros(n, dtype=bool)
        for index_map in multiples:
            blocked |= reachable[index_map]
        free = np.flatnonzero(~blocked)
        if not free.size:
            break
        a = int(free[0])
        sums.push(a)
        history.append(a)

    torsion_sum = sigma(group, t)
    floor = general_floor(n, torsion_sum, t)
    induction = torsion_induction_size(n, torsion_sum, t)
    produced = Subset.from_indices(group, history)
    cert = ConstructionCertificate(
        "greedy", group, t, produced, max(floor, induction), relation=">=",
        details={
            "general_floor": floor,
            "induction_size": induction,
            "history": [list(table.elements[i]) for i in history],
        },
    )
    return _certify(cert)


def greedy_weak_construct(group: Group, t: int) -> ConstructionCertificate:
    """Repeatedly add the least element outside the distinct-term sums of
    A and -A with at most t terms"""
    if t < 1:
        raise DomainError(f"greedy construction needs t >= 1, got {t}")
    table = group_table(group)
    star = [1] + [0] * t
    seen = 0
    history: List[int] = []
    while True:
        avoid = 1
        for layer in star[1:]:
            avoid |= layer
        free = table.full & ~avoid
        if not free:
            break
        a = (free & -free).bit_length() - 1
        history.append(a)
        for b in {a, int(table.neg_index[a])}:
            if (seen >> b) & 1:
                continue
            seen |= 1 << b
            for h in range(t, 0, -1):
                star[h] |= table.translate(star[h - 1], b)

    n = group.order
    induction = weak_induction_size(n, t)
    power = weak_power_lower(n, t) if t >= 2 else 0
    produced = Subset.from_indices(group, history)
    cert = ConstructionCertificate(
        "greedy-weak", group, t, produced, max(induction, power), relation=">=", weak=True,
        details={
            "induction_size": induction,
            "power_bound": power,
            "history": [list(table.elements[i]) for i in history],
        },
    )
    return _certify(cert)


# ============================================================================
# SUM-FREE
# ============================================================================

def sum_free_construct(group: Group) -> ConstructionCertificate:
    """Odd residues (even d) or the middle third (odd d) of Z_d, pulled back"""
    d, expected = sf_projection_size(group)
    if d % 2 == 0:
        residues = set(range(1, d, 2))
    else:
        low = (d + 1) // 3
        residues = set(range(low, 2 * low))
    produced = Subset(group, tuple(_fibers(group, d, residues)))
    cert = ConstructionCertificate("sum-free", group, None, produced, expected, details={"d": d})
    return _certify(cert)


METHODS = ("two", "three", "cyclic", "greedy", "greedy-weak", "sum-free")


def construct(method: str, group: Group, t: Optional[int] = None) -> ConstructionCertificate:
    if method == "two":
        return two_indep_construct(group)
    if method == "three":
        return three_indep_construct(group)
    if method == "sum-free":
        return sum_free_construct(group)
    if t is None:
        raise DomainError(f"method {method!r} needs t")
    if method == "cyclic":
        if not group.is_cyclic:
            raise DomainError(f"cyclic construction needs a cyclic group, got {group}")
        return cyclic_t_construct(group.order, t)
    if method == "greedy":
        return greedy_t_construct(group, t)
    if method == "greedy-weak":
        return greedy_weak_construct(group, t)
    raise DomainError(f"unknown construction method {method!r}; choose from {', '.join(METHODS)}")
