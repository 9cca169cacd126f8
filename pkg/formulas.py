"""
Closed Forms and Bounds
Exact values and integer upper/lower bounds for s(G,t), w(G,t) and sf(G)
"""

import logging
import re
from dataclasses import dataclass, field
from math import comb, factorial, inf
from typing import Any, Dict, List, Optional, Tuple

from sympy import divisors, primefactors

from group_core import DomainError, Group, ord_set, sigma, torsion_size

logger = logging.getLogger(__name__)


class BoundsError(RuntimeError):
    """Raised when a lower bound exceeds an upper bound"""


# Each provenance tag names the result its bound comes from
BOUND_STATEMENTS: Dict[str, str] = {
    "trivial": "a set has at most n members",
    "closed-form": "exact value from a closed form for this group and t",
    "sumset-count": "signed sums of at most t//2 members are pairwise distinct, so 2*C(m + t//2, t//2) - 1 <= n",
    "sumset-power": "power form of the sumset count: 2*m^k < k!*n with k = t//2",
    "negation-pairs": "members have order above t and include at most one of each pair {x, -x}",
    "exponent-at-most-t": "every element has order at most t, so only the empty set is t-independent",
    "three-kneser": "t = 3 with no divisor of n congruent to 2 mod 3: s <= n/6",
    "three-kneser-p": "t = 3: s <= (p + 1)*n/(6p) for the smallest divisor p of n congruent to 2 mod 3",
    "three-kneser-mod2": "t = 3 with exponent 2 mod 4: s <= (n - |Tor(G,2)|)/4",
    "three-cosets-mod4": "t = 3 with 4 dividing the exponent: a coset of index 4 gives n/4",
    "three-cosets-mod2": "t = 3 with exponent 2 mod 4: odd residue fibers plus a lifted 2-independent layer",
    "three-cosets-odd-d": "t = 3: middle-third fibers over Z_d for an odd divisor d of the exponent",
    "three-cosets-none": "t = 3: no coset construction applies",
    "monotone-in-t": "independence numbers do not increase with t",
    "doubling": "t >= 4: x -> 2x sends the set injectively to a 2-independent set of 2G",
    "general-torsion": "greedy avoidance over torsion: floor((n/(2*sigma(G,t)))^(1/t))",
    "torsion-induction": "greedy induction while n > sigma(G,t)*C(2m - 2 + t, t)",
    "bh-construction": "cyclic groups: a translated greedy B_{t//2} sequence",
    "invariant-factors": "the generators of the invariant factors are weakly independent for every t",
    "exponent-log": "weakly independent sets of size log n / log kappa exist",
    "star-sumset-count": "distinct-member sums of at most t//2 members are pairwise distinct",
    "nonzero": "a weakly independent set avoids 0",
    "weak-power": "greedy weak avoidance: smallest m with (2m + t)^t > t!*n",
    "weak-induction": "greedy weak induction while n > 1 + sum_h C(2m - 2, h)",
    "weak-power-cap": "power form of the distinct-sum count: (2m - t)^k < 2^k*k!*n with k = t//2",
    "two-sevenths": "every abelian group has a sum-free set of at least 2n/7 elements",
    "projection-d": "a sum-free set of Z_d pulled back along a projection G -> Z_d",
    "sumset-halving": "a sum-free set A is disjoint from A + a, so |A| <= n/2",
}


def bound_statement(tag: str) -> str:
    """The statement behind a provenance tag; parametrised tags end in -p<int> or -d<int>"""
    family = re.sub(r"(-[pd])\d+$", r"\1", tag)
    if family not in BOUND_STATEMENTS:
        raise DomainError(f"unknown provenance tag {tag!r}")
    return BOUND_STATEMENTS[family]


@dataclass
class BoundsReport:
    """Integer bounds with the provenance of every bound evaluated"""
    lower: int
    upper: int
    exact: Optional[int] = None
    provenance: List[Tuple[str, int, str]] = field(default_factory=list)

    @property
    def is_open(self) -> bool:
        return self.exact is None and self.lower < self.upper

    def contains(self, value: int) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "exact": self.exact,
            "provenance": [{"kind": kind, "value": value, "tag": tag, "statement": bound_statement(tag)}
                           for kind, value, tag in self.provenance],
        }


def _settle(entries: List[Tuple[str, int, str]], exact: Optional[int], what: str) -> BoundsReport:
    lowers = [v for kind, v, _ in entries if kind == "lower"]
    uppers = [v for kind, v, _ in entries if kind == "upper"]
    lower = max(lowers) if lowers else 0
    upper = min(uppers)
    if lower > upper:
        raise BoundsError(f"{what}: lower bound {lower} exceeds upper bound {upper} ({entries})")
    if exact is not None:
        if not lower <= exact <= upper:
            raise BoundsError(f"{what}: exact value {exact} outside [{lower}, {upper}]")
        entries.append(("exact", exact, "closed-form"))
        lower = upper = exact
    return BoundsReport(lower, upper, exact, entries)


# ============================================================================
# INTEGER FORMS
# ============================================================================

def largest(predicate, start: int = 0) -> int:
    """Largest m >= start with predicate(m), given predicate(start) and monotonicity"""
    m = start
    while predicate(m + 1):
        m += 1
    return m


def smallest(predicate, start: int = 0) -> int:
    m = start
    while not predicate(m):
        m += 1
    return m


def strong_size_cap(n: int, t: int) -> int:
    """Largest m with n >= 2*C(m + t//2, t//2) - 1 (sumset counting)"""
    k = int(min(t, n)) // 2
    if k < 1:
        return n
    return largest(lambda m: 2 * comb(m + k, k) - 1 <= n)


def weak_size_cap(n: int, t) -> int:
    """Largest m with n >= 1 + sum_{h=1..t//2} C(m, h)"""
    if t < 2:
        return n
    k = inf if t == inf else int(t) // 2
    return largest(lambda m: 1 + sum(comb(m, h) for h in range(1, int(min(k, m)) + 1)) <= n)


def general_floor(n: int, torsion_sum: int, t: int) -> int:
    """floor((n / (2*sigma))^(1/t)) without floating roots"""
    return largest(lambda m: 2 * torsion_sum * m ** t <= n)


def torsion_induction_size(n: int, torsion_sum: int, t: int) -> int:
    """Largest m with n > sigma * C(2m - 2 + t, t); 0 when even m = 1 fails"""
    if not n > torsion_sum:
        return 0
    return largest(lambda m: n > torsion_sum * comb(2 * m - 2 + t, t), start=1)


def weak_induction_size(n: int, t: int) -> int:
    """Largest m with n > 1 + sum_{h=1..t} C(2m - 2, h)"""
    if n < 2:
        return 0
    return largest(lambda m: n > 1 + sum(comb(2 * m - 2, h) for h in range(1, t + 1)), start=1)


def weak_power_lower(n: int, t: int) -> int:
    """Smallest m with (2m + t)^t > t! * n"""
    return smallest(lambda m: (2 * m + t) ** t > factorial(t) * n)


def smallest_divisor(n: int, residue: int, modulus: int) -> Optional[int]:
    for d in divisors(n)[1:]:
        if d % modulus == residue:
            return d
    return None


def best_odd_divisor(group: Group) -> Tuple[int, int]:
    """Odd d | exponent maximizing floor((d+1)/6) * n/d; ties keep the smallest d"""
    n, kappa = group.order, group.exponent
    best_d, best_size = 1, 0
    for d in divisors(kappa):
        if d % 2 and d > 1:
            size = (d + 1) // 6 * (n // d)
            if size > best_size:
                best_d, best_size = d, size
    return best_d, best_size


def three_lower_size(group: Group) -> Tuple[int, str]:
    """Size of the coset construction for t = 3 and which case produced it"""
    n, kappa = group.order, group.exponent
    candidates = []
    if kappa % 4 == 0:
        candidates.append((n // 4, "three-cosets-mod4"))
    elif kappa % 2 == 0:
        candidates.append(((n - torsion_size(group, 2)) // 4, "three-cosets-mod2"))
    d, size = best_odd_divisor(group)
    if d > 1:
        candidates.append((size, f"three-cosets-odd-d{d}"))
    if not candidates:
        return 0, "three-cosets-none"
    return max(candidates, key=lambda item: item[0])


# ============================================================================
# s(G, t)
# ============================================================================

def _smallest_five_mod_six(n: int) -> Optional[int]:
    fives = [p for p in primefactors(n) if p % 6 == 5]
    return fives[0] if fives else None


def s_Zn3(n: int) -> int:
    """s(Z_n, 3)"""
    if n < 2:
        raise DomainError(f"s_Zn3 needs n >= 2, got {n}")
    if n % 2 == 0:
        return n // 4
    p = _smallest_five_mod_six(n)
    if p is not None:
        return (n // p) * (p + 1) // 6
    return n // 6


def s_exact(group: Group, t: int) -> Optional[int]:
    """s(G, t) where a closed form pins it down, else None"""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    n, kappa = group.order, group.exponent
    if t == 0:
        return n
    if t == 1:
        return n - 1
    if t >= n or kappa <= t:
        return 0
    if t == 2:
        return (n - torsion_size(group, 2)) // 2
    if t == 3:
        if kappa % 4 == 0:
            return n // 4
        if kappa % 2 == 0:
            return (n - torsion_size(group, 2)) // 4
        p = _smallest_five_mod_six(n)
        if p is not None:
            return (n // p) * (p + 1) // 6
        # odd exponent without such primes: exact only when the interval closes
        lower, upper = kappa // 6 * (n // kappa), n // 6
        if lower == upper:
            return lower
    return None


def _s_entries(group: Group, t: int) -> List[Tuple[str, int, str]]:
    n, kappa = group.order, group.exponent
    k = t // 2
    entries: List[Tuple[str, int, str]] = [
        ("upper", strong_size_cap(n, t), "sumset-count"),
        ("upper", largest(lambda m: 2 * m ** k < factorial(k) * n), "sumset-power"),
        ("upper", (n - len(ord_set(group, t))) // 2, "negation-pairs"),
    ]
    if kappa <= t:
        entries.append(("upper", 0, "exponent-at-most-t"))

    if t == 3:
        p = smallest_divisor(n, 2, 3)
        if p is None:
            entries.append(("upper", n // 6, "three-kneser"))
        else:
            entries.append(("upper", (p + 1) * n // (6 * p), f"three-kneser-p{p}"))
        if kappa % 4 == 2:
            entries.append(("upper", (n - torsion_size(group, 2)) // 4, "three-kneser-mod2"))
        size, tag = three_lower_size(group)
        entries.append(("lower", size, tag))
    if t >= 4:
        entries.append(("upper", s_bounds(group, 3).upper, "monotone-in-t"))
        entries.append(("upper", (n // torsion_size(group, 2) - 1) // 2, "doubling"))

    torsion_sum = sigma(group, t)
    entries.append(("lower", general_floor(n, torsion_sum, t), "general-torsion"))
    entries.append(("lower", torsion_induction_size(n, torsion_sum, t), "torsion-induction"))
    if group.is_cyclic and 3 <= t <= n - 1:
        from constructions import cyclic_t_size
        entries.append(("lower", cyclic_t_size(n, t), "bh-construction"))
    return entries


def s_bounds(group: Group, t: int) -> BoundsReport:
    """Bounds on s(G, t); the interval collapses where an exact value is known"""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    exact = s_exact(group, t)
    if t < 2:
        return _settle([("upper", group.order, "trivial")], exact, f"s({group},{t})")
    return _settle(_s_entries(group, t), exact, f"s({group},{t})")


# ============================================================================
# w(G, t)
# ============================================================================

def w_exact_small_t(group: Group, t) -> Optional[int]:
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    n = group.order
    if t == 0:
        return n
    if t == 1:
        return n - 1
    if t == 2:
        return (n + torsion_size(group, 2) - 2) // 2
    return None


def w_bounds(group: Group, t) -> BoundsReport:
    """Bounds on w(G, t); t may be INFINITY"""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    n, kappa = group.order, group.exponent
    exact = w_exact_small_t(group, t)
    if t < 2:
        return _settle([("upper", n, "trivial")], exact, f"w({group},{t})")

    entries: List[Tuple[str, int, str]] = [
        ("lower", group.rank, "invariant-factors"),
        ("lower", smallest(lambda m: kappa ** m >= n), "exponent-log"),
        ("upper", weak_size_cap(n, t), "star-sumset-count"),
        ("upper", n - 1, "nonzero"),
        ("upper", w_exact_small_t(group, 2), "monotone-in-t"),
    ]
    if t != inf:
        t = int(t)
        k = t // 2
        entries.append(("lower", weak_power_lower(n, t), "weak-power"))
        entries.append(("lower", weak_induction_size(n, t), "weak-induction"))
        entries.append(("upper", largest(lambda m: 2 * m - t < 0 or
                                         (2 * m - t) ** k < 2 ** k * factorial(k) * n),
                        "weak-power-cap"))
    return _settle(entries, exact, f"w({group},{t})")


# ============================================================================
# sf(G)
# ============================================================================

def sf_projection_size(group: Group) -> Tuple[int, int]:
    """Best divisor d of the exponent for a sum-free set pulled back from Z_d"""
    n = group.order
    best_d, best_size = 0, 0
    for d in divisors(group.exponent)[1:]:
        size = n // 2 if d % 2 == 0 else (d + 1) // 3 * (n // d)
        if size > best_size:
            best_d, best_size = d, size
    return best_d, best_size


def sf_bounds(group: Group) -> BoundsReport:
    n = group.order
    if n < 2:
        raise DomainError(f"sf_bounds needs n >= 2, got {n}")
    d, size = sf_projection_size(group)
    entries = [
        ("lower", -(-2 * n // 7), "two-sevenths"),
        ("lower", size, f"projection-d{d}"),
        ("upper", n // 2, "sumset-halving"),
    ]
    return _settle(entries, None, f"sf({group})")
