"""
Finite Abelian Group Core
Invariant-factor groups, mixed-radix elements, torsion subgroups, root sets
and the index/bitset table every search and construction runs on
"""

import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import gcd, lcm, prod
from typing import Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple

import numpy as np
from sympy import factorint
from sympy.utilities.iterables import partitions

logger = logging.getLogger(__name__)

DEFAULT_MAX_ORDER = 10 ** 6

# An element is its coordinate tuple over the canonical factors
Element = Tuple[int, ...]


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation"""


# ============================================================================
# GROUPS
# ============================================================================

def canonical_factors(factors: Sequence[int]) -> Tuple[int, ...]:
    """Merge cyclic orders into invariant factors d_1 | d_2 | ... | d_r"""
    chain = sorted(int(d) for d in factors)
    for i in range(len(chain)):
        for j in range(i + 1, len(chain)):
            g = gcd(chain[i], chain[j])
            chain[i], chain[j] = g, chain[i] * chain[j] // g
    return tuple(d for d in chain if d > 1)


@dataclass(frozen=True)
class Group:
    """Finite abelian group Z_{d_1} x ... x Z_{d_r} in invariant-factor form"""
    factors: Tuple[int, ...]

    def __post_init__(self):
        if not self.factors:
            raise DomainError("a group needs at least one cyclic factor")
        if any(d < 2 for d in self.factors):
            raise DomainError(f"cyclic factors must be >= 2, got {list(self.factors)}")
        if any(b % a for a, b in zip(self.factors, self.factors[1:])):
            raise DomainError(
                f"factors {list(self.factors)} are not invariant factors; use Group.from_factors"
            )

    @classmethod
    def from_factors(cls, factors: Sequence[int],
                     max_order: Optional[int] = DEFAULT_MAX_ORDER) -> "Group":
        """Build the canonical group for an arbitrary product of cyclic orders"""
        factors = [int(d) for d in factors]
        if not factors:
            raise DomainError("empty group spec")
        for d in factors:
            if d < 2:
                raise DomainError(f"cyclic factor {d} is smaller than 2")
        order = prod(factors)
        if max_order is not None and order > max_order:
            raise DomainError(f"group order {order} exceeds the configured limit {max_order}")
        return cls(canonical_factors(factors))

    @classmethod
    def cyclic(cls, n: int) -> "Group":
        return cls.from_factors([n], max_order=None)

    @property
    def order(self) -> int:
        return prod(self.factors)

    @property
    def exponent(self) -> int:
        return self.factors[-1]

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def is_cyclic(self) -> bool:
        return self.rank == 1

    @property
    def strides(self) -> Tuple[int, ...]:
        # last coordinate varies fastest, so index order is lexicographic
        out = []
        step = 1
        for d in reversed(self.factors):
            out.append(step)
            step *= d
        return tuple(reversed(out))

    def spec(self) -> str:
        return "x".join(str(d) for d in self.factors)

    def __str__(self) -> str:
        return "x".join(f"Z{d}" for d in self.factors)

    # ------------------------------------------------------------------
    # Elements
    # ------------------------------------------------------------------

    def element(self, coords: Sequence[int]) -> Element:
        """Reduce a coordinate sequence into an element of this group"""
        if isinstance(coords, int):
            coords = (coords,)
        if len(coords) != self.rank:
            raise DomainError(
                f"element {tuple(coords)} has {len(coords)} coordinates, {self} needs {self.rank}"
            )
        return tuple(int(c) % d for c, d in zip(coords, self.factors))

    def zero(self) -> Element:
        return (0,) * self.rank

    def index(self, x: Element) -> int:
        return sum(c * s for c, s in zip(self.element(x), self.strides))

    def element_at(self, i: int) -> Element:
        if not 0 <= i < self.order:
            raise DomainError(f"index {i} outside {self}")
        coords = []
        for d in reversed(self.factors):
            i, c = divmod(i, d)
            coords.append(c)
        return tuple(reversed(coords))

    def add(self, x: Element, y: Element) -> Element:
        x, y = self.element(x), self.element(y)
        return tuple((a + b) % d for a, b, d in zip(x, y, self.factors))

    def neg(self, x: Element) -> Element:
        return tuple((-a) % d for a, d in zip(self.element(x), self.factors))

    def scalar_mul(self, k: int, x: Element) -> Element:
        return tuple((k * a) % d for a, d in zip(self.element(x), self.factors))

    def order_of(self, x: Element) -> int:
        return lcm(*(d // gcd(a, d) for a, d in zip(self.element(x), self.factors)))


# ============================================================================
# PARSING AND FORMATTING
# ============================================================================

_FACTOR = re.compile(r"^(?:z_?)?(\d+)$", re.IGNORECASE)


def parse_group(spec: str, max_order: Optional[int] = DEFAULT_MAX_ORDER) -> Group:
    """Parse "8x2x3", "Z8xZ2" or "7" into a canonical group"""
    if spec is None or not str(spec).strip():
        raise DomainError("empty group spec")
    factors = []
    for part in re.split(r"[xX*]", str(spec).strip()):
        match = _FACTOR.match(part.strip())
        if not match:
            raise DomainError(f"malformed factor {part!r} in group spec {spec!r}")
        factors.append(int(match.group(1)))
    return Group.from_factors(factors, max_order)


def parse_element(group: Group, text: str, strict: bool = False) -> Element:
    """Parse "3" or "(0,1)"; strict parsing rejects coordinates outside [0, d)
    instead of reducing them"""
    try:
        coords = [int(v) for v in text.replace(" ", "").strip("()").split(",")]
    except ValueError:
        raise DomainError(f"malformed element {text!r} for {group}") from None
    if strict and len(coords) == group.rank:
        for c, d in zip(coords, group.factors):
            if not 0 <= c < d:
                raise DomainError(f"coordinate {c} of {text.strip()!r} is outside [0, {d}) in {group}")
    return group.element(coords)


def parse_elements(group: Group, text: str, strict: bool = False) -> List[Element]:
    """Parse "1,2,4" (rank 1), "0,1;1,1" or "(0,1),(1,1)" into elements"""
    text = (text or "").strip()
    if not text:
        return []
    if "(" in text:
        chunks = re.findall(r"\(([^)]*)\)", text)
    elif ";" in text:
        chunks = text.split(";")
    elif group.rank == 1:
        chunks = text.split(",")
    else:
        chunks = [text]
    return [parse_element(group, chunk, strict) for chunk in chunks if chunk.strip()]


def format_element(x: Element) -> str:
    return ",".join(str(c) for c in x)


def format_elements(elements: Sequence[Element]) -> str:
    return ";".join(format_element(x) for x in elements)


# ============================================================================
# ELEMENT OPERATIONS
# ============================================================================

def enumerate_elements(group: Group) -> List[Element]:
    """All elements in canonical (mixed-radix lexicographic) order"""
    return [tuple(c) for c in product(*(range(d) for d in group.factors))]


def element_arith(group: Group, op: str, *args) -> Element:
    if op == "add":
        return group.add(*args)
    if op == "neg":
        return group.neg(*args)
    if op == "scalar_mul":
        return group.scalar_mul(*args)
    raise DomainError(f"unknown element operation {op!r}")


def order_and_exponent(group: Group, x: Element) -> Tuple[int, int]:
    return group.order_of(x), group.exponent


def element_orders(group: Group) -> np.ndarray:
    """Order of every element, indexed canonically"""
    coords = group_table(group).coords
    factors = np.array(group.factors, dtype=np.int64)
    per_axis = factors // np.gcd(coords, factors)
    return np.lcm.reduce(per_axis, axis=1)


@dataclass(frozen=True)
class TorsionData:
    h: int
    members: FrozenSet[Element]

    @property
    def size(self) -> int:
        return len(self.members)


def torsion_set(group: Group, h: int) -> TorsionData:
    """Tor(G, h) = {x : hx = 0}, solved per cyclic factor"""
    if h < 1:
        raise DomainError(f"torsion needs h >= 1, got {h}")
    axes = [range(0, d, d // gcd(h, d)) for d in group.factors]
    return TorsionData(h, frozenset(tuple(c) for c in product(*axes)))


def torsion_size(group: Group, h: int) -> int:
    return prod(gcd(h, d) for d in group.factors)


def sigma(group: Group, t: int) -> int:
    """sigma(G, t): torsion sizes summed with multiplicity"""
    return sum(torsion_size(group, h) for h in range(1, t + 1))


def ord_set(group: Group, t: int) -> Set[Element]:
    """Ord(G, t): elements of order at most t"""
    if t < 1:
        return set()
    table = group_table(group)
    return {table.elements[i] for i in np.flatnonzero(element_orders(group) <= t)}


def ord_set_and_sigma(group: Group, t: int) -> Tuple[Set[Element], int]:
    if t < 1:
        return set(), 0
    return ord_set(group, t), sigma(group, t)


def roots(group: Group, h: int, g: Element) -> Set[Element]:
    """Root_h(g) = {x : hx = g}; empty when some factor is unsolvable"""
    if h < 1:
        raise DomainError(f"roots need h >= 1, got {h}")
    g = group.element(g)
    axes = []
    for gi, d in zip(g, group.factors):
        common = gcd(h, d)
        if gi % common:
            return set()
        modulus = d // common
        base = 0 if modulus == 1 else (gi // common) * pow(h // common, -1, modulus) % modulus
        axes.append([base + k * modulus for k in range(common)])
    return {tuple(c) for c in product(*axes)}


# ============================================================================
# GROUP ENUMERATION
# ============================================================================

def enumerate_groups(n: int) -> List[Group]:
    """Every abelian group of order n exactly once"""
    if n < 2:
        return []
    per_prime = []
    for p, e in sorted(factorint(n).items()):
        options = []
        for part in partitions(e):
            powers = []
            for size, mult in sorted(part.items()):
                powers.extend([p ** size] * mult)
            options.append(powers)
        per_prime.append(options)
    groups = {Group.from_factors([d for block in combo for d in block], max_order=None)
              for combo in product(*per_prime)}
    return sorted(groups, key=lambda grp: grp.factors)


def groups_up_to(cap: int) -> Iterator[Group]:
    for n in range(2, cap + 1):
        yield from enumerate_groups(n)


# ============================================================================
# INDEX TABLE AND BITSETS
# ============================================================================

def bits_from_bool(mask: np.ndarray) -> int:
    packed = np.packbits(np.asarray(mask, dtype=bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def bool_from_bits(bits: int, n: int) -> np.ndarray:
    raw = np.frombuffer(bits.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def iter_bits(bits: int) -> Iterator[int]:
    while bits:
        low = bits & -bits
        yield low.bit_length() - 1
        bits ^= low


class GroupTable:
    """Canonical indexing of a group plus translation of index bitsets"""

    def __init__(self, group: Group):
        self.group = group
        self.n = group.order
        self.full = (1 << self.n) - 1
        self.factors = np.array(group.factors, dtype=np.int64)
        self.strides = np.array(group.strides, dtype=np.int64)
        self.coords = np.indices(group.factors).reshape(group.rank, -1).T.astype(np.int64)
        self.elements: List[Element] = [tuple(int(c) for c in row) for row in self.coords]
        self.neg_index = self.mul_index(-1)
        self._masks: Dict[Tuple[int, int], Tuple[int, int]] = {}

    def mul_index(self, h: int) -> np.ndarray:
        """Index of h*x for every x"""
        return ((h * self.coords) % self.factors) @ self.strides

    def scaled_index(self, k: int, i: int) -> int:
        return int(((k * self.coords[i]) % self.factors) @ self.strides)

    def bits_of(self, indices) -> int:
        bits = 0
        for i in indices:
            bits |= 1 << int(i)
        return bits

    def _axis_masks(self, axis: int, k: int) -> Tuple[int, int]:
        key = (axis, k)
        if key not in self._masks:
            d = int(self.factors[axis])
            column = self.coords[:, axis]
            self._masks[key] = (bits_from_bool(column < d - k), bits_from_bool(column >= d - k))
        return self._masks[key]

    def translate(self, bits: int, i: int) -> int:
        """The bitset of {y + x : y in bits} for the element x at index i"""
        if not bits:
            return 0
        n = self.n
        for axis, k in enumerate(self.coords[i]):
            k = int(k)
            if not k:
                continue
            step = int(self.strides[axis])
            d = int(self.factors[axis])
            if axis == 0:
                shift = k * step
                bits = ((bits << shift) | (bits >> (n - shift))) & self.full
            else:
                keep, wrap = self._axis_masks(axis, k)
                bits = ((bits & keep) << (k * step)) | ((bits & wrap) >> ((d - k) * step))
        return bits

    def sumset(self, left: int, right: int) -> int:
        out = 0
        for i in iter_bits(right):
            out |= self.translate(left, i)
        return out


@lru_cache(maxsize=64)
def group_table(group: Group) -> GroupTable:
    logger.debug("building index table for %s (n=%d)", group, group.order)
    return GroupTable(group)
