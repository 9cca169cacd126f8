"""
Exact Search
Branch-and-bound computation of s(G,t), w(G,t) and sf(G) over an incremental
signed-sumset feasibility engine
"""

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Dict, List, Set, Tuple

import numpy as np

from formulas import strong_size_cap, weak_size_cap
from group_core import DomainError, Element, Group, element_orders, enumerate_elements, group_table, iter_bits
from independence import INFINITY, Subset, find_vanishing_vector, format_number

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 8


class SearchMode(Enum):
    STRONG = "strong"
    WEAK = "weak"
    SUM_FREE = "sumfree"


class SearchStatus(Enum):
    EXACT = "exact"
    BUDGET_EXHAUSTED = "budget_exhausted"


class _BudgetExhausted(Exception):
    pass


@lru_cache(maxsize=32)
def _multiples(group: Group, t: int) -> Tuple[List[int], ...]:
    """Index of j*x for j = 0..t and every x"""
    table = group_table(group)
    return tuple(table.mul_index(j).tolist() for j in range(t + 1))


# ============================================================================
# FEASIBILITY ENGINES
# ============================================================================

class SignedSumTable:
    """Signed sums D_0..D_{t-1} of a partial set, one index bitset per weight.

    Strong tables hold every sum of weight at most w; weak tables (star
    variant) only sums over distinct members with coefficients in {-1, 1}.
    """

    def __init__(self, group: Group, t: int, weak: bool = False):
        if t < 0:
            raise DomainError(f"t must be >= 0, got {t}")
        self.group = group
        self.t = t
        self.weak = weak
        self.layers: List[int] = [1] * t
        self.members: List[int] = []
        self._member_bits = 0
        self._history: List[List[int]] = []
        self._table = group_table(group)
        self._neg = self._table.neg_index.tolist()
        self._mult = None if weak else _multiples(group, t)

    def copy(self) -> "SignedSumTable":
        clone = SignedSumTable(self.group, self.t, self.weak)
        clone.layers = list(self.layers)
        clone.members = list(self.members)
        clone._member_bits = self._member_bits
        return clone

    def sums(self, w: int) -> Set[Element]:
        return {self._table.elements[i] for i in iter_bits(self.layers[w])}

    def admits(self, i: int) -> bool:
        if (self._member_bits >> i) & 1:
            return False
        if not self.t:
            return True
        if self.weak:
            return not (self.layers[-1] >> i) & 1
        t = self.t
        for j in range(1, t + 1):
            if (self.layers[t - j] >> self._mult[j][i]) & 1:
                return False
        return True

    def push(self, i: int) -> None:
        old = self.layers
        translate = self._table.translate
        self._history.append(old)
        if self.weak:
            new = list(old)
            neg = self._neg[i]
            for w in range(self.t - 1, 0, -1):
                new[w] |= translate(old[w - 1], i) | translate(old[w - 1], neg)
        else:
            new = []
            for w in range(self.t):
                acc = old[w]
                for j in range(1, w + 1):
                    step = self._mult[j][i]
                    acc |= translate(old[w - j], step) | translate(old[w - j], self._neg[step])
                new.append(acc)
        self.layers = new
        self.members.append(i)
        self._member_bits |= 1 << i

    def pop(self) -> None:
        self.layers = self._history.pop()
        self._member_bits ^= 1 << self.members.pop()


class SumFreeState:
    """A, -A, A+A and A-A of a sum-free partial set"""

    def __init__(self, group: Group):
        self.group = group
        self.members: List[int] = []
        self._bits = self._neg_bits = self._sums = self._diffs = 0
        self._history: List[Tuple[int, int, int, int]] = []
        self._table = group_table(group)
        self._neg = self._table.neg_index.tolist()
        self._double = self._table.mul_index(2).tolist()

    def admits(self, i: int) -> bool:
        if i == 0:
            return False
        if ((self._bits | self._sums | self._diffs) >> i) & 1:
            return False
        return not (self._bits >> self._double[i]) & 1

    def push(self, i: int) -> None:
        translate = self._table.translate
        self._history.append((self._bits, self._neg_bits, self._sums, self._diffs))
        self._sums |= translate(self._bits, i) | (1 << self._double[i])
        self._diffs |= translate(self._bits, self._neg[i]) | translate(self._neg_bits, i) | 1
        self._bits |= 1 << i
        self._neg_bits |= 1 << self._neg[i]
        self.members.append(i)

    def pop(self) -> None:
        self._bits, self._neg_bits, self._sums, self._diffs = self._history.pop()
        self.members.pop()


def feasibility_extend(table: SignedSumTable, subset: Subset,
                       x: Element) -> Tuple[bool, SignedSumTable]:
    """Whether subset + {x} keeps the table's level; the extended table if so"""
    if sorted(table.members) != sorted(subset.indices()):
        raise DomainError(f"table does not describe {subset}")
    i = table.group.index(x)
    if not table.admits(i):
        return False, table
    extended = table.copy()
    extended.push(i)
    return True, extended


# ============================================================================
# RESULTS
# ============================================================================

@dataclass
class SearchResult:
    group: Group
    t: Any
    mode: SearchMode
    max_size: int
    witness: Subset
    nodes: int
    status: SearchStatus

    @property
    def exact(self) -> bool:
        return self.status == SearchStatus.EXACT

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group": self.group.spec(),
            "t": None if self.t is None else format_number(self.t),
            "mode": self.mode.value,
            "max_size": self.max_size,
            "witness": self.witness.to_list(),
            "nodes": self.nodes,
            "status": self.status.value,
        }


# ============================================================================
# BRANCH AND BOUND
# ============================================================================

class BranchAndBound:
    """Depth-first search over candidates in increasing canonical index.

    Sets are explored in lexicographic order, so the first set of the final
    maximum size is the lexicographically least witness. For t >= 2 a set
    holds at most one member of each class {x, -x}, so the bound counts
    classes among the admissible candidates left rather than candidates.
    """

    def __init__(self, group: Group, t, mode: SearchMode, budget: int = DEFAULT_BUDGET,
                 negation_pruning: bool = True, shared_best=None):
        self.group = group
        self.mode = mode
        self.budget = budget
        self.negation_pruning = negation_pruning
        self.shared_best = shared_best
        self.table = group_table(group)
        n = group.order

        if mode == SearchMode.STRONG:
            self.t = min(t, n)
            self.cap = strong_size_cap(n, self.t)
            keep = element_orders(group) > self.t
            self.candidates = np.flatnonzero(keep).tolist()
        elif mode == SearchMode.WEAK:
            self.cap = weak_size_cap(n, t)
            self.t = int(min(t, self.cap))
            self.candidates = list(range(1, n))
        else:
            self.t = None
            self.cap = n // 2
            self.candidates = list(range(1, n))

        neg = self.table.neg_index.tolist()
        paired = mode != SearchMode.SUM_FREE and t >= 2
        self._class_of = [min(c, neg[c]) if paired else c for c in self.candidates]
        self._classes_from = self._suffix_classes(range(len(self.candidates)))
        self.cap = min(self.cap, self._classes_from[0])

        self.nodes = 0
        self.best_size = 0
        self.best_path: List[int] = []
        self._shared_floor = 0
        logger.debug("%s search on %s: %d candidates, size cap %d",
                     mode.value, group, len(self.candidates), self.cap)

    def _suffix_classes(self, positions) -> List[int]:
        """Distinct classes among positions[k:] for every k"""
        positions = list(positions)
        counts = [0] * (len(positions) + 1)
        seen: Set[int] = set()
        for k in range(len(positions) - 1, -1, -1):
            seen.add(self._class_of[positions[k]])
            counts[k] = len(seen)
        return counts

    def new_state(self):
        if self.mode == SearchMode.SUM_FREE:
            return SumFreeState(self.group)
        return SignedSumTable(self.group, self.t, weak=self.mode == SearchMode.WEAK)

    def root_positions(self) -> List[int]:
        neg = self.table.neg_index
        return [pos for pos, c in enumerate(self.candidates)
                if not (self.negation_pruning and neg[c] < c)]

    def witness(self) -> Subset:
        return Subset.from_indices(self.group, [self.candidates[p] for p in self.best_path])

    def _floor(self) -> int:
        return max(self.best_size, self._shared_floor)

    def _visit(self, path: List[int]) -> None:
        self.nodes += 1
        if self.nodes > self.budget:
            raise _BudgetExhausted()
        if len(path) > self.best_size:
            self.best_size = len(path)
            self.best_path = list(path)
            logger.debug("incumbent of size %d after %d nodes", self.best_size, self.nodes)
            if self.shared_best is not None:
                with self.shared_best.get_lock():
                    if self.shared_best.value < self.best_size:
                        self.shared_best.value = self.best_size
        if self.shared_best is not None and not self.nodes % 1024:
            # other branches only prune sets strictly smaller than their best
            self._shared_floor = self.shared_best.value - 1

    def _frame(self, state, start: int, depth: int) -> list:
        """[admissible positions from ``start``, class bound per offset, cursor]"""
        if depth + self._classes_from[start] <= self._floor():
            return [[], [0], 0]
        candidates = self.candidates
        options = [pos for pos in range(start, len(candidates)) if state.admits(candidates[pos])]
        return [options, self._suffix_classes(options), 0]

    def explore(self, first: int) -> None:
        """Every set whose least candidate sits at position ``first``"""
        candidates = self.candidates
        if self._classes_from[first] <= self._floor() or self.best_size >= self.cap:
            return
        state = self.new_state()
        if not state.admits(candidates[first]):
            return
        state.push(candidates[first])
        path = [first]
        self._visit(path)
        stack = [self._frame(state, first + 1, 1)]
        while stack:
            if self.best_size >= self.cap:
                return
            frame = stack[-1]
            options, bounds, k = frame
            depth = len(path)
            if k < len(options) and depth + bounds[k] > self._floor():
                child = options[k]
                frame[2] = k + 1
                state.push(candidates[child])
                path.append(child)
                self._visit(path)
                stack.append(self._frame(state, child + 1, depth + 1))
                continue
            stack.pop()
            path.pop()
            state.pop()

    def run(self) -> SearchStatus:
        try:
            for pos in self.root_positions():
                if self.best_size >= self.cap or self._classes_from[pos] <= self.best_size:
                    break
                self.explore(pos)
        except _BudgetExhausted:
            logger.warning("node budget %d exhausted on %s (best so far %d)",
                           self.budget, self.group, self.best_size)
            return SearchStatus.BUDGET_EXHAUSTED
        return SearchStatus.EXACT


_SHARED_BEST = None


def _init_worker(shared_best) -> None:
    global _SHARED_BEST
    _SHARED_BEST = shared_best


def _search_branch(factors, t, mode, budget, negation_pruning, first):
    engine = BranchAndBound(Group(tuple(factors)), t, SearchMode(mode), budget,
                            negation_pruning, shared_best=_SHARED_BEST)
    exhausted = False
    try:
        engine.explore(first)
    except _BudgetExhausted:
        exhausted = True
    return engine.best_size, engine.best_path, engine.nodes, exhausted


def _run_parallel(engine: BranchAndBound, t, threads: int) -> SearchStatus:
    shared_best = multiprocessing.Value("q", 0)
    roots = engine.root_positions()
    with ProcessPoolExecutor(max_workers=threads, initializer=_init_worker,
                             initargs=(shared_best,)) as pool:
        futures = [
            pool.submit(_search_branch, engine.group.factors, t, engine.mode.value,
                        engine.budget, engine.negation_pruning, pos)
            for pos in roots
        ]
        outcomes = [future.result() for future in futures]

    status = SearchStatus.EXACT
    for size, path, nodes, exhausted in outcomes:
        engine.nodes += nodes
        if exhausted:
            status = SearchStatus.BUDGET_EXHAUSTED
        # roots are in canonical order, so ties keep the earliest branch
        if size > engine.best_size:
            engine.best_size = size
            engine.best_path = path
    if status == SearchStatus.BUDGET_EXHAUSTED:
        logger.warning("node budget %d exhausted in at least one branch on %s",
                       engine.budget, engine.group)
    return status


def search(group: Group, t, mode: SearchMode, budget: int = DEFAULT_BUDGET,
           threads: int = 1, negation_pruning: bool = True) -> SearchResult:
    if budget <= 0:
        raise DomainError(f"budget must be positive, got {budget}")
    if mode != SearchMode.SUM_FREE:
        if t is None or t < 0:
            raise DomainError(f"t must be >= 0, got {t}")
        if t != INFINITY and int(t) != t:
            raise DomainError(f"t must be an integer or inf, got {t}")
        if mode == SearchMode.STRONG and t == INFINITY:
            t = group.order
        if t != INFINITY:
            t = int(t)
        if t <= 1:
            # every set is 0-independent; 1-independence only excludes 0
            start = 0 if t == 0 else 1
            witness = Subset.from_indices(group, range(start, group.order))
            return SearchResult(group, t, mode, len(witness), witness, 0, SearchStatus.EXACT)
    else:
        t = None

    logger.info("searching %s on %s, t=%s", mode.value, group, "-" if t is None else format_number(t))
    engine = BranchAndBound(group, t, mode, budget, negation_pruning)
    if threads > 1 and len(engine.root_positions()) > 1:
        status = _run_parallel(engine, t, threads)
    else:
        status = engine.run()
    result = SearchResult(group, t, mode, engine.best_size, engine.witness(),
                          engine.nodes, status)
    logger.info("%s on %s: size %d, %d nodes, %s", mode.value, group,
                result.max_size, result.nodes, status.value)
    return result


def max_independent(group: Group, t: int, budget: int = DEFAULT_BUDGET,
                    threads: int = 1, negation_pruning: bool = True) -> SearchResult:
    """s(G, t) with its lexicographically least witness"""
    return search(group, t, SearchMode.STRONG, budget, threads, negation_pruning)


def max_weakly_independent(group: Group, t, budget: int = DEFAULT_BUDGET,
                           threads: int = 1, negation_pruning: bool = True) -> SearchResult:
    """w(G, t); t may be INFINITY"""
    return search(group, t, SearchMode.WEAK, budget, threads, negation_pruning)


def max_sum_free(group: Group, budget: int = DEFAULT_BUDGET, threads: int = 1,
                 negation_pruning: bool = True) -> SearchResult:
    return search(group, None, SearchMode.SUM_FREE, budget, threads, negation_pruning)


# ============================================================================
# NAIVE ORACLE
# ============================================================================

def _naive_accepts(candidate: Subset, t, mode: SearchMode) -> bool:
    if mode == SearchMode.SUM_FREE:
        members = set(candidate.members)
        group = candidate.group
        return all(group.add(a, b) not in members for a in members for b in members)
    return find_vanishing_vector(candidate, t, weak=mode == SearchMode.WEAK) is None


def naive_max(group: Group, t=None, mode: SearchMode = SearchMode.STRONG) -> Tuple[int, Subset]:
    """Largest valid subset by testing subsets level by level.

    Valid sets are closed under taking subsets, so every valid set of size
    k + 1 extends a valid set of size k by a larger element. Levels are built
    in lexicographic order and the first set of the last level is returned.
    """
    elements = enumerate_elements(group)
    level: List[Tuple[int, ...]] = [()]
    best: Tuple[int, ...] = ()
    while level:
        grown = []
        for combo in level:
            for i in range(combo[-1] + 1 if combo else 0, len(elements)):
                extended = combo + (i,)
                if _naive_accepts(Subset(group, tuple(elements[j] for j in extended)), t, mode):
                    grown.append(extended)
        if grown:
            best = grown[0]
        level = grown
    return len(best), Subset(group, tuple(elements[j] for j in best))
