"""
Command Line Interface
Single queries, batch tables and formula-versus-search verification runs
"""

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

from config import ConfigError, Settings, load_settings
from constructions import METHODS, construct
from formulas import BoundsError, BoundsReport, s_bounds, s_exact, s_Zn3, sf_bounds, w_bounds, w_exact_small_t
from group_core import DomainError, Group, format_elements, groups_up_to, parse_elements, parse_group
from independence import (
    INFINITY,
    ConsistencyError,
    Subset,
    format_number,
    independence_number,
    is_t_independent,
    is_weakly_t_independent,
    weak_independence_number,
)
from search import SearchMode, SearchResult, SearchStatus, search

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2
EXIT_USAGE = 3

TABLE_FIELDS = ["n", "group", "t", "mode", "value", "witness", "nodes", "status",
                "lower", "upper", "sandwich"]

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class UsageError(Exception):
    """Raised for malformed command-line arguments"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ============================================================================
# ARGUMENT PARSING
# ============================================================================

def parse_t(text: str):
    """Integer t >= 0, or "inf" """
    if str(text).strip().lower() in ("inf", "infinity"):
        return INFINITY
    try:
        t = int(text)
    except ValueError:
        raise UsageError(f"t must be a non-negative integer or 'inf', got {text!r}") from None
    if t < 0:
        raise UsageError(f"t must be >= 0, got {t}")
    return t


def parse_t_list(text: str) -> list:
    values = [parse_t(part) for part in str(text).split(",") if part.strip()]
    if not values:
        raise UsageError("no t values given")
    return values


def parse_range(text: str) -> Tuple[int, int]:
    """'2..20' or '2-20'"""
    sep = ".." if ".." in text else "-"
    try:
        low, high = (int(v) for v in text.split(sep))
    except ValueError:
        raise UsageError(f"malformed range {text!r}; expected LOW..HIGH") from None
    if low < 2 or high < low:
        raise UsageError(f"range {text!r} must satisfy 2 <= LOW <= HIGH")
    return low, high


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="Settings file (.json, .yaml or .yml)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="Logging level for stderr")
    common.add_argument("-v", "--verbose", action="count", default=0,
                        help="More logging (-v info, -vv debug)")
    common.add_argument("--budget", type=int, help="Search node budget per (group, t) cell")
    common.add_argument("--threads", type=int, help="Worker processes")
    common.add_argument("--no-negation-pruning", action="store_true",
                        help="Search every root element, not one per {x, -x} pair")
    common.add_argument("--json", action="store_true", help="Emit JSON instead of text")

    parser = _Parser(
        prog="tindep",
        description="t-independent, weakly t-independent and sum-free sets in finite abelian groups",
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    def group_arg(p):
        p.add_argument("--group", "-g", required=True, help='Group spec, e.g. "30" or "2x4x3"')

    check_parser = subparsers.add_parser("check", parents=[common], help="Decide (weak) t-independence")
    group_arg(check_parser)
    check_parser.add_argument("--set", "-s", required=True, dest="elements", help='Elements, e.g. "1,2,4"')
    check_parser.add_argument("--t", "-t", required=True, help="t (or inf with --weak)")
    check_parser.add_argument("--weak", action="store_true", help="Coefficients in {-1, 0, 1} only")

    for name, text in (("ind", "Independence number ind(A)"),
                       ("wind", "Weak independence number wind(A)")):
        p = subparsers.add_parser(name, parents=[common], help=text)
        group_arg(p)
        p.add_argument("--set", "-s", required=True, dest="elements", help='Elements, e.g. "1,2,4"')

    for name, text in (("smax", "s(G, t) by exact search"),
                       ("wmax", "w(G, t) by exact search (t may be inf)")):
        p = subparsers.add_parser(name, parents=[common], help=text)
        group_arg(p)
        p.add_argument("--t", "-t", required=True, help="t")
        p.add_argument("--witness", action="store_true", help="Also print the witness set")

    sf_parser = subparsers.add_parser("sfmax", parents=[common], help="sf(G) by exact search")
    group_arg(sf_parser)
    sf_parser.add_argument("--witness", action="store_true", help="Also print the witness set")

    construct_parser = subparsers.add_parser("construct", parents=[common],
                                             help="Run and certify an explicit construction")
    construct_parser.add_argument("method", choices=METHODS, help="Construction method")
    group_arg(construct_parser)
    construct_parser.add_argument("--t", "-t", help="t (cyclic, greedy, greedy-weak)")

    bounds_parser = subparsers.add_parser("bounds", parents=[common], help="Bounds with provenance")
    bounds_parser.add_argument("quantity", choices=["s", "w", "sf"], help="Which maximum")
    group_arg(bounds_parser)
    bounds_parser.add_argument("--t", "-t", help="t (s and w)")

    table_parser = subparsers.add_parser("table", parents=[common], help="Batch table of maxima")
    family = table_parser.add_mutually_exclusive_group(required=True)
    family.add_argument("--cyclic", help="Cyclic groups Z_n for n in LOW..HIGH")
    family.add_argument("--groups", help='Comma-separated group specs, e.g. "30,2x4,3x3"')
    table_parser.add_argument("--t", "-t", dest="t_values", help="Comma-separated t values")
    table_parser.add_argument("--mode", choices=[m.value for m in SearchMode], default="strong",
                              help="Which maximum to tabulate")
    table_parser.add_argument("--format", choices=["csv", "json"], help="Output format")
    table_parser.add_argument("--monotone-report", action="store_true",
                              help="Report decreases along even and odd n")

    verify_parser = subparsers.add_parser("verify", parents=[common],
                                          help="Formulas, constructions and bounds against search")
    verify_parser.add_argument("--cap", type=int, default=24, help="Largest group order")
    verify_parser.add_argument("--t-cap", type=int, default=4, help="Largest t")

    return parser


def resolve_settings(args) -> Settings:
    settings = load_settings(args.config)
    overrides: Dict[str, Any] = {}
    if args.budget is not None:
        overrides["budget"] = args.budget
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.no_negation_pruning:
        overrides["negation_pruning"] = False
    if args.log_level:
        overrides["log_level"] = args.log_level
    elif args.verbose:
        overrides["log_level"] = "DEBUG" if args.verbose > 1 else "INFO"
    if getattr(args, "format", None):
        overrides["table_format"] = args.format
    return replace(settings, **overrides).validate()


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper()), format=LOG_FORMAT,
                        stream=sys.stderr, force=True)


# ============================================================================
# SINGLE QUERIES
# ============================================================================

def _group(args, settings: Settings) -> Group:
    return parse_group(args.group, settings.max_group_order)


def _subset(args, settings: Settings) -> Subset:
    group = _group(args, settings)
    return Subset(group, tuple(parse_elements(group, args.elements, strict=True)))


def _emit(out: TextIO, as_json: bool, payload: Dict[str, Any], text: str) -> None:
    if as_json:
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(text + "\n")


def cmd_check(args, settings: Settings, out: TextIO) -> int:
    subset = _subset(args, settings)
    t = parse_t(args.t)
    if t == INFINITY and not args.weak:
        t = subset.group.order
    checker = is_weakly_t_independent if args.weak else is_t_independent
    report = checker(subset, t, cross_check=settings.cross_check)
    if report.independent:
        text = "independent"
    else:
        vector = "(" + ",".join(str(v) for v in report.violating_vector.lambdas) + ")"
        condition = report.failed_condition.value if report.failed_condition else "-"
        text = f"dependent {vector} [{condition}]"
    payload = {"group": subset.group.spec(), "set": subset.to_list(), **report.to_dict()}
    payload["t"] = format_number(report.t)
    _emit(out, args.json, payload, text)
    return EXIT_OK


def cmd_ind(args, settings: Settings, out: TextIO) -> int:
    subset = _subset(args, settings)
    weak = args.command == "wind"
    value = weak_independence_number(subset) if weak else independence_number(subset)
    payload = {"group": subset.group.spec(), "set": subset.to_list(), args.command: format_number(value)}
    _emit(out, args.json, payload, format_number(value))
    return EXIT_OK


def _search_exit(result: SearchResult) -> int:
    return EXIT_OK if result.exact else EXIT_BUDGET


def cmd_max(args, settings: Settings, out: TextIO) -> int:
    group = _group(args, settings)
    if args.command == "sfmax":
        mode, t = SearchMode.SUM_FREE, None
    else:
        mode = SearchMode.STRONG if args.command == "smax" else SearchMode.WEAK
        t = parse_t(args.t)
    result = search(group, t, mode, settings.budget, settings.threads, settings.negation_pruning)
    text = str(result.max_size)
    if args.witness:
        text += "\n" + format_elements(result.witness.members)
    if not result.exact:
        text += "\n# budget exhausted: value is a lower bound"
    _emit(out, args.json, result.to_dict(), text)
    return _search_exit(result)


def cmd_construct(args, settings: Settings, out: TextIO) -> int:
    group = _group(args, settings)
    t = None
    if args.t is not None:
        t = parse_t(args.t)
        if t == INFINITY:
            raise UsageError("constructions need a finite t")
    cert = construct(args.method, group, t)
    status = "verified" if cert.verified else "FAILED"
    text = (f"{format_elements(cert.produced.members)}\n"
            f"# {cert.method} on {group}: size {len(cert.produced)} "
            f"{cert.relation} {cert.expected_size}, {status}")
    _emit(out, args.json, cert.to_dict(), text)
    return EXIT_OK if cert.verified else EXIT_ERROR


def bounds_for(quantity: str, group: Group, t) -> BoundsReport:
    if quantity == "sf":
        return sf_bounds(group)
    if t is None:
        raise UsageError(f"bounds {quantity} needs --t")
    if quantity == "s":
        return s_bounds(group, int(min(t, group.order)))
    return w_bounds(group, t)


def cmd_bounds(args, settings: Settings, out: TextIO) -> int:
    group = _group(args, settings)
    t = parse_t(args.t) if args.t is not None else None
    report = bounds_for(args.quantity, group, t)
    payload = {"quantity": args.quantity, "group": group.spec(),
               "t": None if t is None else format_number(t), **report.to_dict()}
    out.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


# ============================================================================
# TABLES
# ============================================================================

@dataclass
class TableRequest:
    groups: List[Group]
    t_values: list
    mode: SearchMode
    budget: int
    negation_pruning: bool = True
    output_format: str = "csv"

    def __post_init__(self):
        if not self.groups:
            raise UsageError("empty group family")
        if not self.t_values:
            raise UsageError("empty t list")
        if self.budget <= 0:
            raise UsageError(f"budget must be positive, got {self.budget}")

    def jobs(self) -> List[Tuple[Tuple[int, ...], Any, str, int, bool]]:
        return [(group.factors, t, self.mode.value, self.budget, self.negation_pruning)
                for group in self.groups for t in self.t_values]


def _sandwich(result: SearchResult, bounds: BoundsReport) -> str:
    if result.max_size > bounds.upper:
        return "violated"
    if result.exact:
        return "ok" if bounds.contains(result.max_size) else "violated"
    return "open"


def table_row(factors, t, mode: str, budget: int, negation_pruning: bool) -> Dict[str, Any]:
    """One table cell, computed in isolation so it can run in a worker process"""
    group = Group(tuple(factors))
    mode = SearchMode(mode)
    result = search(group, t, mode, budget, 1, negation_pruning)
    quantity = {"strong": "s", "weak": "w", "sumfree": "sf"}[mode.value]
    bounds = bounds_for(quantity, group, result.t)
    return {
        "n": group.order,
        "group": group.spec(),
        "t": "" if result.t is None else format_number(result.t),
        "mode": mode.value,
        "value": result.max_size,
        "witness": format_elements(result.witness.members),
        "nodes": result.nodes,
        "status": result.status.value,
        "lower": bounds.lower,
        "upper": bounds.upper,
        "sandwich": _sandwich(result, bounds),
    }


def _row_job(job) -> Dict[str, Any]:
    return table_row(*job)


def table_generation(request: TableRequest, threads: int = 1) -> List[Dict[str, Any]]:
    """Rows in family order, then t order"""
    jobs = request.jobs()
    logger.info("table: %d rows, mode %s, %d worker(s)", len(jobs), request.mode.value, threads)
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_row_job, jobs))
    rows = []
    for job in jobs:
        rows.append(_row_job(job))
        logger.info("row %s t=%s: %s (%s)", rows[-1]["group"], rows[-1]["t"],
                    rows[-1]["value"], rows[-1]["status"])
    return rows


def monotone_violations(rows: Iterable[Dict[str, Any]]) -> Dict[Tuple[str, str], List[Tuple[int, int, int, int]]]:
    """Decreases of the value between consecutive even (or odd) n, per t.

    Only cyclic exact rows take part.
    """
    series: Dict[Tuple[str, str], List[Tuple[int, int]]] = {}
    for row in rows:
        if row["status"] != SearchStatus.EXACT.value or "x" in row["group"]:
            continue
        parity = "even" if row["n"] % 2 == 0 else "odd"
        series.setdefault((row["t"], parity), []).append((row["n"], row["value"]))
    report = {}
    for key, points in series.items():
        points.sort()
        report[key] = [(n1, n2, v1, v2) for (n1, v1), (n2, v2) in zip(points, points[1:]) if v2 < v1]
    return report


def format_monotone_report(report) -> List[str]:
    lines = []
    for (t, parity), drops in sorted(report.items()):
        if drops:
            listed = ", ".join(f"{n1}->{n2} ({v1}->{v2})" for n1, n2, v1, v2 in drops)
            lines.append(f"# monotone t={t} {parity}: {len(drops)} decrease(s): {listed}")
        else:
            lines.append(f"# monotone t={t} {parity}: nondecreasing")
    return lines


def write_table(rows: List[Dict[str, Any]], output_format: str, out: TextIO) -> None:
    if output_format == "json":
        out.write(json.dumps(rows, indent=2) + "\n")
        return
    writer = csv.DictWriter(out, fieldnames=TABLE_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def cmd_table(args, settings: Settings, out: TextIO) -> int:
    if args.cyclic:
        low, high = parse_range(args.cyclic)
        groups = [Group.cyclic(n) for n in range(low, high + 1)]
    else:
        groups = [parse_group(spec, settings.max_group_order)
                  for spec in args.groups.split(",") if spec.strip()]
    mode = SearchMode(args.mode)
    if mode == SearchMode.SUM_FREE:
        t_values = [None]
    else:
        if not args.t_values:
            raise UsageError(f"table --mode {mode.value} needs --t")
        t_values = parse_t_list(args.t_values)
    request = TableRequest(groups, t_values, mode, settings.budget,
                           settings.negation_pruning, settings.table_format)
    rows = table_generation(request, settings.threads)
    write_table(rows, request.output_format, out)

    if args.monotone_report:
        lines = format_monotone_report(monotone_violations(rows))
        target = sys.stderr if request.output_format == "json" else out
        for line in lines:
            target.write(line + "\n")

    exhausted = sum(row["status"] != SearchStatus.EXACT.value for row in rows)
    if exhausted:
        logger.warning("%d of %d rows exhausted their budget", exhausted, len(rows))
        return EXIT_BUDGET
    return EXIT_OK


# ============================================================================
# VERIFICATION
# ============================================================================

@dataclass
class CheckOutcome:
    name: str
    passed: int = 0
    inconclusive: int = 0
    failures: List[str] = field(default_factory=list)

    def record(self, ok: bool, detail: str) -> None:
        if ok:
            self.passed += 1
        else:
            self.failures.append(detail)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "inconclusive": self.inconclusive,
                "failures": self.failures}


class Verifier:
    """Formula-versus-search, construction and bound-sandwich checks over
    every abelian group up to an order cap"""

    def __init__(self, cap: int, t_cap: int, budget: int, negation_pruning: bool = True):
        if cap < 2 or t_cap < 2:
            raise DomainError(f"verify needs cap >= 2 and t cap >= 2, got {cap} and {t_cap}")
        self.cap = cap
        self.t_cap = t_cap
        self.budget = budget
        self.negation_pruning = negation_pruning
        self.checks: Dict[str, CheckOutcome] = {}

    def check(self, name: str) -> CheckOutcome:
        if name not in self.checks:
            self.checks[name] = CheckOutcome(name)
        return self.checks[name]

    def _search(self, group: Group, t, mode: SearchMode, *names: str) -> Optional[SearchResult]:
        result = search(group, t, mode, self.budget, 1, self.negation_pruning)
        if not result.exact:
            for name in names:
                self.check(name).inconclusive += 1
            return None
        return result

    def _strong(self, group: Group) -> None:
        for t in range(2, self.t_cap + 1):
            result = self._search(group, t, SearchMode.STRONG, "s-exact", "s-sandwich")
            if result is None:
                continue
            value = result.max_size
            exact = s_exact(group, t)
            if exact is not None:
                self.check("s-exact").record(exact == value, f"{group} t={t}: formula {exact}, search {value}")
            bounds = s_bounds(group, t)
            self.check("s-sandwich").record(
                bounds.contains(value), f"{group} t={t}: search {value} outside [{bounds.lower}, {bounds.upper}]")
            if t == 3 and group.is_cyclic:
                formula = s_Zn3(group.order)
                self.check("s-Zn3").record(formula == value, f"Z{group.order}: s_Zn3 {formula}, search {value}")

    def _weak(self, group: Group) -> None:
        for t in range(2, self.t_cap + 1):
            result = self._search(group, t, SearchMode.WEAK, "w-sandwich")
            if result is None:
                continue
            value = result.max_size
            if t == 2:
                exact = w_exact_small_t(group, 2)
                self.check("w-exact").record(exact == value, f"{group} t=2: formula {exact}, search {value}")
            bounds = w_bounds(group, t)
            self.check("w-sandwich").record(
                bounds.contains(value), f"{group} t={t}: search {value} outside [{bounds.lower}, {bounds.upper}]")

    def _sum_free(self, group: Group) -> None:
        result = self._search(group, None, SearchMode.SUM_FREE, "sf-sandwich")
        if result is None:
            return
        bounds = sf_bounds(group)
        self.check("sf-sandwich").record(
            bounds.contains(result.max_size),
            f"{group}: search {result.max_size} outside [{bounds.lower}, {bounds.upper}]")

    def _constructions(self, group: Group) -> None:
        runs: List[Tuple[str, Optional[int]]] = [("two", None), ("three", None), ("sum-free", None)]
        for t in range(1, self.t_cap + 1):
            runs += [("greedy", t), ("greedy-weak", t)]
        if group.is_cyclic:
            runs += [("cyclic", t) for t in range(3, min(self.t_cap, group.order - 1) + 1)]
        for method, t in runs:
            cert = construct(method, group, t)
            label = method if t is None else f"{method} t={t}"
            self.check(f"construct-{method}").record(
                cert.verified, f"{group} {label}: size {len(cert.produced)} {cert.relation} "
                               f"{cert.expected_size}, set {cert.produced}")

    def run(self) -> List[CheckOutcome]:
        for group in groups_up_to(self.cap):
            logger.info("verifying %s", group)
            self._strong(group)
            self._weak(group)
            self._sum_free(group)
            self._constructions(group)
        outcomes = list(self.checks.values())
        failed = sum(bool(o.failures) for o in outcomes)
        logger.info("verify up to order %d, t <= %d: %d checks, %d failing",
                    self.cap, self.t_cap, len(outcomes), failed)
        return outcomes


def verify(cap: int, t_cap: int, budget: int, negation_pruning: bool = True) -> List[CheckOutcome]:
    return Verifier(cap, t_cap, budget, negation_pruning).run()


def cmd_verify(args, settings: Settings, out: TextIO) -> int:
    outcomes = verify(args.cap, args.t_cap, settings.budget, settings.negation_pruning)
    failing = [o for o in outcomes if o.failures]
    if args.json:
        out.write(json.dumps([o.to_dict() for o in outcomes], indent=2) + "\n")
    else:
        for o in outcomes:
            mark = "FAIL" if o.failures else "PASS"
            extra = f", {o.inconclusive} inconclusive" if o.inconclusive else ""
            out.write(f"{mark} {o.name}: {o.passed} passed, {len(o.failures)} failed{extra}\n")
    if failing:
        sys.stderr.write(f"first counterexample ({failing[0].name}): {failing[0].failures[0]}\n")
        return EXIT_ERROR
    if any(o.inconclusive for o in outcomes):
        return EXIT_BUDGET
    return EXIT_OK


# ============================================================================
# ENTRY POINT
# ============================================================================

COMMANDS = {
    "check": cmd_check,
    "ind": cmd_ind,
    "wind": cmd_ind,
    "smax": cmd_max,
    "wmax": cmd_max,
    "sfmax": cmd_max,
    "construct": cmd_construct,
    "bounds": cmd_bounds,
    "table": cmd_table,
    "verify": cmd_verify,
}


def run_command(argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
    """Run one command; returns the process exit code"""
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        settings = resolve_settings(args)
        configure_logging(settings.log_level)
        return COMMANDS[args.command](args, settings, out)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except (DomainError, ConfigError) as e:
        sys.stderr.write(f"Error: {e}\n")
        return EXIT_ERROR
    except (ConsistencyError, BoundsError) as e:
        logger.error("internal inconsistency: %s", e)
        sys.stderr.write(f"Error: {e}\n")
        return EXIT_ERROR


def main() -> int:
    return run_command()
