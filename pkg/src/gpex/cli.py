"""Scenario files and the ``gpex`` command line.

A scenario file starts with the line ``gpex-scenario 1`` followed by
``key = value`` lines (``#`` starts a comment).  Exactly one of ``system``,
``gpe`` or ``table`` names what to run::

    gpex-scenario 1
    system = rotation
    param.alpha = 2/5
    N = 8

Keys: system, param.<name>, gpe, table, N, window, tol, cap_cells, cap_bits,
samples, seed, gap, out.  Relative paths resolve against the scenario file.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import billiard as bl
from .entropy import DEFAULT_TOL, DEFAULT_WINDOW, BoundReport, check_bounds, growth_rate
from .exchange import BUILTINS, GpeParseError, GpeSystem, InvalidExchange, builtin, format_gpe, parse_gpe, validate
from .geometry import area, intersect_convex
from .join import Caps, JoinLevel, ResourceCapExceeded, join_sequence, levels_csv
from .oracles import grid_join_count

SCENARIO_HEADER = "gpex-scenario 1"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_CAP = 4
EXIT_INVARIANT = 5


class ScenarioError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


@dataclass
class Scenario:
    system: Optional[str] = None
    params: dict[str, str] = field(default_factory=dict)
    gpe: Optional[Path] = None
    table: Optional[str] = None
    N: int = 8
    window: float = DEFAULT_WINDOW
    tol: float = DEFAULT_TOL
    cap_cells: int = Caps.max_cells
    cap_bits: int = Caps.max_bits
    samples: int = 16
    seed: int = 0
    gap: float = 0.02
    out: Path = Path("out")

    @property
    def caps(self) -> Caps:
        return Caps(self.cap_cells, self.cap_bits)

    @property
    def is_billiard(self) -> bool:
        return self.table is not None


def _positive_int(v: str) -> int:
    n = int(v)
    if n < 1:
        raise ValueError("must be a positive integer")
    return n


def _positive_float(v: str) -> float:
    x = float(v)
    if not (x > 0 and math.isfinite(x)):
        raise ValueError("must be a positive number")
    return x


_FIELDS: dict[str, Callable[[str], object]] = {
    "system": str,
    "table": str,
    "N": _positive_int,
    "window": _positive_float,
    "tol": _positive_float,
    "cap_cells": _positive_int,
    "cap_bits": _positive_int,
    "samples": _positive_int,
    "seed": int,
    "gap": _positive_float,
}


def parse_scenario(text: str, base: Path = Path(".")) -> Scenario:
    rows = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(text.splitlines())]
    rows = [(i, ln) for i, ln in rows if ln]
    if not rows or rows[0][1] != SCENARIO_HEADER:
        raise ScenarioError(f"missing header line {SCENARIO_HEADER!r}")
    sc = Scenario(out=base / "out")
    seen: set[str] = set()
    for lineno, ln in rows[1:]:
        if "=" not in ln:
            raise ScenarioError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in ln.split("=", 1))
        if key in seen:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if not value:
            raise ScenarioError(f"line {lineno}: empty value for {key!r}")
        if key.startswith("param."):
            sc.params[key[6:]] = value
        elif key == "gpe":
            sc.gpe = base / value
        elif key == "out":
            sc.out = base / value
        elif key in _FIELDS:
            try:
                setattr(sc, key, _FIELDS[key](value))
            except ValueError as exc:
                raise ScenarioError(f"line {lineno}: {key}: {exc}") from None
        else:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
    chosen = [k for k in ("system", "gpe", "table") if getattr(sc, k) is not None]
    if len(chosen) != 1:
        raise ScenarioError("exactly one of system, gpe, table is required")
    if sc.system is not None and sc.system not in BUILTINS:
        raise ScenarioError(f"unknown builtin system {sc.system!r}")
    if sc.params and sc.system is None:
        raise ScenarioError("param.* keys only apply to builtin systems")
    if sc.gpe is not None and not sc.gpe.is_file():
        raise ScenarioError(f"gpe file not found: {sc.gpe}")
    if sc.table is not None and sc.table not in bl.TABLES:
        path = base / sc.table
        if not path.is_file():
            raise ScenarioError(f"table {sc.table!r} is neither a builtin nor a file")
        sc.table = str(path)
    return sc


def load_scenario(path: Path) -> Scenario:
    return parse_scenario(Path(path).read_text(), Path(path).parent)


def load_system(sc: Scenario) -> GpeSystem:
    if sc.gpe is not None:
        return parse_gpe(sc.gpe.read_text())
    try:
        return builtin(sc.system, **sc.params)
    except TypeError as exc:
        raise ScenarioError(f"bad parameters for {sc.system}: {exc}") from None


def load_table(sc: Scenario) -> bl.BilliardTable:
    if sc.table in bl.TABLES:
        return bl.TABLES[sc.table]()
    return bl.parse_table(Path(sc.table).read_text())


# --------------------------------------------------------------------------
# pipelines
# --------------------------------------------------------------------------


@dataclass
class BilliardRun:
    counts: list[int]
    singular: bl.SingularSet
    report: bl.GpeReport

    @property
    def lengths(self) -> list[float]:
        return list(np.cumsum(self.singular.generation_lengths))


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def run_gpe(sc: Scenario) -> tuple[list[JoinLevel], Optional[BoundReport]]:
    """levels.csv always; bounds.txt once there are enough levels to estimate rates."""
    g = load_system(sc)
    try:
        levels = join_sequence(g, sc.N, sc.caps)
    except ResourceCapExceeded as exc:
        if exc.levels:
            _write(sc.out, "levels.csv", levels_csv(exc.levels))
        raise
    _write(sc.out, "levels.csv", levels_csv(levels))
    if sc.N < 4:
        return levels, None
    report = check_bounds(g, sc.N, samples=sc.samples, seed=sc.seed, tol=sc.tol, window=sc.window, levels=levels)
    _write(sc.out, "bounds.txt", report.to_text())
    return levels, report


def billiard_bounds_text(t: bl.BilliardTable, run: BilliardRun, sc: Scenario) -> str:
    h = growth_rate(run.counts, sc.window)
    theta = growth_rate(run.lengths, sc.window)
    rows = [
        ("system", f"billiard {t.name}"),
        ("N", str(sc.N)),
        ("h_estimate", f"{h.theta_tail:.12g}"),
        ("theta_estimate", f"{theta.theta_tail:.12g}"),
        ("margin_entropy", f"{theta.theta_tail - h.theta_tail:.12g}"),
        ("count_subexponential", str(h.subexponential).lower()),
        ("theta_subexponential", str(theta.subexponential).lower()),
        ("length_loglog_slope", f"{theta.loglog_slope:.12g}"),
        ("singular_length_measure", "union of backward images of the first-return boundary"),
        ("length_lower_bound", str(run.singular.truncated).lower()),
        ("finsler_convexity", "assumed, not tested"),
        ("gpe_structure", "pass" if run.report.ok else "fail"),
    ]
    rows += [(f"gpe.{c.name}", "pass" if c.passed else "fail") for c in run.report.checks]
    return "".join(f"{k} = {v}\n" for k, v in rows)


def run_billiard(sc: Scenario) -> BilliardRun:
    t = load_table(sc)
    if not t.convex:
        raise ScenarioError("counting and curve tracking need a convex table")
    counts = [bl.count_itinerary_cells(t, n) for n in range(1, sc.N + 1)]
    ss = bl.singular_set(t, sc.N, gap=sc.gap)
    run = BilliardRun(counts, ss, bl.as_gpe_report(t))
    lengths = run.lengths
    _write(sc.out, "levels.csv", "n,atom_count\n" + "".join(f"{n},{c}\n" for n, c in enumerate(counts, 1)))
    trunc = [ss.truncated] * sc.N
    _write(sc.out, "singular.csv", bl.singular_csv(counts, lengths, trunc))
    _write(sc.out, "curves.dump", bl.curves_dump(ss))
    if sc.N >= 4:
        _write(sc.out, "bounds.txt", billiard_bounds_text(t, run, sc))
    return run


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------


Check = tuple[str, bool, str]


def _nested(levels: list[JoinLevel]) -> bool:
    for prev, cur in zip(levels, levels[1:]):
        parents = {c.itinerary: c.region for c in prev.cells}
        for c in cur.cells:
            p = parents.get(c.itinerary[:-1])
            if p is None:
                return False
            inner = intersect_convex(c.region, p)
            if inner is None or area(inner) != area(c.region):
                return False
    return True


def verify_gpe(sc: Scenario) -> list[Check]:
    g = load_system(sc)
    checks: list[Check] = []
    rep = validate(g)
    checks.append(("valid exchange", rep.ok, "; ".join(rep.violations) or "all invariants hold"))
    levels, bounds = run_gpe(sc)
    total = area(g.space)
    conserved = all(sum((area(c.region) for c in lv.cells), 0 * total) == total for lv in levels)
    checks.append(("area conservation", conserved, f"sum of cell areas = area(X) on {len(levels)} levels"))
    checks.append(("nesting", _nested(levels), "every cell lies in its parent"))
    counts = [lv.stats.atom_count for lv in levels]
    checks.append(("monotone counts", counts == sorted(counts), f"{counts[0]} .. {counts[-1]}"))
    if bounds is not None:
        checks.append(("convex cells", bounds.cells_convex, "all cells strictly convex"))
        m = bounds.margin_entropy
        checks.append(("h <= theta", m >= -sc.tol, f"margin {m:.6g}"))
        if bounds.subexponential:
            checks.append(("theta flagged subexponential", True, "power law fits the skeleton tail"))
    small = min(sc.N, 3)
    grid = [grid_join_count(g, n) for n in range(1, small + 1)]
    checks.append(("grid oracle", grid == counts[:small], f"exact {counts[:small]}, grid {grid}"))
    return checks


def verify_billiard(sc: Scenario) -> list[Check]:
    t = load_table(sc)
    run = run_billiard(sc)
    checks: list[Check] = [(f"gpe structure: {c.name}", c.passed, c.detail) for c in run.report.checks]
    counts = run.counts
    checks.append(("monotone counts", all(b >= a for a, b in zip(counts, counts[1:])), f"{counts}"))
    gl = run.singular.generation_lengths
    checks.append(("length nondecreasing", all(x >= 0 for x in gl), f"total {run.singular.total_length:.6g}"))
    checks.append(("curves untruncated", not run.singular.truncated, "refinement within budget"))
    small = min(sc.N, 3)
    grid = [bl.grid_itinerary_count(t, n, m=1000) for n in range(1, small + 1)]
    checks.append(("grid oracle", grid == counts[:small], f"exact {counts[:small]}, grid {grid}"))
    back = bl.singular_set(t, min(sc.N, 4), gap=sc.gap)
    fwd = bl.singular_set(t, min(sc.N, 4), gap=sc.gap, backward=False)
    gap = abs(back.total_length - fwd.total_length)
    checks.append(("time reversal", gap <= 1e-6 * back.total_length, f"length gap {gap:.3g}"))
    if sc.N >= 4:
        h = growth_rate(counts, sc.window)
        checks.append(("subexponential counts", h.subexponential, f"tail log-slope {h.theta_slope:.4g}"))
    return checks


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def describe(name: str) -> str:
    if name in BUILTINS:
        factory, text = BUILTINS[name]
        return f"{name}: {text}\n\n{format_gpe(factory())}"
    if name in bl.TABLES:
        return f"{name}: billiard table\n\n{bl.format_table(bl.TABLES[name]())}"
    raise ScenarioError(f"unknown system {name!r}; known: {', '.join(sorted(BUILTINS) + sorted(bl.TABLES))}")


def _apply_flags(sc: Scenario, args: argparse.Namespace) -> Scenario:
    over = {}
    if args.out is not None:
        over["out"] = Path(args.out)
    if args.cap_cells is not None:
        over["cap_cells"] = args.cap_cells
    if args.cap_bits is not None:
        over["cap_bits"] = args.cap_bits
    if args.tol is not None:
        over["tol"] = args.tol
    if args.seed is not None:
        over["seed"] = args.seed
    return replace(sc, **over)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpex", description="Joins, entropy bounds and billiards for polygon exchanges.")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in ("run", "verify"):
        sp = sub.add_parser(verb)
        sp.add_argument("scenario")
        sp.add_argument("--out")
        sp.add_argument("--cap-cells", type=int)
        sp.add_argument("--cap-bits", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--seed", type=int)
    sp = sub.add_parser("describe")
    sp.add_argument("name")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "describe":
            sys.stdout.write(describe(args.name))
            return EXIT_OK
        sc = _apply_flags(load_scenario(Path(args.scenario)), args)
        if args.verb == "run":
            if sc.is_billiard:
                run = run_billiard(sc)
                print(f"wrote {sc.out}: counts {run.counts[0]}..{run.counts[-1]}")
                return EXIT_OK if run.report.ok else EXIT_INVARIANT
            levels, report = run_gpe(sc)
            if report is None:
                print(f"wrote {sc.out}: {len(levels)} levels")
                return EXIT_OK
            print(f"wrote {sc.out}: h = {report.h_estimate:.6g}, theta = {report.theta_estimate:.6g}")
            if not report.ok:
                print("invariant violated: " + "; ".join(report.violations), file=sys.stderr)
                return EXIT_INVARIANT
            return EXIT_OK
        checks = verify_billiard(sc) if sc.is_billiard else verify_gpe(sc)
        for name, ok, detail in checks:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_CHECK_FAILED
    except (ScenarioError, GpeParseError, OSError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidExchange as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ResourceCapExceeded as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as exc:
        # malformed table files and parameter values
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (InvariantViolation, AssertionError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
