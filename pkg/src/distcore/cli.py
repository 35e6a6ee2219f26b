"""Command-line front end.

Exit codes: 0 success or affirmative verdict, 1 negative verdict, 2 input
error, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from itertools import combinations
from typing import Callable, Sequence

from . import io as dio
from .agents import (
    IndivisibilityError,
    OPT_OUT,
    purify,
    realize_economy,
    represent_subpopulation,
    restricted_distribution,
    step_from_reallocation,
)
from .blocking import blocking_search
from .dominance import JointAllocationMeasure, dominates_D, find_pareto_improvement, pareto_compare_joint, strassen_coupling
from .economy import PreconditionError, validate_allocation, validate_economy
from .experiment import ExperimentConfig, run_experiment
from .grids import default_blocking_grid, pareto_grid, refine_grid
from .optim import MAX_VARIABLES, ResourceLimitError
from .prefs import fmt_bundle
from .walras import find_equilibrium, is_walrasian, to_simplex

OK, NEGATIVE, INPUT_ERROR, RESOURCE = 0, 1, 2, 3


class Usage(Exception):
    pass


def _out(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pick(table: dict, name: str | None, what: str):
    if name is None:
        if len(table) == 1:
            return next(iter(table.values()))
        raise Usage(f"--{what} is required (document has {sorted(table) or 'none'})")
    if name not in table:
        raise Usage(f"no {what} named {name!r} (document has {sorted(table) or 'none'})")
    return table[name]


def _grid(doc: dio.EconomyDocument, name: str | None, t):
    if name in (None, "default"):
        return default_blocking_grid(t), "default"
    return _pick(doc.grids, name, "grid"), name


def _frac(v: Fraction) -> str:
    return str(v)


# --- verbs --------------------------------------------------------------------------------


def cmd_validate(args) -> int:
    doc = dio.load_document(args.path)
    rep = validate_economy(doc.economy)
    ok = rep.ok
    print(f"economy: {'valid' if rep.ok else 'INVALID'}")
    for k, v in rep.checks.items():
        print(f"  {k}: {'ok' if v else 'FAIL'}")
    for msg in rep.issues:
        print(f"  - {msg}")
    for name, t in doc.allocations.items():
        r = validate_allocation(doc.economy, t)
        ok = ok and r.ok
        print(f"allocation {name}: {'valid' if r.ok else 'INVALID'}")
        for msg in r.issues:
            print(f"  - {msg}")
    return OK if ok else NEGATIVE


def _print_witness(w) -> None:
    print(f"witness mass {w.improving_mass} (LP optimum {w.lp_value})")
    for p, (x, xp), m in w.measure.atoms:
        print(f"  mass {m}: {fmt_bundle(x)} -> {fmt_bundle(xp)}  endowment {fmt_bundle(p.endowment)}")


def cmd_core_check(args) -> int:
    doc = dio.load_document(args.path)
    t = _pick(doc.allocations, args.allocation, "allocation")
    grid, gname = _grid(doc, args.grid, t)
    v = blocking_search(t, grid, args.cap)
    if v.core and args.refine:
        grid = refine_grid(t, grid, v.dual[-doc.economy.l :])
        gname += "+refined"
        v = blocking_search(t, grid, args.cap)
    label = f"relative to grid {gname} ({v.grid_size} bundles)"
    if v.core:
        print(f"core: true {label}")
        return OK
    print(f"core: false {label}")
    _print_witness(v.witness)
    if args.output:
        _out(dio.dumps(dio.witness_to_json(v.witness)), args.output)
        dio.parse_witness(open(args.output, encoding="utf-8").read())
    return NEGATIVE


def cmd_walras(args) -> int:
    doc = dio.load_document(args.path)
    t = _pick(doc.allocations, args.allocation, "allocation")
    p = _pick(doc.prices, args.price, "price")
    grid = doc.grids.get(args.grid) if args.grid else None
    res = is_walrasian(t, p, grid)
    print(f"walrasian: {str(res.ok).lower()} at price {fmt_bundle(p)}" + (" (grid-relative)" if res.grid_relative else ""))
    for v in res.violations:
        extra = f"; better: {fmt_bundle(v.better)}" if v.better else ""
        print(f"  atom {v.atom}: {v.reason}{extra}")
    return OK if res.ok else NEGATIVE


def cmd_equilibrium(args) -> int:
    doc = dio.load_document(args.path)
    eq = find_equilibrium(doc.economy)
    if not eq.ok:
        print(f"equilibrium: not found ({eq.message})")
        return NEGATIVE
    print(f"equilibrium: found by {eq.method}")
    print(f"price (last = 1): {fmt_bundle(eq.price)}")
    print(f"price (simplex):  {fmt_bundle(to_simplex(eq.price))}")
    for k, (p, m) in enumerate(doc.economy.types):
        for x, mm in eq.reallocation.support(p):
            print(f"  type {k}: demand {fmt_bundle(x)}")
    v = blocking_search(eq.reallocation, default_blocking_grid(eq.reallocation), args.cap)
    print(f"core cross-check: {'no blocking' if v.core else 'BLOCKED'} on default grid ({v.grid_size} bundles)")
    if args.output:
        doc.allocations["equilibrium"] = eq.reallocation
        doc.prices["equilibrium"] = eq.price
        _out(dio.dumps(dio.document_to_json(doc)), args.output)
        dio.load_document(args.output)
    return OK if v.core else NEGATIVE


def cmd_dominance(args) -> int:
    doc = dio.load_document(args.path)
    a = _pick(doc.allocations, args.first, "first")
    b = _pick(doc.allocations, args.second, "second")
    ab, ba = dominates_D(a, b), dominates_D(b, a)
    both = " (both directions)" if ab.holds and ba.holds else ""
    print(f"dominates: {str(ab.holds).lower()}{both}")
    for v in ab.violations:
        print(f"  better-set of {fmt_bundle(v.bundle)}: {v.mass} < {v.mass_other}")
    return OK if ab.holds else NEGATIVE


def cmd_couple(args) -> int:
    doc = dio.load_document(args.path)
    a = _pick(doc.allocations, args.first, "first")
    b = _pick(doc.allocations, args.second, "second")
    res = strassen_coupling(a, b)
    if not res.ok:
        print("coupling: none")
        for v in res.certificate:
            print(f"  better-set of {fmt_bundle(v.bundle)}: {v.mass} < {v.mass_other}")
        return NEGATIVE
    text = dio.dumps(dio.coupling_to_json(res.coupling))
    dio.parse_coupling(text)
    print(f"coupling: {len(res.coupling.atoms)} atoms")
    _out(text, args.output)
    if args.output:
        dio.parse_coupling(open(args.output, encoding="utf-8").read())
    return OK


def cmd_pareto(args) -> int:
    doc = dio.load_document(args.path)
    a = _pick(doc.allocations, args.first, "first")
    if args.second:
        # identify agents by laying both allocations out on the same interval space
        b = _pick(doc.allocations, args.second, "second")
        A = realize_economy(doc.economy)
        mu = restricted_distribution(A, [step_from_reallocation(A, a), step_from_reallocation(A, b)])
        j = JointAllocationMeasure.from_atoms((p.pref, x, xp, m) for p, (x, xp), m in mu.atoms)
        c = pareto_compare_joint(j)
        print(f"pareto: {c.verdict} (mass better under second {c.mass_prime_better}, under first {c.mass_better})")
        return OK if c.f_dominates else NEGATIVE
    grid = doc.grids[args.grid] if args.grid else pareto_grid(a)
    imp = find_pareto_improvement(doc.economy, a, grid)
    if imp is None:
        print(f"pareto improvement: none on grid ({len(grid)} bundles)")
        return OK
    print(f"pareto improvement: found, strictly improving mass {imp.improving_mass}")
    for p, (x, xp), m in imp.measure.atoms:
        print(f"  mass {m}: {fmt_bundle(x)} -> {fmt_bundle(xp)}")
    return NEGATIVE


def cmd_purify(args) -> int:
    doc = dio.load_document(args.path)
    mixed = _pick(doc.mixtures, args.mixture, "mixture")
    A = realize_economy(doc.economy, doc.indivisible)
    base = None
    if args.allocation:
        base = step_from_reallocation(A, _pick(doc.allocations, args.allocation, "allocation"))

    def resources(prof, current, o):
        return prof.endowment if o is OPT_OUT else o

    res = purify(A, mixed, [resources], base)
    for iv, b in res.allocation.pieces:
        print(f"  {iv}: {fmt_bundle(b)}")
    pure, mix = res.moments[0]
    print(f"resource integral: {fmt_bundle(pure)} (mixed {fmt_bundle(mix)})")
    if res.coalition is not None:
        print("coalition: " + " ".join(str(iv) for iv in res.coalition.intervals))
    if args.output:
        _out(dio.dumps(dio.step_to_json(res.allocation)), args.output)
        dio.parse_step(open(args.output, encoding="utf-8").read())
    return OK if res.moments_preserved else NEGATIVE


def cmd_subpopulation(args) -> int:
    doc = dio.load_document(args.path)
    sub = _pick(doc.subpopulations, args.sub, "sub")
    A = realize_economy(doc.economy, doc.indivisible)
    try:
        C = represent_subpopulation(A, sub)
    except IndivisibilityError as exc:
        print(f"subpopulation: no exact coalition ({exc})")
        return NEGATIVE
    print("coalition: " + " ".join(str(iv) for iv in C.intervals))
    print(f"measure: {C.measure}")
    n = len(A.blocks)
    if n <= 10:
        exact = all(
            sum((C.overlap(A.blocks[k][1].lo, A.blocks[k][1].hi) for k in S), Fraction(0)) == sum((sub[k] for k in S), Fraction(0))
            for r in range(1, n + 1)
            for S in combinations(range(n), r)
        )
        print(f"exact on all {2**n - 1} type sets: {str(exact).lower()}")
    if args.output:
        _out(dio.dumps(dio.coalition_to_json(C)), args.output)
        dio.parse_coalition(open(args.output, encoding="utf-8").read())
    return OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig(
        seed=args.seed,
        trials=args.trials,
        types=tuple(args.types),
        commodities=tuple(args.commodities),
        perturbations=args.perturbations,
        workers=args.workers,
    )
    s = run_experiment(cfg)
    text = s.to_json() if args.out == "json" else s.to_csv()
    _out(text, args.output)
    if args.output or args.out == "csv":
        c = s.counts
        print(
            f"trials {c['trials']}, equilibria {c['equilibria']}, forward {c['forward_pass']}/{c['equilibria']}, "
            f"converse {c['converse_default']}/{c['perturbations']} default, {c['converse_refined']}/{c['perturbations']} refined",
            file=sys.stderr,
        )
    return OK


# --- parser --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="distcore", description="Exact analysis of finitely supported exchange economies.")
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name: str, fn: Callable, help: str, path: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        if path:
            p.add_argument("path", help="economy document (JSON)")
        p.add_argument("--output", "-o", help="write the artifact to this file")
        p.set_defaults(fn=fn)
        return p

    verb("validate", cmd_validate, "validate an economy document")
    p = verb("core-check", cmd_core_check, "search for a blocking sub-measure")
    p.add_argument("--allocation")
    p.add_argument("--grid", help="grid name in the document, or 'default'")
    p.add_argument("--cap", type=int, default=MAX_VARIABLES, help="LP variable cap")
    p.add_argument("--refine", action="store_true", help="refine the grid once if no blocking is found")
    p = verb("walras", cmd_walras, "check a reallocation against a price")
    p.add_argument("--allocation")
    p.add_argument("--price")
    p.add_argument("--grid", help="grid for explicit preferences")
    p = verb("equilibrium", cmd_equilibrium, "compute a Walrasian equilibrium")
    p.add_argument("--cap", type=int, default=MAX_VARIABLES)
    for name, fn, help in (
        ("dominance", cmd_dominance, "better-set dominance of two allocations"),
        ("couple", cmd_couple, "coupling with no mass where the second bundle is better"),
        ("pareto", cmd_pareto, "Pareto comparison or improvement search"),
    ):
        p = verb(name, fn, help)
        p.add_argument("--first")
        p.add_argument("--second")
        if name == "pareto":
            p.add_argument("--grid")
    p = verb("purify", cmd_purify, "purify per-block mixtures on the interval agent space")
    p.add_argument("--mixture")
    p.add_argument("--allocation", help="refine cells by this allocation")
    p = verb("subpopulation", cmd_subpopulation, "realize per-type sub-masses as a coalition")
    p.add_argument("--sub")
    p = verb("experiment", cmd_experiment, "seeded core-equivalence sweep", path=False)
    d = ExperimentConfig()
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--trials", type=int, default=d.trials)
    p.add_argument("--types", type=int, nargs=2, default=d.types, metavar=("MIN", "MAX"))
    p.add_argument("--commodities", type=int, nargs=2, default=d.commodities, metavar=("MIN", "MAX"))
    p.add_argument("--perturbations", type=int, default=d.perturbations)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RESOURCE
    except (Usage, dio.DocumentError, PreconditionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
