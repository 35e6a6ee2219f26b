"""Seeded core-equivalence experiments on random Cobb-Douglas economies.

Random draws use numpy's ``Generator(PCG64(seed))``; every drawn number is
an integer turned into an exact rational, so results do not depend on
floating-point behaviour.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .blocking import blocking_search, blocks_by
from .economy import DistributionalEconomy, Reallocation, TypeProfile, validate_allocation
from .grids import default_blocking_grid, float_utility, refine_grid
from .prefs import CobbDouglas
from .walras import cobb_douglas_price, find_equilibrium


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 20240601
    trials: int = 100
    types: tuple[int, int] = (2, 4)  # inclusive range
    commodities: tuple[int, int] = (2, 3)
    weight_denominator: int = 8
    endowment_denominator: int = 4
    endowment_max: int = 12  # numerators drawn from 1..endowment_max
    perturbations: int = 5
    magnitude: tuple[int, int] = (3, 12)  # transfer share in twentieths of the giver's holding
    min_displacement: float = 0.02  # relative utility change required of some affected type
    grid_n: int = 4
    refine: bool = True
    workers: int = 1

    def __post_init__(self):
        for name in ("types", "commodities", "magnitude"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise ValueError(f"{name} range {lo}..{hi} is empty")
        if self.types[0] < 2:
            raise ValueError("economies need at least two types")
        if self.commodities[0] < 2:
            raise ValueError("economies need at least two commodities")
        if self.magnitude[1] >= 20:
            raise ValueError("transfer share must stay below the whole holding")
        if self.trials < 0 or self.perturbations < 0:
            raise ValueError("counts must be nonnegative")


def _simplex_weights(rng: np.random.Generator, l: int, den: int) -> tuple[Fraction, ...]:
    # a uniformly random composition of den into l positive parts
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, den), size=l - 1, replace=False))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return tuple(Fraction(k, den) for k in parts)


def random_economy(rng: np.random.Generator, cfg: ExperimentConfig) -> DistributionalEconomy:
    k = int(rng.integers(cfg.types[0], cfg.types[1] + 1))
    l = int(rng.integers(cfg.commodities[0], cfg.commodities[1] + 1))
    den = max(cfg.weight_denominator, l)
    while True:
        profs = []
        for _ in range(k):
            w = _simplex_weights(rng, l, den)
            e = tuple(Fraction(int(v), cfg.endowment_denominator) for v in rng.integers(1, cfg.endowment_max + 1, size=l))
            profs.append(TypeProfile(CobbDouglas(w), e))
        if len(set(profs)) == k:
            break
    raw = [int(v) for v in rng.integers(1, 10, size=k)]
    total = sum(raw)
    return DistributionalEconomy(tuple((p, Fraction(r, total)) for p, r in zip(profs, raw)), l)


@dataclass(frozen=True)
class Perturbation:
    giver: int
    receiver: int
    commodity: int
    share: Fraction  # fraction of the giver's holding of the commodity handed over
    attempts: int


def perturb(
    rng: np.random.Generator, E: DistributionalEconomy, t: Reallocation, cfg: ExperimentConfig, max_attempts: int = 50
) -> tuple[Reallocation, Perturbation] | None:
    """Resource-preserving transfer of one commodity between two types, verified non-Walrasian.

    Atoms of ``t`` are indexed like the types of ``E`` (one bundle per type).
    The transfer must move some affected type's utility by at least
    ``cfg.min_displacement`` (relative), and ``cobb_douglas_price`` must
    confirm exactly that no price supports the result.
    """
    bundles = {prof: x for prof, x, _ in t.atoms}
    k = len(E.types)
    for attempt in range(1, max_attempts + 1):
        g, r = (int(v) for v in rng.choice(k, size=2, replace=False))
        h = int(rng.integers(0, E.l))
        share = Fraction(int(rng.integers(cfg.magnitude[0], cfg.magnitude[1] + 1)), 20)
        (pg, mg), (pr, mr) = E.types[g], E.types[r]
        xg, xr = bundles[pg], bundles[pr]
        amount = share * xg[h] * mg
        if amount == 0:
            continue
        ng = xg[:h] + (xg[h] - amount / mg,) + xg[h + 1 :]
        nr = xr[:h] + (xr[h] + amount / mr,) + xr[h + 1 :]
        shift = max(
            abs(float_utility(p.pref, new) / float_utility(p.pref, old) - 1)
            for p, old, new in ((pg, xg, ng), (pr, xr, nr))
        )
        if shift < cfg.min_displacement:
            continue
        new = dict(bundles)
        new[pg], new[pr] = ng, nr
        tp = Reallocation.from_atoms((p, new[p], m) for p, m in E.types)
        if not validate_allocation(E, tp).ok or cobb_douglas_price(tp) is not None:
            continue
        return tp, Perturbation(g, r, h, share, attempt)
    return None


@dataclass
class TrialRecord:
    trial: int
    types: int
    commodities: int
    equilibrium: bool
    price: str = ""
    forward_core: bool | None = None
    forward_grid: int = 0
    perturbations: int = 0
    converse_default: int = 0
    converse_refined: int = 0
    witnesses_valid: int = 0
    seconds: float = 0.0
    notes: list[str] = field(default_factory=list)


def _fmt_price(p) -> str:
    return " ".join(str(v) for v in p)


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialRecord:
    """One economy: forward check of its equilibrium, then converse checks on perturbations."""
    start = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64([cfg.seed, trial]))
    E = random_economy(rng, cfg)
    rec = TrialRecord(trial, len(E.types), E.l, False)
    eq = find_equilibrium(E)
    if not eq.ok:
        rec.notes.append(eq.message)
        rec.seconds = time.perf_counter() - start
        return rec
    rec.equilibrium = True
    rec.price = _fmt_price(eq.price)
    t = eq.reallocation
    grid = default_blocking_grid(t, cfg.grid_n)
    verdict = blocking_search(t, grid)
    rec.forward_core, rec.forward_grid = verdict.core, len(grid)
    for _ in range(cfg.perturbations):
        got = perturb(rng, E, t, cfg)
        if got is None:
            rec.notes.append("no non-Walrasian perturbation found")
            continue
        tp, _ = got
        rec.perturbations += 1
        v = blocking_search(tp, default_blocking_grid(tp, cfg.grid_n))
        if v.core and cfg.refine:
            v2 = blocking_search(tp, refine_grid(tp, default_blocking_grid(tp, cfg.grid_n), v.dual[-E.l :]))
        else:
            v2 = v
        rec.converse_default += not v.core
        rec.converse_refined += not v2.core
        for w in (v.witness, v2.witness):
            if w is not None and not blocks_by(w.measure):
                rec.notes.append("witness failed blocks_by")
        rec.witnesses_valid += int(v2.witness is not None and blocks_by(v2.witness.measure))
    rec.seconds = time.perf_counter() - start
    return rec


CSV_FIELDS = (
    "trial",
    "types",
    "commodities",
    "equilibrium",
    "price",
    "forward_core",
    "forward_grid",
    "perturbations",
    "converse_default",
    "converse_refined",
    "witnesses_valid",
    "notes",
)


@dataclass(frozen=True)
class ExperimentSummary:
    config: ExperimentConfig
    records: tuple[TrialRecord, ...]

    @property
    def counts(self) -> dict[str, int]:
        r = self.records
        return {
            "trials": len(r),
            "equilibria": sum(x.equilibrium for x in r),
            "skipped": sum(not x.equilibrium for x in r),
            "forward_pass": sum(bool(x.forward_core) for x in r),
            "perturbations": sum(x.perturbations for x in r),
            "converse_default": sum(x.converse_default for x in r),
            "converse_refined": sum(x.converse_refined for x in r),
            "witnesses_valid": sum(x.witnesses_valid for x in r),
        }

    def to_csv(self) -> str:
        """Deterministic per-trial table (timings are left out so reruns are byte-identical)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rec in self.records:
            d = asdict(rec)
            d["notes"] = "; ".join(rec.notes)
            w.writerow([d[f] for f in CSV_FIELDS])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "config": asdict(self.config),
            "counts": self.counts,
            "trials": [{f: (asdict(r)[f] if f != "notes" else r.notes) for f in CSV_FIELDS} for r in self.records],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def run_experiment(cfg: ExperimentConfig) -> ExperimentSummary:
    """All trials, ordered by trial index whatever the worker count."""
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            recs = list(pool.map(run_trial, [cfg] * cfg.trials, range(cfg.trials)))
    else:
        recs = [run_trial(cfg, i) for i in range(cfg.trials)]
    return ExperimentSummary(cfg, tuple(recs))
