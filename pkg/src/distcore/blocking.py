"""Blocking sub-measures, core membership and the strict-improvement coupling."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .dominance import PreconditionError, couple_slice
from .economy import Reallocation, SubMeasure, TypeProfile, add_scaled
from .optim import EQ, LE, MAX_VARIABLES, LinearProgram, ResourceLimitError, lp_solve
from .prefs import Bundle, ExplicitStrict, as_bundle, fmt_bundle, is_parametric, is_weak_order, strictly_prefers


def blocks_by(rho: SubMeasure) -> bool:
    """Every atom strictly improves (x' > x) and the x' column redistributes the endowments.

    ``rho`` has columns (x, x').
    """
    if rho.total_mass <= 0:
        raise PreconditionError("a blocking measure needs positive mass")
    if rho.width != 2:
        raise PreconditionError("blocking measures carry (x, x') columns")
    for prof, (x, xp), m in rho.atoms:
        if m < 0:
            raise PreconditionError("negative atom mass")
        if m and not strictly_prefers(prof.pref, xp, x):
            return False
    return rho.column_integral(1) == rho.endowment_integral()


@dataclass(frozen=True)
class BlockingWitness:
    measure: SubMeasure  # columns (x, x')
    improving_mass: Fraction
    resource_gap: Bundle
    lp_value: Fraction
    grid_size: int


@dataclass(frozen=True)
class CoreVerdict:
    """Core membership relative to a finite grid of candidate bundles."""

    core: bool
    witness: BlockingWitness | None
    grid_size: int
    dual: tuple[Fraction, ...] | None  # certifies the zero optimum when core
    grid_relative: bool = True

    def __bool__(self) -> bool:
        return self.core


def _clean_grid(grid: Sequence) -> list[Bundle]:
    return list(dict.fromkeys(as_bundle(g) for g in grid))


def _blocking_lp(t: Reallocation, grid: list[Bundle], max_variables: int):
    if not grid:
        raise PreconditionError("grid must be nonempty")
    gset = set(grid)
    needed = set(t.bundles()) | {p.endowment for p, _, _ in t.atoms}
    missing = needed - gset
    if missing:
        raise PreconditionError(
            f"grid lacks {len(missing)} support/endowment bundles, e.g. {fmt_bundle(next(iter(missing)))}"
        )
    cols: list[tuple[int, Bundle]] = []
    for i, (prof, x, _) in enumerate(t.atoms):
        cand = grid
        if isinstance(prof.pref, ExplicitStrict):
            dom = set(prof.pref.bundles)
            cand = [g for g in grid if g in dom]
        cols.extend((i, xp) for xp in cand if strictly_prefers(prof.pref, xp, x))
    lp = LinearProgram.zeros(len(cols))
    lp.objective = [Fraction(1)] * len(cols)
    l = len(t.atoms[0][1]) if t.atoms else 0
    by_atom: dict[int, dict[int, int]] = {i: {} for i in range(len(t.atoms))}
    for j, (i, _) in enumerate(cols):
        by_atom[i][j] = 1
    for i, (_, _, m) in enumerate(t.atoms):
        lp.add_sparse(by_atom[i], LE, m)
    for h in range(l):
        row = {}
        for j, (i, xp) in enumerate(cols):
            c = xp[h] - t.atoms[i][0].endowment[h]
            if c:
                row[j] = c
        lp.add_sparse(row, EQ, 0)
    if lp.n_vars > max_variables:
        raise ResourceLimitError(f"blocking LP has {lp.n_vars} variables, cap is {max_variables}")
    return lp, cols


def blocking_search(t: Reallocation, grid: Sequence, max_variables: int = MAX_VARIABLES) -> CoreVerdict:
    """Maximize the mass of a blocking sub-measure whose proposals lie in ``grid``.

    Variables m(type, x, x') >= 0 for atoms (type, x) of ``t`` and grid bundles
    x' strictly better than x; per-atom mass at most the atom's mass; the x'
    column must exactly redistribute the members' endowments.  Blocking is
    declared iff the optimum is positive, which avoids normalizing the mass.
    """
    grid = _clean_grid(grid)
    lp, cols = _blocking_lp(t, grid, max_variables)
    if not cols:
        return CoreVerdict(True, None, len(grid), tuple(Fraction(0) for _ in lp.constraints))
    res = lp_solve(lp, max_variables=max_variables)
    if res.status != "optimal":
        raise AssertionError(f"blocking LP is {res.status}; it is always feasible and bounded")
    if res.value == 0:
        return CoreVerdict(True, None, len(grid), res.dual)
    atoms = [(t.atoms[i][0], (t.atoms[i][1], xp), v) for (i, xp), v in zip(cols, res.x) if v]
    meas = SubMeasure.from_atoms(atoms)
    gap = [a - b for a, b in zip(meas.column_integral(1), meas.endowment_integral())]
    w = BlockingWitness(meas, meas.total_mass, tuple(gap), res.value, len(grid))
    return CoreVerdict(False, w, len(grid), res.dual)


def find_blocking(t: Reallocation, grid: Sequence, max_variables: int = MAX_VARIABLES) -> BlockingWitness | None:
    return blocking_search(t, grid, max_variables).witness


def is_core_reallocation(t: Reallocation, grid: Sequence, max_variables: int = MAX_VARIABLES) -> CoreVerdict:
    """Core membership, relative to ``grid``: no blocking measure proposes grid bundles."""
    return blocking_search(t, grid, max_variables)


def witness_marginal_ok(t: Reallocation, w: SubMeasure) -> bool:
    """The (type, x) marginal of ``w`` is setwise below ``t``."""
    have: dict[tuple[TypeProfile, Bundle], Fraction] = {}
    for p, x, m in t.atoms:
        have[(p, x)] = have.get((p, x), Fraction(0)) + m
    used: dict[tuple[TypeProfile, Bundle], Fraction] = {}
    for p, (x, _), m in w.atoms:
        used[(p, x)] = used.get((p, x), Fraction(0)) + m
    return all(m <= have.get(k, Fraction(0)) for k, m in used.items())


# --- strict-improvement coupling --------------------------------------------------


@dataclass(frozen=True)
class CoreCoupling:
    measure: SubMeasure  # columns (x, x', x'')
    commodity: int
    n: int
    eps: Fraction  # mass still strictly improving after removing 1/n of the commodity
    beta: Fraction  # remaining mass
    factor: Fraction  # amount of the commodity handed to each unit of the remaining mass


def unit(l: int, i: int, scale: Fraction = Fraction(1)) -> tuple[Fraction, ...]:
    return tuple(scale if h == i else Fraction(0) for h in range(l))


def _shift(x: Bundle, i: int, delta: Fraction) -> Bundle | None:
    v = x[i] + delta
    if v < 0:
        return None
    return x[:i] + (v,) + x[i + 1 :]


def core_coupling(
    mu: SubMeasure,
    mu_prime: SubMeasure,
    cap: int = 64,
    redistribution: Fraction | None = None,
) -> CoreCoupling:
    """Couple x ~ mu with a better x' ~ mu_prime, then reshuffle one commodity so all strictly gain.

    ``mu`` and ``mu_prime`` are one-column measures over the same type
    marginal; per type, ``mu_prime`` must dominate ``mu`` in the better-set
    order but not conversely, and the x' column must redistribute the
    endowments.  After coupling, pick the lowest-index commodity i with
    positive aggregate endowment (trying the next ones if needed) and the
    smallest n <= ``cap`` for which eps = mass{x' - e_i/n > x} is positive.
    That mass gives up 1/n of commodity i; the remaining mass beta receives
    the withheld total eps/n spread evenly, i.e. ``redistribution`` defaults
    to eps / (n * beta).  With beta = 0 the x'' column is x' itself.
    """
    if mu.width != 1 or mu_prime.width != 1:
        raise PreconditionError("core_coupling takes one-column measures")
    ta, tb = mu.type_marginal(), mu_prime.type_marginal()
    if ta != tb:
        raise PreconditionError("measures must share the type marginal")
    for prof in ta:
        if not is_parametric(prof.pref) or not is_weak_order(prof.pref):
            raise PreconditionError("strictly monotone utility preferences required")
    if mu_prime.column_integral(0) != mu_prime.endowment_integral():
        raise PreconditionError("the x' measure violates the resource identity")

    slices: dict[TypeProfile, tuple[dict, dict]] = {p: ({}, {}) for p in ta}
    for side, meas in enumerate((mu, mu_prime)):
        for p, (x,), m in meas.atoms:
            d = slices[p][side]
            d[x] = d.get(x, Fraction(0)) + m

    tau: list[tuple[TypeProfile, Bundle, Bundle, Fraction]] = []
    converse_fails = False
    for prof, (low, high) in slices.items():
        flow, viol = couple_slice(prof.pref, high, low)
        if viol is not None:
            raise PreconditionError("x' measure does not dominate the x measure")
        tau.extend((prof, x, xp, m) for (xp, x), m in flow.items())
        _, back = couple_slice(prof.pref, low, high)
        converse_fails = converse_fails or back is not None
    if not converse_fails:
        raise PreconditionError("dominance holds in both directions; no strict improvement to spread")

    l = len(next(iter(ta)).endowment)
    agg = [Fraction(0)] * l
    for p, m in ta.items():
        add_scaled(agg, m, p.endowment)
    total = sum(ta.values(), Fraction(0))

    choice = None
    for i in (h for h in range(l) if agg[h] > 0):
        for n in range(1, cap + 1):
            eps = Fraction(0)
            for prof, x, xp, m in tau:
                s = _shift(xp, i, Fraction(-1, n))
                if s is not None and strictly_prefers(prof.pref, s, x):
                    eps += m
            if eps > 0:
                choice = (i, n, eps)
                break
        if choice:
            break
    if choice is None:
        if not any(v > 0 for v in agg):
            raise PreconditionError("no commodity has positive aggregate endowment")
        raise PreconditionError(f"no n <= {cap} leaves a strictly improving mass")
    i, n, eps = choice
    beta = total - eps
    if beta == 0:
        factor = Fraction(0)
    else:
        factor = Fraction(redistribution) if redistribution is not None else eps / (n * beta)

    atoms = []
    for prof, x, xp, m in tau:
        s = _shift(xp, i, Fraction(-1, n))
        if beta == 0:
            xpp = xp
        elif s is not None and strictly_prefers(prof.pref, s, x):
            xpp = s
        else:
            xpp = _shift(xp, i, factor)
            if not strictly_prefers(prof.pref, xpp, x):
                raise PreconditionError(
                    f"adding {factor} of commodity {i} to {fmt_bundle(xp)} is not a strict gain over "
                    f"{fmt_bundle(x)}; preference is not strictly monotone there"
                )
        atoms.append((prof, (x, xp, xpp), m))
    return CoreCoupling(SubMeasure.from_atoms(atoms), i, n, eps, beta, factor)
