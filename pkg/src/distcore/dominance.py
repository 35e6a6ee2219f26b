"""Pareto comparisons, the distributional dominance order and Strassen couplings.

Finite-support lemma used by ``dominates_D``: for a weak order, the
better-set mass ``g(B(x))`` of a finitely supported distribution depends on
``x`` only through the set of support points weakly above ``x``.  Every
such set is either empty (both masses vanish) or equals the support-set
above the worst support point ``s`` with ``s`` weakly above ``x``.  Checking
``x`` over the union of both supports therefore covers every ``x`` in X.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .economy import DistributionalEconomy, PreconditionError, Reallocation, SubMeasure
from .optim import EQ, FlowNetwork, LinearProgram, lp_solve, max_flow
from .prefs import (
    Bundle,
    ExplicitStrict,
    Preference,
    as_bundle,
    is_weak_order,
    strictly_prefers,
    weakly_prefers,
)


@dataclass(frozen=True)
class JointAllocationMeasure:
    """Measure on preference x X x X'; atoms are ``(pref, x, x', mass)``."""

    atoms: tuple[tuple[Preference, Bundle, Bundle, Fraction], ...]

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[Preference, Iterable, Iterable, object]]) -> "JointAllocationMeasure":
        merged: dict = {}
        for p, x, xp, m in atoms:
            key = (p, as_bundle(x), as_bundle(xp))
            merged[key] = merged.get(key, Fraction(0)) + Fraction(m)
        return cls(tuple((p, x, xp, m) for (p, x, xp), m in merged.items() if m))

    @property
    def total_mass(self) -> Fraction:
        return sum((a[3] for a in self.atoms), Fraction(0))

    def marginal(self, column: int) -> dict[Preference, dict[Bundle, Fraction]]:
        """column 0: the (pref, x) marginal; column 1: the (pref, x') marginal."""
        out: dict[Preference, dict[Bundle, Fraction]] = {}
        for p, x, xp, m in self.atoms:
            b = x if column == 0 else xp
            slot = out.setdefault(p, {})
            slot[b] = slot.get(b, Fraction(0)) + m
        return out


@dataclass(frozen=True)
class ParetoComparison:
    f_dominates: bool  # f >=_P f' : no mass where x' > x
    f_prime_dominates: bool
    mass_prime_better: Fraction
    mass_better: Fraction

    @property
    def verdict(self) -> str:
        if self.f_dominates and self.f_prime_dominates:
            return "both"
        if self.f_dominates:
            return "f>=f'"
        if self.f_prime_dominates:
            return "f'>=f"
        return "neither"


def pareto_compare_joint(j: JointAllocationMeasure) -> ParetoComparison:
    """Pareto ranking of f and f' read off the joint distribution of (c, f, f')."""
    up = down = Fraction(0)
    for p, x, xp, m in j.atoms:
        if strictly_prefers(p, xp, x):
            up += m
        if strictly_prefers(p, x, xp):
            down += m
    return ParetoComparison(up == 0, down == 0, up, down)


@dataclass(frozen=True)
class Conditional:
    mass: Fraction
    dist: dict[Bundle, Fraction]


ConditionalFamily = dict


def conditionals(a: Reallocation) -> dict[Preference, Conditional]:
    """Per-preference conditional bundle distributions, normalized exactly."""
    out = {}
    for p, slot in a.by_preference().items():
        total = sum(slot.values(), Fraction(0))
        out[p] = Conditional(total, {x: m / total for x, m in slot.items()})
    return out


def _require_same_marginal(a: Reallocation, b: Reallocation) -> None:
    ma = {p: c.mass for p, c in conditionals(a).items()}
    mb = {p: c.mass for p, c in conditionals(b).items()}
    if ma != mb:
        raise PreconditionError("allocations have different preference marginals")


def _require_weak_orders(prefs: Iterable[Preference]) -> None:
    for p in prefs:
        if not is_weak_order(p):
            raise PreconditionError(
                "dominance comparisons need asymmetric, negatively transitive preferences"
            )


def better_mass(p: Preference, dist: dict[Bundle, Fraction], x: Bundle) -> Fraction:
    return sum((m for y, m in dist.items() if weakly_prefers(p, y, x)), Fraction(0))


@dataclass(frozen=True)
class Violation:
    pref: Preference
    bundle: Bundle
    mass: Fraction  # better-set mass under the first allocation
    mass_other: Fraction  # ... and under the second


@dataclass(frozen=True)
class DominanceResult:
    holds: bool
    violations: tuple[Violation, ...]

    def __bool__(self) -> bool:
        return self.holds


def dominates_D(a: Reallocation, b: Reallocation) -> DominanceResult:
    """Whether ``a`` dominates ``b`` in the better-set (stochastic dominance) order."""
    _require_same_marginal(a, b)
    ca, cb = conditionals(a), conditionals(b)
    _require_weak_orders(ca)
    viol = []
    for p, cond in ca.items():
        other = cb[p]
        tests = list(dict.fromkeys(list(cond.dist) + list(other.dist)))
        for x in tests:
            ma, mb = better_mass(p, cond.dist, x), better_mass(p, other.dist, x)
            if ma < mb:
                viol.append(Violation(p, x, ma, mb))
    return DominanceResult(not viol, tuple(viol))


@dataclass(frozen=True)
class CouplingResult:
    coupling: JointAllocationMeasure | None
    certificate: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return self.coupling is not None


def _worst(p: Preference, ys: Sequence[Bundle]) -> Bundle:
    for y in ys:
        if not any(strictly_prefers(p, y, z) for z in ys):
            return y
    raise AssertionError("no minimal element in a weak order")


def couple_slice(
    p: Preference, top: dict[Bundle, Fraction], bottom: dict[Bundle, Fraction]
) -> tuple[dict[tuple[Bundle, Bundle], Fraction] | None, Violation | None]:
    """Transport ``top`` onto ``bottom`` along pairs (x, x') with x weakly above x'.

    Masses may be unnormalized but must have equal totals.
    """
    edges = tuple((x, y) for x in top for y in bottom if not strictly_prefers(p, y, x))
    res = max_flow(FlowNetwork(top, bottom, edges))
    if res.saturates(FlowNetwork(top, bottom, edges)):
        return res.flow, None
    # sinks cut off from the source form a Hall violator Y; its admissible
    # sources are the better set of Y's worst element
    cut_off = [y for y in bottom if y not in res.source_side_sinks]
    y = _worst(p, cut_off)
    total = sum(top.values(), Fraction(0))
    m_top, m_bot = better_mass(p, top, y) / total, better_mass(p, bottom, y) / total
    if not m_top < m_bot:
        raise AssertionError("min cut did not yield a better-set violation")
    return None, Violation(p, y, m_top, m_bot)


def strassen_coupling(a: Reallocation, b: Reallocation) -> CouplingResult:
    """Coupling of ``a`` and ``b`` with zero mass where the ``b`` bundle is strictly better.

    Each preference slice is a bipartite transport problem solved by exact
    max-flow.  Failure returns the better-set violations read off the min cut.
    """
    _require_same_marginal(a, b)
    ja, jb = a.by_preference(), b.by_preference()
    _require_weak_orders(ja)
    atoms = []
    cert = []
    for p, top in ja.items():
        flow, viol = couple_slice(p, top, jb[p])
        if viol is not None:
            cert.append(viol)
            continue
        atoms.extend((p, x, y, m) for (x, y), m in flow.items())
    if cert:
        return CouplingResult(None, tuple(cert))
    return CouplingResult(JointAllocationMeasure.from_atoms(atoms))


def coupling_marginals_match(j: JointAllocationMeasure, a: Reallocation, b: Reallocation) -> bool:
    return j.marginal(0) == a.by_preference() and j.marginal(1) == b.by_preference()


# --- Pareto improvement search ------------------------------------------------


@dataclass(frozen=True)
class ParetoImprovement:
    measure: SubMeasure  # columns (x, x')
    improving_mass: Fraction


def _grid_for(p: Preference, grid: Sequence[Bundle]) -> list[Bundle]:
    if isinstance(p, ExplicitStrict):
        dom = set(p.bundles)
        return [g for g in grid if g in dom]
    return list(grid)


def find_pareto_improvement(
    E: DistributionalEconomy, a: Reallocation, grid: Sequence[Bundle]
) -> ParetoImprovement | None:
    """Search ``grid`` for a resource-neutral redistribution nobody dislikes and some strictly like.

    LP over m(type, x, x') >= 0: the (type, x) marginal equals ``a``; no mass
    on x > x'; sum m (x' - x) = 0; maximize the mass on x' > x.  Sound, and
    complete relative to ``grid``.
    """
    if not grid:
        raise PreconditionError("grid must be nonempty")
    grid = list(dict.fromkeys(as_bundle(g) for g in grid))
    gset = set(grid)
    needed = set(a.bundles()) | {p.endowment for p in E.profiles}
    if not needed <= gset:
        raise PreconditionError("grid must contain every support bundle and endowment")

    cols: list[tuple[int, Bundle, bool]] = []
    for i, (prof, x, _) in enumerate(a.atoms):
        for xp in _grid_for(prof.pref, grid):
            if strictly_prefers(prof.pref, x, xp):
                continue
            cols.append((i, xp, strictly_prefers(prof.pref, xp, x)))
    lp = LinearProgram.zeros(len(cols))
    lp.objective = [Fraction(1) if imp else Fraction(0) for _, _, imp in cols]
    for i, (_, _, m) in enumerate(a.atoms):
        lp.add_sparse({j: 1 for j, c in enumerate(cols) if c[0] == i}, EQ, m)
    for h in range(E.l):
        lp.add_sparse({j: xp[h] - a.atoms[i][1][h] for j, (i, xp, _) in enumerate(cols)}, EQ, 0)
    res = lp_solve(lp)
    if res.status != "optimal" or res.value <= 0:
        return None
    atoms = [
        (a.atoms[i][0], (a.atoms[i][1], xp), v) for (i, xp, _), v in zip(cols, res.x) if v
    ]
    return ParetoImprovement(SubMeasure.from_atoms(atoms), res.value)
