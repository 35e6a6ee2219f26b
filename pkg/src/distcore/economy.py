"""Finitely supported distributional economies, reallocations and sub-measures."""

from __future__ import annotations

import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .prefs import Bundle, Preference, as_bundle, commodity_count, fmt_bundle, is_parametric


class PreconditionError(ValueError):
    """An operation's documented precondition does not hold."""


@dataclass(frozen=True)
class TypeProfile:
    """A trader characteristic: preference and endowment."""

    pref: Preference
    endowment: Bundle

    def __post_init__(self):
        object.__setattr__(self, "endowment", as_bundle(self.endowment))


@dataclass(frozen=True)
class ValidationReport:
    checks: dict[str, bool]
    issues: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def __bool__(self) -> bool:
        return self.ok


def _zero(l: int) -> list[Fraction]:
    return [Fraction(0)] * l


def add_scaled(acc: list[Fraction], mass: Fraction, b: Sequence[Fraction]) -> None:
    for i, v in enumerate(b):
        if v:
            acc[i] += mass * v


@dataclass(frozen=True)
class DistributionalEconomy:
    """A probability measure with finite support on (preference, endowment) types."""

    types: tuple[tuple[TypeProfile, Fraction], ...]
    l: int

    @classmethod
    def build(cls, entries: Iterable[tuple[TypeProfile, object]], l: int | None = None) -> "DistributionalEconomy":
        """Construct from (profile, mass) pairs, merging repeated profiles.

        Repeated profiles cannot be told apart by a distribution, so their
        masses are summed and a ``UserWarning`` is issued.
        """
        merged: dict[TypeProfile, Fraction] = {}
        for prof, mass in entries:
            mass = Fraction(mass)
            if prof in merged:
                warnings.warn(
                    f"duplicate type profile with endowment {fmt_bundle(prof.endowment)} merged",
                    UserWarning,
                    stacklevel=2,
                )
                merged[prof] += mass
            else:
                merged[prof] = mass
        if l is None:
            if not merged:
                raise ValueError("cannot infer commodity count of an empty economy")
            l = len(next(iter(merged)).endowment)
        return cls(tuple(merged.items()), l)

    @property
    def profiles(self) -> list[TypeProfile]:
        return [p for p, _ in self.types]

    @property
    def masses(self) -> list[Fraction]:
        return [m for _, m in self.types]

    def mass_of(self, prof: TypeProfile) -> Fraction:
        for p, m in self.types:
            if p == prof:
                return m
        raise KeyError("profile not in economy")

    def index_of(self, prof: TypeProfile) -> int:
        for k, (p, _) in enumerate(self.types):
            if p == prof:
                return k
        raise KeyError("profile not in economy")

    def preference_marginal(self) -> dict[Preference, Fraction]:
        out: dict[Preference, Fraction] = defaultdict(Fraction)
        for p, m in self.types:
            out[p.pref] += m
        return dict(out)

    @property
    def all_parametric(self) -> bool:
        return all(is_parametric(p.pref) for p in self.profiles)


@dataclass(frozen=True)
class Reallocation:
    """Finite measure on (type, bundle).

    The same container serves as a distributional allocation: the endowment
    rides along inside the type profile, and the preference/bundle view is
    obtained by grouping on ``profile.pref``.
    """

    atoms: tuple[tuple[TypeProfile, Bundle, Fraction], ...]

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[TypeProfile, Iterable, object]]) -> "Reallocation":
        merged: dict[tuple[TypeProfile, Bundle], Fraction] = {}
        for prof, x, mass in atoms:
            key = (prof, as_bundle(x))
            merged[key] = merged.get(key, Fraction(0)) + Fraction(mass)
        return cls(tuple((p, x, m) for (p, x), m in merged.items() if m))

    def type_marginal(self) -> dict[TypeProfile, Fraction]:
        out: dict[TypeProfile, Fraction] = defaultdict(Fraction)
        for prof, _, m in self.atoms:
            out[prof] += m
        return dict(out)

    def support(self, prof: TypeProfile) -> list[tuple[Bundle, Fraction]]:
        return [(x, m) for p, x, m in self.atoms if p == prof]

    def bundles(self) -> list[Bundle]:
        return list(dict.fromkeys(x for _, x, _ in self.atoms))

    def consumption(self) -> list[Fraction]:
        l = len(self.atoms[0][1]) if self.atoms else 0
        acc = _zero(l)
        for _, x, m in self.atoms:
            add_scaled(acc, m, x)
        return acc

    def by_preference(self) -> dict[Preference, dict[Bundle, Fraction]]:
        """Joint masses on (preference, bundle)."""
        out: dict[Preference, dict[Bundle, Fraction]] = {}
        for prof, x, m in self.atoms:
            slot = out.setdefault(prof.pref, {})
            slot[x] = slot.get(x, Fraction(0)) + m
        return out


DistributionalAllocation = Reallocation


def autarky(E: DistributionalEconomy) -> Reallocation:
    return Reallocation(tuple((p, p.endowment, m) for p, m in E.types))


def assign(E: DistributionalEconomy, bundles: Sequence[Iterable]) -> Reallocation:
    """Each type k receives ``bundles[k]`` with its full mass."""
    if len(bundles) != len(E.types):
        raise ValueError("one bundle per type required")
    return Reallocation.from_atoms((p, x, m) for (p, m), x in zip(E.types, bundles))


@dataclass(frozen=True)
class SubMeasure:
    """Finite, not necessarily normalized, measure on type x X^k.

    Each atom is ``(profile, (x_1, ..., x_k), mass)``.  Blocking witnesses use
    k = 2 (current bundle, proposed bundle).
    """

    atoms: tuple[tuple[TypeProfile, tuple[Bundle, ...], Fraction], ...]
    scale: Fraction = field(default=Fraction(1), compare=False)

    @classmethod
    def from_atoms(cls, atoms: Iterable[tuple[TypeProfile, Sequence[Iterable], object]]) -> "SubMeasure":
        merged: dict[tuple[TypeProfile, tuple[Bundle, ...]], Fraction] = {}
        for prof, cols, mass in atoms:
            key = (prof, tuple(as_bundle(c) for c in cols))
            merged[key] = merged.get(key, Fraction(0)) + Fraction(mass)
        return cls(tuple((p, c, m) for (p, c), m in merged.items() if m))

    @property
    def total_mass(self) -> Fraction:
        return sum((m for *_, m in self.atoms), Fraction(0))

    @property
    def width(self) -> int:
        return len(self.atoms[0][1]) if self.atoms else 0

    def as_dict(self) -> dict[tuple[TypeProfile, tuple[Bundle, ...]], Fraction]:
        out: dict = {}
        for p, c, m in self.atoms:
            out[(p, c)] = out.get((p, c), Fraction(0)) + m
        return out

    def marginal(self, columns: Sequence[int]) -> "SubMeasure":
        return SubMeasure.from_atoms((p, [c[i] for i in columns], m) for p, c, m in self.atoms)

    def type_marginal(self) -> dict[TypeProfile, Fraction]:
        out: dict[TypeProfile, Fraction] = defaultdict(Fraction)
        for p, _, m in self.atoms:
            out[p] += m
        return dict(out)

    def column_integral(self, col: int) -> list[Fraction]:
        acc = _zero(len(self.atoms[0][1][col]) if self.atoms else 0)
        for _, c, m in self.atoms:
            add_scaled(acc, m, c[col])
        return acc

    def endowment_integral(self) -> list[Fraction]:
        acc = _zero(len(self.atoms[0][0].endowment) if self.atoms else 0)
        for p, _, m in self.atoms:
            add_scaled(acc, m, p.endowment)
        return acc

    def scaled(self, factor) -> "SubMeasure":
        factor = Fraction(factor)
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return SubMeasure(tuple((p, c, m * factor) for p, c, m in self.atoms), self.scale * factor)

    def normalized(self) -> "SubMeasure":
        """Rescale to total mass one; ``.scale`` records the cumulative factor."""
        total = self.total_mass
        if total <= 0:
            raise ValueError("cannot normalize a zero measure")
        return self.scaled(1 / total)


# --- validation ---------------------------------------------------------------


def validate_economy(E: DistributionalEconomy) -> ValidationReport:
    issues: list[str] = []
    total = sum(E.masses, Fraction(0))
    mass_sum = total == 1
    if not mass_sum:
        issues.append(f"masses sum to {total}, not 1")
    positive = all(m > 0 for m in E.masses)
    if not positive:
        issues.append("type masses must be positive")
    distinct = len(set(E.profiles)) == len(E.profiles)
    if not distinct:
        issues.append("type profiles are not pairwise distinct")
    nonneg = all(all(v >= 0 for v in p.endowment) for p in E.profiles)
    if not nonneg:
        issues.append("negative endowment coordinate")
    dims = E.l >= 1 and all(len(p.endowment) == E.l for p in E.profiles)
    for p in E.profiles:
        n = commodity_count(p.pref)
        if n is not None and n != E.l:
            dims = False
    if not dims:
        issues.append(f"dimension mismatch: economy declares l={E.l}")
    nonempty = bool(E.types)
    if not nonempty:
        issues.append("economy has no types")
    return ValidationReport(
        {
            "nonempty": nonempty,
            "mass_sum": mass_sum,
            "positive_masses": positive,
            "distinct": distinct,
            "nonnegative": nonneg,
            "dimensions": dims,
        },
        tuple(issues),
    )


def validate_allocation(E: DistributionalEconomy, a: Reallocation) -> ValidationReport:
    """Type marginal equals the economy and aggregate consumption equals aggregate endowment."""
    issues: list[str] = []
    known = set(E.profiles)
    in_economy = all(p in known for p, _, _ in a.atoms)
    if not in_economy:
        issues.append("allocation references a type outside the economy")
    positive = all(m > 0 for *_, m in a.atoms)
    if not positive:
        issues.append("atom masses must be positive")
    dims = all(len(x) == E.l for _, x, _ in a.atoms)
    if not dims:
        issues.append("bundle dimension mismatch")
    marg = a.type_marginal()
    marginal_ok = True
    for prof, m in E.types:
        got = marg.get(prof, Fraction(0))
        if got != m:
            marginal_ok = False
            issues.append(
                f"type {E.index_of(prof)}: allocated mass {got} differs from type mass {m}"
            )
    balance = False
    if dims:
        cons = a.consumption() if a.atoms else _zero(E.l)
        endow = aggregate_endowment(E)
        balance = list(cons) == list(endow)
        if not balance:
            issues.append(
                f"resource balance fails: consumption {fmt_bundle(cons)} vs endowment {fmt_bundle(endow)}"
            )
    return ValidationReport(
        {
            "in_economy": in_economy,
            "positive_masses": positive,
            "dimensions": dims,
            "marginal": marginal_ok and in_economy,
            "resource_balance": balance,
        },
        tuple(issues),
    )


def aggregate_endowment(E: DistributionalEconomy) -> Bundle:
    acc = _zero(E.l)
    for p, m in E.types:
        add_scaled(acc, m, p.endowment)
    return tuple(acc)


def strictly_positive(b: Sequence[Fraction]) -> bool:
    return len(b) > 0 and all(v > 0 for v in b)
