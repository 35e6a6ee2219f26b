"""The interval agent space [0, 1) with symbolic rational splitting.

Types occupy consecutive blocks whose lengths equal their masses.  Coalitions
and step allocations are finite unions of half-open rational intervals, so
every length, overlap and integral below is computed exactly.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence, Union

from .economy import DistributionalEconomy, PreconditionError, Reallocation, SubMeasure, TypeProfile
from .prefs import Bundle, fmt_bundle, strictly_prefers

ZERO, ONE = Fraction(0), Fraction(1)


class IndivisibilityError(PreconditionError):
    """An exact split was requested inside an indivisible block."""


@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if not (ZERO <= lo < hi <= ONE):
            raise ValueError(f"interval [{lo}, {hi}) is empty or leaves [0, 1)")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi})"


@dataclass(frozen=True)
class IntervalAgentSpace:
    """Blocks ``(profile, interval)`` partitioning [0, 1) in order.

    Blocks listed in ``indivisible`` stand for a single agent (an atom of the
    agent space): they can be taken whole or not at all.
    """

    blocks: tuple[tuple[TypeProfile, Interval], ...]
    indivisible: frozenset[int] = frozenset()

    def __post_init__(self):
        pos = ZERO
        for _, iv in self.blocks:
            if iv.lo != pos:
                raise ValueError("blocks must tile [0, 1) left to right")
            pos = iv.hi
        if pos != ONE:
            raise ValueError("blocks must cover [0, 1)")

    @property
    def starts(self) -> list[Fraction]:
        return [iv.lo for _, iv in self.blocks]

    def block_at(self, t: Fraction) -> int:
        return bisect_right(self.starts, t) - 1


@dataclass(frozen=True)
class Coalition:
    intervals: tuple[Interval, ...]

    @classmethod
    def of(cls, intervals: Iterable[Interval]) -> "Coalition":
        """Sorted, merged union; raises if the union has zero length."""
        merged: list[list[Fraction]] = []
        for iv in sorted(intervals):
            if merged and iv.lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], iv.hi)
            else:
                merged.append([iv.lo, iv.hi])
        if not merged:
            raise ValueError("a coalition needs positive measure")
        return cls(tuple(Interval(a, b) for a, b in merged))

    @property
    def measure(self) -> Fraction:
        return sum((iv.length for iv in self.intervals), ZERO)

    def overlap(self, lo: Fraction, hi: Fraction) -> Fraction:
        return sum((max(ZERO, min(hi, iv.hi) - max(lo, iv.lo)) for iv in self.intervals), ZERO)

    def contains(self, t: Fraction) -> bool:
        return any(iv.lo <= t < iv.hi for iv in self.intervals)


FULL = Coalition((Interval(ZERO, ONE),))


@dataclass(frozen=True)
class StepAllocation:
    """A step function [0, 1) -> X given by consecutive pieces."""

    pieces: tuple[tuple[Interval, Bundle], ...]

    def __post_init__(self):
        pos = ZERO
        for iv, _ in self.pieces:
            if iv.lo != pos:
                raise ValueError("pieces must tile [0, 1) left to right")
            pos = iv.hi
        if pos != ONE:
            raise ValueError("pieces must cover [0, 1)")

    def value_at(self, t: Fraction) -> Bundle:
        i = bisect_right([iv.lo for iv, _ in self.pieces], t) - 1
        return self.pieces[i][1]

    def integral(self) -> tuple[Fraction, ...]:
        acc = [ZERO] * len(self.pieces[0][1])
        for iv, b in self.pieces:
            for i, v in enumerate(b):
                acc[i] += iv.length * v
        return tuple(acc)


def _coalesce(pieces: list[tuple[Fraction, Fraction, Bundle]]) -> StepAllocation:
    out: list[list] = []
    for lo, hi, b in pieces:
        if out and out[-1][2] == b and out[-1][1] == lo:
            out[-1][1] = hi
        else:
            out.append([lo, hi, b])
    return StepAllocation(tuple((Interval(lo, hi), b) for lo, hi, b in out))


# --- economy <-> agent space ----------------------------------------------------


def realize_economy(E: DistributionalEconomy, indivisible: Iterable[int] = ()) -> IntervalAgentSpace:
    """Lay out the types left to right in input order, block length = mass."""
    blocks = []
    pos = ZERO
    for prof, m in E.types:
        blocks.append((prof, Interval(pos, pos + m)))
        pos += m
    return IntervalAgentSpace(tuple(blocks), frozenset(indivisible))


def endowment_allocation(A: IntervalAgentSpace) -> StepAllocation:
    return _coalesce([(iv.lo, iv.hi, p.endowment) for p, iv in A.blocks])


def step_from_reallocation(A: IntervalAgentSpace, t: Reallocation) -> StepAllocation:
    """Individualistic version of ``t``: within each block, bundles are left-packed."""
    pieces = []
    for k, (prof, iv) in enumerate(A.blocks):
        support = t.support(prof)
        if sum((m for _, m in support), ZERO) != iv.length:
            raise ValueError(f"block {k}: reallocation mass differs from block length")
        if len(support) > 1 and k in A.indivisible:
            raise IndivisibilityError(f"block {k} is indivisible but receives several bundles")
        pos = iv.lo
        for x, m in support:
            pieces.append((pos, pos + m, x))
            pos += m
    return _coalesce(pieces)


def restricted_distribution(
    A: IntervalAgentSpace,
    allocations: Sequence[StepAllocation],
    C: Coalition | None = None,
) -> SubMeasure:
    """Distribution of (type, f_1, ..., f_k) restricted to ``C``.

    Returns the measure B -> length({t in C : (type(t), f_1(t), ...) in B}).
    With ``C`` omitted the full space is used and the result is a probability
    measure.
    """
    C = FULL if C is None else C
    cuts = {ZERO, ONE}
    cuts.update(iv.lo for _, iv in A.blocks)
    for f in allocations:
        cuts.update(iv.lo for iv, _ in f.pieces)
    for iv in C.intervals:
        cuts.update((iv.lo, iv.hi))
    pts = sorted(cuts)
    block_starts = A.starts
    piece_starts = [[iv.lo for iv, _ in f.pieces] for f in allocations]
    acc: dict[tuple[TypeProfile, tuple[Bundle, ...]], Fraction] = {}
    for lo, hi in zip(pts, pts[1:]):
        if not C.contains(lo):
            continue
        prof = A.blocks[bisect_right(block_starts, lo) - 1][0]
        cols = tuple(
            f.pieces[bisect_right(starts, lo) - 1][1] for f, starts in zip(allocations, piece_starts)
        )
        key = (prof, cols)
        acc[key] = acc.get(key, ZERO) + (hi - lo)
    return SubMeasure(tuple((p, c, m) for (p, c), m in acc.items()))


def induced_economy(A: IntervalAgentSpace) -> DistributionalEconomy:
    dist = restricted_distribution(A, [])
    return DistributionalEconomy.build(((p, m) for p, _, m in dist.atoms))


# --- subpopulations ----------------------------------------------------------------


def represent_subpopulation(A: IntervalAgentSpace, sub: Sequence) -> Coalition:
    """Coalition whose type distribution is the given per-type sub-masses.

    Block k contributes its left subinterval of length ``sub[k]``, so for every
    set S of types the coalition meets the blocks of S in exactly
    sum(sub[k] for k in S).
    """
    if len(sub) != len(A.blocks):
        raise ValueError("one sub-mass per block required")
    sub = [Fraction(m) for m in sub]
    parts = []
    for k, ((_, iv), m) in enumerate(zip(A.blocks, sub)):
        if m < 0 or m > iv.length:
            raise PreconditionError(f"block {k}: sub-mass {m} outside [0, {iv.length}]")
        if m == 0:
            continue
        if k in A.indivisible and m != iv.length:
            raise IndivisibilityError(
                f"block {k} is a single agent; sub-mass {m} of {iv.length} has no exact coalition"
            )
        parts.append(Interval(iv.lo, iv.lo + m))
    if not parts:
        raise PreconditionError("sub-population has zero mass")
    return Coalition.of(parts)


# --- purification ------------------------------------------------------------------


class _OptOut:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "OPT_OUT"


OPT_OUT = _OptOut()

Outcome = Union[Bundle, _OptOut]
Mixture = Sequence[tuple[Outcome, object]]
# g(profile, current bundle or None, outcome) -> scalar or vector
Moment = Callable[[TypeProfile, "Bundle | None", Outcome], object]


@dataclass(frozen=True)
class Cell:
    profile: TypeProfile
    interval: Interval
    current: Bundle | None
    block: int


@dataclass(frozen=True)
class Purification:
    allocation: StepAllocation
    outcomes: tuple[tuple[Interval, Outcome], ...]
    coalition: Coalition | None
    moments: tuple[tuple[object, object], ...]  # (pure integral, mixed integral)

    @property
    def moments_preserved(self) -> bool:
        return all(a == b for a, b in self.moments)


def cells(A: IntervalAgentSpace, base: StepAllocation | None = None) -> list[Cell]:
    """Blocks, refined by the pieces of ``base`` when given."""
    if base is None:
        return [Cell(p, iv, None, k) for k, (p, iv) in enumerate(A.blocks)]
    cuts = sorted({iv.lo for _, iv in A.blocks} | {iv.lo for iv, _ in base.pieces} | {ONE})
    starts = A.starts
    out = []
    for lo, hi in zip(cuts, cuts[1:]):
        k = bisect_right(starts, lo) - 1
        out.append(Cell(A.blocks[k][0], Interval(lo, hi), base.value_at(lo), k))
    return out


def _as_vector(v) -> tuple[Fraction, ...]:
    if isinstance(v, (tuple, list)):
        return tuple(Fraction(c) for c in v)
    return (Fraction(v),)


def _moment_add(acc, w: Fraction, v):
    vec = _as_vector(v)
    if acc is None:
        acc = [ZERO] * len(vec)
    for i, c in enumerate(vec):
        acc[i] += w * c
    return acc


def purify(
    A: IntervalAgentSpace,
    mixed: Sequence[Mixture],
    moments: Sequence[Moment] = (),
    base: StepAllocation | None = None,
) -> Purification:
    """Replace per-cell mixtures by a pure step allocation.

    ``mixed[i]`` is a finite mixture over outcomes for the i-th cell (blocks,
    or blocks refined by ``base``).  Each cell is cut left to right into
    subintervals whose lengths are the mixture weights times the cell length.
    ``OPT_OUT`` pieces receive the agent's endowment and stay outside the
    returned coalition.  Because integrands depend on the agent only through
    its cell, every declared moment is preserved exactly; both sides are
    returned for inspection.
    """
    cs = cells(A, base)
    if len(mixed) != len(cs):
        raise ValueError(f"expected {len(cs)} mixtures, got {len(mixed)}")
    pieces: list[tuple[Fraction, Fraction, Bundle]] = []
    outcomes: list[tuple[Interval, Outcome]] = []
    members: list[Interval] = []
    pure_acc: list = [None] * len(moments)
    mixed_acc: list = [None] * len(moments)
    for i, (cell, mix) in enumerate(zip(cs, mixed)):
        mix = [(o, Fraction(w)) for o, w in mix if Fraction(w) != 0]
        if any(w < 0 for _, w in mix) or sum((w for _, w in mix), ZERO) != 1:
            raise PreconditionError(f"cell {i}: mixture weights must be nonnegative and sum to 1")
        if len(mix) > 1 and cell.block in A.indivisible:
            raise IndivisibilityError(f"cell {i} lies in an indivisible block and cannot be split")
        pos = cell.interval.lo
        L = cell.interval.length
        for o, w in mix:
            hi = pos + w * L
            iv = Interval(pos, hi)
            outcomes.append((iv, o))
            if o is OPT_OUT:
                pieces.append((pos, hi, cell.profile.endowment))
            else:
                pieces.append((pos, hi, tuple(o)))
                members.append(iv)
            for j, g in enumerate(moments):
                pure_acc[j] = _moment_add(pure_acc[j], iv.length, g(cell.profile, cell.current, o))
            pos = hi
        for j, g in enumerate(moments):
            for o, w in mix:
                mixed_acc[j] = _moment_add(mixed_acc[j], w * L, g(cell.profile, cell.current, o))
    coalition = Coalition.of(members) if members else None
    mom = tuple(
        (tuple(a) if a is not None else (), tuple(b) if b is not None else ())
        for a, b in zip(pure_acc, mixed_acc)
    )
    return Purification(_coalesce(pieces), tuple(outcomes), coalition, mom)


def realize_blocking(
    A: IntervalAgentSpace, t: StepAllocation, w: SubMeasure
) -> tuple[Coalition, StepAllocation]:
    """Individualistic coalition C and allocation f' realizing the witness ``w``.

    Each (type, x) piece of ``t`` is split in proportion to the witness:
    a share w(type, x, x') / length(type, x) of every such cell goes to x',
    the remainder keeps its endowment and stays out of C.  The restricted
    distribution of (t, f') on C then equals ``w`` atom for atom.
    """
    if w.width != 2:
        raise PreconditionError("witness atoms must carry (x, x') columns")
    for prof, (x, xp), m in w.atoms:
        if m <= 0:
            raise PreconditionError("witness masses must be positive")
        if not strictly_prefers(prof.pref, xp, x):
            raise PreconditionError(f"witness proposes {fmt_bundle(xp)} which is not better than {fmt_bundle(x)}")
    if w.column_integral(1) != w.endowment_integral():
        raise PreconditionError("witness violates the resource identity")

    cs = cells(A, t)
    avail: dict[tuple[TypeProfile, Bundle], Fraction] = {}
    for c in cs:
        key = (c.profile, c.current)
        avail[key] = avail.get(key, ZERO) + c.interval.length
    wanted: dict[tuple[TypeProfile, Bundle], list[tuple[Bundle, Fraction]]] = {}
    for prof, (x, xp), m in w.atoms:
        wanted.setdefault((prof, x), []).append((xp, m))
    for key, lst in wanted.items():
        total = sum((m for _, m in lst), ZERO)
        have = avail.get(key, ZERO)
        if total > have:
            raise PreconditionError(
                f"witness mass {total} at bundle {fmt_bundle(key[1])} exceeds available {have}"
            )
    mixtures = []
    for c in cs:
        lst = wanted.get((c.profile, c.current), [])
        have = avail[(c.profile, c.current)]
        mix = [(xp, m / have) for xp, m in lst]
        rest = 1 - sum((m for _, m in lst), ZERO) / have
        if rest:
            mix.append((OPT_OUT, rest))
        mixtures.append(mix)
    res = purify(A, mixtures, base=t)
    if res.coalition is None:
        raise PreconditionError("witness has zero mass")
    return res.coalition, res.allocation
