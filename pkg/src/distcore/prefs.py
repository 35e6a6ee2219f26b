"""Preference relations on the nonnegative orthant, evaluated exactly.

Bundles are tuples of ``Fraction``.  Parametric preferences (Cobb-Douglas,
linear, Leontief, CES) are compared through utility values that never leave
the rationals; explicit relations are given by a finite list of strict pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import lcm
from typing import Iterable, Sequence, Union

Bundle = tuple[Fraction, ...]


class DomainError(ValueError):
    """A bundle lies outside the domain of a preference."""


def as_bundle(coords: Iterable) -> Bundle:
    b = tuple(Fraction(c) for c in coords)
    if not b:
        raise DomainError("bundle needs at least one commodity")
    if any(c < 0 for c in b):
        raise DomainError(f"bundle {fmt_bundle(b)} has a negative coordinate")
    return b


def fmt_bundle(b: Sequence[Fraction]) -> str:
    return "(" + ", ".join(str(c) for c in b) + ")"


def _positive_weights(weights, name: str) -> tuple[Fraction, ...]:
    w = tuple(Fraction(v) for v in weights)
    if not w:
        raise ValueError(f"{name}: at least one weight required")
    if any(v <= 0 for v in w):
        raise ValueError(f"{name}: weights must be positive")
    return w


@dataclass(frozen=True)
class CobbDouglas:
    """u(x) = prod x_i ** w_i with positive weights summing to one."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        w = _positive_weights(self.weights, "CobbDouglas")
        if sum(w) != 1:
            raise ValueError("CobbDouglas: weights must sum to 1")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class Linear:
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _positive_weights(self.weights, "Linear"))


@dataclass(frozen=True)
class Leontief:
    """u(x) = min_i x_i / w_i."""

    weights: tuple[Fraction, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _positive_weights(self.weights, "Leontief"))


@dataclass(frozen=True)
class CES:
    """u(x) = (sum w_i x_i ** rho) ** (1/rho) with rational rho < 1, rho != 0."""

    weights: tuple[Fraction, ...]
    rho: Fraction

    def __post_init__(self):
        object.__setattr__(self, "weights", _positive_weights(self.weights, "CES"))
        rho = Fraction(self.rho)
        if rho >= 1 or rho == 0:
            raise ValueError("CES: rho must satisfy rho < 1 and rho != 0")
        object.__setattr__(self, "rho", rho)

    @property
    def elasticity(self) -> Fraction:
        return 1 / (1 - self.rho)


@dataclass(frozen=True)
class ExplicitStrict:
    """A strict relation listed pair by pair over a finite bundle set.

    ``pairs`` holds ``(x, y)`` meaning ``x`` is strictly preferred to ``y``.
    """

    bundles: tuple[Bundle, ...]
    pairs: frozenset[tuple[Bundle, Bundle]] = field(default_factory=frozenset)

    def __post_init__(self):
        bundles = tuple(as_bundle(b) for b in self.bundles)
        if len(set(bundles)) != len(bundles):
            raise ValueError("ExplicitStrict: duplicate bundles")
        pairs = frozenset((as_bundle(x), as_bundle(y)) for x, y in self.pairs)
        domain = set(bundles)
        for x, y in pairs:
            if x == y:
                raise ValueError(f"ExplicitStrict: reflexive pair at {fmt_bundle(x)}")
            if x not in domain or y not in domain:
                raise ValueError("ExplicitStrict: pair references a bundle outside the list")
        object.__setattr__(self, "bundles", bundles)
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def from_ranking(cls, ranked: Sequence[Sequence[Sequence]]) -> "ExplicitStrict":
        """Build the strict part of a weak order given as indifference classes, best first."""
        classes = [[as_bundle(b) for b in cls_] for cls_ in ranked]
        bundles = tuple(b for c in classes for b in c)
        pairs = frozenset(
            (x, y)
            for i, ci in enumerate(classes)
            for cj in classes[i + 1 :]
            for x in ci
            for y in cj
        )
        return cls(bundles, pairs)


Preference = Union[CobbDouglas, Linear, Leontief, CES, ExplicitStrict]
PARAMETRIC = (CobbDouglas, Linear, Leontief, CES)


def is_parametric(p: Preference) -> bool:
    return isinstance(p, PARAMETRIC)


def commodity_count(p: Preference) -> int | None:
    if is_parametric(p):
        return len(p.weights)
    return len(p.bundles[0]) if p.bundles else None


# --- exact utility comparison ----------------------------------------------


def _check_dim(p, x: Bundle) -> None:
    if len(x) != len(p.weights):
        raise DomainError(f"bundle {fmt_bundle(x)} has wrong dimension for {type(p).__name__}")


@lru_cache(maxsize=1 << 16)
def _cd_exponents(weights: tuple[Fraction, ...]) -> tuple[int, ...]:
    d = lcm(*(w.denominator for w in weights))
    return tuple(int(w * d) for w in weights)


@lru_cache(maxsize=1 << 18)
def _cd_key(weights: tuple[Fraction, ...], x: Bundle) -> Fraction:
    # u(x) ** D with D the common weight denominator; a monotone transform of u
    key = Fraction(1)
    for xi, a in zip(x, _cd_exponents(weights)):
        if xi == 0:
            return Fraction(0)
        key *= xi**a
    return key


def iroot(n: int, k: int) -> int:
    """Largest integer r with r ** k <= n, for n >= 0."""
    if n < 0:
        raise ValueError("iroot of a negative number")
    if n < 2:
        return n
    r = 1 << -(-n.bit_length() // k)
    while True:
        s = ((k - 1) * r + n // r ** (k - 1)) // k
        if s >= r:
            break
        r = s
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def _root_bounds(q: Fraction, b: int, bits: int) -> tuple[Fraction, Fraction]:
    """Rational bounds lo <= q ** (1/b) <= hi, exact (lo == hi) for perfect powers."""
    num, den = q.numerator, q.denominator
    big = num * den ** (b - 1) << (bits * b)
    r = iroot(big, b)
    scale = den << bits
    if r**b == big:
        v = Fraction(r, scale)
        return v, v
    return Fraction(r, scale), Fraction(r + 1, scale)


CES_PRECISION_BITS = (64, 256, 1024)


def _sign_of_radical_sum(terms: list[tuple[Fraction, Fraction]], b: int) -> int:
    """Sign of sum(c * r ** (1/b)) for positive rationals r.

    Bounds are refined up to 2**-1024 relative width; sums that still straddle
    zero are reported as zero (treated as indifference).
    """
    merged: dict[Fraction, Fraction] = {}
    for c, r in terms:
        if c and r:
            merged[r] = merged.get(r, Fraction(0)) + c
    terms = [(c, r) for r, c in merged.items() if c]
    if not terms:
        return 0
    for bits in CES_PRECISION_BITS:
        lo = hi = Fraction(0)
        for c, r in terms:
            a, z = _root_bounds(r, b, bits)
            if c > 0:
                lo += c * a
                hi += c * z
            else:
                lo += c * z
                hi += c * a
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if lo == hi == 0:
            return 0
    return 0


def _ces_compare(p: CES, x: Bundle, y: Bundle) -> int:
    a, b = p.rho.numerator, p.rho.denominator

    def powered(v: Bundle) -> list[tuple[Fraction, Fraction]]:
        return [(w, vi**a) for w, vi in zip(p.weights, v) if vi != 0]

    if p.rho < 0:
        x_zero = any(v == 0 for v in x)
        y_zero = any(v == 0 for v in y)
        if x_zero or y_zero:
            return (not x_zero) - (not y_zero)
        # u is decreasing in S when rho < 0
        terms = [(-c, r) for c, r in powered(x)] + powered(y)
    else:
        terms = powered(x) + [(-c, r) for c, r in powered(y)]
    if b == 1:
        return (lambda s: (s > 0) - (s < 0))(sum((c * r for c, r in terms), Fraction(0)))
    return _sign_of_radical_sum(terms, b)


def compare(p: Preference, x: Bundle, y: Bundle) -> int:
    """Sign of u(x) - u(y) for a parametric preference."""
    _check_dim(p, x)
    _check_dim(p, y)
    if isinstance(p, CobbDouglas):
        kx, ky = _cd_key(p.weights, x), _cd_key(p.weights, y)
    elif isinstance(p, Linear):
        kx = sum((w * v for w, v in zip(p.weights, x)), Fraction(0))
        ky = sum((w * v for w, v in zip(p.weights, y)), Fraction(0))
    elif isinstance(p, Leontief):
        kx = min(v / w for w, v in zip(p.weights, x))
        ky = min(v / w for w, v in zip(p.weights, y))
    elif isinstance(p, CES):
        return _ces_compare(p, x, y)
    else:
        raise TypeError(f"compare needs a parametric preference, got {type(p).__name__}")
    return (kx > ky) - (kx < ky)


def strictly_prefers(p: Preference, x: Bundle, y: Bundle) -> bool:
    """True iff ``x`` is strictly preferred to ``y`` under ``p``."""
    if isinstance(p, ExplicitStrict):
        domain = p.bundles
        if x not in domain or y not in domain:
            missing = x if x not in domain else y
            raise DomainError(f"bundle {fmt_bundle(missing)} outside the relation's bundle list")
        return (x, y) in p.pairs
    return compare(p, x, y) > 0


def weakly_prefers(p: Preference, x: Bundle, y: Bundle) -> bool:
    return not strictly_prefers(p, y, x)


def better_set(p: Preference, x: Bundle, grid: Sequence[Bundle]) -> list[Bundle]:
    """Grid bundles weakly preferred to ``x``, in grid order."""
    if not grid:
        raise ValueError("better_set needs a nonempty grid")
    return [y for y in grid if weakly_prefers(p, y, x)]


# --- axioms -----------------------------------------------------------------


@dataclass(frozen=True)
class AxiomReport:
    irreflexive: bool
    asymmetric: bool
    negatively_transitive: bool
    monotone: bool  # x >> y  implies x > y
    strictly_monotone: bool  # x >= y, x != y  implies x > y
    violations: tuple[str, ...] = ()

    @property
    def weak_order(self) -> bool:
        """Membership in the asymmetric, negatively transitive class."""
        return self.irreflexive and self.asymmetric and self.negatively_transitive


def check_axioms(p: Preference, grid: Sequence[Bundle], max_messages: int = 20) -> AxiomReport:
    """Exhaustive axiom scan over ``grid``; failures are reported, not raised."""
    if not grid:
        raise ValueError("check_axioms needs a nonempty grid")
    grid = list(dict.fromkeys(grid))
    n = len(grid)
    rel = [[strictly_prefers(p, grid[i], grid[j]) for j in range(n)] for i in range(n)]
    msgs: list[str] = []

    def note(msg: str) -> None:
        if len(msgs) < max_messages:
            msgs.append(msg)

    irr = True
    for i in range(n):
        if rel[i][i]:
            irr = False
            note(f"reflexive at {fmt_bundle(grid[i])}")
    asym = True
    for i, j in product(range(n), repeat=2):
        if i < j and rel[i][j] and rel[j][i]:
            asym = False
            note(f"symmetric strict pair {fmt_bundle(grid[i])}, {fmt_bundle(grid[j])}")
    negtr = True
    for i, k in product(range(n), repeat=2):
        if not rel[i][k]:
            continue
        for j in range(n):
            if not rel[i][j] and not rel[j][k]:
                negtr = False
                note(
                    "negative transitivity fails: "
                    f"{fmt_bundle(grid[i])} > {fmt_bundle(grid[k])} but not via {fmt_bundle(grid[j])}"
                )
    mono = smono = True
    for i, j in product(range(n), repeat=2):
        x, y = grid[i], grid[j]
        if i == j or len(x) != len(y):
            continue
        if all(a >= b for a, b in zip(x, y)) and not rel[i][j]:
            if all(a > b for a, b in zip(x, y)):
                mono = False
                note(f"not monotone: {fmt_bundle(x)} >> {fmt_bundle(y)}")
            smono = False
    return AxiomReport(irr, asym, negtr, mono, smono, tuple(msgs))


@lru_cache(maxsize=1024)
def is_weak_order(p: Preference) -> bool:
    """Asymmetric and negatively transitive (automatic for utility-based kinds)."""
    if is_parametric(p):
        return True
    return check_axioms(p, p.bundles).weak_order if p.bundles else True
