"""Finite candidate-bundle grids for blocking and Pareto searches.

A blocking LP only sees the bundles of its grid, so every core verdict is
relative to the grid.  When the LP reports no blocking, the multipliers of its
resource rows form a price p with p.(x' - e) >= 1 for every improving grid
bundle x' of every atom; ``refine_grid`` uses such a price to add, per atom,
the cheapest strictly improving bundle (a rational rounding of the Hicksian
demand), which is exactly the column that could break the certificate.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .economy import Reallocation, add_scaled
from .prefs import CES, Bundle, CobbDouglas, ExplicitStrict, Leontief, Linear, Preference, as_bundle, strictly_prefers

DEFAULT_BLENDS = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


def _mean_endowment(t: Reallocation) -> list[Fraction]:
    acc = [Fraction(0)] * len(t.atoms[0][1])
    total = Fraction(0)
    for prof, _, m in t.atoms:
        add_scaled(acc, m, prof.endowment)
        total += m
    return [v / total for v in acc]


def blend(x: Bundle, y: Bundle, s: Fraction) -> Bundle:
    return tuple((1 - s) * a + s * b for a, b in zip(x, y))


def base_points(t: Reallocation, n: int = 4, reach: int = 2) -> list[Bundle]:
    """Supports, endowments and the rescalings (k/n) * mean endowment for k <= reach * n."""
    agg = _mean_endowment(t)
    pts = list(t.bundles()) + [p.endowment for p, _, _ in t.atoms]
    pts += [tuple(Fraction(k, n) * v for v in agg) for k in range(1, reach * n + 1)]
    return list(dict.fromkeys(pts))


def default_blocking_grid(
    t: Reallocation,
    n: int = 4,
    blends: Sequence[Fraction] = DEFAULT_BLENDS,
    reach: int = 2,
    supporting: bool = True,
) -> list[Bundle]:
    """Base points, their pairwise blends, unit-commodity steps and supporting-price points.

    The unit steps (a support plus the mean endowment of one commodity) keep
    every improving set reaching in each coordinate direction.  With
    ``supporting`` the grid also holds, for the gradient price of each atom,
    every atom's cheapest strict improvement at that price: a perturbed
    equilibrium keeps the old price as the gradient of its untouched atoms,
    and at that price the losing atom can improve for less than its wealth.
    """
    base = base_points(t, n, reach)
    pts = list(base)
    for x, y in combinations(base, 2):
        pts.extend(blend(x, y, Fraction(s)) for s in blends)
    agg = _mean_endowment(t)
    for x in t.bundles():
        for h, v in enumerate(agg):
            pts.append(x[:h] + (x[h] + v,) + x[h + 1 :])
    if supporting:
        pts.extend(supporting_points(t))
    return list(dict.fromkeys(pts))


def pareto_grid(t: Reallocation, delta: Fraction = Fraction(1, 8)) -> list[Bundle]:
    """Supports, endowments, their pairwise midpoints and coordinate steps of +-delta (kept nonnegative)."""
    pts = list(dict.fromkeys(list(t.bundles()) + [p.endowment for p, _, _ in t.atoms]))
    out = list(pts) + [blend(x, y, Fraction(1, 2)) for x, y in combinations(pts, 2)]
    for x in pts:
        for h in range(len(x)):
            for d in (delta, -delta):
                v = x[h] + d
                if v >= 0:
                    out.append(x[:h] + (v,) + x[h + 1 :])
    return list(dict.fromkeys(out))


# --- certificate-guided refinement ------------------------------------------------------


def float_utility(pref: Preference, x: Sequence) -> float:
    xs = [float(v) for v in x]
    w = [float(v) for v in pref.weights]
    if isinstance(pref, CobbDouglas):
        if any(v == 0 for v in xs):
            return 0.0
        return math.exp(sum(a * math.log(v) for a, v in zip(w, xs)))
    if isinstance(pref, Linear):
        return sum(a * v for a, v in zip(w, xs))
    if isinstance(pref, Leontief):
        return min(v / a for a, v in zip(w, xs))
    rho = float(pref.rho)
    if rho < 0 and any(v == 0 for v in xs):
        return 0.0
    return sum(a * v**rho for a, v in zip(w, xs)) ** (1 / rho)


def _unit_demand(pref: Preference, p: list[float]) -> list[float]:
    """Marshallian demand at wealth one (all parametric kinds are degree-one homogeneous)."""
    w = [float(v) for v in pref.weights]
    if isinstance(pref, CobbDouglas):
        return [a / q for a, q in zip(w, p)]
    if isinstance(pref, Linear):
        r = [a / q for a, q in zip(w, p)]
        i = r.index(max(r))
        return [1 / p[i] if h == i else 0.0 for h in range(len(p))]
    if isinstance(pref, Leontief):
        s = 1 / sum(a * q for a, q in zip(w, p))
        return [s * a for a in w]
    sig = float(pref.elasticity)
    den = sum(a**sig * q ** (1 - sig) for a, q in zip(w, p))
    return [(a / q) ** sig / den for a, q in zip(w, p)]


def cheapest_improvement(pref: Preference, x: Bundle, price: Sequence[Fraction], max_den: int = 10**6) -> Bundle | None:
    """A rational bundle strictly preferred to ``x`` whose cost at ``price`` is near the minimum."""
    if isinstance(pref, ExplicitStrict):
        return None
    p = [float(v) for v in price]
    top = max(p)
    if top <= 0:
        return None
    p = [v if v > 0 else top * 1e-9 for v in p]
    d = _unit_demand(pref, p)
    ud = float_utility(pref, d)
    if not ud > 0:
        return None
    target = max(float_utility(pref, x), 1e-12)
    s = target / ud
    for bump in (1e-9, 1e-6, 1e-4, 1e-2, 1e-1, 1.0):
        cand = tuple(Fraction(v * s * (1 + bump)).limit_denominator(max_den) for v in d)
        if all(v >= 0 for v in cand) and strictly_prefers(pref, cand, x):
            return cand
    return None


def certificate_points(t: Reallocation, price: Sequence[Fraction]) -> list[Bundle]:
    """Per atom: the cheapest improvement at ``price``; plus long steps in nonpositive-price directions."""
    out: list[Bundle] = []
    for prof, x, _ in t.atoms:
        c = cheapest_improvement(prof.pref, x, price)
        if c is not None:
            out.append(c)
        base = sum((q * (a - b) for q, a, b in zip(price, x, prof.endowment)), Fraction(0))
        for h, q in enumerate(price):
            if q < 0:
                r = (abs(base) + 1) / -q
                out.append(x[:h] + (x[h] + r,) + x[h + 1 :])
    return out


def gradient_price(pref: Preference, x: Bundle, max_den: int = 10**6) -> tuple[Fraction, ...] | None:
    """Rational rounding of the utility gradient at ``x`` (the price that makes ``x`` a demand)."""
    w = [float(v) for v in pref.weights] if not isinstance(pref, ExplicitStrict) else None
    if w is None:
        return None
    xs = [float(v) for v in x]
    if isinstance(pref, (Linear, Leontief)):
        g = w
    elif any(v <= 0 for v in xs):
        return None
    elif isinstance(pref, CobbDouglas):
        g = [a / v for a, v in zip(w, xs)]
    else:
        g = [a * v ** (float(pref.rho) - 1) for a, v in zip(w, xs)]
    top = max(g)
    return tuple(Fraction(v / top).limit_denominator(max_den) for v in g)


def supporting_points(t: Reallocation) -> list[Bundle]:
    """Cheapest improvements of every atom at the gradient price of every atom."""
    prices = list(dict.fromkeys(p for p in (gradient_price(pr.pref, x) for pr, x, _ in t.atoms) if p))
    out: list[Bundle] = []
    for price in prices:
        out.extend(certificate_points(t, price))
    return out


def refine_grid(t: Reallocation, grid: Iterable, price: Sequence[Fraction] | None = None) -> list[Bundle]:
    """One refinement step: blends at eighths between base points, plus certificate-guided points.

    ``price`` is the resource-row multiplier vector of the failed blocking
    search (``CoreVerdict.dual[-l:]``); without it only the denser blends are
    added.
    """
    pts = [as_bundle(g) for g in grid]
    base = base_points(t)
    for x, y in combinations(base, 2):
        pts.extend(blend(x, y, Fraction(k, 8)) for k in (1, 3, 5, 7))
    if price is not None:
        pts.extend(certificate_points(t, price))
    return list(dict.fromkeys(pts))
