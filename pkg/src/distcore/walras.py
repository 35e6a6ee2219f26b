"""Walrasian verification and equilibrium computation for utility-based economies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .dominance import PreconditionError
from .economy import (
    DistributionalEconomy,
    Reallocation,
    aggregate_endowment,
    strictly_positive,
    validate_allocation,
)
from .optim import EQ, LinearProgram, lp_solve
from .prefs import (
    CES,
    Bundle,
    CobbDouglas,
    ExplicitStrict,
    Leontief,
    Linear,
    Preference,
    compare,
    fmt_bundle,
    is_parametric,
    strictly_prefers,
)

Price = tuple[Fraction, ...]


class InexactDemandError(ArithmeticError):
    """The demand is irrational at these prices and cannot be represented exactly."""


class UnsupportedPreferenceError(PreconditionError):
    pass


def as_price(p: Sequence) -> Price:
    return tuple(Fraction(v) for v in p)


def dot(p: Sequence[Fraction], x: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(p, x) if a and b), Fraction(0))


def normalize_last(p: Sequence[Fraction]) -> Price:
    if p[-1] == 0:
        raise ValueError("cannot normalize on a zero last coordinate")
    return tuple(v / p[-1] for v in p)


def to_simplex(p: Sequence[Fraction]) -> Price:
    s = sum(p, Fraction(0))
    return tuple(v / s for v in p)


# --- demand ------------------------------------------------------------------------


def _ces_demand_exact(pref: CES, price: Price, wealth: Fraction) -> Bundle:
    sigma = pref.elasticity
    if sigma.denominator != 1:
        raise InexactDemandError(f"CES elasticity {sigma} is not an integer")
    s = sigma.numerator
    # x_i = (w_i / p_i)^s * W / sum_j w_j^s p_j^(1-s)
    denom = sum((w**s * p ** (1 - s) for w, p in zip(pref.weights, price)), Fraction(0))
    return tuple((w / p) ** s * wealth / denom for w, p in zip(pref.weights, price))


def _ces_demand_float(pref: CES, price: Sequence[float], wealth: float) -> list[float]:
    sigma = float(pref.elasticity)
    w = [float(v) for v in pref.weights]
    denom = sum(wi**sigma * pi ** (1 - sigma) for wi, pi in zip(w, price))
    return [(wi / pi) ** sigma * wealth / denom for wi, pi in zip(w, price)]


def demand(pref: Preference, price: Sequence, e: Sequence, allow_approximate: bool = False) -> Bundle:
    """Utility-maximizing bundle on the budget set {x : price @ x <= price @ e}.

    Linear preferences spend all wealth on the lowest-index commodity with the
    best weight-to-price ratio.  CES demand is exact when the elasticity
    1/(1-rho) is an integer; otherwise ``allow_approximate`` returns a
    rational rounding of the floating-point demand and exact verdicts must not
    rely on it.
    """
    price, e = as_price(price), as_price(e)
    if not is_parametric(pref):
        raise UnsupportedPreferenceError("demand needs a utility-based preference")
    if len(price) != len(pref.weights) or len(e) != len(price):
        raise PreconditionError("price, endowment and preference dimensions differ")
    if any(v < 0 for v in price) or not any(price):
        raise PreconditionError("prices must be nonnegative and nonzero")
    wealth = dot(price, e)
    if isinstance(pref, Leontief):
        scale = wealth / dot(price, pref.weights)
        return tuple(scale * w for w in pref.weights)
    if any(v == 0 for v in price):
        raise PreconditionError(f"{type(pref).__name__} demand needs strictly positive prices")
    if isinstance(pref, CobbDouglas):
        return tuple(w * wealth / p for w, p in zip(pref.weights, price))
    if isinstance(pref, Linear):
        ratios = [w / p for w, p in zip(pref.weights, price)]
        best = ratios.index(max(ratios))
        return tuple(wealth / price[i] if i == best else Fraction(0) for i in range(len(price)))
    try:
        return _ces_demand_exact(pref, price, wealth)
    except InexactDemandError:
        if not allow_approximate:
            raise
        fl = _ces_demand_float(pref, [float(v) for v in price], float(wealth))
        return tuple(Fraction(v).limit_denominator(10**12) for v in fl)


def demand_vertices(pref: Preference, price: Price, e: Bundle) -> list[Bundle]:
    """Extreme points of the demand set (several only for linear ties)."""
    if isinstance(pref, Linear):
        wealth = dot(price, e)
        ratios = [w / p for w, p in zip(pref.weights, price)]
        top = max(ratios)
        return [
            tuple(wealth / price[i] if h == i else Fraction(0) for h in range(len(price)))
            for i, r in enumerate(ratios)
            if r == top
        ]
    return [demand(pref, price, e)]


# --- verification -----------------------------------------------------------------


@dataclass(frozen=True)
class WalrasViolation:
    atom: int
    reason: str
    better: Bundle | None = None


@dataclass(frozen=True)
class WalrasResult:
    ok: bool
    violations: tuple[WalrasViolation, ...] = ()
    grid_relative: bool = False

    def __bool__(self) -> bool:
        return self.ok


def _ces_is_demand(pref: CES, price: Price, e: Bundle, x: Bundle) -> bool:
    """Exact first-order test: budget binds, x >> 0, (w_i/p_i)^b x_i^(a-b) constant."""
    if dot(price, x) != dot(price, e) or any(v == 0 for v in x):
        return False
    a, b = pref.rho.numerator, pref.rho.denominator
    vals = {(w / p) ** b * xi ** (a - b) for w, p, xi in zip(pref.weights, price, x)}
    return len(vals) == 1


def _parametric_violation(pref: Preference, price: Price, e: Bundle, x: Bundle) -> tuple[str, Bundle | None] | None:
    wealth = dot(price, e)
    free = [i for i, v in enumerate(price) if v == 0]
    if isinstance(pref, Leontief):
        d = demand(pref, price, e)
        if compare(pref, d, x) > 0:
            return "an affordable bundle is strictly better", d
        return None
    if free:
        bumped = tuple(v + 1 if i == free[0] else v for i, v in enumerate(x))
        if isinstance(pref, Linear) or (isinstance(pref, CES) and pref.rho > 0):
            return f"commodity {free[0]} is free and always desirable", bumped
        if wealth > 0:
            return f"commodity {free[0]} is free; utility has no maximum on the budget set", None
        return None  # zero wealth: every affordable bundle has utility zero
    if isinstance(pref, CES):
        try:
            d = demand(pref, price, e)
        except InexactDemandError:
            if _ces_is_demand(pref, price, e, x):
                return None
            return "first-order conditions fail", demand(pref, price, e, allow_approximate=True)
        if compare(pref, d, x) > 0:
            return "an affordable bundle is strictly better", d
        return None
    d = demand(pref, price, e)
    if compare(pref, d, x) > 0:
        return "an affordable bundle is strictly better", d
    return None


def is_walrasian(t: Reallocation, p: Sequence, grid: Sequence | None = None) -> WalrasResult:
    """Budget feasibility and maximality of every atom at price ``p``.

    Utility-based preferences are checked analytically; explicit relations
    are checked against the bundles of ``grid`` (a grid-relative verdict).
    """
    price = as_price(p)
    if not any(price):
        raise PreconditionError("price vector must be nonzero")
    if any(v < 0 for v in price):
        raise PreconditionError("prices must be nonnegative")
    viol: list[WalrasViolation] = []
    grid_rel = False
    for k, (prof, x, _) in enumerate(t.atoms):
        e = prof.endowment
        if dot(price, x) > dot(price, e):
            viol.append(WalrasViolation(k, f"bundle {fmt_bundle(x)} exceeds the budget"))
            continue
        if isinstance(prof.pref, ExplicitStrict):
            if grid is None:
                raise PreconditionError("explicit preferences need a grid for the Walrasian check")
            grid_rel = True
            dom = set(prof.pref.bundles)
            for g in grid:
                g = tuple(Fraction(v) for v in g)
                if g in dom and dot(price, g) <= dot(price, e) and strictly_prefers(prof.pref, g, x):
                    viol.append(WalrasViolation(k, "an affordable grid bundle is strictly better", g))
                    break
            continue
        v = _parametric_violation(prof.pref, price, e, x)
        if v is not None:
            viol.append(WalrasViolation(k, v[0], v[1]))
    return WalrasResult(not viol, tuple(viol), grid_rel)


def cobb_douglas_price(t: Reallocation) -> Price | None:
    """The only price that could support an all-Cobb-Douglas reallocation, if it does.

    At an interior bundle the supporting price is proportional to the
    gradient (w_i / x_i); the candidate is taken from the first interior atom
    and verified exactly.
    """
    for prof, x, _ in t.atoms:
        if not isinstance(prof.pref, CobbDouglas):
            raise UnsupportedPreferenceError("Cobb-Douglas preferences required")
    for prof, x, _ in t.atoms:
        if all(v > 0 for v in x):
            cand = normalize_last(tuple(w / v for w, v in zip(prof.pref.weights, x)))
            return cand if is_walrasian(t, cand).ok else None
    return None


# --- equilibrium ---------------------------------------------------------------------


@dataclass(frozen=True)
class Equilibrium:
    ok: bool
    price: Price | None = None
    reallocation: Reallocation | None = None
    method: str = ""
    message: str = ""
    details: dict = field(default_factory=dict)

    @property
    def price_simplex(self) -> Price | None:
        return to_simplex(self.price) if self.price else None


def solve_linear(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Exact Gaussian elimination; None when A is singular."""
    n = len(A)
    M = [list(row) + [rhs] for row, rhs in zip(A, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        pv = M[c][c]
        M[c] = [v / pv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [a - f * bb for a, bb in zip(M[r], M[c])]
    return [M[r][n] for r in range(n)]


def _cobb_douglas_prices(E: DistributionalEconomy) -> Price | None:
    # market i clears iff p_i * agg_i = sum_j p_j * sum_k m_k w_ki e_kj
    l = E.l
    agg = aggregate_endowment(E)
    M = [[Fraction(0)] * l for _ in range(l)]
    for prof, m in E.types:
        for i in range(l):
            wi = prof.pref.weights[i]
            for j in range(l):
                M[i][j] += m * wi * prof.endowment[j]
    A = [[(agg[i] if i == j else 0) - M[i][j] for j in range(l)] for i in range(l)]
    if l == 1:
        return (Fraction(1),)
    # fix p_l = 1, drop the last (dependent) market
    sub = [[A[i][j] for j in range(l - 1)] for i in range(l - 1)]
    rhs = [-A[i][l - 1] for i in range(l - 1)]
    sol = solve_linear(sub, rhs)
    if sol is None:
        return None
    p = tuple(sol) + (Fraction(1),)
    return p if all(v > 0 for v in p) else None


def _allocation_at(E: DistributionalEconomy, price: Price) -> Reallocation | None:
    """Market-clearing selection from the demand sets at ``price`` (exact LP), or None."""
    try:
        verts = [demand_vertices(prof.pref, price, prof.endowment) for prof in E.profiles]
    except (InexactDemandError, PreconditionError):
        return None
    agg = aggregate_endowment(E)
    if all(len(v) == 1 for v in verts):
        t = Reallocation.from_atoms((prof, v[0], m) for (prof, m), v in zip(E.types, verts))
        return t if validate_allocation(E, t).ok else None
    cols = [(k, v) for k, vs in enumerate(verts) for v in vs]
    lp = LinearProgram.zeros(len(cols))
    for k in range(len(verts)):
        lp.add_sparse({j: 1 for j, (kk, _) in enumerate(cols) if kk == k}, EQ, 1)
    for h in range(E.l):
        lp.add_sparse({j: E.masses[k] * v[h] for j, (k, v) in enumerate(cols)}, EQ, agg[h])
    res = lp_solve(lp)
    if res.status != "optimal":
        return None
    bundles = [[Fraction(0)] * E.l for _ in verts]
    for (k, v), th in zip(cols, res.x):
        for h in range(E.l):
            bundles[k][h] += th * v[h]
    return Reallocation.from_atoms((prof, b, m) for (prof, m), b in zip(E.types, bundles))


def _float_excess(E: DistributionalEconomy, p: list[float]) -> list[float]:
    z = [-float(v) for v in aggregate_endowment(E)]
    for prof, m in E.types:
        pref, e = prof.pref, [float(v) for v in prof.endowment]
        W = sum(a * b for a, b in zip(p, e))
        w = [float(v) for v in pref.weights]
        if isinstance(pref, CobbDouglas):
            x = [wi * W / pi for wi, pi in zip(w, p)]
        elif isinstance(pref, Linear):
            r = [wi / pi for wi, pi in zip(w, p)]
            best = r.index(max(r))
            x = [W / p[i] if i == best else 0.0 for i in range(len(p))]
        elif isinstance(pref, Leontief):
            s = W / sum(a * b for a, b in zip(p, w))
            x = [s * wi for wi in w]
        else:
            x = _ces_demand_float(pref, p, W)
        for i in range(len(z)):
            z[i] += float(m) * x[i]
    return z


def _candidate_prices(E: DistributionalEconomy, resolution: int) -> list[list[float]]:
    l = E.l
    out = []
    if l == 2:
        lo, hi = 1e-9, 1 - 1e-9
        z_lo = _float_excess(E, [lo, 1 - lo])[0]
        for _ in range(200):
            mid = (lo + hi) / 2
            zm = _float_excess(E, [mid, 1 - mid])[0]
            if (zm > 0) == (z_lo > 0):
                lo, z_lo = mid, zm
            else:
                hi = mid
        out.append([(lo + hi) / 2, 1 - (lo + hi) / 2])
    else:
        from scipy.optimize import root

        def f(logp):
            p = [math.exp(v) for v in logp] + [1.0]
            return _float_excess(E, p)[:-1]

        sol = root(f, [0.0] * (l - 1), method="hybr")
        out.append([math.exp(v) for v in sol.x] + [1.0])
    # rational snapping at increasing resolution is done by the caller
    return out


def find_equilibrium(E: DistributionalEconomy, resolution: int = 10**6) -> Equilibrium:
    """Exact Walrasian equilibrium for utility-based economies, when one can be found.

    All-Cobb-Douglas economies are solved in closed form (a linear system in
    prices with p_l = 1).  Other economies use a floating-point search whose
    candidates are snapped to rationals and accepted only after exact market
    clearing and ``is_walrasian`` both pass; failure never claims
    non-existence.
    """
    agg = aggregate_endowment(E)
    if not strictly_positive(agg):
        raise PreconditionError(f"aggregate endowment {fmt_bundle(agg)} is not strictly positive")
    if not E.all_parametric:
        raise UnsupportedPreferenceError("equilibrium search needs utility-based preferences")

    def accept(price: Price, t: Reallocation | None, method: str) -> Equilibrium | None:
        if t is None or not validate_allocation(E, t).ok:
            return None
        if not is_walrasian(t, price).ok:
            return None
        return Equilibrium(True, normalize_last(price) if price[-1] else price, t, method)

    if all(isinstance(p.pref, CobbDouglas) for p in E.profiles):
        price = _cobb_douglas_prices(E)
        if price is not None:
            eq = accept(price, _allocation_at(E, price), "cobb-douglas closed form")
            if eq is not None:
                return eq

    if len(E.types) == 1:
        eq = _single_type(E)
        if eq is not None:
            return eq

    try:
        cands = _candidate_prices(E, resolution)
    except (ArithmeticError, ValueError) as exc:
        return Equilibrium(False, method="search", message=f"price search failed: {exc}")
    for cand in cands:
        if not all(math.isfinite(v) and v > 0 for v in cand):
            continue
        for denom in (10, 100, 1000, 10**4, 10**5, resolution):
            price = tuple(Fraction(v / cand[-1]).limit_denominator(denom) for v in cand)
            if any(v <= 0 for v in price):
                continue
            eq = accept(price, _allocation_at(E, price), "search + exact verification")
            if eq is not None:
                return eq
    return Equilibrium(False, method="search", message="no exactly verified equilibrium found")


def _single_type(E: DistributionalEconomy) -> Equilibrium | None:
    prof = E.profiles[0]
    pref, e = prof.pref, prof.endowment
    t = Reallocation(((prof, e, E.masses[0]),))
    cands: list[Price] = []
    if isinstance(pref, Linear):
        cands.append(tuple(pref.weights))
    elif isinstance(pref, Leontief):
        ratios = [v / w for v, w in zip(e, pref.weights)]
        lo = min(ratios)
        cands.append(tuple(Fraction(1) if r == lo else Fraction(0) for r in ratios))
    elif isinstance(pref, CobbDouglas) and all(v > 0 for v in e):
        cands.append(tuple(w / v for w, v in zip(pref.weights, e)))
    elif isinstance(pref, CES) and all(v > 0 for v in e) and pref.rho.denominator == 1:
        cands.append(tuple(w * v ** (pref.rho - 1) for w, v in zip(pref.weights, e)))
    for price in cands:
        if is_walrasian(t, price).ok:
            p = normalize_last(price) if price[-1] else price
            return Equilibrium(True, p, t, "single type: supporting price of the endowment")
    return None
