"""Exact rational linear programming and bipartite max-flow.

The LP solver is a dense two-phase tableau simplex over ``fractions.Fraction``
with Bland's pivot rule.  Every verdict carries a certificate that can be
checked by plain arithmetic:

* ``optimal``    -- primal point, objective value and a dual solution with the
  same objective value (strong duality);
* ``infeasible`` -- Farkas multipliers ``y`` with ``y @ A >= 0`` (sign-adjusted
  per row relation) and ``y @ b < 0``;
* ``unbounded``  -- a feasible ray that improves the objective.

Dual sign conventions, for the problem exactly as stated by the caller:

=========  ==============  ==============  ===================
sense      ``<=`` rows     ``>=`` rows     reduced costs
=========  ==============  ==============  ===================
max        y >= 0          y <= 0          A^T y >= c
min        y <= 0          y >= 0          A^T y <= c
=========  ==============  ==============  ===================

Equality rows have free multipliers; free variables turn their reduced-cost
inequality into an equality.

Tableau dump format (``trace=`` argument): one block per pivot, headed by
``# pivot <k>: enter <col> leave <col>``, followed by one line per row of the
form ``<basic-col> | <entries...> | <rhs>`` and a final ``z | ... | <value>``
line with the reduced costs.  Entries are written as ``p/q``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Callable, Hashable, Iterable, Literal, Mapping, Sequence, TextIO

import networkx as nx

LE, GE, EQ = "<=", ">=", "=="
RELATIONS = (LE, GE, EQ)

MAX_VARIABLES = 20_000

Status = Literal["optimal", "infeasible", "unbounded"]


class MalformedProblemError(ValueError):
    """Raised when an LP or flow network is dimensionally inconsistent."""


class ResourceLimitError(RuntimeError):
    """Raised when a problem exceeds the configured size cap."""


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    relation: str
    rhs: Fraction


@dataclass
class LinearProgram:
    """``sense  objective @ x`` subject to rows, ``x >= 0`` except ``free``."""

    objective: list[Fraction]
    constraints: list[Constraint] = field(default_factory=list)
    sense: Literal["max", "min"] = "max"
    free: frozenset[int] = frozenset()
    names: list[str] | None = None

    @classmethod
    def zeros(cls, n: int, sense: Literal["max", "min"] = "max") -> "LinearProgram":
        return cls(objective=[Fraction(0)] * n, sense=sense)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def add(self, coeffs: Sequence, relation: str, rhs) -> None:
        self.constraints.append(
            Constraint(tuple(Fraction(c) for c in coeffs), relation, Fraction(rhs))
        )

    def add_sparse(self, coeffs: Mapping[int, object], relation: str, rhs) -> None:
        row = [Fraction(0)] * self.n_vars
        for j, c in coeffs.items():
            row[j] += Fraction(c)
        self.constraints.append(Constraint(tuple(row), relation, Fraction(rhs)))

    def check(self) -> None:
        n = self.n_vars
        if self.sense not in ("max", "min"):
            raise MalformedProblemError(f"unknown sense {self.sense!r}")
        for i, con in enumerate(self.constraints):
            if len(con.coeffs) != n:
                raise MalformedProblemError(
                    f"row {i} has {len(con.coeffs)} coefficients, expected {n}"
                )
            if con.relation not in RELATIONS:
                raise MalformedProblemError(f"row {i}: unknown relation {con.relation!r}")
        if any(not 0 <= j < n for j in self.free):
            raise MalformedProblemError("free variable index out of range")
        if self.names is not None and len(self.names) != n:
            raise MalformedProblemError("names length does not match variable count")


@dataclass(frozen=True)
class LPResult:
    status: Status
    x: tuple[Fraction, ...] | None = None
    value: Fraction | None = None
    dual: tuple[Fraction, ...] | None = None
    farkas: tuple[Fraction, ...] | None = None
    ray: tuple[Fraction, ...] | None = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _dot(a: Iterable[Fraction], b: Iterable[Fraction]) -> Fraction:
    return sum((p * q for p, q in zip(a, b) if p and q), Fraction(0))


def _fmt(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], basis: list[int], trace: TextIO | None):
        self.rows = rows
        self.basis = basis
        self.z: list[Fraction] = []
        self.pivots = 0
        self.trace = trace

    def set_costs(self, costs: list[Fraction]) -> None:
        width = len(self.rows[0]) if self.rows else len(costs) + 1
        z = list(costs) + [Fraction(0)] * (width - len(costs))
        for row, b in zip(self.rows, self.basis):
            cb = costs[b]
            if cb:
                for k, v in enumerate(row):
                    if v:
                        z[k] -= cb * v
        self.z = z

    def pivot(self, r: int, j: int) -> None:
        prow = self.rows[r]
        piv = prow[j]
        if piv != 1:
            prow = [v / piv if v else v for v in prow]
            self.rows[r] = prow
        nz = [k for k, v in enumerate(prow) if v]
        for i, row in enumerate(self.rows):
            if i == r:
                continue
            f = row[j]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
        f = self.z[j]
        if f:
            for k in nz:
                self.z[k] -= f * prow[k]
        leaving = self.basis[r]
        self.basis[r] = j
        self.pivots += 1
        if self.trace is not None:
            self.dump(f"pivot {self.pivots}: enter {j} leave {leaving}")

    def dump(self, header: str) -> None:
        out = self.trace
        out.write(f"# {header}\n")
        for b, row in zip(self.basis, self.rows):
            body = " ".join(_fmt(v) for v in row[:-1])
            out.write(f"{b} | {body} | {_fmt(row[-1])}\n")
        body = " ".join(_fmt(v) for v in self.z[:-1])
        out.write(f"z | {body} | {_fmt(-self.z[-1])}\n")

    def run(self, eligible: Callable[[int], bool]) -> int | None:
        """Bland's rule until optimal; returns an unbounded entering column or None."""
        ncols = len(self.z) - 1
        while True:
            enter = next((j for j in range(ncols) if self.z[j] < 0 and eligible(j)), None)
            if enter is None:
                return None
            best = None
            for i, row in enumerate(self.rows):
                a = row[enter]
                if a > 0:
                    key = (row[-1] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return enter
            self.pivot(best[1], enter)


def lp_solve(
    lp: LinearProgram,
    max_variables: int = MAX_VARIABLES,
    trace: TextIO | None = None,
) -> LPResult:
    """Solve ``lp`` exactly.  Deterministic: identical input, identical output."""
    lp.check()
    n = lp.n_vars
    if n > max_variables:
        raise ResourceLimitError(f"{n} variables exceeds cap of {max_variables}")

    # standard-form columns: (original var, sign)
    std: list[tuple[int, int]] = []
    for j in range(n):
        std.append((j, 1))
        if j in lp.free:
            std.append((j, -1))
    nstd = len(std)
    cost = [Fraction(0)] * nstd
    for k, (j, s) in enumerate(std):
        c = lp.objective[j] * s
        cost[k] = -c if lp.sense == "max" else c

    m = len(lp.constraints)
    signs: list[int] = []
    rels: list[str] = []
    for con in lp.constraints:
        if con.rhs < 0:
            signs.append(-1)
            rels.append({LE: GE, GE: LE, EQ: EQ}[con.relation])
        else:
            signs.append(1)
            rels.append(con.relation)

    n_slack = sum(1 for r in rels if r != EQ)
    n_art = sum(1 for r in rels if r != LE)
    width = nstd + n_slack + n_art + 1
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    unit_col: list[int] = []  # column that starts as e_i for row i
    is_art = [False] * (width - 1)
    s_next, a_next = nstd, nstd + n_slack
    for i, con in enumerate(lp.constraints):
        sg = signs[i]
        row = [Fraction(0)] * width
        for k, (j, s) in enumerate(std):
            c = con.coeffs[j]
            if c:
                row[k] = c * s * sg
        row[-1] = con.rhs * sg
        if rels[i] == LE:
            row[s_next] = Fraction(1)
            basis.append(s_next)
            unit_col.append(s_next)
            s_next += 1
        else:
            if rels[i] == GE:
                row[s_next] = Fraction(-1)
                s_next += 1
            row[a_next] = Fraction(1)
            is_art[a_next] = True
            basis.append(a_next)
            unit_col.append(a_next)
            a_next += 1
        rows.append(row)

    tab = _Tableau(rows, basis, trace)
    alive = list(range(m))  # original row index of each tableau row

    if n_art:
        phase1 = [Fraction(1) if is_art[k] else Fraction(0) for k in range(width - 1)]
        tab.set_costs(phase1)
        if trace is not None:
            tab.dump("phase 1 start")
        tab.run(lambda j: True)
        if -tab.z[-1] > 0:
            # y_i = c_unit - r_unit ; Farkas multipliers are -y
            y = [phase1[unit_col[i]] - tab.z[unit_col[i]] for i in range(m)]
            farkas = tuple(-y[i] * signs[i] for i in range(m))
            return LPResult("infeasible", farkas=farkas, pivots=tab.pivots)
        # drive zero-level artificials out of the basis, drop redundant rows
        r = 0
        while r < len(tab.rows):
            if is_art[tab.basis[r]]:
                row = tab.rows[r]
                j = next((k for k in range(width - 1) if row[k] and not is_art[k]), None)
                if j is None:
                    del tab.rows[r]
                    del tab.basis[r]
                    del alive[r]
                    continue
                tab.pivot(r, j)
            r += 1

    phase2 = cost + [Fraction(0)] * (width - 1 - nstd)
    tab.set_costs(phase2)
    if trace is not None:
        tab.dump("phase 2 start")
    enter = tab.run(lambda j: not is_art[j])

    if enter is not None:
        d = [Fraction(0)] * nstd
        if enter < nstd:
            d[enter] = Fraction(1)
        for row, b in zip(tab.rows, tab.basis):
            if b < nstd and row[enter]:
                d[b] = -row[enter]
        ray = [Fraction(0)] * n
        for k, (j, s) in enumerate(std):
            ray[j] += s * d[k]
        return LPResult("unbounded", ray=tuple(ray), pivots=tab.pivots)

    xs = [Fraction(0)] * nstd
    for row, b in zip(tab.rows, tab.basis):
        if b < nstd:
            xs[b] = row[-1]
    x = [Fraction(0)] * n
    for k, (j, s) in enumerate(std):
        x[j] += s * xs[k]
    value = _dot(lp.objective, x)

    y_std = [phase2[unit_col[i]] - tab.z[unit_col[i]] for i in range(m)]
    dropped = set(range(m)) - set(alive)
    dual = []
    for i in range(m):
        yi = Fraction(0) if i in dropped else y_std[i] * signs[i]
        dual.append(-yi if lp.sense == "max" else yi)
    return LPResult("optimal", x=tuple(x), value=value, dual=tuple(dual), pivots=tab.pivots)


# --- certificate checks -----------------------------------------------------


def _activity(lp: LinearProgram, x: Sequence[Fraction]) -> list[Fraction]:
    return [_dot(con.coeffs, x) for con in lp.constraints]


def _aty(lp: LinearProgram, y: Sequence[Fraction]) -> list[Fraction]:
    out = [Fraction(0)] * lp.n_vars
    for yi, con in zip(y, lp.constraints):
        if yi:
            for j, c in enumerate(con.coeffs):
                if c:
                    out[j] += yi * c
    return out


def is_feasible_point(lp: LinearProgram, x: Sequence[Fraction]) -> bool:
    if len(x) != lp.n_vars:
        return False
    if any(v < 0 for j, v in enumerate(x) if j not in lp.free):
        return False
    for act, con in zip(_activity(lp, x), lp.constraints):
        if con.relation == LE and act > con.rhs:
            return False
        if con.relation == GE and act < con.rhs:
            return False
        if con.relation == EQ and act != con.rhs:
            return False
    return True


def _dual_signs_ok(lp: LinearProgram, y: Sequence[Fraction], flip: bool) -> bool:
    # flip=False: "max" convention (y>=0 on <=, y<=0 on >=)
    for yi, con in zip(y, lp.constraints):
        v = -yi if flip else yi
        if con.relation == LE and v < 0:
            return False
        if con.relation == GE and v > 0:
            return False
    return True


def verify_optimal(lp: LinearProgram, res: LPResult) -> bool:
    """Primal feasibility, dual feasibility and equal objective values."""
    if res.status != "optimal" or res.x is None or res.dual is None:
        return False
    if not is_feasible_point(lp, res.x):
        return False
    y = res.dual
    if len(y) != len(lp.constraints):
        return False
    mx = lp.sense == "max"
    if not _dual_signs_ok(lp, y, flip=not mx):
        return False
    aty = _aty(lp, y)
    for j, (a, c) in enumerate(zip(aty, lp.objective)):
        if j in lp.free:
            if a != c:
                return False
        elif (a < c) if mx else (a > c):
            return False
    primal = _dot(lp.objective, res.x)
    dual_value = _dot(y, (con.rhs for con in lp.constraints))
    return primal == dual_value == res.value


def verify_farkas(lp: LinearProgram, y: Sequence[Fraction]) -> bool:
    """``y`` proves infeasibility: combining the rows yields ``0 <= negative``."""
    if len(y) != len(lp.constraints) or not _dual_signs_ok(lp, y, flip=False):
        return False
    aty = _aty(lp, y)
    for j, a in enumerate(aty):
        if j in lp.free:
            if a != 0:
                return False
        elif a < 0:
            return False
    return _dot(y, (con.rhs for con in lp.constraints)) < 0


def verify_ray(lp: LinearProgram, d: Sequence[Fraction]) -> bool:
    if len(d) != lp.n_vars:
        return False
    if any(v < 0 for j, v in enumerate(d) if j not in lp.free):
        return False
    for act, con in zip(_activity(lp, d), lp.constraints):
        if con.relation == LE and act > 0:
            return False
        if con.relation == GE and act < 0:
            return False
        if con.relation == EQ and act != 0:
            return False
    gain = _dot(lp.objective, d)
    return gain > 0 if lp.sense == "max" else gain < 0


def verify_result(lp: LinearProgram, res: LPResult) -> bool:
    if res.status == "optimal":
        return verify_optimal(lp, res)
    if res.status == "infeasible":
        return res.farkas is not None and verify_farkas(lp, res.farkas)
    return res.ray is not None and verify_ray(lp, res.ray)


# --- max-flow ---------------------------------------------------------------


@dataclass(frozen=True)
class FlowNetwork:
    """Bipartite transport network.

    ``edges`` lists admissible (source, sink) pairs; an edge without an entry in
    ``capacities`` is uncapacitated.
    """

    supplies: Mapping[Hashable, Fraction]
    demands: Mapping[Hashable, Fraction]
    edges: tuple[tuple[Hashable, Hashable], ...]
    capacities: Mapping[tuple[Hashable, Hashable], Fraction] = field(default_factory=dict)


@dataclass(frozen=True)
class FlowResult:
    value: Fraction
    flow: dict[tuple[Hashable, Hashable], Fraction]
    cut_capacity: Fraction
    # nodes on the source side of the minimum cut
    source_side_sources: frozenset
    source_side_sinks: frozenset

    def saturates(self, net: FlowNetwork) -> bool:
        return self.value == sum(net.demands.values(), Fraction(0))


_S, _T = ("__source__",), ("__sink__",)


def max_flow(net: FlowNetwork) -> FlowResult:
    """Exact max-flow / min-cut on a bipartite network with rational data.

    All capacities are scaled to integers by their common denominator, the
    integer problem is solved with networkx, and the result is scaled back.
    """
    values = list(net.supplies.values()) + list(net.demands.values()) + list(net.capacities.values())
    if any(Fraction(v) < 0 for v in values):
        raise MalformedProblemError("negative capacity")
    scale = lcm(1, *(Fraction(v).denominator for v in values))

    g = nx.DiGraph()
    g.add_node(_S)
    g.add_node(_T)
    for u, s in net.supplies.items():
        g.add_edge(_S, ("u", u), capacity=int(Fraction(s) * scale))
    for v, d in net.demands.items():
        g.add_edge(("v", v), _T, capacity=int(Fraction(d) * scale))
    for u, v in net.edges:
        if u not in net.supplies or v not in net.demands:
            raise MalformedProblemError(f"edge {(u, v)!r} references an unknown node")
        cap = net.capacities.get((u, v))
        if cap is None:
            g.add_edge(("u", u), ("v", v))
        else:
            g.add_edge(("u", u), ("v", v), capacity=int(Fraction(cap) * scale))

    value, flow_dict = nx.maximum_flow(g, _S, _T)
    cut, (side_s, _side_t) = nx.minimum_cut(g, _S, _T)
    if cut != value:
        raise AssertionError("max-flow value differs from min-cut capacity")
    flow: dict[tuple[Hashable, Hashable], Fraction] = {}
    for u, v in net.edges:
        f = flow_dict[("u", u)].get(("v", v), 0)
        if f:
            flow[(u, v)] = Fraction(f, scale)
    return FlowResult(
        value=Fraction(value, scale),
        flow=flow,
        cut_capacity=Fraction(cut, scale),
        source_side_sources=frozenset(n[1] for n in side_s if n != _S and n[0] == "u"),
        source_side_sinks=frozenset(n[1] for n in side_s if n != _S and n[0] == "v"),
    )
