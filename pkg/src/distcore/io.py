"""JSON economy documents and report artifacts with exact rationals.

Rationals are written as "p/q" strings (integers may also appear as JSON
integers); decimal numbers are rejected.  Errors carry the line and column of
the offending value.

Economy document::

    {"format": "distcore/1", "l": 2,
     "types": [{"preference": {"kind": "cobb_douglas", "weights": ["1/2", "1/2"]},
                "endowment": ["1", "0"], "mass": "1/2"}, ...],
     "allocations": {"name": [{"type": 0, "bundle": ["1/2", "1/2"], "mass": "1/2"}, ...]},
     "grids": {"name": [["0", "1"], ...]},
     "prices": {"name": ["1", "1"]},
     "subpopulations": {"name": ["1/4", "1/4"]},
     "mixtures": {"name": [[{"bundle": [...], "weight": "1/2"}, {"opt_out": true, "weight": "1/2"}], ...]},
     "indivisible": [0]}

Preference kinds: ``cobb_douglas``, ``linear``, ``leontief`` (``weights``),
``ces`` (``weights``, ``rho``), and ``explicit`` (``bundles`` plus either
``strict``, a list of index pairs [i, j] meaning bundles[i] is strictly
preferred to bundles[j], or ``ranking``, indifference classes of indices,
best first).
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .agents import OPT_OUT, Coalition, Interval, StepAllocation
from .blocking import BlockingWitness, CoreCoupling, blocks_by
from .dominance import JointAllocationMeasure
from .economy import DistributionalEconomy, Reallocation, SubMeasure, TypeProfile
from .prefs import CES, Bundle, CobbDouglas, ExplicitStrict, Leontief, Linear, Preference, strictly_prefers

FORMAT = "distcore/1"


class DocumentError(ValueError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)


# --- located parsing ---------------------------------------------------------------


class _Str(str):
    pos: int = -1


class _Decimal:
    def __init__(self, text: str):
        self.text = text


def _decoder() -> json.JSONDecoder:
    dec = json.JSONDecoder(parse_float=_Decimal)
    plain = dec.parse_string

    def located(s, end, strict=True):
        val, new_end = plain(s, end, strict)
        out = _Str(val)
        out.pos = end - 1
        return out, new_end

    dec.parse_string = located
    dec.scan_once = json.scanner.py_make_scanner(dec)
    return dec


class _Reader:
    def __init__(self, text: str):
        self.text = text

    def where(self, node: Any) -> tuple[int | None, int | None]:
        pos = getattr(node, "pos", -1)
        if isinstance(node, _Decimal):
            m = re.search(re.escape(node.text), self.text)
            pos = m.start() if m else -1
        if pos < 0:
            return None, None
        line = self.text.count("\n", 0, pos) + 1
        return line, pos - (self.text.rfind("\n", 0, pos) + 1) + 1

    def fail(self, msg: str, node: Any = None):
        raise DocumentError(msg, *self.where(node))

    def rational(self, node: Any, what: str = "value") -> Fraction:
        if isinstance(node, bool):
            self.fail(f"{what}: expected a rational, got a boolean", node)
        if isinstance(node, int):
            return Fraction(node)
        if isinstance(node, _Decimal):
            self.fail(f"{what}: decimal number {node.text} not allowed; write rationals as \"p/q\"", node)
        if not isinstance(node, str):
            self.fail(f"{what}: expected a rational string", node)
        m = re.fullmatch(r"\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?", node)
        if not m:
            self.fail(f"{what}: malformed rational {node!r}", node)
        den = int(m.group(2)) if m.group(2) else 1
        if den == 0:
            self.fail(f"{what}: zero denominator in {node!r}", node)
        return Fraction(int(m.group(1)), den)

    def vector(self, node: Any, what: str, l: int | None = None) -> Bundle:
        if not isinstance(node, list):
            self.fail(f"{what}: expected a list")
        v = tuple(self.rational(c, what) for c in node)
        if l is not None and len(v) != l:
            self.fail(f"{what}: expected {l} coordinates, got {len(v)}", node[0] if node else None)
        return v

    def index(self, node: Any, n: int, what: str) -> int:
        if isinstance(node, bool) or not isinstance(node, int) or not 0 <= node < n:
            self.fail(f"{what}: index {node!r} out of range 0..{n - 1}", node)
        return node

    def obj(self, node: Any, what: str) -> dict:
        if not isinstance(node, dict):
            self.fail(f"{what}: expected an object")
        return node


def _load_json(text: str) -> Any:
    try:
        return _decoder().decode(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(exc.msg, exc.lineno, exc.colno) from None


# --- preferences ---------------------------------------------------------------------


def preference_to_json(p: Preference) -> dict:
    if isinstance(p, ExplicitStrict):
        idx = {b: i for i, b in enumerate(p.bundles)}
        pairs = sorted([idx[x], idx[y]] for x, y in p.pairs)
        return {"kind": "explicit", "bundles": [_vec(b) for b in p.bundles], "strict": pairs}
    kind = {CobbDouglas: "cobb_douglas", Linear: "linear", Leontief: "leontief", CES: "ces"}[type(p)]
    out: dict = {"kind": kind, "weights": _vec(p.weights)}
    if isinstance(p, CES):
        out["rho"] = str(p.rho)
    return out


def _preference(r: _Reader, node: Any, where: str) -> Preference:
    node = r.obj(node, where)
    kind = node.get("kind")
    try:
        if kind in ("cobb_douglas", "linear", "leontief", "ces"):
            w = r.vector(node.get("weights"), f"{where}.weights")
            if kind == "cobb_douglas":
                return CobbDouglas(w)
            if kind == "linear":
                return Linear(w)
            if kind == "leontief":
                return Leontief(w)
            return CES(w, r.rational(node.get("rho"), f"{where}.rho"))
        if kind == "explicit":
            bundles = [r.vector(b, f"{where}.bundles") for b in node.get("bundles", [])]
            n = len(bundles)
            if "ranking" in node:
                classes = [[bundles[r.index(i, n, f"{where}.ranking")] for i in cls] for cls in node["ranking"]]
                return ExplicitStrict.from_ranking(classes)
            pairs = frozenset(
                (bundles[r.index(i, n, f"{where}.strict")], bundles[r.index(j, n, f"{where}.strict")])
                for i, j in node.get("strict", [])
            )
            return ExplicitStrict(tuple(bundles), pairs)
    except DocumentError:
        raise
    except (ValueError, TypeError) as exc:
        r.fail(f"{where}: {exc}", kind)
    r.fail(f"{where}: unknown preference kind {kind!r}", kind)


# --- economy documents ----------------------------------------------------------------


@dataclass
class EconomyDocument:
    economy: DistributionalEconomy
    allocations: dict[str, Reallocation] = field(default_factory=dict)
    grids: dict[str, list[Bundle]] = field(default_factory=dict)
    prices: dict[str, tuple[Fraction, ...]] = field(default_factory=dict)
    subpopulations: dict[str, tuple[Fraction, ...]] = field(default_factory=dict)
    mixtures: dict[str, list[list[tuple[object, Fraction]]]] = field(default_factory=dict)
    indivisible: tuple[int, ...] = ()


def _check_format(r: _Reader, root: dict, kind: str | None = None) -> None:
    fmt = root.get("format")
    if fmt != FORMAT:
        r.fail(f"unsupported format {fmt!r}; expected {FORMAT!r}", fmt)
    if kind is not None and root.get("kind") != kind:
        r.fail(f"expected a {kind!r} artifact, got {root.get('kind')!r}", root.get("kind"))


def parse_document(text: str) -> EconomyDocument:
    r = _Reader(text)
    root = r.obj(_load_json(text), "document")
    _check_format(r, root)
    l = root.get("l")
    if isinstance(l, bool) or not isinstance(l, int) or l < 1:
        r.fail("l must be a positive integer")
    types = root.get("types")
    if not isinstance(types, list):
        r.fail("types must be a list")
    entries = []
    for k, t in enumerate(types):
        t = r.obj(t, f"types[{k}]")
        pref = _preference(r, t.get("preference"), f"types[{k}].preference")
        e = r.vector(t.get("endowment"), f"types[{k}].endowment", l)
        if any(v < 0 for v in e):
            r.fail(f"types[{k}].endowment: negative coordinate", t.get("endowment")[0])
        entries.append((TypeProfile(pref, e), r.rational(t.get("mass"), f"types[{k}].mass")))
    E = DistributionalEconomy(tuple(entries), l)
    doc = EconomyDocument(E)
    n = len(entries)
    for name, atoms in r.obj(root.get("allocations", {}), "allocations").items():
        if not isinstance(atoms, list):
            r.fail(f"allocations.{name}: expected a list of atoms", name)
        out = []
        for a in atoms:
            a = r.obj(a, f"allocations.{name}")
            k = r.index(a.get("type"), n, f"allocations.{name}.type")
            x = r.vector(a.get("bundle"), f"allocations.{name}.bundle", l)
            if any(v < 0 for v in x):
                r.fail(f"allocations.{name}: negative bundle coordinate", a.get("bundle")[0])
            out.append((entries[k][0], x, r.rational(a.get("mass"), f"allocations.{name}.mass")))
        doc.allocations[name] = Reallocation(tuple(out))
    for name, g in r.obj(root.get("grids", {}), "grids").items():
        if not isinstance(g, list):
            r.fail(f"grids.{name}: expected a list of bundles", name)
        doc.grids[name] = [r.vector(b, f"grids.{name}", l) for b in g]
    for name, p in r.obj(root.get("prices", {}), "prices").items():
        doc.prices[name] = r.vector(p, f"prices.{name}", l)
    for name, s in r.obj(root.get("subpopulations", {}), "subpopulations").items():
        doc.subpopulations[name] = r.vector(s, f"subpopulations.{name}", n)
    for name, cells in r.obj(root.get("mixtures", {}), "mixtures").items():
        if not isinstance(cells, list):
            r.fail(f"mixtures.{name}: expected one mixture per cell", name)
        mix = []
        for cell in cells:
            if not isinstance(cell, list):
                r.fail(f"mixtures.{name}: each cell is a list of outcomes", name)
            row = []
            for o in cell:
                o = r.obj(o, f"mixtures.{name}")
                w = r.rational(o.get("weight"), f"mixtures.{name}.weight")
                row.append((OPT_OUT if o.get("opt_out") else r.vector(o.get("bundle"), f"mixtures.{name}.bundle", l), w))
            mix.append(row)
        doc.mixtures[name] = mix
    ind = root.get("indivisible", [])
    doc.indivisible = tuple(r.index(i, n, "indivisible") for i in ind)
    return doc


def load_document(path: str) -> EconomyDocument:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())


def _vec(v) -> list[str]:
    return [str(Fraction(c)) for c in v]


def _allocation_json(E: DistributionalEconomy, t: Reallocation) -> list[dict]:
    index = {p: k for k, p in enumerate(E.profiles)}
    return [{"type": index[p], "bundle": _vec(x), "mass": str(m)} for p, x, m in t.atoms]


def document_to_json(doc: EconomyDocument) -> dict:
    E = doc.economy
    out: dict = {
        "format": FORMAT,
        "l": E.l,
        "types": [
            {"preference": preference_to_json(p.pref), "endowment": _vec(p.endowment), "mass": str(m)}
            for p, m in E.types
        ],
    }
    if doc.allocations:
        out["allocations"] = {k: _allocation_json(E, t) for k, t in doc.allocations.items()}
    if doc.grids:
        out["grids"] = {k: [_vec(b) for b in g] for k, g in doc.grids.items()}
    if doc.prices:
        out["prices"] = {k: _vec(p) for k, p in doc.prices.items()}
    if doc.subpopulations:
        out["subpopulations"] = {k: _vec(s) for k, s in doc.subpopulations.items()}
    if doc.mixtures:
        out["mixtures"] = {
            k: [
                [{"opt_out": True, "weight": str(w)} if o is OPT_OUT else {"bundle": _vec(o), "weight": str(w)} for o, w in cell]
                for cell in cells
            ]
            for k, cells in doc.mixtures.items()
        }
    if doc.indivisible:
        out["indivisible"] = list(doc.indivisible)
    return out


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


# --- artifacts ---------------------------------------------------------------------------


def coupling_to_json(j: JointAllocationMeasure) -> dict:
    prefs = list(dict.fromkeys(p for p, *_ in j.atoms))
    index = {p: i for i, p in enumerate(prefs)}
    return {
        "format": FORMAT,
        "kind": "coupling",
        "preferences": [preference_to_json(p) for p in prefs],
        "atoms": [
            {"preference": index[p], "x": _vec(x), "x_prime": _vec(xp), "mass": str(m)} for p, x, xp, m in j.atoms
        ],
    }


def parse_coupling(text: str) -> JointAllocationMeasure:
    """Parse a coupling artifact and re-check that it puts no mass where x' is strictly better."""
    r = _Reader(text)
    root = r.obj(_load_json(text), "coupling")
    _check_format(r, root, "coupling")
    prefs = [_preference(r, p, f"preferences[{i}]") for i, p in enumerate(root.get("preferences", []))]
    atoms = []
    for a in root.get("atoms", []):
        p = prefs[r.index(a.get("preference"), len(prefs), "atoms.preference")]
        x, xp = r.vector(a.get("x"), "atoms.x"), r.vector(a.get("x_prime"), "atoms.x_prime")
        m = r.rational(a.get("mass"), "atoms.mass")
        if m <= 0:
            r.fail("coupling masses must be positive", a.get("mass"))
        if strictly_prefers(p, xp, x):
            r.fail("coupling puts mass where x' is strictly better than x", a.get("mass"))
        atoms.append((p, x, xp, m))
    return JointAllocationMeasure.from_atoms(atoms)


def _profiles_json(profs: list[TypeProfile]) -> list[dict]:
    return [{"preference": preference_to_json(p.pref), "endowment": _vec(p.endowment)} for p in profs]


def submeasure_to_json(mu: SubMeasure, kind: str, columns: tuple[str, ...], extra: dict | None = None) -> dict:
    profs = list(dict.fromkeys(p for p, _, _ in mu.atoms))
    index = {p: i for i, p in enumerate(profs)}
    out = {
        "format": FORMAT,
        "kind": kind,
        "types": _profiles_json(profs),
        "atoms": [
            {"type": index[p], **{c: _vec(b) for c, b in zip(columns, cols)}, "mass": str(m)}
            for p, cols, m in mu.atoms
        ],
    }
    out.update(extra or {})
    return out


def _parse_submeasure(text: str, kind: str, columns: tuple[str, ...]) -> tuple[SubMeasure, dict, _Reader]:
    r = _Reader(text)
    root = r.obj(_load_json(text), kind)
    _check_format(r, root, kind)
    profs = []
    for i, t in enumerate(root.get("types", [])):
        t = r.obj(t, f"types[{i}]")
        profs.append(TypeProfile(_preference(r, t.get("preference"), f"types[{i}].preference"), r.vector(t.get("endowment"), f"types[{i}].endowment")))
    atoms = []
    for a in root.get("atoms", []):
        p = profs[r.index(a.get("type"), len(profs), "atoms.type")]
        cols = [r.vector(a.get(c), f"atoms.{c}") for c in columns]
        m = r.rational(a.get("mass"), "atoms.mass")
        if m <= 0:
            r.fail("atom masses must be positive", a.get("mass"))
        atoms.append((p, cols, m))
    return SubMeasure.from_atoms(atoms), root, r


def witness_to_json(w: BlockingWitness) -> dict:
    return submeasure_to_json(
        w.measure,
        "blocking_witness",
        ("x", "x_prime"),
        {"lp_value": str(w.lp_value), "grid_size": w.grid_size, "improving_mass": str(w.improving_mass)},
    )


def parse_witness(text: str) -> SubMeasure:
    """Parse a witness artifact and re-check that it blocks."""
    mu, root, r = _parse_submeasure(text, "blocking_witness", ("x", "x_prime"))
    if not mu.atoms or not blocks_by(mu):
        r.fail("witness does not block")
    return mu


def core_coupling_to_json(c: CoreCoupling) -> dict:
    return submeasure_to_json(
        c.measure,
        "core_coupling",
        ("x", "x_prime", "x_second"),
        {"commodity": c.commodity, "n": c.n, "eps": str(c.eps), "beta": str(c.beta), "factor": str(c.factor)},
    )


def parse_core_coupling(text: str) -> SubMeasure:
    mu, _, r = _parse_submeasure(text, "core_coupling", ("x", "x_prime", "x_second"))
    if mu.column_integral(2) != mu.endowment_integral():
        r.fail("x'' column violates the resource identity")
    return mu


def intervals_to_json(ivs) -> list[list[str]]:
    return [[str(iv.lo), str(iv.hi)] for iv in ivs]


def coalition_to_json(c: Coalition) -> dict:
    return {"format": FORMAT, "kind": "coalition", "intervals": intervals_to_json(c.intervals), "measure": str(c.measure)}


def parse_coalition(text: str) -> Coalition:
    r = _Reader(text)
    root = r.obj(_load_json(text), "coalition")
    _check_format(r, root, "coalition")
    try:
        ivs = [Interval(r.rational(a, "lo"), r.rational(b, "hi")) for a, b in root.get("intervals", [])]
        return Coalition.of(ivs)
    except ValueError as exc:
        r.fail(str(exc))


def step_to_json(f: StepAllocation) -> dict:
    return {
        "format": FORMAT,
        "kind": "step_allocation",
        "pieces": [{"interval": [str(iv.lo), str(iv.hi)], "bundle": _vec(b)} for iv, b in f.pieces],
    }


def parse_step(text: str) -> StepAllocation:
    r = _Reader(text)
    root = r.obj(_load_json(text), "step_allocation")
    _check_format(r, root, "step_allocation")
    try:
        pieces = tuple(
            (Interval(r.rational(p["interval"][0]), r.rational(p["interval"][1])), r.vector(p["bundle"], "bundle"))
            for p in root.get("pieces", [])
        )
        return StepAllocation(pieces)
    except (ValueError, KeyError) as exc:
        r.fail(str(exc))
