"""JSON project files: groupoid, optional measures and multiplier, representations.

Layout::

    {
      "groupoid": {
        "points": ["a", "b"],
        "arrows": [{"id": 0, "name": "(0,a)", "src": "a", "tgt": "a"}, ...],
        "compose": [[g, h, gh], ...],
        "inverse": [[g, g_inv], ...],
        "unit": {"a": 0, "b": 1}
      },
      "haar": {"weights": [[arrow, weight], ...]},
      "cutoff": {"values": {"a": 1.0, "b": 0.0}},
      "multiplier": {"entries": [[g, h, [re, im]], ...]},
      "cochain": {"values": [[arrow, value], ...]},
      "representations": [
        {"name": "R", "support": ["a"], "fiber_dim": {"a": 1},
         "matrices": [{"arrow": 0, "data": [[[re, im]]]}, ...]}
      ]
    }

Points are referenced by name, arrows by integer id.  Multiplier pairs not
listed are 1.  A representation with ``support`` lives on the full
subgroupoid over those points; its matrices are still keyed by the ids of the
ambient groupoid.  Floats are written with the shortest round-trip repr.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .cocycle import Cochain1, Multiplier, trivial_multiplier, validate_multiplier
from .core import FiniteGroupoid, Homomorphism, Report, restrict, validate_groupoid
from .measure import CutoffFunction, HaarSystem, validate_cutoff, validate_haar
from .rep import PseudoRep, RepError, check_shapes

__all__ = ["ProjectError", "Project", "RepEntry", "parse_project", "loads", "dumps", "serialize"]


class ProjectError(ValueError):
    """Malformed or invalid project file; ``report`` holds forwarded violations."""

    def __init__(self, message, report: Report | None = None):
        super().__init__(message)
        self.report = report


@dataclass
class RepEntry:
    name: str
    rep: PseudoRep
    support: tuple[int, ...] | None = None

    def __eq__(self, other):
        return (
            isinstance(other, RepEntry)
            and self.name == other.name
            and self.support == other.support
            and self.rep == other.rep
        )


@dataclass
class Project:
    groupoid: FiniteGroupoid
    haar: HaarSystem | None = None
    cutoff: CutoffFunction | None = None
    multiplier: Multiplier | None = None
    cochain: Cochain1 | None = None
    representations: list[RepEntry] = field(default_factory=list)

    @property
    def sigma(self) -> Multiplier:
        return self.multiplier if self.multiplier is not None else trivial_multiplier(self.groupoid)

    def domain(self, entry: RepEntry) -> tuple[FiniteGroupoid, Homomorphism | None]:
        if entry.support is None:
            return self.groupoid, None
        return restrict(self.groupoid, entry.support)

    def get(self, name: str | None) -> RepEntry:
        if not self.representations:
            raise ProjectError("unresolved id: project has no representations")
        if name is None:
            return self.representations[0]
        for e in self.representations:
            if e.name == name:
                return e
        raise ProjectError(f"unresolved id: no representation named {name!r}")

    def put(self, entry: RepEntry) -> None:
        """Replace the entry of the same name in place, or append."""
        for i, e in enumerate(self.representations):
            if e.name == entry.name:
                self.representations[i] = entry
                return
        self.representations.append(entry)

    def __eq__(self, other):
        if not isinstance(other, Project):
            return NotImplemented
        return (
            self.groupoid == other.groupoid
            and self.haar == other.haar
            and self.cutoff == other.cutoff
            and self.multiplier == other.multiplier
            and _cochain_eq(self.cochain, other.cochain)
            and self.representations == other.representations
        )


def _cochain_eq(a, b):
    if a is None or b is None:
        return a is b
    return np.array_equal(a.values, b.values)


# serialization


def _cx(z) -> list:
    return [float(z.real), float(z.imag)]


def _matrix(m: np.ndarray) -> list:
    return [[_cx(z) for z in row] for row in m]


def to_tree(p: Project) -> dict:
    G = p.groupoid
    pts = G.points
    tree = {
        "groupoid": {
            "points": list(pts),
            "arrows": [
                {"id": g, "name": G.arrow_names[g], "src": pts[G.src[g]], "tgt": pts[G.tgt[g]]}
                for g in range(G.n_arrows)
            ],
            "compose": [[int(a), int(b), int(ab)] for a, b, ab in zip(*G.composable)],
            "inverse": [[g, int(G.inverse[g])] for g in range(G.n_arrows)],
            "unit": {pts[x]: int(G.unit[x]) for x in range(G.n_points)},
        }
    }
    if p.haar is not None:
        tree["haar"] = {"weights": [[g, float(w)] for g, w in enumerate(p.haar.weights)]}
    if p.cutoff is not None:
        tree["cutoff"] = {"values": {pts[x]: float(v) for x, v in enumerate(p.cutoff.values)}}
    if p.multiplier is not None:
        e = p.multiplier.entries
        tree["multiplier"] = {
            "entries": [
                [int(a), int(b), _cx(e[a, b])] for a, b, _ in zip(*G.composable) if e[a, b] != 1
            ]
        }
    if p.cochain is not None:
        tree["cochain"] = {"values": [[g, float(v)] for g, v in enumerate(p.cochain.values)]}
    reps = []
    for entry in p.representations:
        H, inc = p.domain(entry)
        amap = inc.arrow_map if inc is not None else np.arange(G.n_arrows)
        item = {"name": entry.name}
        if entry.support is not None:
            item["support"] = [pts[x] for x in entry.support]
        item["fiber_dim"] = {H.points[x]: int(d) for x, d in enumerate(entry.rep.fiber_dim)}
        item["matrices"] = [
            {"arrow": int(amap[k]), "data": _matrix(m)} for k, m in enumerate(entry.rep.matrices)
        ]
        reps.append(item)
    tree["representations"] = reps
    return tree


def _flat(v) -> bool:
    """Lists of scalars and complex pairs stay on one line."""
    if isinstance(v, list):
        return all(not isinstance(t, (list, dict)) or (isinstance(t, list) and _flat(t) and len(t) <= 2) for t in v)
    return False


def _emit(v, indent: int) -> str:
    pad, inner = " " * indent, " " * (indent + 2)
    if isinstance(v, dict):
        if not v:
            return "{}"
        if all(not isinstance(t, (list, dict)) for t in v.values()):
            return json.dumps(v, ensure_ascii=False, allow_nan=False)
        items = [f"{inner}{json.dumps(k, ensure_ascii=False)}: {_emit(t, indent + 2)}" for k, t in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(v, list):
        if _flat(v):
            return json.dumps(v, ensure_ascii=False, allow_nan=False)
        items = [inner + _emit(t, indent + 2) for t in v]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return json.dumps(v, ensure_ascii=False, allow_nan=False)


def dumps(p: Project) -> str:
    return _emit(to_tree(p), 0) + "\n"


serialize = dumps


# parsing


def _need(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ProjectError(f"missing key {key!r} in {where}")
    return obj[key]


def _complex(v, where) -> complex:
    if (
        not isinstance(v, list)
        or len(v) != 2
        or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v)
    ):
        raise ProjectError(f"{where}: complex scalars are encoded as [re, im]")
    return complex(float(v[0]), float(v[1]))


def _groupoid(tree) -> FiniteGroupoid:
    points = [str(p) for p in _need(tree, "points", "groupoid")]
    if len(set(points)) != len(points):
        raise ProjectError("duplicate point name")
    pidx = {p: i for i, p in enumerate(points)}

    def point(name, where):
        if name not in pidx:
            raise ProjectError(f"dangling id: unknown point {name!r} in {where}")
        return pidx[name]

    arrows = sorted(_need(tree, "arrows", "groupoid"), key=lambda a: _need(a, "id", "arrow"))
    n = len(arrows)
    if [a["id"] for a in arrows] != list(range(n)):
        raise ProjectError("arrow ids must be 0..n-1 without gaps")

    def arrow(g, where):
        if not isinstance(g, int) or not 0 <= g < n:
            raise ProjectError(f"dangling id: unknown arrow {g!r} in {where}")
        return g

    src = [point(_need(a, "src", "arrow"), f"arrow {a['id']}") for a in arrows]
    tgt = [point(_need(a, "tgt", "arrow"), f"arrow {a['id']}") for a in arrows]
    names = [str(a.get("name", a["id"])) for a in arrows]
    compose = {}
    for row in _need(tree, "compose", "groupoid"):
        if not isinstance(row, list) or len(row) != 3:
            raise ProjectError("compose entries are [g, h, gh]")
        g, h, gh = (arrow(v, "compose") for v in row)
        compose[g, h] = gh
    for g in range(n):
        for h in range(n):
            if src[g] == tgt[h] and (g, h) not in compose:
                raise ProjectError(f"dangling id: no product for composable pair ({g}, {h})")
    inverse = [-1] * n
    for row in _need(tree, "inverse", "groupoid"):
        if not isinstance(row, list) or len(row) != 2:
            raise ProjectError("inverse entries are [g, g_inv]")
        g, gi = (arrow(v, "inverse") for v in row)
        inverse[g] = gi
    for g, gi in enumerate(inverse):
        if gi < 0:
            raise ProjectError(f"dangling id: no inverse entry for arrow {g}")
    units = _need(tree, "unit", "groupoid")
    unit = [-1] * len(points)
    for name, g in units.items():
        unit[point(name, "unit")] = arrow(g, "unit")
    for x, u in enumerate(unit):
        if u < 0:
            raise ProjectError(f"dangling id: no unit entry for point {points[x]!r}")
    return FiniteGroupoid(points, src, tgt, compose, inverse, unit, names)


def _per_arrow(rows, n, what) -> np.ndarray:
    out = np.full(n, np.nan)
    for row in rows:
        if not isinstance(row, list) or len(row) != 2 or not isinstance(row[0], int) or not 0 <= row[0] < n:
            raise ProjectError(f"dangling id in {what}: {row!r}")
        out[row[0]] = float(row[1])
    if np.any(np.isnan(out)):
        raise ProjectError(f"dangling id: {what} missing for arrow {int(np.flatnonzero(np.isnan(out))[0])}")
    return out


def _rep(item, G: FiniteGroupoid) -> RepEntry:
    name = str(_need(item, "name", "representation"))
    support = None
    H, amap = G, np.arange(G.n_arrows)
    if "support" in item:
        try:
            support = tuple(sorted(G.points.index(p) for p in item["support"]))
        except ValueError:
            raise ProjectError(f"dangling id: unknown support point in {name!r}") from None
        H, inc = restrict(G, support)
        amap = inc.arrow_map
    dims = {str(k): v for k, v in _need(item, "fiber_dim", name).items()}
    try:
        fiber_dim = [int(dims[p]) for p in H.points]
    except KeyError as exc:
        raise ProjectError(f"dangling id: no fiber_dim for point {exc} in {name!r}") from None
    local = {int(a): k for k, a in enumerate(amap)}
    mats = [None] * H.n_arrows
    for m in _need(item, "matrices", name):
        g = _need(m, "arrow", name)
        if g not in local:
            raise ProjectError(f"dangling id: arrow {g!r} not in the domain of {name!r}")
        k = local[g]
        shape = (fiber_dim[H.tgt[k]], fiber_dim[H.src[k]])
        data = _need(m, "data", name)
        flat = [_complex(z, f"{name} arrow {g}") for row in data for z in row]
        if len(data) != shape[0] or len(flat) != shape[0] * shape[1]:
            raise ProjectError(f"matrix of arrow {g} in {name!r} does not have shape {shape}")
        mats[k] = np.array(flat, dtype=complex).reshape(shape)
    for k, m in enumerate(mats):
        if m is None:
            raise ProjectError(f"dangling id: {name!r} has no matrix for arrow {int(amap[k])}")
    rep = PseudoRep(fiber_dim, mats)
    try:
        check_shapes(H, rep)
    except RepError as exc:
        raise ProjectError(f"representation {name!r}: {exc}") from None
    return RepEntry(name, rep, support)


def _fail(what: str, report: Report):
    raise ProjectError(f"{what} validation failed: " + "; ".join(str(v) for v in report), report)


def from_tree(tree) -> Project:
    if not isinstance(tree, dict):
        raise ProjectError("top level must be an object")
    unknown = set(tree) - {"groupoid", "haar", "cutoff", "multiplier", "cochain", "representations"}
    if unknown:
        raise ProjectError(f"unknown sections: {sorted(unknown)}")
    G = _groupoid(_need(tree, "groupoid", "project"))
    report = validate_groupoid(G)
    if not report.ok:
        _fail("groupoid", report)
    p = Project(G)
    if "haar" in tree:
        p.haar = HaarSystem(_per_arrow(_need(tree["haar"], "weights", "haar"), G.n_arrows, "haar weight"))
        report = validate_haar(G, p.haar)
        if not report.ok:
            _fail("haar", report)
    if "cutoff" in tree:
        vals = _need(tree["cutoff"], "values", "cutoff")
        try:
            p.cutoff = CutoffFunction([float(vals[x]) for x in G.points])
        except KeyError as exc:
            raise ProjectError(f"dangling id: no cutoff value for point {exc}") from None
        report = validate_cutoff(G, p.cutoff)
        if not report.ok:
            _fail("cutoff", report)
    if "multiplier" in tree:
        e = np.ones((G.n_arrows, G.n_arrows), dtype=complex)
        for row in _need(tree["multiplier"], "entries", "multiplier"):
            if not isinstance(row, list) or len(row) != 3:
                raise ProjectError("multiplier entries are [g, h, [re, im]]")
            g, h = row[0], row[1]
            if not all(isinstance(v, int) and 0 <= v < G.n_arrows for v in (g, h)):
                raise ProjectError(f"dangling id in multiplier: {row!r}")
            if G.src[g] != G.tgt[h]:
                raise ProjectError(f"multiplier entry ({g}, {h}) is not a composable pair")
            e[g, h] = _complex(row[2], "multiplier")
        p.multiplier = Multiplier(e)
        report = validate_multiplier(G, p.multiplier)
        if not report.ok:
            _fail("multiplier", report)
    if "cochain" in tree:
        p.cochain = Cochain1(_per_arrow(_need(tree["cochain"], "values", "cochain"), G.n_arrows, "cochain value"))
    names = set()
    for item in tree.get("representations", []):
        entry = _rep(item, G)
        if entry.name in names:
            raise ProjectError(f"duplicate representation name {entry.name!r}")
        names.add(entry.name)
        p.representations.append(entry)
    return p


def loads(text: str, source: str = "<string>") -> Project:
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProjectError(f"{source}:{exc.lineno}:{exc.colno}: parse error: {exc.msg}") from None
    return from_tree(tree)


def parse_project(path) -> Project:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), str(path))
