"""Finite groupoids with explicit tables, canonical builders and axiom checks.

Points and arrows carry dense integer ids.  Names are kept alongside for
display and serialization only; every table is indexed by id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GroupoidError",
    "Violation",
    "Report",
    "FiniteGroupoid",
    "Homomorphism",
    "validate_groupoid",
    "validate_homomorphism",
    "build_group",
    "build_transformation_groupoid",
    "build_group_bundle",
    "build_pair_groupoid",
    "restrict",
    "isotropy_and_orbits",
    "Isotropy",
]


class GroupoidError(ValueError):
    """Raised by builders when the input tables do not define a groupoid."""


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self):
        return f"{self.kind}: {self.detail}"


@dataclass
class Report:
    """Outcome of an exhaustive axiom check.

    ``violations`` is empty iff the checked object is valid.  ``notes`` records
    conditions that hold automatically at finite scale and were therefore not
    tested.
    """

    violations: list[Violation] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: str, detail: str) -> None:
        self.violations.append(Violation(kind, detail))

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def extend(self, other: "Report") -> "Report":
        self.violations.extend(other.violations)
        self.notes.extend(other.notes)
        return self

    def __len__(self):
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(str(v) for v in self.violations)


def _frozen(a, dtype=np.int64) -> np.ndarray:
    a = np.array(a, dtype=dtype).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class OrbitPlan:
    """Arrows of one orbit plus its composable pairs, indexed locally."""

    points: tuple[int, ...]
    arrows: np.ndarray
    g: np.ndarray
    h: np.ndarray
    gh: np.ndarray
    units: np.ndarray


class FiniteGroupoid:
    """A finite groupoid ``G ⇉ X`` given by explicit tables.

    ``compose`` maps a composable pair ``(g, h)`` (``src g == tgt h``) to the
    product ``gh``.  It may be passed as a dict or as a square array holding
    ``-1`` on non-composable pairs.  Instances are treated as immutable.
    """

    def __init__(
        self,
        points: Sequence[str],
        src: Sequence[int],
        tgt: Sequence[int],
        compose,
        inverse: Sequence[int],
        unit: Sequence[int],
        arrow_names: Sequence[str] | None = None,
    ):
        self.points = tuple(str(p) for p in points)
        self.src = _frozen(src)
        self.tgt = _frozen(tgt)
        self.inverse = _frozen(inverse)
        self.unit = _frozen(unit)
        n = len(self.src)
        if arrow_names is None:
            arrow_names = [str(i) for i in range(n)]
        self.arrow_names = tuple(str(a) for a in arrow_names)
        if isinstance(compose, dict):
            table = np.full((n, n), -1, dtype=np.int64)
            for (g, h), gh in compose.items():
                table[g, h] = gh
        else:
            table = np.array(compose, dtype=np.int64).reshape(n, n)
        table.setflags(write=False)
        self.table = table

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def n_arrows(self) -> int:
        return len(self.src)

    def compose(self, g: int, h: int) -> int:
        if self.src[g] != self.tgt[h]:
            raise GroupoidError(
                f"arrows {self.arrow_names[g]} and {self.arrow_names[h]} are not composable"
            )
        return int(self.table[g, h])

    def is_unit(self, g: int) -> bool:
        return self.unit[self.src[g]] == g

    def point_index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            return int(name)
        return self.points.index(str(name))

    def arrow_index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            return int(name)
        return self.arrow_names.index(str(name))

    # derived structure, computed once

    @cached_property
    def composable(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All composable pairs ``(g, h, gh)`` in lexicographic order."""
        g, h = np.nonzero(self.src[:, None] == self.tgt[None, :])
        return g, h, self.table[g, h]

    @cached_property
    def target_fibers(self) -> tuple[np.ndarray, ...]:
        """``G^x`` for each point, as ascending arrow ids."""
        return tuple(np.flatnonzero(self.tgt == x) for x in range(self.n_points))

    @cached_property
    def orbits(self) -> tuple[tuple[int, ...], ...]:
        parent = list(range(self.n_points))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for s, t in zip(self.src, self.tgt):
            a, b = find(int(s)), find(int(t))
            if a != b:
                parent[max(a, b)] = min(a, b)
        groups: dict[int, list[int]] = {}
        for x in range(self.n_points):
            groups.setdefault(find(x), []).append(x)
        return tuple(tuple(v) for _, v in sorted(groups.items()))

    @cached_property
    def orbit_of_point(self) -> np.ndarray:
        out = np.empty(self.n_points, dtype=np.int64)
        for i, orb in enumerate(self.orbits):
            out[list(orb)] = i
        return out

    @cached_property
    def orbit_arrows(self) -> tuple[np.ndarray, ...]:
        """Arrows with target (equivalently source) in each orbit."""
        orb = self.orbit_of_point[self.tgt] if self.n_arrows else np.zeros(0, np.int64)
        return tuple(np.flatnonzero(orb == i) for i in range(len(self.orbits)))

    @cached_property
    def orbit_plans(self) -> tuple["OrbitPlan", ...]:
        """Per-orbit index tables in orbit-local arrow numbering."""
        g_all, h_all, gh_all = self.composable
        plans = []
        for orbit, arrows in zip(self.orbits, self.orbit_arrows):
            local = -np.ones(self.n_arrows, dtype=np.int64)
            local[arrows] = np.arange(len(arrows))
            keep = local[g_all] >= 0
            plans.append(
                OrbitPlan(
                    orbit,
                    arrows,
                    local[g_all[keep]],
                    local[h_all[keep]],
                    local[gh_all[keep]],
                    local[self.unit[list(orbit)]],
                )
            )
        return tuple(plans)

    def arrows_between(self, x: int, y: int) -> np.ndarray:
        """``G(x, y)``: arrows from ``x`` to ``y``."""
        return np.flatnonzero((self.src == x) & (self.tgt == y))

    def __repr__(self):
        return f"FiniteGroupoid({self.n_points} points, {self.n_arrows} arrows)"

    def __eq__(self, other):
        if not isinstance(other, FiniteGroupoid):
            return NotImplemented
        return (
            self.points == other.points
            and self.arrow_names == other.arrow_names
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.tgt, other.tgt)
            and np.array_equal(self.inverse, other.inverse)
            and np.array_equal(self.unit, other.unit)
            and np.array_equal(self.table, other.table)
        )

    __hash__ = object.__hash__


@dataclass(frozen=True)
class Homomorphism:
    domain: FiniteGroupoid
    codomain: FiniteGroupoid
    arrow_map: np.ndarray
    point_map: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "arrow_map", _frozen(self.arrow_map))
        object.__setattr__(self, "point_map", _frozen(self.point_map))

    @classmethod
    def identity(cls, G: FiniteGroupoid) -> "Homomorphism":
        return cls(G, G, np.arange(G.n_arrows), np.arange(G.n_points))


def validate_groupoid(G: FiniteGroupoid) -> Report:
    """Check every groupoid axiom exhaustively.

    Dangling ids are reported as ``dangling id`` violations; the remaining
    checks are skipped when any are found since they would index out of range.
    """
    rep = Report()
    n, m = G.n_arrows, G.n_points
    rep.notes.append("topology: discrete, continuity and local compactness automatic")

    for name, arr, bound in (
        ("src", G.src, m),
        ("tgt", G.tgt, m),
        ("inverse", G.inverse, n),
    ):
        if len(arr) != n:
            rep.add("dangling id", f"{name} table has {len(arr)} entries for {n} arrows")
            continue
        for g, v in enumerate(arr):
            if not 0 <= v < bound:
                rep.add("dangling id", f"{name}[{G.arrow_names[g]}] = {v}")
    if len(G.unit) != m:
        rep.add("dangling id", f"unit table has {len(G.unit)} entries for {m} points")
    else:
        for x, u in enumerate(G.unit):
            if not 0 <= u < n:
                rep.add("dangling id", f"unit[{G.points[x]}] = {u}")
    if G.table.shape != (n, n):
        rep.add("dangling id", "composition table has the wrong shape")
    if not rep.ok:
        return rep

    names = G.arrow_names
    composable = G.src[:, None] == G.tgt[None, :]
    for g, h in zip(*np.nonzero(composable)):
        gh = G.table[g, h]
        if not 0 <= gh < n:
            rep.add("dangling id", f"product {names[g]}*{names[h]} undefined")
            continue
        if G.src[gh] != G.src[h] or G.tgt[gh] != G.tgt[g]:
            rep.add("endpoints", f"{names[g]}*{names[h]} = {names[gh]} has wrong source/target")
    if not rep.ok:
        return rep

    for x, u in enumerate(G.unit):
        if G.src[u] != x or G.tgt[u] != x:
            rep.add("unit", f"unit of {G.points[x]} is not a loop at {G.points[x]}")
    for g in range(n):
        s, t = G.src[g], G.tgt[g]
        if G.table[g, G.unit[s]] != g or G.table[G.unit[t], g] != g:
            rep.add("unit", f"unit laws fail for {names[g]}")
        gi = G.inverse[g]
        if G.src[gi] != t or G.tgt[gi] != s:
            rep.add("inverse", f"inverse of {names[g]} has wrong endpoints")
            continue
        if G.table[g, gi] != G.unit[t] or G.table[gi, g] != G.unit[s]:
            rep.add("inverse", f"{names[g]} times its inverse is not a unit")
        if G.inverse[gi] != g:
            rep.add("inverse", f"inverse of inverse of {names[g]} differs")

    g_idx, h_idx, gh_idx = G.composable
    # (gh)k == g(hk) for every composable triple, grouped by the middle arrow
    for g, h, gh in zip(g_idx, h_idx, gh_idx):
        ks = np.flatnonzero(G.tgt == G.src[h])
        left = G.table[gh, ks]
        right = G.table[g, G.table[h, ks]]
        for k in ks[left != right]:
            rep.add("associativity", f"({names[g]}*{names[h]})*{names[k]} != {names[g]}*({names[h]}*{names[k]})")
    return rep


def validate_homomorphism(phi: Homomorphism) -> Report:
    rep = Report()
    H, G = phi.domain, phi.codomain
    a, p = phi.arrow_map, phi.point_map
    if len(a) != H.n_arrows or len(p) != H.n_points:
        rep.add("dangling id", "homomorphism tables are not total")
        return rep
    if np.any((a < 0) | (a >= G.n_arrows)) or np.any((p < 0) | (p >= G.n_points)):
        rep.add("dangling id", "homomorphism maps outside the codomain")
        return rep
    for h in range(H.n_arrows):
        if G.src[a[h]] != p[H.src[h]] or G.tgt[a[h]] != p[H.tgt[h]]:
            rep.add("endpoints", f"image of {H.arrow_names[h]} has wrong endpoints")
    for y in range(H.n_points):
        if a[H.unit[y]] != G.unit[p[y]]:
            rep.add("unit", f"unit of {H.points[y]} not sent to a unit")
    for h, k, hk in zip(*H.composable):
        if G.table[a[h], a[k]] != a[hk]:
            rep.add("multiplicative", f"phi({H.arrow_names[h]}*{H.arrow_names[k]}) != phi(h)phi(k)")
    return rep


def _check_group_table(table: np.ndarray) -> int:
    """Return the identity of a Cayley table or raise naming the failed axiom."""
    n = table.shape[0]
    if table.shape != (n, n) or n == 0:
        raise GroupoidError("closure: table must be a non-empty square")
    if np.any((table < 0) | (table >= n)):
        raise GroupoidError("closure: entries must be element indices")
    idx = np.arange(n)
    ids = [e for e in range(n) if np.array_equal(table[e], idx) and np.array_equal(table[:, e], idx)]
    if not ids:
        raise GroupoidError("identity: no two-sided identity element")
    e = ids[0]
    # associativity: (ab)c == a(bc) for all triples, vectorized over c
    lhs = table[table[:, :, None], idx[None, None, :]]
    rhs = table[idx[:, None, None], table[None, :, :]]
    if not np.array_equal(lhs, rhs):
        a, b, c = (int(v[0]) for v in np.nonzero(lhs != rhs))
        raise GroupoidError(f"associativity: ({a}*{b})*{c} != {a}*({b}*{c})")
    for a in range(n):
        if not np.any(table[a] == e):
            raise GroupoidError(f"inverse: element {a} has no inverse")
    return e


def build_group(order_table, names: Sequence[str] | None = None, point: str = "*") -> FiniteGroupoid:
    """One-point groupoid of a group given by its Cayley table.

    ``order_table[a][b]`` is the index of the product ``ab``.
    """
    return build_group_bundle({point: order_table}, names={point: names} if names else None)


def build_group_bundle(fibers, names=None) -> FiniteGroupoid:
    """Disjoint union of groups, one per point; every arrow is a loop.

    ``fibers`` maps point name to Cayley table (insertion order fixes point
    ids).  Arrows are numbered point by point, elements in table order.
    """
    points = list(fibers)
    src, arrow_names, offsets, units = [], [], [], []
    tables = []
    for x, p in enumerate(points):
        t = np.array(fibers[p], dtype=np.int64)
        if t.ndim != 2:
            raise GroupoidError(f"closure: fiber at {p} is not a square table")
        try:
            e = _check_group_table(t)
        except GroupoidError as exc:
            raise GroupoidError(f"fiber at {p}: {exc}") from None
        offsets.append(len(src))
        units.append(len(src) + e)
        tables.append(t)
        labels = (names or {}).get(p) or [str(i) for i in range(len(t))]
        for i in range(len(t)):
            src.append(x)
            arrow_names.append(f"({labels[i]},{p})" if len(points) > 1 or p != "*" else labels[i])
    n = len(src)
    table = np.full((n, n), -1, dtype=np.int64)
    inverse = np.empty(n, dtype=np.int64)
    for t, off, u in zip(tables, offsets, units):
        k = len(t)
        table[off:off + k, off:off + k] = t + off
        for a in range(k):
            inverse[off + a] = off + int(np.flatnonzero(t[a] == u - off)[0])
    return FiniteGroupoid(points, src, src, table, inverse, units, arrow_names)


def build_transformation_groupoid(group_table, points: Sequence[str], action, names=None) -> FiniteGroupoid:
    """Action groupoid of a left action of a finite group on ``points``.

    ``action`` is either a callable ``(x, k) -> point index`` or a table with
    ``action[k][x]``.  The arrow ``(k, x)`` goes from ``x`` to ``k·x`` and
    composition is ``(k', k·x)(k, x) = (k'k, x)``.  Arrow ids are
    ``k * len(points) + x``.
    """
    t = np.array(group_table, dtype=np.int64)
    e = _check_group_table(t)
    m, order = len(points), len(t)
    if callable(action):
        act = np.array([[action(x, k) for x in range(m)] for k in range(order)], dtype=np.int64)
    else:
        act = np.array(action, dtype=np.int64).reshape(order, m)
    if np.any((act < 0) | (act >= m)):
        raise GroupoidError("action: image outside the point set")
    if not np.array_equal(act[e], np.arange(m)):
        raise GroupoidError("action: identity does not act trivially")
    for k1, k2 in product(range(order), repeat=2):
        if not np.array_equal(act[t[k1, k2]], act[k1][act[k2]]):
            raise GroupoidError(f"action: ({k1}*{k2})·x != {k1}·({k2}·x)")
    labels = names or [str(k) for k in range(order)]
    n = order * m
    aid = lambda k, x: k * m + x  # noqa: E731
    src = np.tile(np.arange(m), order)
    tgt = act.reshape(-1)
    table = np.full((n, n), -1, dtype=np.int64)
    inverse = np.empty(n, dtype=np.int64)
    inv_el = [int(np.flatnonzero(t[k] == e)[0]) for k in range(order)]
    for k, x in product(range(order), range(m)):
        y = act[k, x]
        inverse[aid(k, x)] = aid(inv_el[k], y)
        for k2 in range(order):
            table[aid(k2, y), aid(k, x)] = aid(t[k2, k], x)
    arrow_names = [f"({labels[k]},{points[x]})" for k in range(order) for x in range(m)]
    return FiniteGroupoid(points, src, tgt, table, inverse, [aid(e, x) for x in range(m)], arrow_names)


def build_pair_groupoid(points: Sequence[str]) -> FiniteGroupoid:
    """Pair groupoid ``X × X``; the arrow ``(y, x)`` goes from ``x`` to ``y``.

    Arrow id of ``(y, x)`` is ``y * len(points) + x``.
    """
    m = len(points)
    n = m * m
    src = np.tile(np.arange(m), m)
    tgt = np.repeat(np.arange(m), m)
    table = np.full((n, n), -1, dtype=np.int64)
    for z, y, x in product(range(m), repeat=3):
        table[z * m + y, y * m + x] = z * m + x
    inverse = [x * m + y for y in range(m) for x in range(m)]
    names = [f"({points[y]},{points[x]})" for y in range(m) for x in range(m)]
    return FiniteGroupoid(points, src, tgt, table, inverse, [x * m + x for x in range(m)], names)


def restrict(G: FiniteGroupoid, V: Iterable) -> tuple[FiniteGroupoid, Homomorphism]:
    """Full subgroupoid ``G|V`` together with its inclusion into ``G``.

    Points and arrows of ``G|V`` keep their relative order from ``G``.
    """
    pts = sorted({G.point_index(v) for v in V})
    if any(not 0 <= p < G.n_points for p in pts):
        raise GroupoidError("restrict: subset is not contained in the point set")
    inside = np.zeros(G.n_points, dtype=bool)
    inside[pts] = True
    arrows = np.flatnonzero(inside[G.src] & inside[G.tgt])
    new_point = {p: i for i, p in enumerate(pts)}
    new_arrow = -np.ones(G.n_arrows, dtype=np.int64)
    new_arrow[arrows] = np.arange(len(arrows))
    table = G.table[np.ix_(arrows, arrows)]
    table = np.where(table >= 0, new_arrow[np.maximum(table, 0)], -1)
    H = FiniteGroupoid(
        [G.points[p] for p in pts],
        [new_point[int(G.src[a])] for a in arrows],
        [new_point[int(G.tgt[a])] for a in arrows],
        table,
        new_arrow[G.inverse[arrows]],
        new_arrow[G.unit[pts]],
        [G.arrow_names[a] for a in arrows],
    )
    return H, Homomorphism(H, G, arrows, pts)


@dataclass(frozen=True)
class Isotropy:
    """Isotropy group ``G(x)``: its arrows and Cayley table in local indices."""

    point: int
    arrows: tuple[int, ...]
    table: np.ndarray


def isotropy_and_orbits(G: FiniteGroupoid) -> tuple[dict[int, Isotropy], tuple[tuple[int, ...], ...]]:
    iso = {}
    for x in range(G.n_points):
        arrows = G.arrows_between(x, x)
        local = {int(a): i for i, a in enumerate(arrows)}
        table = np.array([[local[int(G.table[a, b])] for b in arrows] for a in arrows], dtype=np.int64)
        iso[x] = Isotropy(x, tuple(int(a) for a in arrows), table)
    return iso, G.orbits

