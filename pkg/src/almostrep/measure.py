"""Haar weight systems and cutoff functions on finite groupoids.

A Haar system is stored as one positive weight per arrow, ``mu[h]`` being the
mass of ``{h}`` in the target-fiber measure at ``tgt h``.  Left invariance
then reduces to ``mu[gh] == mu[h]`` on composable pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FiniteGroupoid, Report

__all__ = [
    "MeasureError",
    "HaarSystem",
    "CutoffFunction",
    "normalized_counting_haar",
    "validate_haar",
    "validate_cutoff",
    "normalize_cutoff",
    "fiber_integral",
]

TOL = 1e-12


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class HaarSystem:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __eq__(self, other):
        return isinstance(other, HaarSystem) and np.array_equal(self.weights, other.weights)

    __hash__ = object.__hash__


@dataclass(frozen=True)
class CutoffFunction:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        return isinstance(other, CutoffFunction) and np.array_equal(self.values, other.values)

    __hash__ = object.__hash__


def normalized_counting_haar(G: FiniteGroupoid) -> HaarSystem:
    """Counting measure on each target fiber scaled to total mass one."""
    sizes = np.bincount(G.tgt, minlength=G.n_points)
    return HaarSystem(1.0 / sizes[G.tgt] if G.n_arrows else np.zeros(0))


def validate_haar(G: FiniteGroupoid, mu: HaarSystem, tol: float = TOL) -> Report:
    rep = Report(notes=["continuity of x -> mu^x: automatic for a discrete groupoid"])
    w = mu.weights
    if len(w) != G.n_arrows:
        rep.add("missing weight", f"{len(w)} weights for {G.n_arrows} arrows")
        return rep
    for h in np.flatnonzero(~(w > 0)):
        rep.add("support", f"weight of {G.arrow_names[h]} is {w[h]!r}, must be positive")
    g, h, gh = G.composable
    bad = np.abs(w[gh] - w[h]) > tol
    for a, b, ab in zip(g[bad], h[bad], gh[bad]):
        rep.add(
            "left invariance",
            f"mu({G.arrow_names[a]}*{G.arrow_names[b]}) = {w[ab]!r} != mu({G.arrow_names[b]}) = {w[b]!r}",
        )
    return rep


def validate_cutoff(G: FiniteGroupoid, c: CutoffFunction) -> Report:
    rep = Report(notes=["compact support of c∘s over compacts: automatic for finite groupoids"])
    v = c.values
    if len(v) != G.n_points:
        rep.add("missing value", f"{len(v)} cutoff values for {G.n_points} points")
        return rep
    for x in np.flatnonzero(v < 0):
        rep.add("nonnegative", f"c({G.points[x]}) = {v[x]!r}")
    for orbit in G.orbits:
        if not np.any(v[list(orbit)] > 0):
            names = ",".join(G.points[x] for x in orbit)
            rep.add("orbit missed", f"c vanishes on the whole orbit {{{names}}}")
    return rep


def fiber_integral(G: FiniteGroupoid, mu: HaarSystem, c: CutoffFunction) -> np.ndarray:
    """``x -> Σ_{tgt h = x} mu(h) c(src h)``, summed in ascending arrow order."""
    out = np.zeros(G.n_points)
    np.add.at(out, G.tgt, mu.weights * c.values[G.src])
    return out


def normalize_cutoff(G: FiniteGroupoid, mu: HaarSystem, c: CutoffFunction) -> CutoffFunction:
    """Divide ``c`` by its fiber integral so that it becomes normalizing."""
    for report in (validate_haar(G, mu), validate_cutoff(G, c)):
        if not report.ok:
            raise MeasureError(f"normalize_cutoff precondition: {report}")
    denom = fiber_integral(G, mu, c)
    if np.any(denom <= 0):
        x = int(np.flatnonzero(denom <= 0)[0])
        raise MeasureError(f"zero denominator at {G.points[x]}")
    return CutoffFunction(c.values / denom)


def is_normalizing(G: FiniteGroupoid, mu: HaarSystem, c: CutoffFunction, tol: float = TOL) -> bool:
    return bool(np.all(np.abs(fiber_integral(G, mu, c) - 1.0) <= tol))


def default_measures(G: FiniteGroupoid) -> tuple[HaarSystem, CutoffFunction]:
    """Normalized counting Haar system with the constant normalizing cutoff."""
    mu = normalized_counting_haar(G)
    return mu, normalize_cutoff(G, mu, CutoffFunction(np.ones(G.n_points)))
