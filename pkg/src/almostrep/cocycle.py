"""Scalar multipliers (normal 2-cocycles) and positive-real coboundaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FiniteGroupoid, Report
from .measure import CutoffFunction, HaarSystem, is_normalizing

__all__ = [
    "CocycleError",
    "Multiplier",
    "Cochain1",
    "trivial_multiplier",
    "validate_multiplier",
    "ell",
    "apply_coboundary",
    "isometrize",
    "is_isometric",
    "random_multiplier",
]

TOL = 1e-12


class CocycleError(ValueError):
    pass


@dataclass(frozen=True)
class Multiplier:
    """``entries[g, h] = σ(g, h)`` on composable pairs; other cells are ignored."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=complex)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def __call__(self, g: int, h: int) -> complex:
        return complex(self.entries[g, h])

    @classmethod
    def from_dict(cls, G: FiniteGroupoid, values: dict) -> "Multiplier":
        e = np.ones((G.n_arrows, G.n_arrows), dtype=complex)
        for (g, h), v in values.items():
            e[g, h] = v
        return cls(e)

    def __eq__(self, other):
        return isinstance(other, Multiplier) and np.array_equal(self.entries, other.entries)

    __hash__ = object.__hash__


@dataclass(frozen=True)
class Cochain1:
    """Positive real 1-cochain ``ρ`` with ``ρ(1x) = 1``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def trivial_multiplier(G: FiniteGroupoid) -> Multiplier:
    return Multiplier(np.ones((G.n_arrows, G.n_arrows), dtype=complex))


def validate_multiplier(G: FiniteGroupoid, sigma: Multiplier, tol: float = TOL) -> Report:
    rep = Report(notes=["centrality: automatic for complex scalars"])
    s = sigma.entries
    if s.shape != (G.n_arrows, G.n_arrows):
        rep.add("dangling id", f"multiplier table has shape {s.shape}")
        return rep
    names = G.arrow_names
    g, h, gh = G.composable
    vals = s[g, h]
    for a, b in zip(g[vals == 0], h[vals == 0]):
        rep.add("not invertible", f"σ({names[a]},{names[b]}) = 0")
    if not np.all(np.isfinite(vals)):
        rep.add("not finite", "multiplier has non-finite entries")
        return rep
    normal = (g == G.unit[G.tgt[h]]) | (h == G.unit[G.src[g]])
    bad = normal & (np.abs(vals - 1) > tol)
    for a, b in zip(g[bad], h[bad]):
        rep.add("normality", f"σ({names[a]},{names[b]}) = {s[a, b]!r}, expected 1")
    # σ(g,h)σ(gh,k) = σ(h,k)σ(g,hk) on every composable triple
    for a, b, ab in zip(g, h, gh):
        ks = G.target_fibers[G.src[b]]
        bk = G.table[b, ks]
        lhs = s[a, b] * s[ab, ks]
        rhs = s[b, ks] * s[a, bk]
        for k in ks[np.abs(lhs - rhs) > tol]:
            rep.add("cocycle", f"identity fails on ({names[a]},{names[b]},{names[k]})")
    return rep


def ell(G: FiniteGroupoid, sigma: Multiplier, g: int) -> float:
    """``max{1, 1/|σ(g, g⁻¹)|}``."""
    return max(1.0, 1.0 / abs(sigma.entries[g, G.inverse[g]]))


def ell_all(G: FiniteGroupoid, sigma: Multiplier) -> np.ndarray:
    a = np.arange(G.n_arrows)
    return np.maximum(1.0, 1.0 / np.abs(sigma.entries[a, G.inverse[a]]))


def apply_coboundary(G: FiniteGroupoid, sigma: Multiplier, rho: Cochain1) -> Multiplier:
    """``σ̃(g,h) = ρ(g)ρ(h)/ρ(gh) · σ(g,h)``."""
    r = rho.values
    if len(r) != G.n_arrows:
        raise CocycleError("cochain must have one value per arrow")
    if np.any(r[G.unit] != 1.0):
        x = int(np.flatnonzero(r[G.unit] != 1.0)[0])
        raise CocycleError(f"ρ(1{G.points[x]}) = {r[G.unit[x]]!r}, must be 1 to keep σ normal")
    out = np.array(sigma.entries, dtype=complex)
    g, h, gh = G.composable
    out[g, h] = r[g] * r[h] / r[gh] * sigma.entries[g, h]
    return Multiplier(out)


def is_isometric(G: FiniteGroupoid, sigma: Multiplier, tol: float = TOL) -> bool:
    g, h, _ = G.composable
    return bool(np.all(np.abs(np.abs(sigma.entries[g, h]) - 1) <= tol))


def isometrize(
    G: FiniteGroupoid, mu: HaarSystem, c: CutoffFunction, sigma: Multiplier
) -> tuple[Cochain1, Multiplier]:
    """Cohomologous multiplier of modulus one.

    ``α(g) = Σ_{tgt h = src g} μ(h) c(src h) log|σ(g,h)|`` and ``ρ = exp(−α)``.
    The sum is taken in ascending order of ``h``.
    """
    report = validate_multiplier(G, sigma)
    if not report.ok:
        raise CocycleError(f"invalid multiplier: {report}")
    if not is_normalizing(G, mu, c):
        raise CocycleError("cutoff is not normalizing for the given Haar system")
    g, h, _ = G.composable
    beta = np.log(np.abs(sigma.entries[g, h]))
    alpha = np.zeros(G.n_arrows)
    np.add.at(alpha, g, mu.weights[h] * c.values[G.src[h]] * beta)
    rho = np.exp(-alpha)
    # normality makes α vanish on units; pin it so apply_coboundary accepts ρ
    rho[G.unit] = 1.0
    rho = Cochain1(rho)
    return rho, apply_coboundary(G, sigma, rho)


def random_multiplier(
    G: FiniteGroupoid,
    rng: np.random.Generator,
    spread: float = 4.0,
    phases: bool = True,
) -> Multiplier:
    """Valid multiplier with ``|σ| ∈ [1/spread, spread]``.

    Built as the coboundary of a random positive cochain times a coboundary of
    a random unit-modulus cochain, so the cocycle identity holds by
    construction.
    """
    n = G.n_arrows
    k = np.log(spread) / 3.0
    rho = np.exp(rng.uniform(-k, k, size=n))
    rho[G.unit] = 1.0
    sigma = apply_coboundary(G, trivial_multiplier(G), Cochain1(rho))
    if phases:
        theta = rng.uniform(-np.pi, np.pi, size=n)
        theta[G.unit] = 0.0
        z = np.exp(1j * theta)
        g, h, gh = G.composable
        e = np.array(sigma.entries)
        e[g, h] *= z[g] * z[h] / z[gh]
        sigma = Multiplier(e)
    return sigma
