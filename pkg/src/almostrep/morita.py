"""Inverse and direct images of representations along groupoid homomorphisms.

Coefficients are complex scalars, so the coefficient transport ``a ↦ a^{g,y}``
is the identity and the third pushforward condition holds automatically.

For a homomorphism ``φ: H → G`` the pushforward fiber over ``x`` is modelled
by a chosen pair ``(g_x, y_x)`` with ``tgt g_x = x`` and ``src g_x = φ(y_x)``:
the class ``[g_x, f]`` is identified with ``f ∈ F_{y_x}``.  Any other class
``[g, f]`` over ``x`` is moved onto the representative through the unique
``h: y → y_x`` with ``φ(h) = g_x⁻¹ g``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cocycle import Multiplier, is_isometric
from .core import FiniteGroupoid, Homomorphism, restrict
from .hilbert import is_unitary
from .measure import CutoffFunction, HaarSystem
from .rep import (
    NotAlmostError,
    PseudoRep,
    RepError,
    check_shapes,
    correct,
    is_almost,
    validate_rep,
)

__all__ = [
    "MoritaError",
    "PFReport",
    "PushforwardSection",
    "check_pf",
    "lift",
    "pullback",
    "pullback_multiplier",
    "default_section",
    "section_from_arrows",
    "pushforward",
    "canonical_equivalence",
    "section_equivalence",
    "extend_and_correct",
    "regular_rep",
    "separates",
]


class MoritaError(ValueError):
    pass


@dataclass(frozen=True)
class PFReport:
    pf1: bool
    pf2: bool
    pf3: str = "automatic: scalar coefficients, a^{g,y} = a"
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.pf1 and self.pf2


@dataclass(frozen=True)
class PushforwardSection:
    """One representative ``(g_x, y_x)`` of ``Z = G ×_{s,φ} Y`` per point of ``G``."""

    pairs: tuple[tuple[int, int], ...]

    def validate(self, phi: Homomorphism) -> None:
        G = phi.codomain
        if len(self.pairs) != G.n_points:
            raise MoritaError("section representative missing for some codomain point")
        for x, (g, y) in enumerate(self.pairs):
            if G.tgt[g] != x or G.src[g] != phi.point_map[y]:
                raise MoritaError(f"section entry for {G.points[x]} does not lie in Z over that point")


def check_pf(phi: Homomorphism) -> PFReport:
    """Finite form of the lifting (full faithfulness) and surjectivity conditions."""
    H, G = phi.domain, phi.codomain
    pf1, problems = True, []
    for y in range(H.n_points):
        for z in range(H.n_points):
            images = phi.arrow_map[H.arrows_between(y, z)]
            counts = np.bincount(images, minlength=G.n_arrows)
            for g in G.arrows_between(phi.point_map[y], phi.point_map[z]):
                if counts[g] != 1:
                    pf1 = False
                    problems.append(
                        f"{G.arrow_names[g]} has {counts[g]} lifts {H.points[y]} -> {H.points[z]}"
                    )
    reachable = np.isin(G.src, phi.point_map)
    covered = np.zeros(G.n_points, dtype=bool)
    covered[G.tgt[reachable]] = True
    pf2 = bool(np.all(covered))
    if not pf2:
        problems.append("q is not onto: " + ",".join(G.points[x] for x in np.flatnonzero(~covered)))
    return PFReport(pf1, pf2, detail="; ".join(problems))


def lift(phi: Homomorphism, g: int, y: int, z: int) -> int:
    """The unique ``h: y → z`` with ``φ(h) = g``."""
    H = phi.domain
    cands = [h for h in H.arrows_between(y, z) if phi.arrow_map[h] == g]
    if len(cands) != 1:
        raise MoritaError(
            f"lifting fails: {len(cands)} arrows {H.points[y]} -> {H.points[z]} over "
            f"{phi.codomain.arrow_names[g]}"
        )
    return int(cands[0])


def pullback_multiplier(phi: Homomorphism, sigma: Multiplier) -> Multiplier:
    a = phi.arrow_map
    return Multiplier(sigma.entries[np.ix_(a, a)])


def pullback(phi: Homomorphism, sigma: Multiplier, R: PseudoRep) -> tuple[PseudoRep, Multiplier]:
    """``S(h) = R(φh)``, a representation for ``φ*σ(h,k) = σ(φh, φk)``."""
    check_shapes(phi.codomain, R)
    S = PseudoRep(R.fiber_dim[phi.point_map], [R[a] for a in phi.arrow_map])
    return S, pullback_multiplier(phi, sigma)


def default_section(phi: Homomorphism) -> PushforwardSection:
    """Smallest arrow id ``g`` with ``tgt g = x`` and ``src g ∈ φ(Y)``; smallest ``y`` over it."""
    G = phi.codomain
    pairs = []
    for x in range(G.n_points):
        pair = None
        for g in G.target_fibers[x]:
            ys = np.flatnonzero(phi.point_map == G.src[g])
            if len(ys):
                pair = (int(g), int(ys[0]))
                break
        if pair is None:
            raise MoritaError(f"section representative missing for {G.points[x]}")
        pairs.append(pair)
    return PushforwardSection(tuple(pairs))


def section_from_arrows(phi: Homomorphism, arrows: Sequence[int]) -> PushforwardSection:
    """Section given one arrow per codomain point; ``y`` is the smallest preimage of its source."""
    G = phi.codomain
    if len(arrows) != G.n_points:
        raise MoritaError("section representative missing: need one arrow per point")
    pairs = []
    for g in arrows:
        ys = np.flatnonzero(phi.point_map == G.src[g])
        if not len(ys):
            raise MoritaError(f"source of {G.arrow_names[g]} is not in the image of φ")
        pairs.append((int(g), int(ys[0])))
    section = PushforwardSection(tuple(pairs))
    section.validate(phi)
    return section


def _transport(phi, sigma, S, g, y, rep):
    """Matrix taking ``[g, f]`` (``f ∈ F_y``) to coordinates at the representative ``rep``."""
    G = phi.codomain
    g2, y2 = rep
    k = G.compose(int(G.inverse[g2]), g)
    h = lift(phi, k, y, y2)
    return S[h] / sigma.entries[g2, k]


def _check_isometric_inputs(phi, sigma, S):
    G, H = phi.codomain, phi.domain
    if not is_isometric(G, sigma):
        raise MoritaError("pushforward requires an isometric multiplier")
    check_shapes(H, S)
    if not np.all(is_unitary(S, 1e-10)):
        raise MoritaError("pushforward requires an isometric (unitary) representation")
    report = validate_rep(H, pullback_multiplier(phi, sigma), S)
    if not report.ok:
        raise MoritaError(f"not an exact φ*σ-representation: {report}")


def pushforward(
    phi: Homomorphism,
    sigma: Multiplier,
    S: PseudoRep,
    section: PushforwardSection | None = None,
) -> PseudoRep:
    """Direct image ``φ_*S`` realized on the section's fibers.

    For ``g': x₁ → x₂`` with representatives ``(g₁,y₁)``, ``(g₂,y₂)`` and the
    lift ``h: y₁ → y₂`` of ``g₂⁻¹g'g₁``,
    ``R(g') = σ(g₂, φh)⁻¹ σ(g', g₁) S(h)``.
    """
    report = check_pf(phi)
    if not report.pf1:
        raise MoritaError(f"lifting condition fails: {report.detail}")
    if not report.pf2:
        raise MoritaError(f"section representative missing: {report.detail}")
    _check_isometric_inputs(phi, sigma, S)
    G = phi.codomain
    section = section or default_section(phi)
    section.validate(phi)
    dims = [S.fiber_dim[y] for _, y in section.pairs]
    mats = []
    for gp in range(G.n_arrows):
        g1, y1 = section.pairs[G.src[gp]]
        moved = G.compose(gp, g1)
        mats.append(sigma.entries[gp, g1] * _transport(phi, sigma, S, moved, y1, section.pairs[G.tgt[gp]]))
    return PseudoRep(dims, mats)


def canonical_equivalence(
    phi: Homomorphism, sigma: Multiplier, S: PseudoRep, section: PushforwardSection | None = None
) -> list:
    """Unitary ``L_y: F_y → (φ_*F)_{φy}`` intertwining ``S`` with ``φ*φ_*S``."""
    G = phi.codomain
    section = section or default_section(phi)
    return [
        _transport(phi, sigma, S, int(G.unit[phi.point_map[y]]), y, section.pairs[phi.point_map[y]])
        for y in range(phi.domain.n_points)
    ]


def section_equivalence(
    phi: Homomorphism,
    sigma: Multiplier,
    S: PseudoRep,
    first: PushforwardSection,
    second: PushforwardSection,
) -> list:
    """Unitary ``L_x`` intertwining the pushforwards along two sections."""
    return [
        _transport(phi, sigma, S, g, y, second.pairs[x]) for x, (g, y) in enumerate(first.pairs)
    ]


def extend_and_correct(
    G: FiniteGroupoid,
    mu: HaarSystem,
    c: CutoffFunction,
    sigma: Multiplier,
    orbit_points,
    R_O: PseudoRep,
    T_out: dict,
    fiber_dim: dict | None = None,
    tol: float = 1e-12,
    max_iter: int = 200,
):
    """Extend an exact representation of ``G|O`` by arbitrary matrices, then correct.

    ``O`` must be invariant.  ``T_out`` maps arrows outside ``G|O`` to matrices;
    fiber dimensions off ``O`` are read from those shapes unless given in
    ``fiber_dim`` (point id -> dim).  Unit arrows off ``O`` are set to the
    identity.  Returns ``(R, trace)``.
    """
    H, inc = restrict(G, orbit_points)
    inside = np.zeros(G.n_points, dtype=bool)
    inside[inc.point_map] = True
    if np.any(inside[G.src] != inside[G.tgt]):
        raise MoritaError("extend_and_correct: the point subset is not invariant")
    check_shapes(H, R_O)
    dims = -np.ones(G.n_points, dtype=np.int64)
    dims[inc.point_map] = R_O.fiber_dim
    for x, d in (fiber_dim or {}).items():
        dims[G.point_index(x)] = d
    for g, m in T_out.items():
        if inside[G.tgt[g]]:
            raise MoritaError(f"T_out assigns {G.arrow_names[g]}, which lies over O")
        m = np.asarray(m)
        for x, d in ((G.tgt[g], m.shape[0]), (G.src[g], m.shape[1])):
            if dims[x] < 0:
                dims[x] = d
    for orbit in G.orbits:
        known = [dims[x] for x in orbit if dims[x] >= 0]
        for x in orbit:
            if dims[x] < 0:
                if not known:
                    raise MoritaError(f"no fiber dimension known at {G.points[x]}")
                dims[x] = known[0]
    mats = [None] * G.n_arrows
    for local, g in enumerate(inc.arrow_map):
        mats[g] = R_O[local]
    for g in range(G.n_arrows):
        if mats[g] is not None:
            continue
        if G.is_unit(g):
            mats[g] = np.eye(dims[G.src[g]])
        elif g in T_out:
            mats[g] = np.asarray(T_out[g], dtype=complex)
        else:
            raise MoritaError(f"no matrix supplied for {G.arrow_names[g]}")
    T = PseudoRep(dims, mats)
    try:
        check_shapes(G, T)
    except RepError as exc:
        raise MoritaError(str(exc)) from None
    ok, margins = is_almost(G, sigma, T)
    if not ok:
        raise NotAlmostError(
            "assembled extension is not almost a representation; use a smaller perturbation"
        )
    return correct(G, mu, c, sigma, T, tol=tol, max_iter=max_iter)


def regular_rep(G: FiniteGroupoid, mu: HaarSystem | None = None) -> PseudoRep:
    """Left-regular representation on functions over the target fibers.

    In the orthonormal basis ``δ_h / √μ(h)`` of the μ-weighted inner product
    left translation by ``g`` sends basis vector ``h`` to ``gh``; left
    invariance of μ makes this a permutation matrix.
    """
    fibers = G.target_fibers
    pos = np.empty(G.n_arrows, dtype=np.int64)
    for f in fibers:
        pos[f] = np.arange(len(f))
    dims = np.array([len(f) for f in fibers])
    mats = []
    for g in range(G.n_arrows):
        s, t = G.src[g], G.tgt[g]
        M = np.zeros((dims[t], dims[s]))
        for h in fibers[s]:
            gh = G.table[g, h]
            scale = 1.0 if mu is None else np.sqrt(mu.weights[h] / mu.weights[gh])
            M[pos[gh], pos[h]] = scale
        mats.append(M)
    return PseudoRep(dims, mats)


def separates(G: FiniteGroupoid, reps: Sequence[PseudoRep], tol: float = 1e-10):
    """Whether ``g ↦ (src g, tgt g, (R_i(g))_i)`` is injective.

    Returns ``(True, None)`` or ``(False, (g, h))`` with the lexicographically
    smallest colliding pair.
    """
    for g in range(G.n_arrows):
        for h in range(g + 1, G.n_arrows):
            if G.src[g] != G.src[h] or G.tgt[g] != G.tgt[h]:
                continue
            if all(np.max(np.abs(R[g] - R[h]), initial=0.0) <= tol for R in reps):
                return False, (g, h)
    return True, None
