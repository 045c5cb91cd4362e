"""Pseudorepresentations, their σ-defect and σ-bound, and recursive averaging.

All fibers carry the Euclidean norm, so operator norms are spectral norms.
Every reduction runs in ascending arrow-id order so that repeated runs are
bit-identical.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .cocycle import Multiplier, ell_all
from .core import FiniteGroupoid, Report
from .measure import CutoffFunction, HaarSystem

__all__ = [
    "RepError",
    "NotAlmostError",
    "SingularError",
    "ConvergenceError",
    "PseudoRep",
    "CorrectionTrace",
    "InverseCertificate",
    "operator_norm",
    "check_shapes",
    "validate_rep",
    "defect_and_bound",
    "is_almost",
    "invert_with_bound_check",
    "average",
    "correct",
    "perturb",
    "conjugate",
    "intertwiner_residual",
]


class RepError(ValueError):
    pass


class NotAlmostError(RepError):
    pass


class SingularError(RepError):
    pass


class ConvergenceError(ArithmeticError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class PseudoRep:
    """Arbitrary matrix per arrow, ``matrices[g]`` of shape ``(dim tgt g, dim src g)``."""

    fiber_dim: np.ndarray
    matrices: tuple

    def __post_init__(self):
        d = np.array(self.fiber_dim, dtype=np.int64).reshape(-1)
        d.setflags(write=False)
        object.__setattr__(self, "fiber_dim", d)
        mats = []
        for m in self.matrices:
            m = np.array(m, dtype=complex)
            if m.ndim != 2:
                raise RepError("every arrow needs a 2-d matrix")
            m.setflags(write=False)
            mats.append(m)
        object.__setattr__(self, "matrices", tuple(mats))

    def __getitem__(self, g: int) -> np.ndarray:
        return self.matrices[g]

    def __len__(self):
        return len(self.matrices)

    def replace(self, updates: dict) -> "PseudoRep":
        mats = list(self.matrices)
        for g, m in updates.items():
            mats[g] = m
        return PseudoRep(self.fiber_dim, mats)

    def __eq__(self, other):
        return (
            isinstance(other, PseudoRep)
            and np.array_equal(self.fiber_dim, other.fiber_dim)
            and len(self) == len(other)
            and all(np.array_equal(a, b) for a, b in zip(self.matrices, other.matrices))
        )

    __hash__ = object.__hash__

    @classmethod
    def from_function(cls, G: FiniteGroupoid, fiber_dim, f) -> "PseudoRep":
        return cls(fiber_dim, [f(g) for g in range(G.n_arrows)])

    @classmethod
    def identity(cls, G: FiniteGroupoid, fiber_dim) -> "PseudoRep":
        d = np.array(fiber_dim).reshape(-1)
        return cls(d, [np.eye(d[G.tgt[g]], d[G.src[g]]) for g in range(G.n_arrows)])


@dataclass
class InverseCertificate:
    """Per-arrow ``‖T(g)⁻¹‖`` against the bound ``b/(1 − r)`` at ``tgt g``."""

    norms: np.ndarray
    bounds: np.ndarray
    rtol: float = 1e-10

    @property
    def ok(self) -> bool:
        return bool(np.all(self.norms <= self.bounds * (1 + self.rtol)))


@dataclass
class TraceRow:
    iter: int
    r_max: float
    b_max: float
    step_max: float
    r: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)


@dataclass
class CorrectionTrace:
    """Averaging iterates: row ``i`` describes the ``i``-th iterate (``i ≥ 1``).

    ``r0`` and ``b0`` hold the per-orbit defect and bound of the input.
    """

    r0: np.ndarray
    b0: np.ndarray
    rows: list[TraceRow] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "r_max", "b_max", "step_max"])
        for row in self.rows:
            w.writerow([row.iter, repr(row.r_max), repr(row.b_max), repr(row.step_max)])
        return buf.getvalue()


def operator_norm(M) -> float:
    """Spectral norm (largest singular value); ``0`` for empty matrices."""
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise RepError("operator_norm: non-finite entries")
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _norms(stack: np.ndarray) -> np.ndarray:
    if stack.shape[0] == 0 or stack.shape[1] == 0 or stack.shape[2] == 0:
        return np.zeros(stack.shape[0])
    if stack.shape[1] == 1 and stack.shape[2] == 1:
        return np.abs(stack[:, 0, 0])
    return np.linalg.svd(stack, compute_uv=False)[:, 0]


def check_shapes(G: FiniteGroupoid, T: PseudoRep) -> None:
    d = T.fiber_dim
    if len(d) != G.n_points or len(T) != G.n_arrows:
        raise RepError(f"pseudorepresentation has {len(d)} fibers / {len(T)} matrices for {G!r}")
    if np.any(d < 0):
        raise RepError("fiber dimensions must be nonnegative")
    for orbit in G.orbits:
        if len(set(d[list(orbit)])) > 1:
            raise RepError(f"fiber dimension varies along orbit {[G.points[x] for x in orbit]}")
    for g, m in enumerate(T.matrices):
        want = (d[G.tgt[g]], d[G.src[g]])
        if m.shape != want:
            raise RepError(f"matrix of {G.arrow_names[g]} has shape {m.shape}, expected {want}")
        if not np.all(np.isfinite(m)):
            raise RepError(f"matrix of {G.arrow_names[g]} has non-finite entries")


def _stack(T: PseudoRep, arrows: np.ndarray, d: int) -> np.ndarray:
    if len(arrows) == 0:
        return np.zeros((0, d, d), dtype=complex)
    return np.stack([T.matrices[a] for a in arrows])


def _orbit_dim(T: PseudoRep, plan) -> int:
    return int(T.fiber_dim[plan.points[0]])


def _defects(G: FiniteGroupoid, sigma: Multiplier, T: PseudoRep) -> tuple[np.ndarray, np.ndarray]:
    """Per-orbit ``(r, b)`` arrays aligned with ``G.orbits``."""
    check_shapes(G, T)
    ell = ell_all(G, sigma)
    r = np.zeros(len(G.orbits))
    b = np.zeros(len(G.orbits))
    for i, plan in enumerate(G.orbit_plans):
        d = _orbit_dim(T, plan)
        if d == 0:
            continue
        A = plan.arrows
        S = _stack(T, A, d)
        unit_dev = _norms(np.eye(d) - S[plan.units]).max()
        s = sigma.entries[A[plan.g], A[plan.h]]
        resid = s[:, None, None] * S[plan.gh] - S[plan.g] @ S[plan.h]
        mult = (ell[A[plan.g]] * _norms(resid)).max() if len(plan.g) else 0.0
        r[i] = unit_dev + mult
        b[i] = (ell[A] * _norms(S)).max()
    return r, b


def defect_and_bound(G: FiniteGroupoid, sigma: Multiplier, T: PseudoRep) -> dict:
    """Map each orbit (tuple of point ids) to its σ-defect and σ-bound."""
    r, b = _defects(G, sigma, T)
    return {orbit: (float(r[i]), float(b[i])) for i, orbit in enumerate(G.orbits)}


def _thresholds(b: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.minimum(0.25, np.where(b > 0, 1.0 / (9.0 * b * b), np.inf))


def is_almost(G: FiniteGroupoid, sigma: Multiplier, T: PseudoRep) -> tuple[bool, dict]:
    """Whether ``r ≤ min{1/4, b⁻²/9}`` on every orbit, with per-orbit margins."""
    r, b = _defects(G, sigma, T)
    margin = _thresholds(b) - r
    return bool(np.all(margin >= 0)), {o: float(margin[i]) for i, o in enumerate(G.orbits)}


def validate_rep(G: FiniteGroupoid, sigma: Multiplier, T: PseudoRep, tol: float = 1e-10) -> Report:
    rep = Report()
    try:
        check_shapes(G, T)
    except RepError as exc:
        rep.add("shape", str(exc))
        return rep
    names = G.arrow_names
    for x, u in enumerate(G.unit):
        dev = operator_norm(np.eye(T.fiber_dim[x]) - T[u])
        if dev > tol:
            rep.add("unital", f"‖I − T(1{G.points[x]})‖ = {dev:.12g}")
    for plan in G.orbit_plans:
        d = _orbit_dim(T, plan)
        if d == 0 or len(plan.g) == 0:
            continue
        A = plan.arrows
        S = _stack(T, A, d)
        s = sigma.entries[A[plan.g], A[plan.h]]
        err = _norms(s[:, None, None] * S[plan.gh] - S[plan.g] @ S[plan.h])
        for k in np.flatnonzero(err > tol):
            g, h = A[plan.g[k]], A[plan.h[k]]
            rep.add("multiplicative", f"‖σ(g,h)T(gh) − T(g)T(h)‖ = {err[k]:.12g} at ({names[g]},{names[h]})")
    return rep


def _inverses(T: PseudoRep, G: FiniteGroupoid) -> list:
    out = [None] * G.n_arrows
    for plan in G.orbit_plans:
        d = _orbit_dim(T, plan)
        S = _stack(T, plan.arrows, d)
        if d:
            for k in np.flatnonzero(np.linalg.matrix_rank(S) < d):
                raise SingularError(f"T({G.arrow_names[plan.arrows[k]]}) is singular")
            try:
                inv = np.linalg.inv(S)
            except np.linalg.LinAlgError as exc:
                raise SingularError(str(exc)) from None
        else:
            inv = S
        for k, a in enumerate(plan.arrows):
            out[a] = inv[k]
    return out


def invert_with_bound_check(
    G: FiniteGroupoid, sigma: Multiplier, T: PseudoRep
) -> tuple[PseudoRep, InverseCertificate]:
    """Arrow-wise inverse of an almost σ-representation.

    The returned certificate compares ``‖T(g)⁻¹‖`` with ``b(T,tg)/(1 − r(T,tg))``.
    """
    r, b = _defects(G, sigma, T)
    if np.any(r > _thresholds(b)):
        raise NotAlmostError("invert_with_bound_check requires an almost σ-representation")
    inv = _inverses(T, G)
    orb = G.orbit_of_point[G.tgt]
    norms = np.array([operator_norm(m) for m in inv])
    bounds = b[orb] / (1.0 - r[orb])
    Tinv = PseudoRep(T.fiber_dim, inv)
    return Tinv, InverseCertificate(norms, bounds)


def _average(G, mu, c, sigma, T) -> PseudoRep:
    w_all = mu.weights * c.values[G.src]
    out = [None] * G.n_arrows
    for plan in G.orbit_plans:
        d = _orbit_dim(T, plan)
        A = plan.arrows
        if d == 0:
            for a in A:
                out[a] = np.zeros((0, 0), dtype=complex)
            continue
        S = _stack(T, A, d)
        try:
            Sinv = np.linalg.inv(S)
        except np.linalg.LinAlgError as exc:
            raise SingularError(str(exc)) from None
        w = w_all[A[plan.h]] * sigma.entries[A[plan.g], A[plan.h]]
        terms = w[:, None, None] * (S[plan.gh] @ Sinv[plan.h])
        acc = np.zeros_like(S)
        np.add.at(acc, plan.g, terms)
        # normality of σ makes the unit average exactly the identity
        acc[plan.units] = np.eye(d)
        for k, a in enumerate(A):
            out[a] = acc[k]
    return PseudoRep(T.fiber_dim, out)


def average(
    G: FiniteGroupoid, mu: HaarSystem, c: CutoffFunction, sigma: Multiplier, T: PseudoRep
) -> PseudoRep:
    """One averaging step.

    ``T̂(g) = Σ_{tgt h = src g} μ(h) c(src h) σ(g,h) T(gh) T(h)⁻¹``.
    """
    check_shapes(G, T)
    return _average(G, mu, c, sigma, T)


def _step(T1: PseudoRep, T0: PseudoRep) -> float:
    return max((operator_norm(a - b) for a, b in zip(T1.matrices, T0.matrices)), default=0.0)


def correct(
    G: FiniteGroupoid,
    mu: HaarSystem,
    c: CutoffFunction,
    sigma: Multiplier,
    T: PseudoRep,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> tuple[PseudoRep, CorrectionTrace]:
    """Iterate :func:`average` until the largest orbit defect is at most ``tol``.

    At least one step is always taken, so an exact input yields a one-row
    trace.  Raises :class:`ConvergenceError` if ``max_iter`` steps do not
    suffice.
    """
    r0, b0 = _defects(G, sigma, T)
    if np.any(r0 > _thresholds(b0)):
        bad = [G.points[x] for i in np.flatnonzero(r0 > _thresholds(b0)) for x in G.orbits[i]]
        raise NotAlmostError(f"not an almost σ-representation on points {bad}")
    trace = CorrectionTrace(r0, b0)
    cur = T
    for i in range(1, max_iter + 1):
        nxt = _average(G, mu, c, sigma, cur)
        r, b = _defects(G, sigma, nxt)
        trace.rows.append(
            TraceRow(i, float(r.max(initial=0.0)), float(b.max(initial=0.0)), _step(nxt, cur), r, b)
        )
        cur = nxt
        if r.max(initial=0.0) <= tol:
            return cur, trace
    raise ConvergenceError(f"defect still {trace.rows[-1].r_max:.3g} after {max_iter} iterations", trace)


def perturb(G: FiniteGroupoid, R: PseudoRep, eps: float, seed: int) -> PseudoRep:
    """Add uniform noise in ``[−ε, ε] + i[−ε, ε]`` to every non-unit arrow.

    Arrows are visited in ascending id order with a single generator, so the
    result depends only on ``(R, eps, seed)``.
    """
    rng = np.random.default_rng(seed)
    is_unit = np.zeros(G.n_arrows, dtype=bool)
    is_unit[G.unit] = True
    out = []
    for g, m in enumerate(R.matrices):
        if is_unit[g] or eps == 0:
            out.append(m)
            continue
        noise = rng.uniform(-eps, eps, m.shape) + 1j * rng.uniform(-eps, eps, m.shape)
        out.append(m + noise)
    return PseudoRep(R.fiber_dim, out)


def conjugate(G: FiniteGroupoid, T: PseudoRep, P) -> PseudoRep:
    """``g ↦ P_{tgt g} T(g) P_{src g}⁻¹`` for a family of invertible matrices."""
    Pinv = [np.linalg.inv(p) for p in P]
    return PseudoRep(
        T.fiber_dim, [P[G.tgt[g]] @ T[g] @ Pinv[G.src[g]] for g in range(G.n_arrows)]
    )


def intertwiner_residual(G: FiniteGroupoid, L, R: PseudoRep, S: PseudoRep) -> float:
    """``max_g ‖L_{tgt g} R(g) − S(g) L_{src g}‖``."""
    return max(
        (operator_norm(L[G.tgt[g]] @ R[g] - S[g] @ L[G.src[g]]) for g in range(G.n_arrows)),
        default=0.0,
    )
