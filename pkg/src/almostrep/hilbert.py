"""Averaged inner products and unitarization of exact representations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cocycle import Multiplier, is_isometric
from .core import FiniteGroupoid
from .measure import CutoffFunction, HaarSystem
from .rep import PseudoRep, RepError, validate_rep

__all__ = [
    "HilbertError",
    "GramFamily",
    "averaged_gram",
    "hermitian_sqrt",
    "unitarize",
    "is_unitary",
]

EIG_FLOOR = 1e-12


class HilbertError(RepError):
    pass


@dataclass(frozen=True)
class GramFamily:
    """Hermitian positive-definite matrix per point."""

    grams: tuple

    def __getitem__(self, x: int) -> np.ndarray:
        return self.grams[x]


def _require_exact_isometric(G, sigma, S, tol=1e-10):
    if not is_isometric(G, sigma):
        raise HilbertError("unitary σ-representations require |σ| = 1")
    report = validate_rep(G, sigma, S, tol)
    if not report.ok:
        raise HilbertError(f"not an exact σ-representation: {report}")


def averaged_gram(
    G: FiniteGroupoid, mu: HaarSystem, c: CutoffFunction, sigma: Multiplier, S: PseudoRep
) -> GramFamily:
    """``H_v = Σ_{tgt h = v} μ(h) c(src h) S(h⁻¹)* S(h⁻¹)``."""
    _require_exact_isometric(G, sigma, S)
    grams = []
    for v in range(G.n_points):
        d = S.fiber_dim[v]
        H = np.zeros((d, d), dtype=complex)
        for h in G.target_fibers[v]:
            A = S[G.inverse[h]]
            H += mu.weights[h] * c.values[G.src[h]] * (A.conj().T @ A)
        H = 0.5 * (H + H.conj().T)
        if d and np.linalg.eigvalsh(H)[0] < EIG_FLOOR:
            raise HilbertError(f"averaged Gram at {G.points[v]} is not positive definite")
        grams.append(H)
    return GramFamily(tuple(grams))


def hermitian_sqrt(H: np.ndarray, inverse: bool = False) -> np.ndarray:
    """``H^{1/2}`` (or ``H^{-1/2}``) of a Hermitian positive-definite matrix.

    Eigenvalues below ``1e-12`` raise instead of being clamped.
    """
    if H.size == 0:
        return np.zeros_like(H)
    w, V = np.linalg.eigh(H)
    if w[0] < EIG_FLOOR:
        raise HilbertError(f"smallest eigenvalue {w[0]:.3g} is not positive")
    p = -0.5 if inverse else 0.5
    return (V * w**p) @ V.conj().T


def unitarize(
    G: FiniteGroupoid,
    mu: HaarSystem,
    c: CutoffFunction,
    sigma: Multiplier,
    S: PseudoRep,
    return_intertwiner: bool = False,
):
    """Conjugate ``S`` into a unitary σ-representation.

    With ``H`` the averaged Gram family, ``S̃(g) = H_{tg}^{1/2} S(g) H_{sg}^{-1/2}``.
    The family ``L_v = H_v^{1/2}`` intertwines ``S`` with ``S̃`` and is
    returned as well when ``return_intertwiner`` is set.
    """
    H = averaged_gram(G, mu, c, sigma, S)
    root = [hermitian_sqrt(h) for h in H.grams]
    inv_root = [hermitian_sqrt(h, inverse=True) for h in H.grams]
    St = PseudoRep(
        S.fiber_dim, [root[G.tgt[g]] @ S[g] @ inv_root[G.src[g]] for g in range(G.n_arrows)]
    )
    if return_intertwiner:
        return St, root
    return St


def is_unitary(S: PseudoRep, tol: float = 1e-10) -> np.ndarray:
    """Per-arrow flag ``‖S(g)*S(g) − I‖ ≤ tol`` (square matrices only)."""
    out = np.empty(len(S), dtype=bool)
    for g, m in enumerate(S.matrices):
        if m.shape[0] != m.shape[1]:
            raise HilbertError("is_unitary expects square matrices")
        dev = m.conj().T @ m - np.eye(m.shape[0])
        out[g] = (np.linalg.norm(dev, 2) if m.size else 0.0) <= tol
    return out
