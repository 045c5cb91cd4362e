"""Standard small groupoids and exact (projective) representations on them."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .cocycle import Cochain1, Multiplier, apply_coboundary, trivial_multiplier
from .core import (
    FiniteGroupoid,
    build_group,
    build_group_bundle,
    build_pair_groupoid,
    build_transformation_groupoid,
    restrict,
)
from .rep import PseudoRep, conjugate


def cyclic_table(n: int) -> np.ndarray:
    a = np.arange(n)
    return (a[:, None] + a[None, :]) % n


def klein_table() -> np.ndarray:
    a = np.arange(4)
    return a[:, None] ^ a[None, :]


def symmetric_elements(n: int) -> list[tuple[int, ...]]:
    return list(permutations(range(n)))


def symmetric_table(n: int) -> np.ndarray:
    """Cayley table of ``S_n``; ``(ab)[i] = a[b[i]]``."""
    els = symmetric_elements(n)
    index = {p: i for i, p in enumerate(els)}
    return np.array([[index[tuple(a[i] for i in b)] for b in els] for a in els])


def permutation_matrix(p) -> np.ndarray:
    n = len(p)
    M = np.zeros((n, n))
    M[list(p), range(n)] = 1.0
    return M


def z2():
    return build_group(cyclic_table(2))


def z4():
    return build_group(cyclic_table(4))


def s3():
    return build_group(symmetric_table(3))


def v4():
    return build_group(klein_table(), names=["e", "a", "b", "ab"])


def pair(points=("a", "b")):
    return build_pair_groupoid(list(points))


def bundle_pq():
    """ℤ/2 at ``p`` and ℤ/2 at ``q``."""
    return build_group_bundle({"p": cyclic_table(2), "q": cyclic_table(2)})


def pm_bundle():
    """Three-point shadow of the ``±x`` bundle: trivial fiber at 0, ℤ/2 at ±1."""
    return build_group_bundle({"-1": cyclic_table(2), "0": cyclic_table(1), "1": cyclic_table(2)})


def z4_action():
    """ℤ/4 acting on ``{a, b}`` through ℤ/2: odd elements swap the points."""
    return build_transformation_groupoid(
        cyclic_table(4), ["a", "b"], lambda x, k: x if k % 2 == 0 else 1 - x
    )


def unit_groupoid(points=("u", "v")):
    return build_transformation_groupoid(cyclic_table(1), list(points), lambda x, k: x)


def s3_action():
    """``S_3`` permuting three points (18 arrows)."""
    els = symmetric_elements(3)
    return build_transformation_groupoid(symmetric_table(3), ["0", "1", "2"], lambda x, k: els[k][x])


def s4():
    return build_group(symmetric_table(4))


def s4_action():
    """``S_4`` permuting four points (96 arrows)."""
    els = symmetric_elements(4)
    return build_transformation_groupoid(symmetric_table(4), list("0123"), lambda x, k: els[k][x])


def groupoid_fixtures() -> dict[str, FiniteGroupoid]:
    return {
        "z2": z2(),
        "z4": z4(),
        "s3": s3(),
        "v4": v4(),
        "pair2": pair(),
        "pair3": pair(("a", "b", "c")),
        "bundle_pq": bundle_pq(),
        "pm_bundle": pm_bundle(),
        "z4_action": z4_action(),
        "unit2": unit_groupoid(),
        "s3_action": s3_action(),
        "s4": s4(),
        "pair6": pair(tuple("abcdef")),
        "s4_action": s4_action(),
    }


def multiplier_from_projective(G: FiniteGroupoid, R: PseudoRep) -> Multiplier:
    """Read ``σ(g,h)`` off an exact projective representation: ``R(g)R(h) = σ R(gh)``."""
    e = np.ones((G.n_arrows, G.n_arrows), dtype=complex)
    g, h, gh = G.composable
    for a, b, ab in zip(g, h, gh):
        lhs = R[a] @ R[b]
        k = np.unravel_index(np.argmax(np.abs(R[ab])), R[ab].shape)
        e[a, b] = lhs[k] / R[ab][k]
    return Multiplier(e)


def _unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _well_conditioned(rng, d):
    """Invertible matrix with singular values in ``[1, 1.5]``."""
    return _unitary(rng, d) @ np.diag(rng.uniform(1.0, 1.5, d)) @ _unitary(rng, d)


def regular(G: FiniteGroupoid) -> PseudoRep:
    from .morita import regular_rep

    return regular_rep(G)


def direct_sum(G: FiniteGroupoid, *reps: PseudoRep) -> PseudoRep:
    dims = sum(r.fiber_dim for r in reps)
    mats = []
    for g in range(G.n_arrows):
        blocks = [r[g] for r in reps]
        M = np.zeros((sum(b.shape[0] for b in blocks), sum(b.shape[1] for b in blocks)), dtype=complex)
        i = j = 0
        for b in blocks:
            M[i:i + b.shape[0], j:j + b.shape[1]] = b
            i, j = i + b.shape[0], j + b.shape[1]
        mats.append(M)
    return PseudoRep(dims, mats)


@dataclass(frozen=True)
class RepFixture:
    name: str
    G: FiniteGroupoid
    sigma: Multiplier
    R: PseudoRep


def _s3_reps(G):
    els = symmetric_elements(3)
    perm = PseudoRep([3], [permutation_matrix(p) for p in els])
    sign = PseudoRep([1], [[[np.linalg.det(permutation_matrix(p))]] for p in els])
    # orthonormal basis of the sum-zero plane
    B = np.array([[1, -1, 0], [1, 1, -2]], dtype=float)
    B /= np.linalg.norm(B, axis=1, keepdims=True)
    std = PseudoRep([2], [B @ m @ B.T for m in perm.matrices])
    return perm, sign, std


def rep_fixtures(seed: int = 7) -> list[RepFixture]:
    """Exact σ-representations covering groups, pair groupoids, bundles and actions."""
    rng = np.random.default_rng(seed)
    out = []

    def add(name, G, R, sigma=None):
        out.append(RepFixture(name, G, sigma if sigma is not None else trivial_multiplier(G), R))

    G = z2()
    add("z2_trivial", G, PseudoRep([1], [[[1]], [[1]]]))
    add("z2_sign", G, PseudoRep([1], [[[1]], [[-1]]]))
    add("z2_regular", G, regular(G))
    add("z2_nonunitary", G, PseudoRep([2], [np.eye(2), [[1, 1], [0, -1]]]))
    rho = Cochain1([1.0, np.sqrt(2.0)])
    sig = apply_coboundary(G, trivial_multiplier(G), rho)
    add("z2_projective_nonisometric", G, PseudoRep([1], [[[1]], [[-np.sqrt(2.0)]]]), sig)

    G = z4()
    add("z4_character", G, PseudoRep([1], [[[1j**k]] for k in range(4)]))
    rot = [np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]) for t in np.arange(4) * np.pi / 2]
    add("z4_rotation", G, PseudoRep([2], rot))
    add("z4_regular", G, regular(G))

    G = s3()
    perm, sign, std = _s3_reps(G)
    add("s3_sign", G, sign)
    add("s3_permutation", G, perm)
    add("s3_standard", G, std)
    add("s3_regular", G, regular(G))
    big = direct_sum(G, perm, perm, std)
    add("s3_dim8_conjugated", G, conjugate(G, big, [_well_conditioned(rng, 8)]))

    G = v4()
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Z = np.diag([1.0, -1.0]).astype(complex)
    pauli = PseudoRep([2], [np.eye(2), X, Z, X @ Z])
    add("v4_pauli_projective", G, pauli, multiplier_from_projective(G, pauli))
    rho = np.exp(rng.uniform(-0.4, 0.4, 4))
    rho[0] = 1.0
    scaled = PseudoRep([2], [rho[g] * pauli[g] for g in range(4)])
    add("v4_pauli_nonisometric", G, scaled, multiplier_from_projective(G, scaled))

    G = pair()
    add("pair2_identity3", G, PseudoRep.identity(G, [3, 3]))
    G = pair(("a", "b", "c"))
    P = [_unitary(rng, 2) for _ in range(3)]
    add("pair3_unitary_frames", G, conjugate(G, PseudoRep.identity(G, [2, 2, 2]), P))
    P = [_well_conditioned(rng, 2) for _ in range(3)]
    add("pair3_nonunitary_frames", G, conjugate(G, PseudoRep.identity(G, [2, 2, 2]), P))

    G = bundle_pq()
    add("bundle_sign_trivial", G, PseudoRep([1, 1], [[[1]], [[-1]], [[1]], [[1]]]))
    add("bundle_regular", G, regular(G))

    G = pm_bundle()
    add("pm_bundle_sign", G, PseudoRep([1, 1, 1], [[[1]], [[-1]], [[1]], [[1]], [[-1]]]))

    G = z4_action()
    add("z4_action_regular", G, regular(G))
    H, inc = restrict(G, ["a"])
    from .morita import pushforward

    sign_a = PseudoRep([1], [[[1]], [[-1]]])
    add("z4_action_induced_sign", G, pushforward(inc, trivial_multiplier(G), sign_a))
    Q = [_well_conditioned(rng, 4) for _ in range(2)]
    add("z4_action_regular_conjugated", G, conjugate(G, regular(G), Q))

    G = s3_action()
    add("s3_action_regular", G, regular(G))
    return out
