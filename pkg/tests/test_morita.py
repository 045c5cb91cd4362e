import numpy as np
import pytest

from almostrep import fixtures as fx
from almostrep.cocycle import trivial_multiplier
from almostrep.core import FiniteGroupoid, Homomorphism, restrict
from almostrep.hilbert import is_unitary, unitarize
from almostrep.measure import default_measures
from almostrep.morita import (
    MoritaError,
    PushforwardSection,
    canonical_equivalence,
    check_pf,
    default_section,
    extend_and_correct,
    lift,
    pullback,
    pullback_multiplier,
    pushforward,
    regular_rep,
    section_equivalence,
    section_from_arrows,
    separates,
)
from almostrep.rep import NotAlmostError, PseudoRep, intertwiner_residual, perturb, validate_rep

SIGN = PseudoRep([1], [[[1]], [[-1]]])


def unitary_fixtures():
    out = []
    for f in fx.rep_fixtures():
        if f.name.endswith("nonisometric"):
            continue
        mu, c = default_measures(f.G)
        out.append((f, unitarize(f.G, mu, c, f.sigma, f.R)))
    return out


def test_check_pf_examples():
    G = fx.z4_action()
    _, inc = restrict(G, ["a"])
    assert check_pf(inc).ok
    G = fx.pair(("a", "b", "c"))
    _, inc = restrict(G, ["a", "b"])
    assert check_pf(inc).ok
    # the subgroup {0} of the isotropy {(0,a),(2,a)} is not full
    H = fx.build_group(fx.cyclic_table(1), point="a")
    phi = Homomorphism(H, G := fx.z4_action(), np.array([0]), np.array([0]))
    rep = check_pf(phi)
    assert not rep.pf1 and rep.pf2
    # restriction to a point of a bundle misses the other orbit
    _, inc = restrict(fx.bundle_pq(), ["p"])
    assert not check_pf(inc).pf2


def test_pullback_examples():
    for f, S in unitary_fixtures():
        Sp, sig = pullback(Homomorphism.identity(f.G), f.sigma, f.R)
        assert Sp == f.R and sig == f.sigma
    G = fx.z4_action()
    R = regular_rep(G)
    H, inc = restrict(G, ["a"])
    S, sig = pullback(inc, trivial_multiplier(G), R)
    assert list(S.fiber_dim) == [4]
    # brute-force multiplicativity over all pairs of the isotropy group
    for h in range(2):
        for k in range(2):
            assert np.array_equal(S[h] @ S[k], S[H.compose(h, k)])


def test_pushforward_z4_sign():
    G = fx.z4_action()
    H, inc = restrict(G, ["a"])
    sec = default_section(inc)
    assert sec.pairs == ((G.arrow_index("(0,a)"), 0), (G.arrow_index("(1,a)"), 0))
    R = pushforward(inc, trivial_multiplier(G), SIGN, sec)
    # lift of unit_a⁻¹·(1,b)·(1,a) is (2,a), where S = -1
    assert G.compose(G.arrow_index("(1,b)"), G.arrow_index("(1,a)")) == G.arrow_index("(2,a)")
    assert R[G.arrow_index("(1,b)")][0, 0] == -1.0
    assert validate_rep(G, trivial_multiplier(G), R, 1e-10).ok
    L = canonical_equivalence(inc, trivial_multiplier(G), SIGN, sec)
    assert np.array_equal(L[0], np.eye(1))
    S2, _ = pullback(inc, trivial_multiplier(G), R)
    assert intertwiner_residual(H, L, SIGN, S2) == 0.0


def test_pushforward_identity_is_identity():
    for f, S in unitary_fixtures():
        phi = Homomorphism.identity(f.G)
        sec = PushforwardSection(tuple((int(f.G.unit[x]), x) for x in range(f.G.n_points)))
        R = pushforward(phi, f.sigma, S, sec)
        assert R == S, f.name
        L = canonical_equivalence(phi, f.sigma, S, sec)
        assert all(np.max(np.abs(l - np.eye(len(l))), initial=0) <= 1e-12 for l in L)


def test_pushforward_trivial_to_pair():
    G = fx.pair(("a", "b", "c"))
    H, inc = restrict(G, ["b"])
    R = pushforward(inc, trivial_multiplier(G), PseudoRep([1], [[[1.0]]]))
    assert all(np.array_equal(m, [[1.0]]) for m in R.matrices)
    L = canonical_equivalence(inc, trivial_multiplier(G), PseudoRep([1], [[[1.0]]]))
    assert [l.shape for l in L] == [(1, 1)] and abs(L[0][0, 0]) == 1


def _subsets(G):
    out = []
    iso_points = [o[0] for o in G.orbits]
    out.append(iso_points)
    for o in G.orbits:
        if len(o) > 1:
            out.append(sorted(set(iso_points) | {o[-1]}))
    return out


def test_morita_suite_all_fixtures():
    count = 0
    for f, S_full in unitary_fixtures():
        G = f.G
        for V in _subsets(G):
            H, inc = restrict(G, V)
            S, sig = pullback(inc, f.sigma, S_full)
            R = pushforward(inc, f.sigma, S)
            assert validate_rep(G, f.sigma, R, 1e-10).ok, f.name
            assert is_unitary(R, 1e-10).all()
            L = canonical_equivalence(inc, f.sigma, S)
            back, _ = pullback(inc, f.sigma, R)
            assert intertwiner_residual(H, L, S, back) <= 1e-10
            assert all(is_unitary(PseudoRep([len(l)], [l])).all() for l in L)
            # a second section: the largest admissible arrow per point
            arrows = []
            for x in range(G.n_points):
                cands = [g for g in G.target_fibers[x] if G.src[g] in inc.point_map]
                arrows.append(max(cands))
            second = section_from_arrows(inc, arrows)
            first = default_section(inc)
            R2 = pushforward(inc, f.sigma, S, second)
            M = section_equivalence(inc, f.sigma, S, first, second)
            assert intertwiner_residual(G, M, R, R2) <= 1e-10
            count += 1
    assert count >= 25


def test_pushforward_requires_unitary():
    G = fx.z2()
    S = PseudoRep([2], [np.eye(2), [[1, 1], [0, -1]]])
    with pytest.raises(MoritaError):
        pushforward(Homomorphism.identity(G), trivial_multiplier(G), S)


def test_lift_failure():
    G = fx.z4_action()
    _, inc = restrict(G, ["a"])
    with pytest.raises(MoritaError):
        lift(inc, G.arrow_index("(1,a)"), 0, 0)


def test_bad_section_rejected():
    G = fx.z4_action()
    _, inc = restrict(G, ["a"])
    with pytest.raises(MoritaError):
        section_from_arrows(inc, [0, 1])  # unit at b does not start in the image


def test_extend_and_correct_bundle():
    G = fx.bundle_pq()
    mu, c = default_measures(G)
    s = trivial_multiplier(G)
    full = PseudoRep([1, 1], [[[1]], [[-1]], [[1]], [[1]]])
    for seed in range(5):
        noisy = perturb(G, full, 0.01, seed)
        R, trace = extend_and_correct(G, mu, c, s, ["p"], SIGN, {3: noisy[3]})
        assert np.max(np.abs(R[1] - SIGN[1])) <= 1e-12
        assert R[0][0, 0] == 1
        assert validate_rep(G, s, R, 1e-10).ok


def test_extend_all_points():
    G = fx.z4_action()
    mu, c = default_measures(G)
    R_O = fx.regular(G)
    R, trace = extend_and_correct(G, mu, c, trivial_multiplier(G), ["a", "b"], R_O, {})
    assert len(trace) == 1
    assert R == R_O


def test_extend_gross_error():
    G = fx.bundle_pq()
    mu, c = default_measures(G)
    with pytest.raises(NotAlmostError, match="not almost"):
        extend_and_correct(G, mu, c, trivial_multiplier(G), ["p"], SIGN, {3: [[10.0]]})


def test_extend_requires_invariant_subset():
    G = fx.pair()
    mu, c = default_measures(G)
    with pytest.raises(MoritaError):
        extend_and_correct(G, mu, c, trivial_multiplier(G), ["a"], PseudoRep([1], [[[1]]]), {})


def test_regular_rep_examples():
    R = regular_rep(fx.z2())
    assert np.array_equal(R[1], [[0, 1], [1, 0]])
    G = fx.pair()
    R = regular_rep(G)
    assert list(R.fiber_dim) == [2, 2]
    assert separates(G, [R]) == (True, None)
    R = regular_rep(fx.unit_groupoid())
    assert all(np.array_equal(m, [[1.0]]) for m in R.matrices)


def test_regular_rep_weighted_is_unitary():
    G = fx.pm_bundle()
    mu, _ = default_measures(G)
    R = regular_rep(G, mu)
    assert is_unitary(R).all()
    assert validate_rep(G, trivial_multiplier(G), R).ok


def test_separates_examples(groupoids):
    G = fx.z2()
    assert separates(G, [PseudoRep([1], [[[1]], [[1]]])]) == (False, (0, 1))
    assert separates(G, [SIGN]) == (True, None)
    for name, G in groupoids.items():
        R = regular_rep(G)
        assert is_unitary(R).all()
        assert validate_rep(G, trivial_multiplier(G), R).ok
        assert separates(G, [R])[0], name
