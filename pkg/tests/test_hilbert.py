import numpy as np
import pytest

from almostrep import fixtures as fx
from almostrep.cocycle import is_isometric, trivial_multiplier
from almostrep.hilbert import HilbertError, averaged_gram, hermitian_sqrt, is_unitary, unitarize
from almostrep.measure import default_measures
from almostrep.rep import PseudoRep, correct, perturb, validate_rep


def isometric_fixtures():
    return [f for f in fx.rep_fixtures() if is_isometric(f.G, f.sigma)]


def test_gram_examples():
    G = fx.z2()
    mu, c = default_measures(G)
    s = trivial_multiplier(G)
    H = averaged_gram(G, mu, c, s, fx.regular(G))
    assert np.allclose(H[0], np.eye(2), atol=1e-15)
    S = PseudoRep([2], [np.eye(2), [[1, 1], [0, -1]]])
    H = averaged_gram(G, mu, c, s, S)
    # hand evaluation: ½(I + A*A) with A = [[1,1],[0,-1]]
    assert np.max(np.abs(H[0] - 0.5 * np.array([[2, 1], [1, 3]]))) <= 1e-12
    H = averaged_gram(G, mu, c, s, PseudoRep([1], [[[1]], [[-1]]]))
    assert H[0] == pytest.approx(np.eye(1))


def test_gram_invariance():
    for f in isometric_fixtures():
        mu, c = default_measures(f.G)
        H = averaged_gram(f.G, mu, c, f.sigma, f.R)
        for g in range(f.G.n_arrows):
            S = f.R[g]
            lhs = H[f.G.src[g]]
            rhs = S.conj().T @ H[f.G.tgt[g]] @ S
            assert np.max(np.abs(lhs - rhs)) <= 1e-10, f.name


def test_unitarize_examples():
    G = fx.z2()
    mu, c = default_measures(G)
    s = trivial_multiplier(G)
    R = fx.regular(G)
    St = unitarize(G, mu, c, s, R)
    assert all(np.max(np.abs(a - b)) <= 1e-12 for a, b in zip(St.matrices, R.matrices))
    S = PseudoRep([2], [np.eye(2), [[1, 1], [0, -1]]])
    St = unitarize(G, mu, c, s, S)
    assert is_unitary(St).all()
    assert np.max(np.abs(St[1] @ St[1] - np.eye(2))) <= 1e-12


def test_unitarize_all_isometric_fixtures():
    fixtures = isometric_fixtures()
    assert len(fixtures) >= 20
    for f in fixtures:
        mu, c = default_measures(f.G)
        St, L = unitarize(f.G, mu, c, f.sigma, f.R, return_intertwiner=True)
        assert is_unitary(St, 1e-10).all(), f.name
        assert validate_rep(f.G, f.sigma, St, 1e-10).ok, f.name
        again = unitarize(f.G, mu, c, f.sigma, St)
        assert max(np.max(np.abs(a - b), initial=0) for a, b in zip(again.matrices, St.matrices)) <= 1e-10
        for g in range(f.G.n_arrows):
            lhs = L[f.G.tgt[g]] @ f.R[g]
            rhs = St[g] @ L[f.G.src[g]]
            assert np.max(np.abs(lhs - rhs), initial=0) <= 1e-10


def test_unitarize_after_correction_on_action_groupoid():
    G = fx.z4_action()
    mu, c = default_measures(G)
    s = trivial_multiplier(G)
    for f in [f for f in fx.rep_fixtures() if f.G == G]:
        R, _ = correct(G, mu, c, s, perturb(G, f.R, 0.005, 11))
        St = unitarize(G, mu, c, s, R)
        assert is_unitary(St, 1e-10).all()


def test_unitarize_requires_isometric():
    f = [f for f in fx.rep_fixtures() if f.name == "z2_projective_nonisometric"][0]
    mu, c = default_measures(f.G)
    with pytest.raises(HilbertError):
        unitarize(f.G, mu, c, f.sigma, f.R)


def test_unitarize_requires_exact():
    G = fx.z2()
    mu, c = default_measures(G)
    with pytest.raises(HilbertError):
        unitarize(G, mu, c, trivial_multiplier(G), PseudoRep([2], [np.eye(2), np.diag([1.02, 1.0])]))


def test_unitary_isotropy_fixed():
    # at points whose isotropy already acts unitarily the Gram is I for the regular rep
    for name in ("s3_regular", "z4_action_regular", "pair3_unitary_frames"):
        f = [f for f in fx.rep_fixtures() if f.name == name][0]
        mu, c = default_measures(f.G)
        St = unitarize(f.G, mu, c, f.sigma, f.R)
        assert all(np.max(np.abs(a - b)) <= 1e-12 for a, b in zip(St.matrices, f.R.matrices))


def test_is_unitary_examples():
    G = fx.z2()
    assert is_unitary(PseudoRep.identity(G, [3])).all()
    assert list(is_unitary(PseudoRep([2], [np.eye(2), [[1, 1], [0, -1]]]))) == [True, False]
    assert is_unitary(PseudoRep([2], [np.eye(2), [[0, 1], [1, 0]]])).all()


def test_hermitian_sqrt(rng):
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    H = A.conj().T @ A + np.eye(4)
    R = hermitian_sqrt(H)
    assert np.allclose(R @ R, H, atol=1e-12)
    assert np.allclose(hermitian_sqrt(H, inverse=True) @ R, np.eye(4), atol=1e-12)
    with pytest.raises(HilbertError):
        hermitian_sqrt(np.diag([1.0, 0.0]))
