import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsinv.domain import NumericalError
from lsinv.transfer import (ETA, TAU, ZETA, AmplitudePair, amplitudes_at, chain_matrices,
                            check_pcc, check_tri, delta_chain, delta_defect_analytic,
                            delta_transfer, mirror_region, passes, placed, propagate_amplitudes,
                            q_inversion, q_translation, qc_inversion, qc_translation,
                            shift_matrix, single_defect_plateaus)

strengths = st.floats(-3.0, 3.0, allow_nan=False)
wavenumbers = st.floats(0.1, 5.0)
lengths = st.floats(0.5, 8.0)




def direct_current(psi_x, dpsi_x, psi_b, dpsi_b, sigma=1, complementary=False):
    a = psi_x if complementary else np.conj(psi_x)
    da = dpsi_x if complementary else np.conj(dpsi_x)
    return (sigma * a * dpsi_b - psi_b * da) / 2j


def test_shift_matrix_examples():
    assert np.allclose(shift_matrix(1.3, 0.0), np.eye(2))
    K = shift_matrix(0.7, 2.1)
    assert np.allclose(K @ K.conj(), np.eye(2))
    assert np.allclose(shift_matrix(1.0, np.pi), -np.eye(2))


def test_delta_transfer_examples():
    assert np.allclose(delta_transfer(0.0, 1.0), np.eye(2))
    P = delta_transfer(1.5, 0.8)
    assert np.linalg.det(P) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        delta_transfer(1.0, 0.0)


@given(strengths, wavenumbers)
def test_delta_transmission(lam, k):
    # no left-mover on the right: (t, 0) = P (1, r)
    P = delta_transfer(lam, k)
    r = -P[1, 0] / P[1, 1]
    t = P[0, 0] + P[0, 1] * r
    assert abs(t) ** 2 == pytest.approx(1 / (1 + lam ** 2 / k ** 2), rel=1e-12)


def test_delta_jump_condition():
    # psi continuous, psi'(0+) - psi'(0-) = 2 Lambda psi(0)
    lam, k = 0.9, 1.7
    left = AmplitudePair(0.3 - 0.2j, 1.1 + 0.4j, 0)
    right_v = delta_transfer(lam, k) @ left.vector
    right = AmplitudePair(right_v[0], right_v[1], 1)
    assert right.psi(k, 0.0) == pytest.approx(left.psi(k, 0.0), abs=1e-14)
    assert right.dpsi(k, 0.0) - left.dpsi(k, 0.0) == pytest.approx(2 * lam * left.psi(k, 0.0), abs=1e-14)


def test_placed_delta_matches_jump_at_position():
    lam, k, X = 0.6, 1.2, 3.3
    left = AmplitudePair(0.5 + 0.1j, -0.2 + 0.7j, 0)
    v = placed(delta_transfer(lam, k), k, X) @ left.vector
    right = AmplitudePair(v[0], v[1], 1)
    assert right.psi(k, X) == pytest.approx(left.psi(k, X), abs=1e-13)
    assert right.dpsi(k, X) - left.dpsi(k, X) == pytest.approx(2 * lam * left.psi(k, X), abs=1e-13)


def test_condition_checks_examples():
    assert passes(check_pcc(delta_transfer(0.7, 1.1)))
    assert passes(check_pcc(shift_matrix(1.1, 0.4)))
    assert check_pcc(np.diag([2.0, 1.0])) == pytest.approx(3.0)
    assert passes(check_tri(delta_transfer(0.7, 1.1)))
    assert passes(check_tri(shift_matrix(1.1, 0.4)))
    assert not passes(check_tri(delta_transfer(0.7 + 0.3j, 1.1)))
    with pytest.raises(np.linalg.LinAlgError):
        check_tri(np.zeros((2, 2)))
    assert np.allclose(ZETA, [[0, 1], [-1, 0]])


def test_empty_chain():
    pairs = propagate_amplitudes([], 1.0, 1.0)
    assert len(pairs) == 1 and pairs[0].F == 1 and pairs[0].G == 0
    pairs = propagate_amplitudes(delta_chain([0.0, 0.0, 0.0], 1.3, 2.0), 1.3)
    for p in pairs:
        assert p.F == pytest.approx(1.0) and abs(p.G) < 1e-15


def test_opaque_limit():
    pairs = propagate_amplitudes([(0.0, delta_transfer(1e9, 1.0))], 1.0)
    assert abs(pairs[1].F) < 1e-8
    assert abs(pairs[0].G) == pytest.approx(1.0, rel=1e-8)


def test_singular_chain_raises():
    M = np.array([[1.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(NumericalError):
        propagate_amplitudes([(0.0, M)], 1.0)


def test_fabry_perot_resonance():
    # two identical deltas spaced L: scan k by brute force for |t| = 1
    lam, L = 1.0, 2.0
    ks = np.linspace(0.2, 4.0, 20001)
    t2 = []
    for k in ks:
        pairs = propagate_amplitudes(delta_chain([lam, lam], k, L), k)
        t2.append(abs(pairs[-1].F) ** 2)
    t2 = np.array(t2)
    i = int(np.argmax(t2))
    assert t2[i] == pytest.approx(1.0, abs=1e-6)
    # resonance condition of the symmetric double barrier: tan(kL) = -k / lam
    k = ks[i]
    assert np.tan(k * L) == pytest.approx(-k / lam, abs=1e-2)


def test_q_free_and_total_reflection():
    k, L = 1.3, 2.0
    pairs = propagate_amplitudes(delta_chain([0.0, 0.0], k, L), k)
    M = chain_matrices(delta_chain([0.0, 0.0], k, L), k)
    assert q_translation(pairs[0], M[0], k, L) == pytest.approx(k * np.exp(1j * k * L), abs=1e-14)
    chain = delta_chain([1e10], k, L)
    pairs = propagate_amplitudes(chain, k)
    # region left of the barrier: both x and x + L in the reflecting region
    Q = q_translation(pairs[0], np.eye(2), k, L)
    assert Q == pytest.approx(2j * k * np.sin(k * L), abs=1e-8)


def test_q_symmetric_two_delta_chain_constant():
    k, L = 0.9, 3.0
    chain = delta_chain([0.7] * 4, k, L)
    pairs = propagate_amplitudes(chain, k)
    M = chain_matrices(chain, k)
    Q = [q_translation(pairs[n], M[n], k, L) for n in range(4)]
    assert np.max(np.abs(np.array(Q) - Q[0])) < 1e-12 * abs(Q[0])


def test_q_matches_pointwise_definition():
    k, L = 1.1, 2.5
    chain = delta_chain([0.4, -0.8, 1.3], k, L)
    pairs = propagate_amplitudes(chain, k, 0.7 - 0.2j)
    M = chain_matrices(chain, k)
    for n in range(3):
        x = n * L - 0.3 * L  # region n, x + L in region n+1
        a, b = pairs[n], pairs[n + 1]
        ref = direct_current(a.psi(k, x), a.dpsi(k, x), b.psi(k, x + L), b.dpsi(k, x + L))
        assert q_translation(a, M[n], k, L) == pytest.approx(ref, abs=1e-13)
        refc = direct_current(a.psi(k, x), a.dpsi(k, x), b.psi(k, x + L), b.dpsi(k, x + L),
                              complementary=True)
        assert qc_translation(a, M[n], k, L) == pytest.approx(refc, abs=1e-13)


def test_q_inversion_matches_pointwise_definition():
    k, L = 0.8, 2.0
    chain = delta_chain([0.5, 1.2, 0.5], k, L)
    pairs = propagate_amplitudes(chain, k, 1.0)
    M = chain_matrices(chain, k)
    alpha = L  # center barrier
    for n in (0, 1):
        nb = mirror_region(n, alpha, L)
        x = (n - 0.5) * L + 0.17  # inside region n
        xb = 2 * alpha - x        # inside region nb + 1
        a, b = pairs[n], pairs[nb + 1]
        ref = direct_current(a.psi(k, x), a.dpsi(k, x), b.psi(k, xb), b.dpsi(k, xb), sigma=-1)
        assert q_inversion(a, pairs[nb], M[nb], k, alpha) == pytest.approx(ref, abs=1e-13)
        refc = direct_current(a.psi(k, x), a.dpsi(k, x), b.psi(k, xb), b.dpsi(k, xb), sigma=-1,
                              complementary=True)
        assert qc_inversion(a, pairs[nb], M[nb], k, alpha) == pytest.approx(refc, abs=1e-13)


def test_single_symmetric_delta_inversion_constant():
    k, L = 1.4, 2.0
    chain = delta_chain([0.0, 0.9, 0.0], k, L)
    pairs = propagate_amplitudes(chain, k)
    M = chain_matrices(chain, k)
    alpha = L
    Q0 = q_inversion(pairs[0], pairs[2], M[2], k, alpha)
    Q1 = q_inversion(pairs[1], pairs[1], M[1], k, alpha)
    assert abs(Q0 - Q1) < 1e-12 * abs(Q0)


def test_opaque_barrier_inversion_zero():
    # no field on the mirror side makes the mirror product vanish
    k, L = 1.0, 2.0
    chain = delta_chain([0.0, 5.0, 0.0], k, L)
    M = chain_matrices(chain, k)
    left = AmplitudePair(1.0, 0.3 - 0.1j, 1)
    dark = AmplitudePair(0.0, 0.0, 0)
    assert q_inversion(left, dark, M[0], k, L) == 0


def test_mirror_region():
    assert mirror_region(0, 2.0, 2.0) == 2
    with pytest.raises(ValueError):
        mirror_region(0, 0.3, 2.0)


def random_chain(data, n, complex_strength=False):
    k = data.draw(wavenumbers)
    L = data.draw(lengths)
    lams = [data.draw(strengths) for _ in range(n)]
    if complex_strength:
        lams[n // 2] = lams[n // 2] + 1j * data.draw(st.floats(0.2, 2.0))
    return k, L, lams


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_pcc_implies_translation_constancy(data):
    # a regular chain (all strengths equal) satisfies M_{n+1} = K*_L M_n K_L
    k, L, _ = random_chain(data, 1)
    lam = data.draw(strengths)
    chain = delta_chain([lam] * 5, k, L)
    M = chain_matrices(chain, k)
    assert all(passes(check_pcc(m)) for m in M)
    pairs = propagate_amplitudes(chain, k)
    Q = np.array([q_translation(pairs[n], M[n], k, L) for n in range(4)])
    assert np.max(np.abs(Q - Q[0])) <= 1e-10 * max(1.0, np.max(np.abs(Q)))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_pcc_tri_imply_inversion_constancy(data):
    k, L, half = random_chain(data, 3)
    lams = half + [data.draw(strengths)] + half[::-1]  # mirror symmetric about the center site
    chain = delta_chain(lams, k, L)
    M = chain_matrices(chain, k)
    pairs = propagate_amplitudes(chain, k)
    alpha = 3 * L
    Q = []
    for n in range(0, 7):
        nb = mirror_region(n, alpha, L)
        Q.append(q_inversion(pairs[n], pairs[nb], M[nb], k, alpha))
    Q = np.array(Q)
    assert np.max(np.abs(Q - Q[0])) <= 1e-9 * max(1.0, np.max(np.abs(Q)))
    Qc = []
    for n in range(0, 7):
        nb = mirror_region(n, alpha, L)
        Qc.append(qc_inversion(pairs[n], pairs[nb], M[nb], k, alpha))
    Qc = np.array(Qc)
    assert np.max(np.abs(Qc - Qc[0])) <= 1e-9 * max(1.0, np.max(np.abs(Qc)))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_complementary_translation_constancy(data):
    k, L, _ = random_chain(data, 1)
    lam = data.draw(strengths)
    chain = delta_chain([lam] * 5, k, L)
    M = chain_matrices(chain, k)
    pairs = propagate_amplitudes(chain, k)
    Qc = np.array([qc_translation(pairs[n], M[n], k, L) for n in range(4)])
    assert np.max(np.abs(Qc - Qc[0])) <= 1e-10 * max(1.0, np.max(np.abs(Qc)))


def test_complex_strength_breaks_both_constancies():
    k, L = 1.2, 2.0
    lam = 0.8 + 0.5j
    M = [placed(delta_transfer(lam, k), k, n * L) for n in range(5)]
    assert not passes(check_pcc(M[0])) and not passes(check_tri(M[0]))
    chain = delta_chain([lam] * 5, k, L)
    pairs = propagate_amplitudes(chain, k)
    Q = np.array([q_translation(pairs[n], M[n], k, L) for n in range(4)])
    assert np.max(np.abs(Q - Q[0])) > 1e-3 * np.max(np.abs(Q))
    sym = delta_chain([0.5, lam, 0.5], k, L)
    Ms = chain_matrices(sym, k)
    ps = propagate_amplitudes(sym, k)
    # regions 1 and 2 sit on either side of the central scatterer
    Qi = [q_inversion(ps[n], ps[mirror_region(n, L, L)], Ms[mirror_region(n, L, L)], k, L)
          for n in (1, 2)]
    assert abs(Qi[0] - Qi[1]) > 1e-3 * max(abs(Qi[0]), abs(Qi[1]))


def test_phase_rescaled_matrices_keep_pcc_break_tri():
    # exp(i phi) M keeps PCC but not TRI: translation Q stays constant, inversion Q does not;
    # the complementary currents swap roles
    k, L, phi = 1.1, 2.0, 0.4
    P = np.exp(1j * phi) * delta_transfer(0.7, k)
    assert passes(check_pcc(P)) and not passes(check_tri(P))
    chain = [(n * L, P) for n in range(5)]
    M = chain_matrices(chain, k)
    pairs = propagate_amplitudes(chain, k)
    Q = np.array([q_translation(pairs[n], M[n], k, L) for n in range(4)])
    Qc = np.array([qc_translation(pairs[n], M[n], k, L) for n in range(4)])
    assert np.max(np.abs(Q - Q[0])) < 1e-12 * np.max(np.abs(Q))
    assert np.max(np.abs(Qc - Qc[0])) > 1e-3 * np.max(np.abs(Qc))
    sym = [(0.0, delta_transfer(0.5, k)), (L, P), (2 * L, delta_transfer(0.5, k))]
    Ms = chain_matrices(sym, k)
    ps = propagate_amplitudes(sym, k)
    nb = [mirror_region(n, L, L) for n in (1, 2)]
    Qi = [q_inversion(ps[n], ps[b], Ms[b], k, L) for n, b in zip((1, 2), nb)]
    Qci = [qc_inversion(ps[n], ps[b], Ms[b], k, L) for n, b in zip((1, 2), nb)]
    assert abs(Qi[0] - Qi[1]) > 1e-3 * max(abs(Qi[0]), abs(Qi[1]))
    assert abs(Qci[0] - Qci[1]) < 1e-12 * max(abs(Qci[0]), abs(Qci[1]))


def test_delta_defect_limits():
    k, L = 1.3, 5.0
    A = k * np.exp(1j * k * L)
    for q in delta_defect_analytic(1e-12, k, L):
        assert q == pytest.approx(A, rel=1e-10)
    ql, qc, qr = delta_defect_analytic(1e12, k, L)
    assert abs(qc) < 1e-10 and abs(qr) < 1e-10
    assert ql == pytest.approx(2j * k * np.sin(k * L), abs=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.floats(-4, 4), wavenumbers, lengths)
def test_delta_defect_oracle(lam, k, L):
    analytic = np.array(delta_defect_analytic(lam, k, L))
    tm = np.array(single_defect_plateaus(lam, k, L))
    assert np.max(np.abs(analytic - tm)) <= 1e-12 * np.max(np.abs(analytic))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=6), st.floats(1.0, 3.0), lengths)
def test_unimodular_chains(lams, k, L):
    # |Lambda / k| <= 1 keeps the product well conditioned enough for an absolute 1e-10
    total = np.eye(2, dtype=complex)
    for m in chain_matrices(delta_chain(lams, k, L), k):
        total = m @ total
    assert np.linalg.det(total) == pytest.approx(1.0, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.lists(strengths, min_size=1, max_size=6), wavenumbers, lengths)
def test_unimodular_chains_roundoff_scaled(lams, k, L):
    # the 2x2 determinant cancels terms of size |M|^2, so roundoff grows with it
    total = np.eye(2, dtype=complex)
    for m in chain_matrices(delta_chain(lams, k, L), k):
        total = m @ total
    scale = max(1.0, np.max(np.abs(total)) ** 2)
    assert abs(np.linalg.det(total) - 1.0) <= 1e-13 * scale


def test_amplitudes_at_roundtrip():
    k = 0.9
    p = AmplitudePair(0.3 + 0.4j, -1.2 + 0.1j, 0)
    x = 2.7
    q = amplitudes_at(p.psi(k, x), p.dpsi(k, x), k, x)
    assert q.F == pytest.approx(p.F, abs=1e-14) and q.G == pytest.approx(p.G, abs=1e-14)


def test_eta_tau():
    assert np.allclose(ETA @ TAU, ZETA)
