import numpy as np
import pytest

from lsinv.domain import Grid, LatticeSpec, potential_value
from lsinv.hamiltonian import (HermitianMatrix, PlaneWaveBasis, build_hamiltonian, eigensolve,
                               gaussian_elements, plane_waves, stationary_states,
                               synthesize_wavefunction)

R = 25.0


def empty(R=R):
    return LatticeSpec(R, (), ())


def test_free_particle_diagonal():
    b = PlaneWaveBasis(16, R)
    H = build_hamiltonian(empty(), b).matrix
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
    assert np.allclose(np.diag(H), 2 * np.pi ** 2 * b.indices ** 2 / R ** 2, rtol=1e-15, atol=0)
    mu1 = b.k_max + 1
    assert H[mu1, mu1] == pytest.approx(2 * np.pi ** 2 / 625, rel=1e-15)


def test_single_centered_barrier_is_real_symmetric():
    lat = LatticeSpec(R, (0.0,), (1.0,))
    H = build_hamiltonian(lat, PlaneWaveBasis(32, R)).matrix
    assert np.max(np.abs(H.imag)) == 0.0
    assert np.allclose(H, H.T, atol=0)


def test_hermiticity_random_lattice(rng):
    lat = LatticeSpec(R, tuple(rng.uniform(-12, 12, 4)), tuple(rng.uniform(0.2, 2.0, 4)))
    H = build_hamiltonian(lat, PlaneWaveBasis(48, R), t=0.0).matrix
    assert np.max(np.abs(H - H.conj().T)) < 1e-12


def test_matrix_elements_match_quadrature(rng):
    # Fourier coefficients of the periodized potential by the trapezoid rule,
    # which is spectrally accurate for smooth periodic integrands.
    lat = LatticeSpec(R, (-7.3, 1.1, 9.0), (1.0, 0.6, 1.4))
    b = PlaneWaveBasis(40, R)
    H = build_hamiltonian(lat, b).matrix - np.diag(b.kinetic())
    x = np.linspace(-R / 2, R / 2, 8192, endpoint=False)
    v = potential_value(lat, x, truncate=False)
    for _ in range(30):
        mu, nu = rng.integers(-40, 41, 2)
        ref = np.mean(v * np.exp(2j * np.pi * (nu - mu) * x / R))
        assert abs(H[mu + 40, nu + 40] - ref) < 1e-8


def test_gaussian_elements_sum_to_potential():
    lat = LatticeSpec(R, (-5.0, 5.0), (1.0, 0.5))
    b = PlaneWaveBasis(20, R)
    parts = sum(gaussian_elements(b, s, lat.width_Delta, X) for X, s in zip(lat.centers, lat.strengths))
    assert np.allclose(parts, build_hamiltonian(lat, b).matrix - np.diag(b.kinetic()), atol=1e-15)


def test_basis_size_and_supercell_checks():
    assert PlaneWaveBasis(3, R).size == 7
    with pytest.raises(ValueError):
        build_hamiltonian(LatticeSpec(30.0, (), ()), PlaneWaveBasis(3, R))
    with pytest.raises(ValueError):
        PlaneWaveBasis(-1, R)


def test_eigensolve_free_particle_degenerate_pairs():
    b = PlaneWaveBasis(6, R)
    states = eigensolve(build_hamiltonian(empty(), b))
    E = np.array([s.energy_E for s in states])
    expected = np.sort(2 * np.pi ** 2 * b.indices ** 2 / R ** 2)
    assert np.allclose(E, expected, rtol=1e-14, atol=1e-15)
    assert E[1] == E[2]


def test_eigensolve_small_analytic():
    # [[0,1],[1,0]] embedded in a 3x3 Hermitian matrix next to an isolated level 5
    b = PlaneWaveBasis(1, R)
    H = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 5]], dtype=complex)
    E = [s.energy_E for s in eigensolve(HermitianMatrix(H, b))]
    assert np.allclose(E, [-1, 1, 5], atol=1e-14)


def test_eigensolve_rejects_non_hermitian():
    b = PlaneWaveBasis(1, R)
    H = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 5]], dtype=complex)
    with pytest.raises(ValueError):
        eigensolve(HermitianMatrix(H, b))


def test_orthonormal_and_normalized(fig2_ground):
    lat = LatticeSpec.regular(5, 5.0, 1.0, {0.0: 0.8})
    states = stationary_states(lat, 64, n_states=12)
    V = np.array([s.coefficients for s in states]) * np.sqrt(R)
    G = V.conj() @ V.T
    assert np.sum(np.abs(G - np.eye(len(states)))) < 1e-10
    x = np.linspace(-R / 2, R / 2, 4096, endpoint=False)
    psi, _ = synthesize_wavefunction(fig2_ground.coefficients, PlaneWaveBasis(128, R), x)
    assert np.mean(np.abs(psi) ** 2) * R == pytest.approx(1.0, abs=1e-12)


def test_ground_state_density_enhanced_at_attractive_defect(fig2_ground):
    b = PlaneWaveBasis(128, R)
    psi, _ = synthesize_wavefunction(fig2_ground.coefficients, b, np.array([-5.0, 0.0, 5.0]))
    rho = np.abs(psi) ** 2
    assert rho[1] > rho[0] and rho[1] > rho[2]


def test_variational_convergence():
    lat = LatticeSpec.regular(5, 5.0, 1.0, {0.0: 0.8})
    E = [stationary_states(lat, k, n_states=1)[0].energy_E for k in (4, 8, 16, 32, 64, 128)]
    assert all(b <= a + 1e-13 for a, b in zip(E, E[1:]))


def test_synthesize_examples(rng):
    b = PlaneWaveBasis(5, R)
    g = Grid(-R / 2, R / 2, 101)
    c = np.zeros(b.size, dtype=complex)
    c[b.k_max] = 1
    psi, dpsi = synthesize_wavefunction(c, b, g)
    assert np.allclose(psi, 1) and np.allclose(dpsi, 0)
    c[:] = 0
    c[b.k_max + 1] = 1
    psi, _ = synthesize_wavefunction(c, b, g)
    assert np.allclose(psi, np.exp(2j * np.pi * g.x / 25)) and np.allclose(np.abs(psi), 1)


def test_dpsi_matches_finite_difference(rng):
    b = PlaneWaveBasis(8, R)
    c = rng.normal(size=b.size) + 1j * rng.normal(size=b.size)
    errs = []
    for dx in (0.02, 0.01):
        g = Grid(-5, 5, int(round(10 / dx)) + 1)
        psi, dpsi = synthesize_wavefunction(c, b, g)
        fd = (psi[2:] - psi[:-2]) / (2 * dx)
        errs.append(np.max(np.abs(fd - dpsi[1:-1])))
    assert errs[1] / errs[0] == pytest.approx(0.25, rel=0.01)


def test_wavestate_derivative_consistent(fig2_ground):
    dx = fig2_ground.grid.spacing_dx
    fd = np.gradient(fig2_ground.psi, dx)
    assert np.max(np.abs(fd[1:-1] - fig2_ground.dpsi[1:-1])) < 0.01 * np.max(np.abs(fig2_ground.dpsi))


def test_plane_waves_derivatives():
    b = PlaneWaveBasis(3, R)
    x = np.array([0.3, 1.7])
    assert np.allclose(plane_waves(b, x, 2), -(b.wavenumbers ** 2) * plane_waves(b, x))


def test_deterministic():
    lat = LatticeSpec.regular(5, 5.0, 1.0, {0.0: 0.8})
    a = stationary_states(lat, 64, n_states=3)
    b = stationary_states(lat, 64, n_states=3)
    for s, t in zip(a, b):
        assert s.energy_E == t.energy_E
        assert np.array_equal(s.coefficients, t.coefficients)
