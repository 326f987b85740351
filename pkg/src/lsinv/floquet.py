"""One-period propagator of the shaken lattice, Floquet modes and their time series.

Each substep of length dt = T / substeps uses the Hamiltonian frozen at the
substep midpoint and is exponentiated exactly through its eigendecomposition,
so every factor is unitary to eigensolver precision. Time samples of a mode
are taken by propagating the t0 eigenvector through the same factors, which
replaces diagonalizing U(T + t0, t0) for every t0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np
from scipy import linalg

from .domain import FloquetMode, Grid, LatticeSpec, NumericalError
from .hamiltonian import PlaneWaveBasis, build_hamiltonian, synthesize_wavefunction

UNITARITY_TOL = 1e-9
EIGEN_RESIDUAL_TOL = 1e-8
PERIODICITY_TOL = 1e-6
DEFAULT_SUBSTEPS = 1024
DEFAULT_TIME_SAMPLES = 256


class UnitarityError(NumericalError):
    pass


class PeriodicityError(NumericalError):
    def __init__(self, message, defect):
        super().__init__(message)
        self.defect = defect


@dataclass(frozen=True)
class PeriodPropagator:
    U: np.ndarray
    t0: float
    period_T: float
    substeps: int
    # diag of the sample-averaged U(t_j)^dagger H(t_j) U(t_j); gives mean energies
    # of any eigenvector without a second propagation.
    averaged_heisenberg: Optional[np.ndarray] = None
    n_time_samples: Optional[int] = None

    def unitarity_defect(self) -> float:
        n = self.U.shape[0]
        return float(np.max(np.abs(self.U.conj().T @ self.U - np.eye(n))))


@dataclass(frozen=True)
class FloquetSeed:
    quasienergy_eps: float
    coefficients: np.ndarray  # normalized wavefunction coefficients at t0
    eigenvalue: complex


def _require_driving(lattice: LatticeSpec):
    if lattice.driving is None:
        raise ValueError("lattice has no driving; use the static eigensolver instead")
    return lattice.driving


def substep_factors(lattice: LatticeSpec, basis: PlaneWaveBasis, t0: float,
                    substeps: int) -> Iterator[Tuple[float, np.ndarray, np.ndarray]]:
    """Yield (t_start, energies, eigenvectors) of the midpoint Hamiltonian of every substep."""
    T = _require_driving(lattice).period_T
    dt = T / substeps
    for k in range(substeps):
        t_mid = t0 + (k + 0.5) * dt
        H = build_hamiltonian(lattice, basis, t_mid).matrix
        E, V = linalg.eigh(H)
        yield t0 + k * dt, E, V


def _exp_factor(E, V, dt):
    return (V * np.exp(-1j * E * dt)) @ V.conj().T


def _check_samples(substeps: int, n_time_samples: int) -> int:
    if n_time_samples < 1:
        raise ValueError(f"need at least one time sample, got {n_time_samples}")
    if substeps % n_time_samples:
        raise ValueError(
            f"substeps ({substeps}) must be a multiple of n_time_samples ({n_time_samples})")
    return substeps // n_time_samples


def propagate_period(lattice: LatticeSpec, basis: PlaneWaveBasis, t0: float = 0.0,
                     substeps: int = DEFAULT_SUBSTEPS,
                     n_time_samples: Optional[int] = None) -> PeriodPropagator:
    """U(T + t0, t0) as a time-ordered product of exact substep exponentials.

    With ``n_time_samples`` the sample average of U(t_j)^dagger H(t_j) U(t_j)
    is accumulated as well, using the same uniform samples as
    ``mode_time_series``.
    """
    driving = _require_driving(lattice)
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    T = driving.period_T
    dt = T / substeps
    stride = None if n_time_samples is None else _check_samples(substeps, n_time_samples)
    U = np.eye(basis.size, dtype=complex)
    heis = None if stride is None else np.zeros((basis.size, basis.size), dtype=complex)
    for k, (t_start, E, V) in enumerate(substep_factors(lattice, basis, t0, substeps)):
        if stride is not None and k % stride == 0:
            H = build_hamiltonian(lattice, basis, t_start).matrix
            heis += U.conj().T @ H @ U
        U = _exp_factor(E, V, dt) @ U
    if heis is not None:
        heis /= n_time_samples
    prop = PeriodPropagator(U, float(t0), T, int(substeps), heis, n_time_samples)
    defect = prop.unitarity_defect()
    if defect > UNITARITY_TOL:
        raise UnitarityError(
            f"one-period propagator unitarity defect {defect:.3e} > {UNITARITY_TOL:g}; "
            f"increase substeps (now {substeps})")
    return prop


def fold_quasienergy(eps, omega):
    """Map quasienergies into [-omega/2, omega/2)."""
    return (np.asarray(eps) + 0.5 * omega) % omega - 0.5 * omega


def floquet_modes(prop: PeriodPropagator, omega: float, supercell_R: float) -> List[FloquetSeed]:
    """Eigenvectors of U with quasienergies eps = -arg(lambda) / T.

    A complex Schur form of a unitary matrix is diagonal, so its Schur vectors
    are an orthonormal eigenbasis even for degenerate eigenphases.
    Seeds are sorted by quasienergy.
    """
    U = prop.U
    defect = prop.unitarity_defect()
    if defect > UNITARITY_TOL:
        raise UnitarityError(f"propagator is not unitary (defect {defect:.3e})")
    Tm, Z = linalg.schur(U, output="complex")
    lam = np.diag(Tm)
    if np.max(np.abs(np.abs(lam) - 1.0)) > UNITARITY_TOL:
        raise UnitarityError("propagator eigenvalue off the unit circle")
    residual = np.linalg.norm(U @ Z - Z * lam, axis=0).max()
    if residual > EIGEN_RESIDUAL_TOL:
        raise NumericalError(f"Floquet eigenvector residual {residual:.3e}")
    eps = fold_quasienergy(-np.angle(lam) / prop.period_T, omega)
    order = np.argsort(eps, kind="stable")
    scale = 1.0 / math.sqrt(supercell_R)
    return [FloquetSeed(float(eps[j]), Z[:, j] * scale, complex(lam[j])) for j in order]


def mean_energies(prop: PeriodPropagator, seeds: List[FloquetSeed], supercell_R: float) -> np.ndarray:
    """Sample-averaged <Psi|H(t)|Psi> for every seed, from the accumulated Heisenberg average."""
    if prop.averaged_heisenberg is None:
        raise ValueError("propagator was built without n_time_samples")
    C = np.array([s.coefficients for s in seeds]).T * math.sqrt(supercell_R)
    return np.real(np.einsum("ai,ab,bi->i", C.conj(), prop.averaged_heisenberg, C))


def _averaging_kernel(E, dt):
    """(1/dt) int_0^dt exp(-i (E_a - E_b) tau) dtau."""
    z = -1j * (E[:, None] - E[None, :]) * dt
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + 0.5 * z, np.expm1(safe) / safe)


def evolve(lattice: LatticeSpec, basis: PlaneWaveBasis, c0: np.ndarray,
           n_time_samples: int = DEFAULT_TIME_SAMPLES, substeps: int = DEFAULT_SUBSTEPS,
           t0: float = 0.0, accumulate_density: bool = False):
    """Propagate coefficients c0 over one period.

    Returns (times, samples, c_final, density): samples[j] = c(t_j) for
    t_j = t0 + j T / n_time_samples, c_final = c(t0 + T), and ``density`` the
    exact period average of c c^dagger (None unless requested; vector input only).
    """
    T = _require_driving(lattice).period_T
    stride = _check_samples(substeps, n_time_samples)
    dt = T / substeps
    c = np.array(c0, dtype=complex)
    samples = []
    rho = None
    if accumulate_density:
        if c.ndim != 1:
            raise ValueError("density accumulation needs a single state vector")
        rho = np.zeros((basis.size, basis.size), dtype=complex)
    for k, (_, E, V) in enumerate(substep_factors(lattice, basis, t0, substeps)):
        if k % stride == 0:
            samples.append(c.copy())
        a = V.conj().T @ c
        if rho is not None:
            rho += V @ ((np.outer(a, a.conj()) * _averaging_kernel(E, dt)) @ V.conj().T)
        c = V @ (np.exp(-1j * E * dt)[:, None] * a if a.ndim > 1 else np.exp(-1j * E * dt) * a)
    if rho is not None:
        rho /= substeps
    times = t0 + np.arange(n_time_samples) * (T / n_time_samples)
    return times, np.array(samples), c, rho


def mode_time_series(lattice: LatticeSpec, basis: PlaneWaveBasis, seed: FloquetSeed,
                     n_time_samples: int = DEFAULT_TIME_SAMPLES, grid: Optional[Grid] = None,
                     substeps: int = DEFAULT_SUBSTEPS, t0: float = 0.0,
                     accumulate_density: bool = True) -> FloquetMode:
    """Time samples Psi(x, t_j) of one Floquet mode over a period.

    The periodic part Phi = exp(i eps t) Psi must return to itself after one
    period; a defect above PERIODICITY_TOL raises PeriodicityError.
    """
    driving = _require_driving(lattice)
    T = driving.period_T
    times, samples, c_end, rho = evolve(lattice, basis, seed.coefficients, n_time_samples,
                                        substeps, t0, accumulate_density)
    norm = math.sqrt(basis.supercell_R)
    defect = float(np.linalg.norm(
        (np.exp(1j * seed.quasienergy_eps * T) * c_end - samples[0]) * norm))
    if defect > PERIODICITY_TOL:
        raise PeriodicityError(
            f"Floquet periodicity defect {defect:.3e} > {PERIODICITY_TOL:g}", defect)
    grid = grid or Grid.supercell(basis.supercell_R)
    psi, dpsi = synthesize_wavefunction(samples.T, basis, grid)
    mode = FloquetMode(seed.quasienergy_eps, driving.omega, times, samples, psi.T, dpsi.T,
                       grid, basis.k_max, basis.supercell_R, None, rho)
    energy = mean_energy(mode, lattice, basis)
    return FloquetMode(mode.quasienergy_eps, mode.omega, mode.times, mode.coefficients,
                       mode.psi, mode.dpsi, grid, basis.k_max, basis.supercell_R, energy, rho)


def mean_energy(mode: FloquetMode, lattice: LatticeSpec, basis: PlaneWaveBasis) -> float:
    """(1/T) int <Psi(t)|H(t)|Psi(t)> dt on the mode's uniform time samples."""
    total = 0.0
    R = basis.supercell_R
    for t, c in zip(mode.times, mode.coefficients):
        H = build_hamiltonian(lattice, basis, t).matrix
        total += R * np.real(np.vdot(c, H @ c))
    return float(total / mode.n_time_samples)


@dataclass(frozen=True)
class FloquetSolution:
    propagator: PeriodPropagator
    seeds: List[FloquetSeed]
    mean_energies: np.ndarray

    def lowest(self) -> FloquetSeed:
        return self.seeds[int(np.argmin(self.mean_energies))]


def solve_floquet(lattice: LatticeSpec, basis: PlaneWaveBasis, substeps: int = DEFAULT_SUBSTEPS,
                  n_time_samples: int = DEFAULT_TIME_SAMPLES, t0: float = 0.0) -> FloquetSolution:
    """Propagator, all Floquet seeds and their mean energies in one propagation pass."""
    driving = _require_driving(lattice)
    prop = propagate_period(lattice, basis, t0, substeps, n_time_samples)
    seeds = floquet_modes(prop, driving.omega, basis.supercell_R)
    return FloquetSolution(prop, seeds, mean_energies(prop, seeds, basis.supercell_R))


def lowest_mode(lattice: LatticeSpec, basis: PlaneWaveBasis, substeps: int = DEFAULT_SUBSTEPS,
                n_time_samples: int = DEFAULT_TIME_SAMPLES, grid: Optional[Grid] = None,
                t0: float = 0.0) -> Tuple[FloquetMode, FloquetSolution]:
    """Floquet mode with the lowest period-averaged energy, with full time series."""
    sol = solve_floquet(lattice, basis, substeps, n_time_samples, t0)
    mode = mode_time_series(lattice, basis, sol.lowest(), n_time_samples, grid, substeps, t0)
    return mode, sol
