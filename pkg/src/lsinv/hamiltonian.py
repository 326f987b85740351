"""Plane-wave representation of the lattice Hamiltonian and its stationary states.

The basis is |mu> with <x|mu> = exp(i 2 pi mu x / R), mu = -k_max..k_max.
Gaussian matrix elements are evaluated in closed form. The closed form is the
Fourier coefficient of the Gaussian summed over all its periodic images, so
the matrix represents the periodized superlattice exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import linalg

from .domain import Grid, LatticeSpec, NumericalError, WaveState

RESIDUAL_TOL = 1e-10
HERMITICITY_TOL = 1e-12


class EigensolverError(NumericalError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class PlaneWaveBasis:
    k_max: int
    supercell_R: float

    def __post_init__(self):
        if int(self.k_max) != self.k_max or self.k_max < 0:
            raise ValueError(f"k_max must be a non-negative integer, got {self.k_max}")
        if not self.supercell_R > 0:
            raise ValueError(f"supercell length must be positive, got {self.supercell_R}")

    @property
    def size(self) -> int:
        return 2 * self.k_max + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.k_max, self.k_max + 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * self.indices / self.supercell_R

    def kinetic(self) -> np.ndarray:
        return 0.5 * self.wavenumbers ** 2


@dataclass(frozen=True)
class HermitianMatrix:
    matrix: np.ndarray
    basis: PlaneWaveBasis
    t: float = 0.0


def gaussian_elements(basis: PlaneWaveBasis, strength: float, width: float,
                      center: float) -> np.ndarray:
    """Matrix <mu|V_n|nu> of one Gaussian barrier, including the sqrt(pi)/R prefactor."""
    R = basis.supercell_R
    d = basis.indices[None, :] - basis.indices[:, None]  # nu - mu
    phase = 2j * np.pi * d * center / R
    envelope = -(np.pi * width * d / R) ** 2
    return (math.sqrt(math.pi) / R) * strength * width * np.exp(envelope + phase)


def build_hamiltonian(lattice: LatticeSpec, basis: PlaneWaveBasis,
                      t: float = 0.0) -> HermitianMatrix:
    if basis.size % 2 != 1:
        raise ValueError(f"basis size must be odd, got {basis.size}")
    if not math.isclose(basis.supercell_R, lattice.supercell_R, rel_tol=1e-12):
        raise ValueError(
            f"basis supercell {basis.supercell_R} differs from lattice supercell "
            f"{lattice.supercell_R}")
    R = basis.supercell_R
    d = basis.indices[None, :] - basis.indices[:, None]
    envelope = np.exp(-(np.pi * lattice.width_Delta * d / R) ** 2)
    # Sum of barrier phases depends on nu - mu only; accumulate it on the
    # 4 k_max + 1 distinct differences.
    diffs = np.arange(-2 * basis.k_max, 2 * basis.k_max + 1)
    shift = lattice.displacement(t)
    acc = np.zeros(diffs.shape, dtype=complex)
    for center, strength in zip(lattice.centers, lattice.strengths):
        if strength != 0.0:
            acc += strength * np.exp(2j * np.pi * diffs * (center + shift) / R)
    potential = (math.sqrt(math.pi) / R) * lattice.width_Delta * envelope \
        * acc[d + 2 * basis.k_max]
    H = potential + np.diag(basis.kinetic())
    return HermitianMatrix(H, basis, float(t))


def plane_waves(basis: PlaneWaveBasis, x, order: int = 0) -> np.ndarray:
    """Matrix of d^order/dx^order exp(i k_mu x) with shape (len(x), basis.size)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = basis.wavenumbers
    waves = np.exp(1j * np.outer(x, k))
    if order:
        waves = waves * (1j * k) ** order
    return waves


def synthesize_wavefunction(coefficients, basis: PlaneWaveBasis, grid):
    """Evaluate psi = sum_mu c_mu exp(i k_mu x) and its exact derivative.

    ``grid`` is a Grid or an array of positions. ``coefficients`` may be a
    vector or a (basis.size, m) matrix of column states.
    """
    x = grid.x if isinstance(grid, Grid) else grid
    c = np.asarray(coefficients)
    psi = plane_waves(basis, x) @ c
    dpsi = plane_waves(basis, x, order=1) @ c
    return psi, dpsi


def _tie_order(energies, vectors, tol):
    """Ascending energy; near-degenerate groups ordered by the index of the dominant component."""
    order = np.argsort(energies, kind="stable")
    dominant = np.argmax(np.abs(vectors), axis=0)
    out = []
    i = 0
    while i < len(order):
        j = i + 1
        while j < len(order) and energies[order[j]] - energies[order[j - 1]] <= tol:
            j += 1
        group = sorted(order[i:j], key=lambda m: (dominant[m], m))
        out.extend(group)
        i = j
    return np.array(out, dtype=int)


def eigensolve(h: HermitianMatrix, grid: Optional[Grid] = None,
               n_states: Optional[int] = None) -> List[WaveState]:
    """Stationary states sorted by energy.

    Coefficients are scaled by 1/sqrt(R) so that psi is normalized over the
    supercell; the underlying unit eigenvectors are ``sqrt(R) * coefficients``.
    """
    H = np.asarray(h.matrix)
    asym = np.max(np.abs(H - H.conj().T)) if H.size else 0.0
    if asym > HERMITICITY_TOL * max(1.0, np.max(np.abs(H))):
        raise ValueError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    basis = h.basis
    if n_states is None:
        energies, vectors = linalg.eigh(H)
    else:
        n_states = min(int(n_states), basis.size)
        energies, vectors = linalg.eigh(H, subset_by_index=(0, n_states - 1))
    # max|H_ii| bounds ||H||_2 from below, so this never loosens the check
    scale = max(np.max(np.abs(energies)), np.max(np.abs(np.diag(H))), np.finfo(float).tiny)
    residual = np.linalg.norm(H @ vectors - vectors * energies, axis=0).max()
    if residual > RESIDUAL_TOL * scale:
        raise EigensolverError(
            f"eigenpair residual {residual:.3e} exceeds {RESIDUAL_TOL:g} * ||H||", residual)
    order = _tie_order(energies, vectors, 1e-10 * max(1.0, scale))
    energies, vectors = energies[order], vectors[:, order]

    grid = grid or Grid.supercell(basis.supercell_R)
    coeffs = vectors / math.sqrt(basis.supercell_R)
    psi, dpsi = synthesize_wavefunction(coeffs, basis, grid)
    return [WaveState(float(energies[j]), coeffs[:, j], psi[:, j], dpsi[:, j], grid,
                      basis.k_max, basis.supercell_R)
            for j in range(len(energies))]


def stationary_states(lattice: LatticeSpec, k_max: int, n_states: Optional[int] = None,
                      grid: Optional[Grid] = None, t: float = 0.0) -> List[WaveState]:
    """Build and diagonalize H(t) for ``lattice`` in one call."""
    basis = PlaneWaveBasis(k_max, lattice.supercell_R)
    return eigensolve(build_hamiltonian(lattice, basis, t), grid, n_states)


def basis_of(state) -> PlaneWaveBasis:
    return PlaneWaveBasis(state.k_max, state.supercell_R)
