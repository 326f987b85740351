"""2x2 transfer matrices for static chains of localized scatterers.

Amplitudes (F, G) describe psi(x) = F exp(ikx) + G exp(-ikx) in a
potential-free region, in global coordinates. Region n lies between
scatterers n-1 and n, so a chain of N scatterers has regions 0..N.

Delta scatterers follow the factor-2 form of the Schroedinger equation
psi'' + 2 (E - V) psi = 0, i.e. the derivative jump is
psi'(0+) - psi'(0-) = 2 Lambda psi(0). Texts that write psi'' + (E - V) psi = 0
have no factor 2 here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .domain import NumericalError

ETA = np.array([[1, 0], [0, -1]], dtype=complex)
TAU = np.array([[0, 1], [1, 0]], dtype=complex)
ZETA = ETA @ TAU  # [[0, 1], [-1, 0]]
CONDITION_TOL = 1e-10


@dataclass(frozen=True)
class AmplitudePair:
    F: complex
    G: complex
    region: int

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.F, self.G], dtype=complex)

    def psi(self, k: float, x):
        x = np.asarray(x, dtype=float)
        return self.F * np.exp(1j * k * x) + self.G * np.exp(-1j * k * x)

    def dpsi(self, k: float, x):
        x = np.asarray(x, dtype=float)
        return 1j * k * (self.F * np.exp(1j * k * x) - self.G * np.exp(-1j * k * x))


def shift_matrix(k: float, s: float) -> np.ndarray:
    """K_s = diag(exp(iks), exp(-iks))."""
    return np.diag([np.exp(1j * k * s), np.exp(-1j * k * s)])


def delta_transfer(strength: complex, k: float) -> np.ndarray:
    """Transfer matrix of strength * delta(x) at the origin: [[1+a, a], [-a, 1-a]], a = strength/(ik)."""
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    a = strength / (1j * k)
    return np.array([[1 + a, a], [-a, 1 - a]], dtype=complex)


def placed(P: np.ndarray, k: float, position: float) -> np.ndarray:
    """Transfer matrix of a scatterer moved from the origin to ``position``: K*_s P K_s."""
    K = shift_matrix(k, position)
    return K.conj() @ P @ K


def check_pcc(M: np.ndarray) -> float:
    """max |M^dagger eta M - eta|; probability current conservation holds below 1e-10."""
    M = np.asarray(M)
    return float(np.max(np.abs(M.conj().T @ ETA @ M - ETA)))


def check_tri(M: np.ndarray) -> float:
    """max |M^-1 tau M* - tau|; time-reversal invariance holds below 1e-10."""
    M = np.asarray(M)
    det = np.linalg.det(M)
    if abs(det) < 1e-300 or np.linalg.cond(M) > 1e14:
        raise np.linalg.LinAlgError("transfer matrix is singular")
    return float(np.max(np.abs(np.linalg.solve(M, TAU @ M.conj()) - TAU)))


def passes(defect: float) -> bool:
    return defect < CONDITION_TOL


def chain_matrices(chain: Sequence[Tuple[float, np.ndarray]], k: float) -> List[np.ndarray]:
    """Shifted matrices M_n = K*_{X_n} P_n K_{X_n} for a chain of (X_n, P_n)."""
    return [placed(P, k, X) for X, P in chain]


def propagate_amplitudes(chain: Sequence[Tuple[float, np.ndarray]], k: float,
                         F0: complex = 1.0) -> List[AmplitudePair]:
    """Scattering state with incident amplitude F0 from the left and nothing incoming from the right.

    ``chain`` holds (position, local transfer matrix at the origin) in
    left-to-right order. Returns amplitudes for regions 0..N.
    """
    mats = chain_matrices(chain, k)
    total = np.eye(2, dtype=complex)
    for M in mats:
        total = M @ total
    if abs(total[1, 1]) < 1e-14 * max(1.0, np.max(np.abs(total))):
        raise NumericalError("total transfer matrix has a vanishing M22; no scattering solution")
    G0 = -total[1, 0] * F0 / total[1, 1]
    v = np.array([F0, G0], dtype=complex)
    pairs = [AmplitudePair(complex(v[0]), complex(v[1]), 0)]
    for n, M in enumerate(mats):
        v = M @ v
        pairs.append(AmplitudePair(complex(v[0]), complex(v[1]), n + 1))
    return pairs


def q_translation(pair_n: AmplitudePair, M_n: np.ndarray, k: float, L: float) -> complex:
    """Q_n = k Psi_n^dagger eta K_L M_n Psi_n: x in region n, x + L one scatterer further."""
    v = pair_n.vector
    return complex(k * v.conj() @ ETA @ shift_matrix(k, L) @ M_n @ v)


def q_inversion(pair_n: AmplitudePair, pair_nbar: AmplitudePair, M_nbar: np.ndarray,
                k: float, alpha: float) -> complex:
    """Q_n = k Psi_n^dagger zeta K_2alpha M_nbar Psi_nbar for inversion through alpha."""
    v = pair_n.vector
    w = pair_nbar.vector
    return complex(k * v.conj() @ ZETA @ shift_matrix(k, 2 * alpha) @ M_nbar @ w)


def qc_translation(pair_n: AmplitudePair, M_n: np.ndarray, k: float, L: float) -> complex:
    """Complementary current for translation: k Psi_n^T (tau eta) K_L M_n Psi_n.

    Replacing psi* by psi swaps the roles of the two amplitudes, which is the
    extra tau next to the transpose.
    """
    v = pair_n.vector
    return complex(k * v @ TAU @ ETA @ shift_matrix(k, L) @ M_n @ v)


def qc_inversion(pair_n: AmplitudePair, pair_nbar: AmplitudePair, M_nbar: np.ndarray,
                 k: float, alpha: float) -> complex:
    """Complementary current for inversion: k Psi_n^T (tau zeta) K_2alpha M_nbar Psi_nbar."""
    v = pair_n.vector
    w = pair_nbar.vector
    return complex(k * v @ TAU @ ZETA @ shift_matrix(k, 2 * alpha) @ M_nbar @ w)


def mirror_region(n: int, alpha: float, L: float) -> int:
    """n_bar = 2 alpha / L - n; region n maps onto region n_bar + 1."""
    m = 2.0 * alpha / L
    if abs(m - round(m)) > 1e-9:
        raise ValueError(f"inversion center {alpha} is not a multiple of L/2 = {L / 2}")
    return int(round(m)) - n


def delta_defect_analytic(strength_c: float, k: float, L: float,
                          F0: complex = 1.0) -> Tuple[complex, complex, complex]:
    """Plateau values (Q_left, Q_center, Q_right) of a single delta scatterer probed by translation L.

    Q_left   = A (1 - |a|^2 / (1 + |a|^2) exp(-2ikL))
    Q_center = A / (1 + conj(a))
    Q_right  = A / (1 + |a|^2)
    with A = k |F0|^2 exp(ikL) and a = strength_c / (ik).
    """
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    a = strength_c / (1j * k)
    A = k * abs(F0) ** 2 * np.exp(1j * k * L)
    a2 = abs(a) ** 2
    q_left = A * (1 - a2 / (1 + a2) * np.exp(-2j * k * L))
    q_center = A / (1 + np.conj(a))
    q_right = A / (1 + a2)
    return complex(q_left), complex(q_center), complex(q_right)


def delta_chain(strengths: Sequence[complex], k: float, L: float) -> List[Tuple[float, np.ndarray]]:
    """Chain of delta scatterers at X_n = n L."""
    return [(n * L, delta_transfer(s, k)) for n, s in enumerate(strengths)]


def single_defect_plateaus(strength_c: float, k: float, L: float, n_sites: int = 5,
                           F0: complex = 1.0) -> Tuple[complex, complex, complex]:
    """Transfer-matrix route to the three plateau values of a lone delta in an otherwise empty chain.

    The defect sits on the central site of ``n_sites`` (odd) positions whose
    other strengths are zero.
    """
    if n_sites % 2 != 1:
        raise ValueError("n_sites must be odd")
    c = (n_sites - 1) // 2
    strengths = [0.0] * n_sites
    strengths[c] = strength_c
    chain = delta_chain(strengths, k, L)
    pairs = propagate_amplitudes(chain, k, F0)
    mats = chain_matrices(chain, k)
    identity = np.eye(2, dtype=complex)
    q_left = q_translation(pairs[c - 1], mats[c - 1], k, L) if c else \
        q_translation(pairs[0], identity, k, L)
    q_center = q_translation(pairs[c], mats[c], k, L)
    q_right = q_translation(pairs[c + 1], identity, k, L)
    return q_left, q_center, q_right


def amplitudes_at(psi: complex, dpsi: complex, k: float, x: float, region: int = 0) -> AmplitudePair:
    """(F, G) of the free solution matching psi and psi' at x.

    F = (psi + psi'/(ik)) exp(-ikx) / 2,  G = (psi - psi'/(ik)) exp(ikx) / 2.
    """
    if not k > 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    u = dpsi / (1j * k)
    return AmplitudePair(complex(0.5 * (psi + u) * np.exp(-1j * k * x)),
                         complex(0.5 * (psi - u) * np.exp(1j * k * x)), region)
