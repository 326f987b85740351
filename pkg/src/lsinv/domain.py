"""Value types shared across the package and the symmetry-transform geometry.

Natural units hbar = m = 1 are used everywhere. The supercell is the interval
[-R/2, R/2) with periodic boundaries; barrier positions and potential values
are understood modulo R.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

DEFAULT_WIDTH = 0.5
TAIL_CUTOFF = 1e-12
MAX_GRID_SPACING = 0.05


class NumericalError(RuntimeError):
    """A computation finished but failed its own accuracy check."""


class Kind(enum.Enum):
    TRANSLATION = "translation"
    INVERSION = "inversion"


@dataclass(frozen=True)
class SymmetryTransform:
    """Translation by ``parameter`` (sigma=+1) or inversion through ``parameter`` (sigma=-1)."""

    kind: Kind
    parameter: float

    @classmethod
    def translation(cls, length: float) -> "SymmetryTransform":
        return cls(Kind.TRANSLATION, float(length))

    @classmethod
    def inversion(cls, center: float) -> "SymmetryTransform":
        return cls(Kind.INVERSION, float(center))

    @property
    def sigma(self) -> int:
        return 1 if self.kind is Kind.TRANSLATION else -1

    def __call__(self, x):
        return map_point(self, x)


def map_point(transform: SymmetryTransform, x):
    """Image of ``x`` under the transform; works elementwise on arrays."""
    if transform.kind is Kind.TRANSLATION:
        return x + transform.parameter
    return -x + 2.0 * transform.parameter


@dataclass(frozen=True)
class Driving:
    """Lateral shaking d(t) = A cos(omega t)."""

    amplitude_A: float
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"driving frequency must be positive, got {self.omega}")
        if self.amplitude_A < 0:
            raise ValueError(f"driving amplitude must be non-negative, got {self.amplitude_A}")

    @property
    def period_T(self) -> float:
        return 2.0 * math.pi / self.omega

    def displacement(self, t):
        return self.amplitude_A * np.cos(self.omega * np.asarray(t, dtype=float))


def support_width(strength: float, width: float, cutoff: float = TAIL_CUTOFF) -> float:
    """Full width beyond which a Gaussian of peak ``strength`` falls below ``cutoff * strength``.

    With ``cutoff = 1e-12`` this is ``2 * width * sqrt(ln 1e12)``, about 10.5 widths.
    """
    del strength  # relative cutoff, independent of the peak value
    return 2.0 * width * math.sqrt(math.log(1.0 / cutoff))


@dataclass(frozen=True)
class LatticeSpec:
    """N Gaussian barriers in a periodic supercell of length ``supercell_R``.

    ``support_w`` defaults to the tail-cutoff width of the Gaussian profile and
    is only used for interval bookkeeping in defect detection.
    """

    supercell_R: float
    centers: tuple
    strengths: tuple
    width_Delta: float = DEFAULT_WIDTH
    support_w: Optional[float] = None
    driving: Optional[Driving] = None

    def __post_init__(self):
        centers = tuple(float(c) for c in self.centers)
        strengths = tuple(float(s) for s in self.strengths)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "strengths", strengths)
        if len(centers) != len(strengths):
            raise ValueError(
                f"{len(centers)} centers but {len(strengths)} strengths")
        if not self.supercell_R > 0:
            raise ValueError(f"supercell length must be positive, got {self.supercell_R}")
        if not self.width_Delta > 0:
            raise ValueError(f"Gaussian width must be positive, got {self.width_Delta}")
        half = 0.5 * self.supercell_R
        for c in centers:
            if not -half <= c < half:
                raise ValueError(f"barrier center {c} outside the supercell [{-half}, {half})")
        if len(set(centers)) != len(centers):
            raise ValueError("barrier centers must be distinct")
        if self.support_w is None:
            object.__setattr__(self, "support_w", support_width(1.0, self.width_Delta))
        elif not self.support_w > 0:
            raise ValueError(f"support width must be positive, got {self.support_w}")

    @classmethod
    def regular(cls, n_barriers: int, spacing: float, strength: float = 1.0,
                defects: Optional[dict] = None, width: float = DEFAULT_WIDTH,
                driving: Optional[Driving] = None) -> "LatticeSpec":
        """Lattice of ``n_barriers`` centered on x=0 with supercell R = N * spacing.

        ``defects`` maps barrier positions to strengths that replace ``strength``.
        """
        offset = 0.5 * (n_barriers - 1)
        centers = [(n - offset) * spacing for n in range(n_barriers)]
        strengths = [strength] * n_barriers
        for pos, value in (defects or {}).items():
            hits = [i for i, c in enumerate(centers) if abs(c - pos) < 1e-9 * spacing]
            if not hits:
                raise ValueError(f"no barrier at defect position {pos}")
            strengths[hits[0]] = value
        return cls(n_barriers * spacing, centers, strengths, width, None, driving)

    @property
    def n_barriers(self) -> int:
        return len(self.centers)

    @property
    def amplitude(self) -> float:
        return 0.0 if self.driving is None else self.driving.amplitude_A

    def displacement(self, t) -> float:
        return 0.0 if self.driving is None else float(self.driving.displacement(t))

    def static(self) -> "LatticeSpec":
        return LatticeSpec(self.supercell_R, self.centers, self.strengths,
                           self.width_Delta, self.support_w, None)

    def with_strengths(self, strengths: Sequence[float]) -> "LatticeSpec":
        return LatticeSpec(self.supercell_R, self.centers, tuple(strengths),
                           self.width_Delta, self.support_w, self.driving)

    def with_width(self, width: float) -> "LatticeSpec":
        return LatticeSpec(self.supercell_R, self.centers, self.strengths,
                           width, None, self.driving)


def potential_value(lattice: LatticeSpec, x, t: float = 0.0, truncate: bool = True,
                    periodic: bool = True):
    """Lattice potential V(x, t).

    With ``periodic`` the barriers repeat with the supercell length (minimum
    image plus both neighbouring images); otherwise the N barriers sit on the
    open line. With ``truncate`` each Gaussian is zero beyond half the support
    width.
    """
    x = np.asarray(x, dtype=float)
    R = lattice.supercell_R
    shift = lattice.displacement(t)
    half_w = 0.5 * lattice.support_w
    images = (-R, 0.0, R) if periodic else (0.0,)
    out = np.zeros_like(x)
    for center, strength in zip(lattice.centers, lattice.strengths):
        if strength == 0.0:
            continue
        d0 = x - center - shift
        if periodic:
            d0 = d0 - R * np.round(d0 / R)
        for image in images:
            d = d0 - image
            term = strength * np.exp(-(d / lattice.width_Delta) ** 2)
            if truncate:
                term = np.where(np.abs(d) > half_w, 0.0, term)
            out = out + term
    return out


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError(f"grid needs at least 2 points, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError(f"empty grid interval [{self.x_min}, {self.x_max}]")

    @property
    def spacing_dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @classmethod
    def with_spacing(cls, x_min: float, x_max: float, dx: float) -> "Grid":
        """Smallest grid on [x_min, x_max] whose spacing does not exceed ``dx``."""
        n = int(math.ceil((x_max - x_min) / dx - 1e-9)) + 1
        return cls(x_min, x_max, max(n, 2))

    @classmethod
    def supercell(cls, R: float, dx: float = MAX_GRID_SPACING) -> "Grid":
        return cls.with_spacing(-0.5 * R, 0.5 * R, dx)


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class WaveState:
    """One stationary state: plane-wave coefficients plus grid samples of psi and dpsi/dx.

    ``k_max`` and ``supercell_R`` identify the plane-wave basis so that the
    wavefunction can be re-synthesized exactly at arbitrary points.
    """

    energy_E: float
    coefficients: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    grid: Grid
    k_max: int
    supercell_R: float

    def __post_init__(self):
        for name in ("coefficients", "psi", "dpsi"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))


@dataclass(frozen=True)
class FloquetMode:
    """Time samples of one Floquet mode over a single driving period.

    ``coefficients[j]`` are the plane-wave coefficients of Psi(x, t_j);
    ``psi[j]``/``dpsi[j]`` are their grid samples. ``averaged_density`` is
    the exact one-period average of c(t) c(t)^dagger under the piecewise
    constant propagation, when it was accumulated.
    """

    quasienergy_eps: float
    omega: float
    times: np.ndarray
    coefficients: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    grid: Grid
    k_max: int
    supercell_R: float
    mean_energy: Optional[float] = None
    averaged_density: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("times", "coefficients", "psi", "dpsi"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.averaged_density is not None:
            object.__setattr__(self, "averaged_density", _frozen(self.averaged_density))

    @property
    def period_T(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def n_time_samples(self) -> int:
        return len(self.times)

    def snapshot(self, j: int) -> WaveState:
        """Instantaneous state Psi(., t_j) as a WaveState (energy slot holds the quasienergy)."""
        return WaveState(self.quasienergy_eps, self.coefficients[j], self.psi[j],
                         self.dpsi[j], self.grid, self.k_max, self.supercell_R)
