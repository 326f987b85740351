"""Two-point currents, their period averages, shift scans and the convergence measure.

All currents are sesquilinear in the wavefunction. Values at the image point
x_bar are always re-synthesized from plane-wave coefficients, never
interpolated from grid samples, so a broken symmetry cannot be faked by
interpolation error.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .domain import FloquetMode, Grid, NumericalError, SymmetryTransform, WaveState, map_point
from .hamiltonian import PlaneWaveBasis, plane_waves


class ProfileKind(enum.Enum):
    STATIC = "static"
    AVERAGED = "averaged"
    COMPLEMENTARY = "complementary"


class DegenerateProfileError(NumericalError):
    pass


@dataclass(frozen=True)
class CurrentProfile:
    """Samples of a two-point current on a grid.

    ``slope`` holds the exact x-derivative when it could be computed from the
    basis expansion; otherwise ``derivative()`` falls back to centered
    differences.
    """

    grid: Grid
    values: np.ndarray
    transform: SymmetryTransform
    kind: ProfileKind
    slope: Optional[np.ndarray] = None
    derivative_mode: str = "analytic"

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def magnitude2(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def derivative(self) -> np.ndarray:
        if self.slope is not None:
            return self.slope
        return finite_difference(self.values, self.grid.spacing_dx)

    def restrict(self, lo: float, hi: float) -> "CurrentProfile":
        """Sub-profile on the grid points inside [lo, hi]."""
        x = self.x
        tol = 1e-9 * self.grid.spacing_dx
        idx = np.nonzero((x >= lo - tol) & (x <= hi + tol))[0]
        if len(idx) < 2:
            raise ValueError(f"fewer than two grid points inside [{lo}, {hi}]")
        grid = Grid(float(x[idx[0]]), float(x[idx[-1]]), len(idx))
        slope = None if self.slope is None else self.slope[idx]
        return CurrentProfile(grid, self.values[idx], self.transform, self.kind, slope,
                              self.derivative_mode)


@dataclass(frozen=True)
class ScanMap:
    x: np.ndarray
    parameters: np.ndarray
    values: np.ndarray  # complex Q, one row per parameter
    profiles: tuple

    @property
    def magnitude2(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    @property
    def log10_magnitude2(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log10(self.magnitude2)


def finite_difference(values, dx: float) -> np.ndarray:
    """Centered second-order differences, one-sided second-order at the ends."""
    return np.gradient(np.asarray(values), dx, edge_order=2)


def _basis(obj) -> PlaneWaveBasis:
    return PlaneWaveBasis(obj.k_max, obj.supercell_R)


def _pair(left: np.ndarray, right: np.ndarray, state: np.ndarray, conj_left: bool = True):
    """sum_{mu,nu} f(left_{x mu}) right_{x nu} rho_{nu mu}, row by row.

    ``state`` is either a coefficient vector c (rho = c c^dagger) or a density
    matrix rho. With ``conj_left=False`` the left factor is not conjugated and
    a vector state enters as c c^T, which gives the bilinear (complementary)
    form.
    """
    if state.ndim == 1:
        lv = left @ state
        rv = right @ state
        return (np.conj(lv) if conj_left else lv) * rv
    if not conj_left:
        raise ValueError("complementary currents are not defined for mixed densities")
    return np.sum(np.conj(left) * (right @ state), axis=1)


def _shifted_derivative(basis, x, h):
    """Centered difference (psi(x+h) - psi(x-h)) / 2h built from exact samples."""
    return (plane_waves(basis, x + h) - plane_waves(basis, x - h)) / (2.0 * h)


def _current(basis: PlaneWaveBasis, state: np.ndarray, x: np.ndarray,
             transform: SymmetryTransform, complementary: bool = False,
             derivative: str = "analytic", h: Optional[float] = None):
    """Two-point current and its exact slope at positions ``x``.

    Q  = (1/2i) [sigma psi*(x) psi'(xb) - psi(xb) psi*'(x)]
    Q' = (1/2i) [psi*(x) psi''(xb) - psi(xb) psi*''(x)]
    (sigma * dxb/dx = 1 for both transforms). The complementary current drops
    the conjugations.
    """
    xb = map_point(transform, x)
    sigma = transform.sigma
    conj = not complementary
    f0, fb = plane_waves(basis, x), plane_waves(basis, xb)
    if derivative == "analytic":
        d0, db = plane_waves(basis, x, 1), plane_waves(basis, xb, 1)
    elif derivative == "grid":
        d0 = _shifted_derivative(basis, x, h)
        db = _shifted_derivative(basis, xb, h)
    else:
        raise ValueError(f"unknown derivative mode {derivative!r}")
    q = (sigma * _pair(f0, db, state, conj) - _pair(d0, fb, state, conj)) / 2j
    if derivative != "analytic":
        return q, None
    s0, sb = plane_waves(basis, x, 2), plane_waves(basis, xb, 2)
    slope = (_pair(f0, sb, state, conj) - _pair(s0, fb, state, conj)) / 2j
    return q, slope


def two_point_current(state: WaveState, transform: SymmetryTransform,
                      grid: Optional[Grid] = None, derivative: str = "analytic") -> CurrentProfile:
    """Q(x) = (1/2i)[sigma psi*(x) psi'(x_bar) - psi(x_bar) psi*'(x)] on ``grid``.

    ``derivative="grid"`` replaces every psi' by the centered difference with
    the grid spacing, which models a wavefunction that is only known on a
    grid; the exact slope is then not available.
    """
    grid = grid or state.grid
    basis = _basis(state)
    q, slope = _current(basis, state.coefficients, grid.x, transform,
                        derivative=derivative, h=grid.spacing_dx)
    return CurrentProfile(grid, q, transform, ProfileKind.STATIC, slope, derivative)


def complementary_current(state: WaveState, transform: SymmetryTransform,
                          grid: Optional[Grid] = None) -> CurrentProfile:
    grid = grid or state.grid
    q, slope = _current(_basis(state), state.coefficients, grid.x, transform,
                        complementary=True)
    return CurrentProfile(grid, q, transform, ProfileKind.COMPLEMENTARY, slope)


def averaged_current(mode: FloquetMode, transform: SymmetryTransform,
                     grid: Optional[Grid] = None, method: Optional[str] = None) -> CurrentProfile:
    """One-period average of Q(x, x_bar; t) for a Floquet mode.

    The default is ``"exact"`` when the mode carries an averaged density and
    ``"trapezoid"`` otherwise.

    ``method="trapezoid"`` averages the stored time samples (uniform samples
    of a periodic integrand, so the trapezoid rule is the plain mean).
    ``method="exact"`` uses the exactly accumulated period-averaged density
    matrix of the piecewise-constant propagation.
    """
    grid = grid or mode.grid
    basis = _basis(mode)
    x = grid.x
    if method is None:
        method = "exact" if mode.averaged_density is not None else "trapezoid"
    if method == "exact":
        if mode.averaged_density is None:
            raise ValueError("mode carries no averaged density; rebuild it with accumulate_density=True")
        rho = mode.averaged_density
        q, slope = _current(basis, rho, x, transform)
    elif method == "trapezoid":
        n = mode.n_time_samples
        if n < 2:
            raise ValueError(f"time average needs at least 2 samples, got {n}")
        # One density matrix sum replaces n separate evaluations.
        c = mode.coefficients
        rho = np.einsum("ja,jb->ab", c, np.conj(c)) / n
        q, slope = _current(basis, rho, x, transform)
    else:
        raise ValueError(f"unknown averaging method {method!r}")
    return CurrentProfile(grid, q, transform, ProfileKind.AVERAGED, slope)


def instantaneous_currents(mode: FloquetMode, transform: SymmetryTransform,
                           grid: Optional[Grid] = None):
    """Integrand Q(x, x_bar; t_j) for every stored time sample, shape (n_t, n_x)."""
    grid = grid or mode.grid
    basis = _basis(mode)
    values, slopes = [], []
    for c in mode.coefficients:
        q, s = _current(basis, c, grid.x, transform)
        values.append(q)
        slopes.append(s)
    return np.array(values), np.array(slopes)


def probability_current(state, grid: Optional[Grid] = None, method: Optional[str] = None) -> CurrentProfile:
    """Coincidence limit J(x) = Q(x, x); period-averaged for a Floquet mode."""
    zero = SymmetryTransform.translation(0.0)
    if isinstance(state, FloquetMode):
        return averaged_current(state, zero, grid, method)
    return two_point_current(state, zero, grid)


def shift_scan(state: WaveState, delta_L_values: Sequence[float],
               grid: Optional[Grid] = None) -> ScanMap:
    grid = grid or state.grid
    params = np.asarray(delta_L_values, dtype=float)
    profiles = tuple(two_point_current(state, SymmetryTransform.translation(d), grid)
                     for d in params)
    values = np.array([p.values for p in profiles])
    return ScanMap(grid.x, params, values, profiles)


def convergence_measure(profile: CurrentProfile,
                        domain: Optional[Tuple[float, float]] = None) -> float:
    """eps = D^2 * int_D |Q'|^2 dx / int_D |Q|^2 dx.

    Q' is taken by finite differences of the sampled profile; integrals use
    the trapezoid rule over the grid points inside ``domain`` and D is their
    span.
    """
    sub = profile if domain is None else profile.restrict(*domain)
    x = sub.x
    dq = finite_difference(sub.values, sub.grid.spacing_dx)
    num = np.trapezoid(np.abs(dq) ** 2, x)
    den = np.trapezoid(np.abs(sub.values) ** 2, x)
    if not den > 0 or not np.isfinite(den):
        raise DegenerateProfileError("|Q|^2 integrates to zero over the domain")
    D = x[-1] - x[0]
    return float(D ** 2 * num / den)
