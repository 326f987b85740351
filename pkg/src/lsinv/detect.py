"""Structural conclusions from current profiles: plateaus, deviation intervals, defects, periods."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .domain import Kind, SymmetryTransform
from .invariants import CurrentProfile, DegenerateProfileError, ScanMap, convergence_measure

RELATIVE_FLOOR = 1e-9
MEDIAN_FACTOR = 5.0
MIN_PLATEAU_POINTS = 3
OVERSIZE_FACTOR = 1.25
# eps of an exactly constant profile is pure roundoff, about (D/dx)^2 * 1e-32
ZERO_SCORE = 1e-20


@dataclass(frozen=True)
class Plateau:
    start: float
    end: float
    value: complex
    spread: float

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class Deviation:
    start: float
    end: float
    peak_slope: float
    # flat stretches enclosed by a paired interval (the value between the two
    # halves of a single defect's footprint)
    inner_plateaus: Tuple[Plateau, ...] = ()

    @property
    def length(self) -> float:
        return self.end - self.start

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.start + self.end)


@dataclass(frozen=True)
class DefectEstimate:
    position: float
    interval: Deviation
    expected_length: float
    oversized: bool = False
    unresolved: bool = False


@dataclass
class SymmetryReport:
    plateaus: List[Plateau]
    deviations: List[Deviation]
    floor: float
    period: Optional[float] = None  # ring length when the profile wraps
    defect_estimates: List[DefectEstimate] = field(default_factory=list)
    inferred_period: Optional[float] = None


def constancy_floor(profile: CurrentProfile, relative: float = RELATIVE_FLOOR,
                    median_factor: float = MEDIAN_FACTOR) -> float:
    """max(relative * max|Q|, median_factor * median|Q'|)."""
    slope = np.abs(profile.derivative())
    return float(max(relative * np.max(np.abs(profile.values)),
                     median_factor * np.median(slope)))


def _runs(mask: np.ndarray) -> List[Tuple[bool, int, int]]:
    """(value, first, last) for maximal runs of equal booleans."""
    out = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            out.append((bool(mask[start]), start, i - 1))
            start = i
    return out


def _absorb_short_plateaus(runs, min_points):
    """Flat runs shorter than ``min_points`` are merged into their deviating neighbours."""
    merged = []
    for flat, i, j in runs:
        if flat and j - i + 1 < min_points and len(runs) > 1:
            flat = False
        if merged and merged[-1][0] == flat:
            merged[-1] = (flat, merged[-1][1], j)
        else:
            merged.append((flat, i, j))
    return merged


def segment_constancy(profile: CurrentProfile, floor: Optional[float] = None,
                      wrap: bool = False, pair_length: Optional[float] = None,
                      relative_floor: float = RELATIVE_FLOOR,
                      median_factor: float = MEDIAN_FACTOR,
                      min_plateau_points: int = MIN_PLATEAU_POINTS) -> SymmetryReport:
    """Split a profile into plateaus (|Q'| <= floor) and deviation intervals.

    With ``wrap`` the profile is periodic over its grid span (the last sample
    duplicates the first) and runs touching both ends are merged; intervals
    are reported with ``start`` in [x_min, x_max) and may end past x_max.

    ``pair_length`` (the translation length L) joins two deviation runs whose
    midpoints are about L apart when only a plateau shorter than L separates
    them: a single defect at X disturbs the current once where x meets it and
    once where x + L does, and the short plateau in between belongs to that
    defect. Pairing walks the profile from the end of its longest plateau.
    """
    x = profile.x
    values = np.asarray(profile.values)
    slope = np.abs(profile.derivative())
    if len(x) < 8:
        raise ValueError(f"profile needs at least 8 samples, got {len(x)}")
    if floor is None:
        floor = constancy_floor(profile, relative_floor, median_factor)
    ring = None
    if wrap:
        ring = float(x[-1] - x[0])
        x, values, slope = x[:-1], values[:-1], slope[:-1]
    runs = _absorb_short_plateaus(_runs(slope <= floor), min_plateau_points)
    n = len(x)
    spans = [_Span(flat, np.arange(i, j + 1), float(x[i]), float(x[j])) for flat, i, j in runs]
    if wrap and len(spans) > 1 and spans[0].flat == spans[-1].flat:
        tail = spans.pop()
        head = spans[0]
        spans[0] = _Span(head.flat, np.concatenate([tail.idx, head.idx]), tail.lo - ring, head.hi)
    if pair_length is not None and pair_length > 0:
        spans = _pair_deviations(spans, pair_length, ring, values)

    plateaus, deviations = [], []
    for sp in spans:
        lo, hi = sp.lo, sp.hi
        if ring is not None:
            shift = np.floor((lo - x[0]) / ring) * ring
            lo, hi = lo - shift, hi - shift
        if sp.flat:
            plateaus.append(_plateau(values, sp.idx, lo, hi))
        else:
            deviations.append(Deviation(lo, hi, float(slope[sp.idx % n].max()), sp.inner))
    plateaus.sort(key=lambda p: p.start)
    deviations.sort(key=lambda d: d.start)
    return SymmetryReport(plateaus, deviations, float(floor), ring)


@dataclass
class _Span:
    flat: bool
    idx: np.ndarray
    lo: float
    hi: float
    inner: Tuple[Plateau, ...] = ()

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _plateau(values, idx, lo, hi) -> Plateau:
    v = values[idx].mean()
    return Plateau(float(lo), float(hi), complex(v), float(np.max(np.abs(values[idx] - v))))


def _pair_deviations(spans, L, ring, values):
    if ring is not None and any(sp.flat for sp in spans):
        longest = max((i for i, sp in enumerate(spans) if sp.flat),
                      key=lambda i: spans[i].hi - spans[i].lo)
        rotated = spans[longest + 1:] + [
            _Span(sp.flat, sp.idx, sp.lo + ring, sp.hi + ring, sp.inner)
            for sp in spans[:longest + 1]]
        spans = rotated
    out = []
    i = 0
    while i < len(spans):
        a = spans[i]
        if (not a.flat and i + 2 < len(spans) and spans[i + 1].flat and not spans[i + 2].flat
                and spans[i + 1].hi - spans[i + 1].lo < L
                and abs(spans[i + 2].mid - a.mid - L) <= 0.5 * L):
            gap, b = spans[i + 1], spans[i + 2]
            inner = a.inner + (_plateau(values, gap.idx, gap.lo, gap.hi),) + b.inner
            out.append(_Span(False, np.concatenate([a.idx, gap.idx, b.idx]), a.lo, b.hi, inner))
            i += 3
        else:
            out.append(a)
            i += 1
    return out


def expected_deviation_length(L: float, support_w: float, driving_A: float = 0.0) -> float:
    return L + support_w + 2.0 * driving_A


def _wrap(x: float, ring: Optional[float], origin: float) -> float:
    if ring is None:
        return x
    return (x - origin) % ring + origin


def locate_defects(report: SymmetryReport, transform: SymmetryTransform, support_w: float,
                   driving_A: float = 0.0, origin: Optional[float] = None) -> List[DefectEstimate]:
    """Defect centers from deviation intervals of a translation profile.

    A defect at X deviates the current for x in (X - L - w/2 - A, X + w/2 + A),
    so its estimate is the interval midpoint plus L/2. Intervals longer than
    1.25x the expected length are flagged; intervals longer than twice it are
    reported as unresolved clusters rather than split.
    """
    if transform.kind is not Kind.TRANSLATION:
        raise ValueError("locate_defects needs a translation profile; use locate_defects_inversion")
    L = transform.parameter
    expected = expected_deviation_length(L, support_w, driving_A)
    if origin is None:
        origin = -0.5 * report.period if report.period is not None else 0.0
    out = []
    for dev in report.deviations:
        pos = _wrap(dev.midpoint + 0.5 * L, report.period, origin)
        out.append(DefectEstimate(float(pos), dev, expected,
                                  oversized=dev.length > OVERSIZE_FACTOR * expected,
                                  unresolved=dev.length > 2.0 * expected))
    report.defect_estimates = out
    return out


def locate_defects_inversion(reports: Sequence[Tuple[float, SymmetryReport]], support_w: float,
                             tolerance: Optional[float] = None,
                             ring: Optional[float] = None) -> List[float]:
    """Defect centers from inversion profiles taken at several centers alpha.

    Under inversion through alpha a defect at X deviates the current near X
    and near its mirror 2 alpha - X, so each report yields candidate pairs.
    A true defect is a candidate for every alpha; mirror images move with
    alpha and drop out of the intersection. A report without deviations
    (alpha through the defect itself, or a defect-free profile) carries no
    position information and is skipped.
    """
    tol = 0.5 * support_w if tolerance is None else tolerance

    def dist(a, b):
        d = abs(a - b)
        return min(d, ring - d) if ring else d

    candidate_sets = []
    for alpha, report in reports:
        if not report.deviations:
            continue
        cands = []
        for dev in report.deviations:
            m = dev.midpoint
            cands.extend([m, 2.0 * alpha - m])
        candidate_sets.append(cands)
    if not candidate_sets:
        return []
    found = []
    for c in candidate_sets[0]:
        if all(any(dist(c, o) <= tol for o in others) for others in candidate_sets[1:]):
            if not any(dist(c, f) <= tol for f in found):
                found.append(c)
    if ring:
        found = [(c + 0.5 * ring) % ring - 0.5 * ring for c in found]
    return sorted(found)


@dataclass(frozen=True)
class PeriodResult:
    period: Optional[float]
    parameters: np.ndarray
    scores: np.ndarray
    minima: Tuple[float, ...]
    flat: bool


def infer_period(scan: ScanMap, trim: Tuple[float, float], flat_ratio: float = 0.5,
                 zero_score: float = ZERO_SCORE) -> PeriodResult:
    """Shift minimizing the row-wise convergence measure over ``trim``.

    Significant local minima are those closer (in log scale) to the global
    minimum than to the median score; the smallest such shift is returned,
    so a period L is preferred over its multiples. A curve whose minimum is
    not below ``flat_ratio`` times the median gives no period, and so does a
    curve with every score below ``zero_score``: Q is constant for every
    shift (a continuous symmetry), so no discrete period is singled out.
    """
    scores = []
    for profile in scan.profiles:
        try:
            scores.append(convergence_measure(profile, trim))
        except DegenerateProfileError:
            scores.append(np.nan)
    scores = np.array(scores, dtype=float)
    params = np.asarray(scan.parameters)
    finite = np.isfinite(scores)
    if not finite.any():
        return PeriodResult(None, params, scores, (), True)
    tiny = np.finfo(float).tiny
    s = np.where(finite, np.maximum(scores, tiny), np.inf)
    median = float(np.median(s[finite]))
    best = float(np.min(s))
    if np.max(s[finite]) < zero_score or not best < flat_ratio * median:
        return PeriodResult(None, params, scores, (), True)
    logs = np.log10(s)
    cut = 0.5 * (np.log10(best) + np.log10(median))
    minima = []
    for i in range(len(s)):
        left = s[i - 1] if i > 0 else np.inf
        right = s[i + 1] if i + 1 < len(s) else np.inf
        if s[i] <= left and s[i] <= right and logs[i] <= cut:
            minima.append(float(params[i]))
    minima = tuple(sorted(minima))
    return PeriodResult(minima[0], params, scores, minima, False)
