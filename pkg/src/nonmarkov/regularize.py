"""Loess regularization of noisy trace-distance series.

The measure per oscillation is computed on smoothed copies of a series for
a whole grid of smoothing degrees; a horizontal plateau in chi(s) marks the
range where statistical noise has been removed while the physical
oscillations survive, and the regularized measure is read off the plateau.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import NoOscillations, NonMarkovError, NoPlateau, TooShort
from .metrics import TraceDistanceSeries, chi_per_oscillation, series_from_trajectories
from .qmodel import Trajectory

__all__ = [
    "LoessConfig",
    "PlateauConfig",
    "SweepResult",
    "loess_values",
    "loess_smooth",
    "sweep_chi",
    "detect_plateau",
    "regularize_series",
    "regularize_measure",
]


@dataclass(frozen=True)
class LoessConfig:
    """Smoothing degree s in [0, 1], local polynomial degree, robust iterations."""

    span_fraction: float
    degree: int = 2
    robustness_iterations: int = 0

    def __post_init__(self):
        if not 0.0 <= self.span_fraction <= 1.0:
            raise ValueError("span_fraction must lie in [0, 1]")
        if self.degree not in (0, 1, 2):
            raise ValueError("degree must be 0, 1 or 2")
        if self.robustness_iterations < 0:
            raise ValueError("robustness_iterations must be >= 0")


def _default_s_grid() -> np.ndarray:
    return np.round(np.linspace(0.0, 1.0, 101), 2)


@dataclass(frozen=True)
class PlateauConfig:
    """Plateau rule: absolute flatness eps over at least min_length grid points."""

    eps_abs: float = 0.02
    min_length: int = 5
    s_grid: np.ndarray = field(default_factory=_default_s_grid)

    def __post_init__(self):
        grid = np.asarray(self.s_grid, dtype=float)
        object.__setattr__(self, "s_grid", grid)
        if grid.ndim != 1 or grid.size < 1:
            raise ValueError("s_grid must be a non-empty 1-D array")
        if np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > 1:
            raise ValueError("s_grid must be ascending within [0, 1]")
        if self.min_length < 2:
            raise ValueError("min_length must be >= 2")
        if self.eps_abs <= 0:
            raise ValueError("eps_abs must be positive")


@dataclass
class SweepResult:
    """chi(s) over a smoothing-degree grid plus the detected plateau."""

    s_grid: np.ndarray
    chi_values: np.ndarray
    no_oscillation: np.ndarray
    label: str = ""
    plateau: tuple[int, int] | None = None
    chi_regularized: float | None = None
    chi_zero: float | None = None
    note: str | None = None


def _neighbor_starts(x: np.ndarray, q: int) -> np.ndarray:
    """Start index of the q-nearest contiguous window around each point.

    Ties in the farthest-neighbor distance break toward the lower index.
    """
    M = x.size
    starts = np.empty(M, dtype=np.intp)
    s = 0
    for i in range(M):
        lo = i - q + 1
        if lo < 0:
            lo = 0
        hi = i if i <= M - q else M - q
        if s < lo:
            s = lo
        while s < hi and (x[s + q] - x[i]) < (x[i] - x[s]):
            s += 1
        starts[i] = s
    return starts


def loess_values(x, y, span_fraction: float, degree: int = 2) -> np.ndarray:
    """Loess estimate of y at every sample point, without range clipping.

    At each point the q = max(degree+1, ceil(s*M)) nearest neighbors by
    abscissa are fit with a weighted least-squares polynomial under tricube
    weights w(u) = (1-|u|^3)^3, u = distance / farthest-neighbor distance.
    Rank-deficient local fits fall back to degree 1, then 0.  s = 0 returns
    the input unchanged.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    M = x.size
    if M < max(degree + 1, 3):
        raise TooShort(f"need at least {max(degree + 1, 3)} points, got {M}")
    if span_fraction == 0.0:
        return y.copy()
    q = max(degree + 1, int(math.ceil(span_fraction * M)))
    q = min(q, M)

    starts = _neighbor_starts(x, q)
    cols = starts[:, None] + np.arange(q)[None, :]
    d = x[cols] - x[:, None]
    dmax = np.abs(d).max(axis=1)
    dmax[dmax == 0.0] = 1.0
    dn = d / dmax[:, None]
    w = (1.0 - np.abs(dn) ** 3) ** 3
    yw = y[cols]

    # weighted moments of the normalized abscissae, S_r = sum w dn^r
    S = [np.sum(w * dn ** r, axis=1) for r in range(2 * degree + 1)]
    b = [np.sum(w * dn ** r * yw, axis=1) for r in range(degree + 1)]

    out = np.empty(M)
    todo = np.ones(M, dtype=bool)
    for deg in range(degree, 0, -1):
        n = deg + 1
        G = np.empty((M, n, n))
        for r in range(n):
            for c in range(n):
                G[:, r, c] = S[r + c]
        rhs = np.stack([b[r] for r in range(n)], axis=1)
        det = np.linalg.det(G)
        ok = todo & (np.abs(det) > 1e-12 * np.maximum(S[0], 1.0) ** n)
        if np.any(ok):
            out[ok] = np.linalg.solve(G[ok], rhs[ok][:, :, None])[:, 0, 0]
            todo &= ~ok
        if not np.any(todo):
            break
    if np.any(todo):
        out[todo] = b[0][todo] / S[0][todo]
    return out


def loess_smooth(series: TraceDistanceSeries, cfg: LoessConfig) -> TraceDistanceSeries:
    """Loess-smoothed copy of a trace-distance series, clipped to [0, 1].

    Sigmas pass through unchanged; ``span_fraction = 0`` returns the input
    values untouched.
    """
    smoothed = loess_values(series.times, series.values, cfg.span_fraction, cfg.degree)
    np.clip(smoothed, 0.0, 1.0, out=smoothed)
    sigmas = series.sigmas.copy() if series.sigmas is not None else None
    return TraceDistanceSeries(times=series.times.copy(), values=smoothed, sigmas=sigmas)


def sweep_chi(series: TraceDistanceSeries, s_grid, amplitude_threshold: float,
              degree: int = 2, variant: str = "extrema", label: str = "") -> SweepResult:
    """Measure per oscillation of the series smoothed at every degree in s_grid.

    Smoothing degrees at which no oscillation survives are recorded as
    chi = 0 with the ``no_oscillation`` flag set.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or s_grid.size < 1:
        raise ValueError("s_grid must be a non-empty 1-D array")
    if np.any(np.diff(s_grid) <= 0) or s_grid[0] < 0 or s_grid[-1] > 1:
        raise ValueError("s_grid must be ascending within [0, 1]")
    chi = np.zeros(s_grid.size)
    flags = np.zeros(s_grid.size, dtype=bool)
    for i, s in enumerate(s_grid):
        smoothed = loess_smooth(series, LoessConfig(span_fraction=float(s), degree=degree))
        try:
            chi[i] = chi_per_oscillation(smoothed, amplitude_threshold, variant=variant)
        except NoOscillations:
            chi[i] = 0.0
            flags[i] = True
    return SweepResult(s_grid=s_grid.copy(), chi_values=chi, no_oscillation=flags,
                       label=label)


def detect_plateau(sweep: SweepResult, eps_abs: float, min_length: int) -> SweepResult:
    """Locate the plateau of chi(s) and read off the regularized measure.

    The plateau is the longest run of consecutive grid indices whose chi
    range (max - min) stays within eps_abs, at least min_length long, and
    not consisting entirely of values below eps_abs (the over-smoothed
    collapse toward zero is not a plateau).  Ties break toward smaller s;
    the regularized chi is the median over the plateau.

    Raises
    ------
    NoPlateau
        When no qualifying run exists, e.g. for undersampled data whose
        noise peak cannot be separated from the oscillations.
    """
    if min_length < 2:
        raise ValueError("min_length must be >= 2")
    chi = sweep.chi_values
    n = chi.size
    best: tuple[int, int] | None = None
    for start in range(n):
        lo = hi = chi[start]
        end = start - 1
        for j in range(start, n):
            lo = min(lo, chi[j])
            hi = max(hi, chi[j])
            if hi - lo > eps_abs:
                break
            end = j
        length = end - start + 1
        if (length >= min_length and chi[start:end + 1].max() >= eps_abs
                and (best is None or length > best[1] - best[0] + 1)):
            best = (start, end)
    if best is None:
        raise NoPlateau(
            f"no run of >= {min_length} grid points with chi range <= {eps_abs}")
    chi_reg = float(np.median(chi[best[0]:best[1] + 1]))
    return dataclasses.replace(sweep, plateau=best, chi_regularized=chi_reg)


def regularize_series(series: TraceDistanceSeries, plateau_cfg: PlateauConfig,
                      amplitude_threshold: float = 1e-3, degree: int = 2,
                      variant: str = "extrema", label: str = "") -> SweepResult:
    """Sweep one series over the smoothing grid and read off the plateau.

    A missing plateau is recorded in the result's ``note`` instead of
    raising, so per-pair pipelines keep going.
    """
    sweep = sweep_chi(series, plateau_cfg.s_grid, amplitude_threshold,
                      degree=degree, variant=variant, label=label)
    try:
        sweep.chi_zero = chi_per_oscillation(series, amplitude_threshold,
                                             variant=variant)
    except NoOscillations:
        sweep.chi_zero = 0.0
    try:
        sweep = detect_plateau(sweep, plateau_cfg.eps_abs, plateau_cfg.min_length)
    except NoPlateau as exc:
        sweep = dataclasses.replace(sweep, note=f"NoPlateau: {exc}")
    return sweep


def regularize_measure(trajs: list[Trajectory], loess_defaults: LoessConfig,
                       plateau_defaults: PlateauConfig,
                       amplitude_threshold: float = 1e-3,
                       variant: str = "extrema",
                       workers: int = 1) -> list[SweepResult]:
    """Full per-pair regularization report for a set of trajectories.

    Every unordered trajectory pair is turned into a trace-distance series,
    swept over the smoothing grid and searched for a plateau.  A failing
    pair is reported with a note instead of aborting the others.  Pairs are
    independent; ``workers`` > 1 processes them in a thread pool with
    results always assembled in pair order.
    """
    if len(trajs) < 2:
        raise ValueError("need at least two trajectories")
    pairs = [(i, j) for i in range(len(trajs)) for j in range(i + 1, len(trajs))]

    def one(pair: tuple[int, int]) -> SweepResult:
        i, j = pair
        label = f"{i}-{j}"
        try:
            series = series_from_trajectories(trajs[i], trajs[j])
            return regularize_series(series, plateau_defaults, amplitude_threshold,
                                     degree=loess_defaults.degree, variant=variant,
                                     label=label)
        except NonMarkovError as exc:
            return SweepResult(s_grid=np.asarray(plateau_defaults.s_grid),
                               chi_values=np.array([]),
                               no_oscillation=np.array([], dtype=bool),
                               label=label, note=f"{type(exc).__name__}: {exc}")

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, pairs))
    return [one(pair) for pair in pairs]
