"""Reproducible Monte-Carlo measurement noise.

Every draw is addressed by (seed, stream, time index, component) through a
SplitMix64-style counter hash feeding the inverse binomial CDF, so results
are bit-identical regardless of execution order or thread count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .metrics import TraceDistanceSeries
from .qmodel import Trajectory

__all__ = [
    "NoiseMode",
    "NoiseConfig",
    "sample_bloch_shots",
    "sample_td_binomial",
    "delta_p",
    "delta_v",
]


class NoiseMode(enum.Enum):
    BLOCH_SHOTS = "bloch_shots"
    TD_BINOMIAL = "td_binomial"


@dataclass(frozen=True)
class NoiseConfig:
    """Shot count, RNG seed and sampling mode."""

    shots: int
    seed: int
    mode: NoiseMode = NoiseMode.BLOCH_SHOTS

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")


_C0 = np.uint64(0x9E3779B97F4A7C15)
_C1 = np.uint64(0xBF58476D1CE4E5B9)
_C2 = np.uint64(0x94D049BB133111EB)

# sub-stream tag separating the trace-distance protocol from Bloch sampling
_TD_STREAM = np.uint64(0x7464)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = z + _C0
    z ^= z >> np.uint64(30)
    z *= _C1
    z ^= z >> np.uint64(27)
    z *= _C2
    z ^= z >> np.uint64(31)
    return z


def _uniforms(seed: int, stream: int, indices: np.ndarray, component: int) -> np.ndarray:
    """Open-interval uniforms addressed by (seed, stream, index, component)."""
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64(seed))
        h = _mix64(h ^ _mix64(np.uint64(stream)))
        h = _mix64(h ^ _mix64(indices.astype(np.uint64)))
        h = _mix64(h ^ _mix64(np.uint64(component)))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def _binomial_from_uniforms(u: np.ndarray, shots: int, p: np.ndarray) -> np.ndarray:
    """Exact binomial counts via the inverse CDF, one uniform per draw."""
    return binom.ppf(u, shots, np.clip(p, 0.0, 1.0))


def sample_bloch_shots(traj: Trajectory, cfg: NoiseConfig, seed_stream: int = 0) -> Trajectory:
    """Simulate finite-shot tomography of every Bloch component.

    Each component v_k at each time is measured as 2 n/N - 1 with
    n ~ Binomial(N, (1+v_k)/2) on its own shot batch; vectors whose norm
    exceeds 1 from statistical noise are renormalized to the sphere.
    Deterministic given (seed, stream).
    """
    if cfg.mode is not NoiseMode.BLOCH_SHOTS:
        raise ValueError("NoiseConfig.mode must be BLOCH_SHOTS")
    norms = np.linalg.norm(traj.points, axis=1)
    if norms.size and norms.max() > 1.0 + 1e-9:
        raise ValueError("input trajectory has |v| > 1")
    N = cfg.shots
    indices = np.arange(traj.times.size)
    sampled = np.empty_like(traj.points)
    for k in range(3):
        p = 0.5 * (1.0 + traj.points[:, k])
        u = _uniforms(cfg.seed, seed_stream, indices, k)
        sampled[:, k] = 2.0 * _binomial_from_uniforms(u, N, p) / N - 1.0
    out_norms = np.linalg.norm(sampled, axis=1)
    over = out_norms > 1.0
    sampled[over] /= out_norms[over, None]
    return Trajectory(times=traj.times.copy(), points=sampled, shots=N)


def sample_td_binomial(series: TraceDistanceSeries, cfg: NoiseConfig) -> TraceDistanceSeries:
    """Replace each trace-distance value D(m) by n/N with n ~ Binomial(N, D(m)).

    The direct-noise protocol used to verify the regularization procedure;
    sigmas are dropped.  Deterministic given the seed.
    """
    if cfg.mode is not NoiseMode.TD_BINOMIAL:
        raise ValueError("NoiseConfig.mode must be TD_BINOMIAL")
    indices = np.arange(series.times.size)
    u = _uniforms(cfg.seed, int(_TD_STREAM), indices, 0)
    noisy = _binomial_from_uniforms(u, cfg.shots, series.values) / cfg.shots
    return TraceDistanceSeries(times=series.times.copy(), values=noisy)


def delta_p(p: float, shots: int) -> float:
    """Bernoulli standard error sqrt(p(1-p)/N) of an estimated probability."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return math.sqrt(p * (1.0 - p) / shots)


def delta_v(v: float, shots: int) -> float:
    """Standard error sqrt((1 - v^2)/N) of an estimated Bloch component."""
    if abs(v) > 1.0:
        raise ValueError("v must lie in [-1, 1]")
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return math.sqrt((1.0 - v * v) / shots)
