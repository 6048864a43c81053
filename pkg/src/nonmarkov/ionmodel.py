"""Trapped-ion laser-ion dynamics on a truncated Fock ladder.

The resonant-drive Hamiltonian (hbar = 1, frequencies angular)

    H = omega a^dag a + (Omega/2) [exp(i eta (a^dag + a) - i phi) sigma_+ + h.c.]

acts on (qubit level) tensor (Fock n <= n_max).  Reducing the motion to its
two lowest levels and expanding to first order in the Lamb-Dicke parameter
eta maps this onto the two-qubit model with system frequency Omega,
reservoir frequency omega and coupling g = Omega eta; the operations here
simulate the full ladder so that the quality of that reduction can be
checked rather than assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .exceptions import TruncationOverflow
from .qmodel import ModelParams, PureState2, Trajectory

__all__ = [
    "IonParams",
    "PhononDistribution",
    "build_ion_hamiltonian",
    "ion_to_model",
    "thermal_distribution",
    "simulate_ion",
    "max_fock_occupation",
]

#: per-run initial weights below this are dropped (and the rest renormalized)
WEIGHT_FLOOR = 1e-8

#: maximum tolerated population in the two topmost Fock levels
TRUNCATION_GUARD = 1e-6


@dataclass(frozen=True)
class IonParams:
    """Laser-ion drive parameters.

    rabi and motional are angular frequencies [rad/us]; lamb_dicke is the
    dimensionless eta in [0, 1); fock_cutoff n_max >= 2 bounds the simulated
    phonon ladder.
    """

    rabi: float
    motional: float
    lamb_dicke: float
    laser_phase: float = 0.0
    fock_cutoff: int = 10

    def __post_init__(self):
        for name in ("rabi", "motional", "lamb_dicke", "laser_phase"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0.0 <= self.lamb_dicke < 1.0:
            raise ValueError("lamb_dicke must lie in [0, 1)")
        if self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be >= 2")

    @property
    def dim(self) -> int:
        return 2 * (self.fock_cutoff + 1)


@dataclass
class PhononDistribution:
    """Initial phonon occupation probabilities p(n), n = 0..n_max."""

    probabilities: np.ndarray

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        if self.probabilities.ndim != 1 or self.probabilities.size < 1:
            raise ValueError("probabilities must be a non-empty 1-D array")
        if self.probabilities.min() < 0:
            raise ValueError("probabilities must be non-negative")
        if abs(self.probabilities.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must sum to 1 within 1e-9")

    def mean(self) -> float:
        return float(np.arange(self.probabilities.size) @ self.probabilities)


def build_ion_hamiltonian(params: IonParams) -> np.ndarray:
    """Dense Hamiltonian on (qubit x Fock), dimension 2 (n_max + 1).

    The displacement-like factor exp(i eta (a^dag + a)) is evaluated as a
    matrix exponential on the truncated ladder, so no Lamb-Dicke series
    truncation enters the "full" model.
    """
    n_levels = params.fock_cutoff + 1
    n = np.arange(1, n_levels)
    a = np.zeros((n_levels, n_levels), dtype=complex)
    a[n - 1, n] = np.sqrt(n)
    x = a + a.conj().T
    E = expm(1j * params.lamb_dicke * x) * np.exp(-1j * params.laser_phase)

    number_op = np.diag(np.arange(n_levels, dtype=float))
    sigma_plus = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)

    H = np.kron(np.eye(2), params.motional * number_op).astype(complex)
    drive = 0.5 * params.rabi * np.kron(sigma_plus, E)
    H += drive + drive.conj().T
    return H


def ion_to_model(params: IonParams) -> ModelParams:
    """Two-qubit model parameters of the Lamb-Dicke reduction: g = Omega eta."""
    return ModelParams(omega_sys=params.rabi, omega_res=params.motional,
                       coupling=params.rabi * params.lamb_dicke)


def thermal_distribution(nbar: float, n_max: int) -> PhononDistribution:
    """Thermal occupation p(n) = nbar^n / (1+nbar)^(n+1), renormalized over the cutoff."""
    if nbar < 0:
        raise ValueError("nbar must be >= 0")
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(n_max + 1, dtype=float)
    if nbar == 0.0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
    else:
        p = np.exp(n * math.log(nbar) - (n + 1.0) * math.log1p(nbar))
        p /= p.sum()
    return PhononDistribution(probabilities=p)


def _rk4_guarded(H: np.ndarray, psi0: np.ndarray, times: np.ndarray, dt: float,
                 guard_slice_a: np.ndarray, guard_slice_b: np.ndarray) -> np.ndarray:
    """RK4 integration with the top-two-Fock truncation guard at every step."""
    psi = psi0.astype(complex)
    out = np.empty((times.size, psi.size), dtype=complex)
    t_prev = 0.0
    for i, t in enumerate(times):
        span = t - t_prev
        if span != 0.0:
            n_steps = max(1, int(math.ceil(abs(span) / dt)))
            h = span / n_steps
            for _ in range(n_steps):
                k1 = -1j * (H @ psi)
                k2 = -1j * (H @ (psi + 0.5 * h * k1))
                k3 = -1j * (H @ (psi + 0.5 * h * k2))
                k4 = -1j * (H @ (psi + h * k3))
                psi = psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                top = (np.abs(psi[guard_slice_a]) ** 2).sum() \
                    + (np.abs(psi[guard_slice_b]) ** 2).sum()
                if top > TRUNCATION_GUARD:
                    raise TruncationOverflow(
                        f"top-two-Fock population {top:.3e} exceeds "
                        f"{TRUNCATION_GUARD}; raise fock_cutoff")
        psi = psi / np.linalg.norm(psi)
        out[i] = psi
        t_prev = t
    return out


def simulate_ion(params: IonParams, qubit0: PureState2, phonons: PhononDistribution,
                 times) -> tuple[Trajectory, np.ndarray]:
    """Reduced-qubit trajectory and Fock populations of the full ion model.

    Each initial Fock state |qubit0> x |n> with non-negligible weight is
    integrated independently (exact for an initially diagonal phonon state)
    and the results are mixed with the phonon probabilities.  Returns the
    Bloch-vector trajectory of the qubit and an array of Fock populations
    with shape (len(times), n_max + 1).

    Raises
    ------
    TruncationOverflow
        If the initial distribution has p(n_max) >= 1e-8 or population
        leaks into the two topmost Fock levels during evolution.
    """
    times = np.asarray(times, dtype=float)
    n_levels = params.fock_cutoff + 1
    if phonons.probabilities.size != n_levels:
        raise ValueError("phonon distribution length must equal fock_cutoff + 1")
    if phonons.probabilities[-1] >= WEIGHT_FLOOR:
        raise TruncationOverflow(
            f"p(n_max) = {phonons.probabilities[-1]:.3e} leaves no truncation "
            "headroom; raise fock_cutoff")

    H = build_ion_hamiltonian(params)
    scale = max(abs(params.rabi), abs(params.motional))
    dt = 2.0 * math.pi / (256.0 * scale) if scale > 0 else math.inf

    guard_a = np.array([params.fock_cutoff, n_levels + params.fock_cutoff])
    guard_b = guard_a - 1

    keep = np.flatnonzero(phonons.probabilities >= WEIGHT_FLOOR)
    weights = phonons.probabilities[keep]
    weights = weights / weights.sum()

    qvec = qubit0.as_array()
    bloch = np.zeros((times.size, 3))
    fock = np.zeros((times.size, n_levels))
    for w, n0 in zip(weights, keep):
        psi0 = np.zeros(2 * n_levels, dtype=complex)
        psi0[n0] = qvec[0]
        psi0[n_levels + n0] = qvec[1]
        states = _rk4_guarded(H, psi0, times, dt, guard_a, guard_b)
        amps = states.reshape(times.size, 2, n_levels)
        rho01 = np.einsum("mn,mn->m", amps[:, 0, :], amps[:, 1, :].conj())
        pops = np.abs(amps) ** 2
        bloch[:, 0] += w * 2.0 * rho01.real
        bloch[:, 1] += w * -2.0 * rho01.imag
        bloch[:, 2] += w * (pops[:, 0, :].sum(axis=1) - pops[:, 1, :].sum(axis=1))
        fock += w * pops.sum(axis=1)
    return Trajectory(times=times, points=bloch), fock


def max_fock_occupation(params: IonParams, nbar: float, t_end: float, dt: float,
                        qubit0: PureState2 = PureState2(1.0, 0.0)) -> np.ndarray:
    """Maximum over time of each Fock level's population, length n_max + 1.

    The sampling grid runs from 0 to t_end in steps of dt; the relevant
    entries for the qubit-approximation check are n = 2, 3, 4.
    """
    if t_end <= 0 or dt <= 0:
        raise ValueError("t_end and dt must be positive")
    times = np.arange(0.0, t_end + 0.5 * dt, dt)
    phonons = thermal_distribution(nbar, params.fock_cutoff)
    _, fock = simulate_ion(params, qubit0, phonons, times)
    return fock.max(axis=0)
