"""Exact dynamics of a qubit coupled to a single-qubit reservoir.

The joint Hamiltonian (hbar = 1, all frequencies angular) is

    H = (Omega/2) sigma_z x I + (omega/2) I x sigma_z + (g/2) (|01><10| + |10><01|)

in the fixed product basis {|00>, |01>, |10>, |11>} (system first), with
sigma_z|0> = +|0>.  The eigensystem, propagator, reduced-state trajectories
and all closed-form trace-distance expressions below follow from exact
diagonalization of the central 2x2 block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateCoupling, EmptyTimes, NonPhysical, StepTooLarge

__all__ = [
    "ModelParams",
    "PureState2",
    "OrthogonalPairSpec",
    "Trajectory",
    "build_hamiltonian",
    "eigensystem",
    "propagator",
    "evolve",
    "rk4_evolve",
    "rk4_schrodinger",
    "rotation_gate",
    "bloch_from_rho",
    "rho_from_bloch",
    "analytic_D_opt",
    "analytic_D_pair",
    "analytic_chi",
    "analytic_chi_pair",
]


@dataclass(frozen=True)
class ModelParams:
    """System/reservoir angular frequencies and coupling of the two-qubit model.

    Parameters
    ----------
    omega_sys : float
        System qubit transition frequency Omega [rad / time-unit].
    omega_res : float
        Reservoir qubit frequency omega [rad / time-unit].
    coupling : float
        Exchange coupling g >= 0 [rad / time-unit].
    """

    omega_sys: float
    omega_res: float
    coupling: float

    def __post_init__(self):
        for name in ("omega_sys", "omega_res", "coupling"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling!r}")

    def detuning(self) -> float:
        """Detuning Delta = Omega - omega."""
        return self.omega_sys - self.omega_res

    def rabi_splitting(self) -> float:
        """Oscillation frequency sqrt(g^2 + Delta^2) of the trace distance."""
        return math.hypot(self.coupling, self.detuning())


@dataclass(frozen=True)
class PureState2:
    """Pure qubit state a|0> + b|1>, normalized to 1 within 1e-12."""

    a: complex
    b: complex

    def __post_init__(self):
        norm = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"state not normalized: |a|^2+|b|^2 = {norm!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    @staticmethod
    def from_array(vec) -> "PureState2":
        vec = np.asarray(vec, dtype=complex)
        return PureState2(complex(vec[0]), complex(vec[1]))


KET0 = PureState2(1.0, 0.0)
KET1 = PureState2(0.0, 1.0)


@dataclass(frozen=True)
class OrthogonalPairSpec:
    """Orthogonal state pair psi0 = A|0> + B e^{i beta}|1>, psi1 = B|0> - A e^{i beta}|1>.

    B = sqrt(1 - A^2); amplitude_A in [0, 1], phase_beta in radians.
    """

    amplitude_A: float
    phase_beta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.amplitude_A <= 1.0:
            raise ValueError(f"amplitude_A must lie in [0, 1], got {self.amplitude_A!r}")
        if not math.isfinite(self.phase_beta):
            raise ValueError("phase_beta must be finite")

    def states(self) -> tuple[PureState2, PureState2]:
        A = self.amplitude_A
        B = math.sqrt(max(0.0, 1.0 - A * A))
        phase = complex(math.cos(self.phase_beta), math.sin(self.phase_beta))
        return PureState2(A, B * phase), PureState2(B, -A * phase)


@dataclass
class Trajectory:
    """Time grid plus Bloch vectors of one evolving initial state.

    ``points`` has shape (len(times), 3); ``shots`` records the number of
    measurement samples per basis per time point when the trajectory came
    out of a shot-noise sampler.
    """

    times: np.ndarray
    points: np.ndarray
    shots: int | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.times.ndim != 1 or self.points.shape != (self.times.size, 3):
            raise ValueError("times must be 1-D and points of shape (len(times), 3)")
        if self.times.size and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be a positive integer")


# index order |00>, |01>, |10>, |11>  (system tensor reservoir)


def build_hamiltonian(params: ModelParams) -> np.ndarray:
    """4x4 Hamiltonian of the coupled system-reservoir pair.

    Diagonal ((Omega+omega)/2, Delta/2, -Delta/2, -(Omega+omega)/2) with the
    exchange coupling g/2 linking |01> and |10>.
    """
    half_sum = 0.5 * (params.omega_sys + params.omega_res)
    half_det = 0.5 * params.detuning()
    half_g = 0.5 * params.coupling
    H = np.zeros((4, 4), dtype=complex)
    H[0, 0] = half_sum
    H[1, 1] = half_det
    H[2, 2] = -half_det
    H[3, 3] = -half_sum
    H[1, 2] = half_g
    H[2, 1] = half_g
    return H


def eigensystem(params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form eigenvalues and diagonalizing matrix of the Hamiltonian.

    Returns ``(lambdas, S, S_inv)`` with eigenvalues ordered
    ((Omega+omega)/2, -R/2, +R/2, -(Omega+omega)/2), R = sqrt(g^2 + Delta^2),
    such that ``S @ diag(lambdas) @ S_inv`` reconstructs the Hamiltonian.
    S_inv comes from explicit 2x2 block inversion.

    Raises
    ------
    DegenerateCoupling
        If g = 0; the eigenvector entries divide by g, use the diagonal
        fast path instead.
    """
    g = params.coupling
    if g == 0.0:
        raise DegenerateCoupling("g = 0: Hamiltonian already diagonal")
    delta = params.detuning()
    R = math.hypot(g, delta)
    lambdas = np.array([0.5 * (params.omega_sys + params.omega_res), -0.5 * R,
                        0.5 * R, -0.5 * (params.omega_sys + params.omega_res)])

    # inner eigenvector slopes for eigenvalues -R/2 and +R/2; the forms below
    # avoid cancellation for either sign of the detuning
    if delta >= 0:
        slope_minus = -g / (R + delta)          # == -(R - delta) / g
        slope_plus = (R + delta) / g
    else:
        slope_minus = -(R - delta) / g
        slope_plus = g / (R - delta)            # == (R + delta) / g

    S = np.eye(4, dtype=complex)
    S[1, 1] = slope_minus
    S[1, 2] = slope_plus
    S[2, 1] = 1.0
    S[2, 2] = 1.0

    det = slope_minus - slope_plus
    S_inv = np.eye(4, dtype=complex)
    S_inv[1, 1] = 1.0 / det
    S_inv[1, 2] = -slope_plus / det
    S_inv[2, 1] = -1.0 / det
    S_inv[2, 2] = slope_minus / det
    return lambdas, S, S_inv


def _propagators(params: ModelParams, times: np.ndarray) -> np.ndarray:
    """Stack of U(t) = S exp(-i Lambda t) S^-1 for every t, shape (len(times), 4, 4)."""
    times = np.asarray(times, dtype=float)
    if params.coupling == 0.0:
        diag = np.array([0.5 * (params.omega_sys + params.omega_res),
                         0.5 * params.detuning(),
                         -0.5 * params.detuning(),
                         -0.5 * (params.omega_sys + params.omega_res)])
        phases = np.exp(-1j * np.outer(times, diag))
        out = np.zeros((times.size, 4, 4), dtype=complex)
        idx = np.arange(4)
        out[:, idx, idx] = phases
        return out
    lambdas, S, S_inv = eigensystem(params)
    phases = np.exp(-1j * np.outer(times, lambdas))
    return np.einsum("ij,tj,jk->tik", S, phases, S_inv)


def propagator(params: ModelParams, t: float) -> np.ndarray:
    """Joint evolution operator U(t); negative t gives the inverse evolution."""
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    return _propagators(params, np.array([t]))[0]


def _reduce_to_bloch(psi_full: np.ndarray) -> np.ndarray:
    """Bloch vectors of the system qubit from joint amplitudes, shape (M, 4) -> (M, 3)."""
    amps = psi_full.reshape(-1, 2, 2)  # (time, system, reservoir)
    rho = np.einsum("mar,mbr->mab", amps, amps.conj())
    v = np.empty((amps.shape[0], 3))
    v[:, 0] = 2.0 * rho[:, 0, 1].real
    v[:, 1] = -2.0 * rho[:, 0, 1].imag
    v[:, 2] = (rho[:, 0, 0] - rho[:, 1, 1]).real
    return v


def evolve(params: ModelParams, psi0: PureState2, times) -> Trajectory:
    """Reduced-state trajectory of the system qubit under the exact propagator.

    The reservoir starts in |0>; for each time the joint state
    U(t)(psi0 x |0>) is reduced by a partial trace over the reservoir and
    converted to a Bloch vector.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyTimes("times must contain at least one point")
    full0 = np.zeros(4, dtype=complex)
    full0[0] = psi0.a  # |00>
    full0[2] = psi0.b  # |10>
    U = _propagators(params, times)
    psi_t = U @ full0
    return Trajectory(times=times, points=_reduce_to_bloch(psi_t))


def rk4_schrodinger(H: np.ndarray, psi0: np.ndarray, times, dt: float,
                    renormalize: bool = True) -> np.ndarray:
    """Fixed-step RK4 integration of i dpsi/dt = H psi from t = 0.

    Returns the states at the requested ``times`` (strictly increasing, may
    start below zero), shape (len(times), dim).  The state norm is reset to 1
    after each requested output time when ``renormalize`` is set.
    """
    times = np.asarray(times, dtype=float)
    psi = np.asarray(psi0, dtype=complex).copy()
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
        if renormalize:
            psi = psi / np.linalg.norm(psi)
        out[i] = psi
        t_prev = t
    return out


def rk4_evolve(params: ModelParams, psi0: PureState2, times, dt_max: float) -> Trajectory:
    """Runge-Kutta oracle for :func:`evolve`, independent of the closed form.

    Raises
    ------
    StepTooLarge
        If dt_max exceeds 2 pi / (200 sqrt(g^2 + Delta^2)).
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise EmptyTimes("times must contain at least one point")
    if dt_max <= 0.0:
        raise StepTooLarge("dt_max must be positive")
    R = params.rabi_splitting()
    if R > 0.0 and dt_max > 2.0 * math.pi / (200.0 * R):
        raise StepTooLarge(
            f"dt_max = {dt_max!r} exceeds 2*pi/(200*sqrt(g^2+Delta^2)) = "
            f"{2.0 * math.pi / (200.0 * R)!r}")
    # refine further so that the fastest phase (the (Omega+omega)/2 diagonal)
    # is also resolved at >= 200 steps per period
    scale = max(R, 0.5 * abs(params.omega_sys + params.omega_res))
    dt = dt_max
    if scale > 0.0:
        dt = min(dt_max, 2.0 * math.pi / (256.0 * scale))
    H = build_hamiltonian(params)
    full0 = np.zeros(4, dtype=complex)
    full0[0] = psi0.a
    full0[2] = psi0.b
    psi_t = rk4_schrodinger(H, full0, times, dt)
    return Trajectory(times=times, points=_reduce_to_bloch(psi_t))


def rotation_gate(theta: float, phi: float) -> np.ndarray:
    """Resonant-drive rotation R_phi(theta) on a single qubit.

    [[cos(theta/2), -i e^{-i phi} sin(theta/2)],
     [-i e^{i phi} sin(theta/2), cos(theta/2)]]
    """
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    return np.array([
        [c, -1j * np.exp(-1j * phi) * s],
        [-1j * np.exp(1j * phi) * s, c],
    ])


def bloch_from_rho(rho: np.ndarray) -> np.ndarray:
    """Bloch vector v_k = Tr(rho sigma_k) of a 2x2 density matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("rho must be 2x2")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise NonPhysical("rho is not Hermitian within 1e-10")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise NonPhysical("Tr(rho) != 1 within 1e-10")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise NonPhysical("rho has an eigenvalue below -1e-9")
    return np.array([2.0 * rho[0, 1].real, -2.0 * rho[0, 1].imag,
                     (rho[0, 0] - rho[1, 1]).real])


def rho_from_bloch(v) -> np.ndarray:
    """Density matrix (I + v . sigma)/2 for a Bloch vector with |v| <= 1."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("v must be a 3-vector")
    norm = np.linalg.norm(v)
    if norm > 1.0 + 1e-9:
        raise NonPhysical(f"|v| = {norm!r} exceeds 1")
    return 0.5 * np.array([[1.0 + v[2], v[0] - 1j * v[1]],
                           [v[0] + 1j * v[1], 1.0 - v[2]]])


def _check_nondegenerate(params: ModelParams) -> float:
    """Return g^2 + Delta^2, raising if both vanish."""
    s = params.coupling ** 2 + params.detuning() ** 2
    if s == 0.0:
        raise DegenerateCoupling(
            "g = Delta = 0: trace distance is constant 1, no oscillation defined")
    return s


def analytic_D_opt(params: ModelParams, t: float) -> float:
    """Trace distance of the optimal pair {|0>, |1>}:

    D(t) = 1 - g^2 sin^2(t sqrt(g^2+Delta^2)/2) / (g^2+Delta^2).
    """
    s = _check_nondegenerate(params)
    half_freq = 0.5 * math.sqrt(s)
    return 1.0 - params.coupling ** 2 * math.sin(half_freq * t) ** 2 / s


def analytic_D_pair(params: ModelParams, pair: OrthogonalPairSpec, t: float) -> float:
    """Trace distance of an arbitrary orthogonal pair (independent of beta)."""
    s = _check_nondegenerate(params)
    A2 = pair.amplitude_A ** 2
    delta2 = params.detuning() ** 2
    c2 = math.cos(0.5 * math.sqrt(s) * t) ** 2
    core = delta2 + params.coupling ** 2 * c2
    return math.sqrt((1.0 - 2.0 * A2) ** 2 * core ** 2 / s ** 2
                     + 4.0 * A2 * (1.0 - A2) * core / s)


def analytic_chi(params: ModelParams) -> float:
    """Measure per oscillation of the optimal pair: g^2 / (g^2 + Delta^2)."""
    s = _check_nondegenerate(params)
    return params.coupling ** 2 / s


def analytic_chi_pair(params: ModelParams, pair: OrthogonalPairSpec) -> float:
    """Measure per oscillation of an arbitrary orthogonal pair.

    1 - sqrt((1-2A^2)^2 Delta^4/(g^2+Delta^2)^2 + 4A^2(1-A^2) Delta^2/(g^2+Delta^2));
    maximal at A = 0 where it reduces to :func:`analytic_chi`.
    """
    s = _check_nondegenerate(params)
    A2 = pair.amplitude_A ** 2
    delta2 = params.detuning() ** 2
    return 1.0 - math.sqrt((1.0 - 2.0 * A2) ** 2 * delta2 ** 2 / s ** 2
                           + 4.0 * A2 * (1.0 - A2) * delta2 / s)
