"""Coupled-oscillator network that produces rhythmic joint targets.

The network holds one phase oscillator per output channel.  Phases are
diffusively coupled along the chain and driven toward commanded neighbor
phase shifts, while a critically damped second-order filter tracks the
commanded amplitude per channel:

    phi_dot = omega + A @ phi + B @ theta
    r_ddot  = a * (a/4 * (R - r) - r_dot)
    output  = r * sin(phi) + delta

``A`` is the tridiagonal chain Laplacian scaled per row by the coupling
gains ``mu``; ``B`` injects the commanded shifts ``theta`` as signed
differences.  Phases are left unwrapped: only ``sin(phi)`` is observable,
and wrapping would break the linear coupling term.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError, NumericDomainError

# Fixed-step RK4 stays stable for a <= 20 and mu <= 10 below this step.
MAX_STEP = 0.05


@dataclass
class CouplingMatrices:
    """Chain coupling operators: ``A`` (n x n) and ``B`` (n x (n-1))."""

    A: np.ndarray
    B: np.ndarray


def build_coupling_matrices(mu) -> CouplingMatrices:
    """Build the phase-coupling matrices for a chain of ``len(mu)`` channels.

    Row i of ``A`` couples channel i to its chain neighbors with gain
    ``mu[i]`` (row sums are zero).  ``B`` carries +1 on the main diagonal
    and -1 on the first subdiagonal so that ``B @ theta`` applies each
    commanded shift with opposite signs to the two channels it separates.
    """
    mu = np.asarray(mu, dtype=float)
    n = mu.shape[0]
    if n < 2:
        raise InvalidDimensionError(f"need at least 2 channels, got {n}")
    if not np.all(np.isfinite(mu)) or np.any(mu < 0):
        raise NumericDomainError("coupling gains must be finite and >= 0")

    A = np.zeros((n, n))
    A[0, 0] = -mu[0]
    A[0, 1] = mu[0]
    for i in range(1, n - 1):
        A[i, i - 1] = mu[i]
        A[i, i] = -2.0 * mu[i]
        A[i, i + 1] = mu[i]
    A[n - 1, n - 2] = mu[n - 1]
    A[n - 1, n - 1] = -mu[n - 1]

    B = np.zeros((n, n - 1))
    for j in range(n - 1):
        B[j, j] = 1.0
        B[j + 1, j] = -1.0
    return CouplingMatrices(A=A, B=B)


@dataclass
class CpgParams:
    """Inputs of the oscillator network.

    amplitude, frequency and offset are per-channel; phase_shift has one
    entry per neighbor pair.  ``a`` sets the amplitude convergence rate
    (critically damped, time constant ~4/a) and ``mu`` the per-row phase
    coupling gains.
    """

    amplitude: np.ndarray
    frequency: np.ndarray
    phase_shift: np.ndarray
    offset: np.ndarray
    a: float = 10.0
    mu: np.ndarray = None  # defaults to 5.0 per channel
    _coupling: CouplingMatrices = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        self.frequency = np.asarray(self.frequency, dtype=float)
        self.phase_shift = np.asarray(self.phase_shift, dtype=float)
        self.offset = np.asarray(self.offset, dtype=float)
        n = self.amplitude.shape[0]
        if self.mu is None:
            self.mu = np.full(n, 5.0)
        self.mu = np.asarray(self.mu, dtype=float)
        if n < 2:
            raise InvalidDimensionError("CPG needs at least 2 channels")
        if self.frequency.shape != (n,) or self.offset.shape != (n,):
            raise InvalidDimensionError("frequency/offset must have n entries")
        if self.phase_shift.shape != (n - 1,):
            raise InvalidDimensionError("phase_shift must have n-1 entries")
        if self.mu.shape != (n,):
            raise InvalidDimensionError("mu must have n entries")
        if not (self.a > 0):
            raise NumericDomainError("convergence rate a must be > 0")
        if np.any(self.amplitude < 0):
            raise NumericDomainError("amplitudes must be >= 0")
        for arr in (self.amplitude, self.frequency, self.phase_shift, self.offset, self.mu):
            if not np.all(np.isfinite(arr)):
                raise NumericDomainError("CPG parameters must be finite")
        self._coupling = build_coupling_matrices(self.mu)

    @property
    def n(self) -> int:
        return self.amplitude.shape[0]

    @property
    def coupling(self) -> CouplingMatrices:
        return self._coupling


@dataclass
class CpgState:
    """Internal state: phases, amplitudes and amplitude rates."""

    phi: np.ndarray
    r: np.ndarray
    r_dot: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "CpgState":
        return cls(phi=np.zeros(n), r=np.zeros(n), r_dot=np.zeros(n))

    def copy(self) -> "CpgState":
        return CpgState(self.phi.copy(), self.r.copy(), self.r_dot.copy())


def _derivative(phi, r, r_dot, params: CpgParams):
    cm = params.coupling
    phi_dot = params.frequency + cm.A @ phi + cm.B @ params.phase_shift
    r_ddot = params.a * (params.a / 4.0 * (params.amplitude - r) - r_dot)
    return phi_dot, r_dot, r_ddot


def cpg_step(state: CpgState, params: CpgParams, dt: float) -> CpgState:
    """Advance the network by one RK4 step of length ``dt`` seconds."""
    if not (0.0 < dt <= MAX_STEP):
        raise NumericDomainError(f"dt must be in (0, {MAX_STEP}], got {dt}")
    for arr in (state.phi, state.r, state.r_dot):
        if not np.all(np.isfinite(arr)):
            raise NumericDomainError("CPG state is not finite")

    phi, r, rd = state.phi, state.r, state.r_dot
    k1 = _derivative(phi, r, rd, params)
    k2 = _derivative(phi + 0.5 * dt * k1[0], r + 0.5 * dt * k1[1], rd + 0.5 * dt * k1[2], params)
    k3 = _derivative(phi + 0.5 * dt * k2[0], r + 0.5 * dt * k2[1], rd + 0.5 * dt * k2[2], params)
    k4 = _derivative(phi + dt * k3[0], r + dt * k3[1], rd + dt * k3[2], params)

    phi_n = phi + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    r_n = r + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    rd_n = rd + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return CpgState(phi=phi_n, r=r_n, r_dot=rd_n)


def cpg_output(state: CpgState, params: CpgParams) -> np.ndarray:
    """Joint targets ``r * sin(phi) + delta`` in radians."""
    return state.r * np.sin(state.phi) + params.offset


def steady_phase_differences(params: CpgParams) -> np.ndarray:
    """Solve for the converged neighbor phase differences.

    With equal frequencies the phases settle into a common drift where
    ``A @ phi + B @ theta`` equals the same constant on every channel.
    Writing that condition in difference coordinates d_j = phi_j - phi_{j+1}
    gives a dense linear system in (d, c) solved here directly; used as the
    independent oracle for the integrated dynamics.
    """
    n = params.n
    mu = params.mu
    theta = params.phase_shift
    # unknowns: d_0..d_{n-2}, c
    M = np.zeros((n, n))
    rhs = np.zeros(n)
    # row 0: -mu0*d0 - c = -theta0
    M[0, 0] = -mu[0]
    M[0, n - 1] = -1.0
    rhs[0] = -theta[0]
    for i in range(1, n - 1):
        # mu_i*(d_{i-1} - d_i) - c = -(theta_i - theta_{i-1})
        M[i, i - 1] = mu[i]
        M[i, i] = -mu[i]
        M[i, n - 1] = -1.0
        rhs[i] = -(theta[i] - theta[i - 1])
    # row n-1: mu_{n-1}*d_{n-2} - c = theta_{n-2}
    M[n - 1, n - 2] = mu[n - 1]
    M[n - 1, n - 1] = -1.0
    rhs[n - 1] = theta[n - 2]
    sol = np.linalg.solve(M, rhs)
    return sol[: n - 1]
