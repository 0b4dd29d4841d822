"""Survival amplitude, steady state, conservation audit and sector energies.

Two engines compute u(t) = <a(t) a^dag(0)> for the state a^dag|0, {0_k}>:

* ``evolve_eigen`` sums sum_j |<a|mode_j>|**2 exp(-i lam_j t) over the normal
  modes of the finite bath (exact for that model).
* ``evolve_volterra`` integrates du/dt = -i ws u - ∫_0^t g(t - s) u(s) ds with
  the memory kernel g computed on a chosen frequency quadrature.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import spectral
from .boundstate import BoundState
from .discrete import DiscretizedBath, SingleParticleSpectrum
from .errors import ConsistencyError, StabilityError
from .spectral import QuadratureSpec, SpectralDensity

_CHUNK = 4_000_000


class Engine(str, enum.Enum):
    EIGEN_EXPANSION = "eigen_expansion"
    VOLTERRA_KERNEL = "volterra_kernel"


@dataclass(frozen=True, eq=False)
class PropagatorTrace:
    times: np.ndarray
    amplitudes: np.ndarray
    engine: Engine
    recurrence_time: Optional[float] = None
    beyond_recurrence: bool = False

    @property
    def abs_u(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    def window_average(self, t1: float, t2: float) -> float:
        """Mean of |u| over samples with t1 <= t <= t2."""
        m = (self.times >= t1) & (self.times <= t2)
        if not np.any(m):
            raise ValueError(f"no samples in [{t1}, {t2}]")
        return float(np.mean(self.abs_u[m]))


@dataclass(frozen=True, eq=False)
class ConservationReport:
    times: np.ndarray
    particle_number: np.ndarray
    total_energy: np.ndarray
    max_drift_N: float
    max_drift_E: float
    omega_s: float


@dataclass(frozen=True, eq=False)
class SteadyStateVector:
    """The long-time state on a discrete bath at time ``t``.

    ``bound_amplitude`` multiplies the unnormalized bound mode
    (a^dag + sum_k V_k/(wb - w_k) b_k^dag), whose bath profile is
    ``bound_profile``; ``continuum_amplitudes`` are the b_k^dag coefficients
    V_k exp(-i w_k t) / (w_k - ws - Delta(w_k) + i gamma(w_k)).
    """

    t: float
    bound_amplitude: Optional[complex]
    bound_profile: Optional[np.ndarray]
    continuum_amplitudes: np.ndarray
    omegas: np.ndarray
    norm: float

    def vector(self) -> np.ndarray:
        """Site-basis amplitudes (a, b_1, ..., b_N)."""
        out = np.zeros(self.omegas.size + 1, dtype=complex)
        out[1:] = self.continuum_amplitudes
        if self.bound_amplitude is not None:
            out[0] += self.bound_amplitude
            out[1:] += self.bound_amplitude * self.bound_profile
        return out


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).ravel()
    if t.size == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly ascending and start at 0")
    return t


def recurrence_time(bath_omegas: np.ndarray) -> float:
    if bath_omegas.size < 2:
        return np.inf
    return float(2 * np.pi / np.median(np.diff(bath_omegas)))


def evolve_eigen(spec: SingleParticleSpectrum, times) -> PropagatorTrace:
    """u(t) = sum_j w_j exp(-i lam_j t) with w_j the system weights."""
    t = _check_times(times)
    lam, w = spec.eigenvalues, spec.system_weights
    u = np.empty(t.size, dtype=complex)
    rows = max(1, _CHUNK // lam.size)
    for start in range(0, t.size, rows):
        sl = slice(start, start + rows)
        ph = np.outer(t[sl], lam)
        u[sl] = np.cos(ph) @ w - 1j * (np.sin(ph) @ w)
    t_rec = recurrence_time(spec.bath_omegas)
    beyond = bool(t[-1] >= t_rec)
    if beyond:
        warnings.warn(f"trace extends to t={t[-1]:.4g}, past the recurrence time "
                      f"{t_rec:.4g} of the finite bath", RuntimeWarning, stacklevel=2)
    return PropagatorTrace(t, u, Engine.EIGEN_EXPANSION, t_rec, beyond)


def evolve_volterra(sd: SpectralDensity, omega_s: float, q: QuadratureSpec,
                    dt: float, t_max: float) -> PropagatorTrace:
    """Implicit trapezoidal integration of the memory equation.

    The convolution uses the trapezoidal rule on the same grid; because the
    equation is linear the corrector is solved in closed form each step.
    Cost is O(M**2) for M steps with the full history kept.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    steps = int(round(t_max / dt))
    if steps < 1:
        raise ValueError("t_max must be at least one step")
    times = dt * np.arange(steps + 1)
    g = spectral.memory_kernel(sd, times, q)
    u = np.zeros(steps + 1, dtype=complex)
    u[0] = 1.0
    kappa = 1j * omega_s + 0.5 * dt * g[0]
    denom = 1.0 + 0.5 * dt * kappa
    rate = -1j * omega_s * u[0]  # R_0; the memory integral vanishes at t = 0
    grev = g[::-1].copy()
    for n in range(steps):
        # H_{n+1} = dt [g_{n+1} u_0 / 2 + sum_{m=1}^{n} g_{n+1-m} u_m]
        hist = 0.5 * g[n + 1] * u[0]
        if n > 0:
            hist += grev[steps - n: steps] @ u[1:n + 1]
        hist *= dt
        u[n + 1] = (u[n] + 0.5 * dt * (rate - hist)) / denom
        rate = -hist - kappa * u[n + 1]
        if abs(u[n + 1]) > 1.05:
            raise StabilityError(
                f"|u| = {abs(u[n + 1]):.3g} at t = {times[n + 1]:.4g}; reduce dt")
    return PropagatorTrace(times, u, Engine.VOLTERRA_KERNEL)


def richardson(coarse: PropagatorTrace, fine: PropagatorTrace) -> PropagatorTrace:
    """Combine second-order traces at dt and dt/2 into (4 u_fine - u_coarse) / 3."""
    if fine.times.size != 2 * coarse.times.size - 1 or not np.allclose(
            fine.times[::2], coarse.times, rtol=0, atol=1e-12 * coarse.times[-1]):
        raise ValueError("fine trace must use exactly half the coarse step")
    u = (4 * fine.amplitudes[::2] - coarse.amplitudes) / 3
    return PropagatorTrace(coarse.times, u, coarse.engine)


def evolved_state(spec: SingleParticleSpectrum, times) -> np.ndarray:
    """Site-basis wavefunctions at ``times`` (columns), starting from a^dag|0>.

    Requires eigenvectors.
    """
    x = spec.eigenvectors
    if x is None:
        raise ValueError("spectrum was computed without eigenvectors")
    t = np.atleast_1d(np.asarray(times, dtype=float))
    c0 = x[0]
    ph = np.outer(spec.eigenvalues, t)
    re = x @ (c0[:, None] * np.cos(ph))
    im = x @ (c0[:, None] * np.sin(ph))
    return re - 1j * im


def conservation_audit(spec: SingleParticleSpectrum, omega_s: float, times,
                       chunk: int = 64) -> ConservationReport:
    """N_tot(t) and E_tot(t) of the evolved single excitation."""
    t = np.asarray(times, dtype=float).ravel()
    n_tot = np.empty(t.size)
    e_tot = np.empty(t.size)
    m = spec.matrix
    for start in range(0, t.size, chunk):
        sl = slice(start, start + chunk)
        psi = evolved_state(spec, t[sl])
        hpsi = m.matvec(psi.real) + 1j * m.matvec(psi.imag)
        n_tot[sl] = np.sum(np.abs(psi) ** 2, axis=0)
        e_tot[sl] = np.real(np.sum(np.conj(psi) * hpsi, axis=0))
    return ConservationReport(
        t, n_tot, e_tot,
        float(np.max(np.abs(n_tot - 1.0))) if t.size else 0.0,
        float(np.max(np.abs(e_tot - omega_s))) if t.size else 0.0,
        float(omega_s),
    )


def steady_state(bs: BoundState, sd: SpectralDensity, bath: DiscretizedBath,
                 omega_s: float, t: float,
                 q: Optional[QuadratureSpec] = None) -> SteadyStateVector:
    """Long-time state on the discrete bath, built from the continuum solution.

    ``q`` controls the level-shift integrals and defaults to the bath's own
    quadrature.
    """
    if bath.source is None or bath.source != sd:
        raise ConsistencyError("bath was not discretized from this spectral density")
    q = q or bath.quadrature
    w, v = bath.omegas, bath.couplings
    if np.all(v == 0):
        amp = complex(np.exp(-1j * omega_s * t))
        return SteadyStateVector(t, amp, np.zeros_like(w), np.zeros(w.size, complex), w, 1.0)
    delta, gamma = spectral.lamb_shift_and_decay(sd, w, q)
    cont = v * np.exp(-1j * w * t) / (w - omega_s - delta + 1j * gamma)
    bound_amp = profile = None
    if bs.exists:
        bound_amp = complex(bs.residue_Z * np.exp(-1j * bs.omega_b * t))
        profile = v / (bs.omega_b - w)
    state = SteadyStateVector(t, bound_amp, profile, cont, w, 0.0)
    norm = float(np.linalg.norm(state.vector()))
    return SteadyStateVector(t, bound_amp, profile, cont, w, norm)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>| / (|a| |b|)."""
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


@dataclass(frozen=True, eq=False)
class SectorEnergies:
    n: np.ndarray
    energies: np.ndarray
    lambda_min: float
    bounded_overall: bool

    @property
    def classification(self) -> str:
        return "bounded_overall" if self.bounded_overall else "unbounded_overall"

    def pairs(self):
        return list(zip(self.n.tolist(), self.energies.tolist()))


def sector_ground_energies(spec: SingleParticleSpectrum, n_max: int) -> SectorEnergies:
    """Lowest energy with n bosons: n * lam_min, by free-boson additivity."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    lam = spec.lambda_min
    n = np.arange(n_max + 1)
    return SectorEnergies(n, n * lam, lam, lam >= 0)


def initial_state_energy(omega_s: float, n: int) -> float:
    """Energy of (a^dag)^n |0, {0_k}>, which is n * ws."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return n * omega_s
