"""Number-conserving versus position-position system-bath coupling.

Both models share the free part ws a^dag a + sum_k w_k b_k^dag b_k and use
couplings c_k = scale * V_k:

* RotatingWave:      sum_k c_k (a^dag b_k + b_k^dag a)
* PositionPosition:  sum_k c_k (a^dag b_k + a b_k^dag + a^dag b_k^dag + a b_k)
                     = sum_k 2 c_k x q_k  with x = (a + a^dag)/sqrt(2).

In the Nambu basis (a, a^dag) the Heisenberg equations read
i d/dt (a, a^dag) = D (a, a^dag) with D = [[A, B], [-B, -A]].  The model is
dynamically stable iff D has a real spectrum.  For PositionPosition this is
equivalent to the frequency-squared matrix W^1/2 K W^1/2 being positive
semidefinite, where H = p.W.p/2 + x.K.x/2.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .discrete import DiscretizedBath, arrowhead
from .errors import ConvergenceError

WIDTH_RTOL = 1e-9
REFINE_RTOL = 1e-6


class CouplingForm(str, enum.Enum):
    ROTATING_WAVE = "rotating_wave"
    POSITION_POSITION = "position_position"


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    coupling_form: CouplingForm
    omega_s: float
    bath: DiscretizedBath
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coupling_form", CouplingForm(self.coupling_form))
        if not self.scale >= 0:
            raise ValueError("scale must be >= 0")

    @property
    def couplings(self) -> np.ndarray:
        return self.scale * self.bath.couplings

    @property
    def frequencies(self) -> np.ndarray:
        return np.concatenate([[self.omega_s], self.bath.omegas])

    def with_scale(self, scale: float) -> "QuadraticModel":
        return replace(self, scale=float(scale))

    def hopping(self) -> np.ndarray:
        """A: number-conserving block (the arrowhead matrix)."""
        return arrowhead(self.omega_s, DiscretizedBath(self.bath.omegas, self.couplings)).dense()

    def pairing(self) -> np.ndarray:
        """B: anomalous block, nonzero only for PositionPosition."""
        n = self.bath.omegas.size + 1
        b = np.zeros((n, n))
        if self.coupling_form is CouplingForm.POSITION_POSITION:
            b[0, 1:] = self.couplings
            b[1:, 0] = self.couplings
        return b

    def dynamical_matrix(self) -> np.ndarray:
        a, b = self.hopping(), self.pairing()
        return np.block([[a, b], [-b, -a]])

    def frequency_squared(self) -> np.ndarray:
        """W^1/2 K W^1/2 for the position-position form."""
        w = self.frequencies
        if np.any(w <= 0):
            raise ValueError("position-position analysis needs positive mode frequencies")
        k = np.diag(w)
        k[0, 1:] = k[1:, 0] = 2 * self.couplings
        r = np.sqrt(w)
        return r[:, None] * k * r[None, :]

    def width(self) -> float:
        w = self.frequencies
        return float(w.max() - min(w.min(), 0.0) + 2 * np.linalg.norm(self.couplings))


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    min_normal_frequency_sq: float
    max_imag_rate: float


def number_commutator_norm(model: QuadraticModel) -> float:
    """Frobenius norm of [D, diag(1, -1)], zero iff the generator conserves N_tot."""
    d = model.dynamical_matrix()
    n = d.shape[0] // 2
    sz = np.concatenate([np.ones(n), -np.ones(n)])
    comm = d * sz[None, :] - sz[:, None] * d
    return float(np.linalg.norm(comm))


def dynamical_eigenvalues(model: QuadraticModel) -> np.ndarray:
    if model.coupling_form is CouplingForm.ROTATING_WAVE:
        lam = np.linalg.eigvalsh(model.hopping())
        return np.concatenate([lam, -lam]).astype(complex)
    try:
        return np.linalg.eigvals(model.dynamical_matrix())
    except np.linalg.LinAlgError as exc:
        d = model.dynamical_matrix()
        raise ConvergenceError(
            f"dynamical eigenvalues did not converge (cond={np.linalg.cond(d):.3g})") from exc


def min_frequency_squared(model: QuadraticModel) -> float:
    if model.coupling_form is CouplingForm.ROTATING_WAVE:
        lam = float(np.linalg.eigvalsh(model.hopping())[0])
        return lam * abs(lam)
    try:
        return float(np.linalg.eigvalsh(model.frequency_squared())[0])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("frequency-squared eigenvalues did not converge") from exc


def analyze(model: QuadraticModel, tol: Optional[float] = None) -> StabilityVerdict:
    """Dynamical stability of ``model``.

    For PositionPosition the verdict comes from the frequency-squared matrix
    and the imaginary rate from the dynamical matrix, as an independent
    cross-check.  RotatingWave is always dynamically stable; its
    ``min_normal_frequency_sq`` is lam_min*|lam_min|, which turns negative
    when the bound mode drops below zero.
    """
    if tol is None:
        tol = WIDTH_RTOL * model.width()
    if not tol > 0:
        raise ValueError("tol must be > 0")
    w2 = min_frequency_squared(model)
    ev = dynamical_eigenvalues(model)
    rate = float(np.max(np.abs(ev.imag))) if ev.size else 0.0
    if model.coupling_form is CouplingForm.ROTATING_WAVE:
        return StabilityVerdict(True, w2, rate)
    return StabilityVerdict(bool(w2 >= -tol), w2, rate)


@dataclass(frozen=True)
class ScanResult:
    points: List[Tuple[float, StabilityVerdict]]
    bracket: Optional[Tuple[float, float]]
    critical_scale: Optional[float]

    @property
    def transition_found(self) -> bool:
        return self.bracket is not None

    @property
    def message(self) -> str:
        if self.bracket is None:
            return "no transition found"
        return f"unstable above scale {self.critical_scale:.10g}"


def critical_scan(template: QuadraticModel, scale_grid, tol: Optional[float] = None,
                  jobs: int = 1) -> ScanResult:
    """Verdicts over ``scale_grid`` and the bisection-refined first instability."""
    grid = np.asarray(scale_grid, dtype=float)
    if grid.ndim != 1 or np.any(np.diff(grid) < 0):
        raise ValueError("scale_grid must be ascending")
    models = [template.with_scale(s) for s in grid]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(lambda m: analyze(m, tol), models))
    else:
        verdicts = [analyze(m, tol) for m in models]
    points = list(zip(grid.tolist(), verdicts))
    for i in range(1, len(points)):
        if points[i - 1][1].stable and not points[i][1].stable:
            lo, hi = points[i - 1][0], points[i][0]
            return ScanResult(points, (lo, hi), _refine(template, lo, hi, tol))
    return ScanResult(points, None, None)


def _refine(template: QuadraticModel, lo: float, hi: float, tol: Optional[float]) -> float:
    bracket_hi = hi
    while hi - lo > REFINE_RTOL * bracket_hi * 0.1:
        mid = 0.5 * (lo + hi)
        m = template.with_scale(mid)
        t = WIDTH_RTOL * m.width() if tol is None else tol
        if min_frequency_squared(m) >= -t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def schur_critical_scale(omega_s: float, bath: DiscretizedBath) -> float:
    """Closed-form position-position threshold.

    K is positive definite iff ws - sum_k (2 c_k)**2 / w_k > 0, giving
    scale* = sqrt(ws / (4 sum_k V_k**2 / w_k)).
    """
    s = np.sum(bath.couplings ** 2 / bath.omegas)
    return float(np.sqrt(omega_s / (4 * s))) if s > 0 else np.inf
