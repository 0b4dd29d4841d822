"""The renormalized system mode below the continuum.

The pole condition is f(x) = x - ws + ∫ J(w)/(w - x) dw = 0 for x below the
lower support edge.  f is strictly increasing there (f' = 1 + ∫J/(w-x)**2),
so a root exists iff f(lo-) > 0, and it is unique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

from . import spectral
from .errors import BracketError, ConvergenceError, DomainError
from .spectral import QuadratureSpec, SpectralDensity

DEFAULT_TOL = 1e-12


@dataclass(frozen=True)
class BoundState:
    exists: bool
    threshold_margin: float
    omega_b: Optional[float] = None
    residue_Z: Optional[float] = None
    pole_residual: Optional[float] = None
    iterations: int = 0
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {
            "exists": self.exists,
            "omega_b": self.omega_b,
            "Z": self.residue_Z,
            "threshold_margin": self.threshold_margin,
            "residual": self.pole_residual,
            "iterations": self.iterations,
            "notes": list(self.notes),
        }


def threshold_margin(sd: SpectralDensity, omega_s: float, q: QuadratureSpec) -> float:
    """ws - lo - ∫ J(w)/(w - lo) dw; negative iff a bound state exists."""
    return omega_s - sd.lo - spectral.edge_moment(sd, q)


def pole_function(sd: SpectralDensity, omega_s: float, x: float, q: QuadratureSpec) -> float:
    return x - omega_s + spectral.pole_integral(sd, x, q)


def solve_pole(sd: SpectralDensity, omega_s: float, q: QuadratureSpec,
               tol: float = DEFAULT_TOL) -> BoundState:
    """Locate the bound state, if any, and its residue."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    notes = ()
    if sd.interior_gap():
        notes = ("density has an interior gap; in-gap bound states are not searched",)
    margin = threshold_margin(sd, omega_s, q)
    if not margin < 0:
        return BoundState(False, margin, notes=notes)

    lo_edge = sd.lo
    floor = lo_edge - 10.0 * (abs(omega_s) + sd.scale)
    f = lambda x: pole_function(sd, omega_s, x, q)  # noqa: E731

    # step down from the edge until f changes sign; f(lo-) > 0 by construction
    hi = lo_edge
    f_hi = math.inf if math.isinf(margin) else -margin
    step = max(1e-3 * (abs(omega_s) + sd.scale), 1e-300)
    x = lo_edge - step
    f_x = f(x)
    while f_x > 0:
        hi, f_hi = x, f_x
        step *= 2
        if lo_edge - step < floor:
            x = floor
            f_x = f(x)
            if f_x > 0:
                raise BracketError(
                    f"no sign change of the pole function in [{floor:.6g}, {lo_edge:.6g}); "
                    f"f(floor)={f_x:.3g}, margin={margin:.3g}")
            break
        x = lo_edge - step
        f_x = f(x)
    lo, f_lo = x, f_x
    if f_lo == 0:
        return _finish(sd, omega_s, q, lo, 0.0, 0, margin, notes)

    it = 0
    # bisection until the bracket is narrow, then secant polish inside it
    while hi - lo > 1e-3 * max(abs(lo), abs(hi), 1e-300) and it < 200:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        it += 1
        if fm == 0:
            return _finish(sd, omega_s, q, mid, 0.0, it, margin, notes)
        if fm > 0:
            hi, f_hi = mid, fm
        else:
            lo, f_lo = mid, fm
    x0, f0 = lo, f_lo
    x1, f1 = (hi, f_hi) if math.isfinite(f_hi) else (0.5 * (lo + hi), f(0.5 * (lo + hi)))
    best, f_best = (x0, f0) if abs(f0) < abs(f1) else (x1, f1)
    while abs(f_best) > tol and it < 400:
        it += 1
        if f1 != f0:
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        else:
            x2 = 0.5 * (lo + hi)
        if not (lo < x2 < hi):
            x2 = 0.5 * (lo + hi)
        f2 = f(x2)
        if f2 > 0:
            hi = x2
        else:
            lo = x2
        x0, f0, x1, f1 = x1, f1, x2, f2
        if abs(f2) < abs(f_best):
            best, f_best = x2, f2
        if hi - lo <= 4 * 2.2e-16 * max(abs(lo), abs(hi)):
            break
    if abs(f_best) > tol:
        raise ConvergenceError(
            f"pole equation residual {abs(f_best):.3g} above tol={tol:.3g} at x={best:.17g}")
    return _finish(sd, omega_s, q, best, abs(f_best), it, margin, notes)


def _finish(sd, omega_s, q, x, resid, it, margin, notes):
    z = residue(sd, x, q)
    return BoundState(True, margin, omega_b=x, residue_Z=z, pole_residual=resid,
                      iterations=it, notes=notes)


def residue(sd: SpectralDensity, omega_b: float, q: QuadratureSpec) -> float:
    """Z = 1 / (1 + ∫ J(w)/(w - omega_b)**2 dw)."""
    if omega_b >= sd.lo:
        raise DomainError(f"omega_b={omega_b} must lie below the support edge {sd.lo}")
    if sd.is_zero:
        return 1.0
    return 1.0 / (1.0 + spectral.pole_integral_derivative(sd, omega_b, q))
