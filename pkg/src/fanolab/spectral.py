"""Spectral densities J(w) and the frequency-domain integrals built on them.

Two families are supported: the Ohmic family with exponential cutoff,

    J(w) = 2*pi*eta * w * (w/wc)**(s-1) * exp(-w/wc),

and a tabulated density interpolated linearly between samples.  All integrals
run over the *effective* support ``[lo, upper_limit(sd, q)]``, i.e. unbounded
supports are cut at ``q.omega_max``.  The discretized bath uses the same cut,
so continuum and discrete quantities describe the same truncated model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    DomainError,
    EndpointSingularityError,
    InterpolationRangeError,
    ResolutionError,
    TruncationError,
)

ArrayLike = Union[float, np.ndarray]

GL_ORDER = 16
GRADING_LEVELS = 40
_KERNEL_CHUNK = 2_000_000


class Family(str, enum.Enum):
    OHMIC = "ohmic"
    TABULATED = "tabulated"


class Scheme(str, enum.Enum):
    UNIFORM_TRAPEZOID = "uniform_trapezoid"
    GAUSS_LEGENDRE_PANELS = "gauss_legendre_panels"


@dataclass(frozen=True)
class SpectralDensity:
    """Immutable description of J(w).

    Use :meth:`ohmic` or :meth:`tabulated` rather than the raw constructor.
    """

    family: Family
    s_exponent: float = 1.0
    eta: float = 0.0
    omega_c: float = 1.0
    table: Optional[Tuple[Tuple[float, float], ...]] = None
    support: Tuple[float, float] = (0.0, math.inf)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        lo, hi = (float(v) for v in self.support)
        if not (0.0 <= lo < hi):
            raise ValueError(f"support must satisfy 0 <= lo < hi, got {self.support}")
        object.__setattr__(self, "support", (lo, hi))
        if self.family is Family.OHMIC:
            if not self.s_exponent > 0:
                raise ValueError("s_exponent must be > 0")
            if not self.eta >= 0:
                raise ValueError("eta must be >= 0")
            if not self.omega_c > 0:
                raise ValueError("omega_c must be > 0")
        else:
            if not self.table or len(self.table) < 2:
                raise ValueError("tabulated density needs at least two samples")
            w = np.array([p[0] for p in self.table], dtype=float)
            j = np.array([p[1] for p in self.table], dtype=float)
            if np.any(np.diff(w) <= 0):
                raise ValueError("tabulated frequencies must be strictly increasing")
            if w[0] < 0:
                raise ValueError("tabulated frequencies must be >= 0")
            if np.any(j < 0) or not np.all(np.isfinite(j)):
                raise ValueError("tabulated J values must be finite and >= 0")
            if not math.isfinite(hi):
                raise ValueError("tabulated density needs a finite support")

    @classmethod
    def ohmic(cls, eta: float, omega_c: float, s: float = 1.0,
              support: Tuple[float, float] = (0.0, math.inf)) -> "SpectralDensity":
        return cls(Family.OHMIC, s_exponent=float(s), eta=float(eta),
                   omega_c=float(omega_c), support=support)

    @classmethod
    def tabulated(cls, omegas: Sequence[float], values: Sequence[float],
                  support: Optional[Tuple[float, float]] = None) -> "SpectralDensity":
        table = tuple((float(w), float(j)) for w, j in zip(omegas, values))
        if len(table) != len(omegas) or len(omegas) != len(values):
            raise ValueError("omegas and values must have equal length")
        if support is None:
            support = (table[0][0], table[-1][0])
        return cls(Family.TABULATED, table=table, support=support)

    @property
    def lo(self) -> float:
        return self.support[0]

    @property
    def hi(self) -> float:
        return self.support[1]

    @property
    def scale(self) -> float:
        """Characteristic frequency scale (cutoff, or table width)."""
        if self.family is Family.OHMIC:
            return self.omega_c
        return self.table[-1][0] - self.table[0][0]

    def table_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        arr = np.asarray(self.table, dtype=float)
        return arr[:, 0], arr[:, 1]

    @property
    def is_zero(self) -> bool:
        if self.family is Family.OHMIC:
            return self.eta == 0.0
        return all(p[1] == 0.0 for p in self.table)

    def interior_gap(self) -> bool:
        """True when a tabulated J vanishes on an interval between positive values."""
        if self.family is Family.OHMIC:
            return False
        _, j = self.table_arrays()
        pos = np.flatnonzero(j > 0)
        if pos.size < 2:
            return False
        inner = j[pos[0]:pos[-1] + 1]
        return bool(np.any((inner[:-1] == 0) & (inner[1:] == 0)))


@dataclass(frozen=True)
class QuadratureSpec:
    """How frequency integrals are discretized.

    ``omega_max`` cuts unbounded supports; ``None`` means ``10 * omega_c``.
    ``tail_rtol`` is the largest relative contribution the discarded tail
    may make to a pole integral before :class:`TruncationError` is raised.
    """

    scheme: Scheme = Scheme.GAUSS_LEGENDRE_PANELS
    n_points: int = 2048
    omega_max: Optional[float] = None
    tail_rtol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError("n_points must be an integer >= 2")
        object.__setattr__(self, "n_points", int(self.n_points))
        if self.omega_max is not None and not self.omega_max > 0:
            raise ValueError("omega_max must be > 0")
        if not self.tail_rtol > 0:
            raise ValueError("tail_rtol must be > 0")


# ---------------------------------------------------------------------------
# pointwise evaluation

def evaluate(sd: SpectralDensity, omega: ArrayLike) -> ArrayLike:
    """J(omega); zero outside the support."""
    w = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(w)):
        raise ValueError("omega must be finite")
    inside = (w >= sd.lo) & (w <= sd.hi)
    out = np.zeros_like(w)
    if sd.family is Family.OHMIC:
        x = np.where(inside, w, 0.0) / sd.omega_c
        val = 2 * np.pi * sd.eta * sd.omega_c * np.power(x, sd.s_exponent) * np.exp(-x)
        out = np.where(inside, val, 0.0)
    else:
        tw, tj = sd.table_arrays()
        if np.any(inside & ((w < tw[0]) | (w > tw[-1]))):
            raise InterpolationRangeError(
                f"omega inside support {sd.support} but outside table "
                f"range [{tw[0]}, {tw[-1]}]")
        out = np.where(inside, np.interp(w, tw, tj), 0.0)
    if np.ndim(omega) == 0:
        return float(out)
    return out


def derivative(sd: SpectralDensity, omega: np.ndarray) -> np.ndarray:
    """dJ/dw, used for the removable singularity of the subtracted integrand."""
    w = np.asarray(omega, dtype=float)
    if sd.family is Family.OHMIC:
        x = w / sd.omega_c
        s = sd.s_exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            d = 2 * np.pi * sd.eta * np.power(x, s - 1) * (s - x) * np.exp(-x)
        return np.where(np.isfinite(d), d, 0.0)
    tw, tj = sd.table_arrays()
    slopes = np.diff(tj) / np.diff(tw)
    idx = np.clip(np.searchsorted(tw, w, side="right") - 1, 0, len(slopes) - 1)
    return slopes[idx]


# ---------------------------------------------------------------------------
# quadrature

def upper_limit(sd: SpectralDensity, q: QuadratureSpec) -> float:
    """Upper end of the integration domain after truncation."""
    if math.isfinite(sd.hi):
        hi = sd.hi if q.omega_max is None else min(sd.hi, q.omega_max)
    else:
        hi = q.omega_max if q.omega_max is not None else 10.0 * sd.omega_c
    if not hi > sd.lo:
        raise ValueError(f"omega_max={hi} must exceed the lower support edge {sd.lo}")
    return float(hi)


def tail_bound(sd: SpectralDensity, q: QuadratureSpec) -> float:
    """Upper estimate of the discarded weight, the integral of J beyond the cut."""
    hi = upper_limit(sd, q)
    if hi >= sd.hi or sd.is_zero:
        return 0.0
    if sd.family is Family.TABULATED:
        tw, tj = sd.table_arrays()
        m = tw >= hi
        grid = np.concatenate([[hi], tw[m]])
        vals = evaluate(sd, grid)
        return float(np.sum(np.diff(grid) * (vals[1:] + vals[:-1]) / 2))
    s = sd.s_exponent
    x = hi / sd.omega_c
    pref = 2 * np.pi * sd.eta * sd.omega_c ** 2
    if x > s + 1:
        # Gamma(s+1, x) <= x**s e**-x * x / (x - s) for x > s
        return float(pref * x ** s * math.exp(-x) * x / (x - s))
    nodes, weights = _gl_panels(hi, hi + 60 * sd.omega_c, 64)
    return float(np.sum(weights * evaluate(sd, nodes)))


def _gl_panels(a: float, b: float, panels: int,
               order: int = GL_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(a, b, panels + 1)
    return _gl_on_edges(edges, order)


def _gl_on_edges(edges: np.ndarray, order: int = GL_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    nodes = (left + right) / 2 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def nodes(sd: SpectralDensity, q: QuadratureSpec, graded: bool = True
          ) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights on the effective support.

    UniformTrapezoid places ``n_points`` nodes at cell midpoints (the same
    grid the discretized bath uses).  GaussLegendrePanels splits the domain
    into ``n_points // 16`` panels of 16 nodes; with ``graded`` the first
    panel is refined geometrically towards the lower edge so endpoint
    behaviour like w**(s-1) or near-edge poles is resolved.
    """
    lo, hi = sd.lo, upper_limit(sd, q)
    if q.scheme is Scheme.UNIFORM_TRAPEZOID:
        h = (hi - lo) / q.n_points
        w = lo + h * (np.arange(q.n_points) + 0.5)
        return w, np.full(q.n_points, h)
    order = min(GL_ORDER, q.n_points)
    panels = max(1, q.n_points // order)
    edges = np.linspace(lo, hi, panels + 1)
    if sd.family is Family.TABULATED:
        tw, _ = sd.table_arrays()
        edges = np.union1d(edges, tw[(tw > lo) & (tw < hi)])
    if graded:
        first = edges[1] - lo
        fine = lo + first * 2.0 ** -np.arange(GRADING_LEVELS, 0, -1)
        edges = np.union1d(edges, fine)
    return _gl_on_edges(edges, order)


# ---------------------------------------------------------------------------
# integrals

def pole_integral(sd: SpectralDensity, x: ArrayLike, q: QuadratureSpec) -> ArrayLike:
    """Integral of J(w)/(w - x) for a pole ``x`` outside the support."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    lo, hi = sd.lo, upper_limit(sd, q)
    if np.any((xs >= lo) & (xs <= hi)):
        raise DomainError("pole inside the support; use lamb_shift_and_decay")
    if sd.is_zero:
        out = np.zeros_like(xs)
        return float(out[0]) if np.ndim(x) == 0 else out
    w, wt = nodes(sd, q)
    # a nonzero edge value J(lo) makes the integrand log-singular as x -> lo;
    # its contribution J(lo) ln((hi - x)/(lo - x)) is taken in closed form
    j_lo = float(evaluate(sd, lo))
    jw = wt * (evaluate(sd, w) - j_lo)
    out = np.empty_like(xs)
    for i, xi in enumerate(xs):
        out[i] = np.sum(jw / (w - xi))
    if j_lo > 0:
        out += j_lo * np.log((hi - xs) / (lo - xs))
    tail = tail_bound(sd, q)
    if tail > 0:
        worst = tail / np.abs(hi - xs)
        bad = worst > q.tail_rtol * np.maximum(np.abs(out), 1e-300)
        if np.any(bad):
            raise TruncationError(
                f"tail beyond omega_max={hi} contributes up to {worst.max():.3g}, "
                f"above tail_rtol={q.tail_rtol}; raise omega_max")
    return float(out[0]) if np.ndim(x) == 0 else out


def pole_integral_derivative(sd: SpectralDensity, x: float, q: QuadratureSpec) -> float:
    """Integral of J(w)/(w - x)**2, the x-derivative of :func:`pole_integral`."""
    lo, hi = sd.lo, upper_limit(sd, q)
    if lo <= x <= hi:
        raise DomainError("pole inside the support")
    w, wt = nodes(sd, q)
    j_lo = float(evaluate(sd, lo))
    out = float(np.sum(wt * (evaluate(sd, w) - j_lo) / (w - x) ** 2))
    if j_lo > 0:
        out += j_lo * (1.0 / (lo - x) - 1.0 / (hi - x))
    return out


def edge_moment(sd: SpectralDensity, q: QuadratureSpec) -> float:
    """Integral of J(w)/(w - lo); infinite when J(lo) > 0."""
    if sd.is_zero:
        return 0.0
    if evaluate(sd, sd.lo) > 0:
        return math.inf
    w, wt = nodes(sd, q)
    return float(np.sum(wt * evaluate(sd, w) / (w - sd.lo)))


def total_weight(sd: SpectralDensity, q: QuadratureSpec) -> float:
    """Integral of J over the effective support."""
    w, wt = nodes(sd, q)
    return float(np.sum(wt * evaluate(sd, w)))


def lamb_shift_and_decay(sd: SpectralDensity, omega: ArrayLike, q: QuadratureSpec
                         ) -> Tuple[ArrayLike, ArrayLike]:
    """Level shift P∫J(w')/(w - w') dw' and rate pi*J(w).

    Inside the support the principal value is taken by subtracting J(w),
    which leaves a regular integrand plus J(w)*ln|(w - lo)/(hi - w)|.
    Outside it is an ordinary integral and the rate is zero.
    """
    ws = np.atleast_1d(np.asarray(omega, dtype=float))
    lo, hi = sd.lo, upper_limit(sd, q)
    if np.any((ws == lo) | (ws == hi)):
        raise EndpointSingularityError("level shift is singular at a support endpoint")
    delta = np.zeros_like(ws)
    gamma = np.zeros_like(ws)
    if not sd.is_zero:
        nw, nwt = nodes(sd, q)
        jn = evaluate(sd, nw)
        inside = (ws > lo) & (ws < hi)
        j0 = np.zeros_like(ws)
        j0[inside] = evaluate(sd, ws[inside])
        dj0 = np.zeros_like(ws)
        dj0[inside] = derivative(sd, ws[inside])
        tiny = 1e-13 * (hi - lo)
        rows = max(1, _KERNEL_CHUNK // nw.size)
        for start in range(0, ws.size, rows):
            sl = slice(start, start + rows)
            wi = ws[sl, None]
            diff = wi - nw[None, :]
            ins = inside[sl, None]
            close = np.abs(diff) < tiny
            safe = np.where(close, 1.0, diff)
            num = np.where(ins, jn[None, :] - j0[sl, None], jn[None, :])
            integrand = np.where(close, -dj0[sl, None], num / safe)
            delta[sl] = integrand @ nwt
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs((ws - lo) / (hi - ws)))
        delta = delta + np.where(inside, j0 * np.where(inside, logs, 0.0), 0.0)
        gamma = np.pi * j0
    if np.ndim(omega) == 0:
        return float(delta[0]), float(gamma[0])
    return delta, gamma


def kernel_time_limit(sd: SpectralDensity, q: QuadratureSpec) -> float:
    """Largest t for which the quadrature resolves exp(-i w t)."""
    return q.n_points * np.pi / (upper_limit(sd, q) - sd.lo)


def memory_kernel(sd: SpectralDensity, t: ArrayLike, q: QuadratureSpec) -> ArrayLike:
    """g(t) = ∫ J(w) exp(-i w t) dw, for scalar or array ``t >= 0``."""
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValueError("t must be >= 0")
    t_max = kernel_time_limit(sd, q)
    if ts.size and ts.max() > t_max:
        raise ResolutionError(
            f"t={ts.max():.6g} exceeds the quadrature resolution limit {t_max:.6g}; "
            "increase n_points or lower omega_max")
    out = np.zeros(ts.shape, dtype=complex)
    if not sd.is_zero:
        w, wt = nodes(sd, q)
        jw = wt * evaluate(sd, w)
        rows = max(1, _KERNEL_CHUNK // w.size)
        for start in range(0, ts.size, rows):
            sl = slice(start, start + rows)
            phase = np.outer(ts[sl], w)
            out[sl] = np.cos(phase) @ jw - 1j * (np.sin(phase) @ jw)
    if np.ndim(t) == 0:
        return complex(out[0])
    return out
