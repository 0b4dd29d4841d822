"""Finite baths, the single-particle arrowhead matrix, and its diagonalization.

In the one-excitation sector the total Hamiltonian is the arrowhead matrix

    [[ws, V_1, ..., V_N],
     [V_1, w_1,        ],
     [ ...,      ...    ],
     [V_N,          w_N]]

whose eigenvalues are the roots of the secular function

    F(lam) = lam - ws - sum_k V_k**2 / (lam - w_k).

F is increasing between consecutive poles, so with all V_k > 0 there is
exactly one root below w_1, one in every gap (w_k, w_{k+1}) and one above
w_N.  Each root is found in coordinates shifted to its nearest pole, which
keeps lam - w_k accurate to full relative precision; the border is then
recomputed from the computed roots (Loewner formula) so that the closed-form
eigenvectors are orthogonal to working precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import spectral
from .errors import ConvergenceError, ResolutionError
from .spectral import Family, QuadratureSpec, Scheme, SpectralDensity

EPS = np.finfo(float).eps
COLLISION_RTOL = 1e-10
MAX_ITER = 80
_CHUNK = 1_000_000


@dataclass(frozen=True, eq=False)
class DiscretizedBath:
    """Sampled bath: frequencies ``omegas``, couplings ``couplings`` >= 0.

    ``weights`` are the quadrature weights the couplings were derived from
    (V_k**2 = J(w_k) * weights[k]); ``source`` and ``quadrature`` record the
    density and rule used, and are ``None`` for hand-built baths.
    """

    omegas: np.ndarray
    couplings: np.ndarray
    weights: Optional[np.ndarray] = None
    source: Optional[SpectralDensity] = None
    quadrature: Optional[QuadratureSpec] = None

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float).ravel()
        v = np.array(self.couplings, dtype=float).ravel()
        if w.shape != v.shape:
            raise ValueError("omegas and couplings must have equal length")
        if np.any(np.diff(w) <= 0):
            raise ValueError("bath frequencies must be strictly increasing (no degeneracies)")
        if np.any(v < 0) or not np.all(np.isfinite(v)) or not np.all(np.isfinite(w)):
            raise ValueError("couplings must be finite and >= 0")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "couplings", v)
        if self.weights is not None:
            wt = np.array(self.weights, dtype=float).ravel()
            if wt.shape != w.shape:
                raise ValueError("weights must match omegas in length")
            wt.setflags(write=False)
            object.__setattr__(self, "weights", wt)

    def __len__(self):
        return self.omegas.size

    @property
    def spacing(self) -> float:
        """Median level spacing (inf for fewer than two modes)."""
        if self.omegas.size < 2:
            return np.inf
        return float(np.median(np.diff(self.omegas)))

    def scaled(self, factor: float) -> "DiscretizedBath":
        return DiscretizedBath(self.omegas, factor * self.couplings, self.weights,
                               self.source, self.quadrature)


def discretize(sd: SpectralDensity, q: QuadratureSpec) -> DiscretizedBath:
    """Sample ``sd`` on the nodes of ``q`` with V_k = sqrt(J(w_k) dw_k)."""
    omegas, weights = spectral.nodes(sd, q, graded=False)
    if q.scheme is Scheme.UNIFORM_TRAPEZOID and sd.family is Family.OHMIC:
        if weights[0] > sd.omega_c:
            raise ResolutionError(
                f"cell width {weights[0]:.4g} exceeds the cutoff {sd.omega_c:.4g}; "
                "increase n_points")
    couplings = np.sqrt(spectral.evaluate(sd, omegas) * weights)
    return DiscretizedBath(omegas, couplings, weights, sd, q)


@dataclass(frozen=True, eq=False)
class ArrowheadMatrix:
    """Symmetric arrowhead with corner ``omega_s``, diagonal ``omegas``, border ``couplings``."""

    omega_s: float
    omegas: np.ndarray
    couplings: np.ndarray

    @property
    def size(self) -> int:
        return self.omegas.size + 1

    def dense(self) -> np.ndarray:
        n = self.size
        m = np.zeros((n, n))
        m[0, 0] = self.omega_s
        m[np.arange(1, n), np.arange(1, n)] = self.omegas
        m[0, 1:] = self.couplings
        m[1:, 0] = self.couplings
        return m

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """Product with a vector, or with each column of a 2-D array."""
        x = np.asarray(x)
        y = np.empty_like(x)
        y[0] = self.omega_s * x[0] + self.couplings @ x[1:]
        if x.ndim == 1:
            y[1:] = self.omegas * x[1:] + self.couplings * x[0]
        else:
            y[1:] = self.omegas[:, None] * x[1:] + self.couplings[:, None] * x[0][None, :]
        return y

    def width_bound(self) -> float:
        """Upper bound on the spread of the spectrum."""
        d = np.append(self.omegas, self.omega_s)
        return float(d.max() - d.min() + 2 * np.linalg.norm(self.couplings))


def arrowhead(omega_s: float, bath: DiscretizedBath) -> ArrowheadMatrix:
    return ArrowheadMatrix(float(omega_s), bath.omegas, bath.couplings)


@dataclass(frozen=True, eq=False)
class SingleParticleSpectrum:
    """Normal modes of the one-excitation problem.

    Column ``j`` of ``eigenvectors`` is mode ``j`` in the basis
    (a, b_1, ..., b_N) with its system component made non-negative.
    ``eigenvectors`` is ``None`` when only eigenvalues were requested.
    """

    eigenvalues: np.ndarray
    system_weights: np.ndarray
    eigenvectors: Optional[np.ndarray]
    matrix: ArrowheadMatrix
    method: str

    @property
    def omega_s(self) -> float:
        return self.matrix.omega_s

    @property
    def bath_omegas(self) -> np.ndarray:
        return self.matrix.omegas

    @property
    def width(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])


def secular_function(m: ArrowheadMatrix, lam) -> np.ndarray:
    """F(lam) = lam - ws - sum V_k**2/(lam - w_k), vectorized over ``lam``."""
    lam = np.asarray(lam, dtype=float)
    terms = m.couplings[None, :] ** 2 / (lam.reshape(-1, 1) - m.omegas[None, :])
    out = lam.ravel() - m.omega_s - terms.sum(axis=1)
    return out.reshape(lam.shape)


def needs_dense(m: ArrowheadMatrix) -> bool:
    """True when the closed-form secular path is unreliable."""
    if m.omegas.size == 0:
        return False
    if np.any(m.couplings == 0):
        return True
    if m.omegas.size > 1:
        width = m.width_bound()
        if np.min(np.diff(m.omegas)) < COLLISION_RTOL * width:
            return True
    return False


def diagonalize(m: ArrowheadMatrix, vectors: bool = True,
                method: str = "auto") -> SingleParticleSpectrum:
    """Eigen-decomposition of the arrowhead matrix.

    ``method`` is ``"auto"`` (secular path unless a coupling vanishes or two
    poles nearly collide), ``"secular"`` or ``"dense"``.
    """
    if method not in ("auto", "secular", "dense"):
        raise ValueError(f"unknown method {method!r}")
    if method == "dense" or (method == "auto" and needs_dense(m)):
        return _dense(m, vectors)
    if method == "secular" and needs_dense(m):
        raise ValueError("secular path needs nonzero couplings and separated poles")
    n = m.omegas.size
    if n == 0:
        return SingleParticleSpectrum(np.array([m.omega_s]), np.ones(1),
                                      np.ones((1, 1)) if vectors else None, m, "secular")
    origin, tau = _secular_roots(m)
    lam = m.omegas[origin] + tau
    zhat = _loewner_border(m.omegas, origin, tau)
    weights = np.empty(n + 1)
    vecs = np.empty((n + 1, n + 1)) if vectors else None
    cols = max(1, _CHUNK // n)
    for start in range(0, n + 1, cols):
        sl = slice(start, start + cols)
        # lam_j - w_k, accurate relative to its own size
        gap = -((m.omegas[:, None] - m.omegas[None, origin[sl]]) - tau[None, sl])
        comp = zhat[:, None] / gap
        norm2 = 1.0 + np.sum(comp ** 2, axis=0)
        weights[sl] = 1.0 / norm2
        if vectors:
            inv = 1.0 / np.sqrt(norm2)
            vecs[0, sl] = inv
            vecs[1:, sl] = comp * inv[None, :]
    return SingleParticleSpectrum(lam, weights, vecs, m, "secular")


def _dense(m: ArrowheadMatrix, vectors: bool) -> SingleParticleSpectrum:
    vals, vecs = np.linalg.eigh(m.dense())
    vecs = _fix_signs(vecs)
    weights = vecs[0] ** 2
    return SingleParticleSpectrum(vals, weights, vecs if vectors else None, m, "dense")


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-300)
        pivot = 0 if abs(col[0]) > 0 else (nz[0] if nz.size else 0)
        if col[pivot] < 0:
            vecs[:, j] = -col
    return vecs


def _secular_roots(m: ArrowheadMatrix):
    """All N+1 roots as (origin pole index, offset from that pole)."""
    d, z, alpha = m.omegas, m.couplings, m.omega_s
    n = d.size
    z2 = z ** 2
    znorm = float(np.linalg.norm(z))
    width = m.width_bound()

    # interval j lies between poles j-1 and j (exterior for j = 0 and j = n)
    origin = np.empty(n + 1, dtype=int)
    lo = np.empty(n + 1)
    hi = np.empty(n + 1)
    origin[0] = 0
    lo[0] = min(alpha, d[0]) - znorm - d[0] - EPS * width
    hi[0] = 0.0
    origin[n] = n - 1
    lo[n] = 0.0
    hi[n] = max(alpha, d[-1]) + znorm - d[-1] + EPS * width
    if n > 1:
        mid = 0.5 * (d[:-1] + d[1:])
        fmid = secular_function(m, mid)
        left = fmid >= 0
        j = np.arange(1, n)
        origin[1:n] = np.where(left, j - 1, j)
        half = 0.5 * (d[1:] - d[:-1])
        lo[1:n] = np.where(left, 0.0, -half)
        hi[1:n] = np.where(left, half, 0.0)

    tau = np.empty(n + 1)
    rows = max(1, _CHUNK // n)
    for start in range(0, n + 1, rows):
        idx = np.arange(start, min(start + rows, n + 1))
        tau[idx] = _solve_chunk(d, z2, alpha, idx, origin[idx], lo[idx], hi[idx], width)
    return origin, tau


def _solve_chunk(d, z2, alpha, idx, origin, lo, hi, width):
    n = d.size
    k = np.arange(n)
    shift = d[None, :] - d[origin][:, None]  # pole positions relative to origin
    left_mask = k[None, :] < idx[:, None]
    base = d[origin] - alpha
    # pole coordinates bounding each interval, relative to the origin
    a_left = np.where(idx > 0, d[np.maximum(idx - 1, 0)] - d[origin], -np.inf)
    a_right = np.where(idx < n, d[np.minimum(idx, n - 1)] - d[origin], np.inf)
    inner = (idx > 0) & (idx < n)

    tau = np.where(np.isfinite(lo) & np.isfinite(hi), 0.5 * (lo + hi), 0.0)
    tau = np.where(idx == 0, 0.5 * lo, tau)
    tau = np.where(idx == n, 0.5 * hi, tau)
    active = np.ones(idx.size, dtype=bool)
    for _ in range(MAX_ITER):
        a = np.flatnonzero(active)
        if a.size == 0:
            break
        t = tau[a]
        delta = shift[a] - t[:, None]  # d_k - lam
        terms = z2[None, :] / delta
        dterms = terms / delta
        lm = left_mask[a]
        psi = np.where(lm, terms, 0.0).sum(axis=1)
        phi = np.where(lm, 0.0, terms).sum(axis=1)
        dpsi = np.where(lm, dterms, 0.0).sum(axis=1)
        dphi = np.where(lm, 0.0, dterms).sum(axis=1)
        f = base[a] + t + psi + phi
        scale = np.abs(base[a]) + np.abs(t) + np.abs(terms).sum(axis=1)

        hit = f == 0
        pos = f > 0
        hi[a] = np.where(pos | hit, t, hi[a])
        lo[a] = np.where(~pos | hit, t, lo[a])

        done = (np.abs(f) <= 4 * EPS * scale) | hit
        tight = (hi[a] - lo[a]) <= 2 * EPS * np.maximum(np.abs(lo[a]), np.abs(hi[a]))
        done |= tight
        if np.all(done):
            active[a] = False
            break

        eta = _model_step(t, f, dpsi, dphi, a_left[a], a_right[a], base[a], psi, phi,
                          inner[a], idx[a] == 0)
        new = t + eta
        ok = np.isfinite(new) & (new > lo[a]) & (new < hi[a])
        bis = 0.5 * (lo[a] + hi[a])
        new = np.where(ok, new, bis)
        small = np.abs(new - t) <= EPS * np.abs(t)
        tau[a] = np.where(done, t, new)
        active[a[done]] = False
        active[a[small & ~done]] = False

    for i in np.flatnonzero(active):
        if hi[i] - lo[i] > 1e-12 * width:
            raise ConvergenceError(
                f"secular root in interval {idx[i]} did not converge "
                f"(bracket width {hi[i] - lo[i]:.3g})")
    return tau


def _model_step(t, f, dpsi, dphi, a_left, a_right, base, psi, phi, inner, lower):
    """Correction from a two-pole rational model matching F and F' at ``t``."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        dl = a_left - t
        dr = a_right - t
        # inner interval: F ~ c + P/(a_l - x) + Q/(a_r - x), linear term lumped into Q
        p = dpsi * dl ** 2
        qq = (dphi + 1.0) * dr ** 2
        c = f - p / dl - qq / dr
        qa = c
        qb = -(c * (dl + dr) + p + qq)
        qc = dl * dr * f
        eta_inner = _quad_root(qa, qb, qc, dl, dr)
        # exterior: exact linear term plus one pole model of the sum
        dedge = np.where(lower, dr, dl)
        dsum = np.where(lower, dphi, dpsi)
        ssum = np.where(lower, phi, psi)
        pe = dsum * dedge ** 2
        kk = base + ssum - pe / dedge
        b = dedge - kk - t
        eta_ext = _quad_root(np.ones_like(t), -b, -dedge * f,
                             np.where(lower, -np.inf, dl), np.where(lower, dr, np.inf))
    return np.where(inner, eta_inner, eta_ext)


def _quad_root(a, b, c, lo, hi):
    """Root of a x**2 + b x + c = 0 inside (lo, hi), NaN if none."""
    disc = b * b - 4 * a * c
    sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
    sgn = np.where(b >= 0, 1.0, -1.0)
    qv = -0.5 * (b + sgn * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = c / qv
        r2 = qv / a
        r_lin = -c / b
    r1 = np.where(a == 0, r_lin, r1)
    in1 = (r1 > lo) & (r1 < hi)
    in2 = (r2 > lo) & (r2 < hi)
    return np.where(in1, r1, np.where(in2, r2, np.nan))


def _loewner_border(d: np.ndarray, origin: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Border vector for which the computed roots are exact eigenvalues.

    z_k**2 = -prod_j (d_k - lam_j) / prod_{i != k} (d_k - d_i), evaluated in
    log space with every difference formed relative to the root's own pole.
    """
    n = d.size
    logz2 = np.empty(n)
    sign = np.empty(n)
    rows = max(1, _CHUNK // (n + 1))
    for start in range(0, n, rows):
        kk = np.arange(start, min(start + rows, n))
        num = (d[kk, None] - d[origin][None, :]) - tau[None, :]
        den = d[kk, None] - d[None, :]
        den[np.arange(kk.size), kk] = 1.0
        logz2[kk] = np.log(np.abs(num)).sum(axis=1) - np.log(np.abs(den)).sum(axis=1)
        sign[kk] = -np.prod(np.sign(num), axis=1) * np.prod(np.sign(den), axis=1)
    if np.any(sign <= 0):
        raise ConvergenceError("computed roots do not interlace the poles")
    return np.exp(0.5 * logz2)


def interlacing_violations(eigenvalues: np.ndarray, bath_omegas: np.ndarray) -> int:
    """Count departures from strict interlacing.

    Allowed: at most one eigenvalue below the lowest bath frequency, exactly
    one strictly inside each gap, at most one above the highest.  Eigenvalues
    coinciding with a bath frequency count as violations.
    """
    lam = np.sort(np.asarray(eigenvalues, dtype=float))
    w = np.sort(np.asarray(bath_omegas, dtype=float))
    if w.size == 0:
        return 0
    bins = np.searchsorted(w, lam, side="left")
    on_pole = np.isin(lam, w)
    counts = np.bincount(bins[~on_pole], minlength=w.size + 1)
    bad = int(on_pole.sum())
    bad += max(0, counts[0] - 1) + max(0, counts[-1] - 1)
    inner = counts[1:-1]
    bad += int(np.abs(inner - 1).sum())
    return bad
