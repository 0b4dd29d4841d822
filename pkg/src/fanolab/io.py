"""CSV and JSON readers/writers.

Floats are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .spectral import SpectralDensity


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return float("%.17g" % x)
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return obj


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
    return path


def read_tabulated_csv(path, support=None) -> SpectralDensity:
    """Two-column CSV with header ``omega,J``."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            if header != ["omega", "J"]:
                raise ConfigError(f"{path}: expected header 'omega,J', got {','.join(header)}")
            rows = [(float(a), float(b)) for a, b in (r for r in reader if r)]
    except FileNotFoundError as exc:
        raise ConfigError(f"table file not found: {path}") from exc
    except (ValueError, StopIteration) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: malformed table ({exc})") from exc
    try:
        return SpectralDensity.tabulated([r[0] for r in rows], [r[1] for r in rows], support)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_trace_csv(path, trace) -> Path:
    u = trace.amplitudes
    return write_csv(path, ["t", "re_u", "im_u", "abs_u"],
                     zip(trace.times, u.real, u.imag, np.abs(u)))


def write_conservation_csv(path, report) -> Path:
    return write_csv(path, ["t", "N_tot", "E_tot"],
                     zip(report.times, report.particle_number, report.total_energy))


def write_spectrum_csv(path, spec) -> Path:
    return write_csv(path, ["eigenvalue", "system_weight"],
                     zip(spec.eigenvalues, spec.system_weights))


def write_scan_csv(path, scan) -> Path:
    return write_csv(path, ["scale", "stable", "min_w2", "max_imag_rate"],
                     ((s, v.stable, v.min_normal_frequency_sq, v.max_imag_rate)
                      for s, v in scan.points))


def write_steady_state_csv(path, state, omega_s: float) -> Path:
    """Row k = 0 is the system mode, rows 1..N the bath modes."""
    vec = state.vector()
    omegas = np.concatenate([[omega_s], state.omegas])
    return write_csv(path, ["k", "omega", "re_amp", "im_amp"],
                     zip(range(vec.size), omegas, vec.real, vec.imag))
