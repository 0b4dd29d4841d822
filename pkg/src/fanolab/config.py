"""Scenario configuration: one JSON document merged over :data:`DEFAULTS`.

The defaults are mirrored in ``docs/defaults.json``.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import ConfigError
from .io import read_tabulated_csv
from .spectral import QuadratureSpec, SpectralDensity
from .stability import CouplingForm

DEFAULTS: Dict[str, Any] = {
    "spectral_density": {
        "family": "ohmic",
        "s": 1.0,
        "eta": 0.1,
        "omega_c": 5.0,
        "table": None,
        "support": [0.0, None],
    },
    "omega_s": 1.0,
    "quadrature": {
        "scheme": "uniform_trapezoid",
        "n_points": 4096,
        "omega_max": 50.0,
        "tail_rtol": 1e-3,
        "continuum_scheme": "gauss_legendre_panels",
        "continuum_n_points": 4096,
    },
    "boundstate": {
        "tol": 1e-12,
        "eta_scan": None,
    },
    "dynamics": {
        "dt": 0.005,
        "t_max": 50.0,
        "stride": 20,
        "richardson": True,
        "kernel": "continuum",
        "n_max": 10,
    },
    "spectrum": {
        "random_baths": 20,
        "random_max_modes": 64,
    },
    "stability": {
        "coupling_form": "position_position",
        "scale_grid": [round(0.05 * i, 10) for i in range(21)],
        "n_points": 256,
    },
    "output_dir": "out",
    "seed": 0,
}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"config key {where}{key!r} must be an object")
            out[key] = _merge(base[key], val, f"{where}{key}.")
        else:
            out[key] = val
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    raw: Dict[str, Any]
    density: SpectralDensity
    quadrature: QuadratureSpec
    continuum: QuadratureSpec
    base_dir: Path

    @property
    def omega_s(self) -> float:
        return float(self.raw["omega_s"])

    def section(self, name: str) -> Dict[str, Any]:
        return self.raw[name]

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output_dir"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    def with_eta(self, eta: float) -> "ScenarioConfig":
        raw = copy.deepcopy(self.raw)
        raw["spectral_density"]["eta"] = float(eta)
        return build(raw, self.base_dir)


def _density(block: dict, base_dir: Path) -> SpectralDensity:
    lo, hi = block["support"]
    hi = math.inf if hi is None else float(hi)
    if block["family"] == "ohmic":
        return SpectralDensity.ohmic(block["eta"], block["omega_c"], block["s"],
                                     support=(float(lo), hi))
    if block["family"] == "tabulated":
        if not block["table"]:
            raise ConfigError("tabulated density needs a 'table' CSV path")
        path = Path(block["table"])
        if not path.is_absolute():
            path = base_dir / path
        support = None if block["support"] == DEFAULTS["spectral_density"]["support"] \
            else (float(lo), hi)
        return read_tabulated_csv(path, support)
    raise ConfigError(f"unknown spectral family {block['family']!r}")


def build(raw: dict, base_dir: Path = Path(".")) -> ScenarioConfig:
    try:
        density = _density(raw["spectral_density"], base_dir)
        qb = raw["quadrature"]
        quad = QuadratureSpec(qb["scheme"], qb["n_points"], qb["omega_max"], qb["tail_rtol"])
        cont = QuadratureSpec(qb["continuum_scheme"], qb["continuum_n_points"],
                              qb["omega_max"], qb["tail_rtol"])
        float(raw["omega_s"])
        if not raw["boundstate"]["tol"] > 0:
            raise ValueError("boundstate.tol must be > 0")
        dyn = raw["dynamics"]
        if not dyn["dt"] > 0 or not dyn["t_max"] > 0:
            raise ValueError("dynamics.dt and dynamics.t_max must be > 0")
        if int(dyn["stride"]) < 1 or int(dyn["n_max"]) < 0:
            raise ValueError("dynamics.stride must be >= 1 and n_max >= 0")
        if dyn["kernel"] not in ("continuum", "bath"):
            raise ValueError("dynamics.kernel must be 'continuum' or 'bath'")
        st = raw["stability"]
        CouplingForm(st["coupling_form"])
        grid = [float(s) for s in st["scale_grid"]]
        if any(b < a for a, b in zip(grid, grid[1:])) or any(s < 0 for s in grid):
            raise ValueError("stability.scale_grid must be ascending and >= 0")
        if int(st["n_points"]) < 1:
            raise ValueError("stability.n_points must be >= 1")
        if int(raw["spectrum"]["random_baths"]) < 0 or int(raw["spectrum"]["random_max_modes"]) < 1:
            raise ValueError("spectrum block out of range")
        scan = raw["boundstate"]["eta_scan"]
        if scan is not None and any(float(e) < 0 for e in scan):
            raise ValueError("boundstate.eta_scan values must be >= 0")
        int(raw["seed"])
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return ScenarioConfig(raw, density, quad, cont, base_dir)


def load(path: Optional[str] = None, overrides: Optional[dict] = None) -> ScenarioConfig:
    """Read ``path`` (if given), merge over the defaults, validate."""
    user: dict = {}
    base_dir = Path(".")
    if path is not None:
        p = Path(path)
        try:
            user = json.loads(p.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {p}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON ({exc})") from exc
        if not isinstance(user, dict):
            raise ConfigError(f"{p}: top level must be an object")
        base_dir = p.parent
    raw = _merge(DEFAULTS, user)
    if overrides:
        raw = _merge(raw, overrides)
    return build(raw, base_dir)
