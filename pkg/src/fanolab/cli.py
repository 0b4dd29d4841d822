"""Command line scenario runner.

Every subcommand reads one JSON config (merged over the defaults), writes
CSV/JSON files into the output directory and exits with 0 on success, 1 on
domain or numerical errors, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import boundstate, config, discrete, dynamics, io, stability
from .errors import ConfigError, FanoLabError
from .spectral import QuadratureSpec

log = logging.getLogger("fanolab")


def _map(fn, items, jobs):
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _spectrum(cfg, vectors=True):
    bath = discrete.discretize(cfg.density, cfg.quadrature)
    return bath, discrete.diagonalize(discrete.arrowhead(cfg.omega_s, bath), vectors=vectors)


def run_bound_state(cfg, out: Path, jobs: int = 1) -> Path:
    tol = float(cfg.section("boundstate")["tol"])
    bs = boundstate.solve_pole(cfg.density, cfg.omega_s, cfg.continuum, tol)
    report = bs.as_dict()
    scan = cfg.section("boundstate")["eta_scan"]
    if scan is not None:
        def one(eta):
            r = boundstate.solve_pole(cfg.with_eta(eta).density, cfg.omega_s, cfg.continuum, tol)
            return dict(r.as_dict(), eta=float(eta))
        report["eta_scan"] = _map(one, [float(e) for e in scan], jobs)
    report["config"] = cfg.raw
    return io.write_json(out / "bound_state.json", report)


def _volterra(cfg):
    dyn = cfg.section("dynamics")
    q = cfg.continuum if dyn["kernel"] == "continuum" else cfg.quadrature
    dt, t_max = float(dyn["dt"]), float(dyn["t_max"])
    coarse = dynamics.evolve_volterra(cfg.density, cfg.omega_s, q, dt, t_max)
    if not dyn["richardson"]:
        return coarse
    fine = dynamics.evolve_volterra(cfg.density, cfg.omega_s, q, dt / 2, t_max)
    return dynamics.richardson(coarse, fine)


def run_evolve(cfg, out: Path, jobs: int = 1) -> Path:
    dyn = cfg.section("dynamics")
    stride = int(dyn["stride"])
    bath, spec = _spectrum(cfg)
    volt = _volterra(cfg)
    times = volt.times[::stride]
    if times[-1] != volt.times[-1]:
        times = np.append(times, volt.times[-1])
    u_volt = volt.amplitudes[np.searchsorted(volt.times, times)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        eig = dynamics.evolve_eigen(spec, times)
    volt_s = dynamics.PropagatorTrace(times, u_volt, volt.engine)
    io.write_trace_csv(out / "u_eigen.csv", eig)
    io.write_trace_csv(out / "u_volterra.csv", volt_s)

    bs = boundstate.solve_pole(cfg.density, cfg.omega_s, cfg.continuum,
                               float(cfg.section("boundstate")["tol"]))
    t_end = float(times[-1])
    ss = dynamics.steady_state(bs, cfg.density, bath, cfg.omega_s, t_end, cfg.continuum)
    io.write_steady_state_csv(out / "steady_state.csv", ss, cfg.omega_s)
    psi = dynamics.evolved_state(spec, [t_end])[:, 0]
    report = {
        "max_dev": float(np.max(np.abs(eig.amplitudes - u_volt))),
        "abs_u_end_eigen": float(abs(eig.amplitudes[-1])),
        "abs_u_end_volterra": float(abs(u_volt[-1])),
        "t_end": t_end,
        "recurrence_time": eig.recurrence_time,
        "beyond_recurrence": eig.beyond_recurrence,
        "bound_state": bs.as_dict(),
        "steady_state": {"t": t_end, "norm": ss.norm,
                         "fidelity": dynamics.fidelity(ss.vector(), psi)},
        "config": cfg.raw,
    }
    return io.write_json(out / "agreement.json", report)


def run_conserve(cfg, out: Path, jobs: int = 1) -> Path:
    dyn = cfg.section("dynamics")
    _, spec = _spectrum(cfg)
    step = float(dyn["dt"]) * int(dyn["stride"])
    times = np.arange(0.0, float(dyn["t_max"]) + 0.5 * step, step)
    rep = dynamics.conservation_audit(spec, cfg.omega_s, times)
    io.write_conservation_csv(out / "conservation.csv", rep)
    n_max = int(dyn["n_max"])
    sectors = dynamics.sector_ground_energies(spec, n_max)
    summary = {
        "max_drift_N": rep.max_drift_N,
        "max_drift_E": rep.max_drift_E,
        "E_tot_expected": cfg.omega_s,
        "spectral_width": spec.width,
        "lambda_min": spec.lambda_min,
        "sector_ground_energies": sectors.pairs(),
        "classification": sectors.classification,
        "initial_state_energies": [[n, dynamics.initial_state_energy(cfg.omega_s, n)]
                                   for n in range(n_max + 1)],
        "config": cfg.raw,
    }
    return io.write_json(out / "summary.json", summary)


def random_bath(rng: np.random.Generator, max_modes: int):
    """Random (omega_s, bath) with well separated frequencies."""
    n = int(rng.integers(1, max_modes + 1))
    while True:
        w = np.sort(rng.uniform(0.0, 10.0, n))
        if n == 1 or np.min(np.diff(w)) > 1e-6:
            break
    v = rng.uniform(0.05, 1.0, n)
    return float(rng.uniform(0.0, 10.0)), discrete.DiscretizedBath(w, v)


def run_spectrum(cfg, out: Path, jobs: int = 1) -> Path:
    bath, spec = _spectrum(cfg, vectors=False)
    io.write_spectrum_csv(out / "spectrum.csv", spec)
    sb = cfg.section("spectrum")
    rng = np.random.default_rng(cfg.seed)
    cases = [random_bath(rng, int(sb["random_max_modes"])) for _ in range(int(sb["random_baths"]))]

    def audit(case):
        ws, b = case
        s = discrete.diagonalize(discrete.arrowhead(ws, b), vectors=False)
        return discrete.interlacing_violations(s.eigenvalues, b.omegas)

    random_violations = int(sum(_map(audit, cases, jobs)))
    summary = {
        "size": int(spec.eigenvalues.size),
        "method": spec.method,
        "lambda_min": spec.lambda_min,
        "lambda_max": float(spec.eigenvalues[-1]),
        "interlacing_violations": discrete.interlacing_violations(spec.eigenvalues, bath.omegas),
        "trace_error": float(abs(spec.eigenvalues.sum() - cfg.omega_s - bath.omegas.sum())),
        "random_audit": {"seed": cfg.seed, "count": len(cases),
                         "max_modes": int(sb["random_max_modes"]),
                         "violations": random_violations},
        "config": cfg.raw,
    }
    return io.write_json(out / "spectrum.json", summary)


def run_stability(cfg, out: Path, jobs: int = 1) -> Path:
    st = cfg.section("stability")
    q = QuadratureSpec(cfg.quadrature.scheme, int(st["n_points"]), cfg.quadrature.omega_max,
                       cfg.quadrature.tail_rtol)
    bath = discrete.discretize(cfg.density, q)
    template = stability.QuadraticModel(st["coupling_form"], cfg.omega_s, bath)
    scan = stability.critical_scan(template, st["scale_grid"], jobs=jobs)
    io.write_scan_csv(out / "scan.csv", scan)
    summary = {
        "coupling_form": template.coupling_form.value,
        "transition_found": scan.transition_found,
        "bracket": scan.bracket,
        "critical_scale": scan.critical_scale,
        "message": scan.message,
        "number_commutator_norm_at_scale_1": stability.number_commutator_norm(
            template.with_scale(1.0)),
        "config": cfg.raw,
    }
    return io.write_json(out / "summary.json", summary)


COMMANDS = {
    "bound-state": run_bound_state,
    "evolve": run_evolve,
    "conserve": run_conserve,
    "spectrum": run_spectrum,
    "stability-scan": run_stability,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fanolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON scenario file (defaults used when omitted)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for scans")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        cfg = config.load(args.config)
        out = Path(args.out) if args.out else cfg.output_dir
        path = COMMANDS[args.command](cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FanoLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
