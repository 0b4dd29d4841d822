import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from fanolab import cli, config, io
from fanolab.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]
ETA_C = 1.0 / (2 * math.pi * 5.0)

SMALL = {
    "quadrature": {"n_points": 512, "continuum_n_points": 1024},
    "dynamics": {"dt": 0.02, "t_max": 5.0, "stride": 10, "n_max": 4},
    "spectrum": {"random_baths": 4, "random_max_modes": 16},
    "stability": {"n_points": 32, "scale_grid": [0.0, 0.2, 0.4, 0.6]},
}


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def merged(*parts):
    out = config.DEFAULTS
    for p in parts:
        out = config._merge(out, p)
    return out


def run(tmp_path, cmd, payload, out="out"):
    cfg = write_config(tmp_path, payload)
    dest = tmp_path / out
    code = cli.main([cmd, "--config", cfg, "--out", str(dest)])
    return code, dest


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# -- config -----------------------------------------------------------------

def test_docs_defaults_match():
    doc = json.loads((ROOT / "docs" / "defaults.json").read_text())
    assert doc == json.loads(json.dumps(config.DEFAULTS))


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown config key"):
        config.load(overrides={"dynamics": {"dtt": 0.1}})


@pytest.mark.parametrize("override", [
    {"dynamics": {"dt": -1}},
    {"dynamics": {"kernel": "fft"}},
    {"spectral_density": {"family": "lorentzian"}},
    {"spectral_density": {"family": "tabulated"}},
    {"stability": {"scale_grid": [0.5, 0.1]}},
    {"stability": {"coupling_form": "xx"}},
    {"quadrature": {"scheme": "simpson"}},
    {"spectral_density": {"eta": -0.1}},
])
def test_invalid_values_are_config_errors(override):
    with pytest.raises(ConfigError):
        config.load(overrides=override)


def test_tabulated_table_relative_to_config(tmp_path):
    (tmp_path / "j.csv").write_text("omega,J\n0,0\n10,1\n20,0\n")
    cfg = config.load(write_config(tmp_path, {"spectral_density": {"family": "tabulated",
                                                                    "table": "j.csv"}}))
    assert cfg.density.support == (0.0, 20.0)


# -- io ---------------------------------------------------------------------

def test_float_format_round_trips():
    for x in (0.1, 1 / 3, -1.1376811163980742, 1e-300, 6.02e23):
        assert float(io.fmt(x)) == x


def test_json_non_finite(tmp_path):
    p = io.write_json(tmp_path / "x.json", {"a": math.inf, "b": [math.nan, 1.0]})
    data = json.loads(p.read_text())
    assert data == {"a": "inf", "b": ["nan", 1.0]}


@pytest.mark.parametrize("text", ["omega,J\n1,0.1\n0,0.2\n", "w,J\n0,1\n1,1\n",
                                  "omega,J\n0,-1\n1,1\n", "omega,J\n0,abc\n"])
def test_bad_table_is_config_error(tmp_path, text):
    p = tmp_path / "t.csv"
    p.write_text(text)
    with pytest.raises(ConfigError):
        io.read_tabulated_csv(p)


# -- subcommands ------------------------------------------------------------

def test_bound_state_no_coupling(tmp_path):
    code, out = run(tmp_path, "bound-state", {"spectral_density": {"eta": 0.0}})
    assert code == 0
    rep = json.loads((out / "bound_state.json").read_text())
    assert rep["exists"] is False
    assert rep["config"]["spectral_density"]["eta"] == 0.0


def test_bound_state_strong_and_scan(tmp_path):
    payload = {"boundstate": {"eta_scan": [ETA_C * 0.99, ETA_C * 1.01]}}
    code, out = run(tmp_path, "bound-state", payload)
    assert code == 0
    rep = json.loads((out / "bound_state.json").read_text())
    assert rep["exists"] is True and rep["omega_b"] < 0
    assert {"exists", "omega_b", "Z", "threshold_margin", "residual"} <= set(rep)
    assert [r["exists"] for r in rep["eta_scan"]] == [False, True]


def test_evolve_outputs(tmp_path):
    code, out = run(tmp_path, "evolve", SMALL)
    assert code == 0
    for name in ("u_eigen.csv", "u_volterra.csv", "steady_state.csv", "agreement.json"):
        assert (out / name).exists()
    rows = read_csv(out / "u_eigen.csv")
    assert rows[0] == ["t", "re_u", "im_u", "abs_u"]
    assert float(rows[1][0]) == 0.0 and float(rows[1][1]) == pytest.approx(1.0)
    assert read_csv(out / "steady_state.csv")[0] == ["k", "omega", "re_amp", "im_amp"]
    rep = json.loads((out / "agreement.json").read_text())
    assert rep["max_dev"] < 1e-3


def test_evolve_decoupled(tmp_path):
    code, out = run(tmp_path, "evolve", merged(SMALL, {"spectral_density": {"eta": 0.0}}))
    assert code == 0
    for name in ("u_eigen.csv", "u_volterra.csv"):
        abs_u = np.array([float(r[3]) for r in read_csv(out / name)[1:]])
        np.testing.assert_allclose(abs_u, 1.0, atol=1e-12)


def test_evolve_weak_decays(tmp_path):
    payload = {"spectral_density": {"eta": 0.01}, "quadrature": {"continuum_n_points": 8192},
               "dynamics": {"dt": 0.05, "t_max": 300.0, "stride": 100, "richardson": False}}
    code, out = run(tmp_path, "evolve", payload)
    assert code == 0
    rep = json.loads((out / "agreement.json").read_text())
    assert rep["abs_u_end_eigen"] <= 0.05


def test_conserve_outputs(tmp_path):
    code, out = run(tmp_path, "conserve", SMALL)
    assert code == 0
    assert read_csv(out / "conservation.csv")[0] == ["t", "N_tot", "E_tot"]
    s = json.loads((out / "summary.json").read_text())
    assert s["max_drift_N"] <= 1e-10
    assert s["max_drift_E"] <= 1e-10 * s["spectral_width"]
    assert s["classification"] == "unbounded_overall"
    assert s["initial_state_energies"][1] == [1, 1.0]


def test_spectrum_outputs(tmp_path):
    code, out = run(tmp_path, "spectrum", SMALL)
    assert code == 0
    rows = read_csv(out / "spectrum.csv")
    assert rows[0] == ["eigenvalue", "system_weight"]
    assert len(rows) == 512 + 2
    s = json.loads((out / "spectrum.json").read_text())
    assert s["interlacing_violations"] == 0 and s["random_audit"]["violations"] == 0


def test_stability_outputs(tmp_path):
    code, out = run(tmp_path, "stability-scan", SMALL)
    assert code == 0
    rows = read_csv(out / "scan.csv")
    assert rows[0] == ["scale", "stable", "min_w2", "max_imag_rate"]
    s = json.loads((out / "summary.json").read_text())
    assert s["transition_found"] and 0.2 <= s["critical_scale"] <= 0.4


def test_stability_no_transition_message(tmp_path):
    payload = merged(SMALL, {"stability": {"coupling_form": "rotating_wave"}})
    code, out = run(tmp_path, "stability-scan", payload)
    assert code == 0
    assert json.loads((out / "summary.json").read_text())["message"] == "no transition found"


@pytest.mark.parametrize("cmd", list(cli.COMMANDS))
def test_determinism(tmp_path, cmd):
    payload = merged(SMALL, {"seed": 7})
    _, a = run(tmp_path, cmd, payload, "a")
    _, b = run(tmp_path, cmd, payload, "b")
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir()) and files
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_jobs_do_not_change_output(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["stability-scan", "--config", cfg, "--out", str(tmp_path / "s")]) == 0
    assert cli.main(["stability-scan", "--config", cfg, "--out", str(tmp_path / "p"),
                     "--jobs", "3"]) == 0
    assert (tmp_path / "s" / "scan.csv").read_bytes() == (tmp_path / "p" / "scan.csv").read_bytes()


# -- exit codes -------------------------------------------------------------

def test_exit_code_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "bound-state", {"nonsense": 1})
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_exit_code_missing_file(tmp_path):
    assert cli.main(["spectrum", "--config", str(tmp_path / "none.json")]) == 2


def test_exit_code_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(p)]) == 2


def test_exit_code_domain_error(tmp_path, capsys):
    code, _ = run(tmp_path, "bound-state", {"spectral_density": {"eta": 100.0}})
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_exit_code_bad_jobs(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    assert cli.main(["spectrum", "--config", cfg, "--jobs", "0"]) == 2


def test_exit_code_usage():
    assert cli.main([]) == 2
    assert cli.main(["frobnicate"]) == 2
