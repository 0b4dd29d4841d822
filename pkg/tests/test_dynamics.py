import math
import warnings

import numpy as np
import pytest

from fanolab import boundstate, discrete, dynamics
from fanolab.errors import ConsistencyError, StabilityError

from conftest import OMEGA_S, ohmic, panels, uniform


def eigen_trace(spec, t):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return dynamics.evolve_eigen(spec, t)


# -- eigen engine -----------------------------------------------------------

def test_decoupled_mode():
    bath = discrete.DiscretizedBath([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
    spec = discrete.diagonalize(discrete.arrowhead(OMEGA_S, bath))
    t = np.linspace(0, 20, 101)
    tr = eigen_trace(spec, t)
    np.testing.assert_allclose(tr.amplitudes, np.exp(-1j * OMEGA_S * t), atol=1e-14)
    np.testing.assert_allclose(tr.abs_u, 1.0, atol=1e-14)


def test_rabi_oscillation():
    spec = discrete.diagonalize(discrete.arrowhead(1.0, discrete.DiscretizedBath([1.0], [0.1])))
    t = np.linspace(0, 100, 501)
    tr = dynamics.evolve_eigen(spec, t)
    np.testing.assert_allclose(tr.abs_u ** 2, np.cos(0.1 * t) ** 2, atol=1e-13)


def test_trace_invariants(strong_spectrum):
    t = np.linspace(0, 50, 1001)
    tr = dynamics.evolve_eigen(strong_spectrum, t)
    assert tr.amplitudes[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(tr.abs_u <= 1 + 1e-9)
    assert tr.engine is dynamics.Engine.EIGEN_EXPANSION
    assert tr.recurrence_time == pytest.approx(2 * math.pi / (50 / 4096))
    assert not tr.beyond_recurrence


def test_recurrence_warning(strong_spectrum):
    t = np.linspace(0, 600, 61)
    with pytest.warns(RuntimeWarning, match="recurrence"):
        tr = dynamics.evolve_eigen(strong_spectrum, t)
    assert tr.beyond_recurrence


def test_times_validation(strong_spectrum):
    with pytest.raises(ValueError):
        dynamics.evolve_eigen(strong_spectrum, [0.5, 1.0])
    with pytest.raises(ValueError):
        dynamics.evolve_eigen(strong_spectrum, [0.0, 2.0, 1.0])


def test_long_time_average_is_residue(strong_spectrum, strong):
    z = boundstate.solve_pole(strong, OMEGA_S, panels()).residue_Z
    tr = eigen_trace(strong_spectrum, np.arange(0, 400.0001, 0.05))
    assert abs(tr.window_average(200, 400) - z) <= 0.01 * z


def test_weak_coupling_decays(weak_spectrum):
    tr = dynamics.evolve_eigen(weak_spectrum, np.linspace(0, 300, 301))
    assert tr.abs_u[-1] <= 0.05


# -- Volterra engine --------------------------------------------------------

def test_volterra_zero_kernel():
    dt, t_max = 0.01, 20.0
    tr = dynamics.evolve_volterra(ohmic(0.0), OMEGA_S, panels(), dt, t_max)
    err = np.max(np.abs(tr.amplitudes - np.exp(-1j * OMEGA_S * tr.times)))
    # trapezoid phase error ~ ws**3 dt**2 t / 12
    assert err <= OMEGA_S ** 3 * dt ** 2 * t_max / 12 * 1.01
    assert tr.amplitudes[0] == 1.0


def test_volterra_second_order(strong):
    q = panels()
    ref_c = dynamics.evolve_volterra(strong, OMEGA_S, q, 0.005, 10.0)
    ref_f = dynamics.evolve_volterra(strong, OMEGA_S, q, 0.0025, 10.0)
    limit = dynamics.richardson(ref_c, ref_f).amplitudes[-1]
    errs = [abs(dynamics.evolve_volterra(strong, OMEGA_S, q, dt, 10.0).amplitudes[-1] - limit)
            for dt in (0.04, 0.02, 0.01)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.5 < r < 4.5 for r in ratios)


def test_volterra_matches_eigen_same_model(strong, strong_bath, strong_spectrum):
    # with the bath's own quadrature both engines describe the same finite model
    q = strong_bath.quadrature
    c = dynamics.evolve_volterra(strong, OMEGA_S, q, 0.005, 20.0)
    f = dynamics.evolve_volterra(strong, OMEGA_S, q, 0.0025, 20.0)
    volt = dynamics.richardson(c, f)
    eig = dynamics.evolve_eigen(strong_spectrum, volt.times)
    assert np.max(np.abs(volt.amplitudes - eig.amplitudes)) <= 1e-5


def test_volterra_stability_guard(monkeypatch):
    # an anti-damping kernel makes |u| grow; the engine must refuse to continue
    monkeypatch.setattr(dynamics.spectral, "memory_kernel",
                        lambda sd, t, q: -np.ones_like(np.asarray(t, dtype=complex)))
    with pytest.raises(StabilityError, match="reduce dt"):
        dynamics.evolve_volterra(ohmic(0.1), OMEGA_S, panels(), 0.01, 10.0)


def test_volterra_argument_checks():
    with pytest.raises(ValueError):
        dynamics.evolve_volterra(ohmic(0.1), OMEGA_S, panels(), 0.0, 1.0)
    with pytest.raises(ValueError):
        dynamics.evolve_volterra(ohmic(0.1), OMEGA_S, panels(), 0.1, -1.0)


def test_richardson_requires_half_step(strong):
    a = dynamics.evolve_volterra(strong, OMEGA_S, panels(), 0.1, 1.0)
    b = dynamics.evolve_volterra(strong, OMEGA_S, panels(), 0.03, 1.0)
    with pytest.raises(ValueError):
        dynamics.richardson(a, b)


# -- conservation and state -------------------------------------------------

def test_conservation_strong(strong_spectrum):
    t = np.linspace(0, 100, 51)
    rep = dynamics.conservation_audit(strong_spectrum, OMEGA_S, t)
    assert strong_spectrum.lambda_min < 0
    assert rep.max_drift_N <= 1e-10
    assert rep.max_drift_E <= 1e-10 * strong_spectrum.width
    assert np.all(rep.total_energy > 0)


def test_unitarity_of_evolved_state(strong_spectrum):
    psi = dynamics.evolved_state(strong_spectrum, [0.0, 7.0, 123.0])
    np.testing.assert_allclose(np.sum(np.abs(psi) ** 2, axis=0), 1.0, atol=1e-10)
    assert psi[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_evolved_state_needs_vectors(strong_bath):
    spec = discrete.diagonalize(discrete.arrowhead(OMEGA_S, strong_bath), vectors=False)
    with pytest.raises(ValueError):
        dynamics.evolved_state(spec, [1.0])


def test_steady_state_zero_coupling():
    sd = ohmic(0.0)
    bath = discrete.discretize(sd, uniform(256))
    bs = boundstate.solve_pole(sd, OMEGA_S, panels())
    ss = dynamics.steady_state(bs, sd, bath, OMEGA_S, 3.0)
    v = ss.vector()
    assert v[0] == pytest.approx(np.exp(-3j * OMEGA_S))
    assert np.all(v[1:] == 0)
    assert ss.norm == 1.0


def test_steady_state_weak_has_no_bound_part(weak, weak_bath):
    bs = boundstate.solve_pole(weak, OMEGA_S, panels())
    ss = dynamics.steady_state(bs, weak, weak_bath, OMEGA_S, 300.0, panels())
    assert ss.bound_amplitude is None
    assert ss.vector()[0] == 0


def test_steady_state_fidelity(strong, strong_bath, strong_spectrum):
    bs = boundstate.solve_pole(strong, OMEGA_S, panels())
    ss = dynamics.steady_state(bs, strong, strong_bath, OMEGA_S, 300.0, panels())
    psi = dynamics.evolved_state(strong_spectrum, [300.0])[:, 0]
    assert dynamics.fidelity(ss.vector(), psi) >= 0.99
    assert ss.norm <= 1 + 1e-3
    assert abs(ss.bound_amplitude) == pytest.approx(bs.residue_Z)


def test_steady_state_provenance(strong, weak_bath):
    bs = boundstate.solve_pole(strong, OMEGA_S, panels())
    with pytest.raises(ConsistencyError):
        dynamics.steady_state(bs, strong, weak_bath, OMEGA_S, 1.0)
    loose = discrete.DiscretizedBath(weak_bath.omegas, weak_bath.couplings)
    with pytest.raises(ConsistencyError):
        dynamics.steady_state(bs, strong, loose, OMEGA_S, 1.0)


# -- sectors ----------------------------------------------------------------

def test_sector_energies_linear(strong_spectrum):
    se = dynamics.sector_ground_energies(strong_spectrum, 10)
    assert se.energies[0] == 0
    assert np.all(se.energies == se.n * se.energies[1])
    assert se.classification == "unbounded_overall"
    assert np.all(np.diff(se.energies) < 0)


def test_sector_energies_example():
    # a single-mode problem whose lowest eigenvalue is -0.2
    bath = discrete.DiscretizedBath([0.8], [0.0])
    spec = discrete.diagonalize(discrete.arrowhead(-0.2, bath))
    se = dynamics.sector_ground_energies(spec, 3)
    assert se.energies[3] == pytest.approx(-0.6, abs=1e-15)


def test_sector_energies_weak_bounded(weak_spectrum):
    se = dynamics.sector_ground_energies(weak_spectrum, 10)
    assert se.lambda_min > 0
    assert np.all(se.energies >= 0)
    assert se.classification == "bounded_overall"
    with pytest.raises(ValueError):
        dynamics.sector_ground_energies(weak_spectrum, -1)


@pytest.mark.parametrize("n,ws,expected", [(1, 1.0, 1.0), (0, 1.0, 0.0), (5, 1.0, 5.0)])
def test_initial_state_energy(n, ws, expected):
    assert dynamics.initial_state_energy(ws, n) == expected


def test_initial_state_energy_rejects_negative():
    with pytest.raises(ValueError):
        dynamics.initial_state_energy(1.0, -1)
