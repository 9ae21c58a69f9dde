from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionrepeater import nodephysics as npx
from ionrepeater.nodephysics import CavityGeometry, MotionalState, SpinEchoConfig

pytestmark = pytest.mark.filterwarnings("ignore:grid")

SMALL = SpinEchoConfig(grid_max=20)


def test_coupling_examples():
    assert npx.cavity_coupling(0, 2.9) == pytest.approx(0.946, abs=0.004)
    assert npx.cavity_coupling(455, 2.9) == pytest.approx(0.926, abs=0.004)
    assert npx.cavity_coupling(0, 0) == 1


def test_projected_separation():
    assert CavityGeometry().projected_separation == pytest.approx(455, abs=0.5)


def test_equalized_coupling():
    off, g = npx.equalize_coupling()
    assert g == pytest.approx(0.941, abs=0.006)
    assert abs(off) == pytest.approx(14, abs=0.5)
    g1, g2 = npx.ion_couplings(off)
    assert g1 == pytest.approx(g2, abs=1e-12)


def _geom_with_projection(nm):
    return CavityGeometry(ion_separation=nm / 1e3 / np.cos(np.radians(85.5)))


def test_equalize_degenerate_half_wavelength():
    geom = _geom_with_projection(427.0)
    off, g = npx.equalize_coupling(geom)
    assert off == 0
    assert g == pytest.approx(np.exp(-(geom.transverse_offset / geom.waist) ** 2))


def test_equalize_quarter_wavelength():
    geom = _geom_with_projection(854 / 4)
    _, g = npx.equalize_coupling(geom)
    assert g == pytest.approx(np.cos(np.pi / 4) * np.exp(-(geom.transverse_offset / geom.waist) ** 2))


def test_equalize_is_best_on_scan():
    rows = npx.offset_scan(step=0.001)
    g1, g2 = rows[:, 1], rows[:, 2]
    eq = np.abs(g1 - g2) < 2e-5
    assert g1[eq].max() == pytest.approx(npx.equalize_coupling()[1], abs=1e-4)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2000, 2000), st.floats(0, 10))
def test_coupling_periodic_and_symmetric(z, r):
    g = npx.cavity_coupling(z, r)
    assert npx.cavity_coupling(z + 427, r) == pytest.approx(g, abs=1e-12)
    assert npx.cavity_coupling(-z, r) == pytest.approx(g, abs=1e-12)


def test_geometry_validation():
    with pytest.raises(ValueError):
        CavityGeometry(waist=0)


def test_heating_examples():
    assert npx.heating_trajectory(0).nbar == (8, 9, 0, 11)
    assert np.allclose(npx.heating_trajectory(210).nbar, [29, 34, 9.2, 16], atol=0.01)
    assert np.allclose(npx.heating_trajectory(105).nbar, [18.5, 21.5, 4.6, 13.5], atol=0.01)
    with pytest.raises(ValueError):
        npx.heating_trajectory(-1)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 500), st.integers(0, 500))
def test_heating_linear(a, b):
    ab = npx.heating_trajectory(a + b)
    step = npx.heating_trajectory(b, start=npx.heating_trajectory(a))
    assert np.allclose(ab.nbar, step.nbar)
    assert np.allclose(ab.nbar, np.add(npx.heating_trajectory(a).nbar, b * npx.HEATING_RATES))


def test_motional_state_validation():
    with pytest.raises(ValueError):
        MotionalState(nbar=(-1, 0, 0, 0))
    with pytest.raises(ValueError):
        MotionalState(eta=(0.5, 0, 0, 0))
    with pytest.raises(ValueError):
        MotionalState(nbar=(1, 2, 3))


def test_pulse_is_unitary_and_pi_swaps():
    th = np.array([np.pi, 0.3])
    for a, b in [(0, 2), (1, 2)]:
        U = npx.pulse(th, a, b, 0.4)
        assert np.allclose(U @ np.conj(np.swapaxes(U, 1, 2)), np.eye(3))
        assert abs(U[0, a, b]) == pytest.approx(1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_repump_trace_and_positivity(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    out = npx.repump(rho)
    assert abs(np.trace(out) - 1) < 1e-12
    assert np.linalg.eigvalsh(out).min() > -1e-12
    assert out[2, 2] == 0


def test_fast_echo_matches_full_qutrit_route():
    th = np.pi * np.random.default_rng(1).uniform(0.3, 1.3, 300)
    for ph in [(0, 0, 0), (0, np.pi, 0)]:
        assert np.allclose(npx.echo_coherence(th, 40, ph), npx.echo_train(th, 40, ph)[:, 0, 1], atol=1e-13)


def test_perfect_echo_returns_c0():
    cold = MotionalState(nbar=(0, 0, 0, 0))
    cfg = SpinEchoConfig(calibration_state=cold, calibration="mean")
    assert npx.spin_echo_visibility(cold, cfg) == pytest.approx(0.99, abs=1e-12)
    # the optimizer lands on the same pulse
    assert npx.spin_echo_visibility(cold, replace(cfg, calibration="optimal")) == pytest.approx(0.99, abs=1e-9)


def test_zero_eta_is_temperature_independent():
    hot = MotionalState(nbar=(20, 30, 5, 15), eta=(0, 0, 0, 0))
    cfg = replace(SMALL, calibration="mean")
    assert npx.spin_echo_visibility(hot, cfg) == pytest.approx(cfg.C0, abs=1e-12)


def test_alternating_phases_refocus_pulse_errors():
    th = np.pi * np.array([0.98])
    assert 2 * abs(npx.echo_coherence(th, 40, (0, np.pi, 0))[0]) == pytest.approx(1, abs=1e-3)
    assert 2 * abs(npx.echo_coherence(th, 40, (0, 0, 0))[0]) < 0.95


def test_visibility_monotone_in_temperature():
    start = npx.TEMPS["start"]
    area = npx.calibrated_area(start.eta, SMALL)
    base = npx.spin_echo_visibility(start, SMALL, area)
    for i in range(4):
        nb = list(start.nbar)
        nb[i] += 2
        hotter = replace(start, nbar=tuple(nb))
        assert npx.spin_echo_visibility(hotter, SMALL, area) <= base + 1e-12


def test_visibility_monotone_in_miscalibration_at_calibration_point():
    start = npx.TEMPS["start"]
    area = npx.calibrated_area(start.eta, SMALL)
    c = [npx.spin_echo_visibility(start, replace(SMALL, miscalibration=m), area)
         for m in (0, 0.01, 0.02)]
    assert c[0] >= c[1] >= c[2]
    c = [npx.spin_echo_visibility(start, replace(SMALL, miscalibration=m), area)
         for m in (0, -0.01, -0.02)]
    assert c[0] >= c[1] >= c[2]


def test_grid_coverage_warning():
    hot = MotionalState(nbar=(30, 0, 0, 0))
    with pytest.warns(RuntimeWarning):
        npx.spin_echo_visibility(hot, SpinEchoConfig(grid_max=5, calibration="mean"))


def test_thermal_weights():
    w = npx.thermal_weights(3.0, 400)
    assert w.sum() == pytest.approx(1)
    assert np.sum(np.arange(401) * w) == pytest.approx(3.0)
    assert np.array_equal(npx.thermal_weights(0, 3), [1, 0, 0, 0])


def test_calibrate_eta_scale_reduced_grid():
    cfg = SpinEchoConfig(grid_max=12, n_echoes=10, calibration="mean")
    s = npx.calibrate_eta_scale(0.95, cfg=cfg)
    eta = npx.lamb_dicke(s)
    state = replace(npx.TEMPS["start"], eta=tuple(eta))
    cfg = replace(cfg, calibration_state=state)
    assert npx.spin_echo_visibility(state, cfg) == pytest.approx(0.95, abs=1e-4)


def test_smoke_21_grid_fast():
    import time
    t = time.perf_counter()
    c = npx.spin_echo_visibility(npx.TEMPS["mid"], SpinEchoConfig(grid_max=20), area=3.2509)
    assert time.perf_counter() - t < 10
    assert 0 < c < 0.99


def test_config_validation():
    with pytest.raises(ValueError):
        SpinEchoConfig(n_echoes=0)
    with pytest.raises(ValueError):
        SpinEchoConfig(calibration="magic")


def test_ramsey_examples():
    assert npx.ramsey_amplitude(0, 0.059) == pytest.approx(0.99)
    assert npx.ramsey_amplitude(0.066, 0.059) == pytest.approx(0.283, abs=0.002)
    assert npx.ramsey_amplitude(0.066, 0.108) == pytest.approx(0.681, abs=0.002)
    with pytest.raises(ValueError):
        npx.ramsey_amplitude(0.1, 0)
