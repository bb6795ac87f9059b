from __future__ import annotations

import numpy as np
import pytest

from breakscan import DGPConfig, PanelError, simulate_dgp, two_step
from breakscan.simulate import regime_coefficients, scenario_preset


def test_regime_two_coefficients():
    coefs = regime_coefficients(DGPConfig(T=100, c=1.0))
    c1 = coefs[1]  # columns x1 x2 trend const w1 w2
    np.testing.assert_array_equal(c1[:, :2], 4 * np.eye(2))
    np.testing.assert_array_equal(c1[:, 2], [4, 4])
    np.testing.assert_array_equal(c1[:, 4:], 4 * np.eye(2))
    np.testing.assert_array_equal(coefs[0][:, :2], 2 * np.eye(2))
    np.testing.assert_array_equal(coefs[0][:, 3], [2, 2])


@pytest.mark.parametrize("c", [0.5, 1.0, 1.5])
def test_break_magnitude(c):
    coefs = regime_coefficients(scenario_preset("SB4", 500, c=c))
    for a, b in zip(coefs, coefs[1:]):
        assert np.linalg.norm(b - a) == pytest.approx(2 * c * np.sqrt(6))


def test_sur_variant():
    panel, _, coefs = simulate_dgp(scenario_preset("SB2", 300, variant="SUR"))
    assert panel.r == 0 and not panel.include_trend and panel.include_intercept
    assert coefs[0].shape == (2, 3)


def test_q3_variant_same_magnitudes():
    coefs = regime_coefficients(scenario_preset("SB1", 200, variant="q3"))
    delta = coefs[1] - coefs[0]
    assert delta.shape == (3, 6)
    changed = delta[delta != 0]
    assert np.all(changed == 2.0)
    assert np.all((delta != 0).sum(axis=1) == 3)


def test_noiseless_recovery():
    cfg = DGPConfig(T=300, break_fractions=(0.33, 0.67), sigma_u=0.0)
    panel, truth, coefs = simulate_dgp(cfg)
    res = two_step(panel, 10)
    assert res.breaks == truth
    for got, want in zip(res.fit.coefficients, coefs):
        f = np.array([1 / np.sqrt(300)] * 2 + [1 / 300, 1, 1, 1])
        np.testing.assert_allclose(got * f, want, rtol=1e-7, atol=1e-7)


def test_determinism():
    cfg = scenario_preset("SB4", 500, seed=1)
    a, b = simulate_dgp(cfg)[0], simulate_dgp(cfg)[0]
    for name in ("Y", "X", "W"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    c = simulate_dgp(scenario_preset("SB4", 500, seed=2))[0]
    assert not np.array_equal(a.Y, c.Y)


def test_unit_root_and_stationarity():
    panel, _, _ = simulate_dgp(DGPConfig(T=2000, seed=5))
    for x in panel.X:
        dx = np.diff(x)
        rho = np.corrcoef(dx[:-1], dx[1:])[0, 1]
        assert abs(rho) < 0.1  # differences are white
        assert abs(np.corrcoef(x[:-1], x[1:])[0, 1]) > 0.9
    for w in panel.W:
        rho = np.corrcoef(w[:-1], w[1:])[0, 1]
        assert rho == pytest.approx(0.5, abs=0.1)


def test_presets():
    assert scenario_preset("SB1", 100).break_fractions == (0.5,)
    cfg = scenario_preset("SB1", 100)
    assert (cfg.q, cfg.r, cfg.s, cfg.c) == (2, 2, 2, 1.0)
    assert scenario_preset("SB2", 300).break_fractions == (0.33, 0.67)
    assert scenario_preset("SB4", 250).break_fractions == (0.2, 0.4, 0.6, 0.8)
    assert scenario_preset("SB2", 150).break_indices() == (50, 101)
    assert scenario_preset("SB1_EDGE", 100).break_indices() == (90,)
    with pytest.raises(PanelError, match="unknown scenario"):
        scenario_preset("SB3", 100)
    with pytest.raises(PanelError):
        scenario_preset("SB4", 200)


def test_config_validation():
    with pytest.raises(PanelError):
        simulate_dgp(DGPConfig(T=100, variant="bad"))
    with pytest.raises(PanelError):
        simulate_dgp(DGPConfig(T=100, break_fractions=(0.6, 0.4)))
    with pytest.raises(PanelError):
        simulate_dgp(DGPConfig(T=100, phi=np.eye(2) * 1.2))
    with pytest.raises(PanelError):
        simulate_dgp(DGPConfig(T=100, sigma_xi=0.0))
