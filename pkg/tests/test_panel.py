from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from breakscan import (
    BreakSet,
    PanelError,
    SelectionMask,
    TimeSeriesPanel,
    build_scaled_regressors,
    post_lasso_fit,
    segment_ssr,
    validate_panel,
)
from conftest import random_panel


def _panel_with_row_50():
    T = 100
    X = np.zeros((2, T))
    X[:, 49] = (4, 9)
    W = np.zeros((2, T))
    W[:, 49] = (1, 2)
    return TimeSeriesPanel(np.zeros((1, T)), X, W, True, True)


def test_scaling_example():
    z = build_scaled_regressors(_panel_with_row_50(), True).Z[:, 49]
    np.testing.assert_allclose(z, [0.4, 0.9, 0.5, 1, 1, 2], rtol=0, atol=1e-15)


def test_unscaled_example():
    sr = build_scaled_regressors(_panel_with_row_50(), False)
    np.testing.assert_array_equal(sr.Z[:, 49], [4, 9, 50, 1, 1, 2])
    assert not sr.scaling_applied


def test_degenerate_block():
    T = 5
    w = np.arange(T, dtype=float)[None]
    p = TimeSeriesPanel(np.zeros((1, T)), np.zeros((0, T)), w, False, True)
    np.testing.assert_array_equal(build_scaled_regressors(p).Z, np.vstack([np.ones(T), w]))
    assert p.d == 2 and p.regressor_names() == ["const", "w1"]


def test_validate_ok():
    p = random_panel(100, q=2, r=2, s=2)
    assert validate_panel(p) is p
    assert p.d == 2 * (2 + 1 + 1 + 2)


def test_validate_dimension_mismatch():
    rng = np.random.default_rng(0)
    p = TimeSeriesPanel(rng.standard_normal((2, 99)), rng.standard_normal((2, 100)), np.zeros((0, 99)))
    with pytest.raises(PanelError, match="dimension mismatch: X"):
        validate_panel(p)


def test_validate_nonfinite():
    Y = np.zeros((2, 10))
    Y[1, 3] = np.nan
    p = TimeSeriesPanel(Y, np.zeros((1, 10)), np.zeros((0, 10)))
    with pytest.raises(PanelError, match=r"Y at row 2, observation 4"):
        validate_panel(p)


def test_breakset_conventions():
    b = BreakSet([3, 6], 10)
    assert b.regimes() == [(0, 2), (2, 5), (5, 10)]
    assert b.fractions == (0.3, 0.6)
    assert b.min_gap() == 2
    with pytest.raises(PanelError):
        BreakSet([5, 5], 10)
    with pytest.raises(PanelError):
        BreakSet([1], 10)


def test_mask_validation():
    with pytest.raises(PanelError):
        SelectionMask(np.zeros((2, 3), dtype=bool))
    p = random_panel(10)
    assert SelectionMask.full(p).is_full
    with pytest.raises(PanelError):
        SelectionMask(np.ones((1, 4), dtype=bool)).check(p)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), T=st.integers(30, 80), frac=st.floats(0.3, 0.7))
def test_scaling_reparametrization(seed, T, frac):
    p = random_panel(T, q=2, r=2, s=1, seed=seed)
    breaks = BreakSet([int(frac * T)], T)
    scaled = segment_ssr(p, breaks, scaled=True)
    raw = segment_ssr(p, breaks, scaled=False)
    assert scaled.ssr == pytest.approx(raw.ssr, rel=1e-8)
    np.testing.assert_allclose(scaled.fitted, raw.fitted, rtol=1e-8, atol=1e-8 * np.abs(p.Y).max())
    for cs, cr in zip(scaled.coefficients, raw.coefficients):
        np.testing.assert_allclose(cs[:, :2], np.sqrt(T) * cr[:, :2], rtol=1e-8, atol=1e-9)
        np.testing.assert_allclose(cs[:, 2], T * cr[:, 2], rtol=1e-8, atol=1e-9)
        np.testing.assert_allclose(cs[:, 3:], cr[:, 3:], rtol=1e-8, atol=1e-9)
    # back-transformation of the scaled fit
    back = post_lasso_fit(p, breaks, scaled=True)
    for cb, cr in zip(back.coefficients, raw.coefficients):
        np.testing.assert_allclose(cb, cr, rtol=1e-8, atol=1e-9)
