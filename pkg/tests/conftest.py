from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from breakscan import TimeSeriesPanel  # noqa: E402


def random_panel(T, q=2, r=1, s=1, trend=True, intercept=True, seed=0):
    rng = np.random.default_rng(seed)
    X = np.cumsum(rng.standard_normal((r, T)), axis=1)
    W = rng.standard_normal((s, T))
    Y = rng.standard_normal((q, T))
    return TimeSeriesPanel(Y, X, W, trend, intercept)


@pytest.fixture
def panel20():
    return random_panel(20, seed=1)


def kkt_toy(seed, T=40):
    """q=1, one stationary regressor, no deterministic terms, one break."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((1, T))
    b = rng.integers(10, 30)
    coef = np.where(np.arange(T) < b - 1, 1.0, 3.0)
    y = coef * w[0] + 0.5 * rng.standard_normal(T)
    return TimeSeriesPanel(y[None], np.zeros((0, T)), w, include_trend=False, include_intercept=False)


def kkt_toy_check(seed, T=40, M=4):
    """Exact path knots vs coordinate descent on the dense design.

    Returns (max coefficient difference, max KKT violation) over all knots.
    """
    from breakscan import group_lars_path, kkt_verify
    from oracles import dense_design, lasso_cd, stacked_y

    p = kkt_toy(seed, T)
    res = group_lars_path(p, M, h_min=1, method="lasso", keep_path=True)
    X, y = dense_design(p), stacked_y(p)
    trimmed = res.state.trimmed
    free = [j for j in range(T) if (j + 1) not in trimmed]
    pen = [j != 0 for j in free]
    prev, worst_diff, worst_kkt = None, 0.0, -np.inf
    for lam, theta in zip(res.lambda_trace, res.thetas[1:]):
        b = lasso_cd(X, y, free, lam, pen, theta0=prev)
        prev = b
        worst_diff = max(worst_diff, float(np.abs(b - theta.ravel()).max()))
        rep = kkt_verify(p, b.reshape(T, 1), lam, 1e-6, exclude=trimmed, penalize_baseline=False)
        worst_kkt = max(worst_kkt, rep.max_violation)
        rep = kkt_verify(p, theta, lam, 1e-6, exclude=trimmed, penalize_baseline=False)
        worst_kkt = max(worst_kkt, rep.max_violation)
    return worst_diff, worst_kkt
