"""Post-selection estimation: regime OLS, dynamic OLS leads/lags and sieve
bootstrap standard errors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import NDArray
from scipy.signal import lfilter

from .design import regressor_rows
from .panel import (
    BreakSet,
    PanelError,
    SegmentedFit,
    TimeSeriesPanel,
    scale_factors,
    validate_panel,
)
from .selection import segment_ssr


def post_lasso_fit(panel: TimeSeriesPanel, breaks: BreakSet, scaled: bool = False) -> SegmentedFit:
    """Per-regime OLS; coefficients always in the raw parameterization.

    ``scaled`` only selects the regressors used for estimation.  Scaled
    estimates are mapped back with the scaling factors, so both versions
    describe the same fitted values.
    """
    fit = segment_ssr(panel, breaks, scaled=scaled)
    if scaled:
        f = scale_factors(panel)
        fit.coefficients = [c * f[None, :] for c in fit.coefficients]
    fit.scaled = scaled
    return fit


def dynamic_ols_augment(panel: TimeSeriesPanel, leads: int, lags: int) -> TimeSeriesPanel:
    """Append ``Delta X_{t+j}``, ``j = -lags..leads``, to the stationary block.

    The first difference costs one observation and each lead and lag one
    more, so the sample shrinks by ``leads + lags + 1``.  New columns are
    ordered by ``j`` and then by regressor.
    """
    validate_panel(panel)
    if leads < 0 or lags < 0:
        raise ValueError("leads and lags must be nonnegative")
    T = panel.T
    if T <= leads + lags + 1:
        raise PanelError(f"T={T} is too small for {leads} leads and {lags} lags")
    if panel.r == 0:
        raise PanelError("dynamic OLS needs integrated regressors")
    dX = np.diff(panel.X, axis=1)  # column k is Delta X at observation k + 1 (0-based)
    start, stop = lags + 1, T - leads  # kept observations, 0-based half-open
    blocks = [dX[:, start + j - 1 : stop + j - 1] for j in range(-lags, leads + 1)]
    W = np.vstack([panel.W[:, start:stop], *blocks])
    return TimeSeriesPanel(
        panel.Y[:, start:stop],
        panel.X[:, start:stop],
        W,
        panel.include_trend,
        panel.include_intercept,
    )


@dataclass(frozen=True)
class BootstrapConfig:
    replications: int = 600
    ar_order: Union[int, str] = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if isinstance(self.ar_order, str):
            if self.ar_order != "auto":
                raise ValueError("ar_order must be a nonnegative integer or 'auto'")
        elif self.ar_order < 0:
            raise ValueError("ar_order must be nonnegative")


def _ar_fit(u: NDArray[np.float64], p: int, start: int) -> tuple[NDArray, NDArray]:
    """OLS AR(p) without intercept on ``u[start:]``; returns (phi, innovations)."""
    n = u.size
    if p == 0:
        return np.zeros(0), u[start:].copy()
    lagged = np.column_stack([u[start - k : n - k] for k in range(1, p + 1)])
    phi = np.linalg.lstsq(lagged, u[start:], rcond=None)[0]
    return phi, u[start:] - lagged @ phi


def _ar_order(u: NDArray[np.float64], cap: int) -> int:
    """AIC choice on a common estimation sample."""
    best, best_aic = 0, np.inf
    for p in range(cap + 1):
        _, eps = _ar_fit(u, p, cap)
        s2 = float(np.mean(eps**2))
        if s2 <= 0:
            return p
        aic = eps.size * np.log(s2) + 2 * p
        if aic < best_aic - 1e-12:
            best, best_aic = p, aic
    return best


def _regime_sieve(resid: NDArray[np.float64], order) -> tuple[list[NDArray], NDArray, int]:
    q, n = resid.shape
    cap = int(np.floor(n ** (1 / 3)))
    if order == "auto":
        orders = [_ar_order(resid[e], cap) for e in range(q)]
    else:
        orders = [int(order)] * q
    p = max(orders)
    if n < 5 * (p + 1):
        raise PanelError(f"regime of {n} observations is shorter than 5*(p+1) = {5 * (p + 1)}")
    phis, eps = [], []
    for e in range(q):
        phi, inn = _ar_fit(resid[e], orders[e], p)
        phis.append(phi)
        eps.append(inn)
    eps = np.array(eps)
    eps -= eps.mean(axis=1, keepdims=True)
    return phis, eps, p


def _simulate_errors(children, phis, eps, n, burn):
    """AR recursions for all replications at once; one child stream each."""
    draws = np.array([np.random.default_rng(c).integers(0, eps.shape[1], size=n + burn) for c in children])
    innov = eps[:, draws]  # q x B x (n + burn), same time index for every equation
    u = np.empty_like(innov)
    for e, phi in enumerate(phis):
        u[e] = lfilter([1.0], np.concatenate([[1.0], -phi]), innov[e], axis=-1)
    return u[:, :, burn:].transpose(1, 0, 2)  # B x q x n


def sieve_bootstrap_se(
    panel: TimeSeriesPanel,
    breaks: BreakSet,
    config: BootstrapConfig = BootstrapConfig(),
    burn_in: int = 100,
) -> list[NDArray[np.float64]]:
    """Per-regime standard errors of the raw-parameter coefficients.

    Regressors are held fixed.  In each regime an AR sieve is fitted to
    every equation's OLS residuals, the centred innovation vectors are
    resampled with replacement (jointly across equations), and the
    coefficients are re-estimated on ``fitted + u*``.  Regimes use
    independent child streams of ``config.seed``.
    """
    fit = segment_ssr(panel, breaks, scaled=True)
    Z = regressor_rows(panel, scaled=True)
    f = scale_factors(panel)
    regimes = breaks.regimes()
    streams = np.random.SeedSequence(config.seed).spawn(len(regimes))
    out = []
    for (a, b), coef, ss in zip(regimes, fit.coefficients, streams):
        resid = fit.residuals[:, a:b]
        Zs = Z[a:b]
        fitted = coef @ Zs.T
        phis, eps, _ = _regime_sieve(resid, config.ar_order)
        # an exact fit leaves only round-off
        if np.max(np.abs(eps), initial=0.0) <= 1e-12 * max(np.max(np.abs(fitted)), 1e-300):
            out.append(np.zeros_like(coef))
            continue
        proj = np.linalg.pinv(Zs).T  # coef* = Y* @ proj
        ustar = _simulate_errors(ss.spawn(config.replications), phis, eps, b - a, burn_in)
        draws = ((fitted[None] + ustar) @ proj) * f[None, None, :]
        out.append(draws.std(axis=0, ddof=1) if len(draws) > 1 else np.zeros_like(coef))
    return out
