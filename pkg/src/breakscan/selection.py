"""Second step: prune first-step candidates with an information criterion.

``IC(m, t) = S_T(t_1, ..., t_m) + m * omega_T`` where ``S_T`` is the
segmented least squares SSR summed over all equations.  The penalty either
is given explicitly or follows ``omega_T = c * sigma^2 * d * T^{3/4} log T``
with ``sigma^2`` the residual variance of the model that keeps every
candidate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray

from .glasso import FirstStepResult, group_lars_path
from .panel import (
    BreakSet,
    PanelError,
    SegmentedFit,
    SelectionMask,
    TimeSeriesPanel,
    validate_panel,
)
from .design import regressor_rows

# calibrated on SB1, T=200 (scripts/calibrate_omega.py)
C_HAT = 0.1


class RegimeTooShortError(PanelError):
    pass


class SingularRegimeError(PanelError):
    pass


@dataclass(frozen=True)
class ICConfig:
    omega: Union[float, str] = "auto"
    exhaustive_threshold: int = 12
    c_hat: float = C_HAT
    tie_tol: float = 1e-9

    def __post_init__(self):
        if isinstance(self.omega, str):
            if self.omega != "auto":
                raise ValueError(f"omega must be a positive number or 'auto', got {self.omega!r}")
        elif not self.omega > 0:
            raise ValueError("omega must be positive")
        if self.c_hat <= 0:
            raise ValueError("c_hat must be positive")


def auto_omega(panel: TimeSeriesPanel, sigma2: float, c_hat: float = C_HAT) -> float:
    """``c * sigma^2 * d * T^{3/4} * log T``."""
    T = panel.T
    return float(c_hat * sigma2 * panel.d * T**0.75 * np.log(T))


class _Regimes:
    """Per-regime least squares with a cache keyed by the observation window.

    Without a mask the SSR of a break set is a sum over independent
    regimes, so the second step only ever refits windows it has not seen.
    """

    def __init__(self, panel: TimeSeriesPanel, scaled: bool = True):
        self.panel = panel
        self.Z = regressor_rows(panel, scaled)
        self.Yt = np.ascontiguousarray(panel.Y.T)
        self._cache: dict[tuple[int, int], tuple[NDArray, float]] = {}

    def fit(self, a: int, b: int) -> tuple[NDArray[np.float64], float]:
        key = (a, b)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        n, dz = b - a, self.Z.shape[1]
        if n < dz:
            raise RegimeTooShortError(
                f"regime [{a + 1}, {b}] has {n} observations, fewer than {dz} regressors"
            )
        Zs = self.Z[a:b]
        coef, _, rank, sv = np.linalg.lstsq(Zs, self.Yt[a:b], rcond=None)
        if rank < dz or sv[-1] <= 1e-10 * sv[0]:
            raise SingularRegimeError(f"regressors are collinear in regime [{a + 1}, {b}]")
        resid = self.Yt[a:b] - Zs @ coef
        out = (coef.T, float(np.sum(resid**2)))
        self._cache[key] = out
        return out

    def ssr(self, breaks: tuple[int, ...]) -> float:
        edges = [0] + [i - 1 for i in breaks] + [self.panel.T]
        return sum(self.fit(a, b)[1] for a, b in zip(edges[:-1], edges[1:]))


def _masked_fit(panel, breaks: BreakSet, mask: SelectionMask, Z):
    """Per-equation stacked regression: masked-out coefficients are shared."""
    T, q, dz = panel.T, panel.q, panel.d_z
    regimes = breaks.regimes()
    coefs = [np.zeros((q, dz)) for _ in regimes]
    resid = np.empty((q, T))
    for e in range(q):
        brk = np.flatnonzero(mask.mask[e])
        fix = np.flatnonzero(~mask.mask[e])
        cols = [Z[:, fix]]
        for a, b in regimes:
            D = np.zeros((T, brk.size))
            D[a:b] = Z[a:b, brk]
            cols.append(D)
        X = np.hstack(cols)
        beta, _, rank, _ = np.linalg.lstsq(X, panel.Y[e], rcond=None)
        if rank < X.shape[1]:
            raise SingularRegimeError(f"stacked design for equation {e + 1} is rank deficient")
        resid[e] = panel.Y[e] - X @ beta
        for k in range(len(regimes)):
            coefs[k][e, fix] = beta[: fix.size]
            coefs[k][e, brk] = beta[fix.size + k * brk.size : fix.size + (k + 1) * brk.size]
    return coefs, resid


def segment_ssr(
    panel: TimeSeriesPanel,
    breaks: BreakSet,
    mask: SelectionMask | None = None,
    scaled: bool = True,
) -> SegmentedFit:
    """Least squares fit with coefficients free in every regime.

    Coefficients are in the parameterization of the regressors used
    (``scaled``); see :func:`breakscan.postest.post_lasso_fit` for raw
    coefficients from either version.
    """
    validate_panel(panel)
    if breaks.T != panel.T:
        raise PanelError(f"break set is for T={breaks.T}, panel has T={panel.T}")
    Z = regressor_rows(panel, scaled)
    for a, b in breaks.regimes():
        if b - a < panel.d_z:
            raise RegimeTooShortError(
                f"regime [{a + 1}, {b}] has {b - a} observations, fewer than {panel.d_z} regressors"
            )
    if mask is not None and not mask.is_full:
        mask.check(panel)
        coefs, resid = _masked_fit(panel, breaks, mask, Z)
    else:
        reg = _Regimes(panel, scaled)
        coefs, resid = [], np.empty_like(panel.Y)
        for a, b in breaks.regimes():
            coef, _ = reg.fit(a, b)
            coefs.append(coef)
            resid[:, a:b] = panel.Y[:, a:b] - coef @ Z[a:b].T
    return SegmentedFit(
        breaks=breaks,
        coefficients=coefs,
        residuals=resid,
        ssr=float(np.sum(resid**2)),
        scaled=scaled,
        fitted=panel.Y - resid,
    )


def information_criterion(
    fit: SegmentedFit, config: ICConfig, omega: float | None = None, panel: TimeSeriesPanel | None = None
) -> float:
    """``ssr + m * omega``.

    With ``config.omega == "auto"`` the penalty must be resolved first:
    pass it as ``omega`` or pass ``panel`` to compute it from the residual
    variance of ``fit`` itself.
    """
    m = fit.breaks.m
    if m == 0:
        return fit.ssr
    if omega is None:
        if not isinstance(config.omega, str):
            omega = float(config.omega)
        elif panel is not None:
            omega = auto_omega(panel, fit.ssr / (panel.q * panel.T), config.c_hat)
        else:
            raise ValueError("omega='auto' needs a resolved penalty or the panel")
    return fit.ssr + m * omega


class _Criterion:
    """IC evaluator shared by exhaustive search and backward elimination."""

    def __init__(self, panel, candidates: BreakSet, config: ICConfig, mask=None):
        self.panel = panel
        self.config = config
        self.mask = mask if mask is not None and not mask.is_full else None
        self.reg = _Regimes(panel)
        self._Z = regressor_rows(panel)
        full = self.ssr(candidates.indices)
        self.full_ssr = full
        if isinstance(config.omega, str):
            self.omega = auto_omega(panel, full / (panel.q * panel.T), config.c_hat)
        else:
            self.omega = float(config.omega)

    def ssr(self, breaks: tuple[int, ...]) -> float:
        if self.mask is None:
            return self.reg.ssr(breaks)
        _, resid = _masked_fit(self.panel, BreakSet(breaks, self.panel.T), self.mask, self._Z)
        return float(np.sum(resid**2))

    def __call__(self, breaks: tuple[int, ...]) -> float:
        return self.ssr(breaks) + len(breaks) * self.omega


@dataclass
class SelectionResult:
    breaks: BreakSet
    ic: float
    omega: float
    trace: list[tuple[tuple[int, ...], float]] = field(default_factory=list)


def exhaustive_select(
    panel: TimeSeriesPanel,
    candidates: BreakSet,
    config: ICConfig = ICConfig(),
    mask: SelectionMask | None = None,
) -> SelectionResult:
    """Global IC minimizer over every subset of ``candidates``.

    Subsets are scanned by size and then lexicographically, and a later
    subset replaces the incumbent only if it lowers IC by more than the tie
    tolerance, so ties go to fewer breaks and then to the smallest indices.
    """
    n = candidates.m
    if n > config.exhaustive_threshold:
        raise ValueError(
            f"{n} candidates exceed the exhaustive threshold {config.exhaustive_threshold}; "
            "use backward_eliminate"
        )
    crit = _Criterion(panel, candidates, config, mask)
    best, best_ic = (), crit(())
    trace = [((), best_ic)]
    for k in range(1, n + 1):
        for subset in itertools.combinations(candidates.indices, k):
            ic = crit(subset)
            trace.append((subset, ic))
            if ic < best_ic - config.tie_tol * abs(best_ic):
                best, best_ic = subset, ic
    return SelectionResult(BreakSet(best, panel.T), best_ic, crit.omega, trace)


def backward_eliminate(
    panel: TimeSeriesPanel,
    candidates: BreakSet,
    config: ICConfig = ICConfig(),
    mask: SelectionMask | None = None,
) -> SelectionResult:
    """Drop the most redundant break while that lowers IC.

    ``trace`` lists the break set and IC after every committed removal,
    starting from the full candidate set.
    """
    if candidates.m < 1:
        raise ValueError("backward elimination needs at least one candidate")
    crit = _Criterion(panel, candidates, config, mask)
    current = tuple(candidates.indices)
    ic = crit(current)
    trace = [(current, ic)]
    while current:
        trials = [(crit(tuple(b for b in current if b != drop)), drop) for drop in current]
        # smallest IC; equal values go to the earliest break
        new_ic, drop = min(trials, key=lambda x: (x[0], x[1]))
        if not new_ic < ic - config.tie_tol * abs(ic):
            break
        current = tuple(b for b in current if b != drop)
        ic = new_ic
        trace.append((current, ic))
    return SelectionResult(BreakSet(current, panel.T), ic, crit.omega, trace)


def regime_variable_bic(panel: TimeSeriesPanel, breaks: BreakSet) -> list[SelectionMask]:
    """Backward BIC elimination of regressors within each regime.

    A regressor is dropped from all equations at once.  The intercept is
    never dropped (without an intercept the last regressor is kept).
    """
    validate_panel(panel)
    Z = regressor_rows(panel)
    q, dz = panel.q, panel.d_z
    names = panel.regressor_names()
    keep_always = names.index("const") if "const" in names else None
    out = []
    for a, b in breaks.regimes():
        n = b - a
        if n < dz + 1:
            raise RegimeTooShortError(f"regime [{a + 1}, {b}] is too short for variable selection")
        Zs, Ys = Z[a:b], panel.Y[:, a:b].T
        N = n * q

        def bic(cols):
            coef = np.linalg.lstsq(Zs[:, cols], Ys, rcond=None)[0]
            ssr = float(np.sum((Ys - Zs[:, cols] @ coef) ** 2))
            return N * np.log(max(ssr, 1e-300) / N) + len(cols) * q * np.log(N)

        cols = list(range(dz))
        cur = bic(cols)
        while len(cols) > 1:
            trials = [(bic([c for c in cols if c != drop]), drop) for drop in cols if drop != keep_always]
            if not trials:
                break
            val, drop = min(trials)
            if val >= cur:
                break
            cols.remove(drop)
            cur = val
        mk = np.zeros((q, dz), dtype=bool)
        mk[:, cols] = True
        out.append(SelectionMask(mk))
    return out


@dataclass
class TwoStepResult:
    breaks: BreakSet
    fit: SegmentedFit
    first: FirstStepResult
    selection: SelectionResult


def two_step(
    panel: TimeSeriesPanel,
    M: int,
    h_min: int | None = None,
    config: ICConfig = ICConfig(),
    mask: SelectionMask | None = None,
    method: str = "refit",
    exhaustive: bool = False,
) -> TwoStepResult:
    """First-step candidates followed by IC pruning."""
    first = group_lars_path(panel, M, h_min, mask, method=method)
    if first.candidates.m == 0:
        sel = SelectionResult(first.candidates, float("nan"), float("nan"))
    elif exhaustive and first.candidates.m <= config.exhaustive_threshold:
        sel = exhaustive_select(panel, first.candidates, config, mask)
    else:
        sel = backward_eliminate(panel, first.candidates, config, mask)
    fit = segment_ssr(panel, sel.breaks, mask)
    fit.ic = sel.ic if sel.breaks.m else fit.ssr
    return TwoStepResult(sel.breaks, fit, first, sel)
