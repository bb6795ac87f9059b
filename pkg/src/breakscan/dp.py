"""Exact least squares segmentation by dynamic programming.

Every admissible segment SSR is computed first (one forward cumulative
Gram sweep per start index, batched solves over all end points), then a
Bellman recursion over the number of breaks picks the global minimizer of
``S_T``.  Cost is ``O(T^2 d_z^3)`` time and ``O(T^2)`` memory.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from statistics import median

import numpy as np
from numpy.typing import NDArray

from .design import regressor_rows
from .panel import BreakSet, PanelError, TimeSeriesPanel, validate_panel


@dataclass(frozen=True)
class DPConfig:
    m: int
    min_regime: int

    def validate(self, T: int) -> None:
        if self.m < 1:
            raise PanelError("DP needs m >= 1")
        if self.min_regime < 1:
            raise PanelError("min_regime must be positive")
        if (self.m + 1) * self.min_regime > T:
            raise PanelError(
                f"infeasible: (m+1)*min_regime = {(self.m + 1) * self.min_regime} > T={T}"
            )


def segment_costs(panel: TimeSeriesPanel, min_regime: int) -> NDArray[np.float64]:
    """``C[i, j]`` = SSR of observations ``i..j-1`` (0-based), ``inf`` if
    shorter than ``min_regime`` or rank deficient.  Shape ``(T, T + 1)``."""
    Z = regressor_rows(panel)
    Yt = panel.Y.T
    T, dz = Z.shape
    names = panel.regressor_names()
    # shift trending columns to start at zero inside each window; the
    # intercept absorbs the shift and conditioning improves a lot
    shift_cols = [k for k, nm in enumerate(names) if nm.startswith("x") or nm == "trend"]
    if "const" not in names:
        shift_cols = []
    C = np.full((T, T + 1), np.inf)
    n0 = max(min_regime, dz)
    for i in range(T - n0 + 1):
        Zs = Z[i:].copy()
        if shift_cols:
            Zs[:, shift_cols] -= Z[i, shift_cols]
        Ys = Yt[i:]
        G = np.cumsum(Zs[:, :, None] * Zs[:, None, :], axis=0)[n0 - 1 :]
        B = np.cumsum(Zs[:, :, None] * Ys[:, None, :], axis=0)[n0 - 1 :]
        yy = np.cumsum(np.einsum("te,te->t", Ys, Ys))[n0 - 1 :]
        try:
            sol = np.linalg.solve(G, B)
            explained = np.einsum("nke,nke->n", B, sol)
        except np.linalg.LinAlgError:
            explained = np.full(len(G), np.nan)
            for k in range(len(G)):
                s, _, rank, _ = np.linalg.lstsq(G[k], B[k], rcond=None)
                if rank == dz:
                    explained[k] = np.sum(B[k] * s)
        ssr = np.maximum(yy - explained, 0.0)
        C[i, i + n0 :] = np.where(np.isfinite(ssr), ssr, np.inf)
    return C


def dp_segment(panel: TimeSeriesPanel, config: DPConfig, costs: NDArray | None = None) -> BreakSet:
    """Global SSR minimizer with exactly ``config.m`` breaks.

    Among equal-cost segmentations the one with the earliest breaks wins.
    """
    validate_panel(panel)
    T = panel.T
    config.validate(T)
    C = segment_costs(panel, config.min_regime) if costs is None else costs
    m = config.m
    # F[k, j]: best cost of the first j observations split into k+1 regimes
    F = np.full((m + 1, T + 1), np.inf)
    arg = np.zeros((m + 1, T + 1), dtype=int)
    F[0] = C[0]
    for k in range(1, m + 1):
        for j in range(T + 1):
            cand = F[k - 1, :j] + C[:j, j]
            if cand.size == 0:
                continue
            i = int(np.argmin(cand))
            F[k, j] = cand[i]
            arg[k, j] = i
    if not np.isfinite(F[m, T]):
        raise PanelError("no admissible segmentation (all segment fits rank deficient)")
    cuts = []
    j = T
    for k in range(m, 0, -1):
        j = arg[k, j]
        cuts.append(j)
    return BreakSet(sorted(c + 1 for c in cuts), T)


def runtime_compare(
    scenario: str = "SB4",
    sizes=(500, 1000, 2000),
    repeats: int = 3,
    seed: int = 0,
    variant: str = "full",
    M: int | None = None,
) -> list[dict]:
    """Median wall time of the two-step estimator and of DP per sample size.

    Repeats are interleaved across sizes (all sizes once, then again), so
    slow spells of a shared machine do not land on a single size.
    """
    from .selection import two_step
    from .simulate import scenario_preset, simulate_dgp

    cells = []
    for T in sizes:
        panel, truth, _ = simulate_dgp(scenario_preset(scenario, T, variant=variant, seed=seed))
        h = panel.d + 1
        M_T = M if M is not None else min(10, T // h - 1)
        cells.append((T, panel, truth, h, M_T, [], []))
    for _ in range(repeats):
        for T, panel, truth, h, M_T, t_two, t_dp in cells:
            t0 = time.perf_counter()
            two_step(panel, M_T)
            t_two.append(time.perf_counter() - t0)
            t0 = time.perf_counter()
            dp_segment(panel, DPConfig(truth.m, h))
            t_dp.append(time.perf_counter() - t0)
    rows = []
    for T, _, _, _, _, t_two, t_dp in cells:
        a, b = median(t_two), median(t_dp)
        rows.append({"T": T, "two_step_s": a, "dp_s": b, "ratio": a / b})
    return rows
