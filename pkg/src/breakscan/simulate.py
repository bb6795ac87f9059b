"""Simulation DGP for multiple common breaks in a cointegrated system.

    Y_t = A_t X_t + delta_t t + mu + B_t w_t + u_t
    X_t = X_{t-1} + xi_t
    w_t = Phi w_{t-1} + e_t

with Gaussian innovations and diagonal covariances.  Regime coefficients
start at ``A_0 = B_0 = 2E``, ``delta_0 = 2`` and grow by ``2c`` per break
on the same entries, where ``E`` is the identity for square blocks.  For
non-square blocks (the three-equation variant) ``E[e, e mod r] = 1``, so
the extra equation loads on the first regressor of each block and every
changing coefficient moves by the same amount.

With ``design="scaled"`` the coefficients multiply the scaled regressors
``T^-1/2 X_t`` and ``t / T`` instead of the levels, which makes breaks in
the trending coefficients far weaker.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

from .panel import BreakSet, PanelError, TimeSeriesPanel

VARIANTS = ("full", "SUR", "q3")

PRESETS = {
    "SB1": (0.5,),
    "SB2": (0.33, 0.67),
    "SB4": (0.2, 0.4, 0.6, 0.8),
    "SB1_EDGE": (0.9,),
}

# T ladders of the published tables
T_LADDER = {
    "SB1": (100, 200, 400, 800),
    "SB2": (150, 300, 600, 1200),
    "SB4": (250, 500, 1000, 2000),
    "SB1_EDGE": (100, 200, 400),
}

MIN_REGIME = 50
BURN_IN = 200


@dataclass(frozen=True)
class DGPConfig:
    T: int
    break_fractions: tuple[float, ...] = (0.5,)
    q: int = 2
    r: int = 2
    s: int = 2
    c: float = 1.0
    variant: str = "full"
    sigma_u: float = 1.0
    sigma_xi: float = 1.0
    sigma_e: float = 1.0
    phi: NDArray[np.float64] | None = field(default=None, compare=False)
    mu: NDArray[np.float64] | None = field(default=None, compare=False)
    seed: int = 0
    design: str = "raw"

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise PanelError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.design not in ("raw", "scaled"):
            raise PanelError(f"design must be 'raw' or 'scaled', got {self.design!r}")
        if self.T < 2 or self.q < 1 or self.r < 0 or self.s < 0:
            raise PanelError("invalid dimensions")
        if self.sigma_u < 0 or self.sigma_xi <= 0 or self.sigma_e <= 0:
            raise PanelError("innovation standard deviations must be positive (sigma_u may be 0)")
        tau = np.asarray(self.break_fractions, dtype=float)
        if tau.size and (np.any(np.diff(tau) <= 0) or tau[0] <= 0 or tau[-1] >= 1):
            raise PanelError(f"break fractions must be strictly increasing in (0, 1): {tau}")
        if self.s and np.max(np.abs(np.linalg.eigvals(self.phi_matrix()))) >= 1:
            raise PanelError("VAR coefficient for w must have spectral radius < 1")

    def phi_matrix(self) -> NDArray[np.float64]:
        if self.phi is None:
            return 0.5 * np.eye(self.s)
        return np.atleast_2d(np.asarray(self.phi, dtype=float))

    def mu_vector(self) -> NDArray[np.float64]:
        if self.mu is None:
            return np.full(self.q, 2.0)
        return np.asarray(self.mu, dtype=float).reshape(self.q)

    def break_indices(self) -> tuple[int, ...]:
        return tuple(int(np.floor(tau * self.T + 0.5)) for tau in self.break_fractions)

    @property
    def has_integrated(self) -> bool:
        return self.variant != "SUR" and self.r > 0


def _loading(q: int, k: int) -> NDArray[np.float64]:
    E = np.zeros((q, k))
    if k:
        for e in range(q):
            E[e, e % k] = 1.0
    return E


def regime_coefficients(config: DGPConfig) -> list[NDArray[np.float64]]:
    """Raw-parameter coefficient matrices, one per regime, in ``Z_t`` order.

    Columns are (x_1..x_r, trend, const, w_1..w_s) for the full and q3
    variants and (const, w_1..w_s) for the SUR variant.
    """
    q, r, s, c = config.q, config.r, config.s, config.c
    EA, EB = _loading(q, r), _loading(q, s)
    one = np.ones(q)
    mu = config.mu_vector()
    out = []
    for i in range(len(config.break_fractions) + 1):
        B = 2 * EB + i * c * 2 * EB
        if config.variant == "SUR":
            out.append(np.column_stack([mu, B]))
        else:
            A = 2 * EA + i * c * 2 * EA
            delta = 2 * one + i * c * 2 * one
            out.append(np.column_stack([A, delta, mu, B]))
    return out


def simulate_dgp(config: DGPConfig):
    """Draw one panel.

    Returns ``(panel, true_breaks, coefficients)`` where ``coefficients`` is
    the list returned by :func:`regime_coefficients`.
    """
    config.validate()
    T, q, r, s = config.T, config.q, config.r, config.s
    rng = np.random.default_rng(config.seed)
    # fixed draw order keeps variants comparable for a given seed
    xi = rng.standard_normal((r, T)) * config.sigma_xi
    e = rng.standard_normal((s, T + BURN_IN)) * config.sigma_e
    u = rng.standard_normal((q, T)) * config.sigma_u

    X = np.cumsum(xi, axis=1)
    Phi = config.phi_matrix()
    W = np.zeros((s, T + BURN_IN))
    for t in range(1, T + BURN_IN):
        W[:, t] = Phi @ W[:, t - 1] + e[:, t]
    W = W[:, BURN_IN:]

    breaks = BreakSet(config.break_indices(), T)
    coefs = regime_coefficients(config)
    t = np.arange(1, T + 1, dtype=float)
    if config.variant == "SUR":
        Zraw = np.vstack([np.ones((1, T)), W])
    else:
        if config.design == "scaled":
            Zraw = np.vstack([X / np.sqrt(T), t[None, :] / T, np.ones((1, T)), W])
        else:
            Zraw = np.vstack([X, t[None, :], np.ones((1, T)), W])
    Y = np.empty((q, T))
    for k, (a, b) in enumerate(breaks.regimes()):
        Y[:, a:b] = coefs[k] @ Zraw[:, a:b]
    Y += u

    if config.variant == "SUR":
        panel = TimeSeriesPanel(Y, np.zeros((0, T)), W, include_trend=False, include_intercept=True)
    else:
        panel = TimeSeriesPanel(Y, X, W, include_trend=True, include_intercept=True)
    return panel, breaks, coefs


def scenario_preset(
    name: str,
    T: int,
    variant: str = "full",
    c: float = 1.0,
    seed: int = 0,
    enforce_min_regime: bool = True,
    **overrides,
) -> DGPConfig:
    """Canonical configuration for a named table row (SB1, SB2, SB4, SB1_EDGE)."""
    if name not in PRESETS:
        raise PanelError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}")
    tau = PRESETS[name]
    q = 3 if variant == "q3" else 2
    config = DGPConfig(T=T, break_fractions=tau, q=q, r=2, s=2, c=c, variant=variant, seed=seed)
    if overrides:
        config = replace(config, **overrides)
    if enforce_min_regime and name != "SB1_EDGE":
        # measured on tau * T, as in the published design (SB2 at T=150 has
        # tau_1 * T = 49.5)
        gaps = np.floor(np.diff([0.0, *config.break_fractions, 1.0]) * T + 0.5 + 1e-9)
        if gaps.min() < MIN_REGIME:
            raise PanelError(
                f"{name} at T={T} leaves a regime of {gaps.min():g} observations (< {MIN_REGIME})"
            )
    config.validate()
    return config
