"""Kernels over the implicit block lower-triangular break design.

Group ``j`` (1-based) of the stacked design is nonzero only for rows
``t >= j``, where it equals ``Z_t' (x) I_q``.  Every quantity the path
algorithm needs is therefore a suffix sum over observations, and one
backward pass serves all ``T`` groups.  The ``Tq x Td`` matrix itself is
never formed.

Group vectors are ordered equation-major: the q x d_z matrix of a group is
flattened row by row.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .panel import PanelError, SelectionMask, TimeSeriesPanel, build_scaled_regressors


def regressor_rows(panel: TimeSeriesPanel, scaled: bool = True) -> NDArray[np.float64]:
    """Regressors as a ``(T, d_z)`` array."""
    return np.ascontiguousarray(build_scaled_regressors(panel, scaled).Z.T)


def _suffix_sum(a: NDArray[np.float64], compensated: bool = False) -> NDArray[np.float64]:
    """Reverse cumulative sum along axis 0."""
    if not compensated:
        return np.cumsum(a[::-1], axis=0)[::-1]
    out = np.empty_like(a)
    total = np.zeros(a.shape[1:])
    carry = np.zeros(a.shape[1:])
    for t in range(a.shape[0] - 1, -1, -1):
        y = a[t] - carry
        s = total + y
        carry = (s - total) - y
        total = s
        out[t] = total
    return out


def group_correlations(
    panel: TimeSeriesPanel,
    residuals: NDArray[np.float64],
    mask: SelectionMask | None = None,
    Z: NDArray[np.float64] | None = None,
    compensated: bool = False,
) -> NDArray[np.float64]:
    """Correlation of every time group with ``residuals`` (q x T).

    Row ``j - 1`` holds ``sum_{t >= j} vec(u_t Z_t')``, i.e. minus one half
    of the gradient of the squared loss with respect to group ``j``.  With a
    mask, coordinates that may not break are zeroed for groups ``j >= 2``;
    the baseline group always carries every coefficient.
    """
    R = np.asarray(residuals, dtype=float)
    if R.shape != (panel.q, panel.T):
        raise PanelError(f"residuals have shape {R.shape}, expected {(panel.q, panel.T)}")
    if Z is None:
        Z = regressor_rows(panel)
    T, dz = Z.shape
    outer = R.T[:, :, None] * Z[:, None, :]
    corr = _suffix_sum(outer, compensated).reshape(T, panel.q * dz)
    if mask is not None and not mask.is_full:
        mask.check(panel)
        corr[1:, ~mask.mask.ravel()] = 0.0
    return corr


class SuffixGram:
    """Cached ``G(k) = sum_{t >= k} Z_t Z_t'`` for every 1-based ``k``."""

    def __init__(self, Z: NDArray[np.float64], compensated: bool = False):
        Z = np.asarray(Z, dtype=float)
        self.T, self.d_z = Z.shape
        self._G = _suffix_sum(Z[:, :, None] * Z[:, None, :], compensated)

    @classmethod
    def from_panel(cls, panel: TimeSeriesPanel, scaled: bool = True) -> "SuffixGram":
        return cls(regressor_rows(panel, scaled))

    def __call__(self, k: int) -> NDArray[np.float64]:
        if not 1 <= k <= self.T:
            raise PanelError(f"suffix index {k} outside [1, {self.T}]")
        return self._G[k - 1]

    @property
    def stack(self) -> NDArray[np.float64]:
        """All suffix Grams, shape ``(T, d_z, d_z)``; entry ``k-1`` is G(k)."""
        return self._G


def suffix_gram(panel: TimeSeriesPanel, k: int) -> NDArray[np.float64]:
    """``sum_{t=k}^T Z_t Z_t'`` for one ``k``; use :class:`SuffixGram` for sweeps."""
    if not 1 <= k <= panel.T:
        raise PanelError(f"suffix index {k} outside [1, {panel.T}]")
    Z = regressor_rows(panel)[k - 1 :]
    return Z.T @ Z


def cumulative_fit(
    theta: NDArray[np.float64], Z: NDArray[np.float64], q: int
) -> NDArray[np.float64]:
    """Fitted values ``q x T`` for group coefficients ``theta`` (T x d).

    The coefficient in force at ``t`` is the running sum of groups ``1..t``.
    """
    T, dz = Z.shape
    coef = np.cumsum(theta.reshape(T, q, dz), axis=0)
    return np.einsum("tek,tk->et", coef, Z)
