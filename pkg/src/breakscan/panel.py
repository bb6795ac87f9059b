"""Data model for systems of regression equations with common breaks.

Time indices in the public API are 1-based: a break at index ``t`` means
the next regime starts at observation ``t``.  Arrays are stored with time
along the last axis (``q x T`` responses) to mirror the usual notation;
helpers that need observation-major layouts transpose internally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray


class PanelError(ValueError):
    """Raised for malformed panels, break sets or masks."""


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Observed system: responses ``Y`` (q x T), integrated regressors ``X``
    (r x T, levels), stationary regressors ``W`` (s x T)."""

    Y: NDArray[np.float64]
    X: NDArray[np.float64]
    W: NDArray[np.float64]
    include_trend: bool = True
    include_intercept: bool = True

    def __post_init__(self):
        for name in ("Y", "X", "W"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim == 1:
                arr = arr[None, :] if arr.size else arr.reshape(0, 0)
            if arr.ndim != 2:
                raise PanelError(f"{name} must be two-dimensional, got shape {arr.shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        T = self.Y.shape[1]
        # empty regressor blocks may come in as (0, 0)
        for name in ("X", "W"):
            arr = getattr(self, name)
            if arr.shape[0] == 0 and arr.shape[1] != T:
                empty = np.zeros((0, T))
                empty.setflags(write=False)
                object.__setattr__(self, name, empty)

    @property
    def T(self) -> int:
        return self.Y.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[0]

    @property
    def r(self) -> int:
        return self.X.shape[0]

    @property
    def s(self) -> int:
        return self.W.shape[0]

    @property
    def d_z(self) -> int:
        """Regressors per equation."""
        return self.r + int(self.include_trend) + int(self.include_intercept) + self.s

    @property
    def d(self) -> int:
        """Length of one stacked time-group coefficient vector."""
        return self.q * self.d_z

    def regressor_names(self) -> list[str]:
        names = [f"x{i + 1}" for i in range(self.r)]
        if self.include_trend:
            names.append("trend")
        if self.include_intercept:
            names.append("const")
        names += [f"w{i + 1}" for i in range(self.s)]
        return names

    def slice(self, start: int, stop: int) -> "TimeSeriesPanel":
        """Sub-panel on 0-based observation range ``[start, stop)``.

        The trend keeps counting from 1 inside the slice, so this is meant
        for re-estimation on sub-samples rather than for regime fits.
        """
        return TimeSeriesPanel(
            self.Y[:, start:stop],
            self.X[:, start:stop],
            self.W[:, start:stop],
            self.include_trend,
            self.include_intercept,
        )


@dataclass(frozen=True)
class ScaledRegressors:
    """Regressor rows in the fixed order (integrated, trend, intercept,
    stationary); column ``t`` is ``Z_t``."""

    Z: NDArray[np.float64]
    scaling_applied: bool

    @property
    def rows(self) -> NDArray[np.float64]:
        """Observation-major view, shape ``(T, d_z)``."""
        return self.Z.T


@dataclass(frozen=True)
class BreakSet:
    """Strictly increasing 1-based break indices in ``[2, T]``."""

    indices: tuple[int, ...]
    T: int

    def __init__(self, indices: Sequence[int], T: int):
        idx = tuple(int(i) for i in indices)
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise PanelError(f"break indices must be strictly increasing: {idx}")
        if idx and (idx[0] < 2 or idx[-1] > T):
            raise PanelError(f"break indices must lie in [2, {T}]: {idx}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "T", int(T))

    @property
    def m(self) -> int:
        return len(self.indices)

    @property
    def fractions(self) -> tuple[float, ...]:
        return tuple(i / self.T for i in self.indices)

    def regimes(self) -> list[tuple[int, int]]:
        """0-based half-open observation ranges of the ``m + 1`` regimes."""
        edges = [0] + [i - 1 for i in self.indices] + [self.T]
        return list(zip(edges[:-1], edges[1:]))

    def min_gap(self) -> int:
        return min(b - a for a, b in self.regimes())

    def without(self, index: int) -> "BreakSet":
        return BreakSet([i for i in self.indices if i != index], self.T)

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True)
class SelectionMask:
    """Which coefficients (q x d_z, same row order as ``Z_t``) may break."""

    mask: NDArray[np.bool_]

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.ndim != 2:
            raise PanelError("selection mask must be q x d_z")
        if not m.any():
            raise PanelError("selection mask must allow at least one coefficient to break")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def full(cls, panel: TimeSeriesPanel) -> "SelectionMask":
        return cls(np.ones((panel.q, panel.d_z), dtype=bool))

    @property
    def is_full(self) -> bool:
        return bool(self.mask.all())

    def check(self, panel: TimeSeriesPanel) -> None:
        if self.mask.shape != (panel.q, panel.d_z):
            raise PanelError(
                f"selection mask has shape {self.mask.shape}, expected {(panel.q, panel.d_z)}"
            )


@dataclass
class SegmentedFit:
    """Per-regime least squares fit for a fixed break set.

    ``coefficients[k]`` is the q x d_z coefficient matrix of regime ``k``
    in raw parameterization when ``scaled`` is False and in the scaled
    parameterization otherwise.
    """

    breaks: BreakSet
    coefficients: list[NDArray[np.float64]]
    residuals: NDArray[np.float64]
    ssr: float
    ic: float = float("nan")
    scaled: bool = True
    standard_errors: list[NDArray[np.float64]] | None = None
    fitted: NDArray[np.float64] | None = field(default=None, repr=False)


def validate_panel(panel: TimeSeriesPanel) -> TimeSeriesPanel:
    """Return ``panel`` unchanged if shapes agree and all entries are finite."""
    T = panel.T
    if T < 1:
        raise PanelError("panel must contain at least one observation")
    if panel.q < 1:
        raise PanelError("panel must contain at least one response series")
    for name in ("X", "W"):
        cols = getattr(panel, name).shape[1]
        if cols != T:
            raise PanelError(f"dimension mismatch: {name} has {cols} columns, Y has {T}")
    for name in ("Y", "X", "W"):
        arr = getattr(panel, name)
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            i, t = bad[0]
            raise PanelError(
                f"non-finite value in {name} at row {i + 1}, observation {t + 1}: {arr[i, t]}"
            )
    if panel.d_z == 0:
        raise PanelError("model has no regressors")
    return panel


def build_scaled_regressors(panel: TimeSeriesPanel, apply_scaling: bool = True) -> ScaledRegressors:
    """Stack ``Z_t = (T^-1/2 X_t', T^-1 t, 1, w_t')'`` (or the raw version)."""
    T = panel.T
    t = np.arange(1, T + 1, dtype=float)
    blocks = []
    if panel.r:
        blocks.append(panel.X / np.sqrt(T) if apply_scaling else panel.X)
    if panel.include_trend:
        blocks.append((t / T if apply_scaling else t)[None, :])
    if panel.include_intercept:
        blocks.append(np.ones((1, T)))
    if panel.s:
        blocks.append(panel.W)
    Z = np.vstack(blocks) if blocks else np.zeros((0, T))
    Z.setflags(write=False)
    return ScaledRegressors(Z, apply_scaling)


def scale_factors(panel: TimeSeriesPanel) -> NDArray[np.float64]:
    """Per-regressor factor ``f`` with ``Z_scaled = f * Z_raw`` (row-wise)."""
    T = panel.T
    f = [1 / np.sqrt(T)] * panel.r
    if panel.include_trend:
        f.append(1 / T)
    if panel.include_intercept:
        f.append(1.0)
    f += [1.0] * panel.s
    return np.asarray(f)
