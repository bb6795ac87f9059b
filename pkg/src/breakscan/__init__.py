"""Detection of common structural breaks in systems of regression equations."""

from __future__ import annotations

__version__ = "0.1.0"

from .panel import (
    BreakSet,
    PanelError,
    ScaledRegressors,
    SegmentedFit,
    SelectionMask,
    TimeSeriesPanel,
    build_scaled_regressors,
    validate_panel,
)
from .design import SuffixGram, group_correlations, suffix_gram
from .glasso import FirstStepResult, PathState, group_lars_path, kkt_verify
from .selection import (
    ICConfig,
    backward_eliminate,
    exhaustive_select,
    information_criterion,
    regime_variable_bic,
    segment_ssr,
    two_step,
)
from .postest import BootstrapConfig, dynamic_ols_augment, post_lasso_fit, sieve_bootstrap_se
from .dp import DPConfig, dp_segment, runtime_compare
from .simulate import DGPConfig, scenario_preset, simulate_dgp
from .montecarlo import MCReport, ScenarioConfig, hausdorff_distance, run_scenario

__all__ = [
    "BootstrapConfig", "BreakSet", "DGPConfig", "DPConfig", "FirstStepResult", "ICConfig",
    "MCReport", "PanelError", "PathState", "ScaledRegressors", "ScenarioConfig", "SegmentedFit",
    "SelectionMask", "SuffixGram", "TimeSeriesPanel", "backward_eliminate",
    "build_scaled_regressors", "dp_segment", "dynamic_ols_augment", "exhaustive_select",
    "group_correlations", "group_lars_path", "hausdorff_distance", "information_criterion",
    "kkt_verify", "post_lasso_fit", "regime_variable_bic", "run_scenario", "runtime_compare",
    "scenario_preset", "segment_ssr", "sieve_bootstrap_se", "simulate_dgp", "suffix_gram",
    "two_step", "validate_panel",
]
