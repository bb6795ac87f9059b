"""Replicated scenario runs: pce, conditional break timing, Hausdorff distance."""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dp import DPConfig, dp_segment
from .panel import BreakSet, TimeSeriesPanel
from .selection import ICConfig, two_step
from .simulate import scenario_preset, simulate_dgp


def hausdorff_distance(A: BreakSet, B: BreakSet, relative: bool = False) -> float:
    """``max_{b in B} min_{a in A} |b - a|``; 1 when ``A`` is empty.

    With ``relative`` the distance is measured in fractions of ``T``.
    """
    a = np.asarray(A.indices, dtype=float)
    b = np.asarray(B.indices, dtype=float)
    if a.size == 0:
        return 1.0
    if b.size == 0:
        return 0.0
    if relative:
        a, b = a / A.T, b / B.T
    return float(np.max(np.min(np.abs(b[:, None] - a[None, :]), axis=1)))


def default_M(panel: TimeSeriesPanel, h_min: int, cap: int = 10) -> int:
    """Largest feasible candidate count up to ``cap``."""
    return max(1, min(cap, panel.T // h_min - 1))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    T: int
    variant: str = "full"
    c: float = 1.0
    reps: int = 200
    seed: int = 0
    M: int | None = None
    h_min: int | None = None
    ic: ICConfig = ICConfig()
    method: str = "refit"
    run_dp: bool = False
    design: str = "raw"
    sigma_u: float = 1.0
    workers: int = 1

    @property
    def scenario_id(self) -> str:
        return f"{self.scenario}-{self.variant}-T{self.T}-c{self.c:g}"


@dataclass
class MCReport:
    scenario_id: str
    reps: int
    m0: int
    true_fractions: list[float]
    pce: float
    m_counts: dict[int, int]
    tau_mean: list[float]
    tau_std: list[float]
    hausdorff_mean: float
    runtime_mean: float
    runtime_median: float
    failures: int
    dp_tau_mean: list[float] | None = None
    dp_tau_std: list[float] | None = None
    dp_runtime_mean: float | None = None
    config: dict = field(default_factory=dict)

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(asdict(self), indent=2, default=_jsonable)
        if path is not None:
            Path(path).write_text(text)
        return text

    def csv_row(self) -> dict:
        row = {
            "scenario_id": self.scenario_id,
            "reps": self.reps,
            "m0": self.m0,
            "pce": self.pce,
            "hausdorff_mean": self.hausdorff_mean,
            "runtime_mean": self.runtime_mean,
            "runtime_median": self.runtime_median,
            "failures": self.failures,
        }
        for k, (mu, sd) in enumerate(zip(self.tau_mean, self.tau_std), 1):
            row[f"tau{k}_mean"] = mu
            row[f"tau{k}_std"] = sd
        return row

    def to_csv(self, path: str | Path) -> None:
        row = self.csv_row()
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            w.writeheader()
            w.writerow(row)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def replication_seeds(seed: int, reps: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(reps)]


def _one(config: ScenarioConfig, seed: int) -> dict:
    dgp = scenario_preset(
        config.scenario, config.T, variant=config.variant, c=config.c, seed=seed,
        design=config.design, sigma_u=config.sigma_u,
    )
    panel, truth, _ = simulate_dgp(dgp)
    h = panel.d + 1 if config.h_min is None else config.h_min
    M = config.M if config.M is not None else default_M(panel, h)
    out = {"truth": truth, "breaks": None, "time": np.nan, "dp": None, "dp_time": np.nan}
    t0 = time.perf_counter()
    try:
        res = two_step(panel, M, config.h_min, config.ic, method=config.method)
        out["breaks"] = res.breaks
    except (ValueError, np.linalg.LinAlgError) as exc:
        out["error"] = repr(exc)
    out["time"] = time.perf_counter() - t0
    if config.run_dp:
        t0 = time.perf_counter()
        try:
            out["dp"] = dp_segment(panel, DPConfig(truth.m, panel.d_z + 1))
        except (ValueError, np.linalg.LinAlgError) as exc:
            out["dp_error"] = repr(exc)
        out["dp_time"] = time.perf_counter() - t0
    return out


def run_scenario(config: ScenarioConfig) -> MCReport:
    """Simulate ``reps`` panels and run the two-step estimator on each.

    Replication ``i`` uses the ``i``-th child of ``SeedSequence(seed)``, so
    results do not depend on the worker count.  Estimator errors count as
    replications with the wrong number of breaks.
    """
    if config.reps < 1:
        raise ValueError("reps must be at least 1")
    seeds = replication_seeds(config.seed, config.reps)
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            runs = list(pool.map(lambda s: _one(config, s), seeds))
    else:
        runs = [_one(config, s) for s in seeds]

    truth = runs[0]["truth"]
    m0 = truth.m
    failures = sum(r["breaks"] is None for r in runs)
    m_hat = [r["breaks"].m if r["breaks"] is not None else -1 for r in runs]
    counts: dict[int, int] = {}
    for m in m_hat:
        counts[m] = counts.get(m, 0) + 1
    good = [r["breaks"].fractions for r in runs if r["breaks"] is not None and r["breaks"].m == m0]
    taus = np.array(good).reshape(len(good), m0)
    hd = [
        hausdorff_distance(r["breaks"], r["truth"], relative=True) if r["breaks"] is not None else 1.0
        for r in runs
    ]
    times = np.array([r["time"] for r in runs])
    report = MCReport(
        scenario_id=config.scenario_id,
        reps=config.reps,
        m0=m0,
        true_fractions=list(truth.fractions),
        pce=100.0 * len(good) / config.reps,
        m_counts=dict(sorted(counts.items())),
        tau_mean=taus.mean(axis=0).tolist() if len(good) else [float("nan")] * m0,
        tau_std=taus.std(axis=0).tolist() if len(good) else [float("nan")] * m0,
        hausdorff_mean=float(np.mean(hd)),
        runtime_mean=float(times.mean()),
        runtime_median=float(np.median(times)),
        failures=failures,
        config={k: v for k, v in asdict(config).items()},
    )
    if config.run_dp:
        dp = np.array([r["dp"].fractions for r in runs if r["dp"] is not None]).reshape(-1, m0)
        report.dp_tau_mean = dp.mean(axis=0).tolist()
        report.dp_tau_std = dp.std(axis=0).tolist()
        report.dp_runtime_mean = float(np.nanmean([r["dp_time"] for r in runs]))
    return report
