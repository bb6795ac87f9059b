"""``breakscan`` command line: fit, simulate, mc, bench.

Options can also come from a flat ``key=value`` file passed with
``--config``; keys are option names with dashes or underscores, and flags
on the command line win over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .dp import runtime_compare
from .glasso import default_h_min, group_lars_path
from .io import parse_mapping, read_fred_csv, read_panel_csv, write_panel_csv
from .montecarlo import ScenarioConfig, run_scenario
from .panel import PanelError, validate_panel
from .postest import BootstrapConfig, dynamic_ols_augment, post_lasso_fit, sieve_bootstrap_se
from .selection import C_HAT, ICConfig, backward_eliminate
from .simulate import scenario_preset, simulate_dgp

SCHEMA_VERSION = 1


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (PanelError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        raise StageError(name, exc) from exc


def read_config_file(path: str | Path) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PanelError(f"{path}, line {n}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_threads(arg: int | None) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("BREAKSCAN_THREADS")
    return max(1, int(env)) if env else 1


def _omega(value: str | None) -> float | str:
    if value is None or value == "auto":
        return "auto"
    return float(value)


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).lower() in ("1", "true", "yes", "on")


# -- fit ---------------------------------------------------------------------


def cmd_fit(args) -> dict:
    timings = {}
    t0 = time.perf_counter()
    if args.fred:
        mapping = _stage("parse", parse_mapping, args.map or "")
        panel, dates = _stage(
            "parse", read_fred_csv, args.input, mapping, args.trend, args.intercept
        )
    else:
        if len(args.input) != 1:
            raise StageError("parse", ValueError("exactly one --input file unless --fred is given"))
        panel, dates = _stage("parse", read_panel_csv, args.input[0], args.trend, args.intercept)
    _stage("validate", validate_panel, panel)
    timings["parse"] = time.perf_counter() - t0

    if args.leads or args.lags:
        t0 = time.perf_counter()
        before = panel.T
        panel = _stage("augment", dynamic_ols_augment, panel, args.leads, args.lags)
        if dates is not None:
            dates = dates[args.lags + 1 : before - args.leads]
        timings["augment"] = time.perf_counter() - t0

    h_min = default_h_min(panel, args.h_min)
    t0 = time.perf_counter()
    first = _stage("first-step", group_lars_path, panel, args.M, h_min, method=args.method)
    timings["first_step"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    config = ICConfig(omega=_omega(args.omega), c_hat=args.c_hat)
    if first.candidates.m:
        sel = _stage("second-step", backward_eliminate, panel, first.candidates, config)
        breaks, trace = sel.breaks, sel.trace
    else:
        breaks, trace = first.candidates, []
    timings["second_step"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    fit = _stage("post-estimation", post_lasso_fit, panel, breaks, scaled=False)
    timings["post_estimation"] = time.perf_counter() - t0
    ses = None
    if args.bootstrap > 0:
        t0 = time.perf_counter()
        ses = _stage(
            "bootstrap", sieve_bootstrap_se, panel, breaks,
            BootstrapConfig(args.bootstrap, "auto" if args.ar_order is None else args.ar_order, args.seed),
        )
        timings["bootstrap"] = time.perf_counter() - t0

    names = panel.regressor_names()
    regimes = []
    for k, (a, b) in enumerate(breaks.regimes()):
        reg = {"start": a + 1, "end": b, "n": b - a}
        if dates is not None:
            reg["start_date"], reg["end_date"] = dates[a], dates[b - 1]
        reg["coefficients"] = {
            f"y{e + 1}": dict(zip(names, map(float, fit.coefficients[k][e]))) for e in range(panel.q)
        }
        if ses is not None:
            reg["standard_errors"] = {
                f"y{e + 1}": dict(zip(names, map(float, ses[k][e]))) for e in range(panel.q)
            }
        regimes.append(reg)
    report = {
        "schema_version": SCHEMA_VERSION,
        "breaks": [
            {"index": i, "fraction": i / panel.T, **({"date": dates[i - 1]} if dates else {})}
            for i in breaks
        ],
        "regimes": regimes,
        "ic_trace": [{"breaks": list(b), "ic": float(v)} for b, v in trace],
        "timings": timings,
        "config_echo": {
            "input": [str(p) for p in args.input], "M": args.M, "h_min": h_min,
            "method": args.method, "omega": args.omega or "auto", "c_hat": args.c_hat,
            "leads": args.leads, "lags": args.lags, "trend": args.trend,
            "intercept": args.intercept, "bootstrap": args.bootstrap, "seed": args.seed,
            "candidates": list(first.candidates), "T": panel.T, "q": panel.q,
            "r": panel.r, "s": panel.s, "version": __version__,
        },
    }
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2))
    plot = Path(args.plot_data) if args.plot_data else out.with_suffix(".plot.csv")
    _write_plot_data(plot, panel, breaks, dates)
    return report


def _write_plot_data(path: Path, panel, breaks, dates) -> None:
    marks = set(breaks.indices)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date" if dates else "t", *[f"y{e + 1}" for e in range(panel.q)], "break"])
        for t in range(panel.T):
            lead = dates[t] if dates else t + 1
            w.writerow([lead, *("%.17g" % v for v in panel.Y[:, t]), int(t + 1 in marks)])


# -- simulate / mc / bench ----------------------------------------------------


def cmd_simulate(args) -> dict:
    cfg = _stage(
        "config", scenario_preset, args.scenario, args.T, variant=args.variant, c=args.c,
        seed=args.seed, design=args.design,
    )
    panel, truth, coefs = simulate_dgp(cfg)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_panel_csv(panel, out)
    meta = {
        "scenario": args.scenario, "T": args.T, "variant": args.variant, "c": args.c,
        "seed": args.seed, "design": args.design, "breaks": list(truth),
        "fractions": list(truth.fractions), "include_trend": panel.include_trend,
        "include_intercept": panel.include_intercept,
        "coefficients": [c.tolist() for c in coefs],
    }
    truth_path = out.with_suffix(".truth.json")
    truth_path.write_text(json.dumps(meta, indent=2))
    return meta


def cmd_mc(args) -> dict:
    cfg = ScenarioConfig(
        scenario=args.scenario, T=args.T, variant=args.variant, c=args.c, reps=args.reps,
        seed=args.seed, M=args.M, h_min=args.h_min,
        ic=ICConfig(omega=_omega(args.omega), c_hat=args.c_hat), method=args.method,
        run_dp=args.dp, design=args.design, workers=resolve_threads(args.threads),
    )
    _stage("config", scenario_preset, args.scenario, args.T, variant=args.variant)
    report = run_scenario(cfg)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.to_json(out)
    report.to_csv(out.with_suffix(".csv"))
    return asdict(report)


def cmd_bench(args) -> list[dict]:
    sizes = _ints(args.T)
    for T in sizes:
        _stage("config", scenario_preset, args.scenario, T, variant=args.variant)
    rows = runtime_compare(args.scenario, sizes, repeats=args.repeats, seed=args.seed, variant=args.variant)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return rows


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="breakscan", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value file with defaults for these options")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None, help="worker cap (env BREAKSCAN_THREADS)")
        sp.add_argument("--output", "-o", required=True)

    def estimator(sp):
        sp.add_argument("--M", type=int, default=None, help="maximum number of first-step candidates")
        sp.add_argument("--h-min", type=int, default=None, help="minimum break distance (at least d+1)")
        sp.add_argument("--omega", default=None, help="IC penalty per break or 'auto'")
        sp.add_argument("--c-hat", type=float, default=C_HAT, help="constant of the automatic penalty")
        sp.add_argument("--method", choices=("refit", "lasso"), default="refit")

    f = sub.add_parser("fit", help="detect breaks in a CSV panel")
    common(f)
    estimator(f)
    f.add_argument("--input", "-i", nargs="+", required=True)
    f.add_argument("--fred", action="store_true", help="inputs are FRED exports; needs --map")
    f.add_argument("--map", help="SERIES=role pairs, e.g. DGS10=y1,DGS5=y2,DGS1=x1")
    f.add_argument("--no-trend", dest="trend", action="store_false")
    f.add_argument("--no-intercept", dest="intercept", action="store_false")
    f.add_argument("--leads", type=int, default=0)
    f.add_argument("--lags", type=int, default=0)
    f.add_argument("--bootstrap", type=int, default=0, help="sieve bootstrap replications (0 = off)")
    f.add_argument("--ar-order", type=int, default=None)
    f.add_argument("--plot-data", default=None)
    f.set_defaults(func=cmd_fit, M=10)

    s = sub.add_parser("simulate", help="write a simulated panel and its truth")
    common(s)
    s.add_argument("--scenario", required=True)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--variant", default="full")
    s.add_argument("--c", type=float, default=1.0)
    s.add_argument("--design", choices=("raw", "scaled"), default="raw")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("mc", help="Monte Carlo cell")
    common(m)
    estimator(m)
    m.add_argument("--scenario", required=True)
    m.add_argument("--T", type=int, required=True)
    m.add_argument("--variant", default="full")
    m.add_argument("--c", type=float, default=1.0)
    m.add_argument("--reps", type=int, default=200)
    m.add_argument("--dp", action="store_true", help="also run the DP baseline with the true m")
    m.add_argument("--design", choices=("raw", "scaled"), default="raw")
    m.set_defaults(func=cmd_mc)

    b = sub.add_parser("bench", help="two-step versus DP wall time")
    common(b)
    b.add_argument("--scenario", default="SB4")
    b.add_argument("--T", default="500,1000,2000", help="comma separated sample sizes")
    b.add_argument("--variant", default="full")
    b.add_argument("--repeats", type=int, default=3)
    b.set_defaults(func=cmd_bench)
    return p


def _apply_config_file(parser, argv):
    """Parse with file values as defaults so explicit flags still win."""
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    if not known.config or known.command not in choices:
        return parser.parse_args(argv)
    values = read_config_file(known.config)
    sub = choices[known.command]
    # keys may be option names (no_trend=true) or destinations (trend=false)
    by_flag = {o.lstrip("-").replace("-", "_"): a for a in sub._actions for o in a.option_strings}
    by_dest = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = by_flag.get(key) or by_dest.get(key)
        if action is None or action.dest in ("help", "config"):
            raise PanelError(f"{known.config}: unknown option {key!r}")
        if action.nargs in ("+", "*"):
            value = raw.split()
        elif isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            value = _bool(raw)
            if key in by_flag and isinstance(action, argparse._StoreFalseAction):
                value = not value
        elif action.type is not None:
            value = action.type(raw)
        else:
            value = raw
        defaults[action.dest] = value
        action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        args.func(args)
    except StageError as exc:
        print(f"breakscan: error {exc}", file=sys.stderr)
        return 1
    except (PanelError, ValueError, OSError) as exc:
        print(f"breakscan: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
