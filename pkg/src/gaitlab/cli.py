"""Command-line front end: ``gaitlab {simulate,predict,sweep,bench}``.

Exit codes: 0 success, 2 configuration error, 3 scenario failure (only with
``--strict``), 4 internal numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .clred import LinearizationConfig, N_PANELS, GL_NODES, walkability, steady_walk
from .errors import (DegenerateConfigurationError, GaitFailure, InvalidImpactError,
                     InvalidLinearizationError)
from .hybrid_sim import (StepRecord, simulate_gait, steady_descriptors,
                         write_trace_csv)
from .scenario import ConfigError, ScenarioConfig, SweepSpec, load_config

log = logging.getLogger("gaitlab")

EXIT_OK, EXIT_CONFIG, EXIT_SCENARIO, EXIT_NUMERIC = 0, 2, 3, 4

SWEEP_TABLES = {
    "period": "sweep_period.csv",
    "thetadot1_minus": "sweep_thetadot1_minus.csv",
    "step_length": "sweep_step_length.csv",
    "speed": "sweep_speed.csv",
}
SWEEP_COLUMNS = ["model", "kappa", "beta", "value", "status"]


class ScenarioFailed(Exception):
    """Raised in ``--strict`` mode when a run does not complete."""


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_steps_csv(path: Path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(StepRecord.FIELDS)
        for rec in records:
            w.writerow([_fmt(v) for v in rec.as_row()])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _verdict(records, failure, n_steps) -> dict:
    return {
        "walkable": failure is None,
        "steps_requested": n_steps,
        "steps_completed": len(records),
        "failure_step": None if failure is None else failure.step,
        "failure_kind": None if failure is None else failure.kind,
    }


def _run_nonlinear(cfg: ScenarioConfig, n_steps: int, keep_traces=False, t_max=None):
    return simulate_gait(cfg.physical, cfg.gait, cfg.sim, cfg.thetadot1_minus, n_steps,
                         schedule=cfg.schedule, keep_traces=keep_traces, t_max=t_max)


def _run_clred(cfg: ScenarioConfig, n_steps: int):
    return walkability(cfg.physical, cfg.gait, cfg.linearization, cfg.thetadot1_minus,
                       terrain=cfg.terrain, schedule=cfg.schedule, n_steps=n_steps,
                       arming_threshold=cfg.sim.arming_threshold)


def cmd_simulate(cfg: ScenarioConfig, out: Path, n_steps: int, strict: bool = False) -> dict:
    """Nonlinear run: ``trace.csv`` (dense samples) and ``steps.csv`` (descriptors)."""
    out.mkdir(parents=True, exist_ok=True)
    t_max = cfg.duration
    if t_max is not None and n_steps > 0:
        # Enough steps to cover the horizon even at the settling time per step.
        n_steps = max(n_steps, int(math.ceil(t_max / cfg.gait.T_set)) + 1)
    run = _run_nonlinear(cfg, n_steps, keep_traces=True, t_max=t_max)
    write_trace_csv(out / "trace.csv", run.traces, t_max=t_max)
    write_steps_csv(out / "steps.csv", run.records)
    summary = {"command": "simulate", "config_sha256": cfg.digest(), "model": "nonlinear",
               **_verdict(run.records, run.failure, n_steps)}
    _write_json(out / "simulate.json", summary)
    if strict and run.failure is not None:
        raise ScenarioFailed(str(run.failure))
    return summary


def cmd_predict(cfg: ScenarioConfig, out: Path, n_steps: int, model: str | None = None,
                strict: bool = False) -> dict:
    """Walkability verdict (``verdict.json``) plus per-step descriptors."""
    out.mkdir(parents=True, exist_ok=True)
    model = model or cfg.model
    results = {}
    if model in ("clred", "both"):
        t0 = time.perf_counter()
        res = _run_clred(cfg, n_steps)
        elapsed = time.perf_counter() - t0
        fail = None if res.walkable else GaitFailure(res.failure_kind, res.failure_step)
        results["clred"] = {**_verdict(res.records, fail, n_steps), "wall_time_s": elapsed}
        write_steps_csv(out / "steps_clred.csv", res.records)
    if model in ("nonlinear", "both"):
        t0 = time.perf_counter()
        run = _run_nonlinear(cfg, n_steps)
        elapsed = time.perf_counter() - t0
        results["nonlinear"] = {**_verdict(run.records, run.failure, n_steps),
                                "wall_time_s": elapsed}
        write_steps_csv(out / "steps_nonlinear.csv", run.records)
    verdict = {
        "command": "predict",
        "config_sha256": cfg.digest(),
        "walkable": all(r["walkable"] for r in results.values()),
        "results": results,
    }
    _write_json(out / "verdict.json", verdict)
    if strict and not verdict["walkable"]:
        raise ScenarioFailed("scenario is not walkable")
    return verdict


def _failure_status(exc) -> str:
    if isinstance(exc, GaitFailure):
        return exc.kind
    if isinstance(exc, InvalidImpactError):
        return "invalid-impact"
    return "invalid-linearization"


def _sweep_clred_curve(args):
    p, gait, kappa, betas, thd0, settle, average = args
    rows = []
    thd = thd0
    for beta in betas:
        g = replace(gait, beta=float(beta))
        try:
            rec = steady_walk(p, g, LinearizationConfig(kappa), thd, settle, average)
        except (GaitFailure, InvalidLinearizationError, InvalidImpactError) as exc:
            status, rec = _failure_status(exc), None
            if thd != thd0:
                # Continuation start failed; retry from the configured start.
                try:
                    rec = steady_walk(p, g, LinearizationConfig(kappa), thd0, settle, average)
                except (GaitFailure, InvalidLinearizationError, InvalidImpactError) as again:
                    status = _failure_status(again)
            if rec is None:
                rows.append((float(beta), None, status))
                thd = thd0
                continue
        rows.append((float(beta), rec, "ok"))
        thd = rec.thetadot1_minus
    return rows


def _sweep_nonlinear_point(args):
    p, gait, sim, beta, thd0, n_steps, window = args
    g = replace(gait, beta=float(beta))
    run = simulate_gait(p, g, sim, thd0, n_steps)
    if run.failure is not None:
        return float(beta), None, run.failure.kind
    return float(beta), steady_descriptors(run.records, window), "ok"


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def cmd_sweep(cfg: ScenarioConfig, out: Path, sweep: SweepSpec | None = None,
              workers: int = 1, model: str | None = None, strict: bool = False) -> dict:
    """Steady descriptors against beta for each kappa, plus nonlinear reference rows."""
    out.mkdir(parents=True, exist_ok=True)
    sweep = sweep or cfg.sweep
    model = model or "both"
    p, gait = cfg.physical, cfg.gait
    rows = []  # (model, kappa, beta, record|None, status)
    if model in ("clred", "both") and sweep.kappas:
        tasks = [(p, gait, k, sweep.betas(), cfg.thetadot1_minus, sweep.settle, sweep.average)
                 for k in sweep.kappas]
        for k, curve in zip(sweep.kappas, _map(_sweep_clred_curve, tasks, workers)):
            rows += [("clred", k, b, rec, st) for b, rec, st in curve]
    if model in ("nonlinear", "both") and sweep.nonlinear:
        tasks = [(p, gait, cfg.sim, b, cfg.thetadot1_minus, sweep.nonlinear_steps,
                  sweep.nonlinear_window) for b in sweep.nonlinear_betas()]
        rows += [("nonlinear", None, b, rec, st)
                 for b, rec, st in _map(_sweep_nonlinear_point, tasks, workers)]

    for attr, name in SWEEP_TABLES.items():
        with open(out / name, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SWEEP_COLUMNS)
            for mdl, k, b, rec, st in rows:
                value = "" if rec is None else _fmt(getattr(rec, attr))
                w.writerow([mdl, "" if k is None else _fmt(k), _fmt(b), value, st])
    failures = sum(1 for r in rows if r[4] != "ok")
    summary = {"command": "sweep", "config_sha256": cfg.digest(), "points": len(rows),
               "failures": failures, "tables": sorted(SWEEP_TABLES.values())}
    _write_json(out / "sweep.json", summary)
    if strict and failures:
        raise ScenarioFailed(f"{failures} sweep points failed")
    return summary


def cmd_bench(cfg: ScenarioConfig, out: Path, n_steps: int = 30, repeats: int = 20) -> dict:
    """Wall-clock of the nonlinear simulation vs. CLRed determination on one scenario."""
    out.mkdir(parents=True, exist_ok=True)
    # Compile the numba kernels outside the timed region.
    _run_nonlinear(replace(cfg, sim=replace(cfg.sim, max_step_duration=cfg.gait.T_set)), 0)
    simulate_gait(cfg.physical, cfg.gait, replace(cfg.sim, max_step_duration=2.0),
                  cfg.thetadot1_minus, 1)
    _run_clred(cfg, 1)

    t0 = time.perf_counter()
    run = _run_nonlinear(cfg, n_steps)
    t_nl = time.perf_counter() - t0

    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = _run_clred(cfg, n_steps)
        times.append(time.perf_counter() - t0)
    t_cl = float(np.median(times))
    digest = cfg.digest()
    fail = None if res.walkable else GaitFailure(res.failure_kind, res.failure_step)
    report = {
        "command": "bench",
        "config_sha256": digest,
        "steps": n_steps,
        "nonlinear": {"config_sha256": digest, "wall_time_s": t_nl,
                      **_verdict(run.records, run.failure, n_steps)},
        "clred": {"config_sha256": digest, "wall_time_s": t_cl, "repeats": repeats,
                  "wall_time_min_s": float(min(times)), **_verdict(res.records, fail, n_steps)},
        "speedup": t_nl / t_cl,
        "settings": {"dt": cfg.sim.dt, "integrator": "rk4+projection",
                     "bisection_tol": cfg.sim.bisection_tol,
                     "quadrature_panels": N_PANELS, "quadrature_nodes": GL_NODES},
    }
    _write_json(out / "bench.json", report)
    return report


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="scenario JSON file (defaults: reference robot)")
        sp.add_argument("--out", help="output directory (else config, else $GAITLAB_OUT)")
        sp.add_argument("--steps", type=int, help="number of steps (overrides config)")
        sp.add_argument("--model", choices=("nonlinear", "clred", "both"))
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--strict", action="store_true",
                        help="exit 3 when the scenario is not walkable")

    for name, helptext in (("simulate", "integrate the nonlinear model and dump traces"),
                           ("predict", "closed-form walkability determination"),
                           ("sweep", "steady descriptors over a beta x kappa grid"),
                           ("bench", "time nonlinear simulation against CLRed prediction")):
        common(sub.add_parser(name, help=helptext))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.steps is not None and args.steps < 0:
            raise ConfigError("--steps must be non-negative")
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        n_steps = cfg.steps if args.steps is None else args.steps
        out = cfg.resolve_output_dir(args.out)
        if args.command == "simulate":
            res = cmd_simulate(cfg, out, n_steps, strict=args.strict)
        elif args.command == "predict":
            res = cmd_predict(cfg, out, n_steps, model=args.model, strict=args.strict)
        elif args.command == "sweep":
            res = cmd_sweep(cfg, out, workers=args.workers, model=args.model, strict=args.strict)
        else:
            res = cmd_bench(cfg, out, n_steps)
    except ConfigError as exc:
        print(f"gaitlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioFailed as exc:
        print(f"gaitlab: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (DegenerateConfigurationError, InvalidLinearizationError, InvalidImpactError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"gaitlab: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps(res, indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
