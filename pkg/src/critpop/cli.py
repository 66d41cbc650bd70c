"""Command-line front end.

    critpop <task> --config <path> --out <dir> [--jobs N] [--seed S]

Tasks: simulate, threshold, tune, couple, experiment. Each run reads one
YAML config, writes time-series CSVs (12 significant digits, up to 1000
checkpoints) and a summary.json (threshold estimates, coupling stats,
experiment verdicts, seeds, the effective config, wall clock) into the
output directory. Exit status: 0 success, 2 verdict FAIL, 1 error.
Files are written atomically (temp file + rename). CRITPOP_SEED is a
fallback seed override when --seed is absent.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from . import coupling, experiments
from .config import TASKS, RunConfig, load_config
from .engines import IntegratorConfig, pdmp_simulate, sde_simulate
from .errors import CritpopError
from .noise import NoiseStream
from .thresholds import (
    ThresholdEstimate,
    boundary_average_threshold,
    closed_form_threshold,
    growth_rate_threshold,
    tune_to_critical,
)

CSV_CHECKPOINTS = 1000


# -- output plumbing -----------------------------------------------------------

def _atomic_write(path: str, text: str):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def write_csv(path: str, names: List[str], rows):
    lines = ["t," + ",".join(names)]
    for t, values in rows:
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in values]))
    _atomic_write(path, "\n".join(lines) + "\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_summary(path: str, payload: dict):
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True,
                                   default=_json_default) + "\n")


class _SeriesRecorder:
    """Samples state values and their running averages at fixed checkpoints."""

    def __init__(self, checkpoints):
        self.checkpoints = np.asarray(checkpoints, dtype=float)
        self.rows = []
        self._integral = None
        self._prev_t = None
        self._prev_v = None
        self._next = 0

    def observe(self, t, x, k=0):
        v = np.atleast_1d(np.asarray(x, dtype=float)).copy()
        if self._integral is None:
            self._integral = np.zeros_like(v)
        if self._prev_t is not None:
            while self._next < len(self.checkpoints) and self.checkpoints[self._next] <= t:
                tc = self.checkpoints[self._next]
                w = (tc - self._prev_t) / (t - self._prev_t) if t > self._prev_t else 1.0
                vc = self._prev_v + w * (v - self._prev_v)
                partial = self._integral + 0.5 * (tc - self._prev_t) * (self._prev_v + vc)
                avg = partial / tc if tc > 0 else vc
                self.rows.append((float(tc), np.concatenate([vc, avg])))
                self._next += 1
            self._integral = self._integral + 0.5 * (t - self._prev_t) * (self._prev_v + v)
        self._prev_t, self._prev_v = t, v


# -- task runners ----------------------------------------------------------------

def _integrator(cfg: RunConfig) -> IntegratorConfig:
    return IntegratorConfig(dt=cfg.dt, horizon=cfg.horizon, burn_in=cfg.burn_in)


def _boundary_names(bs) -> List[str]:
    return ["x"] if bs.dim == 1 else [f"b{i + 1}" for i in range(bs.dim)]


def _simulate_one(cfg: RunConfig, replicate: int):
    model = cfg.model
    icfg = _integrator(cfg)
    rng = NoiseStream(cfg.seed, replicate)
    checkpoints = np.linspace(cfg.horizon / CSV_CHECKPOINTS, cfg.horizon, CSV_CHECKPOINTS)
    rec = _SeriesRecorder(checkpoints)
    system = cfg.options.get("system", "full")
    if system == "boundary":
        bs = model.boundary_system()
        names = _boundary_names(bs)
        if bs.kind == "pdmp":
            run_cfg = icfg if bs.project is None else IntegratorConfig(
                icfg.dt, icfg.horizon, icfg.burn_in, renormalize=True)
            pdmp_simulate(cfg.switching or _single_env(), bs.field, bs.start,
                          cfg.start_env, run_cfg, rng, rec.observe, project=bs.project)
        else:
            run_cfg = icfg if bs.project is None else IntegratorConfig(
                icfg.dt, icfg.horizon, icfg.burn_in, renormalize=True)
            sde_simulate(bs.drift, bs.diffusion, bs.start, run_cfg, rng, rec.observe,
                         noise_dim=bs.noise_dim, project=bs.project,
                         clamp_nonneg=bs.clamp_nonneg)
    elif system == "full":
        names = list(model.state_names)
        x0 = cfg.options.get("start")
        x0 = model.default_interior_start() if x0 is None else np.asarray(x0, dtype=float)
        if model.kind == "pdmp":
            pdmp_simulate(cfg.switching or _single_env(), model.field, x0,
                          cfg.start_env, icfg, rng, rec.observe)
        else:
            sde_simulate(model.drift, model.diffusion, x0, icfg, rng, rec.observe,
                         noise_dim=model.noise_dim, clamp_nonneg=True)
    else:
        raise ValueError(f"task.options.system: expected 'full' or 'boundary', got {system!r}")
    columns = names + [f"avg_{n}" for n in names]
    return columns, rec.rows


def _single_env():
    from .thresholds import SINGLE_ENV
    return SINGLE_ENV


def task_simulate(cfg: RunConfig, out: str, jobs: int) -> dict:
    results = _map(functools.partial(_simulate_one, cfg), range(cfg.replicates), jobs)
    finals = []
    for r, (columns, rows) in enumerate(results):
        write_csv(os.path.join(out, f"series_{r:03d}.csv"), columns, rows)
        finals.append({name: rows[-1][1][i] for i, name in enumerate(columns)})
    return {"replicates": cfg.replicates, "final_row": finals,
            "csv_files": [f"series_{r:03d}.csv" for r in range(cfg.replicates)]}


def task_threshold(cfg: RunConfig, out: str, jobs: int) -> dict:
    model, Q = cfg.model, cfg.switching
    icfg = _integrator(cfg)
    rng = NoiseStream(cfg.seed)
    methods = cfg.options.get("methods")
    if methods is None:
        methods = ["closed-form", "boundary-average"]
        if model.linearized_system() is not None:
            methods.append("log-growth")
    elif isinstance(methods, str):
        methods = [methods]
    estimates = []
    for i, method in enumerate(methods):
        if method == "closed-form":
            est = closed_form_threshold(model, Q)
            if est is None:
                continue
        elif method == "boundary-average":
            est = boundary_average_threshold(model, Q, icfg, rng.spawn(i))
        elif method == "log-growth":
            est = growth_rate_threshold(model, Q, icfg, rng.spawn(i))
        else:
            raise ValueError(f"task.options.methods: unknown method {method!r}")
        estimates.append(est.to_dict())
    return {"estimates": estimates}


def task_tune(cfg: RunConfig, out: str, jobs: int) -> dict:
    opts = cfg.options
    for key in ("parameter", "bracket"):
        if key not in opts:
            raise ValueError(f"task.options.{key}: required for tune")
    tuning = tune_to_critical(
        cfg.model, opts["parameter"], tuple(opts["bracket"]),
        float(opts.get("tolerance", 1e-6)), _integrator(cfg), NoiseStream(cfg.seed),
        Q=cfg.switching, estimator=opts.get("estimator", "auto"),
    )
    return {
        "parameter": tuning.parameter,
        "bracket": list(tuning.bracket),
        "value": tuning.value,
        "residual": tuning.residual.to_dict(),
        "n_evals": tuning.n_evals,
    }


def _couple_one(cfg: RunConfig, replicate: int):
    fn = coupling.COUPLINGS[cfg.model_id]
    rng = NoiseStream(cfg.seed, replicate)
    icfg = _integrator(cfg)
    if cfg.model_id in ("sis", "seir"):
        run = fn(cfg.model, cfg.switching or _single_env(), icfg, rng)
    else:
        run = fn(cfg.model, icfg, rng)
    return run.to_dict()


def task_couple(cfg: RunConfig, out: str, jobs: int) -> dict:
    if cfg.model_id not in coupling.COUPLINGS:
        raise ValueError(f"no coupling defined for model {cfg.model_id!r}")
    runs = list(_map(functools.partial(_couple_one, cfg), range(cfg.replicates), jobs))
    return {
        "runs": runs,
        "total_violations": int(sum(r["violations"] for r in runs)),
        "worst_violation": max(r["worst_violation"] for r in runs),
    }


def task_experiment(cfg: RunConfig, out: str, jobs: int) -> dict:
    opts = cfg.options
    kind = opts.get("kind")
    if kind not in experiments.EXPERIMENTS:
        raise ValueError(
            f"task.options.kind: expected one of {sorted(experiments.EXPERIMENTS)}, got {kind!r}")
    seeds = [cfg.seed + i for i in range(cfg.replicates)]
    threshold = None
    if "threshold" in opts:
        t = opts["threshold"]
        threshold = ThresholdEstimate(float(t["value"]), float(t.get("se", 0.0)),
                                      t.get("method", "provided"), cfg.horizon, cfg.dt)
    kwargs = {}
    if kind == "critical":
        for key in ("ceiling", "tolerance", "companion_rtol", "trend_fraction"):
            if key in opts:
                kwargs[key] = float(opts[key])
    if kind == "persistent":
        for key in ("floor", "stability_rtol", "trend_fraction"):
            if key in opts:
                kwargs[key] = float(opts[key])
    run = experiments.EXPERIMENTS[kind]
    report = run(cfg.model, _integrator(cfg), seeds, Q=cfg.switching,
                 threshold=threshold, **kwargs)
    for i, seed in enumerate(report.seeds):
        names = ["avg_extinction"]
        cols = [np.asarray(report.extinction_avg[i])]
        if report.companion_avg is not None:
            names.append("avg_companion")
            cols.append(np.asarray(report.companion_avg[i]))
        rows = [(t, [c[j] for c in cols]) for j, t in enumerate(report.checkpoints)]
        write_csv(os.path.join(out, f"seed_{seed}.csv"), names, rows)
    return {"report": report.to_dict(), "verdict": report.verdict}


TASK_RUNNERS = {
    "simulate": task_simulate,
    "threshold": task_threshold,
    "tune": task_tune,
    "couple": task_couple,
    "experiment": task_experiment,
}


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critpop",
                                     description="persistence/extinction toolkit")
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        p = sub.add_parser(task)
        p.add_argument("--config", required=True, help="path to the YAML config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="max concurrent replicates")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (also: CRITPOP_SEED)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.monotonic()
    try:
        cfg = load_config(args.config)
        if cfg.task is not None and cfg.task != args.task:
            raise ValueError(f"config declares task {cfg.task!r} but {args.task!r} was requested")
        seed = args.seed
        if seed is None and os.environ.get("CRITPOP_SEED"):
            seed = int(os.environ["CRITPOP_SEED"])
        if seed is not None:
            cfg.seed = seed
        os.makedirs(args.out, exist_ok=True)
        result = TASK_RUNNERS[args.task](cfg, args.out, args.jobs)
    except (CritpopError, ValueError, OSError, KeyError) as exc:
        print(f"error [{type(exc).__module__}.{type(exc).__name__}] "
              f"in task {args.task!r}: {exc}", file=sys.stderr)
        return 1
    summary = {
        "task": args.task,
        "effective_config": cfg.effective(),
        "seed": cfg.seed,
        "result": result,
        "wall_clock_seconds": time.monotonic() - started,
    }
    write_summary(os.path.join(args.out, "summary.json"), summary)
    verdict = result.get("verdict")
    return 2 if verdict == experiments.FAIL else 0


if __name__ == "__main__":
    sys.exit(main())
