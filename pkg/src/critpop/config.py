"""YAML run configs: one file describes one task on one model.

Layout (all rates are per unit time):

    model:
      id: sirs            # sirs | rma | patchy | sis | seir
      params: {...}       # per-model dataclass fields
    switching:            # only for switched models with several environments
      rates: [[-1, 1], [1, -1]]
      start: 0
    sim:
      dt: 0.01
      horizon: 1000
      burn_in: 100        # default: 10% of horizon
      replicates: 10      # default: 1
      seed: 12345         # default: 0
    task:                 # optional; the CLI subcommand may also pick the task
      kind: simulate      # simulate | threshold | tune | couple | experiment
      options: {...}

Validation collects every violation before failing, so a bad config is
reported in one round trip.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from .errors import CritpopError, ParseError, SchemaError
from .models import MODEL_CLASSES, build_model
from .switching import RateMatrix, validate_rate_matrix

TASKS = ("simulate", "threshold", "tune", "couple", "experiment")


@dataclass
class RunConfig:
    model_id: str
    params: dict
    model: object
    switching: Optional[RateMatrix]
    start_env: int
    dt: float
    horizon: float
    burn_in: float
    replicates: int
    seed: int
    task: Optional[str]
    options: dict

    def effective(self) -> dict:
        """The config with every default filled in, for echoing into outputs."""
        out = {
            "model": {"id": self.model_id, "params": self.params},
            "sim": {
                "dt": self.dt,
                "horizon": self.horizon,
                "burn_in": self.burn_in,
                "replicates": self.replicates,
                "seed": self.seed,
            },
        }
        if self.switching is not None:
            out["switching"] = {"rates": self.switching.q.tolist(), "start": self.start_env}
        if self.task is not None:
            out["task"] = {"kind": self.task, "options": self.options}
        return out


def _get_mapping(doc, key, violations, required=True):
    block = doc.get(key)
    if block is None:
        if required:
            violations.append(f"{key}: missing section")
        return {}
    if not isinstance(block, dict):
        violations.append(f"{key}: must be a mapping")
        return {}
    return block


def _number(block, section, key, violations, default=None, positive=False, minimum=None):
    value = block.get(key, default)
    if value is None:
        violations.append(f"{section}.{key}: missing")
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        violations.append(f"{section}.{key}: must be a number, got {value!r}")
        return None
    value = float(value)
    if positive and value <= 0:
        violations.append(f"{section}.{key} must be > 0")
        return None
    if minimum is not None and value < minimum:
        violations.append(f"{section}.{key} must be >= {minimum}")
        return None
    return value


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML config document.

    Raises ParseError for malformed YAML (with the line when available)
    and SchemaError listing every violation found.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ParseError(f"malformed config{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("config must be a mapping at the top level")

    violations = []
    model_block = _get_mapping(doc, "model", violations)
    model_id = model_block.get("id")
    params = model_block.get("params")
    model = None
    if model_id not in MODEL_CLASSES:
        violations.append(f"model.id: expected one of {sorted(MODEL_CLASSES)}, got {model_id!r}")
    elif not isinstance(params, dict):
        violations.append("model.params: must be a mapping")
    else:
        try:
            model = build_model(model_id, params)
        except (CritpopError, ValueError, TypeError) as exc:
            violations.append(f"model.params: {exc}")

    sim = _get_mapping(doc, "sim", violations)
    dt = _number(sim, "sim", "dt", violations, positive=True)
    horizon = _number(sim, "sim", "horizon", violations, positive=True)
    burn_in = _number(sim, "sim", "burn_in", violations,
                      default=0.1 * horizon if horizon else 0.0, minimum=0.0)
    if None not in (burn_in, horizon) and burn_in >= horizon:
        violations.append("sim.burn_in must be < sim.horizon")
    if None not in (dt, horizon) and dt > horizon / 100:
        violations.append("sim.dt must be <= sim.horizon / 100")
    replicates = sim.get("replicates", 1)
    if not isinstance(replicates, int) or isinstance(replicates, bool) or replicates < 1:
        violations.append(f"sim.replicates: must be a positive integer, got {replicates!r}")
        replicates = 1
    seed = sim.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        violations.append(f"sim.seed: must be an integer, got {seed!r}")
        seed = 0

    switching = None
    start_env = 0
    sw = doc.get("switching")
    if sw is not None:
        sw = _get_mapping(doc, "switching", violations)
        rates = sw.get("rates")
        if rates is None:
            violations.append("switching.rates: missing")
        else:
            try:
                switching = validate_rate_matrix(np.asarray(rates, dtype=float))
            except (CritpopError, ValueError) as exc:
                violations.append(f"switching.rates: {exc}")
        start_env = sw.get("start", 0)
        if not isinstance(start_env, int) or isinstance(start_env, bool) or start_env < 0:
            violations.append(f"switching.start: must be a nonnegative integer, got {start_env!r}")
            start_env = 0
        elif switching is not None and start_env >= switching.n:
            violations.append(f"switching.start: {start_env} outside [0, {switching.n})")
    if model is not None:
        n_env = model.n_env
        if n_env > 1 and switching is None:
            violations.append(f"switching: required, model {model_id!r} has {n_env} environments")
        if switching is not None and switching.n != n_env:
            violations.append(
                f"switching.rates: {switching.n} states but the model has {n_env} environments")

    task = None
    options = {}
    tk = doc.get("task")
    if tk is not None:
        tk = _get_mapping(doc, "task", violations)
        task = tk.get("kind")
        if task is not None and task not in TASKS:
            violations.append(f"task.kind: expected one of {TASKS}, got {task!r}")
        options = tk.get("options", {})
        if not isinstance(options, dict):
            violations.append("task.options: must be a mapping")
            options = {}

    known = {"model", "switching", "sim", "task"}
    for key in doc:
        if key not in known:
            violations.append(f"{key}: unknown top-level section")

    if violations:
        raise SchemaError(violations)
    return RunConfig(
        model_id=model_id, params=dict(params), model=model,
        switching=switching, start_env=start_env,
        dt=dt, horizon=horizon, burn_in=burn_in,
        replicates=replicates, seed=seed, task=task, options=dict(options),
    )


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
