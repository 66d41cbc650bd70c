"""Invasion-rate estimators and tuning to the critical point.

Three routes to the threshold whose sign separates persistence from
extinction: a closed form where one exists, the time average of -H along
the boundary process, and the log-growth rate of the linearization at the
extinction set. The estimators deliberately share nothing beyond the
engines, so their agreement is a meaningful cross-check.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engines import IntegratorConfig, pdmp_simulate, sde_simulate
from .errors import BudgetExhausted, NoSignChange
from .models.base import BoundarySystem, LinearizedSystem
from .noise import NoiseStream
from .occupation import BatchMeans, log_growth
from .switching import RateMatrix, stationary_law, validate_rate_matrix

SINGLE_ENV = validate_rate_matrix([[0.0]])


@dataclass(frozen=True)
class ThresholdEstimate:
    value: float
    se: float
    method: str  # closed-form | boundary-average | log-growth | interior-average
    horizon: float
    dt: float
    quantity: str = "invasion-rate"

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class CriticalTuning:
    parameter: str
    bracket: tuple
    value: float
    residual: ThresholdEstimate
    n_evals: int


def _chain(model, Q: Optional[RateMatrix]) -> RateMatrix:
    if Q is None:
        if model.n_env != 1:
            raise ValueError("model has several environments; a rate matrix is required")
        return SINGLE_ENV
    if Q.n != model.n_env:
        raise ValueError(f"rate matrix has {Q.n} states, model has {model.n_env} environments")
    return Q


def _run_boundary(bs: BoundarySystem, Q, cfg: IntegratorConfig, rng, observer):
    if bs.project is not None and not cfg.renormalize:
        cfg = dataclasses.replace(cfg, renormalize=True)
    if bs.kind == "pdmp":
        pdmp_simulate(Q, bs.field, bs.start, 0, cfg, rng, observer, project=bs.project)
    else:
        sde_simulate(bs.drift, bs.diffusion, bs.start, cfg, rng, observer,
                     noise_dim=bs.noise_dim, project=bs.project,
                     clamp_nonneg=bs.clamp_nonneg)


def closed_form_threshold(model, Q: Optional[RateMatrix] = None) -> Optional[ThresholdEstimate]:
    """Exact threshold where the model admits one; None otherwise.

    For the prey-predator model the closed form is the boundary stationary
    prey mean (the invasion rate itself has no closed form there).
    """
    if model.model_id == "rma":
        return ThresholdEstimate(model.boundary_mean(), 0.0, "closed-form",
                                 horizon=0.0, dt=0.0, quantity="boundary-mean")
    p = None
    if model.kind == "pdmp" and model.n_env > 1:
        if Q is None:
            raise ValueError("need the rate matrix to average over environments")
        p = stationary_law(Q).p
    value = model.closed_form_threshold(p)
    if value is None:
        return None
    return ThresholdEstimate(float(value), 0.0, "closed-form", horizon=0.0, dt=0.0)


def boundary_average_threshold(model, Q: Optional[RateMatrix], cfg: IntegratorConfig,
                               rng: NoiseStream, n_batches: int = 50) -> ThresholdEstimate:
    """Minus the time average of H along the boundary process."""
    Q = _chain(model, Q)
    bs = model.boundary_system()
    bm = BatchMeans(cfg.burn_in, cfg.horizon, n_batches)
    h = bs.h
    _run_boundary(bs, Q, cfg, rng, lambda t, x, k: bm.observe(t, h(x, k)))
    return ThresholdEstimate(-bm.mean, bm.se, "boundary-average", cfg.horizon, cfg.dt)


def growth_rate_threshold(model, Q: Optional[RateMatrix], cfg: IntegratorConfig,
                          rng: NoiseStream, n_batches: int = 50) -> ThresholdEstimate:
    """Log-growth rate of the linearization at the extinction set.

    The direction component runs on its sphere/simplex; the log-radius is
    carried alongside so the estimate is a slope of an actual simulated
    log trajectory (with its Brownian part, for SDE models), not a
    re-average of H.
    """
    ls = model.linearized_system()
    if ls is None:
        raise ValueError(f"model {model.model_id!r} has no linearization at the extinction set")
    Q = _chain(model, Q)
    ts, logs = [], []

    if ls.kind == "pdmp":
        # log rho is the time integral of the growth drift along the direction
        bm = BatchMeans(cfg.burn_in, cfg.horizon, n_batches)
        gd = ls.growth_drift
        if ls.project is not None:
            cfg_run = dataclasses.replace(cfg, renormalize=True)
        else:
            cfg_run = cfg
        pdmp_simulate(Q, ls.field, ls.start, 0, cfg_run, rng,
                      lambda t, x, k: bm.observe(t, gd(x, k)), project=ls.project)
        return ThresholdEstimate(bm.mean, bm.se, "log-growth", cfg.horizon, cfg.dt)

    # SDE: augmented state (log rho, direction) driven by one dW
    n = ls.dim
    gdrift, gdiff = ls.growth_drift, ls.growth_diffusion

    def drift(z):
        theta = z[1:]
        return np.concatenate([[gdrift(theta, 0)], ls.drift(theta)])

    def diffusion(z):
        theta = z[1:]
        return np.vstack([gdiff(theta), ls.diffusion(theta)])

    project = None
    if ls.project is not None:
        inner = ls.project

        def project(z):
            out = z.copy()
            out[1:] = inner(z[1:])
            return out

    cfg_run = dataclasses.replace(cfg, renormalize=True)

    def observer(t, z, k):
        ts.append(t)
        logs.append(z[0])

    z0 = np.concatenate([[0.0], ls.start])
    sde_simulate(drift, diffusion, z0, cfg_run, rng, observer,
                 noise_dim=ls.noise_dim, project=project)
    est = log_growth(ts, logs, cfg.burn_in, cfg.horizon, n_batches, log_input=True)
    return ThresholdEstimate(est.value, est.se, "log-growth", cfg.horizon, cfg.dt)


def interior_h_average(model, Q: Optional[RateMatrix], cfg: IntegratorConfig,
                       rng: NoiseStream, x0=None, n_batches: int = 50) -> ThresholdEstimate:
    """Time average of H along an interior trajectory.

    For every interior invariant measure this average is 0, so in a
    persistent regime the estimate should sit within its error bars of 0.
    """
    Q = _chain(model, Q)
    x0 = model.default_interior_start() if x0 is None else np.asarray(x0, dtype=float)
    bm = BatchMeans(cfg.burn_in, cfg.horizon, n_batches)
    h = model.h_value
    observer = lambda t, x, k: bm.observe(t, h(x, k))
    if model.kind == "pdmp":
        pdmp_simulate(Q, model.field, x0, 0, cfg, rng, observer)
    else:
        sde_simulate(model.drift, model.diffusion, x0, cfg, rng, observer,
                     noise_dim=model.noise_dim, clamp_nonneg=True)
    return ThresholdEstimate(bm.mean, bm.se, "interior-average", cfg.horizon, cfg.dt)


def threshold_estimate(model, Q, cfg, rng, method: str = "auto") -> ThresholdEstimate:
    """Dispatch: closed form when available, else boundary average."""
    if method in ("auto", "closed-form"):
        est = closed_form_threshold(model, Q)
        if est is not None and est.quantity == "invasion-rate":
            return est
        if method == "closed-form":
            raise ValueError(f"model {model.model_id!r} has no closed-form invasion rate")
    if method == "log-growth":
        return growth_rate_threshold(model, Q, cfg, rng)
    return boundary_average_threshold(model, Q, cfg, rng)


def tune_to_critical(model, parameter: str, bracket, tolerance: float,
                     cfg: IntegratorConfig, rng: NoiseStream,
                     Q: Optional[RateMatrix] = None, estimator: str = "auto",
                     max_evals: int = 80, max_horizon_doublings: int = 4) -> CriticalTuning:
    """Bisect one scalar parameter until the threshold estimate is ~0.

    Noisy estimators get an adaptive horizon: a midpoint is re-evaluated
    with doubled horizon until its SE resolves its sign (or the doubling
    budget runs out). Stops when |estimate| <= max(tolerance, 3 SE) or the
    bracket has shrunk by 1e6.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    evals = 0
    stream = [0]

    def evaluate(value) -> ThresholdEstimate:
        nonlocal evals
        tuned = model.with_param(parameter, value)
        if estimator in ("auto", "closed-form"):
            est = closed_form_threshold(tuned, Q)
            if est is not None and est.quantity == "invasion-rate":
                if evals >= max_evals:
                    raise BudgetExhausted(f"{max_evals} threshold evaluations spent")
                evals += 1
                return est
            if estimator == "closed-form":
                raise ValueError(f"no closed-form evaluator for {model.model_id!r}")
        run_cfg = cfg
        for _ in range(max_horizon_doublings + 1):
            if evals >= max_evals:
                raise BudgetExhausted(f"{max_evals} threshold evaluations spent")
            evals += 1
            stream[0] += 1
            if estimator == "log-growth":
                est = growth_rate_threshold(tuned, Q, run_cfg, rng.spawn(stream[0]))
            else:
                est = boundary_average_threshold(tuned, Q, run_cfg, rng.spawn(stream[0]))
            if est.se < abs(est.value) / 3.0 or est.se <= tolerance / 3.0:
                return est
            run_cfg = dataclasses.replace(run_cfg, horizon=2 * run_cfg.horizon,
                                          burn_in=2 * run_cfg.burn_in)
        return est

    est_lo, est_hi = evaluate(lo), evaluate(hi)
    if np.sign(est_lo.value) == np.sign(est_hi.value) or est_lo.value == 0 or est_hi.value == 0:
        if abs(est_lo.value) <= max(tolerance, 3 * est_lo.se):
            return CriticalTuning(parameter, (lo, hi), lo, est_lo, evals)
        if abs(est_hi.value) <= max(tolerance, 3 * est_hi.se):
            return CriticalTuning(parameter, (lo, hi), hi, est_hi, evals)
        raise NoSignChange(
            f"threshold has the same sign at both ends of [{lo}, {hi}]: "
            f"{est_lo.value:+.4g} and {est_hi.value:+.4g}")
    sign_lo = np.sign(est_lo.value)
    mid, est_mid = 0.5 * (lo + hi), est_lo
    while hi - lo >= 4.0 * np.finfo(float).eps * max(abs(lo), abs(hi), 1.0):
        mid = 0.5 * (lo + hi)
        est_mid = evaluate(mid)
        if abs(est_mid.value) <= max(tolerance, 3 * est_mid.se):
            return CriticalTuning(parameter, (float(bracket[0]), float(bracket[1])),
                                  mid, est_mid, evals)
        if np.sign(est_mid.value) == sign_lo:
            lo = mid
        else:
            hi = mid
    return CriticalTuning(parameter, (float(bracket[0]), float(bracket[1])), mid, est_mid, evals)
