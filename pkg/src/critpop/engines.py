"""Numerical integrators.

Deterministic RK4 for the ODE flows of switched systems (between chain
jumps) and Euler-Maruyama for SDEs. Both engines push every accepted step
through an observer callback, which is how the occupation statistics are
fed. The EM engine draws its Gaussian increments from a NoiseStream so
that two systems advanced with the same stream (or in the same lockstep
loop) are coupled pathwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NonFiniteState, StateLeftDomain
from .noise import NoiseStream
from .switching import RateMatrix, sample_chain

Observer = Callable[[float, np.ndarray, int], None]

_NOISE_BLOCK = 4096  # EM increments are drawn in blocks of this many steps


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    horizon: float
    burn_in: float = 0.0
    renormalize: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.burn_in < 0 or self.horizon <= self.burn_in:
            raise ValueError("need 0 <= burn_in < horizon")
        if self.dt > self.horizon / 100:
            raise ValueError("dt must be <= horizon / 100")


def rk4_step(field, state, h):
    """Classical 4th-order Runge-Kutta update; local error O(h^5)."""
    k1 = field(state)
    k2 = field(state + 0.5 * h * k1)
    k3 = field(state + 0.5 * h * k2)
    k4 = field(state + h * k3)
    out = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(None, out)
    return out


def em_step(drift, diffusion, state, h, dW):
    """Euler-Maruyama update: state + drift*h + diffusion applied to dW.

    diffusion(state) may return an array of the state's shape (diagonal
    noise, multiplied elementwise with dW) or one with a trailing noise
    axis (contracted against dW with einsum, batched shapes allowed).
    """
    f = drift(state)
    g = diffusion(state)
    g = np.asarray(g)
    dW = np.asarray(dW)
    if g.shape == np.shape(state):
        noise = g * dW
    else:
        noise = np.einsum("...ij,...j->...i", g, dW)
    out = state + h * f + noise
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(None, out)
    return out


def _integrate_flow(field, x, t0, t1, dt, env, observer, project):
    """RK4 from t0 to t1 in equal substeps <= dt, landing exactly on t1."""
    span = t1 - t0
    if span <= 0:
        return x
    nsub = max(1, math.ceil(span / dt - 1e-12))
    h = span / nsub
    t = t0
    for i in range(nsub):
        x = rk4_step(field, x, h)
        t = t1 if i == nsub - 1 else t0 + (i + 1) * h
        if project is not None:
            x = project(x)
        if observer is not None:
            observer(t, x, env)
    return x


def pdmp_simulate(
    Q: RateMatrix,
    fields,
    x0,
    k0: int,
    cfg: IntegratorConfig,
    rng: NoiseStream,
    observer: Optional[Observer] = None,
    project=None,
    membership=None,
):
    """Simulate a Markov-switched ODE over [0, horizon].

    fields: callable k -> vector field, or indexable of vector fields.
    Chain jumps are sampled exactly in law; the flow between jumps is
    integrated with RK4 substeps <= cfg.dt that land exactly on each jump
    time. The observer sees (t, state, environment) at every accepted
    step, including every jump time.
    """
    get_field = fields.__getitem__ if hasattr(fields, "__getitem__") else fields
    x = np.array(x0, dtype=float)
    project_fn = project if cfg.renormalize else None
    if observer is not None:
        observer(0.0, x, k0)
    k = k0
    for t0, t1, k in sample_chain(Q, k0, cfg.horizon, rng):
        if observer is not None and t0 > 0.0:
            # re-observe the jump time in the new environment so averages
            # of env-dependent observables integrate the correct branch
            observer(t0, x, k)
        x = _integrate_flow(get_field(k), x, t0, t1, cfg.dt, k, observer, project_fn)
        if membership is not None and not membership(x):
            raise StateLeftDomain(t1, x)
    return x, k


def sde_simulate(
    drift,
    diffusion,
    x0,
    cfg: IntegratorConfig,
    rng: NoiseStream,
    observer: Optional[Observer] = None,
    noise_dim: Optional[int] = None,
    project=None,
    clamp_nonneg: bool = False,
    membership=None,
):
    """Euler-Maruyama over [0, horizon] on the cfg.dt grid.

    noise_dim: per-state noise coordinates; inferred from diffusion(x0)
    when omitted (trailing axis for matrix diffusion, state shape for
    diagonal diffusion).

    clamp_nonneg: a coordinate stepping to a small negative value (within
    10*dt*local drift bound) is treated as discretization noise and
    clamped to 0; a larger violation raises StateLeftDomain.
    """
    x = np.array(x0, dtype=float)
    g0 = np.asarray(diffusion(x))
    if noise_dim is None:
        dW_shape = x.shape if g0.shape == x.shape else g0.shape[:-2] + g0.shape[-1:]
    else:
        dW_shape = x.shape[:-1] + (noise_dim,) if x.ndim else (noise_dim,)
    nsteps = max(1, round(cfg.horizon / cfg.dt))
    h = cfg.horizon / nsteps
    sqrt_h = math.sqrt(h)
    project_fn = project if cfg.renormalize else None
    if observer is not None:
        observer(0.0, x, 0)
    done = 0
    while done < nsteps:
        block = min(_NOISE_BLOCK, nsteps - done)
        dWs = sqrt_h * rng.normals((block,) + tuple(dW_shape))
        for i in range(block):
            t = cfg.horizon if done + i + 1 == nsteps else (done + i + 1) * h
            fx = drift(x)
            g = np.asarray(diffusion(x))
            if g.shape == x.shape:
                noise = g * dWs[i]
            else:
                noise = np.einsum("...ij,...j->...i", g, dWs[i])
            x = x + h * fx + noise
            if not np.all(np.isfinite(x)):
                raise NonFiniteState(t, x)
            if clamp_nonneg:
                x = _clamp_nonneg(x, t, h, fx)
            if project_fn is not None:
                x = project_fn(x)
            if membership is not None and not membership(x):
                raise StateLeftDomain(t, x)
            if observer is not None:
                observer(t, x, 0)
        done += block
    return x


def _clamp_nonneg(x, t, h, fx):
    neg = x < 0
    if not np.any(neg):
        return x
    bound = 10.0 * h * np.maximum(1.0, np.abs(fx))
    if np.any(x[neg] < -np.asarray(np.broadcast_to(bound, x.shape))[neg]):
        raise StateLeftDomain(t, x, "(negative coordinate beyond discretization allowance)")
    out = x.copy()
    out[neg] = 0.0
    return out


# -- constraint projections --------------------------------------------------

def project_simplex(block_slice=None):
    """Renormalize (a slice of) the state to sum to 1."""

    def proj(x):
        if block_slice is None:
            return x / x.sum(axis=-1, keepdims=True)
        out = x.copy()
        blk = out[..., block_slice]
        out[..., block_slice] = blk / blk.sum(axis=-1, keepdims=True)
        return out

    return proj


def project_sphere(block_slice=None):
    """Renormalize (a slice of) the state to unit Euclidean norm."""

    def proj(x):
        if block_slice is None:
            return x / np.linalg.norm(x, axis=-1, keepdims=True)
        out = x.copy()
        blk = out[..., block_slice]
        out[..., block_slice] = blk / np.linalg.norm(blk, axis=-1, keepdims=True)
        return out

    return proj
