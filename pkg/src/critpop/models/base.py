"""Shared pieces of the model interface.

Each concrete model is a frozen dataclass exposing the same duck-typed
surface: full dynamics (PDMP vector fields or SDE drift/diffusion), the
boundary process on the extinction set, the H function whose boundary
average gives the invasion rate, an extinction observable, and domain
membership. The boundary and linearized processes are described by small
system records that the threshold estimators know how to simulate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ..errors import ZeroVector

DOMAIN_TOL = 1e-9


def polar_decompose(x, mode: str):
    """Split a nonzero nonnegative vector into (radius, direction).

    sphere mode: (||x||_2, x/||x||_2); simplex mode: (sum x, x/sum x).
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("polar_decompose expects a nonnegative vector")
    if mode == "sphere":
        r = float(np.linalg.norm(x))
    elif mode == "simplex":
        r = float(x.sum())
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if r == 0.0:
        raise ZeroVector("cannot decompose the zero vector")
    return r, x / r


@dataclass(frozen=True)
class BoundarySystem:
    """Dynamics of the process restricted to the extinction set."""

    kind: str  # "pdmp" | "sde"
    dim: int
    start: np.ndarray
    h: Callable  # h(state, env) -> float; -time-average is the invasion rate
    field: Optional[Callable] = None       # pdmp: env -> (state -> derivative)
    drift: Optional[Callable] = None       # sde
    diffusion: Optional[Callable] = None   # sde
    noise_dim: Optional[int] = None
    project: Optional[Callable] = None     # simplex/sphere renormalization
    clamp_nonneg: bool = False


@dataclass(frozen=True)
class LinearizedSystem:
    """Log-polar form of the linearization at the extinction set.

    The direction component evolves autonomously (on a sphere or simplex);
    the log-radius increment is growth_drift(direction, env) dt plus, for
    SDE models, growth_diffusion(direction) . dW with the same dW that
    drives the direction.
    """

    kind: str
    dim: int
    start: np.ndarray
    growth_drift: Callable
    field: Optional[Callable] = None
    drift: Optional[Callable] = None
    diffusion: Optional[Callable] = None
    growth_diffusion: Optional[Callable] = None
    noise_dim: Optional[int] = None
    project: Optional[Callable] = None


class Model:
    """Mixin with the defaults shared by the concrete models."""

    n_env = 1

    def companion(self, x):
        return None

    def companion_target(self):
        return None

    def with_param(self, name: str, value: float):
        """Return a copy with one scalar parameter replaced (tuning hook)."""
        if not hasattr(self, name):
            raise AttributeError(f"{type(self).__name__} has no parameter {name!r}")
        current = getattr(self, name)
        if isinstance(current, np.ndarray):
            value = np.full_like(current, float(value))
        return replace(self, **{name: value})

    def linearized_system(self) -> Optional[LinearizedSystem]:
        return None

    def closed_form_threshold(self, p=None) -> Optional[float]:
        return None
