"""SIRS epidemic model driven by a switching environment.

State (S, I, R) on the simplex-like box {s+i+r <= inflow/mortality}. The
incidence G_k(I) = I / (1 + m_k I) covers both supported families: m = 0
is bilinear incidence, m > 0 saturated incidence; G_k'(0) = 1 either way.
The extinction set is {I = 0}, on which the flow converges to the
disease-free point (inflow/mortality, 0, 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import OutOfDomain
from .base import DOMAIN_TOL, BoundarySystem, Model


@dataclass(frozen=True)
class Sirs(Model):
    inflow: float                 # recruitment into the susceptible class
    mortality: float              # baseline per-capita death rate
    immunity_loss: np.ndarray     # per-environment rate R -> S
    beta: np.ndarray              # per-environment transmission rate
    alpha: np.ndarray             # per-environment disease-induced mortality
    delta: np.ndarray             # per-environment recovery rate
    saturation: np.ndarray = None  # per-environment m in G(I) = I/(1+mI)

    model_id = "sirs"
    kind = "pdmp"
    dim = 3
    state_names = ("S", "I", "R")

    def __post_init__(self):
        for name in ("immunity_loss", "beta", "alpha", "delta"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if self.saturation is None:
            object.__setattr__(self, "saturation", np.zeros_like(self.beta))
        else:
            object.__setattr__(self, "saturation", np.atleast_1d(np.asarray(self.saturation, dtype=float)))
        if self.inflow <= 0 or self.mortality <= 0 or np.any(self.beta <= 0):
            raise ValueError("inflow, mortality and beta must be positive")
        if np.any(self.immunity_loss < 0) or np.any(self.alpha < 0) or np.any(self.delta < 0):
            raise ValueError("immunity_loss, alpha, delta must be nonnegative")
        if np.any(self.saturation < 0):
            raise ValueError("saturation must be nonnegative")

    @property
    def n_env(self):
        return len(self.beta)

    @property
    def disease_free_s(self) -> float:
        return self.inflow / self.mortality

    def incidence(self, i: float, k: int) -> float:
        return i / (1.0 + self.saturation[k] * i)

    def incidence_slope(self, i: float, k: int) -> float:
        """G_k(i)/i extended by G_k'(0) = 1 at the removable singularity."""
        if i == 0.0:
            return 1.0
        return 1.0 / (1.0 + self.saturation[k] * i)

    def loss_rate(self, k: int) -> float:
        return self.mortality + self.alpha[k] + self.delta[k]

    # -- dynamics --------------------------------------------------------------

    def vector_field(self, x, k: int):
        s, i, r = x
        inc = self.beta[k] * s * self.incidence(i, k)
        return np.array([
            self.inflow - self.mortality * s + self.immunity_loss[k] * r - inc,
            inc - self.loss_rate(k) * i,
            self.delta[k] * i - (self.mortality + self.immunity_loss[k]) * r,
        ])

    def field(self, k: int):
        return lambda x: self.vector_field(x, k)

    def batched_vector_field(self, X, K):
        """Vectorized field for a batch of states X (R,3) in environments K (R,)."""
        s, i, r = X[..., 0], X[..., 1], X[..., 2]
        lam = self.immunity_loss[K]
        inc = self.beta[K] * s * i / (1.0 + self.saturation[K] * i)
        loss = self.mortality + self.alpha[K] + self.delta[K]
        return np.stack([
            self.inflow - self.mortality * s + lam * r - inc,
            inc - loss * i,
            self.delta[K] * i - (self.mortality + lam) * r,
        ], axis=-1)

    def extinction_values(self, X):
        return X[..., 1]

    def companion_values(self, X):
        return X[..., 0]

    def in_domain(self, x, tol: float = DOMAIN_TOL) -> bool:
        return bool(np.all(np.asarray(x) >= -tol) and sum(x) <= self.disease_free_s + tol)

    def extinction(self, x) -> float:
        return float(x[1])

    def companion(self, x):
        return float(x[0])

    def companion_target(self) -> float:
        return self.disease_free_s

    def default_interior_start(self):
        s_star = self.disease_free_s
        return np.array([0.5 * s_star, 0.2 * s_star, 0.1 * s_star])

    # -- H and thresholds --------------------------------------------------------

    def h_value(self, x, k: int) -> float:
        s, i, _ = x
        if not self.in_domain(x, tol=1e-6):
            raise OutOfDomain(f"state {x} outside the SIRS domain")
        return self.loss_rate(k) - self.beta[k] * s * self.incidence_slope(i, k)

    def boundary_system(self) -> BoundarySystem:
        s_star = self.disease_free_s

        def bfield(k):
            lam = self.immunity_loss[k]

            def f(b):
                s, r = b
                return np.array([
                    self.inflow - self.mortality * s + lam * r,
                    -(self.mortality + lam) * r,
                ])

            return f

        def h(b, k):
            return self.loss_rate(k) - self.beta[k] * b[0]

        return BoundarySystem(
            kind="pdmp",
            dim=2,
            start=np.array([0.5 * s_star, 0.25 * s_star]),
            field=bfield,
            h=h,
        )

    def closed_form_threshold(self, p=None) -> float:
        """-pi H = sum_k p_k (beta_k S* G'(0) - (mu + alpha_k + delta_k))."""
        p = np.ones(self.n_env) if p is None else np.asarray(p)
        s_star = self.disease_free_s
        return float(np.sum(p * (self.beta * s_star - (self.mortality + self.alpha + self.delta))))

    def r0(self, p=None) -> float:
        p = np.ones(self.n_env) if p is None else np.asarray(p)
        s_star = self.disease_free_s
        return float(np.sum(p * self.beta * s_star) / np.sum(p * (self.mortality + self.alpha + self.delta)))
