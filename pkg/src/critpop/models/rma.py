"""Stochastic Rosenzweig-MacArthur prey-predator system.

Prey X carries multiplicative noise; the predator equation is noise-free.
The extinction set of interest is {y = 0}, on which the prey follows a
logistic SDE whose stationary mean is carrying * (1 - noise^2/2). The
invasion rate of the predator is the stationary average of the predator
per-capita growth rate along that boundary process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import DOMAIN_TOL, BoundarySystem, Model


@dataclass(frozen=True)
class Rma(Model):
    carrying: float   # prey carrying capacity
    alpha: float      # predator mortality
    noise: float      # prey noise intensity

    model_id = "rma"
    kind = "sde"
    dim = 2
    noise_dim = 1
    state_names = ("x", "y")

    def __post_init__(self):
        if self.carrying <= 0 or self.noise <= 0:
            raise ValueError("carrying and noise must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def prey_collapses(self) -> bool:
        """noise^2 > 2 sends both populations to 0 regardless of the rest."""
        return self.noise ** 2 > 2.0

    def boundary_mean(self) -> float:
        """Stationary prey mean on {y = 0}: K (1 - eps^2 / 2)."""
        return self.carrying * (1.0 - self.noise ** 2 / 2.0)

    # -- dynamics --------------------------------------------------------------

    def drift(self, z):
        x, y = z[..., 0], z[..., 1]
        fx = x * (1.0 - x / self.carrying - y / (1.0 + x))
        fy = y * (-self.alpha + x / (1.0 + x))
        return np.stack([fx, fy], axis=-1)

    def diffusion(self, z):
        g = np.zeros(z.shape[:-1] + (2, 1))
        g[..., 0, 0] = self.noise * z[..., 0]
        return g

    def extinction_values(self, Z):
        return Z[..., 1]

    def companion_values(self, Z):
        return Z[..., 0]

    def in_domain(self, z, tol: float = DOMAIN_TOL) -> bool:
        return bool(np.all(np.asarray(z) >= -tol))

    def extinction(self, z) -> float:
        return float(z[1])

    def companion(self, z):
        return float(z[0])

    def companion_target(self) -> float:
        return self.boundary_mean()

    def default_interior_start(self):
        return np.array([max(self.boundary_mean(), 0.1 * self.carrying), 0.5])

    # -- invasion rates ----------------------------------------------------------

    def lambda1(self, x, y) -> float:
        return (1.0 - x / self.carrying - y / (1.0 + x)) - self.noise ** 2 / 2.0

    def lambda2(self, x, y) -> float:
        return -self.alpha + x / (1.0 + x)

    def h1(self, x, y) -> float:
        # Ito correction carries the squared denominator; the drift part is
        # (x - x^2/K - alpha y) / (1 + x + y).
        denom = 1.0 + x + y
        return (x - x * x / self.carrying - self.alpha * y) / denom \
            - self.noise ** 2 * x * x / (2.0 * denom * denom)

    def h_value(self, z, k: int = 0) -> float:
        x, y = z
        return self.h1(x, y) - self.lambda2(x, y)

    def boundary_system(self) -> BoundarySystem:
        eps = self.noise
        K = self.carrying

        def drift(x):
            return x * (1.0 - x / K)

        def diffusion(x):
            return eps * x  # same multiplicative structure as the full prey

        def h(x, k):
            return self.h_value(np.array([float(x), 0.0]))

        start = np.array(max(self.boundary_mean(), 0.05 * K))
        return BoundarySystem(
            kind="sde",
            dim=1,
            start=start,
            drift=drift,
            diffusion=diffusion,
            h=h,
            clamp_nonneg=True,
        )
