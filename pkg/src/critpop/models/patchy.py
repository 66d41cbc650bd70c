"""Logistic populations on n dispersal-coupled patches with correlated noise.

Abundances X^i follow dX^i = [X^i (a_i - c_i X^i) + (D^T X)_i] dt
+ X^i (Gamma^T dB)_i, with D_{j,i} the dispersal rate from patch j to
patch i and row sums of D zero, so dispersal conserves total abundance.
The polar split (S, Y) = (sum X, X/S) isolates the extinction set
{S = 0}, where the direction Y evolves autonomously on the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OutOfDomain
from .base import DOMAIN_TOL, BoundarySystem, LinearizedSystem, Model, polar_decompose
from ..engines import project_simplex


def _irreducible(mat: np.ndarray) -> bool:
    n = mat.shape[0]
    if n == 1:
        return True
    adj = (mat > 0) & ~np.eye(n, dtype=bool)
    for a in (adj, adj.T):
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(a[i]):
                if int(j) not in seen:
                    seen.add(int(j))
                    stack.append(int(j))
        if len(seen) < n:
            return False
    return True


@dataclass(frozen=True)
class Patchy(Model):
    growth: np.ndarray      # a_i > 0, per-patch growth rates
    competition: np.ndarray  # c_i > 0, slopes of the linear competition b_i(x) = c_i x
    dispersal: np.ndarray   # D, off-diagonal >= 0, rows sum to zero
    loading: np.ndarray     # Gamma; the noise covariance is Sigma = Gamma^T Gamma

    model_id = "patchy"
    kind = "sde"
    state_names = None

    def __post_init__(self):
        object.__setattr__(self, "growth", np.atleast_1d(np.asarray(self.growth, dtype=float)))
        object.__setattr__(self, "competition", np.atleast_1d(np.asarray(self.competition, dtype=float)))
        n = len(self.growth)
        object.__setattr__(self, "dispersal", np.asarray(self.dispersal, dtype=float).reshape(n, n))
        object.__setattr__(self, "loading", np.asarray(self.loading, dtype=float).reshape(n, n))
        object.__setattr__(self, "state_names", tuple(f"x{i+1}" for i in range(n)))
        if np.any(self.growth <= 0) or np.any(self.competition <= 0):
            raise ValueError("growth and competition slopes must be positive")
        d = self.dispersal
        off = d - np.diag(np.diag(d))
        if np.any(off < 0):
            raise ValueError("off-diagonal dispersal rates must be nonnegative")
        # each patch's outflow balances what it sends elsewhere, so the
        # dispersal term conserves total abundance and D^T y stays tangent
        # to the simplex
        if np.abs(d.sum(axis=1)).max() > 1e-10:
            raise ValueError("dispersal rows must sum to zero")
        if n > 1 and not _irreducible(d):
            raise ValueError("dispersal matrix must be irreducible")
        if abs(np.linalg.det(self.sigma)) < 1e-12:
            raise ValueError("noise covariance Gamma^T Gamma is singular")

    @property
    def n_patches(self) -> int:
        return len(self.growth)

    @property
    def dim(self) -> int:
        return self.n_patches

    @property
    def noise_dim(self) -> int:
        return self.n_patches

    @property
    def sigma(self) -> np.ndarray:
        return self.loading.T @ self.loading

    # -- dynamics --------------------------------------------------------------

    def drift(self, x):
        return x * (self.growth - self.competition * x) + x @ self.dispersal

    def diffusion(self, x):
        # row i is x_i * (Gamma^T)_{i,:}
        return x[..., :, None] * self.loading.T

    def extinction_values(self, X):
        return X.sum(axis=-1)

    def companion_values(self, X):
        return None

    def in_domain(self, x, tol: float = DOMAIN_TOL) -> bool:
        return bool(np.all(np.asarray(x) >= -tol))

    def extinction(self, x) -> float:
        return float(np.sum(x))

    def default_interior_start(self):
        return 0.5 * np.ones(self.n_patches)

    # -- polar split -------------------------------------------------------------

    def polar_drift(self, s: float, y: np.ndarray):
        """Drift of (S, Y); the matching diffusion is polar_diffusion."""
        b = self.competition * (s * y)
        tangent = np.diag(y) - np.outer(y, y)
        dy = self.dispersal.T @ y + tangent @ (self.growth - self.sigma @ y - b)
        ds = s * float((self.growth - b) @ y)
        return ds, dy

    def polar_diffusion(self, s: float, y: np.ndarray):
        tangent = np.diag(y) - np.outer(y, y)
        gy = tangent @ self.loading.T
        gs = s * (self.loading @ y)
        return gs, gy

    # -- H and thresholds --------------------------------------------------------

    def h1(self, s: float, y: np.ndarray) -> float:
        b = self.competition * (s * y)
        u = s / (1.0 + s)
        return u * float((self.growth - b) @ y) - 0.5 * u * u * float(y @ self.sigma @ y)

    def h2(self, s: float, y: np.ndarray) -> float:
        b = self.competition * (s * y)
        return float((self.growth - b) @ y) - 0.5 * float(y @ self.sigma @ y)

    def h_value(self, x, k: int = 0) -> float:
        if np.any(np.asarray(x) < 0):
            raise OutOfDomain(f"state {x} outside the nonnegative orthant")
        s, y = polar_decompose(x, "simplex")
        return self.h1(s, y) - self.h2(s, y)

    def boundary_system(self) -> BoundarySystem:
        a, sig, dT, gT = self.growth, self.sigma, self.dispersal.T, self.loading.T

        def drift(y):
            tangent = np.diag(y) - np.outer(y, y)
            return dT @ y + tangent @ (a - sig @ y)

        def diffusion(y):
            return (np.diag(y) - np.outer(y, y)) @ gT

        def h(y, k):
            return -(float(a @ y) - 0.5 * float(y @ sig @ y))

        n = self.n_patches
        return BoundarySystem(
            kind="sde",
            dim=n,
            start=np.full(n, 1.0 / n),
            drift=drift,
            diffusion=diffusion,
            noise_dim=n,
            h=h,
            project=project_simplex(),
        )

    def linearized_system(self) -> LinearizedSystem:
        bs = self.boundary_system()
        a, sig, g = self.growth, self.sigma, self.loading

        def growth_drift(y, k):
            return float(a @ y) - 0.5 * float(y @ sig @ y)

        def growth_diffusion(y):
            return g @ y

        return LinearizedSystem(
            kind="sde",
            dim=self.n_patches,
            start=bs.start,
            drift=bs.drift,
            diffusion=bs.diffusion,
            noise_dim=self.n_patches,
            growth_drift=growth_drift,
            growth_diffusion=growth_diffusion,
            project=project_simplex(),
        )

    def closed_form_threshold(self, p=None):
        if self.n_patches != 1:
            return None
        return float(self.growth[0] - 0.5 * self.sigma[0, 0])
