"""SEIR epidemic model with switching, in (S, U, V) coordinates.

U = E + I is the total infected mass and V = I / U the infectious
fraction, so the extinction set {U = 0} carries the autonomous scalar
flow of V. Incubation and transmission rates switch with the environment;
the incubation rate is a single parameter (written sigma or delta
depending on context, the same quantity).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingularAtBoundary
from .base import DOMAIN_TOL, BoundarySystem, LinearizedSystem, Model
from ..engines import project_sphere


@dataclass(frozen=True)
class Seir(Model):
    inflow: float           # Lambda
    mortality: float        # gamma
    removal: np.ndarray     # gamma_1(k)
    beta: np.ndarray        # transmission rate beta(k)
    incubation: np.ndarray  # sigma(k) = delta(k)

    model_id = "seir"
    kind = "pdmp"
    dim = 3
    state_names = ("S", "U", "V")

    def __post_init__(self):
        for name in ("removal", "beta", "incubation"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if min(self.inflow, self.mortality) <= 0 or np.any(self.removal <= 0) \
                or np.any(self.beta <= 0) or np.any(self.incubation <= 0):
            raise ValueError("all SEIR rates must be positive")

    @property
    def n_env(self):
        return len(self.beta)

    @property
    def disease_free_s(self) -> float:
        return self.inflow / self.mortality

    # -- the (S, U, V) right-hand sides -----------------------------------------

    def f_s(self, s, u, v, k):
        return self.inflow - self.mortality * s - self.beta[k] * s * u * v

    def f_u(self, s, u, v, k):
        return (self.beta[k] * s - self.removal[k]) * v - self.mortality

    def f_v(self, s, u, v, k):
        return self.incubation[k] * (1.0 - v) - self.removal[k] * v \
            - (self.beta[k] * s - self.removal[k]) * v * v

    def vector_field(self, z, k: int):
        s, u, v = z
        return np.array([
            self.f_s(s, u, v, k),
            u * self.f_u(s, u, v, k),
            self.f_v(s, u, v, k),
        ])

    def field(self, k: int):
        return lambda z: self.vector_field(z, k)

    def batched_vector_field(self, Z, K):
        """Vectorized field for a batch of states Z (R,3) in environments K (R,)."""
        s, u, v = Z[..., 0], Z[..., 1], Z[..., 2]
        b, g1, sig = self.beta[K], self.removal[K], self.incubation[K]
        fs = self.inflow - self.mortality * s - b * s * u * v
        fu = (b * s - g1) * v - self.mortality
        fv = sig * (1.0 - v) - g1 * v - (b * s - g1) * v * v
        return np.stack([fs, u * fu, fv], axis=-1)

    def extinction_values(self, Z):
        return Z[..., 1]

    def companion_values(self, Z):
        return Z[..., 0]

    def in_domain(self, z, tol: float = DOMAIN_TOL) -> bool:
        s, u, v = z
        return bool(s >= -tol and u >= -tol and -tol <= v <= 1.0 + tol
                    and s + u <= self.disease_free_s + tol)

    def extinction(self, z) -> float:
        return float(z[1])

    def companion(self, z):
        return float(z[0])

    def companion_target(self) -> float:
        return self.disease_free_s

    def default_interior_start(self):
        s_star = self.disease_free_s
        return np.array([0.5 * s_star, 0.2 * s_star, 0.5])

    # -- H and thresholds --------------------------------------------------------

    def h_value(self, z, k: int) -> float:
        s, u, v = z
        return -self.f_u(s, u, v, k)

    def h_tilde(self, v: float, k: int) -> float:
        """-f_U - f_V / v; equals H in average for every invariant measure."""
        if v <= 0.0:
            raise SingularAtBoundary("h_tilde is singular at v = 0")
        return -self.incubation[k] * (1.0 - v) / v + self.mortality + self.removal[k]

    def boundary_system(self) -> BoundarySystem:
        s_star = self.disease_free_s

        def bfield(k):
            sig, g1, b = self.incubation[k], self.removal[k], self.beta[k]

            def f(v):
                return sig * (1.0 - v) - g1 * v - (b * s_star - g1) * v * v

            return f

        def h(v, k):
            return self.h_tilde(float(v), k)

        return BoundarySystem(
            kind="pdmp",
            dim=1,
            start=np.array(0.5),
            field=bfield,
            h=h,
        )

    def b_matrix(self, k: int) -> np.ndarray:
        """Linearization of (E, I) at the disease-free point.

        The bottom-right entry is -(gamma + gamma_1), the decay of I.
        """
        g, g1 = self.mortality, self.removal[k]
        return np.array([
            [-(g + self.incubation[k]), self.beta[k] * self.disease_free_s],
            [self.incubation[k], -(g + g1)],
        ])

    def linearized_system(self) -> LinearizedSystem:
        def lfield(k):
            b = self.b_matrix(k)

            def f(theta):
                bt = b @ theta
                return bt - float(bt @ theta) * theta

            return f

        def growth_drift(theta, k):
            return float(theta @ self.b_matrix(k) @ theta)

        return LinearizedSystem(
            kind="pdmp",
            dim=2,
            start=np.full(2, 1.0 / np.sqrt(2.0)),
            field=lfield,
            growth_drift=growth_drift,
            project=project_sphere(),
        )

    def closed_form_threshold(self, p=None):
        if self.n_env != 1:
            return None
        return float(np.max(np.linalg.eigvals(self.b_matrix(0)).real))
