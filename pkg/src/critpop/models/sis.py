"""Lajmanovich-Yorke SIS model on d groups, switched between environments.

x^i is the infected fraction in group i; the field per environment k is
F(x) = (C - Diag(D)) x - Diag(x) C x on [0,1]^d. The extinction set is
the origin; its polar blow-up puts the direction Theta on the unit sphere
where it follows the projected linear flow of A = C - Diag(D).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import OutOfDomain
from .base import DOMAIN_TOL, BoundarySystem, LinearizedSystem, Model, polar_decompose
from ..engines import project_sphere
from .patchy import _irreducible


@dataclass(frozen=True)
class Sis(Model):
    contact: np.ndarray   # C^k, shape (N, d, d), irreducible nonnegative
    recovery: np.ndarray  # D^k, shape (N, d), positive

    model_id = "sis"
    kind = "pdmp"
    state_names = None

    def __post_init__(self):
        c = np.asarray(self.contact, dtype=float)
        if c.ndim == 2:
            c = c[None]
        d = np.asarray(self.recovery, dtype=float)
        if d.ndim == 1:
            d = d[None]
        object.__setattr__(self, "contact", c)
        object.__setattr__(self, "recovery", d)
        object.__setattr__(self, "state_names", tuple(f"x{i+1}" for i in range(c.shape[-1])))
        if np.any(c < 0):
            raise ValueError("contact matrices must be nonnegative")
        if np.any(d <= 0):
            raise ValueError("recovery rates must be positive")
        for k in range(c.shape[0]):
            if not _irreducible(c[k]):
                raise ValueError(f"contact matrix for environment {k} is not irreducible")

    @property
    def n_env(self):
        return self.contact.shape[0]

    @property
    def dim(self):
        return self.contact.shape[-1]

    def a_matrix(self, k: int) -> np.ndarray:
        return self.contact[k] - np.diag(self.recovery[k])

    # -- dynamics --------------------------------------------------------------

    def vector_field(self, x, k: int):
        cx = self.contact[k] @ x
        return (1.0 - x) * cx - self.recovery[k] * x

    def field(self, k: int):
        c, d = self.contact[k], self.recovery[k]
        return lambda x: (1.0 - x) * (c @ x) - d * x

    def batched_vector_field(self, X, K):
        """Vectorized field for a batch of states X (R,d) in environments K (R,)."""
        cx = np.einsum("rij,rj->ri", self.contact[K], X)
        return (1.0 - X) * cx - self.recovery[K] * X

    def extinction_values(self, X):
        return np.linalg.norm(X, axis=-1)

    def companion_values(self, X):
        return None

    def in_domain(self, x, tol: float = DOMAIN_TOL) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= -tol) and np.all(x <= 1.0 + tol))

    def extinction(self, x) -> float:
        return float(np.linalg.norm(x))

    def default_interior_start(self):
        return 0.5 * np.ones(self.dim)

    # -- H and thresholds --------------------------------------------------------

    def h_polar(self, rho: float, theta: np.ndarray, k: int) -> float:
        a = self.a_matrix(k)
        return -float(theta @ a @ theta) + rho * float((theta * (self.contact[k] @ theta)) @ theta)

    def h_value(self, x, k: int) -> float:
        if not self.in_domain(x, tol=1e-6):
            raise OutOfDomain(f"state {x} outside [0,1]^d")
        rho, theta = polar_decompose(x, "sphere")
        return self.h_polar(rho, theta, k)

    def boundary_system(self) -> BoundarySystem:
        def bfield(k):
            a = self.a_matrix(k)

            def f(theta):
                at = a @ theta
                return at - float(at @ theta) * theta

            return f

        def h(theta, k):
            return -float(theta @ self.a_matrix(k) @ theta)

        d = self.dim
        return BoundarySystem(
            kind="pdmp",
            dim=d,
            start=np.full(d, 1.0 / np.sqrt(d)),
            field=bfield,
            h=h,
            project=project_sphere(),
        )

    def linearized_system(self) -> LinearizedSystem:
        bs = self.boundary_system()

        def growth_drift(theta, k):
            return float(theta @ self.a_matrix(k) @ theta)

        return LinearizedSystem(
            kind="pdmp",
            dim=self.dim,
            start=bs.start,
            field=bs.field,
            growth_drift=growth_drift,
            project=project_sphere(),
        )

    def closed_form_threshold(self, p=None):
        """Perron eigenvalue of A in the single-environment case."""
        if self.n_env != 1:
            return None
        return float(np.max(np.linalg.eigvals(self.a_matrix(0)).real))

    def with_param(self, name: str, value: float):
        if name == "contact_scale":
            import dataclasses
            return dataclasses.replace(self, contact=self.contact * float(value))
        return super().with_param(name, value)
