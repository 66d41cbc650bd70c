"""Continuous-time Markov chain on a finite environment set.

Validation of rate matrices, stationary distribution, and exact-in-law
path sampling (holding times exponential, embedded chain proportional to
off-diagonal rates).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Tuple

import numpy as np

from .errors import (
    NegativeOffDiagonal,
    NotIrreducible,
    RowSumNonzero,
    SingularSystem,
)
from .noise import NoiseStream

_ROW_SUM_TOL = 1e-12
_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class RateMatrix:
    """Validated generator of the switching chain. Build via validate_rate_matrix."""

    q: np.ndarray

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def __getstate__(self):
        return {"q": np.asarray(self.q)}

    def __setstate__(self, state):
        object.__setattr__(self, "q", state["q"])


@dataclass(frozen=True)
class StationaryLaw:
    p: np.ndarray


def _strongly_connected(q: np.ndarray) -> bool:
    """Strong connectivity of the digraph of positive off-diagonal rates."""
    n = q.shape[0]
    if n == 1:
        return True
    adj = (q > 0) & ~np.eye(n, dtype=bool)

    def reach(mat):
        seen = {0}
        stack = [0]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(mat[i]):
                if j not in seen:
                    seen.add(int(j))
                    stack.append(int(j))
        return seen

    return len(reach(adj)) == n and len(reach(adj.T)) == n


def validate_rate_matrix(q) -> RateMatrix:
    """Check sign, row-sum and irreducibility constraints; returns a RateMatrix."""
    q = np.array(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise ValueError(f"rate matrix must be square, got shape {q.shape}")
    n = q.shape[0]
    for i in range(n):
        for j in range(n):
            if i != j and q[i, j] < 0:
                raise NegativeOffDiagonal(i, j, q[i, j])
    sums = q.sum(axis=1)
    for i in range(n):
        if abs(sums[i]) > _ROW_SUM_TOL * max(1.0, np.abs(q[i]).max()):
            raise RowSumNonzero(i, sums[i])
    # re-zero the diagonal so the row sums are exact after validation
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    if not _strongly_connected(q):
        # name a closed subset: states not reachable from 0, or not co-reachable
        raise NotIrreducible(_closed_component(q))
    q.setflags(write=False)
    return RateMatrix(q)


def _closed_component(q: np.ndarray):
    n = q.shape[0]
    adj = (q > 0) & ~np.eye(n, dtype=bool)
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            if int(j) not in seen:
                seen.add(int(j))
                stack.append(int(j))
    if len(seen) < n:
        return set(range(n)) - seen
    return seen


def stationary_law(Q: RateMatrix) -> StationaryLaw:
    """Solve p Q = 0, sum(p) = 1 by dense elimination (n is small)."""
    n = Q.n
    if n == 1:
        return StationaryLaw(np.array([1.0]))
    # append normalization row to Q^T
    a = np.vstack([Q.q.T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    p, *_ = np.linalg.lstsq(a, b, rcond=None)
    residual = float(np.abs(p @ Q.q).max())
    if not np.all(np.isfinite(p)) or residual > _RESIDUAL_TOL:
        raise SingularSystem(f"stationary solve residual {residual}")
    if np.any(p <= 0):
        raise SingularSystem(f"stationary law has non-positive entries: {p}")
    p = p / p.sum()
    return StationaryLaw(p)


def sample_chain(
    Q: RateMatrix, k0: int, horizon: float, rng: NoiseStream
) -> Iterator[Tuple[float, float, int]]:
    """Yield (t_start, t_end, state) segments covering [0, horizon].

    Holding time in state k is Exponential(-q_kk); next state j is drawn
    with probability q_kj / (-q_kk). The final segment is truncated at the
    horizon. Deterministic given (Q, k0, horizon, rng state).
    """
    n = Q.n
    if not 0 <= k0 < n:
        raise ValueError(f"initial environment {k0} outside [0, {n})")
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    q = Q.q
    t = 0.0
    k = int(k0)
    while t < horizon:
        rate = -q[k, k]
        if rate <= 0:  # absorbing only possible for n == 1
            yield (t, horizon, k)
            return
        hold = rng.exponential(1.0 / rate)
        t_next = t + hold
        if t_next >= horizon:
            yield (t, horizon, k)
            return
        yield (t, t_next, k)
        # embedded jump
        u = rng.uniform()
        probs = q[k] / rate
        acc = 0.0
        nxt = k
        for j in range(n):
            if j == k:
                continue
            acc += probs[j]
            if u <= acc:
                nxt = j
                break
        else:  # numerical slack: fall back to the last positive-rate state
            nxt = int(np.flatnonzero(q[k] > 0)[-1])
        k = nxt
        t = t_next


def occupation_fractions(Q: RateMatrix, k0: int, horizon: float, rng: NoiseStream) -> np.ndarray:
    """Empirical fraction of time spent in each state over [0, horizon]."""
    occ = np.zeros(Q.n)
    for t0, t1, k in sample_chain(Q, k0, horizon, rng):
        occ[k] += t1 - t0
    return occ / horizon
