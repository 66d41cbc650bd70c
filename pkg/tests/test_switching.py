import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critpop.errors import NegativeOffDiagonal, NotIrreducible, RowSumNonzero
from critpop.noise import NoiseStream
from critpop.switching import (
    occupation_fractions,
    sample_chain,
    stationary_law,
    validate_rate_matrix,
)


def rates(n):
    """Random irreducible generator with all off-diagonal rates positive."""
    return st.lists(
        st.lists(st.floats(min_value=0.05, max_value=5.0), min_size=n, max_size=n),
        min_size=n, max_size=n,
    ).map(_as_generator)


def _as_generator(rows):
    q = np.asarray(rows, dtype=float)
    np.fill_diagonal(q, 0.0)
    np.fill_diagonal(q, -q.sum(axis=1))
    return q


def test_negative_off_diagonal_rejected():
    with pytest.raises(NegativeOffDiagonal):
        validate_rate_matrix([[1.0, -1.0], [2.0, -2.0]])


def test_nonzero_row_sum_rejected():
    with pytest.raises(RowSumNonzero):
        validate_rate_matrix([[-1.0, 2.0], [1.0, -1.0]])


def test_reducible_rejected():
    with pytest.raises(NotIrreducible) as exc:
        validate_rate_matrix([[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    assert exc.value.component


def test_single_state_chain_is_valid():
    q = validate_rate_matrix([[0.0]])
    assert stationary_law(q).p[0] == 1.0
    segs = list(sample_chain(q, 0, 10.0, NoiseStream(0)))
    assert segs == [(0.0, 10.0, 0)]


def test_stationary_law_two_state():
    # jump rates 2 and 1: time fractions 1/3 and 2/3
    q = validate_rate_matrix([[-2.0, 2.0], [1.0, -1.0]])
    assert np.allclose(stationary_law(q).p, [1 / 3, 2 / 3], atol=1e-12)


@given(rates(3))
@settings(max_examples=25, deadline=None)
def test_stationary_law_properties(q):
    rm = validate_rate_matrix(q)
    p = stationary_law(rm).p
    assert np.all(p > 0)
    assert abs(p.sum() - 1.0) < 1e-12
    assert np.abs(p @ rm.q).max() < 1e-9


@given(rates(2), st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=20, deadline=None)
def test_chain_segments_tile_the_horizon(q, seed):
    rm = validate_rate_matrix(q)
    t = 0.0
    k_prev = None
    for t0, t1, k in sample_chain(rm, 0, 50.0, NoiseStream(seed)):
        assert t0 == t
        assert t1 > t0
        if k_prev is not None:
            assert k != k_prev  # embedded chain never stays put
        k_prev = k
        t = t1
    assert t == 50.0


def test_chain_is_deterministic_given_stream():
    q = validate_rate_matrix([[-2.0, 2.0], [1.0, -1.0]])
    a = list(sample_chain(q, 0, 100.0, NoiseStream(3)))
    b = list(sample_chain(q, 0, 100.0, NoiseStream(3)))
    assert a == b


def test_occupation_matches_stationary_law():
    q = validate_rate_matrix([[-2.0, 2.0], [1.0, -1.0]])
    occ = occupation_fractions(q, 0, 20_000.0, NoiseStream(5))
    assert abs(occ[0] - 1 / 3) < 0.02
    assert abs(occ.sum() - 1.0) < 1e-12
