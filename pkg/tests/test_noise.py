import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from critpop.noise import NoiseStream

seeds = st.integers(min_value=0, max_value=2**31 - 1)


@given(seeds, st.integers(min_value=0, max_value=1000))
def test_same_identity_same_draws(seed, stream_id):
    a = NoiseStream(seed, stream_id).normals(16)
    b = NoiseStream(seed, stream_id).normals(16)
    assert np.array_equal(a, b)


@given(seeds)
def test_distinct_streams_differ(seed):
    a = NoiseStream(seed, 0).normals(16)
    b = NoiseStream(seed, 1).normals(16)
    assert not np.array_equal(a, b)


@given(seeds, st.integers(min_value=0, max_value=50), st.integers(min_value=0, max_value=50))
def test_spawn_is_deterministic_and_injective(seed, i, j):
    s = NoiseStream(seed, 3)
    a, b = s.spawn(i), s.spawn(j)
    assert a.stream_id == NoiseStream(seed, 3).spawn(i).stream_id
    if i != j:
        assert a.stream_id != b.stream_id
    assert a.stream_id != s.stream_id


def test_increments_scale_with_sqrt_h():
    h = 0.25
    draws = NoiseStream(7).increments(h, 200_000)
    assert abs(draws.mean()) < 3 * np.sqrt(h / 200_000)
    assert abs(draws.std() - np.sqrt(h)) < 5e-3


def test_exponential_and_uniform_ranges():
    s = NoiseStream(11)
    assert s.exponential(2.0) > 0
    u = s.uniform()
    assert 0 <= u < 1
    assert s.position == 2
