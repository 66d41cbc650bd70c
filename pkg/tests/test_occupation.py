import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critpop.errors import NonMonotoneTime, NonPositiveValue, TooFewBatches
from critpop.occupation import (
    BatchMeans,
    CheckpointRecorder,
    OccupationHistogram,
    RunningAverage,
    batch_ci,
    log_growth,
)


def test_running_average_is_exact_for_linear_functions():
    acc = RunningAverage()
    ts = np.linspace(0, 10, 37)
    for t in ts:
        acc.observe(t, 2.0 * t + 1.0)
    # trapezoid rule is exact on affine integrands
    assert abs(acc.mean - (2.0 * 5.0 + 1.0)) < 1e-12


def test_running_average_rejects_backward_time():
    acc = RunningAverage()
    acc.observe(0.0, 1.0)
    acc.observe(1.0, 1.0)
    with pytest.raises(NonMonotoneTime):
        acc.observe(0.5, 1.0)


def test_running_average_merge_is_associative_on_disjoint_windows():
    a, b = RunningAverage(), RunningAverage()
    for t in np.linspace(0, 5, 11):
        a.observe(t, t ** 2)
    for t in np.linspace(5, 10, 11):
        b.observe(t, t ** 2)
    whole = RunningAverage()
    for t in np.linspace(0, 10, 21):
        whole.observe(t, t ** 2)
    assert abs(a.merge(b).mean - whole.mean) < 1e-12


@given(st.lists(st.floats(min_value=-5, max_value=5), min_size=40, max_size=80))
@settings(max_examples=30, deadline=None)
def test_batch_means_mean_matches_global_trapezoid(values):
    ts = np.linspace(0.0, 20.0, len(values))
    bm = BatchMeans(0.0, 20.0, n_batches=10)
    ra = RunningAverage()
    for t, v in zip(ts, values):
        bm.observe(t, v)
        ra.observe(t, v)
    assert abs(bm.mean - ra.mean) < 1e-9
    assert abs(np.mean(bm.batch_means) - bm.mean) < 1e-9


def test_batch_means_burn_in_window_drops_early_mass():
    bm = BatchMeans(10.0, 20.0, n_batches=5)
    for t in np.linspace(0.0, 20.0, 401):
        bm.observe(t, 100.0 if t < 10.0 else 1.0)
    assert abs(bm.mean - 1.0) < 0.2  # only edge interpolation leaks in


def test_batch_se_is_zero_for_constant_observable():
    bm = BatchMeans(0.0, 10.0, n_batches=20)
    for t in np.linspace(0, 10, 201):
        bm.observe(t, 3.0)
    # batch means are all 3.0 up to trapezoid rounding across batch edges
    assert bm.se < 1e-12
    mean, half = batch_ci(bm)
    assert abs(mean - 3.0) < 1e-12 and half < 1e-12


def test_batch_ci_requires_enough_batches():
    bm = BatchMeans(0.0, 1.0, n_batches=5)
    with pytest.raises(TooFewBatches):
        batch_ci(bm)


def test_log_growth_exact_on_exponential():
    ts = np.linspace(0, 10, 501)
    est = log_growth(ts, np.exp(-0.7 * ts), burn_in=1.0, horizon=10.0)
    assert abs(est.value + 0.7) < 1e-9
    assert est.se < 1e-9


def test_log_growth_rejects_nonpositive_values():
    with pytest.raises(NonPositiveValue):
        log_growth([0, 1, 2], [1.0, 0.0, 1.0], 0.0, 2.0, n_batches=2)


def test_checkpoint_recorder_matches_direct_average():
    rec = CheckpointRecorder([2.5, 5.0, 10.0])
    ts = np.linspace(0, 10, 1001)
    f = lambda t: np.sin(t) + 2.0
    for t in ts:
        rec.observe(t, f(t))
    for tc, got in zip([2.5, 5.0, 10.0], rec.values):
        ref = RunningAverage()
        for t in ts[ts <= tc]:
            ref.observe(t, f(t))
        assert abs(got - ref.mean) < 1e-6


def test_occupation_histogram_masses():
    hist = OccupationHistogram(lows=[0.0], highs=[1.0], bins=[4])
    for t, x in [(0.0, 0.1), (1.0, 0.1), (2.0, 0.9), (3.0, 5.0), (4.0, 5.0)]:
        hist.observe(t, [x])
    # 2 units in bin 0, 1 unit in bin 3, 1 unit out of the box
    assert hist.weights[0] == 2.0
    assert hist.weights[3] == 1.0
    assert abs(hist.out_of_box - 0.25) < 1e-12
    assert abs(hist.in_box.sum() + hist.out_of_box - 1.0) < 1e-12
