import json

import numpy as np
import pytest

from critpop.engines import IntegratorConfig
from critpop.experiments import (
    EXPERIMENTS,
    FAIL,
    INCONCLUSIVE,
    PASS,
    evaluate_verdict,
    regime,
    run_critical,
    run_persistent,
    run_subcritical,
)
from critpop.models.seir import Seir
from critpop.models.sirs import Sirs
from critpop.noise import NoiseStream
from critpop.switching import validate_rate_matrix
from critpop.thresholds import ThresholdEstimate

Q2 = validate_rate_matrix([[-2.0, 2.0], [1.0, -1.0]])


def sirs(beta):
    b = [beta, beta] if np.isscalar(beta) else beta
    return Sirs(inflow=2.0, mortality=1.0, immunity_loss=[0.5, 0.5],
                beta=b, alpha=[0.4, 0.4], delta=[0.6, 0.6])


def est(value, se=0.0):
    return ThresholdEstimate(value, se, "closed-form", horizon=0.0, dt=0.0)


# -- verdict rules are pure functions of the report dict --------------------------

def _critical_report(ext, ceiling, thr_se=0.0, thr_value=0.0):
    cps = list(np.linspace(5.0, 100.0, 20))
    return {
        "kind": "critical",
        "seeds": list(range(len(ext))),
        "checkpoints": cps,
        "extinction_avg": [list(np.interp(cps, [5.0, 100.0], [row[0], row[-1]]))
                           if len(row) == 2 else row for row in ext],
        "companion_avg": None,
        "companion_target": None,
        "threshold": {"value": thr_value, "se": thr_se},
        "settings": {"ceiling": ceiling, "companion_rtol": 0.05,
                     "trend_fraction": 0.9, "tolerance": 0.02},
    }


def test_critical_verdict_pass_and_fail_from_report_alone():
    good = _critical_report([[1.0, 0.1]] * 5, ceiling=0.5)
    verdict, details = evaluate_verdict(good)
    assert verdict == PASS and details["trend_fraction"] == 1.0

    flat = _critical_report([[0.4, 0.4]] * 5, ceiling=0.5)
    assert evaluate_verdict(flat)[0] == FAIL


def test_critical_verdict_inconclusive_when_threshold_se_overlaps_zero():
    flat = _critical_report([[0.4, 0.4]] * 5, ceiling=0.5,
                            thr_value=0.01, thr_se=0.02)
    verdict, details = evaluate_verdict(flat)
    assert verdict == INCONCLUSIVE
    assert "reason" in details


def test_subcritical_verdict_flags_each_offending_seed():
    report = {
        "kind": "subcritical",
        "seeds": [10, 11, 12],
        "growth": [{"value": -0.5, "se": 0.01}, {"value": -0.1, "se": 0.01},
                   {"value": -0.45, "se": 0.01}],
        "threshold": {"value": -0.4, "se": 0.0},
    }
    verdict, details = evaluate_verdict(report)
    assert verdict == FAIL
    assert [v["seed"] for v in details["violations"]] == [11]


def test_regime_classifier_uses_se_band():
    assert regime(est(-0.5)) == "subcritical"
    assert regime(est(0.5)) == "persistent"
    assert regime(est(0.005)) == "critical-band"
    assert regime(est(0.05, se=0.03)) == "critical-band"


# -- the experiment drivers on cheap configurations -------------------------------

def test_subcritical_sirs_decays_at_closed_form_rate():
    m = sirs(0.5)  # threshold = 0.5*2 - 2 = -1
    cfg = IntegratorConfig(dt=0.05, horizon=60.0, burn_in=10.0)
    rep = run_subcritical(m, cfg, seeds=[1, 2, 3], Q=Q2)
    assert rep.verdict == PASS
    assert abs(rep.threshold["value"] + 1.0) < 1e-12
    for g in rep.growth:
        assert abs(g["value"] + 1.0) < 0.1
    json.dumps(rep.to_dict())


def test_subcritical_requires_negative_threshold():
    cfg = IntegratorConfig(dt=0.05, horizon=60.0, burn_in=10.0)
    with pytest.raises(ValueError):
        run_subcritical(sirs(2.0), cfg, seeds=[1], Q=Q2)


def test_critical_requires_near_zero_threshold():
    cfg = IntegratorConfig(dt=0.05, horizon=60.0, burn_in=10.0)
    with pytest.raises(ValueError):
        run_critical(sirs(0.5), cfg, seeds=[1], Q=Q2)


def test_critical_sirs_average_infection_decreases():
    # beta* = (mu + alpha + delta) / S* = 2/2 = 1
    m = sirs(1.0)
    cfg = IntegratorConfig(dt=0.05, horizon=2000.0, burn_in=0.0)
    rep = run_critical(m, cfg, seeds=[4, 5, 6], Q=Q2)
    assert abs(rep.threshold["value"]) < 1e-12
    assert rep.verdict in (PASS, INCONCLUSIVE)
    ext = np.asarray(rep.extinction_avg)
    assert ext.shape == (3, 20)
    assert np.all(ext[:, -1] < ext[:, 4])  # averages head down


def test_persistent_sirs_stabilizes_and_reports_interior_h():
    m = sirs(2.0)  # threshold = +1
    cfg = IntegratorConfig(dt=0.05, horizon=400.0, burn_in=40.0)
    rep = run_persistent(m, cfg, seeds=[7, 8], Q=Q2)
    assert rep.verdict == PASS
    assert rep.interior_h is not None
    assert abs(rep.interior_h["value"]) < 0.05
    json.dumps(rep.to_dict())


def test_persistent_requires_positive_threshold():
    cfg = IntegratorConfig(dt=0.05, horizon=60.0, burn_in=10.0)
    with pytest.raises(ValueError):
        run_persistent(sirs(0.5), cfg, seeds=[1], Q=Q2)


def test_reports_are_reproducible_per_seed():
    m = sirs(2.0)
    cfg = IntegratorConfig(dt=0.05, horizon=200.0, burn_in=20.0)
    a = run_persistent(m, cfg, seeds=[9], Q=Q2)
    b = run_persistent(m, cfg, seeds=[9], Q=Q2)
    assert a.to_dict() == b.to_dict()


def test_batched_sde_experiment_matches_verdict_machinery():
    m = Seir(inflow=1.0, mortality=1.0, removal=1.0, beta=4.0, incubation=2.0)
    cfg = IntegratorConfig(dt=0.02, horizon=300.0, burn_in=30.0)
    rep = run_persistent(m, cfg, seeds=[1, 2], floor=1e-4)
    assert rep.kind == "persistent"
    assert rep.verdict == PASS
    assert set(EXPERIMENTS) == {"subcritical", "critical", "persistent"}
