import json

import numpy as np

from critpop.coupling import (
    COUPLINGS,
    couple_patchy,
    couple_rma,
    couple_seir,
    couple_sis,
)
from critpop.engines import IntegratorConfig
from critpop.models.patchy import Patchy
from critpop.models.rma import Rma
from critpop.models.seir import Seir
from critpop.models.sis import Sis
from critpop.noise import NoiseStream
from critpop.switching import validate_rate_matrix

Q2 = validate_rate_matrix([[-2.0, 2.0], [1.0, -1.0]])


def rma():
    return Rma(carrying=4.0, alpha=0.5, noise=1.0)


def patchy2():
    return Patchy(growth=[1.0, 0.8], competition=[1.0, 1.2],
                  dispersal=[[-0.3, 0.3], [0.5, -0.5]],
                  loading=[[0.6, 0.1], [0.1, 0.5]])


def sis2():
    return Sis(contact=[[[0.5, 1.2], [1.2, 0.5]], [[0.8, 1.5], [1.5, 0.8]]],
               recovery=[[1.0, 1.0], [0.9, 0.9]])


def seir2():
    return Seir(inflow=1.0, mortality=1.0, removal=[1.0, 1.0],
                beta=[4.0, 3.0], incubation=[2.0, 1.5])


def test_registry_names():
    assert set(COUPLINGS) == {"rma", "patchy", "sis", "seir"}


def test_rma_without_predator_is_pathwise_identity():
    cfg = IntegratorConfig(dt=0.01, horizon=100.0, burn_in=10.0)
    run = couple_rma(rma(), cfg, NoiseStream(0), y0=0.0)
    assert run.violations == 0
    assert abs(run.avg_gap) < 1e-12  # same drift, same noise, same start


def test_rma_predation_creates_a_positive_gap():
    cfg = IntegratorConfig(dt=0.01, horizon=200.0, burn_in=20.0)
    run = couple_rma(rma(), cfg, NoiseStream(1), y0=0.5)
    assert run.violations == 0
    assert run.avg_gap > 0.0
    assert run.avg_gap > 3.0 * run.gap_se


def test_patchy_sandwich_order_and_extras():
    cfg = IntegratorConfig(dt=0.01, horizon=120.0, burn_in=20.0)
    run = couple_patchy(patchy2(), cfg, NoiseStream(2))
    assert run.violations == 0
    assert run.avg_gap > 0.0  # linear envelope grows past the nonlinear total
    assert run.extras["sigma_bar"] > 0.0
    # the damped and linear systems share their direction dynamics, so the
    # recorded deviation is pure discretization error
    assert run.extras["direction_max_dev"] < 0.05
    assert run.extras["growth_linear"] >= run.extras["growth_damped"]


def test_sis_sandwich_order():
    cfg = IntegratorConfig(dt=0.01, horizon=150.0, burn_in=20.0)
    run = couple_sis(sis2(), Q2, cfg, NoiseStream(3))
    assert run.violations == 0
    assert run.avg_gap >= 0.0
    assert run.extras["sigma_bar"] > 0.0


def test_seir_infection_dominates_boundary_flow():
    cfg = IntegratorConfig(dt=0.01, horizon=150.0, burn_in=20.0)
    run = couple_seir(seir2(), Q2, cfg, NoiseStream(4))
    assert run.violations == 0
    assert run.avg_gap >= 0.0
    assert run.extras["v_liminf"] > 0.0


def test_seir_zero_infection_stays_zero():
    cfg = IntegratorConfig(dt=0.01, horizon=50.0, burn_in=5.0)
    m = seir2()
    z0 = np.array([m.disease_free_s, 0.0, 0.0])
    run = couple_seir(m, Q2, cfg, NoiseStream(5), z0=z0)
    assert run.violations == 0
    assert run.avg_gap == 0.0


def test_coupled_run_is_deterministic_and_serializable():
    cfg = IntegratorConfig(dt=0.02, horizon=60.0, burn_in=10.0)
    a = couple_sis(sis2(), Q2, cfg, NoiseStream(6))
    b = couple_sis(sis2(), Q2, cfg, NoiseStream(6))
    assert a.to_dict() == b.to_dict()
    json.dumps(a.to_dict())  # must not choke on numpy scalars


def test_violations_do_not_appear_at_finer_dt():
    coarse = IntegratorConfig(dt=0.02, horizon=100.0, burn_in=10.0)
    fine = IntegratorConfig(dt=0.01, horizon=100.0, burn_in=10.0)
    vc = couple_patchy(patchy2(), coarse, NoiseStream(7)).violations
    vf = couple_patchy(patchy2(), fine, NoiseStream(8)).violations
    assert vf <= max(vc, 0) and vf == 0
