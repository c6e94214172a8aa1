import math

import numpy as np
import pytest

from virtual_dme.estimator import (
    CircuitPlan,
    Slot,
    bias_bound,
    bias_formula,
    choose_segments,
    direct_truth,
    estimate_exact,
    estimate_shots,
    expected_copies,
    random_plan,
)
from virtual_dme.linalg import Observable, random_state

FLOAT_FLOOR = 1e-12  # roundoff of the propagated expectation values


def test_slot_validation():
    rho = random_state(2, seed=1).mat
    with pytest.raises(ValueError):
        Slot(0.0, rho)
    with pytest.raises(ValueError):
        Slot(1.5, rho)
    assert Slot(1.5, rho, long_time=True).T == 1.5
    assert Slot(5.0, random_state(2, "pure", seed=1).mat, "pure").T == 5.0
    with pytest.raises(ValueError):
        Slot(0.5, rho, "other")


def test_plan_validation():
    rho = random_state(2, seed=1).mat
    s = Slot(0.5, rho)
    with pytest.raises(ValueError):
        CircuitPlan((np.eye(2),), (s,), rho, Observable(np.eye(2)))
    with pytest.raises(ValueError):
        CircuitPlan((np.eye(2), 2 * np.eye(2)), (s,), rho, Observable(np.eye(2)))
    plan = CircuitPlan((np.eye(4), np.eye(4)), (Slot(0.5, rho, "controlled"),), np.eye(4) / 4, Observable(np.eye(4)))
    assert plan.control and plan.dim == 4


def test_choose_segments():
    assert choose_segments(2, math.sqrt(2)) == [12, 12]
    assert choose_segments(1, math.e) == [2]
    with pytest.raises(ValueError):
        choose_segments(2, 1.0)


def test_bias_formula():
    assert bias_formula(1.0, 2, 0.0) == 0.0
    assert bias_formula(2.0, 3, 0.01) == pytest.approx(2 * 3 * 0.01 * math.exp(0.03))


@pytest.mark.parametrize("kinds", ["general", ["general", "pure"], ["controlled", "general"]])
def test_exact_mode_within_bias_bound(kinds):
    plan = random_plan(3, 2, seed=7, kinds=kinds)
    for eps in (1e-2, 1e-6):
        gap = abs(estimate_exact(plan, eps) - direct_truth(plan))
        assert gap <= bias_bound(plan, eps) + FLOAT_FLOOR


def test_pure_slots_are_exact():
    plan = random_plan(2, 2, seed=3, kinds="pure")
    assert bias_bound(plan) == 0.0
    assert abs(estimate_exact(plan) - direct_truth(plan)) <= FLOAT_FLOOR


def test_identity_observable_gives_one():
    plan = random_plan(2, 1, seed=5)
    plan = CircuitPlan(plan.interleavers, plan.slots, plan.sigma, Observable(np.eye(2)))
    rep = estimate_shots(plan, 20000, seed=1)
    assert abs(rep.mean_estimate - 1.0) <= 4 * rep.std_error + rep.bias_bound


def test_shot_mode_agrees_with_exact():
    plan = random_plan(2, 2, seed=9, kinds=["general", "controlled"])
    rep = estimate_shots(plan, 30000, seed=2, eps_map=1e-3)
    assert abs(rep.mean_estimate - estimate_exact(plan, 1e-3)) <= 4 * rep.std_error
    assert rep.samples == 30000
    assert rep.copies_min <= rep.copies_mean <= rep.copies_max
    assert rep.variance_factor == pytest.approx(rep.overhead**2)


def test_copy_statistics_bounded():
    plan = random_plan(2, 2, seed=4)
    worst, mean = expected_copies(plan, 1e-3)
    rep = estimate_shots(plan, 5000, seed=3, eps_map=1e-3)
    assert rep.copies_max <= worst
    assert rep.copies_mean == pytest.approx(mean, rel=0.05)


def test_shots_deterministic_and_worker_independent():
    plan = random_plan(2, 2, seed=8)
    a = estimate_shots(plan, 20000, seed=5, chunk=4096)
    b = estimate_shots(plan, 20000, seed=5, chunk=4096)
    c = estimate_shots(plan, 20000, seed=5, chunk=4096, workers=2)
    assert a == b
    assert a.mean_estimate == c.mean_estimate and a.std_error == c.std_error
    d = estimate_shots(plan, 20000, seed=6, chunk=4096)
    assert d.mean_estimate != a.mean_estimate


def test_group_log_accounts_for_every_shot():
    plan = random_plan(2, 1, seed=2)
    log = []
    estimate_shots(plan, 3000, seed=1, log=log)
    assert sum(c for _, _, c in log) == 3000
    path, eigenvalue, count = log[0]
    assert len(path) == 1 and path[0][1] in (1, -1)


def test_shots_need_seed():
    plan = random_plan(2, 1, seed=2)
    with pytest.raises(ValueError):
        estimate_shots(plan, 10, seed=None)
    with pytest.raises(ValueError):
        estimate_shots(plan, 0, seed=1)


def test_gamma_budget_caps_overhead():
    plan = random_plan(3, 2, seed=1)
    rep = estimate_shots(plan, 2000, seed=1, gamma=math.sqrt(2))
    assert rep.overhead <= math.sqrt(2)
