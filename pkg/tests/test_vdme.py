import math

import numpy as np
import pytest

from virtual_dme.linalg import random_state
from virtual_dme.rng import make_rng
from virtual_dme.series import build_series, truncated_series_matrix
from virtual_dme.superop import diamond_bounds, unitary_channel
from virtual_dme.vdme import (
    EnumerationGuardError,
    build_pure,
    controlled_factors,
    controlled_series_matrix,
    controlled_slot_bound,
    controlled_target,
    default_general_r,
    default_pure_r,
    direct_mean_general,
    enumerate_mean_general,
    exact_mean_controlled,
    exact_mean_general,
    exact_mean_pure,
    general_slot_bound,
    lmr_channel,
    lmr_copy_count,
    reduce_period,
    sample_controlled,
    sample_general,
    sample_pure,
    sequence_copies,
    target_channel,
)
from conftest import assert_close
from oracles import evolve_unitary


def test_default_segment_counts():
    assert default_general_r(1.0) == 2
    assert default_general_r(0.3) == 1
    assert default_pure_r(1.0) == 4
    assert default_pure_r(0.5) == 4
    assert default_pure_r(math.pi) == 40


def test_sequence_copies():
    assert sequence_copies([0, 0, 0, 0]) == 4
    assert sequence_copies([1, 0, 2, 0]) == 4 + 2 * 3


@pytest.mark.parametrize("r,L", [(1, 1), (1, 2), (2, 1)])
def test_enumeration_matches_direct(rng, r, L):
    rho = random_state(3, seed=rng).mat
    spec = build_series(0.9, r, L=L)
    assert_close(enumerate_mean_general(spec, rho).mat, direct_mean_general(spec, rho).mat, 1e-13)


def test_enumeration_guard(rng):
    spec = build_series(1.0, 4, L=6)
    with pytest.raises(EnumerationGuardError):
        enumerate_mean_general(spec, random_state(2, seed=rng).mat)
    assert exact_mean_general(spec, random_state(2, seed=rng).mat, route="auto").dim_in == 2


def test_sampled_maps_average_to_mean():
    rho = random_state(2, seed=4).mat
    spec = build_series(1.0, 2, 1e-3)
    rng = make_rng(11)
    n = 4000
    mats = np.array([sample_general(spec, rho, rng).raw_map.mat for _ in range(n)])
    exact = direct_mean_general(spec, rho).mat
    for part in (np.real, np.imag):
        m = part(mats)
        se = m.std(axis=0) / math.sqrt(n) + 1e-12
        assert np.all(np.abs(m.mean(axis=0) - part(exact)) <= 5 * se)


def test_sample_is_seed_deterministic():
    rho = random_state(2, seed=4).mat
    spec = build_series(1.0, 2, 1e-3)
    a = sample_general(spec, rho, 99)
    b = sample_general(spec, rho, 99)
    assert a.seq == b.seq
    assert_close(a.effective_map.mat, b.effective_map.mat, 0)
    assert a.effective_map.hp
    assert a.sign_weight == pytest.approx(spec.overhead)


def test_forced_indices():
    rho = random_state(2, seed=4).mat
    spec = build_series(1.0, 1, L=2)
    s = sample_general(spec, rho, None, indices=[2, 0])
    assert s.seq.indices == (2, 0) and s.seq.copies == 6
    assert s.seq.prob == pytest.approx(spec.probs[2] * spec.probs[0])


def test_mean_approaches_target(rng):
    rho = random_state(3, seed=rng).mat
    spec = build_series(1.0, 2, 1e-6)
    scaled = direct_mean_general(spec, rho) * spec.overhead
    _, hi = diamond_bounds(scaled, target_channel(rho, 1.0))
    assert hi <= general_slot_bound(spec, rho) * 3 + 1e-15
    assert general_slot_bound(spec, rho) <= general_slot_bound(spec)


@pytest.mark.parametrize("d", [2, 4])
@pytest.mark.parametrize("T", [0.5, 1.0, math.pi, -2.0])
def test_pure_variant_exact(rng, d, T):
    psi = random_state(d, "pure", seed=rng).mat
    ps = build_pure(T)
    scaled = exact_mean_pure(ps, psi) * ps.overhead
    _, hi = diamond_bounds(scaled, unitary_channel(evolve_unitary(psi, T)))
    assert hi <= 1e-11
    assert ps.overhead <= math.e


def test_pure_rejects_mixed(rng):
    with pytest.raises(ValueError):
        exact_mean_pure(build_pure(1.0), random_state(2, seed=rng).mat)


def test_pure_sample_copies(rng):
    psi = random_state(2, "pure", seed=rng).mat
    ps = build_pure(1.0)
    s = sample_pure(ps, psi, 3)
    assert len(s.seq.indices) == 2 * ps.r
    assert s.effective_map.hp


def test_reduce_period():
    assert reduce_period(1.0) == 1.0
    assert reduce_period(2 * math.pi) == pytest.approx(2 * math.pi)
    assert reduce_period(-(2 * math.pi + 0.5)) == pytest.approx(-0.5)
    psi = random_state(2, "pure", seed=1).mat
    T = 9.0
    ps = build_pure(T)
    scaled = exact_mean_pure(ps, psi) * ps.overhead
    assert diamond_bounds(scaled, unitary_channel(evolve_unitary(psi, T)))[1] <= 1e-10


def test_controlled_block_structure(rng):
    rho = random_state(2, seed=rng).mat
    spec = build_series(0.7, 1, 1e-4)
    for f in controlled_factors(spec, rho):
        assert_close(f[:2, 2:], 0, 0)
        assert_close(f[2:, :2], 0, 0)
    cs = controlled_series_matrix(spec, rho)
    assert_close(cs[2:, 2:], truncated_series_matrix(spec, rho), 0)
    assert_close(cs[:2, :2], truncated_series_matrix(spec.with_time(-0.7), rho), 0)


def test_controlled_mean_and_bound(rng):
    rho = random_state(2, seed=rng).mat
    spec = build_series(1.0, 2, 0.01)
    scaled = exact_mean_controlled(spec, rho) * spec.overhead
    target = unitary_channel(controlled_target(rho, 1.0))
    _, hi = diamond_bounds(scaled, target)
    assert hi <= 0.01
    assert controlled_slot_bound(spec, rho) <= 0.01
    s = sample_controlled(spec, rho, 5)
    assert s.raw_map.dim_in == 4


def test_lmr_channel_converges(rng):
    rho = random_state(2, seed=rng).mat
    errs = [diamond_bounds(lmr_channel(rho, 1.0, n), target_channel(rho, 1.0))[1] for n in (10, 100, 1000)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(10, rel=0.1)


def test_lmr_copy_count(rng):
    rho = random_state(3, seed=rng).mat
    c = lmr_copy_count(1.0, 0.01, rho)
    assert c.analytic == 100
    err = lambda n: diamond_bounds(lmr_channel(rho, 1.0, n), target_channel(rho, 1.0))[1]
    assert err(c.measured) <= 0.01 < err(c.measured - 1)
    assert lmr_copy_count(1.0, 0.01).measured == 100
