import numpy as np
import pytest

from virtual_dme.lcs import (
    ConvexDilation,
    DilatedChannel,
    chain_dilation,
    controlled_pair,
    dilate,
    off_diagonal_block,
    prepare,
    pure_chain_dilation,
    readout_superop,
    segment_dilation,
    swap_layer,
    symmetrized_dilation,
    x_readout,
)
from virtual_dme.linalg import haar_unitary, random_state, unvec, vec
from virtual_dme.series import build_series
from virtual_dme.superop import asymmetric_map, hermitian_part, partial_swap_sandwich, unitary_channel
from virtual_dme.vdme import _chain, build_pure, chain_map, controlled_factors, pure_factors, segment_map
from conftest import assert_close
from oracles import labelled_swap_layer, matrix_units


def rand_mat(rng, d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def test_swap_layer_against_environment(rng):
    rho = random_state(2, seed=rng).mat
    angles = [0.4, -1.1]
    w = rand_mat(rng, 4)
    assert_close(swap_layer(angles, rho).apply(w), labelled_swap_layer(angles, rho, w), 1e-12)


def test_swap_layer_four_labels(rng):
    rho = random_state(2, seed=rng).mat
    angles = [0.3, -0.3, np.pi / 2, 0.0]
    w = rand_mat(rng, 8)
    assert_close(swap_layer(angles, rho).apply(w), labelled_swap_layer(angles, rho, w), 1e-12)


def test_swap_layer_idle_register(rng):
    rho = random_state(2, seed=rng).mat
    angles = [0.5, 0.2]
    a = rand_mat(rng, 2)
    idle = rand_mat(rng, 3)
    out = swap_layer(angles, rho, idle_dim=3).apply(np.kron(np.kron(np.ones((2, 2)), a), idle))
    # label block (i, j) acts by the (angle_i, angle_j) sandwich and the idle factor is untouched
    blocks = out.reshape(2, 6, 2, 6)
    for i in range(2):
        for j in range(2):
            expected = np.kron(partial_swap_sandwich(angles[i], angles[j], rho)(a), idle)
            assert_close(blocks[i, :, j, :], expected, 1e-12)
    assert swap_layer(angles, rho).is_cptp()


@pytest.mark.parametrize("d", [2, 3])
def test_segment_block_is_half_the_segment(rng, d):
    rho = random_state(d, seed=rng).mat
    spec = build_series(-0.8, 1, L=2)
    for l, lp in [(0, 0), (1, 0), (2, 1)]:
        dc = DilatedChannel(segment_dilation(spec, rho, l, lp))
        assert dc.cptp
        for e in matrix_units(d):
            assert_close(2 * off_diagonal_block(dc, e), segment_map(spec, rho, l, lp)(e), 1e-12)


def test_chain_readout_is_hermitian_part(rng):
    rho = random_state(2, seed=rng).mat
    spec = build_series(1.0, 2, L=2)
    idx = [1, 0, 2, 1]
    dc = chain_dilation(spec, rho, idx)
    raw = chain_map(spec, rho, idx)
    assert_close(readout_superop(dc).mat, hermitian_part(raw).mat, 1e-12)


def test_symmetrized_mixture(rng):
    rho = random_state(3, seed=rng).mat
    spec = build_series(0.6, 1, L=2)
    idx = [2, 0]
    mix = symmetrized_dilation(lambda i: chain_dilation(spec, rho, i), idx).expand()
    raw = chain_map(spec, rho, idx)
    swapped = chain_map(spec, rho, [0, 2])
    assert_close(readout_superop(mix).mat, 0.5 * (hermitian_part(raw).mat + hermitian_part(swapped).mat), 1e-12)


def test_controlled_segment(rng):
    rho = random_state(2, seed=rng).mat
    spec = build_series(0.9, 1, L=1)
    f = controlled_factors(spec, rho)
    dc = DilatedChannel(segment_dilation(spec, rho, 1, 0, controlled=True))
    assert dc.cptp
    for e in matrix_units(4):
        assert_close(2 * off_diagonal_block(dc, e), f[1] @ e @ f[0].conj().T, 1e-12)


def test_pure_chain(rng):
    psi = random_state(2, "pure", seed=rng).mat
    ps = build_pure(1.0)
    idx = [0, 1, 1, 0, 0, 0, 1, 1]
    lt, rt = _chain(pure_factors(ps, psi), list(zip(idx[::2], idx[1::2])))
    dc = pure_chain_dilation(ps, psi, idx)
    assert dc.cptp
    for e in matrix_units(2):
        assert_close(2 * off_diagonal_block(dc, e), lt @ e @ rt, 1e-12)


def test_dilate_cptp(rng):
    u = unitary_channel(haar_unitary(2, rng))
    dc = dilate(u)
    a = rand_mat(rng, 2)
    assert_close(x_readout(dc, a), u(a), 1e-12)
    with pytest.raises(ValueError):
        dilate(asymmetric_map(haar_unitary(2, rng), haar_unitary(2, rng)))


def test_dilate_asymmetric_mixture(rng):
    terms = [(0.25, haar_unitary(2, rng), haar_unitary(2, rng)), (0.75, haar_unitary(2, rng), haar_unitary(2, rng))]
    cd = dilate(kind="asymmetric", terms=terms)
    assert isinstance(cd, ConvexDilation)
    full = cd.expand()
    assert full.cptp
    target = sum(q * asymmetric_map(u, v).mat for q, u, v in terms)
    for e in matrix_units(2):
        assert_close(2 * off_diagonal_block(full, e), unvec(target @ vec(e), 2), 1e-12)
    with pytest.raises(ValueError):
        dilate(kind="asymmetric", terms=[(0.5, np.eye(2), np.eye(2))])
    assert cd.sample(np.random.default_rng(0)) in cd.channels


def test_controlled_pair_and_prepare():
    u, v = np.eye(2), np.diag([1, -1])
    cp = controlled_pair(u, v)
    assert_close(cp, np.diag([1, 1, 1, -1]), 0)
    assert_close(np.trace(prepare(np.eye(2) / 2)), 1, 1e-15)


def test_readout_shape_check(rng):
    dc = dilate(unitary_channel(haar_unitary(2, rng)))
    with pytest.raises(ValueError):
        x_readout(dc, np.eye(3))
