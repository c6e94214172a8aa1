import numpy as np
import pytest
import scipy.linalg

from virtual_dme.linalg import (
    DensityMatrix,
    DimensionError,
    Observable,
    dagger,
    expm_herm,
    haar_unitary,
    herm_matrix_function,
    op_norm,
    partial_trace,
    permute_subsystems,
    random_hermitian,
    random_state,
    swap_operator,
    tensor,
    trace_norm,
    unvec,
    vec,
)
from conftest import assert_close


def loop_partial_trace(m, d1, d2, keep):
    """Element-wise reference for a bipartite partial trace."""
    t = m.reshape(d1, d2, d1, d2)
    if keep == 0:
        out = np.zeros((d1, d1), dtype=complex)
        for i in range(d1):
            for j in range(d1):
                out[i, j] = sum(t[i, k, j, k] for k in range(d2))
        return out
    out = np.zeros((d2, d2), dtype=complex)
    for i in range(d2):
        for j in range(d2):
            out[i, j] = sum(t[k, i, k, j] for k in range(d1))
    return out


def test_vec_identity(rng):
    a, x, b = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3))
    assert_close(vec(a @ x @ b), np.kron(b.T, a) @ vec(x), 1e-12)
    assert_close(unvec(vec(x), 3), x, 0)


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([0.7, 0.2]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 0.1], [0.2, 0.5]]))
    rho = DensityMatrix(np.diag([0.5, 0.5]))
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1.0
    assert rho.dim == 2 and not rho.is_pure()


def test_observable_rejects_non_hermitian():
    with pytest.raises(ValueError):
        Observable(np.array([[0, 1], [0, 0]]))
    o = Observable(np.diag([2.0, -3.0]))
    assert o.norm == pytest.approx(3.0)


@pytest.mark.parametrize("keep", [0, 1])
def test_partial_trace_matches_loop(rng, keep):
    m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    assert_close(partial_trace(m, [2, 3], keep=[keep]), loop_partial_trace(m, 2, 3, keep), 1e-12)


def test_partial_trace_of_product(rng):
    a = random_state(2, seed=rng).mat
    b = random_state(3, seed=rng).mat
    c = random_state(2, seed=rng).mat
    abc = tensor(a, b, c)
    assert_close(partial_trace(abc, [2, 3, 2], keep=[0, 2]), np.kron(a, c), 1e-12)
    assert_close(partial_trace(abc, [2, 3, 2], keep=[1]), b, 1e-12)


def test_permute_subsystems(rng):
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((3, 3))
    assert_close(permute_subsystems(np.kron(a, b), [2, 3], [1, 0]), np.kron(b, a), 1e-12)


def test_swap_operator(rng):
    a = rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3))
    s = swap_operator(3)
    assert_close(s @ np.kron(a, b) @ s, np.kron(b, a), 1e-12)


def test_expm_herm_against_pade(rng):
    h = random_hermitian(5, seed=rng)
    for t in (0.3, -2.0, 7.5):
        assert_close(expm_herm(h, t), scipy.linalg.expm(-1j * t * h), 1e-11)


def test_herm_matrix_function(rng):
    h = random_hermitian(4, seed=rng)
    assert_close(herm_matrix_function(h, lambda w: w**2), h @ h, 1e-12)
    with pytest.raises(ValueError):
        herm_matrix_function(np.array([[0, 1], [0, 0]]), np.cos)


def test_norms_against_svd(rng):
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    s = np.linalg.svd(m, compute_uv=False)
    assert op_norm(m) == pytest.approx(s[0], rel=1e-12)
    assert trace_norm(m) == pytest.approx(s.sum(), rel=1e-12)


def test_haar_unitary_is_unitary(rng):
    u = haar_unitary(6, rng)
    assert_close(u @ dagger(u), np.eye(6), 1e-12)


@pytest.mark.parametrize("kind", ["pure", "mixed"])
def test_random_state_is_valid(kind):
    rho = random_state(4, kind, seed=5)
    assert rho.is_pure() == (kind == "pure")
    assert np.linalg.eigvalsh(rho.mat).min() > -1e-12


def test_random_state_spectrum():
    rho = random_state(3, "spectrum", seed=1, spectrum=[0.6, 0.3, 0.1])
    assert_close(np.sort(np.linalg.eigvalsh(rho.mat)), [0.1, 0.3, 0.6], 1e-12)


def test_random_hermitian_norm():
    assert op_norm(random_hermitian(5, seed=2, norm=1.5)) == pytest.approx(1.5)


def test_dimension_guard(monkeypatch):
    monkeypatch.setenv("VDME_MAX_DIM", "8")
    with pytest.raises(DimensionError):
        tensor(np.eye(4), np.eye(4))
    monkeypatch.setenv("VDME_MAX_DIM", "16")
    assert tensor(np.eye(4), np.eye(4)).shape == (16, 16)
