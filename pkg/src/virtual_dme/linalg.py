"""Dense complex linear algebra shared by every other module.

Operators are plain ``numpy`` complex arrays.  Vectorization is column
stacking throughout the package, ``vec(A) = A.reshape(-1, order="F")``, so
that ``vec(A X B) = (B.T kron A) vec(X)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

HERM_TOL = 1e-12
PROP_TOL = 1e-10
DEFAULT_MAX_DIM = 64


class DimensionError(ValueError):
    """Raised when a register would exceed the configured dimension guard."""


def max_dim() -> int:
    """Largest total Hilbert-space dimension the simulator will materialize.

    Overridden by the ``VDME_MAX_DIM`` environment variable.
    """
    env = os.environ.get("VDME_MAX_DIM")
    if env:
        return int(env)
    return DEFAULT_MAX_DIM


def _as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m, tol: float = HERM_TOL) -> bool:
    a = np.asarray(m)
    return a.shape[-1] == a.shape[-2] and np.max(np.abs(a - dagger(a)), initial=0.0) <= tol


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    return np.asarray(v).reshape((rows, rows if cols is None else cols), order="F")


@dataclass(frozen=True)
class DensityMatrix:
    """Validated quantum state: Hermitian, unit trace, positive semidefinite."""

    mat: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.mat)
        if m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if not is_hermitian(m, HERM_TOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > HERM_TOL:
            raise ValueError(f"density matrix trace is {np.trace(m).real}, not 1")
        if np.linalg.eigvalsh(m).min() < -PROP_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))

    def is_pure(self, tol: float = PROP_TOL) -> bool:
        return abs(self.purity() - 1.0) <= tol


@dataclass(frozen=True)
class Observable:
    """Hermitian observable with cached spectral decomposition."""

    mat: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.mat)
        if not is_hermitian(m, HERM_TOL):
            raise ValueError("observable is not Hermitian")
        m = 0.5 * (m + dagger(m))
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.mat if dtype is None else self.mat.astype(dtype)

    @property
    def norm(self) -> float:
        return op_norm(self.mat)

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and eigenvector columns."""
        return np.linalg.eigh(self.mat)


def tensor(*mats) -> np.ndarray:
    """Kronecker product of one or more matrices, left factor most significant."""
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        a = np.asarray(m, dtype=complex)
        if out.shape[0] * a.shape[0] > max_dim() or out.shape[1] * a.shape[1] > max_dim():
            raise DimensionError(
                f"tensor product dimension {out.shape[0] * a.shape[0]} exceeds max {max_dim()}"
            )
        out = np.kron(out, a)
    return out


def partial_trace(m, dims: Sequence[int], keep: Sequence[int] | int) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    ``dims`` lists subsystem dimensions with the first factor most significant.
    Kept subsystems come back in their original order.
    """
    a = np.asarray(m, dtype=complex)
    dims = [int(x) for x in dims]
    n = int(np.prod(dims))
    if a.shape != (n, n):
        raise ValueError(f"dims {dims} do not factor a {a.shape} matrix")
    if isinstance(keep, (int, np.integer)):
        keep = [int(keep)]
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {len(dims)} subsystems")
    nsys = len(dims)
    t = a.reshape(dims + dims)
    traced = [i for i in range(nsys) if i not in keep]
    # einsum: contract row and column index of each traced subsystem
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = [letters[i] for i in range(nsys)]
    cols = [letters[nsys + i] for i in range(nsys)]
    for i in traced:
        cols[i] = rows[i]
    out_idx = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out_idx, t)
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(kd, kd)


def permute_subsystems(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator so factor ``order[i]`` lands at slot i."""
    a = np.asarray(m)
    dims = list(dims)
    n = len(dims)
    t = a.reshape(dims + dims)
    perm = list(order) + [n + o for o in order]
    nd = int(np.prod(dims))
    return t.transpose(perm).reshape(nd, nd)


def herm_matrix_function(h, f: Callable[[np.ndarray], np.ndarray], tol: float = PROP_TOL) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix via its eigendecomposition."""
    a = _as_matrix(h)
    if not is_hermitian(a, tol):
        raise ValueError("herm_matrix_function needs a Hermitian input")
    w, v = np.linalg.eigh(0.5 * (a + dagger(a)))
    fw = np.asarray(f(w), dtype=complex)
    return (v * fw) @ dagger(v)


def expm_herm(h, t: float) -> np.ndarray:
    """``exp(-i t h)`` for Hermitian ``h``."""
    return herm_matrix_function(h, lambda w: np.exp(-1j * t * w))


def swap_operator(d: int) -> np.ndarray:
    """SWAP on C^d (x) C^d: |i>|j> -> |j>|i>."""
    if d < 1:
        raise ValueError("d must be positive")
    s = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


def op_norm(m) -> float:
    """Largest singular value."""
    a = np.asarray(m, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def trace_norm(m) -> float:
    """Sum of singular values."""
    a = np.asarray(m, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    from .rng import make_rng

    return make_rng(0 if seed is None else seed)


def random_state(d: int, kind: str = "mixed", seed=None, spectrum: Sequence[float] | None = None) -> DensityMatrix:
    """Random density matrix.

    ``kind`` is ``"pure"`` (Haar vector), ``"mixed"`` (Hilbert-Schmidt
    ensemble) or ``"spectrum"`` (prescribed eigenvalues, Haar eigenbasis).
    """
    if d < 1:
        raise ValueError("d must be positive")
    rng = _rng(seed)
    if kind == "pure":
        z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        z /= np.linalg.norm(z)
        return DensityMatrix(np.outer(z, z.conj()))
    if kind == "mixed":
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        m = g @ dagger(g)
        m /= np.trace(m)
        return DensityMatrix(0.5 * (m + dagger(m)))
    if kind == "spectrum":
        if spectrum is None or len(spectrum) != d:
            raise ValueError("spectrum must list exactly d eigenvalues")
        s = np.asarray(spectrum, dtype=float)
        if np.any(s < 0) or abs(s.sum() - 1.0) > HERM_TOL:
            raise ValueError("spectrum must be nonnegative and sum to 1")
        u = haar_unitary(d, rng)
        m = (u * s) @ dagger(u)
        return DensityMatrix(0.5 * (m + dagger(m)))
    raise ValueError(f"unknown state kind {kind!r}")


def random_hermitian(d: int, seed=None, norm: float | None = None) -> np.ndarray:
    rng = _rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    h = 0.5 * (g + dagger(g))
    if norm is not None:
        h *= norm / op_norm(h)
    return h
