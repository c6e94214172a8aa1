"""Superoperators on column-stacked operators, Choi matrices and error metrics.

A ``SuperOp`` holds the d_out^2 x d_in^2 matrix ``M`` with
``vec(Phi(A)) = M vec(A)``.  The Choi matrix is ``(Phi (x) id)(|Omega><Omega|)``
with the unnormalized ``|Omega> = sum_i |i>|i>``, output factor first.

Exact diamond norms are not computed.  ``diamond_bounds`` returns the Choi
sandwich ``||J||_1 / d <= ||.||_diamond <= ||J||_1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import PROP_TOL, dagger, op_norm, partial_trace, trace_norm, unvec, vec


@dataclass(frozen=True, eq=False)
class SuperOp:
    """Linear map on operators, stored on column-stacked vectors."""

    mat: np.ndarray
    dim_in: int
    dim_out: int
    _hp: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        m = np.asarray(self.mat, dtype=complex)
        if m.shape != (self.dim_out**2, self.dim_in**2):
            raise ValueError(
                f"superoperator matrix {m.shape} does not match dims {self.dim_in}->{self.dim_out}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @classmethod
    def from_matrix(cls, m) -> "SuperOp":
        m = np.asarray(m, dtype=complex)
        dout = int(round(np.sqrt(m.shape[0])))
        din = int(round(np.sqrt(m.shape[1])))
        return cls(m, din, dout)

    @classmethod
    def identity(cls, d: int) -> "SuperOp":
        return cls(np.eye(d * d, dtype=complex), d, d)

    def apply(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=complex)
        if a.shape != (self.dim_in, self.dim_in):
            raise ValueError(f"operand shape {a.shape} does not match dim_in {self.dim_in}")
        return unvec(self.mat @ vec(a), self.dim_out)

    __call__ = apply

    def compose(self, first: "SuperOp") -> "SuperOp":
        """``self o first``: apply ``first``, then ``self``."""
        if first.dim_out != self.dim_in:
            raise ValueError("dimension mismatch in composition")
        return SuperOp(self.mat @ first.mat, first.dim_in, self.dim_out)

    def __matmul__(self, other: "SuperOp") -> "SuperOp":
        return self.compose(other)

    def _check_same(self, other: "SuperOp"):
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out):
            raise ValueError("superoperator dimension mismatch")

    def __add__(self, other: "SuperOp") -> "SuperOp":
        self._check_same(other)
        return SuperOp(self.mat + other.mat, self.dim_in, self.dim_out)

    def __sub__(self, other: "SuperOp") -> "SuperOp":
        self._check_same(other)
        return SuperOp(self.mat - other.mat, self.dim_in, self.dim_out)

    def __mul__(self, c) -> "SuperOp":
        return SuperOp(complex(c) * self.mat, self.dim_in, self.dim_out)

    __rmul__ = __mul__

    def power(self, n: int) -> "SuperOp":
        if self.dim_in != self.dim_out:
            raise ValueError("power needs a square map")
        return SuperOp(np.linalg.matrix_power(self.mat, n), self.dim_in, self.dim_out)

    def choi(self) -> "ChoiMatrix":
        return choi(self)

    @property
    def hp(self) -> bool:
        """Hermiticity preservation, certified from Choi Hermiticity (cached)."""
        if not self._hp:
            j = self.choi().mat
            self._hp.append(bool(np.max(np.abs(j - dagger(j)), initial=0.0) <= PROP_TOL))
        return self._hp[0]

    def is_cp(self, tol: float = PROP_TOL) -> bool:
        j = self.choi().mat
        if np.max(np.abs(j - dagger(j)), initial=0.0) > tol:
            return False
        return np.linalg.eigvalsh(0.5 * (j + dagger(j))).min() >= -tol

    def is_trace_preserving(self, tol: float = PROP_TOL) -> bool:
        j = self.choi().mat
        red = partial_trace(j, [self.dim_out, self.dim_in], keep=[1])
        return np.max(np.abs(red - np.eye(self.dim_in))) <= tol

    def is_cptp(self, tol: float = PROP_TOL) -> bool:
        return self.is_cp(tol) and self.is_trace_preserving(tol)


@dataclass(frozen=True)
class ChoiMatrix:
    """``(Phi (x) id)(|Omega><Omega|)``, output factor first."""

    mat: np.ndarray
    dim_in: int
    dim_out: int

    @property
    def dim(self) -> int:
        return self.dim_in

    def is_hermitian(self, tol: float = PROP_TOL) -> bool:
        return bool(np.max(np.abs(self.mat - dagger(self.mat)), initial=0.0) <= tol)

    def is_psd(self, tol: float = PROP_TOL) -> bool:
        return self.is_hermitian(tol) and np.linalg.eigvalsh(
            0.5 * (self.mat + dagger(self.mat))
        ).min() >= -tol

    def to_superop(self) -> SuperOp:
        dout, din = self.dim_out, self.dim_in
        t = np.asarray(self.mat).reshape(dout, din, dout, din)
        m = t.transpose(2, 0, 3, 1).reshape(dout * dout, din * din)
        return SuperOp(m, din, dout)


def choi(s: SuperOp) -> ChoiMatrix:
    """Choi matrix, ``J[(k,i),(l,j)] = Phi(|i><j|)[k,l]``."""
    dout, din = s.dim_out, s.dim_in
    # mat[l*dout + k, j*din + i] = Phi(|i><j|)[k, l]
    t = s.mat.reshape(dout, dout, din, din)
    j = t.transpose(1, 3, 0, 2).reshape(dout * din, dout * din)
    return ChoiMatrix(j, din, dout)


def sandwich(left, right) -> SuperOp:
    """``A -> left @ A @ right``."""
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    if left.shape[1] != right.shape[0]:
        raise ValueError("left and right factors act on different dimensions")
    return SuperOp(np.kron(right.T, left), left.shape[1], left.shape[0])


def _check_unitary(u: np.ndarray, what: str = "U"):
    if u.shape[0] != u.shape[1] or np.max(np.abs(u @ dagger(u) - np.eye(u.shape[0]))) > PROP_TOL:
        raise ValueError(f"{what} is not unitary within {PROP_TOL}")


def unitary_channel(u) -> SuperOp:
    """``A -> U A U^dagger``."""
    u = np.asarray(u, dtype=complex)
    _check_unitary(u)
    return sandwich(u, dagger(u))


def asymmetric_map(u, v) -> SuperOp:
    """``A -> U A V^dagger``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError("U and V must have the same shape")
    return sandwich(u, dagger(v))


def left_factor(delta: float, rho, sign: float = 1.0) -> np.ndarray:
    """``cos(delta) I - i sign sin(delta) rho``."""
    rho = np.asarray(rho, dtype=complex)
    return np.cos(delta) * np.eye(rho.shape[0]) - 1j * sign * np.sin(delta) * rho


def upsilon(delta: float, k: int, rho, side: str = "left") -> SuperOp:
    """One-sided partial-SWAP map with the environment copy traced out.

    ``left``: ``A -> (cos d I - i sin d rho)^k A``.
    ``right``: ``A -> A (cos d I + i sin d rho)^k``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    f = np.linalg.matrix_power(left_factor(delta, rho), k)
    if side == "left":
        return sandwich(f, np.eye(d))
    if side == "right":
        return sandwich(np.eye(d), dagger(f))
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def partial_swap_sandwich(alpha: float, beta: float, rho) -> SuperOp:
    """``B -> tr_E[exp(-i alpha S)(B (x) rho) exp(i beta S)]`` in closed form.

    Equals ``ca cb B + sa sb tr(B) rho - i sa cb rho B + i ca sb B rho``.
    The partial-SWAP channel of the standard protocol is the case alpha = beta.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    eye = np.eye(d)
    ca, sa, cb, sb = np.cos(alpha), np.sin(alpha), np.cos(beta), np.sin(beta)
    m = ca * cb * np.eye(d * d, dtype=complex)
    m += sa * sb * np.outer(vec(rho), vec(eye).conj())
    m += -1j * sa * cb * np.kron(eye, rho)
    m += 1j * ca * sb * np.kron(rho.T, eye)
    return SuperOp(m, d, d)


def superop_kron(a: SuperOp, b: SuperOp) -> SuperOp:
    """Map ``X (x) Y -> a(X) (x) b(Y)`` on the composite register (a's factor first)."""
    a4 = a.mat.reshape(a.dim_out, a.dim_out, a.dim_in, a.dim_in)
    b4 = b.mat.reshape(b.dim_out, b.dim_out, b.dim_in, b.dim_in)
    t = np.einsum("lkji,LKJI->lLkKjJiI", a4, b4)
    dout, din = a.dim_out * b.dim_out, a.dim_in * b.dim_in
    return SuperOp(t.reshape(dout * dout, din * din), din, dout)


def diamond_bounds(a: SuperOp, b: SuperOp) -> tuple[float, float]:
    """Choi sandwich ``(||J(a-b)||_1 / d, ||J(a-b)||_1)`` around the diamond distance."""
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out):
        raise ValueError("superoperator dimension mismatch")
    tn = trace_norm(choi(a - b).mat)
    return tn / a.dim_in, tn


def unitary_error(u_target, m_approx) -> float:
    """Operator-norm distance between two matrices."""
    u_target = np.asarray(u_target)
    m_approx = np.asarray(m_approx)
    if u_target.shape != m_approx.shape:
        raise ValueError("shape mismatch")
    return op_norm(u_target - m_approx)


def unitary_channel_bound(delta_op: float) -> float:
    """Diamond bound for ``M.M^dagger`` vs ``U.U^dagger`` when ``||M - U|| <= delta_op``.

    ``||M A M^+ - U A U^+||_1 <= (2 delta + delta^2) ||A||_1`` for unitary U.
    """
    return delta_op * (2.0 + delta_op)


def compose_all(maps: Sequence[SuperOp]) -> SuperOp:
    """Compose a sequence, first element applied first."""
    it = iter(maps)
    out = next(it)
    for m in it:
        out = m.compose(out)
    return out


def _transpose_perm(d: int) -> np.ndarray:
    """Index permutation p with ``vec(A.T) = vec(A)[p]``."""
    idx = np.arange(d * d).reshape(d, d, order="F")
    return vec(idx.T)


def conjugate_map(s: SuperOp) -> SuperOp:
    """The map ``A -> Phi(A^dagger)^dagger``; equals Phi iff Phi is Hermiticity-preserving."""
    pin = _transpose_perm(s.dim_in)
    pout = _transpose_perm(s.dim_out)
    m = np.conj(s.mat)[np.ix_(pout, pin)]
    return SuperOp(m, s.dim_in, s.dim_out)


def hermitian_part(s: SuperOp) -> SuperOp:
    """``A -> (Phi(A) + Phi(A^dagger)^dagger) / 2``, always Hermiticity-preserving."""
    return (s + conjugate_map(s)) * 0.5
