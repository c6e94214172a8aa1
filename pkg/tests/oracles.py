"""Independent reference implementations used by the tests."""

import math

import numpy as np

from virtual_dme.linalg import partial_trace, swap_operator


def expm_taylor(a, squarings=12, terms=30):
    """Scaled-and-squared Taylor exponential of a general matrix."""
    a = np.asarray(a, dtype=complex) / 2**squarings
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def evolve_unitary(rho, t):
    return expm_taylor(-1j * t * np.asarray(rho, dtype=complex))


def partial_taylor(rho, x, order):
    """``sum_{q=0}^{order} (-i x rho)^q / q!``."""
    rho = np.asarray(rho, dtype=complex)
    out = np.zeros_like(rho)
    term = np.eye(rho.shape[0], dtype=complex)
    for q in range(order + 1):
        out = out + term
        term = term @ (-1j * x * rho) / (q + 1)
    return out


def swap_environment_map(alpha, beta, rho, b):
    """``tr_E[exp(-i alpha S)(B (x) rho) exp(i beta S)]`` with the environment materialized."""
    d = rho.shape[0]
    s = swap_operator(d)
    ua = expm_taylor(-1j * alpha * s)
    ub = expm_taylor(-1j * beta * s)
    w = ua @ np.kron(b, rho) @ ub.conj().T
    return partial_trace(w, [d, d], keep=[0])


def labelled_swap_layer(angles, rho, w):
    """Layer with a label register, a system and a fresh environment copy.

    ``U = sum_a |a><a| (x) exp(-i angles[a] S)`` acts on ``labels (x) sys (x) env``,
    then the environment is traced out.
    """
    d = rho.shape[0]
    n = len(angles)
    s = swap_operator(d)
    u = sum(np.kron(np.diag(np.eye(n)[a]), expm_taylor(-1j * angles[a] * s)) for a in range(n))
    big = u @ np.kron(w, rho) @ u.conj().T
    return partial_trace(big, [n, d, d], keep=[0, 1])


def lambert_newton(c, w=1.0, iters=200):
    for _ in range(iters):
        w = w - (w * math.exp(w) - c) / (math.exp(w) * (w + 1))
    return w


def choi_by_definition(apply, d_in):
    """``sum_ij apply(|i><j|) (x) |i><j|``."""
    blocks = []
    for i in range(d_in):
        for j in range(d_in):
            e = np.zeros((d_in, d_in), dtype=complex)
            e[i, j] = 1
            blocks.append(np.kron(apply(e), e))
    return sum(blocks)


def matrix_units(d):
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1
            yield e
