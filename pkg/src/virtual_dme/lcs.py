"""Single-ancilla dilations of superoperator chains and their X readout.

A chain of maps ``A -> U A V^dagger`` is realized by a CPTP channel on
``ancilla (x) register``: the ancilla starts in ``|+>``, every asymmetric map
becomes ``|0><0| (x) U + |1><1| (x) V``, and the ancilla is finally measured
in the X basis.  The (0, 1) block of the output carries half of the chain
applied to the input, so ``tr_anc[(X (x) I) W]`` returns the chain's Hermitian
part.

Partial-SWAP layers never materialize the environment copy of rho.  A layer
whose angle depends on a classical label (the ancilla value, and optionally a
control qubit) acts on the label block ``(a, b)`` of the register by the
closed form ``superop.partial_swap_sandwich(alpha_a, alpha_b, rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import partial_trace
from .series import SeriesSpec, check_density
from .superop import SuperOp, partial_swap_sandwich, superop_kron, unitary_channel

EXPANSION_GUARD = 10**4
PLUS = 0.5 * np.ones((2, 2), dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
P0 = np.diag([1.0, 0.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class DilatedChannel:
    """CPTP channel on ``ancilla (x) register`` (ancilla is the leading qubit)."""

    base: SuperOp

    def __post_init__(self):
        if self.base.dim_in != self.base.dim_out or self.base.dim_in % 2:
            raise ValueError("a dilated channel acts on an even square register")

    @property
    def dim(self) -> int:
        """Register dimension, excluding the ancilla."""
        return self.base.dim_in // 2

    @property
    def cptp(self) -> bool:
        return self.base.is_cptp()

    def then(self, nxt: "DilatedChannel") -> "DilatedChannel":
        """Apply ``self`` first, then ``nxt``."""
        return DilatedChannel(nxt.base.compose(self.base))

    def apply(self, w) -> np.ndarray:
        return self.base.apply(w)


def dilate(phi: SuperOp | None = None, kind: str = "cptp", terms=None, check: bool = True) -> "DilatedChannel | ConvexDilation":
    """Dilation of a CPTP map or of a convex mixture of asymmetric maps.

    ``kind="cptp"``: ``I_anc (x) Phi``.
    ``kind="asymmetric"``: ``terms`` is a list of ``(q, U, V)``; the result is
    the mixture of ``U[|0><0| (x) U + |1><1| (x) V]`` with weights q.
    """
    if kind == "cptp":
        if phi is None:
            raise ValueError("cptp dilation needs a map")
        if check and not phi.is_cptp():
            raise ValueError("map is not certified CPTP")
        return DilatedChannel(superop_kron(SuperOp.identity(2), phi))
    if kind == "asymmetric":
        if not terms:
            raise ValueError("asymmetric dilation needs terms")
        qs = np.array([t[0] for t in terms], dtype=float)
        if np.any(qs < 0) or abs(qs.sum() - 1.0) > 1e-12:
            raise ValueError("term weights must be a probability vector")
        chans = [DilatedChannel(unitary_channel(controlled_pair(u, v))) for _, u, v in terms]
        return ConvexDilation(qs, chans)
    raise ValueError(f"unknown dilation kind {kind!r}")


def controlled_pair(u, v) -> np.ndarray:
    """``|0><0| (x) U + |1><1| (x) V``."""
    return np.kron(P0, np.asarray(u, dtype=complex)) + np.kron(P1, np.asarray(v, dtype=complex))


@dataclass(frozen=True)
class ConvexDilation:
    """Weighted list of dilated channels, sampled rather than expanded."""

    weights: np.ndarray
    channels: list

    def expand(self, guard: int = EXPANSION_GUARD) -> DilatedChannel:
        if len(self.channels) > guard:
            raise RuntimeError(f"{len(self.channels)} terms exceed the expansion guard {guard}")
        acc = np.zeros_like(self.channels[0].base.mat)
        for q, c in zip(self.weights, self.channels):
            acc = acc + q * c.base.mat
        return DilatedChannel(SuperOp.from_matrix(acc))

    def sample(self, rng: np.random.Generator) -> DilatedChannel:
        return self.channels[rng.choice(len(self.channels), p=self.weights)]


def prepare(a) -> np.ndarray:
    """``|+><+| (x) A``."""
    return np.kron(PLUS, np.asarray(a, dtype=complex))


def x_readout(dc: DilatedChannel, a) -> np.ndarray:
    """``tr_anc[(X (x) I) dc(|+><+| (x) A)]``."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (dc.dim, dc.dim):
        raise ValueError(f"operand shape {a.shape} does not match register dim {dc.dim}")
    w = dc.apply(prepare(a))
    return partial_trace(np.kron(PAULI_X, np.eye(dc.dim)) @ w, [2, dc.dim], keep=[1])


def off_diagonal_block(dc: DilatedChannel, a) -> np.ndarray:
    """The (0, 1) ancilla block of ``dc(|+><+| (x) A)``; equals half the chain on A."""
    w = dc.apply(prepare(a))
    d = dc.dim
    return w[:d, d:]


def readout_superop(dc: DilatedChannel) -> SuperOp:
    """The X readout as a superoperator on the register."""
    d = dc.dim
    cols = []
    for j in range(d):
        for i in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            cols.append(x_readout(dc, e).reshape(-1, order="F"))
    return SuperOp(np.array(cols).T, d, d)


# label-blockwise partial-SWAP layers


def blockwise(block_maps, n_labels: int, d: int) -> SuperOp:
    """Superoperator acting on label block ``(a, b)`` of an ``n_labels * d`` register by ``block_maps[a][b]``."""
    n = n_labels * d
    m8 = np.zeros((n_labels, d, n_labels, d, n_labels, d, n_labels, d), dtype=complex)
    for a in range(n_labels):
        for b in range(n_labels):
            k4 = block_maps[a][b].mat.reshape(d, d, d, d)  # [l, k, j, i]
            m8[b, :, a, :, b, :, a, :] = k4
    return SuperOp(m8.reshape(n * n, n * n), n, n)


def swap_layer(angles: Sequence[float], rho, idle_dim: int = 1) -> SuperOp:
    """One partial-SWAP layer whose angle depends on a classical label.

    The register is ``labels (x) system (x) idle``; label ``a`` evolves under
    ``exp(-i angles[a] S)`` with a fresh copy of rho, which is then discarded.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    idle = SuperOp.identity(idle_dim)
    cache: dict = {}

    def k(a, b):
        key = (angles[a], angles[b])
        if key not in cache:
            ks = partial_swap_sandwich(angles[a], angles[b], rho)
            cache[key] = superop_kron(ks, idle) if idle_dim > 1 else ks
        return cache[key]

    n = len(angles)
    maps = [[k(a, b) for b in range(n)] for a in range(n)]
    return blockwise(maps, n, d * idle_dim)


def label_phase(phases: Sequence[float], inner_dim: int) -> SuperOp:
    """Diagonal phase ``exp(i phases[a])`` on label a, identity on the rest."""
    u = np.kron(np.diag(np.exp(1j * np.asarray(phases))), np.eye(inner_dim))
    return unitary_channel(u)


def _layer_angles(left, right, controlled: bool) -> list[float]:
    """Angles for labels ordered ancilla-major: (anc, [control])."""
    if not controlled:
        return [float(left), float(right)]
    # ancilla-major labels: (anc 0, c 0), (anc 0, c 1), (anc 1, c 0), (anc 1, c 1)
    lft = list(left) if np.ndim(left) else [left, left]
    rgt = list(right) if np.ndim(right) else [right, right]
    return [lft[0], lft[1], rgt[0], rgt[1]]


def segment_dilation(
    spec: SeriesSpec,
    rho,
    l: int,
    lp: int,
    controlled: bool = False,
    idle_dim: int = 1,
    control: bool | None = None,
) -> SuperOp:
    """Dilated ``Gamma_{l,l'}`` on ``anc (x) [control (x)] system (x) idle``.

    Layers: one rotation layer and 2l SWAP layers on the ancilla-0 branch,
    then the same with l' on the ancilla-1 branch.  Uses ``2 + 2l + 2l'``
    copies of rho.  ``controlled`` makes the rotation sign follow the control
    qubit; ``control`` (default: same as ``controlled``) only declares that the
    register carries one.
    """
    rho = check_density(rho)
    control = controlled if control is None else control
    if controlled and not control:
        raise ValueError("a controlled segment needs a control qubit")
    s = spec.sign
    half = math.pi / 2
    if controlled:
        th_l = [-s * spec.angles[l], s * spec.angles[l]]
        th_r = [-s * spec.angles[lp], s * spec.angles[lp]]
    else:
        th_l, th_r = s * spec.angles[l], s * spec.angles[lp]
    layers = [_layer_angles(th_l, 0.0, control)]
    layers += [_layer_angles(half, 0.0, control)] * (2 * l)
    layers += [_layer_angles(0.0, th_r, control)]
    layers += [_layer_angles(0.0, half, control)] * (2 * lp)
    return _compose_layers(layers, rho, idle_dim)


def _compose_layers(layers, rho, idle_dim: int) -> SuperOp:
    cache: dict = {}
    out = None
    for ang in layers:
        key = tuple(ang)
        if key not in cache:
            cache[key] = swap_layer(ang, rho, idle_dim)
        out = cache[key] if out is None else cache[key].compose(out)
    return out


def pure_segment_dilation(ps, psi, l: int, lp: int, idle_dim: int = 1, control: bool = False) -> SuperOp:
    """Dilated pure-variant segment: one layer per branch plus an ancilla phase."""
    psi = check_density(psi)
    half = math.pi / 2
    a_l = half if l else ps.sign * ps.theta0
    a_r = half if lp else ps.sign * ps.theta0
    layers = [_layer_angles(a_l, 0.0, control), _layer_angles(0.0, a_r, control)]
    body = _compose_layers(layers, psi, idle_dim)
    inner = psi.shape[0] * idle_dim
    phases = [ps.phi_prime * l, ps.phi_prime * lp]
    if control:
        phases = [phases[0], phases[0], phases[1], phases[1]]
    return label_phase(phases, inner).compose(body)


def chain_dilation(spec: SeriesSpec, rho, indices, controlled: bool = False) -> DilatedChannel:
    """Dilation of a full sampled chain, first index pair applied first."""
    it = iter(indices)
    out = None
    for l, lp in zip(it, it):
        seg = segment_dilation(spec, rho, int(l), int(lp), controlled)
        out = seg if out is None else seg.compose(out)
    return DilatedChannel(out)


def pure_chain_dilation(ps, psi, indices) -> DilatedChannel:
    it = iter(indices)
    out = None
    for l, lp in zip(it, it):
        seg = pure_segment_dilation(ps, psi, int(l), int(lp))
        out = seg if out is None else seg.compose(out)
    return DilatedChannel(out)


def symmetrized_dilation(make, indices) -> ConvexDilation:
    """Equal mixture of a chain and its branch-swapped twin, whose readout is the chain itself when HP."""
    idx = list(indices)
    swapped = [idx[i ^ 1] for i in range(len(idx))]
    return ConvexDilation(np.array([0.5, 0.5]), [make(idx), make(swapped)])

