"""Virtual DME samplers, their exact mean maps and the partial-SWAP baseline.

One draw of the general sampler picks indices ``(l_1, l_1', ..., l_r, l_r')``
i.i.d. from ``p_l`` and realizes the chain of maps
``A -> F_l A F_{l'}^dagger`` with ``F_l = (-i rho)^{2l}(cos t_l - i s sin t_l rho)``.
The weighted mean of all chains times ``C^{2r}`` equals
``A -> S_L^r A (S_L^r)^dagger``.

What a single physical circuit reports through its ancilla X readout is the
Hermitian part of the chain, which is what ``DmeSample.effective_map`` holds.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .linalg import dagger, expm_herm, op_norm, vec
from .rng import make_rng
from .series import SeriesSpec, check_density, segment_factors, truncated_series_matrix
from .superop import (
    SuperOp,
    diamond_bounds,
    hermitian_part,
    partial_swap_sandwich,
    sandwich,
    unitary_channel,
    unitary_channel_bound,
)

log = logging.getLogger(__name__)

ENUMERATION_GUARD = 10**6


class EnumerationGuardError(RuntimeError):
    """Raised when exhaustive enumeration would exceed the term guard."""


@dataclass(frozen=True)
class IndexSequence:
    """One sampled index tuple ``(l_1, l_1', ..., l_r, l_r')``."""

    indices: tuple[int, ...]
    prob: float
    copies: int

    @property
    def pairs(self) -> list[tuple[int, int]]:
        it = iter(self.indices)
        return list(zip(it, it))


@dataclass(frozen=True)
class DmeSample:
    """One draw: its indices, the map read out by the circuit and the rescaling."""

    seq: IndexSequence
    effective_map: SuperOp
    sign_weight: float
    raw_map: SuperOp | None = None


def default_general_r(T: float) -> int:
    """``max(1, ceil(2 T^2))``, lifted to at least ``|T|``."""
    return max(1, math.ceil(2.0 * T * T), math.ceil(abs(T)))


def default_pure_r(T: float) -> int:
    """``2 max(2, ceil(2 T^2))``."""
    return 2 * max(2, math.ceil(2.0 * T * T))


def sequence_copies(indices) -> int:
    """Copies of rho used by a draw: one per partial-SWAP layer."""
    idx = np.asarray(indices)
    return int(idx.size + 2 * idx.sum())


def _sequence(indices, probs) -> IndexSequence:
    idx = tuple(int(i) for i in indices)
    prob = float(np.prod([probs[i] for i in idx]))
    return IndexSequence(idx, prob, sequence_copies(idx))


def sample_indices(probs, r: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """I.i.d. draws of ``2r`` indices from ``probs``; shape ``(2r,)`` or ``(size, 2r)``."""
    probs = np.asarray(probs, dtype=float)
    shape = (2 * r,) if size is None else (size, 2 * r)
    return rng.choice(len(probs), size=shape, p=probs)


def _chain(left: list[np.ndarray], pairs) -> tuple[np.ndarray, np.ndarray]:
    """Left and right products of a pair sequence; first pair applied first."""
    d = left[0].shape[0]
    lt = np.eye(d, dtype=complex)
    rt = np.eye(d, dtype=complex)
    for l, lp in pairs:
        lt = left[l] @ lt
        rt = rt @ dagger(left[lp])
    return lt, rt


def segment_map(spec: SeriesSpec, rho, l: int, lp: int) -> SuperOp:
    """``Gamma_{l,l'}``: ``A -> F_l A F_{l'}^dagger``."""
    f = segment_factors(spec, check_density(rho))
    return sandwich(f[l], dagger(f[lp]))


def chain_map(spec: SeriesSpec, rho, indices) -> SuperOp:
    """Composition of the segment maps for one index tuple."""
    f = segment_factors(spec, check_density(rho))
    it = iter(indices)
    lt, rt = _chain(f, list(zip(it, it)))
    return sandwich(lt, rt)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return make_rng(seed)


def sample_general(spec: SeriesSpec, rho, seed, indices=None) -> DmeSample:
    """Draw one general virtual-DME map (``indices`` forces the draw)."""
    rho = check_density(rho)
    if indices is None:
        indices = sample_indices(spec.probs, spec.r, _as_rng(seed))
    seq = _sequence(indices, spec.probs)
    raw = chain_map(spec, rho, seq.indices)
    return DmeSample(seq, hermitian_part(raw), spec.overhead, raw)


def direct_mean_general(spec: SeriesSpec, rho) -> SuperOp:
    """``A -> S_L^r A (S_L^r)^dagger / C^{2r}``."""
    s = np.linalg.matrix_power(truncated_series_matrix(spec, check_density(rho)), spec.r)
    return sandwich(s, dagger(s)) * (1.0 / spec.overhead)


def enumerate_mean_general(spec: SeriesSpec, rho, guard: int = ENUMERATION_GUARD) -> SuperOp:
    """Probability-weighted sum of every chain map."""
    rho = check_density(rho)
    n_terms = (spec.L + 1) ** (2 * spec.r)
    if n_terms > guard:
        raise EnumerationGuardError(f"{n_terms} terms exceed the enumeration guard {guard}")
    f = segment_factors(spec, rho)
    d = rho.shape[0]
    acc = np.zeros((d * d, d * d), dtype=complex)
    for idx in itertools.product(range(spec.L + 1), repeat=2 * spec.r):
        w = float(np.prod(spec.probs[list(idx)]))
        it = iter(idx)
        lt, rt = _chain(f, list(zip(it, it)))
        acc += w * np.kron(rt.T, lt)
    return SuperOp(acc, d, d)


def exact_mean_general(spec: SeriesSpec, rho, route: str = "direct") -> SuperOp:
    """Exact ``E[Phi_hat]`` (not rescaled).

    ``route`` is ``"direct"``, ``"enumerate"`` or ``"auto"`` (enumerate when
    within the guard, else fall back to the direct route with a log warning).
    """
    if route == "direct":
        return direct_mean_general(spec, rho)
    if route == "enumerate":
        return enumerate_mean_general(spec, rho)
    if route == "auto":
        try:
            return enumerate_mean_general(spec, rho)
        except EnumerationGuardError:
            log.warning("enumeration guard exceeded; using the direct route")
            return direct_mean_general(spec, rho)
    raise ValueError(f"unknown route {route!r}")


def target_channel(rho, T: float) -> SuperOp:
    """``A -> exp(-i rho T) A exp(i rho T)``."""
    return unitary_channel(expm_herm(check_density(rho), T))


def series_power_error(spec: SeriesSpec, rho) -> float:
    """``||exp(-i rho T) - S_L^r||`` evaluated on the given state."""
    rho = check_density(rho)
    s = np.linalg.matrix_power(truncated_series_matrix(spec, rho), spec.r)
    return op_norm(expm_herm(rho, spec.T) - s)


def series_tail_bound(spec: SeriesSpec) -> float:
    """State-independent bound on ``||S_L - exp(-i rho T/r)||``: the Taylor tail at ``|T|/r``."""
    ax = abs(spec.x)
    q0 = 2 * spec.L + 2
    term = math.exp(q0 * math.log(ax) - math.lgamma(q0 + 1)) if ax > 0 else 0.0
    total, q = 0.0, q0
    while term > 1e-300 and term > 1e-18 * total:
        total += term
        q += 1
        term *= ax / q
    return total


def general_slot_bound(spec: SeriesSpec, rho=None) -> float:
    """Diamond-norm bound for ``C^{2r} E[Phi_hat]`` vs the target channel.

    From ``delta = ||S_L^r - exp(-i rho T)||`` the sandwich inequality gives
    ``2 delta + delta^2``.  Without ``rho``, ``delta`` is bounded by
    ``(1 + tail)^r - 1``.
    """
    if rho is None:
        delta = math.expm1(spec.r * math.log1p(series_tail_bound(spec)))
    else:
        delta = series_power_error(spec, rho)
    return unitary_channel_bound(delta)


# pure-state variant


@dataclass(frozen=True)
class PureSpec:
    """Two-branch decomposition of ``exp(-i x psi)`` for a pure ``psi``, ``x = T/r``."""

    T: float
    r: int
    C_pure: float
    p0: float
    p1: float
    phi: float
    T_input: float | None = None

    @property
    def x(self) -> float:
        return self.T / self.r

    @property
    def sign(self) -> float:
        return 1.0 if self.T > 0 else -1.0

    @property
    def theta0(self) -> float:
        return math.atan(abs(self.x))

    @property
    def phi_prime(self) -> float:
        return self.phi + math.pi / 2

    @property
    def probs(self) -> np.ndarray:
        return np.array([self.p0, self.p1])

    @property
    def overhead(self) -> float:
        return self.C_pure ** (2 * self.r)

    @property
    def overhead_cap(self) -> float:
        return math.exp(2.0 * self.T**2 / self.r)


def reduce_period(T: float) -> float:
    """Map T to the same-sign time in ``(0, 2 pi]`` magnitude with equal ``exp(-i psi T)``."""
    if T == 0.0 or not np.isfinite(T):
        raise ValueError("T must be finite and nonzero")
    a = abs(T)
    if a <= 2 * math.pi:
        return T
    red = math.fmod(a, 2 * math.pi)
    if red == 0.0:
        red = 2 * math.pi
    return math.copysign(red, T)


def build_pure(T: float, r: int | None = None) -> PureSpec:
    """Pure-state spec; ``|T| > 2 pi`` is reduced by whole periods."""
    T_in = float(T)
    T = reduce_period(T_in)
    if r is None:
        r = default_pure_r(T)
    r = int(r)
    if r < 1:
        raise ValueError("r must be positive")
    x = T / r
    head = math.sqrt(1.0 + x * x)
    rem = complex(math.cos(x) - 1.0, -(math.sin(x) - x))  # exp(-ix) - (1 - ix)
    tail = abs(rem)
    c = head + tail
    phi = math.atan2(rem.imag, rem.real) if tail > 0 else 0.0
    return PureSpec(T, r, c, head / c, tail / c, phi, T_in)


def _check_pure(psi) -> np.ndarray:
    m = check_density(psi)
    pur = float(np.real(np.trace(m @ m)))
    if abs(pur - 1.0) > 1e-10:
        raise ValueError(f"input is not pure (purity {pur})")
    return m


def pure_factors(ps: PureSpec, psi) -> list[np.ndarray]:
    """Branch factors: ``cos t0 - i s sin t0 psi`` and ``exp(i phi') (-i psi)``."""
    psi = np.asarray(psi, dtype=complex)
    eye = np.eye(psi.shape[0])
    f0 = math.cos(ps.theta0) * eye - 1j * ps.sign * math.sin(ps.theta0) * psi
    f1 = np.exp(1j * ps.phi_prime) * (-1j) * psi
    return [f0, f1]


def sample_pure(ps: PureSpec, psi, seed, indices=None) -> DmeSample:
    psi = _check_pure(psi)
    if indices is None:
        indices = sample_indices(ps.probs, ps.r, _as_rng(seed))
    seq = _sequence(indices, ps.probs)
    f = pure_factors(ps, psi)
    lt, rt = _chain(f, seq.pairs)
    raw = sandwich(lt, rt)
    return DmeSample(seq, hermitian_part(raw), ps.overhead, raw)


def exact_mean_pure(ps: PureSpec, psi) -> SuperOp:
    """``E[Phi_hat_pure]``; times ``C_pure^{2r}`` it equals the target exactly."""
    psi = _check_pure(psi)
    f = pure_factors(ps, psi)
    seg = ps.p0 * f[0] + ps.p1 * f[1]
    s = np.linalg.matrix_power(seg, ps.r)
    return sandwich(s, dagger(s))


# controlled variant


def controlled_factors(spec: SeriesSpec, rho) -> list[np.ndarray]:
    """Block-diagonal factors on control (x) system; block j carries time sign ``2j - 1``."""
    rho = check_density(rho)
    neg = segment_factors(spec, rho, sign=-spec.sign)
    pos = segment_factors(spec, rho, sign=spec.sign)
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    return [np.kron(p0, a) + np.kron(p1, b) for a, b in zip(neg, pos)]


def controlled_series_matrix(spec: SeriesSpec, rho) -> np.ndarray:
    """``|0><0| (x) S_L(-T/r) + |1><1| (x) S_L(T/r)``."""
    rho = check_density(rho)
    neg = truncated_series_matrix(spec.with_time(-spec.T), rho)
    pos = truncated_series_matrix(spec, rho)
    return np.kron(np.diag([1.0, 0.0]), neg) + np.kron(np.diag([0.0, 1.0]), pos)


def sample_controlled(spec: SeriesSpec, rho, seed, indices=None) -> DmeSample:
    rho = check_density(rho)
    if indices is None:
        indices = sample_indices(spec.probs, spec.r, _as_rng(seed))
    seq = _sequence(indices, spec.probs)
    lt, rt = _chain(controlled_factors(spec, rho), seq.pairs)
    raw = sandwich(lt, rt)
    return DmeSample(seq, hermitian_part(raw), spec.overhead, raw)


def exact_mean_controlled(spec: SeriesSpec, rho) -> SuperOp:
    """``cS_L^r . (cS_L^r)^dagger / C^{2r}`` on control (x) system."""
    s = np.linalg.matrix_power(controlled_series_matrix(spec, rho), spec.r)
    return sandwich(s, dagger(s)) * (1.0 / spec.overhead)


def controlled_target(rho, T: float) -> np.ndarray:
    """``|0><0| (x) exp(i rho T) + |1><1| (x) exp(-i rho T)``."""
    rho = check_density(rho)
    return np.kron(np.diag([1.0, 0.0]), expm_herm(rho, -T)) + np.kron(
        np.diag([0.0, 1.0]), expm_herm(rho, T)
    )


def controlled_slot_bound(spec: SeriesSpec, rho=None) -> float:
    """Diamond bound for the controlled mean, from the block operator-norm error."""
    if rho is None:
        return general_slot_bound(spec)
    rho = check_density(rho)
    s = np.linalg.matrix_power(controlled_series_matrix(spec, rho), spec.r)
    return unitary_channel_bound(op_norm(controlled_target(rho, spec.T) - s))


# partial-SWAP baseline


LMR_DIRECT_MAX = 1024


def _swap_step_deviation(delta: float, rho: np.ndarray) -> np.ndarray:
    """``K - I`` for the partial-SWAP step ``K``, without forming ``I + small``.

    ``K(B) - B = sin^2(delta)(tr(B) rho - B) - i sin(delta) cos(delta)[rho, B]``.
    """
    d = rho.shape[0]
    eye = np.eye(d)
    s, c = math.sin(delta), math.cos(delta)
    trace_swap = np.outer(vec(rho), vec(eye).conj()) - np.eye(d * d)
    comm = np.kron(eye, rho) - np.kron(rho.T, eye)
    return s * s * trace_swap - 1j * s * c * comm


def lmr_channel(rho, T: float, N: int) -> SuperOp:
    """``N`` repetitions of the partial-SWAP channel with angle ``T/N``.

    For large N the power is taken as ``expm(N log(I + D))`` with the log
    series summed in D, which keeps the result accurate to roundoff instead
    of accumulating ``N`` rounding errors.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    rho = check_density(rho)
    if T == 0:
        return SuperOp.identity(rho.shape[0])
    if N <= LMR_DIRECT_MAX:
        return partial_swap_sandwich(T / N, T / N, rho).power(N)
    dev = _swap_step_deviation(T / N, rho)
    gen = np.zeros_like(dev)
    term = np.eye(dev.shape[0], dtype=complex)
    for j in range(1, 60):
        term = term @ dev
        gen += (-1) ** (j + 1) * term / j
        if np.max(np.abs(term)) / j < 1e-18 * max(1.0, np.max(np.abs(gen))):
            break
    d = rho.shape[0]
    return SuperOp(expm(N * gen), d, d)


def lmr_error(rho, T: float, N: int) -> float:
    """Choi upper bound on the diamond distance to the target channel."""
    return diamond_bounds(lmr_channel(rho, T, N), target_channel(rho, T))[1]


@dataclass(frozen=True)
class LmrCount:
    measured: int
    analytic: int


def lmr_copy_count(T: float, eps: float, rho=None, n_max: int = 2**40) -> LmrCount:
    """Smallest N whose measured error is at most eps, plus ``ceil(T^2/eps)``.

    Without ``rho`` only the analytic value is meaningful; ``measured`` then
    equals it.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    analytic = max(1, math.ceil(T * T / eps))
    if T == 0:
        return LmrCount(1, 1)
    if rho is None:
        return LmrCount(analytic, analytic)
    rho = check_density(rho)
    target = target_channel(rho, T)

    def ok(n: int) -> bool:
        return diamond_bounds(lmr_channel(rho, T, n), target)[1] <= eps

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > n_max:
            raise RuntimeError(f"no N <= {n_max} reaches eps={eps}")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return LmrCount(hi, analytic)
